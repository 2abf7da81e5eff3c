#include "advtext/kernels.hpp"

#include <exception>

#include "advtext/advtrain.hpp"

#ifdef ADVTEXT_HAVE_OPENMP
#include <omp.h>
#endif

namespace advtext {

namespace {

struct SampleResult {
  Gradients grads;
  double clean_loss = 0.0;
  double adv_loss = 0.0;
  bool adv_ran = false;
};

SampleResult sample_gradients(const ModelParams& params, const std::vector<int>& ids, Label label,
                              bool adversarial, double epsilon) {
  SampleResult r;
  const ForwardTrace trace = forward(params, ids);
  r.clean_loss = bce_loss(trace.prob, label);
  r.grads = backward(params, trace, label);

  if (adversarial && epsilon >= kZeroGradientNorm) {
    // g = grad of log p = -(grad of loss); same norm either way
    const double norm = r.grads.wrt_embedded.frobenius_norm();
    if (norm >= kZeroGradientNorm) {
      Matrix g = r.grads.wrt_embedded;
      for (double& v : g.data()) v = -v;
      const AdversarialResult adv = adversarial_loss(params, ids, label,
                                                     adversarial_perturbation(g, epsilon));
      r.adv_loss = adv.loss;
      r.adv_ran = true;

      auto add = [](Matrix& dst, const Matrix& src) {
        for (std::size_t i = 0; i < dst.size(); ++i) dst.data()[i] += src.data()[i];
      };
      add(r.grads.embedding, adv.grads.embedding);
      add(r.grads.wq, adv.grads.wq);
      add(r.grads.wk, adv.grads.wk);
      add(r.grads.wv, adv.grads.wv);
      add(r.grads.wo, adv.grads.wo);
      for (std::size_t i = 0; i < r.grads.classifier_weight.size(); ++i) {
        r.grads.classifier_weight[i] += adv.grads.classifier_weight[i];
      }
      r.grads.classifier_bias += adv.grads.classifier_bias;
    }
  }
  return r;
}

Gradients zero_gradients(const ModelParams& params) {
  Gradients g;
  g.embedding = Matrix(params.hyper.vocab_size, params.hyper.dim);
  g.wq = Matrix(params.hyper.dim, params.hyper.dim);
  g.wk = Matrix(params.hyper.dim, params.hyper.dim);
  g.wv = Matrix(params.hyper.dim, params.hyper.dim);
  g.wo = Matrix(params.hyper.dim, params.hyper.dim);
  g.classifier_weight.assign(static_cast<std::size_t>(params.hyper.dim), 0.0);
  g.wrt_embedded = Matrix(params.hyper.max_len, params.hyper.dim);
  return g;
}

}  // namespace

Gradients batch_gradients(const ModelParams& params, const EncodedBatch& batch, bool adversarial,
                          double epsilon, ExecPolicy policy, BatchStats* stats) {
  if (batch.size() == 0 || batch.ids.size() != batch.labels.size()) {
    throw Error(errc::length_mismatch, "batch ids and labels must be non-empty and aligned");
  }

  const std::size_t n = batch.size();
  std::vector<SampleResult> slots(n);

  if (policy == ExecPolicy::Serial) {
    for (std::size_t i = 0; i < n; ++i) {
      slots[i] = sample_gradients(params, batch.ids[i], batch.labels[i], adversarial, epsilon);
    }
  } else {
    std::exception_ptr failure;
#ifdef ADVTEXT_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long i = 0; i < static_cast<long>(n); ++i) {
      try {
        slots[i] = sample_gradients(params, batch.ids[i], batch.labels[i], adversarial, epsilon);
      } catch (...) {
        // exceptions must not escape the parallel region
#ifdef ADVTEXT_HAVE_OPENMP
#pragma omp critical
#endif
        {
          if (!failure) failure = std::current_exception();
        }
      }
    }
    if (failure) std::rethrow_exception(failure);
  }

  // fixed-order reduction keeps results independent of thread count
  Gradients total = zero_gradients(params);
  BatchStats agg;
  for (std::size_t i = 0; i < n; ++i) {
    const SampleResult& s = slots[i];
    auto add = [](Matrix& dst, const Matrix& src) {
      for (std::size_t k = 0; k < dst.size(); ++k) dst.data()[k] += src.data()[k];
    };
    add(total.embedding, s.grads.embedding);
    add(total.wq, s.grads.wq);
    add(total.wk, s.grads.wk);
    add(total.wv, s.grads.wv);
    add(total.wo, s.grads.wo);
    for (std::size_t k = 0; k < total.classifier_weight.size(); ++k) {
      total.classifier_weight[k] += s.grads.classifier_weight[k];
    }
    total.classifier_bias += s.grads.classifier_bias;
    agg.clean_loss += s.clean_loss;
    if (s.adv_ran) {
      agg.adv_loss += s.adv_loss;
      agg.adv_samples += 1;
    }
  }

  const double inv = 1.0 / static_cast<double>(n);
  for (double& v : total.embedding.data()) v *= inv;
  for (double& v : total.wq.data()) v *= inv;
  for (double& v : total.wk.data()) v *= inv;
  for (double& v : total.wv.data()) v *= inv;
  for (double& v : total.wo.data()) v *= inv;
  for (double& v : total.classifier_weight) v *= inv;
  total.classifier_bias *= inv;

  if (stats != nullptr) {
    agg.clean_loss *= inv;
    if (agg.adv_samples > 0) agg.adv_loss /= agg.adv_samples;
    *stats = agg;
  }
  return total;
}

std::vector<double> predict_probs(const ModelParams& params,
                                  const std::vector<std::vector<int>>& ids, ExecPolicy policy) {
  std::vector<double> probs(ids.size(), 0.0);
  if (policy == ExecPolicy::Serial) {
    for (std::size_t i = 0; i < ids.size(); ++i) probs[i] = forward(params, ids[i]).prob;
  } else {
    std::exception_ptr failure;
#ifdef ADVTEXT_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long i = 0; i < static_cast<long>(ids.size()); ++i) {
      try {
        probs[i] = forward(params, ids[i]).prob;
      } catch (...) {
#ifdef ADVTEXT_HAVE_OPENMP
#pragma omp critical
#endif
        {
          if (!failure) failure = std::current_exception();
        }
      }
    }
    if (failure) std::rethrow_exception(failure);
  }
  return probs;
}

}  // namespace advtext
