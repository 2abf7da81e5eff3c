#include "advtext/advtrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "advtext/evalkit.hpp"
#include "advtext/rng.hpp"

namespace advtext {

Perturbation adversarial_perturbation(const Matrix& g, double epsilon) {
  if (epsilon < 0.0 || !std::isfinite(epsilon)) {
    throw Error(errc::bad_config, "epsilon must be a non-negative real");
  }
  const double norm = g.frobenius_norm();
  if (norm < kZeroGradientNorm) {
    throw Error(errc::zero_gradient, "gradient norm below " + std::to_string(kZeroGradientNorm));
  }
  Perturbation z;
  z.wrt_embedded = g;
  const double factor = -epsilon / norm;
  for (double& v : z.wrt_embedded.data()) v *= factor;
  return z;
}

AdversarialResult adversarial_loss(const ModelParams& params, const std::vector<int>& ids,
                                   Label label, const Perturbation& z) {
  const int L = params.hyper.max_len;
  const int d = params.hyper.dim;
  if (z.wrt_embedded.rows() != L || z.wrt_embedded.cols() != d) {
    throw Error(errc::length_mismatch, "perturbation shape does not match the embedded sequence");
  }

  Matrix embedded(L, d);
  for (int i = 0; i < L; ++i) {
    const int id = ids.at(static_cast<std::size_t>(i));
    if (id < 0 || id >= params.hyper.vocab_size) {
      throw Error(errc::id_out_of_range, "token id " + std::to_string(id));
    }
    const double* src = params.embedding.row(id);
    const double* zi = z.wrt_embedded.row(i);
    double* dst = embedded.row(i);
    for (int c = 0; c < d; ++c) dst[c] = src[c] + zi[c];
  }

  const ForwardTrace trace = forward_from_embedded(params, ids, embedded);
  AdversarialResult result;
  result.loss = bce_loss(trace.prob, label);
  // z is a constant here; grads w.r.t. the embedding table flow through the
  // lookup exactly as in the clean pass
  result.grads = backward(params, trace, label);
  return result;
}

OptimizerState init_optimizer(const ModelParams& params) {
  OptimizerState s;
  const int V = params.hyper.vocab_size;
  const int d = params.hyper.dim;
  s.m_embedding = Matrix(V, d);
  s.v_embedding = Matrix(V, d);
  s.m_wq = Matrix(d, d);
  s.v_wq = Matrix(d, d);
  s.m_wk = Matrix(d, d);
  s.v_wk = Matrix(d, d);
  s.m_wv = Matrix(d, d);
  s.v_wv = Matrix(d, d);
  s.m_wo = Matrix(d, d);
  s.v_wo = Matrix(d, d);
  s.m_classifier_weight.assign(static_cast<std::size_t>(d), 0.0);
  s.v_classifier_weight.assign(static_cast<std::size_t>(d), 0.0);
  return s;
}

namespace {

// One AdamW update over a flat array. decay_skip marks entries excluded from
// weight decay (the pad embedding row).
void adamw_array(double* w, const double* g, double* m, double* v, std::size_t n,
                 const TrainConfig& cfg, double bc1, double bc2, bool decay,
                 std::size_t decay_skip_begin = 0, std::size_t decay_skip_end = 0) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g[i];
    v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g[i] * g[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    double update = cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    if (decay && !(i >= decay_skip_begin && i < decay_skip_end)) {
      update += cfg.learning_rate * cfg.weight_decay * w[i];
    }
    w[i] -= update;
  }
}

}  // namespace

void adamw_step(ModelParams& params, const Gradients& grads, OptimizerState& state,
                const TrainConfig& cfg) {
  if (!grads.all_finite()) {
    throw Error(errc::non_finite_gradient, "gradient contains NaN or infinity");
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.step));

  const std::size_t dim = static_cast<std::size_t>(params.hyper.dim);
  // pad embedding row is excluded from decay
  adamw_array(params.embedding.data().data(), grads.embedding.data().data(),
              state.m_embedding.data().data(), state.v_embedding.data().data(),
              params.embedding.size(), cfg, bc1, bc2, /*decay=*/true,
              static_cast<std::size_t>(Vocab::kPadId) * dim,
              static_cast<std::size_t>(Vocab::kPadId) * dim + dim);
  adamw_array(params.wq.data().data(), grads.wq.data().data(), state.m_wq.data().data(),
              state.v_wq.data().data(), params.wq.size(), cfg, bc1, bc2, true);
  adamw_array(params.wk.data().data(), grads.wk.data().data(), state.m_wk.data().data(),
              state.v_wk.data().data(), params.wk.size(), cfg, bc1, bc2, true);
  adamw_array(params.wv.data().data(), grads.wv.data().data(), state.m_wv.data().data(),
              state.v_wv.data().data(), params.wv.size(), cfg, bc1, bc2, true);
  adamw_array(params.wo.data().data(), grads.wo.data().data(), state.m_wo.data().data(),
              state.v_wo.data().data(), params.wo.size(), cfg, bc1, bc2, true);
  adamw_array(params.classifier_weight.data(), grads.classifier_weight.data(),
              state.m_classifier_weight.data(), state.v_classifier_weight.data(),
              params.classifier_weight.size(), cfg, bc1, bc2, true);
  adamw_array(&params.classifier_bias, &grads.classifier_bias, &state.m_classifier_bias,
              &state.v_classifier_bias, 1, cfg, bc1, bc2, /*decay=*/false);
}

FoldResult train_fold(const Dataset& train, const Dataset& valid, const Vocab& vocab,
                      const ModelHyper& hyper, const TrainConfig& cfg, ExecPolicy policy) {
  if (train.items.empty() || valid.items.empty()) {
    throw Error(errc::empty_split, "train and valid splits must be non-empty");
  }
  if (!train.fully_labeled() || !valid.fully_labeled()) {
    throw Error(errc::unknown_label, "train_fold requires labeled splits");
  }
  if (cfg.epochs < 1 || cfg.patience < 0 || cfg.batch_size < 1 || cfg.epsilon < 0.0) {
    throw Error(errc::bad_config, "invalid TrainConfig");
  }

  ModelHyper h = hyper;
  h.vocab_size = vocab.size();

  std::vector<std::vector<int>> train_ids(train.size());
  std::vector<Label> train_labels(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    train_ids[i] = encode(train.items[i].text, vocab, h.max_len);
    train_labels[i] = *train.items[i].label;
  }
  std::vector<std::vector<int>> valid_ids(valid.size());
  std::vector<Label> valid_labels(valid.size());
  for (std::size_t i = 0; i < valid.size(); ++i) {
    valid_ids[i] = encode(valid.items[i].text, vocab, h.max_len);
    valid_labels[i] = *valid.items[i].label;
  }

  ModelParams params = init_params(h, mix_seed(cfg.seed, 0x1a17));
  OptimizerState opt = init_optimizer(params);

  FoldResult result;
  result.best_params = params;
  EarlyStopper stopper(cfg.patience, cfg.tolerance);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      EncodedBatch batch;
      batch.ids.reserve(end - start);
      batch.labels.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        batch.ids.push_back(train_ids[order[i]]);
        batch.labels.push_back(train_labels[order[i]]);
      }
      const Gradients grads = batch_gradients(params, batch, cfg.adversarial, cfg.epsilon, policy);
      adamw_step(params, grads, opt, cfg);
    }

    const std::vector<double> probs = predict_probs(params, valid_ids, policy);
    const std::vector<Label> preds = [&probs] {
      std::vector<Label> p(probs.size());
      for (std::size_t i = 0; i < probs.size(); ++i) {
        p[i] = probs[i] >= 0.5 ? Label::INFORMATIVE : Label::UNINFORMATIVE;
      }
      return p;
    }();
    const double f1 = precision_recall_f1(preds, valid_labels).f1;
    result.f1_history.push_back(f1);
    result.stopped_epoch = epoch;

    const bool stop = stopper.observe(f1);
    if (stopper.last_was_best()) result.best_params = params;
    if (stop) break;
  }

  result.best_epoch = stopper.best_epoch();
  result.oof_ids.reserve(valid.size());
  for (const Tweet& t : valid.items) result.oof_ids.push_back(t.id);
  result.oof_probs = predict_probs(result.best_params, valid_ids, policy);
  return result;
}

}  // namespace advtext
