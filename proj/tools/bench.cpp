// Compares the serial reference kernels against the OpenMP ones on a
// synthetic workload and reports per-policy timings, speedup and whether the
// results are bit-identical.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "advtext/advtrain.hpp"
#include "advtext/kernels.hpp"
#include "advtext/rng.hpp"
#include "advtext/textmodel.hpp"

#ifdef ADVTEXT_HAVE_OPENMP
#include <omp.h>
#endif

using namespace advtext;

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

struct Workload {
  ModelParams params;
  EncodedBatch batch;
};

Workload make_workload(int vocab, int dim, int max_len, int batch_size, std::uint64_t seed) {
  Workload w;
  ModelHyper hyper{dim, max_len, vocab};
  w.params = init_params(hyper, seed);
  Rng rng(mix_seed(seed, 1));
  for (int s = 0; s < batch_size; ++s) {
    std::vector<int> ids(static_cast<std::size_t>(max_len), Vocab::kPadId);
    const std::size_t tokens = 2 + rng.next_index(static_cast<std::size_t>(max_len) - 2);
    for (std::size_t i = 0; i < tokens; ++i) {
      ids[i] = 2 + static_cast<int>(rng.next_index(static_cast<std::size_t>(vocab) - 2));
    }
    w.batch.ids.push_back(std::move(ids));
    w.batch.labels.push_back(rng.next_unit() < 0.5 ? Label::UNINFORMATIVE : Label::INFORMATIVE);
  }
  return w;
}

template <typename Fn>
double time_best_of(int iters, Fn&& fn) {
  double best = 1e300;
  for (int i = 0; i < iters; ++i) {
    const double t0 = now_seconds();
    fn();
    best = std::min(best, now_seconds() - t0);
  }
  return best;
}

bool grads_equal(const Gradients& a, const Gradients& b) {
  return a.embedding == b.embedding && a.wq == b.wq && a.wk == b.wk && a.wv == b.wv &&
         a.wo == b.wo && a.classifier_weight == b.classifier_weight &&
         a.classifier_bias == b.classifier_bias;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP kernel benchmark"};
  int vocab = 4000, dim = 32, max_len = 64, batch = 256, iters = 5;
  bool adversarial = true;
  app.add_option("--vocab", vocab);
  app.add_option("--dim", dim);
  app.add_option("--max-len", max_len);
  app.add_option("--batch", batch);
  app.add_option("--iters", iters);
  app.add_flag("--adversarial,!--no-adversarial", adversarial);
  CLI11_PARSE(app, argc, argv);

  const Workload w = make_workload(vocab, dim, max_len, batch, 12345);

#ifdef ADVTEXT_HAVE_OPENMP
  const int max_threads = omp_get_max_threads();
#else
  const int max_threads = 1;
#endif
  std::printf("workload: V=%d d=%d L=%d batch=%d adversarial=%s, best of %d iters\n", vocab, dim,
              max_len, batch, adversarial ? "yes" : "no", iters);
  std::printf("max threads: %d\n\n", max_threads);

  // batch_gradients
  const Gradients ref = batch_gradients(w.params, w.batch, adversarial, 1.0, ExecPolicy::Serial);
  const double t_serial = time_best_of(iters, [&] {
    (void)batch_gradients(w.params, w.batch, adversarial, 1.0, ExecPolicy::Serial);
  });
  std::printf("batch_gradients  serial            %8.2f ms  (reference)\n", t_serial * 1e3);

  const Gradients par = batch_gradients(w.params, w.batch, adversarial, 1.0, ExecPolicy::OpenMP);
  const double t_par = time_best_of(iters, [&] {
    (void)batch_gradients(w.params, w.batch, adversarial, 1.0, ExecPolicy::OpenMP);
  });
  std::printf("batch_gradients  openmp (%2d thr)   %8.2f ms  speedup %.2fx  bit-identical: %s\n",
              max_threads, t_par * 1e3, t_serial / t_par, grads_equal(ref, par) ? "yes" : "NO");

  // predict_probs
  const std::vector<double> pref = predict_probs(w.params, w.batch.ids, ExecPolicy::Serial);
  const double p_serial = time_best_of(iters, [&] {
    (void)predict_probs(w.params, w.batch.ids, ExecPolicy::Serial);
  });
  std::printf("predict_probs    serial            %8.2f ms  (reference)\n", p_serial * 1e3);

  const std::vector<double> ppar = predict_probs(w.params, w.batch.ids, ExecPolicy::OpenMP);
  const double p_par = time_best_of(iters, [&] {
    (void)predict_probs(w.params, w.batch.ids, ExecPolicy::OpenMP);
  });
  std::printf("predict_probs    openmp (%2d thr)   %8.2f ms  speedup %.2fx  bit-identical: %s\n",
              max_threads, p_par * 1e3, p_serial / p_par, pref == ppar ? "yes" : "NO");

  return 0;
}
