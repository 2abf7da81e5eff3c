#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advtext/corpus.hpp"
#include "advtext/kernels.hpp"
#include "advtext/textmodel.hpp"

namespace advtext {

// Gradients (and perturbations) with Euclidean norm below this are treated
// as vanishing: the perturbation direction is undefined and the adversarial
// pass is skipped.
inline constexpr double kZeroGradientNorm = 1e-12;

struct TrainConfig {
  int epochs = 5;
  int patience = 3;
  double tolerance = 1e-3;
  // 2e-5 suits the pretrained encoders this architecture stands in for; a
  // from-scratch desk model needs a larger step.
  double learning_rate = 1e-3;
  int batch_size = 16;
  double epsilon = 1.0;
  bool adversarial = false;
  double weight_decay = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
};

struct Perturbation {
  Matrix wrt_embedded;  // L x d, Euclidean norm epsilon
};

// z = -epsilon * g / ||g||_2 where g is the gradient of log p(y|t) with
// respect to the embedded sequence t (the negation of backward's
// wrt_embedded, which differentiates the loss). Norm taken over the whole
// matrix; pad rows of g are zero by construction.
Perturbation adversarial_perturbation(const Matrix& g, double epsilon);

struct AdversarialResult {
  double loss = 0.0;
  Gradients grads;
};

// Re-runs the forward pass with embedded := embedding rows + z (z treated as
// a constant) and differentiates the loss on the perturbed input. Batch
// averaging is the training loop's job.
AdversarialResult adversarial_loss(const ModelParams& params, const std::vector<int>& ids,
                                   Label label, const Perturbation& z);

struct OptimizerState {
  long step = 0;
  // first and second moments, same shapes as the trainable arrays
  Matrix m_embedding, m_wq, m_wk, m_wv, m_wo;
  std::vector<double> m_classifier_weight;
  double m_classifier_bias = 0.0;
  Matrix v_embedding, v_wq, v_wk, v_wv, v_wo;
  std::vector<double> v_classifier_weight;
  double v_classifier_bias = 0.0;
};

OptimizerState init_optimizer(const ModelParams& params);

// Bias-corrected Adam plus decoupled decay w -= lr * wd * w computed from
// the pre-update weight. Decay applies to weight matrices and the classifier
// weight, not to the classifier bias or the pad embedding row.
void adamw_step(ModelParams& params, const Gradients& grads, OptimizerState& state,
                const TrainConfig& cfg);

// Stops after `patience` consecutive epochs whose metric does not exceed the
// best seen by more than `tolerance`; ties do not reset patience.
class EarlyStopper {
 public:
  EarlyStopper(int patience, double tolerance) : patience_(patience), tolerance_(tolerance) {}

  // Returns true when training should stop after this epoch.
  bool observe(double metric) {
    ++epoch_;
    if (metric > best_ + tolerance_) {
      streak_ = 0;
    } else {
      ++streak_;
    }
    if (metric > best_) {
      best_ = metric;
      best_epoch_ = epoch_;
    }
    return streak_ >= patience_;
  }

  // True when the last observed metric is the strict best so far (the caller
  // snapshots parameters on these epochs).
  bool last_was_best() const { return best_epoch_ == epoch_; }

  double best_metric() const { return best_; }
  int best_epoch() const { return best_epoch_; }

 private:
  int patience_;
  double tolerance_;
  int epoch_ = 0;
  int streak_ = 0;
  double best_ = -1e300;
  int best_epoch_ = 0;
};

struct FoldResult {
  ModelParams best_params;
  std::vector<double> f1_history;  // validation positive-class F1 per epoch
  int best_epoch = 0;              // 1-based
  int stopped_epoch = 0;           // epochs actually run
  std::vector<std::string> oof_ids;
  std::vector<double> oof_probs;  // best model's probabilities on valid
};

// One cross-validation fold: seeded shuffled batches, clean (+ FGM)
// gradients, one AdamW step per batch, early stopping on validation
// positive-class F1 at threshold 0.5. Deterministic for a fixed
// (data, vocab, hyper, cfg) regardless of ExecPolicy.
FoldResult train_fold(const Dataset& train, const Dataset& valid, const Vocab& vocab,
                      const ModelHyper& hyper, const TrainConfig& cfg,
                      ExecPolicy policy = ExecPolicy::OpenMP);

}  // namespace advtext
