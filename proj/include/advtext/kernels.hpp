#pragma once

#include <vector>

#include "advtext/textmodel.hpp"

namespace advtext {

// Every batch kernel exists in two flavors: a plain serial loop (the
// reference, kept for testing) and an OpenMP parallel-for over samples.
// Per-sample results land in per-sample slots and are reduced in index
// order afterwards, so both policies produce bit-identical output for any
// thread count.
enum class ExecPolicy { Serial, OpenMP };

struct EncodedBatch {
  std::vector<std::vector<int>> ids;  // each entry has length max_len
  std::vector<Label> labels;

  std::size_t size() const { return ids.size(); }
};

struct BatchStats {
  double clean_loss = 0.0;  // mean over the batch
  double adv_loss = 0.0;    // mean over adversarial passes actually run
  int adv_samples = 0;      // samples whose adversarial pass ran
};

// Mean gradient over the batch: clean pass per sample, plus the FGM pass
// when `adversarial` is set, epsilon is nonzero and the sample's embedding
// gradient is not vanishing. Clean and adversarial gradients are summed
// before the division by batch size.
Gradients batch_gradients(const ModelParams& params, const EncodedBatch& batch, bool adversarial,
                          double epsilon, ExecPolicy policy, BatchStats* stats = nullptr);

// Sigmoid probabilities for a list of encoded samples.
std::vector<double> predict_probs(const ModelParams& params,
                                  const std::vector<std::vector<int>>& ids, ExecPolicy policy);

}  // namespace advtext
