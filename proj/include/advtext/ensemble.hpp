#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "advtext/corpus.hpp"

namespace advtext {

// Per-sample probabilities for several runs (fold models or model-level
// averages), aligned to one id sequence.
struct PredictionMatrix {
  std::vector<std::string> ids;
  std::vector<std::pair<std::string, std::vector<double>>> runs;  // label -> probs

  // First call fixes the id sequence; later runs must match it exactly.
  void add_run(const std::string& run_label, const std::vector<std::string>& run_ids,
               std::vector<double> probs);
};

// Arithmetic mean per sample over all runs.
std::vector<double> fold_average(const PredictionMatrix& runs);

// Elementwise mean of two (or more) aligned probability vectors.
std::vector<double> model_average(const std::vector<double>& a, const std::vector<double>& b);
std::vector<double> model_average(const std::vector<std::vector<double>>& vectors);

struct ThresholdReport {
  double threshold = 0.5;
  double f1_at_threshold = 0.0;
  std::size_t candidates_examined = 0;
};

// Exhaustive scan over {0, 1} plus the midpoints of consecutive distinct
// sorted probabilities; positive iff prob >= threshold; ties broken toward
// the smallest threshold. Gold must contain at least one positive.
ThresholdReport optimize_threshold(const std::vector<double>& oof_probs,
                                   const std::vector<Label>& labels);

// positive iff prob >= threshold
std::vector<Label> apply_threshold(const std::vector<double>& probs, double threshold);

}  // namespace advtext
