#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "advtext/corpus.hpp"

namespace advtext {

struct ConfusionCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;
};

struct PrfResult {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  ConfusionCounts counts;
};

// P = tp/(tp+fp), R = tp/(tp+fn), F1 = 2PR/(P+R); any division by zero
// yields 0. Single definition shared with the threshold sweep so reported
// F1 values agree bit-for-bit.
double f1_from_counts(long tp, long fp, long fn);

// Positive class is INFORMATIVE.
PrfResult precision_recall_f1(const std::vector<Label>& pred, const std::vector<Label>& gold);

// Elementwise -log p_correct with the shared clamp.
std::vector<double> per_sample_bce(const std::vector<double>& probs,
                                   const std::vector<Label>& gold);

struct RankedLoss {
  std::string id;
  double loss = 0.0;
};

// Descending by loss; ties broken by id ascending.
std::vector<RankedLoss> top_k_losses(const std::vector<double>& probs,
                                     const std::vector<Label>& gold,
                                     const std::vector<std::string>& ids, std::size_t k);

struct DisagreementReport {
  long errors_a = 0;
  long errors_b = 0;
  long a_wrong_b_right = 0;
  long b_wrong_a_right = 0;
  std::vector<std::string> errors_a_ids;
  std::vector<std::string> errors_b_ids;
  std::vector<std::string> a_wrong_b_right_ids;
  std::vector<std::string> b_wrong_a_right_ids;
};

DisagreementReport disagreement(const std::vector<Label>& pred_a,
                                const std::vector<Label>& pred_b,
                                const std::vector<Label>& gold,
                                const std::vector<std::string>& ids);

}  // namespace advtext
