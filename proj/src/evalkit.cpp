#include "advtext/evalkit.hpp"

#include <algorithm>
#include <cmath>

#include "advtext/textmodel.hpp"

namespace advtext {

double f1_from_counts(long tp, long fp, long fn) {
  const double precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  const double recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

PrfResult precision_recall_f1(const std::vector<Label>& pred, const std::vector<Label>& gold) {
  if (pred.size() != gold.size() || pred.empty()) {
    throw Error(errc::length_mismatch, "pred and gold must be non-empty and aligned");
  }
  PrfResult r;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == Label::INFORMATIVE;
    const bool g = gold[i] == Label::INFORMATIVE;
    if (p && g) ++r.counts.tp;
    else if (p && !g) ++r.counts.fp;
    else if (!p && g) ++r.counts.fn;
    else ++r.counts.tn;
  }
  r.precision = r.counts.tp + r.counts.fp > 0
                    ? static_cast<double>(r.counts.tp) / (r.counts.tp + r.counts.fp)
                    : 0.0;
  r.recall = r.counts.tp + r.counts.fn > 0
                 ? static_cast<double>(r.counts.tp) / (r.counts.tp + r.counts.fn)
                 : 0.0;
  r.f1 = f1_from_counts(r.counts.tp, r.counts.fp, r.counts.fn);
  return r;
}

std::vector<double> per_sample_bce(const std::vector<double>& probs,
                                   const std::vector<Label>& gold) {
  if (probs.size() != gold.size()) {
    throw Error(errc::length_mismatch, "probs and gold must be aligned");
  }
  std::vector<double> losses(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) losses[i] = bce_loss(probs[i], gold[i]);
  return losses;
}

std::vector<RankedLoss> top_k_losses(const std::vector<double>& probs,
                                     const std::vector<Label>& gold,
                                     const std::vector<std::string>& ids, std::size_t k) {
  if (probs.size() != gold.size() || probs.size() != ids.size()) {
    throw Error(errc::length_mismatch, "probs, gold and ids must be aligned");
  }
  if (k > probs.size()) {
    throw Error(errc::length_mismatch, "k exceeds the number of samples");
  }
  std::vector<RankedLoss> ranked(probs.size());
  const std::vector<double> losses = per_sample_bce(probs, gold);
  for (std::size_t i = 0; i < probs.size(); ++i) ranked[i] = {ids[i], losses[i]};
  std::sort(ranked.begin(), ranked.end(), [](const RankedLoss& a, const RankedLoss& b) {
    if (a.loss != b.loss) return a.loss > b.loss;
    return a.id < b.id;
  });
  ranked.resize(k);
  return ranked;
}

DisagreementReport disagreement(const std::vector<Label>& pred_a,
                                const std::vector<Label>& pred_b,
                                const std::vector<Label>& gold,
                                const std::vector<std::string>& ids) {
  if (pred_a.size() != gold.size() || pred_b.size() != gold.size() || ids.size() != gold.size()) {
    throw Error(errc::length_mismatch, "prediction, gold and id vectors must be aligned");
  }
  DisagreementReport r;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool a_wrong = pred_a[i] != gold[i];
    const bool b_wrong = pred_b[i] != gold[i];
    if (a_wrong) {
      ++r.errors_a;
      r.errors_a_ids.push_back(ids[i]);
      if (!b_wrong) {
        ++r.a_wrong_b_right;
        r.a_wrong_b_right_ids.push_back(ids[i]);
      }
    }
    if (b_wrong) {
      ++r.errors_b;
      r.errors_b_ids.push_back(ids[i]);
      if (!a_wrong) {
        ++r.b_wrong_a_right;
        r.b_wrong_a_right_ids.push_back(ids[i]);
      }
    }
  }
  return r;
}

}  // namespace advtext
