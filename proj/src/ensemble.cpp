#include "advtext/ensemble.hpp"

#include <algorithm>
#include <map>

#include "advtext/evalkit.hpp"

namespace advtext {

void PredictionMatrix::add_run(const std::string& run_label,
                               const std::vector<std::string>& run_ids,
                               std::vector<double> probs) {
  if (run_ids.size() != probs.size()) {
    throw Error(errc::length_mismatch, "run '" + run_label + "' ids and probs differ in length");
  }
  for (const auto& [label, existing] : runs) {
    if (label == run_label) {
      throw Error(errc::duplicate_key, "run label '" + run_label + "' already present");
    }
    (void)existing;
  }
  if (runs.empty() && ids.empty()) {
    ids = run_ids;
  } else if (run_ids != ids) {
    throw Error(errc::misaligned_ids, "run '" + run_label + "' ids do not match the matrix");
  }
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(errc::bad_config, "run '" + run_label + "' has a probability outside [0, 1]");
    }
  }
  runs.emplace_back(run_label, std::move(probs));
}

std::vector<double> fold_average(const PredictionMatrix& runs) {
  if (runs.runs.empty()) throw Error(errc::misaligned_ids, "prediction matrix has no runs");
  const std::size_t n = runs.ids.size();
  for (const auto& [label, probs] : runs.runs) {
    if (probs.size() != n) {
      throw Error(errc::misaligned_ids, "run '" + label + "' length differs from ids");
    }
  }
  std::vector<double> mean(n, 0.0);
  for (const auto& [label, probs] : runs.runs) {
    for (std::size_t i = 0; i < n; ++i) mean[i] += probs[i];
  }
  const double inv = 1.0 / static_cast<double>(runs.runs.size());
  for (double& v : mean) v *= inv;
  return mean;
}

std::vector<double> model_average(const std::vector<double>& a, const std::vector<double>& b) {
  return model_average(std::vector<std::vector<double>>{a, b});
}

std::vector<double> model_average(const std::vector<std::vector<double>>& vectors) {
  if (vectors.empty()) throw Error(errc::length_mismatch, "no vectors to average");
  const std::size_t n = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != n) throw Error(errc::length_mismatch, "probability vectors differ in length");
  }
  std::vector<double> mean(n, 0.0);
  for (const auto& v : vectors) {
    for (std::size_t i = 0; i < n; ++i) mean[i] += v[i];
  }
  const double inv = 1.0 / static_cast<double>(vectors.size());
  for (double& v : mean) v *= inv;
  return mean;
}

ThresholdReport optimize_threshold(const std::vector<double>& oof_probs,
                                   const std::vector<Label>& labels) {
  if (oof_probs.size() != labels.size() || oof_probs.empty()) {
    throw Error(errc::length_mismatch, "probs and labels must be non-empty and aligned");
  }
  long total_pos = 0;
  for (Label l : labels) total_pos += l == Label::INFORMATIVE ? 1 : 0;
  if (total_pos == 0) {
    throw Error(errc::single_class_labels, "gold labels contain no positive class");
  }

  // group samples by distinct probability, ascending
  std::map<double, std::pair<long, long>> groups;  // prob -> (pos, neg)
  for (std::size_t i = 0; i < oof_probs.size(); ++i) {
    auto& [pos, neg] = groups[oof_probs[i]];
    (labels[i] == Label::INFORMATIVE ? pos : neg) += 1;
  }
  std::vector<double> values;
  std::vector<std::pair<long, long>> counts;
  values.reserve(groups.size());
  counts.reserve(groups.size());
  for (const auto& [p, c] : groups) {
    values.push_back(p);
    counts.push_back(c);
  }
  const std::size_t m = values.size();

  double best_threshold = 0.0;
  double best_f1 = -1.0;
  std::size_t examined = 0;
  auto consider = [&](double threshold, long tp, long fp, long fn) {
    ++examined;
    const double f1 = f1_from_counts(tp, fp, fn);
    if (f1 > best_f1) {  // strict: ties keep the smallest threshold
      best_f1 = f1;
      best_threshold = threshold;
    }
  };

  // threshold 0: everything positive
  long tp = total_pos;
  long fp = static_cast<long>(oof_probs.size()) - total_pos;
  consider(0.0, tp, fp, total_pos - tp);

  // midpoints: after passing group i, its samples turn negative
  for (std::size_t i = 0; i + 1 < m; ++i) {
    tp -= counts[i].first;
    fp -= counts[i].second;
    double mid = (values[i] + values[i + 1]) / 2.0;
    if (!(mid > values[i])) mid = values[i + 1];  // adjacent doubles round down
    consider(mid, tp, fp, total_pos - tp);
  }

  // threshold 1: positive iff prob == 1.0 exactly
  const bool top_is_one = m > 0 && values.back() == 1.0;
  const long tp_one = top_is_one ? counts.back().first : 0;
  const long fp_one = top_is_one ? counts.back().second : 0;
  consider(1.0, tp_one, fp_one, total_pos - tp_one);

  ThresholdReport report;
  report.threshold = best_threshold;
  report.candidates_examined = examined;
  // stored F1 comes from the shared metric path; the sweep uses the same
  // count arithmetic, so the two agree bit-for-bit
  report.f1_at_threshold =
      precision_recall_f1(apply_threshold(oof_probs, best_threshold), labels).f1;
  return report;
}

std::vector<Label> apply_threshold(const std::vector<double>& probs, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(errc::bad_config, "threshold must lie in [0, 1]");
  }
  std::vector<Label> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    out[i] = probs[i] >= threshold ? Label::INFORMATIVE : Label::UNINFORMATIVE;
  }
  return out;
}

}  // namespace advtext
