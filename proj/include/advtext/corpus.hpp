#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "advtext/errors.hpp"

namespace advtext {

// INFORMATIVE is the positive class for every metric in this project.
enum class Label : int { UNINFORMATIVE = 0, INFORMATIVE = 1 };

Label parse_label(const std::string& text);  // case-insensitive
const char* label_name(Label label);

struct Tweet {
  std::string id;
  std::string text;
  std::optional<Label> label;

  bool operator==(const Tweet&) const = default;
};

struct Dataset {
  std::string name;
  std::vector<Tweet> items;

  std::size_t size() const { return items.size(); }
  bool fully_labeled() const;
  long positive_count() const;

  bool operator==(const Dataset&) const = default;
};

struct FoldPlan {
  int k = 0;
  std::vector<int> assignment;  // fold index per dataset item, in dataset order
  std::uint64_t seed = 0;
};

// TSV columns are id, text, label (label column absent when has_labels is
// false). A header row is optional and detected by a literal first cell "id".
// Rows with the wrong column count, unknown labels, duplicate or empty ids,
// or whitespace-only text are rejected.
Dataset load_tsv(const std::string& path, bool has_labels);

// Emits the same format bit-exactly: UTF-8, LF line endings, no header. The
// label column is written when the dataset is fully labeled and omitted when
// fully unlabeled; a mix is an error.
void write_tsv(const Dataset& data, const std::string& path);

// Stratified assignment: each class is shuffled with the seed and dealt
// round-robin, the deal cursor carrying over between classes so per-fold
// sizes stay within one of each other.
FoldPlan stratified_folds(const Dataset& data, int k, std::uint64_t seed);

// Synthetic desk-scale corpus built from keyword-distinguishable templates.
// floor(n * positive_rate) items are positive before noise; each label is
// then flipped with probability noise_rate. Deterministic per seed.
Dataset synth_corpus(int n, double positive_rate, double noise_rate, std::uint64_t seed);

}  // namespace advtext
