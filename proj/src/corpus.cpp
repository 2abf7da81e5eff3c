#include "advtext/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>
#include <unordered_set>

#include "advtext/rng.hpp"

namespace advtext {

namespace {

std::string to_upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cols;
}

}  // namespace

Label parse_label(const std::string& text) {
  const std::string upper = to_upper(text);
  if (upper == "INFORMATIVE") return Label::INFORMATIVE;
  if (upper == "UNINFORMATIVE") return Label::UNINFORMATIVE;
  throw Error(errc::unknown_label, "unrecognized label '" + text + "'");
}

const char* label_name(Label label) {
  return label == Label::INFORMATIVE ? "INFORMATIVE" : "UNINFORMATIVE";
}

bool Dataset::fully_labeled() const {
  return std::all_of(items.begin(), items.end(), [](const Tweet& t) { return t.label.has_value(); });
}

long Dataset::positive_count() const {
  long n = 0;
  for (const Tweet& t : items) {
    if (t.label && *t.label == Label::INFORMATIVE) ++n;
  }
  return n;
}

Dataset load_tsv(const std::string& path, bool has_labels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::io_error, "cannot open '" + path + "'");

  Dataset data;
  data.name = path;
  std::unordered_set<std::string> seen_ids;
  const std::size_t want_cols = has_labels ? 3 : 2;

  std::string line;
  std::size_t line_no = 0;
  bool first_row = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::vector<std::string> cols = split_tabs(line);
    if (first_row && cols[0] == "id") {  // optional header
      first_row = false;
      continue;
    }
    first_row = false;

    if (cols.size() != want_cols) {
      throw Error(errc::malformed_row, "line " + std::to_string(line_no) + ": expected " +
                                           std::to_string(want_cols) + " columns, got " +
                                           std::to_string(cols.size()));
    }

    Tweet tweet;
    tweet.id = cols[0];
    tweet.text = cols[1];
    if (tweet.id.empty()) {
      throw Error(errc::malformed_row, "line " + std::to_string(line_no) + ": empty id");
    }
    if (blank(tweet.text)) {
      throw Error(errc::malformed_row, "line " + std::to_string(line_no) + ": empty text");
    }
    if (has_labels) tweet.label = parse_label(cols[2]);

    if (!seen_ids.insert(tweet.id).second) {
      throw Error(errc::duplicate_id, "id '" + tweet.id + "' appears more than once");
    }
    data.items.push_back(std::move(tweet));
  }

  if (data.items.empty()) throw Error(errc::empty_file, "'" + path + "' has no data rows");
  return data;
}

void write_tsv(const Dataset& data, const std::string& path) {
  const bool labeled = data.fully_labeled();
  if (!labeled) {
    const bool any = std::any_of(data.items.begin(), data.items.end(),
                                 [](const Tweet& t) { return t.label.has_value(); });
    if (any) throw Error(errc::malformed_row, "dataset mixes labeled and unlabeled items");
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::io_error, "cannot write '" + path + "'");
  for (const Tweet& t : data.items) {
    out << t.id << '\t' << t.text;
    if (labeled) out << '\t' << label_name(*t.label);
    out << '\n';
  }
  if (!out) throw Error(errc::io_error, "write failed for '" + path + "'");
}

FoldPlan stratified_folds(const Dataset& data, int k, std::uint64_t seed) {
  if (k < 2) throw Error(errc::bad_config, "k must be at least 2");
  if (static_cast<std::size_t>(k) > data.size()) {
    throw Error(errc::k_too_large, "k=" + std::to_string(k) + " exceeds dataset size " +
                                       std::to_string(data.size()));
  }
  if (!data.fully_labeled()) {
    throw Error(errc::unknown_label, "stratified_folds requires a fully labeled dataset");
  }

  // Item indices per class, positives first.
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < data.items.size(); ++i) {
    (*data.items[i].label == Label::INFORMATIVE ? positives : negatives).push_back(i);
  }

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignment.assign(data.size(), 0);

  Rng rng(seed);
  int cursor = 0;  // carries over between classes so fold sizes stay balanced
  for (std::vector<std::size_t>* cls : {&positives, &negatives}) {
    rng.shuffle(*cls);
    for (std::size_t idx : *cls) {
      plan.assignment[idx] = cursor;
      cursor = (cursor + 1) % k;
    }
  }
  return plan;
}

namespace {

// Positive templates carry case/count/location cue words, negative templates
// carry opinion/joke cue words; the two cue sets are disjoint so a keyword
// count separates the classes perfectly at noise_rate 0.
const std::array<std::string_view, 8> kPositiveTemplates = {
    "health officials reported {N} new confirmed cases in {CITY} county URL",
    "{CITY} hospital update: {N} patients admitted and {M} recovered as of today",
    "breaking: {N} additional deaths confirmed in {CITY} according to the health department URL",
    "the {CITY} county health department reported a total of {N} cases on {DAY}",
    "update from {CITY}: {N} new cases and {M} deaths reported by local hospital officials",
    "{CITY} confirms {N} coronavirus cases; testing sites open across the county URL",
    "officials in {CITY} county announce {N} recovered patients and {M} new cases",
    "daily report: {N} confirmed cases statewide, {M} in {CITY} county alone URL",
};

const std::array<std::string_view, 8> kNegativeTemplates = {
    "honestly i think quarantine memes are the only thing keeping me sane lol",
    "day {N} of lockdown and i feel like this is all a weird joke @USER",
    "i miss going outside so much, this whole thing is exhausting honestly",
    "my cat does not think the pandemic is a good excuse for my singing lol",
    "anyone else feel like {DAY} is just a joke now? asking for a friend @USER",
    "i think banana bread number {N} might finally be the one lol URL",
    "petition to make naps a sport because honestly i would win gold @USER",
    "me pretending to enjoy my {N}th zoom quiz of the week lol what a joke",
};

const std::array<std::string_view, 10> kCities = {
    "austin", "denver", "boston", "seattle", "miami",
    "portland", "atlanta", "chicago", "dallas", "phoenix",
};

const std::array<std::string_view, 7> kDays = {
    "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday",
};

std::string fill_template(std::string_view tpl, Rng& rng) {
  std::string out;
  out.reserve(tpl.size() + 8);
  std::size_t i = 0;
  while (i < tpl.size()) {
    if (tpl[i] == '{') {
      std::size_t close = tpl.find('}', i);
      std::string_view slot = tpl.substr(i + 1, close - i - 1);
      if (slot == "N" || slot == "M") {
        out += std::to_string(1 + rng.next_index(999));
      } else if (slot == "CITY") {
        out += kCities[rng.next_index(kCities.size())];
      } else if (slot == "DAY") {
        out += kDays[rng.next_index(kDays.size())];
      }
      i = close + 1;
    } else {
      out += tpl[i++];
    }
  }
  return out;
}

}  // namespace

Dataset synth_corpus(int n, double positive_rate, double noise_rate, std::uint64_t seed) {
  if (n <= 0) throw Error(errc::bad_config, "n must be positive");
  if (!(positive_rate > 0.0 && positive_rate < 1.0)) {
    throw Error(errc::bad_config, "positive_rate must be in (0, 1)");
  }
  if (!(noise_rate >= 0.0 && noise_rate < 0.5)) {
    throw Error(errc::bad_config, "noise_rate must be in [0, 0.5)");
  }

  const int n_pos = static_cast<int>(std::floor(n * positive_rate));
  // independent streams: the same seed yields the same texts at any
  // noise_rate, with only labels flipped
  Rng order_rng(mix_seed(seed, 1));
  Rng text_rng(mix_seed(seed, 2));
  Rng noise_rng(mix_seed(seed, 3));

  std::vector<Label> wanted(static_cast<std::size_t>(n), Label::UNINFORMATIVE);
  std::fill(wanted.begin(), wanted.begin() + n_pos, Label::INFORMATIVE);
  order_rng.shuffle(wanted);

  Dataset data;
  data.name = "synth";
  data.items.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Tweet t;
    t.id = "s" + std::to_string(100000 + i);
    if (wanted[i] == Label::INFORMATIVE) {
      t.text = fill_template(kPositiveTemplates[text_rng.next_index(kPositiveTemplates.size())],
                             text_rng);
    } else {
      t.text = fill_template(kNegativeTemplates[text_rng.next_index(kNegativeTemplates.size())],
                             text_rng);
    }
    Label label = wanted[i];
    if (noise_rate > 0.0 && noise_rng.next_unit() < noise_rate) {
      label = label == Label::INFORMATIVE ? Label::UNINFORMATIVE : Label::INFORMATIVE;
    }
    t.label = label;
    data.items.push_back(std::move(t));
  }
  return data;
}

}  // namespace advtext
