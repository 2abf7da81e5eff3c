#include "advtext/pipeline.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "advtext/emoji_table.hpp"
#include "advtext/evalkit.hpp"
#include "advtext/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace advtext {

namespace {

// probabilities round-trip exactly through 17 significant digits
std::string format_prob(double p) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", p);
  return buf;
}

void write_prob_file(const fs::path& path, const std::vector<std::string>& ids,
                     const std::vector<double>& probs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::io_error, "cannot write '" + path.string() + "'");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i] << '\t' << format_prob(probs[i]) << '\n';
  }
  if (!out) throw Error(errc::io_error, "write failed for '" + path.string() + "'");
}

std::pair<std::vector<std::string>, std::vector<double>> read_prob_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::io_error, "cannot open '" + path.string() + "'");
  std::vector<std::string> ids;
  std::vector<double> probs;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(errc::malformed_row, "'" + path.string() + "': missing tab in prediction row");
    }
    ids.push_back(line.substr(0, tab));
    try {
      probs.push_back(std::stod(line.substr(tab + 1)));
    } catch (const std::exception&) {
      throw Error(errc::malformed_row, "'" + path.string() + "': bad probability value");
    }
  }
  if (ids.empty()) throw Error(errc::empty_file, "'" + path.string() + "' has no rows");
  return {std::move(ids), std::move(probs)};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.patience = j.value("patience", cfg.patience);
  cfg.tolerance = j.value("tolerance", cfg.tolerance);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.epsilon = j.value("epsilon", cfg.epsilon);
  cfg.adversarial = j.value("adversarial", cfg.adversarial);
  cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
  cfg.adam_beta1 = j.value("adam_beta1", cfg.adam_beta1);
  cfg.adam_beta2 = j.value("adam_beta2", cfg.adam_beta2);
  cfg.adam_eps = j.value("adam_eps", cfg.adam_eps);
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

json train_config_to_json(const TrainConfig& cfg) {
  return json{
      {"epochs", cfg.epochs},
      {"patience", cfg.patience},
      {"tolerance", cfg.tolerance},
      {"learning_rate", cfg.learning_rate},
      {"batch_size", cfg.batch_size},
      {"epsilon", cfg.epsilon},
      {"adversarial", cfg.adversarial},
      {"weight_decay", cfg.weight_decay},
      {"adam_beta1", cfg.adam_beta1},
      {"adam_beta2", cfg.adam_beta2},
      {"adam_eps", cfg.adam_eps},
      {"seed", cfg.seed},
  };
}

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig cfg;
  try {
    cfg.dataset_path = j.at("dataset").get<std::string>();
    cfg.emoji_table_path = j.at("emoji_table").get<std::string>();
    cfg.k = j.value("k", cfg.k);
    cfg.fold_seed = j.value("fold_seed", cfg.fold_seed);
    cfg.output_dir = j.value("output_dir", std::string{});
    if (j.contains("model")) {
      const json& m = j.at("model");
      cfg.model.dim = m.value("dim", cfg.model.dim);
      cfg.model.max_len = m.value("max_len", cfg.model.max_len);
      cfg.model.max_vocab = m.value("max_vocab", cfg.model.max_vocab);
      cfg.model.min_freq = m.value("min_freq", cfg.model.min_freq);
    }
    for (const json& v : j.at("variants")) {
      VariantConfig variant;
      variant.name = v.at("name").get<std::string>();
      if (v.contains("train")) variant.train = train_config_from_json(v.at("train"));
      cfg.variants.push_back(std::move(variant));
    }
  } catch (const json::exception& e) {
    throw Error(errc::bad_config, std::string("experiment config: ") + e.what());
  }

  if (cfg.variants.empty()) throw Error(errc::bad_config, "at least one variant required");
  std::set<std::string> names;
  for (const VariantConfig& v : cfg.variants) {
    if (v.name.empty() || !names.insert(v.name).second) {
      throw Error(errc::bad_config, "variant names must be non-empty and unique");
    }
  }
  return cfg;
}

json experiment_config_to_json(const ExperimentConfig& cfg) {
  json variants = json::array();
  for (const VariantConfig& v : cfg.variants) {
    variants.push_back(json{{"name", v.name}, {"train", train_config_to_json(v.train)}});
  }
  return json{
      {"dataset", cfg.dataset_path},
      {"emoji_table", cfg.emoji_table_path},
      {"k", cfg.k},
      {"fold_seed", cfg.fold_seed},
      {"model",
       {{"dim", cfg.model.dim},
        {"max_len", cfg.model.max_len},
        {"max_vocab", cfg.model.max_vocab},
        {"min_freq", cfg.model.min_freq}}},
      {"variants", variants},
  };
}

json threshold_to_json(const ThresholdReport& r) {
  return json{{"threshold", r.threshold},
              {"f1", r.f1_at_threshold},
              {"candidates", r.candidates_examined}};
}

ThresholdReport threshold_from_json(const json& j) {
  ThresholdReport r;
  r.threshold = j.at("threshold").get<double>();
  r.f1_at_threshold = j.at("f1").get<double>();
  r.candidates_examined = j.at("candidates").get<std::size_t>();
  return r;
}

json manifest_to_json(const RunManifest& m) {
  json variants = json::array();
  for (const VariantSummary& v : m.variants) {
    json folds = json::array();
    for (const FoldArtifact& f : v.folds) {
      folds.push_back(json{
          {"fold", f.fold},
          {"checkpoint", f.checkpoint_path},
          {"history", f.history_path},
          {"oof", f.oof_path},
          {"vocab_fingerprint", f.vocab_fingerprint},
          {"best_epoch", f.best_epoch},
          {"stopped_epoch", f.stopped_epoch},
      });
    }
    variants.push_back(json{
        {"name", v.name},
        {"folds", folds},
        {"oof", v.oof_path},
        {"threshold", threshold_to_json(v.threshold)},
    });
  }
  return json{
      {"format_version", 1},
      {"config", experiment_config_to_json(m.config)},
      {"folds_file", m.folds_path},
      {"dataset_size", m.dataset_size},
      {"positives", m.positives},
      {"variants", variants},
      {"ensemble", {{"oof", m.ensemble_oof_path}, {"threshold", threshold_to_json(m.ensemble_threshold)}}},
  };
}

RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  try {
    if (j.at("format_version").get<int>() != 1) {
      throw Error(errc::bad_config, "unsupported manifest format version");
    }
    m.config = experiment_config_from_json(j.at("config"));
    m.folds_path = j.at("folds_file").get<std::string>();
    m.dataset_size = j.at("dataset_size").get<std::size_t>();
    m.positives = j.at("positives").get<long>();
    for (const json& vj : j.at("variants")) {
      VariantSummary v;
      v.name = vj.at("name").get<std::string>();
      for (const json& fj : vj.at("folds")) {
        FoldArtifact f;
        f.fold = fj.at("fold").get<int>();
        f.checkpoint_path = fj.at("checkpoint").get<std::string>();
        f.history_path = fj.at("history").get<std::string>();
        f.oof_path = fj.at("oof").get<std::string>();
        f.vocab_fingerprint = fj.at("vocab_fingerprint").get<std::uint64_t>();
        f.best_epoch = fj.at("best_epoch").get<int>();
        f.stopped_epoch = fj.at("stopped_epoch").get<int>();
        v.folds.push_back(std::move(f));
      }
      v.oof_path = vj.at("oof").get<std::string>();
      v.threshold = threshold_from_json(vj.at("threshold"));
      m.variants.push_back(std::move(v));
    }
    m.ensemble_oof_path = j.at("ensemble").at("oof").get<std::string>();
    m.ensemble_threshold = threshold_from_json(j.at("ensemble").at("threshold"));
  } catch (const json::exception& e) {
    throw Error(errc::bad_config, std::string("manifest: ") + e.what());
  }
  return m;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::io_error, "cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(errc::bad_config, std::string("config parse: ") + e.what());
  }
  return experiment_config_from_json(j);
}

void save_manifest(const RunManifest& manifest, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::io_error, "cannot write manifest '" + path + "'");
  out << manifest_to_json(manifest).dump(2) << '\n';
  if (!out) throw Error(errc::io_error, "write failed for manifest '" + path + "'");
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::io_error, "cannot open manifest '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(errc::bad_config, std::string("manifest parse: ") + e.what());
  }
  return manifest_from_json(j);
}

namespace {

struct FoldOutcome {
  FoldArtifact artifact;
  std::vector<std::string> oof_ids;
  std::vector<double> oof_probs;
  bool trained = false;
};

// Everything that influences a fold's result; resume refuses artifacts whose
// key differs (stale run directory from another config).
std::uint64_t fold_config_key(const ExperimentConfig& cfg, const TrainConfig& train,
                              int fold_index) {
  json j{{"dataset", cfg.dataset_path},
         {"k", cfg.k},
         {"fold_seed", cfg.fold_seed},
         {"fold", fold_index},
         {"model",
          {{"dim", cfg.model.dim},
           {"max_len", cfg.model.max_len},
           {"max_vocab", cfg.model.max_vocab},
           {"min_freq", cfg.model.min_freq}}},
         {"train", train_config_to_json(train)}};
  const std::string dump = j.dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (char c : dump) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

FoldOutcome run_or_load_fold(const fs::path& run_dir, const ExperimentConfig& experiment,
                             const std::string& variant_name, int fold_index,
                             const Dataset& train, const Dataset& valid,
                             const ModelSection& model, const TrainConfig& cfg,
                             ExecPolicy policy) {
  const fs::path fold_dir = run_dir / variant_name / ("fold" + std::to_string(fold_index));
  const fs::path rel = fs::path(variant_name) / ("fold" + std::to_string(fold_index));
  const std::uint64_t config_key = fold_config_key(experiment, cfg, fold_index);

  FoldOutcome out;
  out.artifact.fold = fold_index;
  out.artifact.checkpoint_path = (rel / "checkpoint.bin").generic_string();
  out.artifact.history_path = (rel / "history.tsv").generic_string();
  out.artifact.oof_path = (rel / "oof.tsv").generic_string();

  const fs::path marker = fold_dir / "fold.json";
  if (fs::exists(marker) && fs::exists(fold_dir / "checkpoint.bin") &&
      fs::exists(fold_dir / "history.tsv") && fs::exists(fold_dir / "oof.tsv")) {
    std::ifstream in(marker);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw Error(errc::bad_config, "fold marker '" + marker.string() + "': " + e.what());
    }
    if (j.value("config_key", std::uint64_t{0}) == config_key) {
      // resume: artifacts are complete and match this config, reuse them
      try {
        out.artifact.vocab_fingerprint = j.at("vocab_fingerprint").get<std::uint64_t>();
        out.artifact.best_epoch = j.at("best_epoch").get<int>();
        out.artifact.stopped_epoch = j.at("stopped_epoch").get<int>();
      } catch (const json::exception& e) {
        throw Error(errc::bad_config, "fold marker '" + marker.string() + "': " + e.what());
      }
      auto [ids, probs] = read_prob_file(fold_dir / "oof.tsv");
      out.oof_ids = std::move(ids);
      out.oof_probs = std::move(probs);
      return out;
    }
  }

  const Vocab vocab = build_vocab(train, model.min_freq, model.max_vocab);
  ModelHyper hyper;
  hyper.dim = model.dim;
  hyper.max_len = model.max_len;
  hyper.vocab_size = vocab.size();

  TrainConfig fold_cfg = cfg;
  fold_cfg.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(fold_index));
  const FoldResult result = train_fold(train, valid, vocab, hyper, fold_cfg, policy);

  fs::create_directories(fold_dir);
  save_checkpoint(result.best_params, vocab, (fold_dir / "checkpoint.bin").string());

  std::ofstream history(fold_dir / "history.tsv", std::ios::binary);
  if (!history) throw Error(errc::io_error, "cannot write history for fold " + std::to_string(fold_index));
  for (std::size_t e = 0; e < result.f1_history.size(); ++e) {
    history << (e + 1) << '\t' << format_prob(result.f1_history[e]) << '\n';
  }
  history.close();

  write_prob_file(fold_dir / "oof.tsv", result.oof_ids, result.oof_probs);

  out.artifact.vocab_fingerprint = vocab.fingerprint();
  out.artifact.best_epoch = result.best_epoch;
  out.artifact.stopped_epoch = result.stopped_epoch;
  out.oof_ids = result.oof_ids;
  out.oof_probs = result.oof_probs;
  out.trained = true;

  // marker written last: its presence means the fold is complete
  json j{{"config_key", config_key},
         {"vocab_fingerprint", out.artifact.vocab_fingerprint},
         {"best_epoch", out.artifact.best_epoch},
         {"stopped_epoch", out.artifact.stopped_epoch}};
  std::ofstream marker_out(marker, std::ios::binary);
  marker_out << j.dump(2) << '\n';
  if (!marker_out) throw Error(errc::io_error, "cannot write fold marker");
  return out;
}

}  // namespace

RunManifest run_cv(const ExperimentConfig& cfg, ExecPolicy policy) {
  if (cfg.output_dir.empty()) throw Error(errc::bad_config, "output_dir required");
  if (cfg.variants.empty()) throw Error(errc::bad_config, "at least one variant required");

  const fs::path run_dir(cfg.output_dir);
  fs::create_directories(run_dir);

  const EmojiTable emoji = load_emoji_table(cfg.emoji_table_path);
  Dataset data = load_tsv(cfg.dataset_path, /*has_labels=*/true);
  for (Tweet& t : data.items) t.text = preprocess_text(t.text, emoji);

  const FoldPlan plan = stratified_folds(data, cfg.k, cfg.fold_seed);
  {
    std::ofstream folds_out(run_dir / "folds.tsv", std::ios::binary);
    if (!folds_out) throw Error(errc::io_error, "cannot write folds.tsv");
    for (std::size_t i = 0; i < data.size(); ++i) {
      folds_out << data.items[i].id << '\t' << plan.assignment[i] << '\n';
    }
  }

  std::vector<Label> gold(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) gold[i] = *data.items[i].label;

  RunManifest manifest;
  manifest.config = cfg;
  manifest.config.output_dir.clear();  // manifests compare equal across run dirs
  manifest.folds_path = "folds.tsv";
  manifest.dataset_size = data.size();
  manifest.positives = data.positive_count();

  std::vector<std::vector<double>> variant_oofs;
  for (const VariantConfig& variant : cfg.variants) {
    VariantSummary summary;
    summary.name = variant.name;

    // full OOF vector in dataset order; each sample predicted by the one
    // fold model that never saw it
    std::vector<double> oof(data.size(), -1.0);
    for (int fold = 0; fold < cfg.k; ++fold) {
      Dataset train_split{data.name + "-train", {}};
      Dataset valid_split{data.name + "-valid", {}};
      for (std::size_t i = 0; i < data.size(); ++i) {
        (plan.assignment[i] == fold ? valid_split : train_split).items.push_back(data.items[i]);
      }
      FoldOutcome outcome = run_or_load_fold(run_dir, cfg, variant.name, fold, train_split,
                                             valid_split, cfg.model, variant.train, policy);
      if (outcome.trained) manifest.folds_trained += 1;

      // fill by id position; ids inside one fold keep dataset order
      std::size_t cursor = 0;
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (plan.assignment[i] != fold) continue;
        if (cursor >= outcome.oof_ids.size() || outcome.oof_ids[cursor] != data.items[i].id) {
          throw Error(errc::misaligned_ids,
                      "fold artifact ids do not match the fold plan (stale run directory?)");
        }
        oof[i] = outcome.oof_probs[cursor];
        ++cursor;
      }
      if (cursor != outcome.oof_ids.size()) {
        throw Error(errc::misaligned_ids, "fold artifact has extra predictions");
      }
      summary.folds.push_back(outcome.artifact);
    }

    std::vector<std::string> all_ids(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) all_ids[i] = data.items[i].id;
    summary.oof_path = variant.name + "/oof_full.tsv";
    write_prob_file(run_dir / summary.oof_path, all_ids, oof);
    summary.threshold = optimize_threshold(oof, gold);

    variant_oofs.push_back(std::move(oof));
    manifest.variants.push_back(std::move(summary));
  }

  const std::vector<double> ensemble_oof = model_average(variant_oofs);
  std::vector<std::string> all_ids(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) all_ids[i] = data.items[i].id;
  manifest.ensemble_oof_path = "ensemble_oof.tsv";
  write_prob_file(run_dir / manifest.ensemble_oof_path, all_ids, ensemble_oof);
  manifest.ensemble_threshold = optimize_threshold(ensemble_oof, gold);

  save_manifest(manifest, (run_dir / "manifest.json").string());
  return manifest;
}

std::vector<double> predict_unlabeled(const RunManifest& manifest, const std::string& run_dir,
                                      const Dataset& data, const std::string& out_path,
                                      ExecPolicy policy) {
  const fs::path base(run_dir);
  const EmojiTable emoji = load_emoji_table(manifest.config.emoji_table_path);

  std::vector<std::string> ids;
  ids.reserve(data.size());
  std::vector<std::string> clean_texts;
  clean_texts.reserve(data.size());
  for (const Tweet& t : data.items) {
    ids.push_back(t.id);
    clean_texts.push_back(preprocess_text(t.text, emoji));
  }

  std::vector<std::vector<double>> per_variant;
  for (const VariantSummary& variant : manifest.variants) {
    PredictionMatrix folds_matrix;
    for (const FoldArtifact& artifact : variant.folds) {
      const Checkpoint ck = load_checkpoint((base / artifact.checkpoint_path).string());
      if (ck.vocab.fingerprint() != artifact.vocab_fingerprint) {
        throw Error(errc::vocab_mismatch,
                    "checkpoint vocabulary differs from the manifest for variant '" +
                        variant.name + "' fold " + std::to_string(artifact.fold));
      }
      // each checkpoint encodes with its own fold vocabulary
      std::vector<std::vector<int>> encoded(data.size());
      for (std::size_t i = 0; i < data.size(); ++i) {
        encoded[i] = encode(clean_texts[i], ck.vocab, ck.params.hyper.max_len);
      }
      folds_matrix.add_run(variant.name + "/fold" + std::to_string(artifact.fold), ids,
                           predict_probs(ck.params, encoded, policy));
    }
    per_variant.push_back(fold_average(folds_matrix));
  }

  const std::vector<double> ensembled = model_average(per_variant);
  const std::vector<Label> labels = apply_threshold(ensembled, manifest.ensemble_threshold.threshold);

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw Error(errc::io_error, "cannot write '" + out_path + "'");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i] << '\t' << label_name(labels[i]) << '\n';
  }
  if (!out) throw Error(errc::io_error, "write failed for '" + out_path + "'");
  return ensembled;
}

}  // namespace advtext
