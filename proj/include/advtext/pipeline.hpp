#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advtext/advtrain.hpp"
#include "advtext/corpus.hpp"
#include "advtext/ensemble.hpp"

namespace advtext {

struct ModelSection {
  int dim = 32;
  int max_len = 64;
  int max_vocab = 8000;
  int min_freq = 2;
};

struct VariantConfig {
  std::string name;
  TrainConfig train;
};

struct ExperimentConfig {
  std::string dataset_path;
  std::string emoji_table_path;
  int k = 5;
  std::uint64_t fold_seed = 0;
  std::string output_dir;
  ModelSection model;
  std::vector<VariantConfig> variants;  // non-empty, unique names
};

ExperimentConfig load_experiment_config(const std::string& path);

struct FoldArtifact {
  int fold = 0;
  // paths relative to the run directory
  std::string checkpoint_path;
  std::string history_path;  // epoch\tf1 rows
  std::string oof_path;      // id\tprob rows
  std::uint64_t vocab_fingerprint = 0;
  int best_epoch = 0;
  int stopped_epoch = 0;
};

struct VariantSummary {
  std::string name;
  std::vector<FoldArtifact> folds;
  std::string oof_path;  // assembled full out-of-fold vector, dataset order
  ThresholdReport threshold;
};

// Everything needed to reproduce or reuse a run. Serialized as JSON with a
// format-version field; all paths are relative to the directory holding the
// manifest, so a run directory can be moved or compared byte-for-byte.
struct RunManifest {
  ExperimentConfig config;  // snapshot; output_dir intentionally cleared
  std::string folds_path;   // id\tfold assignment
  std::size_t dataset_size = 0;
  long positives = 0;
  std::vector<VariantSummary> variants;
  std::string ensemble_oof_path;
  ThresholdReport ensemble_threshold;

  // resume bookkeeping for callers; not serialized
  int folds_trained = 0;
};

// Preprocesses the dataset, builds stratified folds, trains every
// (variant, fold) pair with a per-fold vocabulary, assembles per-variant
// out-of-fold probability vectors, tunes per-variant and model-level
// ensemble thresholds on them, and writes all artifacts plus manifest.json
// under cfg.output_dir. (variant, fold) pairs whose artifacts already exist
// are loaded instead of retrained.
RunManifest run_cv(const ExperimentConfig& cfg, ExecPolicy policy = ExecPolicy::OpenMP);

RunManifest load_manifest(const std::string& path);
void save_manifest(const RunManifest& manifest, const std::string& path);

// Averages all fold checkpoints per variant, then across variants, applies
// the manifest's tuned ensemble threshold and writes id\tlabel rows. Returns
// the ensembled probabilities in data order.
std::vector<double> predict_unlabeled(const RunManifest& manifest, const std::string& run_dir,
                                      const Dataset& data, const std::string& out_path,
                                      ExecPolicy policy = ExecPolicy::OpenMP);

}  // namespace advtext
