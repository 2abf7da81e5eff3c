#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "advtext/emoji_table.hpp"
#include "advtext/evalkit.hpp"
#include "advtext/pipeline.hpp"
#include "advtext/preprocess.hpp"

using namespace advtext;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Fixture {
  fs::path dir;
  ExperimentConfig cfg;

  explicit Fixture(const std::string& name) {
    dir = fs::temp_directory_path() / "advtext_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);

    const Dataset data = synth_corpus(90, 0.5, 0.0, 31);
    write_tsv(data, (dir / "data.tsv").string());

    cfg.dataset_path = (dir / "data.tsv").string();
    cfg.emoji_table_path = std::string(ADVTEXT_DATA_DIR) + "/emoji.tsv";
    cfg.k = 3;
    cfg.fold_seed = 4;
    cfg.output_dir = (dir / "run").string();
    cfg.model = {8, 16, 400, 1};
    VariantConfig plain{"plain", {}};
    plain.train.epochs = 3;
    plain.train.seed = 6;
    VariantConfig adv{"adv", {}};
    adv.train = plain.train;
    adv.train.adversarial = true;
    adv.train.epsilon = 1.0;
    cfg.variants = {plain, adv};
  }
};

std::map<std::string, double> probs_by_id(const fs::path& p) {
  std::map<std::string, double> out;
  std::ifstream in(p, std::ios::binary);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    out[line.substr(0, tab)] = std::stod(line.substr(tab + 1));
  }
  return out;
}

}  // namespace

TEST_CASE("experiment config parsing validates structure") {
  const fs::path dir = fs::temp_directory_path() / "advtext_tests";
  fs::create_directories(dir);
  const fs::path p = dir / "cfg.json";

  std::ofstream(p) << "{ not json";
  CHECK_THROWS_WITH_AS(load_experiment_config(p.string()), doctest::Contains("BadConfig"), Error);

  std::ofstream(p) << R"({"dataset":"d.tsv","emoji_table":"e.tsv","variants":[]})";
  CHECK_THROWS_AS(load_experiment_config(p.string()), Error);

  std::ofstream(p) << R"({"dataset":"d.tsv","emoji_table":"e.tsv",
    "variants":[{"name":"a"},{"name":"a"}]})";
  CHECK_THROWS_WITH_AS(load_experiment_config(p.string()), doctest::Contains("unique"), Error);

  std::ofstream(p) << R"({"dataset":"d.tsv","emoji_table":"e.tsv","k":4,"fold_seed":9,
    "model":{"dim":12,"max_len":20},
    "variants":[{"name":"a","train":{"epochs":3,"adversarial":true,"epsilon":0.5}}]})";
  const ExperimentConfig cfg = load_experiment_config(p.string());
  CHECK(cfg.k == 4);
  CHECK(cfg.model.dim == 12);
  CHECK(cfg.model.max_vocab == 8000);  // default preserved
  CHECK(cfg.variants.size() == 1);
  CHECK(cfg.variants[0].train.adversarial);
  CHECK(cfg.variants[0].train.epsilon == 0.5);
  CHECK(cfg.variants[0].train.epochs == 3);
  CHECK(cfg.variants[0].train.batch_size == 16);  // default preserved
}

TEST_CASE("run_cv produces a complete, self-consistent run directory") {
  Fixture fx("run_cv_basic");
  const RunManifest manifest = run_cv(fx.cfg, ExecPolicy::OpenMP);

  CHECK(manifest.folds_trained == 6);  // 2 variants x 3 folds
  CHECK(manifest.dataset_size == 90);
  REQUIRE(manifest.variants.size() == 2);

  const fs::path run(fx.cfg.output_dir);
  CHECK(fs::exists(run / "manifest.json"));
  CHECK(fs::exists(run / manifest.folds_path));
  CHECK(fs::exists(run / manifest.ensemble_oof_path));
  for (const VariantSummary& v : manifest.variants) {
    CHECK(fs::exists(run / v.oof_path));
    CHECK(v.folds.size() == 3);
    for (const FoldArtifact& f : v.folds) {
      CHECK(fs::exists(run / f.checkpoint_path));
      CHECK(fs::exists(run / f.history_path));
      CHECK(fs::exists(run / f.oof_path));
      CHECK(f.stopped_epoch >= f.best_epoch);
    }
  }

  // OOF integrity: the assembled vector covers every sample exactly once,
  // and each sample's entry comes from the fold holding it out
  const auto full = probs_by_id(run / manifest.variants[0].oof_path);
  CHECK(full.size() == 90);
  std::map<std::string, int> fold_of;
  {
    std::ifstream in(run / manifest.folds_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const std::size_t tab = line.find('\t');
      fold_of[line.substr(0, tab)] = std::stoi(line.substr(tab + 1));
    }
  }
  CHECK(fold_of.size() == 90);
  for (const FoldArtifact& f : manifest.variants[0].folds) {
    for (const auto& [id, prob] : probs_by_id(run / f.oof_path)) {
      CHECK(fold_of.at(id) == f.fold);           // provenance: held-out fold only
      CHECK(full.at(id) == prob);                // assembly copies the fold block
    }
  }

  // vocabulary hygiene: rebuilding the vocab from the fold's training split
  // reproduces the checkpoint's vocabulary
  const EmojiTable emoji = load_emoji_table(fx.cfg.emoji_table_path);
  Dataset data = load_tsv(fx.cfg.dataset_path, true);
  for (Tweet& t : data.items) t.text = preprocess_text(t.text, emoji);
  for (const FoldArtifact& f : manifest.variants[0].folds) {
    Dataset train_split{"t", {}};
    for (const Tweet& t : data.items) {
      if (fold_of.at(t.id) != f.fold) train_split.items.push_back(t);
    }
    const Vocab rebuilt = build_vocab(train_split, fx.cfg.model.min_freq, fx.cfg.model.max_vocab);
    const Checkpoint ck = load_checkpoint((run / f.checkpoint_path).string());
    CHECK(rebuilt.id_to_token == ck.vocab.id_to_token);
    CHECK(rebuilt.fingerprint() == f.vocab_fingerprint);
  }

  // thresholds stored in the manifest are reproducible from the OOF files
  std::vector<Label> gold;
  std::vector<double> ens;
  for (const Tweet& t : data.items) {
    gold.push_back(*t.label);
    ens.push_back(probs_by_id(run / manifest.ensemble_oof_path).at(t.id));
  }
  const ThresholdReport re_tuned = optimize_threshold(ens, gold);
  CHECK(re_tuned.threshold == manifest.ensemble_threshold.threshold);
  CHECK(re_tuned.f1_at_threshold == manifest.ensemble_threshold.f1_at_threshold);
}

TEST_CASE("run_cv twice is byte-identical and resumable") {
  Fixture fx("run_cv_determinism");
  run_cv(fx.cfg, ExecPolicy::OpenMP);

  ExperimentConfig cfg_b = fx.cfg;
  cfg_b.output_dir = (fx.dir / "run_b").string();
  run_cv(cfg_b, ExecPolicy::Serial);  // policy must not affect the bytes

  CHECK(slurp(fs::path(fx.cfg.output_dir) / "manifest.json") ==
        slurp(fs::path(cfg_b.output_dir) / "manifest.json"));
  CHECK(slurp(fs::path(fx.cfg.output_dir) / "ensemble_oof.tsv") ==
        slurp(fs::path(cfg_b.output_dir) / "ensemble_oof.tsv"));
  CHECK(slurp(fs::path(fx.cfg.output_dir) / "plain" / "fold0" / "checkpoint.bin") ==
        slurp(fs::path(cfg_b.output_dir) / "plain" / "fold0" / "checkpoint.bin"));

  // resume: wipe one fold and the manifest; only that fold retrains
  fs::remove_all(fs::path(cfg_b.output_dir) / "adv" / "fold1");
  fs::remove(fs::path(cfg_b.output_dir) / "manifest.json");
  const RunManifest resumed = run_cv(cfg_b, ExecPolicy::OpenMP);
  CHECK(resumed.folds_trained == 1);
  CHECK(slurp(fs::path(fx.cfg.output_dir) / "manifest.json") ==
        slurp(fs::path(cfg_b.output_dir) / "manifest.json"));

  // a changed config refuses stale artifacts and retrains everything
  ExperimentConfig cfg_c = cfg_b;
  cfg_c.variants[0].train.epochs += 1;
  cfg_c.variants[1].train.epochs += 1;
  const RunManifest retrained = run_cv(cfg_c, ExecPolicy::OpenMP);
  CHECK(retrained.folds_trained == 6);
}

TEST_CASE("the manifest config snapshot is sufficient to reproduce the run") {
  Fixture fx("manifest_rerun");
  const RunManifest first = run_cv(fx.cfg, ExecPolicy::OpenMP);

  RunManifest loaded = load_manifest((fs::path(fx.cfg.output_dir) / "manifest.json").string());
  ExperimentConfig snapshot = loaded.config;
  snapshot.output_dir = (fx.dir / "rerun").string();
  const RunManifest second = run_cv(snapshot, ExecPolicy::Serial);

  CHECK(second.ensemble_threshold.threshold == first.ensemble_threshold.threshold);
  CHECK(second.ensemble_threshold.f1_at_threshold == first.ensemble_threshold.f1_at_threshold);
  for (std::size_t v = 0; v < first.variants.size(); ++v) {
    CHECK(second.variants[v].threshold.threshold == first.variants[v].threshold.threshold);
    CHECK(second.variants[v].threshold.f1_at_threshold ==
          first.variants[v].threshold.f1_at_threshold);
  }
  CHECK(slurp(fs::path(fx.cfg.output_dir) / first.ensemble_oof_path) ==
        slurp(fs::path(snapshot.output_dir) / second.ensemble_oof_path));
}

TEST_CASE("identical variants yield identical OOF vectors and ensemble") {
  Fixture fx("run_cv_twins");
  fx.cfg.variants[1] = fx.cfg.variants[0];
  fx.cfg.variants[1].name = "plain_twin";
  const RunManifest manifest = run_cv(fx.cfg, ExecPolicy::OpenMP);

  const fs::path run(fx.cfg.output_dir);
  const auto a = probs_by_id(run / manifest.variants[0].oof_path);
  const auto b = probs_by_id(run / manifest.variants[1].oof_path);
  const auto ens = probs_by_id(run / manifest.ensemble_oof_path);
  CHECK(a == b);
  CHECK(a == ens);  // averaging identical vectors is the identity
}

TEST_CASE("predict_unlabeled applies the manifest threshold deterministically") {
  Fixture fx("predict");
  // a slightly larger fixture so the trained ensemble also generalizes
  const Dataset bigger = synth_corpus(240, 0.5, 0.0, 32);
  write_tsv(bigger, fx.cfg.dataset_path);
  fx.cfg.model.dim = 12;
  const RunManifest manifest = run_cv(fx.cfg, ExecPolicy::OpenMP);
  const std::string run_dir = fx.cfg.output_dir;

  Dataset unlabeled = synth_corpus(25, 0.4, 0.0, 99);
  std::vector<Label> gold;
  for (Tweet& t : unlabeled.items) {
    gold.push_back(*t.label);
    t.label.reset();
  }

  const fs::path out_a = fx.dir / "preds_a.tsv";
  const fs::path out_b = fx.dir / "preds_b.tsv";
  const std::vector<double> probs_a =
      predict_unlabeled(manifest, run_dir, unlabeled, out_a.string(), ExecPolicy::OpenMP);
  const std::vector<double> probs_b =
      predict_unlabeled(manifest, run_dir, unlabeled, out_b.string(), ExecPolicy::Serial);
  CHECK(probs_a == probs_b);
  CHECK(slurp(out_a) == slurp(out_b));  // byte-identical output

  // the written labels are exactly threshold applied to the returned probs
  const std::vector<Label> expect = apply_threshold(probs_a, manifest.ensemble_threshold.threshold);
  std::ifstream in(out_a, std::ios::binary);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    CHECK(line.substr(0, tab) == unlabeled.items[row].id);
    CHECK(line.substr(tab + 1) == label_name(expect[row]));
    ++row;
  }
  CHECK(row == unlabeled.size());

  // the manifest threshold, not 0.5, governs the decision
  RunManifest extreme = manifest;
  extreme.ensemble_threshold.threshold = 0.0;
  predict_unlabeled(extreme, run_dir, unlabeled, out_a.string(), ExecPolicy::OpenMP);
  for (const auto& [id, label] : [&] {
         std::map<std::string, std::string> m;
         std::ifstream f(out_a, std::ios::binary);
         std::string l;
         while (std::getline(f, l)) {
           if (l.empty()) continue;
           const std::size_t tab = l.find('\t');
           m[l.substr(0, tab)] = l.substr(tab + 1);
         }
         return m;
       }()) {
    CHECK(label == "INFORMATIVE");  // threshold 0 marks everything positive
  }

  // sanity: the trained ensemble generalizes to the fresh corpus
  const PrfResult quality = precision_recall_f1(expect, gold);
  CHECK(quality.f1 >= 0.9);
}

TEST_CASE("predict_unlabeled rejects tampered vocab fingerprints") {
  Fixture fx("predict_vocab_mismatch");
  RunManifest manifest = run_cv(fx.cfg, ExecPolicy::OpenMP);
  manifest.variants[0].folds[0].vocab_fingerprint ^= 0xdeadbeef;

  Dataset unlabeled = synth_corpus(5, 0.4, 0.0, 1);
  for (Tweet& t : unlabeled.items) t.label.reset();
  CHECK_THROWS_WITH_AS(predict_unlabeled(manifest, fx.cfg.output_dir, unlabeled,
                                         (fx.dir / "x.tsv").string(), ExecPolicy::OpenMP),
                       doctest::Contains("VocabMismatch"), Error);
}
