#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "advtext/advtrain.hpp"
#include "advtext/corpus.hpp"
#include "advtext/emoji_table.hpp"
#include "advtext/ensemble.hpp"
#include "advtext/evalkit.hpp"
#include "advtext/pipeline.hpp"
#include "advtext/preprocess.hpp"
#include "advtext/textmodel.hpp"

namespace fs = std::filesystem;
using namespace advtext;

namespace {

std::string format_prob(double p) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", p);
  return buf;
}

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::pair<std::vector<std::string>, std::vector<double>> read_prob_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::io_error, "cannot open '" + path + "'");
  std::vector<std::string> ids;
  std::vector<double> probs;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) throw Error(errc::malformed_row, "'" + path + "': missing tab");
    ids.push_back(line.substr(0, tab));
    try {
      probs.push_back(std::stod(line.substr(tab + 1)));
    } catch (const std::exception&) {
      throw Error(errc::malformed_row, "'" + path + "': bad probability");
    }
  }
  if (ids.empty()) throw Error(errc::empty_file, "'" + path + "' has no rows");
  return {std::move(ids), std::move(probs)};
}

std::map<std::string, Label> read_label_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::io_error, "cannot open '" + path + "'");
  std::map<std::string, Label> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) throw Error(errc::malformed_row, "'" + path + "': missing tab");
    const std::string id = line.substr(0, tab);
    if (!labels.emplace(id, parse_label(line.substr(tab + 1))).second) {
      throw Error(errc::duplicate_id, "id '" + id + "' appears more than once in '" + path + "'");
    }
  }
  if (labels.empty()) throw Error(errc::empty_file, "'" + path + "' has no rows");
  return labels;
}

// gold aligned to the given id order
std::vector<Label> gold_for_ids(const Dataset& gold, const std::vector<std::string>& ids) {
  std::map<std::string, Label> by_id;
  for (const Tweet& t : gold.items) {
    if (!t.label) throw Error(errc::unknown_label, "gold dataset has unlabeled items");
    by_id[t.id] = *t.label;
  }
  std::vector<Label> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(errc::misaligned_ids, "id '" + id + "' missing from gold");
    out.push_back(it->second);
  }
  return out;
}

void write_labels(const std::string& path, const std::vector<std::string>& ids,
                  const std::vector<Label>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::io_error, "cannot write '" + path + "'");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i] << '\t' << label_name(labels[i]) << '\n';
  }
}

int run_app(int argc, char** argv) {
  CLI::App app{"informative-tweet classification: preprocessing, adversarial training, "
               "cross-validation ensembling and analysis"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may appear after the subcommand
  bool serial = false;
  app.add_flag("--serial", serial, "run batch kernels on a single thread (serial reference)");
  auto policy = [&serial] { return serial ? ExecPolicy::Serial : ExecPolicy::OpenMP; };

  // run
  auto* cmd_run = app.add_subcommand("run", "run the full cross-validation experiment");
  std::string run_config;
  std::string run_output_override;
  cmd_run->add_option("--config", run_config, "experiment config JSON")->required();
  cmd_run->add_option("--output-dir", run_output_override, "override the config output_dir");

  // predict
  auto* cmd_predict = app.add_subcommand("predict", "label a dataset with a finished run");
  std::string predict_manifest, predict_in, predict_out;
  bool predict_labeled = false;
  cmd_predict->add_option("--manifest", predict_manifest, "manifest.json of a finished run")->required();
  cmd_predict->add_option("--in", predict_in, "input TSV")->required();
  cmd_predict->add_option("--out", predict_out, "output TSV (id\\tlabel)")->required();
  cmd_predict->add_flag("--labeled", predict_labeled, "input carries a label column (ignored)");

  // preprocess
  auto* cmd_pre = app.add_subcommand("preprocess", "clean tweet text");
  std::string pre_in, pre_out, pre_emoji;
  bool pre_unlabeled = false;
  cmd_pre->add_option("--in", pre_in)->required();
  cmd_pre->add_option("--out", pre_out)->required();
  cmd_pre->add_option("--emoji-table", pre_emoji)->required();
  cmd_pre->add_flag("--unlabeled", pre_unlabeled, "input has no label column");

  // folds
  auto* cmd_folds = app.add_subcommand("folds", "compute a stratified fold assignment");
  std::string folds_in, folds_out;
  int folds_k = 5;
  std::uint64_t folds_seed = 0;
  cmd_folds->add_option("--in", folds_in)->required();
  cmd_folds->add_option("--out", folds_out)->required();
  cmd_folds->add_option("--k", folds_k);
  cmd_folds->add_option("--seed", folds_seed);

  // train-fold
  auto* cmd_train = app.add_subcommand("train-fold", "train a single cross-validation fold");
  std::string tf_data, tf_folds, tf_config, tf_out_dir;
  int tf_fold = 0;
  int tf_dim = 32, tf_max_len = 64, tf_max_vocab = 8000, tf_min_freq = 2;
  cmd_train->add_option("--data", tf_data, "preprocessed labeled TSV")->required();
  cmd_train->add_option("--folds", tf_folds, "fold assignment TSV from `folds`")->required();
  cmd_train->add_option("--fold", tf_fold, "held-out fold index")->required();
  cmd_train->add_option("--train-config", tf_config, "TrainConfig JSON (optional)");
  cmd_train->add_option("--out-dir", tf_out_dir)->required();
  cmd_train->add_option("--dim", tf_dim);
  cmd_train->add_option("--max-len", tf_max_len);
  cmd_train->add_option("--max-vocab", tf_max_vocab);
  cmd_train->add_option("--min-freq", tf_min_freq);

  // ensemble
  auto* cmd_ens = app.add_subcommand("ensemble", "average prediction files");
  std::string ens_level = "fold", ens_out;
  std::vector<std::string> ens_inputs;
  cmd_ens->add_option("--level", ens_level)->check(CLI::IsMember({"fold", "model"}));
  cmd_ens->add_option("--out", ens_out)->required();
  cmd_ens->add_option("inputs", ens_inputs, "prediction files (id\\tprob)")->required()->expected(-1);

  // tune-threshold
  auto* cmd_tune = app.add_subcommand("tune-threshold", "optimize the decision threshold on OOF predictions");
  std::string tune_probs, tune_gold;
  cmd_tune->add_option("--probs", tune_probs, "prediction file (id\\tprob)")->required();
  cmd_tune->add_option("--gold", tune_gold, "labeled TSV")->required();

  // evaluate
  auto* cmd_eval = app.add_subcommand("evaluate", "positive-class precision/recall/F1");
  std::string eval_pred, eval_gold;
  cmd_eval->add_option("--pred", eval_pred, "prediction file (id\\tlabel)")->required();
  cmd_eval->add_option("--gold", eval_gold, "labeled TSV")->required();

  // analyze
  auto* cmd_analyze = app.add_subcommand("analyze", "loss ranking and cross-ensemble disagreement");
  std::string an_gold, an_a, an_b, an_out_dir = ".";
  double an_ta = 0.5, an_tb = 0.5;
  std::size_t an_k = 10;
  cmd_analyze->add_option("--gold", an_gold, "labeled TSV")->required();
  cmd_analyze->add_option("--probs-a", an_a, "prediction file (id\\tprob)")->required();
  cmd_analyze->add_option("--probs-b", an_b, "second prediction file; enables the disagreement report");
  cmd_analyze->add_option("--threshold-a", an_ta);
  cmd_analyze->add_option("--threshold-b", an_tb);
  cmd_analyze->add_option("--top-k", an_k);
  cmd_analyze->add_option("--out-dir", an_out_dir);

  // synth
  auto* cmd_synth = app.add_subcommand("synth", "generate a synthetic keyword-separable corpus");
  std::string synth_out;
  int synth_n = 2000;
  double synth_pos = 0.47, synth_noise = 0.0;
  std::uint64_t synth_seed = 0;
  cmd_synth->add_option("--out", synth_out)->required();
  cmd_synth->add_option("--n", synth_n);
  cmd_synth->add_option("--positive-rate", synth_pos);
  cmd_synth->add_option("--noise-rate", synth_noise);
  cmd_synth->add_option("--seed", synth_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // usage error
  }

  if (*cmd_run) {
    ExperimentConfig cfg = load_experiment_config(run_config);
    if (!run_output_override.empty()) cfg.output_dir = run_output_override;
    const RunManifest manifest = run_cv(cfg, policy());
    std::cout << "run complete: " << manifest.folds_trained << " folds trained, "
              << (manifest.variants.size() * static_cast<std::size_t>(cfg.k) -
                  static_cast<std::size_t>(manifest.folds_trained))
              << " reused\n";
    for (const VariantSummary& v : manifest.variants) {
      std::cout << "variant " << v.name << ": threshold " << format_prob(v.threshold.threshold)
                << " f1 " << fixed6(v.threshold.f1_at_threshold) << "\n";
    }
    std::cout << "ensemble: threshold " << format_prob(manifest.ensemble_threshold.threshold)
              << " f1 " << fixed6(manifest.ensemble_threshold.f1_at_threshold) << "\n";
    std::cout << "manifest: " << (fs::path(cfg.output_dir) / "manifest.json").string() << "\n";
  } else if (*cmd_predict) {
    const RunManifest manifest = load_manifest(predict_manifest);
    const std::string run_dir = fs::path(predict_manifest).parent_path().string();
    const Dataset data = load_tsv(predict_in, predict_labeled);
    predict_unlabeled(manifest, run_dir.empty() ? "." : run_dir, data, predict_out, policy());
    std::cout << "wrote " << data.size() << " predictions to " << predict_out << "\n";
  } else if (*cmd_pre) {
    const EmojiTable table = load_emoji_table(pre_emoji);
    Dataset data = load_tsv(pre_in, !pre_unlabeled);
    for (Tweet& t : data.items) t.text = preprocess_text(t.text, table);
    write_tsv(data, pre_out);
    std::cout << "preprocessed " << data.size() << " tweets\n";
  } else if (*cmd_folds) {
    const Dataset data = load_tsv(folds_in, /*has_labels=*/true);
    const FoldPlan plan = stratified_folds(data, folds_k, folds_seed);
    std::ofstream out(folds_out, std::ios::binary);
    if (!out) throw Error(errc::io_error, "cannot write '" + folds_out + "'");
    for (std::size_t i = 0; i < data.size(); ++i) {
      out << data.items[i].id << '\t' << plan.assignment[i] << '\n';
    }
    std::cout << "assigned " << data.size() << " samples to " << folds_k << " folds\n";
  } else if (*cmd_train) {
    const Dataset data = load_tsv(tf_data, /*has_labels=*/true);
    std::map<std::string, int> fold_of;
    {
      std::ifstream in(tf_folds, std::ios::binary);
      if (!in) throw Error(errc::io_error, "cannot open '" + tf_folds + "'");
      std::string line;
      while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) throw Error(errc::malformed_row, "bad folds row");
        fold_of[line.substr(0, tab)] = std::stoi(line.substr(tab + 1));
      }
    }
    Dataset train_split{"train", {}};
    Dataset valid_split{"valid", {}};
    for (const Tweet& t : data.items) {
      auto it = fold_of.find(t.id);
      if (it == fold_of.end()) throw Error(errc::misaligned_ids, "id '" + t.id + "' missing from folds file");
      (it->second == tf_fold ? valid_split : train_split).items.push_back(t);
    }

    TrainConfig cfg;
    if (!tf_config.empty()) {
      std::ifstream in(tf_config);
      if (!in) throw Error(errc::io_error, "cannot open '" + tf_config + "'");
      nlohmann::json j;
      try {
        in >> j;
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
      } catch (const nlohmann::json::exception& e) {
        throw Error(errc::bad_config, std::string("train config: ") + e.what());
      }
    }

    const Vocab vocab = build_vocab(train_split, tf_min_freq, tf_max_vocab);
    ModelHyper hyper{tf_dim, tf_max_len, vocab.size()};
    const FoldResult result = train_fold(train_split, valid_split, vocab, hyper, cfg, policy());

    fs::create_directories(tf_out_dir);
    save_checkpoint(result.best_params, vocab, (fs::path(tf_out_dir) / "checkpoint.bin").string());
    std::ofstream history(fs::path(tf_out_dir) / "history.tsv", std::ios::binary);
    for (std::size_t e = 0; e < result.f1_history.size(); ++e) {
      history << (e + 1) << '\t' << format_prob(result.f1_history[e]) << '\n';
    }
    std::ofstream oof(fs::path(tf_out_dir) / "oof.tsv", std::ios::binary);
    for (std::size_t i = 0; i < result.oof_ids.size(); ++i) {
      oof << result.oof_ids[i] << '\t' << format_prob(result.oof_probs[i]) << '\n';
    }
    std::cout << "fold " << tf_fold << ": best epoch " << result.best_epoch << ", f1 "
              << fixed6(result.f1_history[static_cast<std::size_t>(result.best_epoch) - 1]) << "\n";
  } else if (*cmd_ens) {
    PredictionMatrix matrix;
    for (std::size_t r = 0; r < ens_inputs.size(); ++r) {
      auto [ids, probs] = read_prob_file(ens_inputs[r]);
      matrix.add_run("run" + std::to_string(r) + ":" + ens_inputs[r], ids, std::move(probs));
    }
    const std::vector<double> mean = fold_average(matrix);  // both levels are equal-weight means
    std::ofstream out(ens_out, std::ios::binary);
    if (!out) throw Error(errc::io_error, "cannot write '" + ens_out + "'");
    for (std::size_t i = 0; i < matrix.ids.size(); ++i) {
      out << matrix.ids[i] << '\t' << format_prob(mean[i]) << '\n';
    }
    std::cout << "averaged " << ens_inputs.size() << " runs at " << ens_level << " level\n";
  } else if (*cmd_tune) {
    auto [ids, probs] = read_prob_file(tune_probs);
    const Dataset gold = load_tsv(tune_gold, /*has_labels=*/true);
    const ThresholdReport report = optimize_threshold(probs, gold_for_ids(gold, ids));
    std::cout << "threshold " << format_prob(report.threshold) << "\n";
    std::cout << "f1 " << fixed6(report.f1_at_threshold) << "\n";
    std::cout << "candidates " << report.candidates_examined << "\n";
  } else if (*cmd_eval) {
    const std::map<std::string, Label> pred_by_id = read_label_file(eval_pred);
    const Dataset gold = load_tsv(eval_gold, /*has_labels=*/true);
    std::vector<Label> pred, gold_labels;
    for (const Tweet& t : gold.items) {
      auto it = pred_by_id.find(t.id);
      if (it == pred_by_id.end()) {
        throw Error(errc::misaligned_ids, "id '" + t.id + "' missing from predictions");
      }
      pred.push_back(it->second);
      gold_labels.push_back(*t.label);
    }
    const PrfResult r = precision_recall_f1(pred, gold_labels);
    std::cout << "tp " << r.counts.tp << "\n";
    std::cout << "fp " << r.counts.fp << "\n";
    std::cout << "fn " << r.counts.fn << "\n";
    std::cout << "tn " << r.counts.tn << "\n";
    std::cout << "precision " << fixed6(r.precision) << "\n";
    std::cout << "recall " << fixed6(r.recall) << "\n";
    std::cout << "f1 " << fixed6(r.f1) << "\n";
  } else if (*cmd_analyze) {
    const Dataset gold = load_tsv(an_gold, /*has_labels=*/true);
    auto [ids_a, probs_a] = read_prob_file(an_a);
    const std::vector<Label> gold_a = gold_for_ids(gold, ids_a);
    fs::create_directories(an_out_dir);

    const std::vector<RankedLoss> ranked =
        top_k_losses(probs_a, gold_a, ids_a, std::min(an_k, ids_a.size()));
    std::map<std::string, std::pair<double, Label>> detail;
    for (std::size_t i = 0; i < ids_a.size(); ++i) detail[ids_a[i]] = {probs_a[i], gold_a[i]};
    const fs::path topk_path = fs::path(an_out_dir) / "topk.tsv";
    std::ofstream topk(topk_path, std::ios::binary);
    topk << "id\tloss\tgold\tprob\n";
    for (const RankedLoss& r : ranked) {
      topk << r.id << '\t' << format_prob(r.loss) << '\t' << label_name(detail[r.id].second)
           << '\t' << format_prob(detail[r.id].first) << '\n';
    }
    std::cout << "top-" << ranked.size() << " losses written to " << topk_path.string() << "\n";

    if (!an_b.empty()) {
      auto [ids_b, probs_b] = read_prob_file(an_b);
      if (ids_b != ids_a) throw Error(errc::misaligned_ids, "--probs-a and --probs-b ids differ");
      const DisagreementReport rep =
          disagreement(apply_threshold(probs_a, an_ta), apply_threshold(probs_b, an_tb), gold_a, ids_a);

      const fs::path dis_path = fs::path(an_out_dir) / "disagreement.tsv";
      std::ofstream dis(dis_path, std::ios::binary);
      auto join = [](const std::vector<std::string>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (i > 0) s += ',';
          s += v[i];
        }
        return s;
      };
      dis << "cell\tcount\tids\n";
      dis << "errors_a\t" << rep.errors_a << '\t' << join(rep.errors_a_ids) << '\n';
      dis << "errors_b\t" << rep.errors_b << '\t' << join(rep.errors_b_ids) << '\n';
      dis << "a_wrong_b_right\t" << rep.a_wrong_b_right << '\t' << join(rep.a_wrong_b_right_ids) << '\n';
      dis << "b_wrong_a_right\t" << rep.b_wrong_a_right << '\t' << join(rep.b_wrong_a_right_ids) << '\n';

      std::cout << "ensemble A misclassified " << rep.errors_a << " samples, ensemble B "
                << rep.errors_b << "\n";
      std::cout << "of A's errors, " << rep.a_wrong_b_right << " were correct under B; of B's errors, "
                << rep.b_wrong_a_right << " were correct under A\n";
      std::cout << "disagreement table written to " << dis_path.string() << "\n";
    }
  } else if (*cmd_synth) {
    const Dataset data = synth_corpus(synth_n, synth_pos, synth_noise, synth_seed);
    write_tsv(data, synth_out);
    std::cout << "wrote " << data.size() << " tweets (" << data.positive_count()
              << " positive) to " << synth_out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_app(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_numeric_error(e.code()) ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
