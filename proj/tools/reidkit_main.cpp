// Command-line front end: synthesize benchmark data, train a classifier,
// mine pseudo-positives, run method sweeps, and aggregate comparisons.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "reid/experiment.hpp"
#include "reid/io.hpp"
#include "reid/pseudo.hpp"
#include "reid/rng.hpp"
#include "reid/synth.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

int cmd_synth(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed) {
  reid::SynthConfig config;
  if (!config_path.empty()) {
    config = reid::synth_config_from_json(json::parse(reid::read_text(config_path)));
  }
  if (seed) config.seed = *seed;

  const reid::SynthData data = reid::generate(config);
  const fs::path dir(out_dir);
  reid::write_embeddings(dir / "train.jsonl", data.train);
  reid::write_embeddings(dir / "query.jsonl", data.query);
  reid::write_embeddings(dir / "gallery.jsonl", data.gallery);
  reid::write_embeddings(dir / "pool.jsonl", data.pool);
  reid::write_text_atomic(dir / "synth.json",
                          reid::synth_config_to_json(config).dump(2) + "\n");
  std::cout << "wrote " << data.train.size() << " train / " << data.query.size()
            << " query / " << data.gallery.size() << " gallery / "
            << data.pool.size() << " pool records to " << dir << "\n";
  return 0;
}

int cmd_train(const std::string& data_path, const std::string& config_path,
              const std::string& model_out, double val_fraction,
              std::optional<std::uint64_t> seed) {
  reid::TrainConfig config;
  if (!config_path.empty()) {
    config = reid::train_config_from_json(json::parse(reid::read_text(config_path)));
  }
  if (seed) config.seed = *seed;

  const auto [dataset, label_map] =
      reid::canonicalize_labels(reid::read_labeled(data_path));
  reid::SplitSpec spec;
  spec.train_fraction = val_fraction;
  spec.seed = reid::derive_seed(config.seed, "split");
  auto [fit, val] = reid::split(dataset, spec);
  fit.num_identities = dataset.num_identities;

  const auto [model, log] = reid::train(fit, val, config);
  reid::Checkpoint ckpt;
  ckpt.model = model;
  ckpt.seed = config.seed;
  ckpt.config_hash = reid::config_hash_hex(reid::train_config_to_json(config));
  reid::save_checkpoint(model_out, ckpt);

  for (std::size_t e = 0; e < log.epoch_loss.size(); ++e) {
    std::cout << "epoch " << e << " loss " << log.epoch_loss[e];
    if (e < log.epoch_val_accuracy.size()) {
      std::cout << " val_acc " << log.epoch_val_accuracy[e];
    }
    std::cout << "\n";
  }
  std::cout << "saved model to " << model_out << "\n";
  return 0;
}

int cmd_mine(const std::string& model_path, const std::string& data_path,
             const std::string& pool_path, std::size_t k,
             std::uint64_t seed, bool l2_normalize, const std::string& out) {
  const reid::Checkpoint ckpt = reid::load_checkpoint(model_path);
  const auto [dataset, label_map] =
      reid::canonicalize_labels(reid::read_labeled(data_path));
  const reid::UnlabeledPool pool = reid::read_pool(pool_path);

  std::vector<int> labels;
  labels.reserve(dataset.records.size());
  for (const reid::EmbeddingRecord& r : dataset.records) {
    labels.push_back(r.identity);
  }
  const std::vector<reid::MinedPair> mined = reid::mine_nearest(
      reid::extract_features(ckpt.model, dataset.records), labels,
      reid::extract_features(ckpt.model, pool.records), l2_normalize);
  const reid::PseudoPositiveSet selected =
      reid::select_pseudo_positives(mined, k, seed);
  reid::write_pseudo_set(out, selected);
  std::cout << "mined " << mined.size() << " pairs, selected "
            << selected.pairs.size() << " -> " << out << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, bool preset_standard,
            std::optional<std::uint64_t> seed, const std::string& out_dir,
            std::optional<int> repeats) {
  reid::ExperimentConfig config;
  if (preset_standard) {
    config = reid::standard_benchmark_config();
  } else if (!config_path.empty()) {
    config = reid::load_experiment_config(config_path);
  } else {
    std::cerr << "run: need --config or --preset-standard\n";
    return 2;
  }
  if (seed) config.seed = *seed;
  if (!out_dir.empty()) config.out_dir = out_dir;
  if (repeats) config.repeats = *repeats;

  const std::vector<reid::RunRecord> records = reid::run_experiment(config);
  std::cout << reid::compare_csv(reid::compare(records));
  std::cout << "wrote " << records.size() << " records under "
            << config.out_dir << "/runs\n";
  return 0;
}

int cmd_compare(const std::string& dir) {
  std::vector<reid::RunRecord> records;
  std::vector<fs::path> paths;
  const fs::path runs = fs::path(dir) / "runs";
  if (!fs::exists(runs)) {
    std::cerr << "compare: " << runs << " does not exist\n";
    return 2;
  }
  for (const auto& entry : fs::recursive_directory_iterator(runs)) {
    if (entry.is_regular_file() && entry.path().filename() == "record.json") {
      paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  for (const fs::path& p : paths) {
    records.push_back(reid::record_from_json(json::parse(reid::read_text(p))));
  }
  if (records.empty()) {
    std::cerr << "compare: no record.json under " << runs << "\n";
    return 2;
  }
  const std::vector<reid::CompareRow> rows = reid::compare(records);
  reid::write_text_atomic(fs::path(dir) / "compare.csv", reid::compare_csv(rows));
  reid::write_text_atomic(fs::path(dir) / "compare.json",
                          reid::compare_to_json(rows).dump(2) + "\n");
  std::cout << reid::compare_csv(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Person re-ID experiment toolkit: identification classifier, "
               "pseudo-positive mining, CMC/mAP evaluation"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  app.add_option("--seed", seed, "Root seed (overrides config files)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate synthetic embedding datasets");
  std::string synth_config, synth_out = "data";
  synth->add_option("--config", synth_config, "SynthConfig JSON file");
  synth->add_option("--out-dir", synth_out, "Output directory");

  // train
  auto* train = app.add_subcommand("train", "Train the identification classifier");
  std::string train_data, train_config, model_out = "model.json";
  double val_fraction = 0.9;
  train->add_option("--data", train_data, "Labeled embeddings (JSON lines)")
      ->required();
  train->add_option("--config", train_config, "TrainConfig JSON file");
  train->add_option("--model-out", model_out, "Checkpoint path");
  train->add_option("--val-fraction", val_fraction,
                    "Train fraction of the 90/10-style validation split");

  // mine
  auto* mine = app.add_subcommand("mine", "Mine nearest-neighbor pseudo-positives");
  std::string mine_model, mine_data, mine_pool, mine_out = "pseudo.jsonl";
  std::size_t mine_k = 0;
  bool mine_l2 = false;
  mine->add_option("--model", mine_model, "Feature extractor checkpoint")->required();
  mine->add_option("--data", mine_data, "Labeled query embeddings")->required();
  mine->add_option("--pool", mine_pool, "Unlabeled pool embeddings")->required();
  mine->add_option("--k", mine_k, "Number of pseudo-positives to keep")->required();
  mine->add_flag("--l2-normalize", mine_l2, "L2-normalize features before search");
  mine->add_option("--out", mine_out, "Output pseudo-positive set");

  // run
  auto* run = app.add_subcommand("run", "Run a full experiment sweep");
  std::string run_config, run_out;
  bool preset_standard = false;
  std::optional<int> run_repeats;
  run->add_option("--config", run_config, "ExperimentConfig JSON file");
  run->add_flag("--preset-standard", preset_standard,
                "Use the built-in standard synthetic benchmark");
  run->add_option("--out-dir", run_out, "Output directory (overrides config)");
  run->add_option("--repeats", run_repeats, "Independent seeds (overrides config)");

  // compare
  auto* comp = app.add_subcommand("compare", "Aggregate records into a comparison table");
  std::string comp_dir;
  comp->add_option("--dir", comp_dir, "Experiment output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(synth_config, synth_out, seed);
    if (train->parsed()) {
      return cmd_train(train_data, train_config, model_out, val_fraction, seed);
    }
    if (mine->parsed()) {
      return cmd_mine(mine_model, mine_data, mine_pool, mine_k,
                      seed.value_or(0), mine_l2, mine_out);
    }
    if (run->parsed()) {
      return cmd_run(run_config, preset_standard, seed, run_out, run_repeats);
    }
    if (comp->parsed()) return cmd_compare(comp_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
