#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reid/data.hpp"
#include "reid/eval.hpp"
#include "reid/io.hpp"
#include "reid/model.hpp"
#include "reid/synth.hpp"

namespace reid {

// One end-to-end experiment: data source, shared training recipe, protocol,
// and the method/K sweep. PPR and the disturb baselines reuse the training
// recipe verbatim so the only differences between compared runs are the
// training-set contents and the seeds.
struct ExperimentConfig {
  std::optional<SynthConfig> synth;  // inline synthetic data, or ...
  std::string train_path;            // ... four embedding files
  std::string query_path;
  std::string gallery_path;
  std::string pool_path;

  TrainConfig train;
  SplitSpec val_split;  // defaults: 90/10 by-record
  ProtocolConfig protocol;

  std::vector<std::string> methods = {"baseline", "ppr"};
  std::vector<std::size_t> k_values;
  long long disturb_count = -1;  // -1: match the first K
  int repeats = 1;
  std::uint64_t seed = 0;
  std::string out_dir = "out";

  // Mining normally uses the baseline model's features; an external
  // checkpoint substitutes a weaker or stronger miner.
  std::string miner_model_path;
  bool mine_l2_normalize = false;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json experiment_config_to_json(const ExperimentConfig& c);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct RunRecord {
  std::string method;  // baseline | ppr | disturb | disturb_star
  std::size_t k = 0;   // pseudo or disturb count; 0 for baseline
  std::uint64_t seed = 0;
  EvalReport report;
  double wall_seconds = 0.0;
  std::string config_hash;
};

nlohmann::ordered_json record_to_json(const RunRecord& record);
RunRecord record_from_json(const nlohmann::json& j);

struct ExperimentData {
  LabeledDataset train;  // canonicalized
  LabeledDataset query;
  LabeledDataset gallery;
  UnlabeledPool pool;
};

// Generates or loads the four inputs and canonicalizes the training labels.
ExperimentData prepare_data(const ExperimentConfig& config);

// Runs individual method legs against shared data, caching the per-seed
// validation split and baseline model so PPR mines with the same model the
// baseline run reports on.
class ExperimentRunner {
 public:
  ExperimentRunner(ExperimentConfig config, ExperimentData data);

  RunRecord run_baseline(std::uint64_t seed);
  RunRecord run_ppr(std::uint64_t seed, std::size_t k);
  RunRecord run_disturb(std::uint64_t seed, std::size_t count, bool star);

  const ExperimentData& data() const { return data_; }

 private:
  struct Fold {
    LabeledDataset fit;
    LabeledDataset val;
  };
  struct BaselineArtifacts {
    ModelParams model;
    EvalReport report;
  };

  const Fold& fold(std::uint64_t seed);
  const BaselineArtifacts& baseline(std::uint64_t seed);
  EvalReport evaluate_with(const ModelParams& model, std::uint64_t seed) const;
  RunRecord make_record(const std::string& method, std::size_t k,
                        std::uint64_t seed, EvalReport report,
                        double wall_seconds) const;

  ExperimentConfig config_;
  ExperimentData data_;
  std::optional<ModelParams> miner_;  // external miner, if configured
  std::map<std::uint64_t, Fold> folds_;
  std::map<std::uint64_t, BaselineArtifacts> baselines_;
};

// Full sweep: repeats x methods x K, every record written to
// <out_dir>/runs/<config_hash>/record.json plus compare.csv / compare.json.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config);

struct CompareRow {
  std::string method;
  std::size_t k = 0;
  int runs = 0;
  double rank1_mean = 0.0;
  double rank1_std = 0.0;
  double map_mean = 0.0;
  double map_std = 0.0;
};

// Rows keyed by (method, K); mean and sample standard deviation over seeds.
std::vector<CompareRow> compare(const std::vector<RunRecord>& records);
std::string compare_csv(const std::vector<CompareRow>& rows);
nlohmann::ordered_json compare_to_json(const std::vector<CompareRow>& rows);

// Shortest round-trip decimal, same convention as the JSON writer.
std::string double_to_string(double value);

// The pinned synthetic benchmark used by the acceptance checks and the
// `run --preset standard` shortcut.
ExperimentConfig standard_benchmark_config();

}  // namespace reid
