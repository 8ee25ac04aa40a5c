#include "reid/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "reid/pseudo.hpp"
#include "reid/rng.hpp"

namespace reid {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

const std::vector<std::string> kKnownMethods = {"baseline", "ppr", "disturb",
                                                "disturb_star"};

SplitSpec split_spec_from_json(const json& j) {
  SplitSpec spec;
  for (const auto& [key, value] : j.items()) {
    if (key == "train_fraction") {
      spec.train_fraction = value.get<double>();
    } else if (key == "mode") {
      const auto name = value.get<std::string>();
      if (name == "by-record") {
        spec.mode = SplitMode::ByRecord;
      } else if (name == "by-identity") {
        spec.mode = SplitMode::ByIdentity;
      } else {
        throw std::runtime_error("unknown split mode \"" + name + "\"");
      }
    } else if (key == "seed") {
      spec.seed = value.get<std::uint64_t>();
    } else {
      throw std::runtime_error("unknown key \"" + key + "\" in val_split");
    }
  }
  return spec;
}

ordered_json split_spec_to_json(const SplitSpec& spec) {
  ordered_json j;
  j["train_fraction"] = spec.train_fraction;
  j["mode"] = spec.mode == SplitMode::ByRecord ? "by-record" : "by-identity";
  return j;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "data") {
      if (value.contains("synth")) {
        c.synth = synth_config_from_json(value["synth"]);
      } else {
        c.train_path = value.value("train", "");
        c.query_path = value.value("query", "");
        c.gallery_path = value.value("gallery", "");
        c.pool_path = value.value("pool", "");
      }
    } else if (key == "train") {
      c.train = train_config_from_json(value);
    } else if (key == "val_split") {
      c.val_split = split_spec_from_json(value);
    } else if (key == "protocol") {
      c.protocol = protocol_config_from_json(value);
    } else if (key == "methods") {
      c.methods = value.get<std::vector<std::string>>();
    } else if (key == "k_values") {
      c.k_values = value.get<std::vector<std::size_t>>();
    } else if (key == "disturb_count") {
      c.disturb_count = value.get<long long>();
    } else if (key == "repeats") {
      c.repeats = value.get<int>();
    } else if (key == "seed") {
      c.seed = value.get<std::uint64_t>();
    } else if (key == "out_dir") {
      c.out_dir = value.get<std::string>();
    } else if (key == "miner_model") {
      c.miner_model_path = value.get<std::string>();
    } else if (key == "mine_l2_normalize") {
      c.mine_l2_normalize = value.get<bool>();
    } else {
      throw std::runtime_error("unknown key \"" + key +
                               "\" in experiment config");
    }
  }
  for (const std::string& m : c.methods) {
    if (std::find(kKnownMethods.begin(), kKnownMethods.end(), m) ==
        kKnownMethods.end()) {
      throw std::runtime_error("unknown method \"" + m + "\"");
    }
  }
  if (c.repeats < 1) throw std::runtime_error("repeats must be >= 1");
  const bool wants_ppr =
      std::find(c.methods.begin(), c.methods.end(), "ppr") != c.methods.end();
  if (wants_ppr && c.k_values.empty()) {
    throw std::runtime_error("k_values must be non-empty when ppr is enabled");
  }
  return c;
}

ordered_json experiment_config_to_json(const ExperimentConfig& c) {
  ordered_json j;
  if (c.synth) {
    j["data"] = ordered_json{{"synth", synth_config_to_json(*c.synth)}};
  } else {
    j["data"] = ordered_json{{"train", c.train_path},
                             {"query", c.query_path},
                             {"gallery", c.gallery_path},
                             {"pool", c.pool_path}};
  }
  j["train"] = train_config_to_json(c.train);
  j["val_split"] = split_spec_to_json(c.val_split);
  j["protocol"] = protocol_config_to_json(c.protocol);
  j["methods"] = c.methods;
  j["k_values"] = c.k_values;
  j["disturb_count"] = c.disturb_count;
  j["repeats"] = c.repeats;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  if (!c.miner_model_path.empty()) j["miner_model"] = c.miner_model_path;
  j["mine_l2_normalize"] = c.mine_l2_normalize;
  return j;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return experiment_config_from_json(json::parse(read_text(path)));
}

ordered_json record_to_json(const RunRecord& record) {
  ordered_json j;
  j["method"] = record.method;
  j["k"] = record.k;
  j["seed"] = record.seed;
  j["config_hash"] = record.config_hash;
  j["report"] = report_to_json(record.report);
  j["wall_seconds"] = record.wall_seconds;
  return j;
}

RunRecord record_from_json(const json& j) {
  RunRecord r;
  r.method = j.at("method").get<std::string>();
  r.k = j.at("k").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.report = report_from_json(j.at("report"));
  r.wall_seconds = j.at("wall_seconds").get<double>();
  return r;
}

ExperimentData prepare_data(const ExperimentConfig& config) {
  ExperimentData data;
  if (config.synth) {
    SynthData synth = generate(*config.synth);
    data.train = std::move(synth.train);
    data.query = std::move(synth.query);
    data.gallery = std::move(synth.gallery);
    data.pool = std::move(synth.pool);
  } else {
    if (config.train_path.empty() || config.query_path.empty() ||
        config.gallery_path.empty()) {
      throw std::runtime_error(
          "config needs either data.synth or train/query/gallery paths");
    }
    data.train = read_labeled(config.train_path);
    data.query = read_labeled(config.query_path);
    data.gallery = read_labeled(config.gallery_path);
    if (!config.pool_path.empty()) data.pool = read_pool(config.pool_path);
  }

  data.train = canonicalize_labels(data.train).first;
  validate(data.train);
  validate(data.query);
  validate(data.gallery);
  validate(data.pool);
  if (data.query.dim() != data.train.dim() ||
      data.gallery.dim() != data.train.dim()) {
    throw std::runtime_error("query/gallery dimension differs from train");
  }
  if (!data.pool.records.empty() && data.pool.dim() != data.train.dim()) {
    throw std::runtime_error("pool dimension differs from train");
  }
  return data;
}

ExperimentRunner::ExperimentRunner(ExperimentConfig config, ExperimentData data)
    : config_(std::move(config)), data_(std::move(data)) {
  if (!config_.miner_model_path.empty()) {
    miner_ = load_checkpoint(config_.miner_model_path).model;
  }
}

const ExperimentRunner::Fold& ExperimentRunner::fold(std::uint64_t seed) {
  auto it = folds_.find(seed);
  if (it != folds_.end()) return it->second;

  SplitSpec spec = config_.val_split;
  if (spec.mode != SplitMode::ByRecord) {
    throw std::runtime_error(
        "val_split must be by-record: a by-identity holdout has no trainable "
        "classes in common with the fit partition");
  }
  spec.seed = derive_seed(seed, "split");
  auto [fit, val] = split(data_.train, spec);
  // The classifier head is sized by the full training set; the repair rule in
  // split() keeps every identity present in the fit partition.
  fit.num_identities = data_.train.num_identities;
  val.num_identities = count_distinct_identities(val);
  return folds_.emplace(seed, Fold{std::move(fit), std::move(val)})
      .first->second;
}

EvalReport ExperimentRunner::evaluate_with(const ModelParams& model,
                                           std::uint64_t seed) const {
  ProtocolConfig protocol = config_.protocol;
  protocol.seed = derive_seed(seed, "protocol");
  const std::vector<FeatureVector> query_features =
      extract_features(model, data_.query.records);
  const std::vector<FeatureVector> gallery_features =
      extract_features(model, data_.gallery.records);

  std::vector<EmbeddingRecord> queries = data_.query.records;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    queries[i].vector = query_features[i];
  }
  std::vector<EmbeddingRecord> gallery = data_.gallery.records;
  for (std::size_t i = 0; i < gallery.size(); ++i) {
    gallery[i].vector = gallery_features[i];
  }
  return evaluate(queries, gallery, protocol);
}

const ExperimentRunner::BaselineArtifacts& ExperimentRunner::baseline(
    std::uint64_t seed) {
  auto it = baselines_.find(seed);
  if (it != baselines_.end()) return it->second;

  const Fold& f = fold(seed);
  TrainConfig train_config = config_.train;
  train_config.seed = derive_seed(seed, "train");
  auto [model, log] = train(f.fit, f.val, train_config);
  EvalReport report = evaluate_with(model, seed);
  return baselines_
      .emplace(seed, BaselineArtifacts{std::move(model), std::move(report)})
      .first->second;
}

RunRecord ExperimentRunner::make_record(const std::string& method,
                                        std::size_t k, std::uint64_t seed,
                                        EvalReport report,
                                        double wall_seconds) const {
  RunRecord record;
  record.method = method;
  record.k = k;
  record.seed = seed;
  record.report = std::move(report);
  record.wall_seconds = wall_seconds;

  // Hash the effective run description: derived seeds included, so the
  // record replays bit-for-bit from this block alone.
  json desc;
  desc["method"] = method;
  desc["k"] = k;
  desc["seed"] = seed;
  if (config_.synth) {
    desc["data"] = json{{"synth", synth_config_to_json(*config_.synth)}};
  } else {
    desc["data"] = json{{"train", config_.train_path},
                        {"query", config_.query_path},
                        {"gallery", config_.gallery_path},
                        {"pool", config_.pool_path}};
  }
  TrainConfig effective_train = config_.train;
  effective_train.seed = derive_seed(seed, "train");
  desc["train"] = train_config_to_json(effective_train);
  SplitSpec effective_split = config_.val_split;
  effective_split.seed = derive_seed(seed, "split");
  desc["val_split"] = split_spec_to_json(effective_split);
  desc["val_split"]["seed"] = effective_split.seed;
  ProtocolConfig effective_protocol = config_.protocol;
  effective_protocol.seed = derive_seed(seed, "protocol");
  desc["protocol"] = protocol_config_to_json(effective_protocol);
  if (!config_.miner_model_path.empty()) {
    desc["miner_model"] = config_.miner_model_path;
  }
  desc["mine_l2_normalize"] = config_.mine_l2_normalize;
  record.config_hash = config_hash_hex(desc);
  return record;
}

RunRecord ExperimentRunner::run_baseline(std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const BaselineArtifacts& base = baseline(seed);
  const std::chrono::duration<double> elapsed =
      std::chrono::steady_clock::now() - start;
  return make_record("baseline", 0, seed, base.report, elapsed.count());
}

RunRecord ExperimentRunner::run_ppr(std::uint64_t seed, std::size_t k) {
  const auto start = std::chrono::steady_clock::now();
  if (data_.pool.records.empty()) {
    throw std::runtime_error("ppr needs a non-empty pool");
  }
  if (k > data_.pool.records.size()) {
    std::cerr << "warning: K=" << k << " exceeds pool size "
              << data_.pool.records.size() << "; clamping\n";
    k = data_.pool.records.size();
  }
  const Fold& f = fold(seed);
  const ModelParams& miner = miner_ ? *miner_ : baseline(seed).model;

  std::vector<int> labels;
  labels.reserve(f.fit.records.size());
  for (const EmbeddingRecord& r : f.fit.records) labels.push_back(r.identity);

  const std::vector<MinedPair> mined =
      mine_nearest(extract_features(miner, f.fit.records), labels,
                   extract_features(miner, data_.pool.records),
                   config_.mine_l2_normalize);
  const PseudoPositiveSet selected =
      select_pseudo_positives(mined, k, derive_seed(seed, "select"));
  const LabeledDataset merged = merge(f.fit, selected, data_.pool);

  TrainConfig train_config = config_.train;
  train_config.seed = derive_seed(seed, "train");
  auto [model, log] = train(merged, f.val, train_config);
  EvalReport report = evaluate_with(model, seed);
  const std::chrono::duration<double> elapsed =
      std::chrono::steady_clock::now() - start;
  return make_record("ppr", k, seed, std::move(report), elapsed.count());
}

RunRecord ExperimentRunner::run_disturb(std::uint64_t seed, std::size_t count,
                                        bool star) {
  const auto start = std::chrono::steady_clock::now();
  const Fold& f = fold(seed);
  LabeledDataset disturbed;
  if (star) {
    if (data_.pool.records.empty()) {
      throw std::runtime_error("disturb_star needs a non-empty pool");
    }
    disturbed = disturb_star(f.fit, data_.pool, count,
                             derive_seed(seed, "disturb-star"));
  } else {
    disturbed = disturb_labels(f.fit, count, derive_seed(seed, "disturb"));
  }

  TrainConfig train_config = config_.train;
  train_config.seed = derive_seed(seed, "train");
  auto [model, log] = train(disturbed, f.val, train_config);
  EvalReport report = evaluate_with(model, seed);
  const std::chrono::duration<double> elapsed =
      std::chrono::steady_clock::now() - start;
  return make_record(star ? "disturb_star" : "disturb", count, seed,
                     std::move(report), elapsed.count());
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config) {
  ExperimentRunner runner(config, prepare_data(config));

  std::size_t disturb_count = 0;
  const bool wants_disturb =
      std::find(config.methods.begin(), config.methods.end(), "disturb") !=
          config.methods.end() ||
      std::find(config.methods.begin(), config.methods.end(),
                "disturb_star") != config.methods.end();
  if (wants_disturb) {
    if (config.disturb_count >= 0) {
      disturb_count = static_cast<std::size_t>(config.disturb_count);
    } else if (!config.k_values.empty()) {
      disturb_count = config.k_values.front();
    } else {
      throw std::runtime_error(
          "disturb methods need disturb_count or a k_values entry");
    }
  }

  std::vector<RunRecord> records;
  for (int r = 0; r < config.repeats; ++r) {
    const std::uint64_t seed =
        derive_seed(config.seed, "repeat", static_cast<std::uint64_t>(r));
    for (const std::string& method : config.methods) {
      if (method == "baseline") {
        records.push_back(runner.run_baseline(seed));
      } else if (method == "ppr") {
        for (std::size_t k : config.k_values) {
          records.push_back(runner.run_ppr(seed, k));
        }
      } else if (method == "disturb") {
        records.push_back(runner.run_disturb(seed, disturb_count, false));
      } else if (method == "disturb_star") {
        records.push_back(runner.run_disturb(seed, disturb_count, true));
      }
    }
  }

  const std::filesystem::path out_dir(config.out_dir);
  for (const RunRecord& record : records) {
    write_text_atomic(out_dir / "runs" / record.config_hash / "record.json",
                      record_to_json(record).dump(2) + "\n");
  }
  const std::vector<CompareRow> rows = compare(records);
  write_text_atomic(out_dir / "compare.csv", compare_csv(rows));
  write_text_atomic(out_dir / "compare.json",
                    compare_to_json(rows).dump(2) + "\n");
  return records;
}

std::vector<CompareRow> compare(const std::vector<RunRecord>& records) {
  if (records.empty()) throw std::runtime_error("no records to compare");
  std::map<std::pair<std::string, std::size_t>,
           std::vector<std::pair<double, double>>>
      groups;  // (method, k) -> [(rank1, map)]
  for (const RunRecord& r : records) {
    if (r.report.cmc.empty()) throw std::runtime_error("record without CMC");
    groups[{r.method, r.k}].emplace_back(r.report.cmc.front(), r.report.map);
  }

  auto mean_std = [](const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    if (xs.size() < 2) return std::make_pair(mean, 0.0);
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::make_pair(mean, std::sqrt(ss / (n - 1.0)));
  };

  std::vector<CompareRow> rows;
  for (const auto& [key, values] : groups) {
    std::vector<double> rank1, map;
    for (const auto& [r1, m] : values) {
      rank1.push_back(r1);
      map.push_back(m);
    }
    CompareRow row;
    row.method = key.first;
    row.k = key.second;
    row.runs = static_cast<int>(values.size());
    std::tie(row.rank1_mean, row.rank1_std) = mean_std(rank1);
    std::tie(row.map_mean, row.map_std) = mean_std(map);
    rows.push_back(std::move(row));
  }
  return rows;  // std::map iteration: already sorted by (method, k)
}

std::string double_to_string(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string compare_csv(const std::vector<CompareRow>& rows) {
  std::string out =
      "method,k,runs,rank1_mean,rank1_std,map_mean,map_std\n";
  for (const CompareRow& row : rows) {
    out += row.method;
    out += ',';
    out += std::to_string(row.k);
    out += ',';
    out += std::to_string(row.runs);
    out += ',';
    out += double_to_string(row.rank1_mean);
    out += ',';
    out += double_to_string(row.rank1_std);
    out += ',';
    out += double_to_string(row.map_mean);
    out += ',';
    out += double_to_string(row.map_std);
    out += '\n';
  }
  return out;
}

ordered_json compare_to_json(const std::vector<CompareRow>& rows) {
  ordered_json arr = ordered_json::array();
  for (const CompareRow& row : rows) {
    arr.push_back(ordered_json{{"method", row.method},
                               {"k", row.k},
                               {"runs", row.runs},
                               {"rank1_mean", row.rank1_mean},
                               {"rank1_std", row.rank1_std},
                               {"map_mean", row.map_mean},
                               {"map_std", row.map_std}});
  }
  return arr;
}

ExperimentConfig standard_benchmark_config() {
  ExperimentConfig config;
  SynthConfig synth;
  synth.num_identities = 50;
  synth.samples_per_identity = 6;
  synth.dim = 16;
  synth.cluster_std = 0.25;
  synth.camera_count = 2;
  synth.camera_shift_std = 1.0;
  synth.pool_size = 2000;
  synth.pool_overlap = 0.7;
  config.synth = synth;

  config.train.learning_rate = 0.05;
  config.train.momentum = 0.9;
  config.train.weight_decay = 0.0005;
  config.train.batch_size = 32;
  config.train.epochs = 30;
  config.train.lr_step_epochs = 12;
  config.train.lr_factor = 0.1;
  config.train.hidden_dims = {32};

  config.val_split.train_fraction = 0.9;
  config.val_split.mode = SplitMode::ByRecord;

  config.protocol.mode = ProtocolMode::CrossCamera;
  config.protocol.max_rank = 10;

  config.methods = {"baseline", "ppr", "disturb", "disturb_star"};
  config.k_values = {140, 2000};
  config.disturb_count = 140;
  config.repeats = 12;
  config.seed = 20260809;
  return config;
}

}  // namespace reid
