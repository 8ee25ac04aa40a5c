#include "reid/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "reid/rng.hpp"

namespace reid {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void line_error(const std::filesystem::path& path,
                             std::size_t line, const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " +
                           what);
}

FeatureVector parse_vec(const json& row, const std::filesystem::path& path,
                        std::size_t line) {
  if (!row.contains("vec") || !row["vec"].is_array()) {
    line_error(path, line, "missing or non-array \"vec\"");
  }
  FeatureVector v;
  v.reserve(row["vec"].size());
  for (const json& x : row["vec"]) {
    if (!x.is_number()) line_error(path, line, "non-numeric vector component");
    const double value = x.get<double>();
    if (!std::isfinite(value)) {
      line_error(path, line, "non-finite vector component");
    }
    v.push_back(value);
  }
  if (v.empty()) line_error(path, line, "empty vector");
  return v;
}

int parse_id_field(const json& row, const char* key,
                   const std::filesystem::path& path, std::size_t line) {
  if (!row.contains(key)) {
    line_error(path, line, std::string("missing field \"") + key + "\"");
  }
  if (!row[key].is_number_integer()) {
    line_error(path, line, std::string("field \"") + key + "\" must be an integer");
  }
  const auto value = row[key].get<long long>();
  if (value < 0) {
    line_error(path, line, std::string("field \"") + key + "\" must be >= 0");
  }
  return static_cast<int>(value);
}

// Calls visit(row_json, line_number) for every non-empty line.
template <typename Visit>
void for_each_row(const std::filesystem::path& path, Visit visit) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::parse_error& e) {
      line_error(path, line_number, std::string("malformed JSON: ") + e.what());
    }
    if (!row.is_object()) line_error(path, line_number, "row is not an object");
    visit(row, line_number);
  }
}

std::string dump_vec(const FeatureVector& v) {
  ordered_json arr = ordered_json::array();
  for (double x : v) arr.push_back(x);
  return arr.dump();
}

}  // namespace

LabeledDataset read_labeled(const std::filesystem::path& path) {
  LabeledDataset out;
  std::size_t dim = 0;
  for_each_row(path, [&](const json& row, std::size_t line) {
    EmbeddingRecord r;
    r.identity = parse_id_field(row, "id", path, line);
    r.camera = parse_id_field(row, "cam", path, line);
    r.vector = parse_vec(row, path, line);
    if (dim == 0) {
      dim = r.vector.size();
    } else if (r.vector.size() != dim) {
      line_error(path, line,
                 "dimension mismatch: expected " + std::to_string(dim) +
                     ", got " + std::to_string(r.vector.size()));
    }
    out.records.push_back(std::move(r));
  });
  out.num_identities = count_distinct_identities(out);
  return out;
}

UnlabeledPool read_pool(const std::filesystem::path& path) {
  UnlabeledPool out;
  std::size_t dim = 0;
  for_each_row(path, [&](const json& row, std::size_t line) {
    if (row.contains("id") || row.contains("cam")) {
      line_error(path, line, "pool rows must not carry \"id\"/\"cam\"");
    }
    FeatureVector v = parse_vec(row, path, line);
    if (dim == 0) {
      dim = v.size();
    } else if (v.size() != dim) {
      line_error(path, line,
                 "dimension mismatch: expected " + std::to_string(dim) +
                     ", got " + std::to_string(v.size()));
    }
    out.records.push_back(std::move(v));
  });
  return out;
}

std::variant<LabeledDataset, UnlabeledPool> read_embeddings(
    const std::filesystem::path& path) {
  // The first row decides the kind.
  bool labeled = false;
  bool decided = false;
  for_each_row(path, [&](const json& row, std::size_t) {
    if (!decided) {
      labeled = row.contains("id");
      decided = true;
    }
  });
  if (!decided) throw std::runtime_error(path.string() + ": empty file");
  if (labeled) return read_labeled(path);
  return read_pool(path);
}

void write_embeddings(const std::filesystem::path& path,
                      const LabeledDataset& dataset) {
  validate(dataset);
  std::ostringstream out;
  for (const EmbeddingRecord& r : dataset.records) {
    out << "{\"id\":" << r.identity << ",\"cam\":" << r.camera
        << ",\"vec\":" << dump_vec(r.vector) << "}\n";
  }
  write_text_atomic(path, out.str());
}

void write_embeddings(const std::filesystem::path& path,
                      const UnlabeledPool& pool) {
  validate(pool);
  std::ostringstream out;
  for (const FeatureVector& v : pool.records) {
    out << "{\"vec\":" << dump_vec(v) << "}\n";
  }
  write_text_atomic(path, out.str());
}

void write_pseudo_set(const std::filesystem::path& path,
                      const PseudoPositiveSet& set) {
  std::ostringstream out;
  out << "{\"k\":" << set.intended_count << "}\n";
  for (const MinedPair& p : set.pairs) {
    ordered_json row;
    row["query"] = p.query_index;
    row["pool"] = p.pool_index;
    row["dist"] = p.distance;
    row["label"] = p.transferred_label;
    out << row.dump() << "\n";
  }
  write_text_atomic(path, out.str());
}

PseudoPositiveSet read_pseudo_set(const std::filesystem::path& path) {
  PseudoPositiveSet set;
  bool header_seen = false;
  for_each_row(path, [&](const json& row, std::size_t line) {
    if (!header_seen) {
      if (!row.contains("k")) line_error(path, line, "missing header row");
      set.intended_count = row["k"].get<std::size_t>();
      header_seen = true;
      return;
    }
    MinedPair p;
    if (!row.contains("query") || !row.contains("pool") ||
        !row.contains("dist") || !row.contains("label")) {
      line_error(path, line, "missing pair field");
    }
    p.query_index = row["query"].get<std::size_t>();
    p.pool_index = row["pool"].get<std::size_t>();
    p.distance = row["dist"].get<double>();
    p.transferred_label = row["label"].get<int>();
    set.pairs.push_back(p);
  });
  if (!header_seen) throw std::runtime_error(path.string() + ": empty file");
  return set;
}

namespace {

ordered_json layer_to_json(const LayerParams& layer) {
  ordered_json j;
  j["rows"] = layer.weight.rows;
  j["cols"] = layer.weight.cols;
  j["weight"] = layer.weight.data;
  j["bias"] = layer.bias;
  return j;
}

LayerParams layer_from_json(const json& j) {
  LayerParams layer;
  layer.weight.rows = j.at("rows").get<std::size_t>();
  layer.weight.cols = j.at("cols").get<std::size_t>();
  layer.weight.data = j.at("weight").get<std::vector<double>>();
  layer.bias = j.at("bias").get<std::vector<double>>();
  if (layer.weight.data.size() != layer.weight.rows * layer.weight.cols) {
    throw std::runtime_error("checkpoint weight size mismatch");
  }
  if (layer.bias.size() != layer.weight.rows) {
    throw std::runtime_error("checkpoint bias size mismatch");
  }
  return layer;
}

constexpr int kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const Checkpoint& ckpt) {
  ordered_json j;
  j["format"] = "reidkit-model";
  j["version"] = kCheckpointVersion;
  j["embedding_layer_index"] = ckpt.model.embedding_layer_index;
  j["seed"] = ckpt.seed;
  j["config_hash"] = ckpt.config_hash;
  j["layers"] = ordered_json::array();
  for (const LayerParams& layer : ckpt.model.layers) {
    j["layers"].push_back(layer_to_json(layer));
  }
  j["momentum"] = ordered_json::array();
  for (const LayerParams& layer : ckpt.model.momentum) {
    j["momentum"].push_back(layer_to_json(layer));
  }
  write_text_atomic(path, j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  json j = json::parse(read_text(path));
  if (j.value("format", "") != "reidkit-model") {
    throw std::runtime_error(path.string() + ": not a model checkpoint");
  }
  if (j.at("version").get<int>() != kCheckpointVersion) {
    throw std::runtime_error(path.string() + ": unsupported checkpoint version");
  }
  Checkpoint ckpt;
  ckpt.model.embedding_layer_index = j.at("embedding_layer_index").get<int>();
  ckpt.seed = j.at("seed").get<std::uint64_t>();
  ckpt.config_hash = j.at("config_hash").get<std::string>();
  for (const json& layer : j.at("layers")) {
    ckpt.model.layers.push_back(layer_from_json(layer));
  }
  for (const json& layer : j.at("momentum")) {
    ckpt.model.momentum.push_back(layer_from_json(layer));
  }
  if (ckpt.model.momentum.size() != ckpt.model.layers.size()) {
    throw std::runtime_error("checkpoint momentum/layer count mismatch");
  }
  return ckpt;
}

namespace {

std::string mode_name(ProtocolMode mode) {
  return mode == ProtocolMode::CrossCamera ? "cross-camera" : "single-shot-cmc";
}

ProtocolMode mode_from_name(const std::string& name) {
  if (name == "cross-camera") return ProtocolMode::CrossCamera;
  if (name == "single-shot-cmc") return ProtocolMode::SingleShotCmc;
  throw std::runtime_error("unknown protocol mode \"" + name + "\"");
}

void reject_unknown_keys(const json& j,
                         std::initializer_list<const char*> known,
                         const char* where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) {
      if (key == k) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw std::runtime_error(std::string("unknown key \"") + key + "\" in " +
                               where);
    }
  }
}

}  // namespace

nlohmann::ordered_json report_to_json(const EvalReport& report) {
  ordered_json j;
  j["cmc"] = report.cmc;
  j["map"] = report.map;
  j["per_query_ap"] = report.per_query_ap;
  j["num_queries_evaluated"] = report.num_queries_evaluated;
  j["skipped"] = report.num_queries_skipped;
  j["protocol"] = ordered_json{{"mode", mode_name(report.protocol.mode)},
                               {"trials", report.protocol.trials},
                               {"max_rank", report.protocol.max_rank}};
  j["seed"] = report.protocol.seed;
  return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport report;
  report.cmc = j.at("cmc").get<std::vector<double>>();
  report.map = j.at("map").get<double>();
  report.per_query_ap = j.at("per_query_ap").get<std::vector<double>>();
  report.num_queries_evaluated = j.at("num_queries_evaluated").get<int>();
  report.num_queries_skipped = j.at("skipped").get<int>();
  report.protocol.mode = mode_from_name(j.at("protocol").at("mode").get<std::string>());
  report.protocol.trials = j.at("protocol").at("trials").get<int>();
  report.protocol.max_rank = j.at("protocol").at("max_rank").get<int>();
  report.protocol.seed = j.at("seed").get<std::uint64_t>();
  return report;
}

void write_report(const std::filesystem::path& path, const EvalReport& report) {
  write_text_atomic(path, report_to_json(report).dump(2) + "\n");
}

EvalReport read_report(const std::filesystem::path& path) {
  return report_from_json(nlohmann::json::parse(read_text(path)));
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"learning_rate", "momentum", "weight_decay",
                       "batch_size", "epochs", "lr_step_epochs", "lr_factor",
                       "seed", "hidden_dims"},
                      "train config");
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.momentum = j.value("momentum", c.momentum);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.lr_step_epochs = j.value("lr_step_epochs", c.lr_step_epochs);
  c.lr_factor = j.value("lr_factor", c.lr_factor);
  c.seed = j.value("seed", c.seed);
  c.hidden_dims = j.value("hidden_dims", c.hidden_dims);
  return c;
}

nlohmann::ordered_json train_config_to_json(const TrainConfig& c) {
  ordered_json j;
  j["learning_rate"] = c.learning_rate;
  j["momentum"] = c.momentum;
  j["weight_decay"] = c.weight_decay;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["lr_step_epochs"] = c.lr_step_epochs;
  j["lr_factor"] = c.lr_factor;
  j["seed"] = c.seed;
  j["hidden_dims"] = c.hidden_dims;
  return j;
}

ProtocolConfig protocol_config_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, {"mode", "trials", "seed", "max_rank"},
                      "protocol config");
  ProtocolConfig c;
  if (j.contains("mode")) c.mode = mode_from_name(j["mode"].get<std::string>());
  c.trials = j.value("trials", c.trials);
  c.seed = j.value("seed", c.seed);
  c.max_rank = j.value("max_rank", c.max_rank);
  return c;
}

nlohmann::ordered_json protocol_config_to_json(const ProtocolConfig& c) {
  ordered_json j;
  j["mode"] = mode_name(c.mode);
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["max_rank"] = c.max_rank;
  return j;
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"num_identities", "samples_per_identity", "dim",
                       "cluster_std", "camera_count", "camera_shift_std",
                       "pool_size", "pool_overlap", "seed"},
                      "synth config");
  SynthConfig c;
  c.num_identities = j.value("num_identities", c.num_identities);
  c.samples_per_identity = j.value("samples_per_identity", c.samples_per_identity);
  c.dim = j.value("dim", c.dim);
  c.cluster_std = j.value("cluster_std", c.cluster_std);
  c.camera_count = j.value("camera_count", c.camera_count);
  c.camera_shift_std = j.value("camera_shift_std", c.camera_shift_std);
  c.pool_size = j.value("pool_size", c.pool_size);
  c.pool_overlap = j.value("pool_overlap", c.pool_overlap);
  c.seed = j.value("seed", c.seed);
  return c;
}

nlohmann::ordered_json synth_config_to_json(const SynthConfig& c) {
  ordered_json j;
  j["num_identities"] = c.num_identities;
  j["samples_per_identity"] = c.samples_per_identity;
  j["dim"] = c.dim;
  j["cluster_std"] = c.cluster_std;
  j["camera_count"] = c.camera_count;
  j["camera_shift_std"] = c.camera_shift_std;
  j["pool_size"] = c.pool_size;
  j["pool_overlap"] = c.pool_overlap;
  j["seed"] = c.seed;
  return j;
}

std::string config_hash_hex(const nlohmann::json& j) {
  const std::uint64_t h = fnv1a64(j.dump());
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 0; i < 16; ++i) {
    out[15 - i] = digits[(h >> (4 * i)) & 0xF];
  }
  return out;
}

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace reid
