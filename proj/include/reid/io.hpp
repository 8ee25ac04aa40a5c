#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include <json.hpp>

#include "reid/data.hpp"
#include "reid/eval.hpp"
#include "reid/model.hpp"
#include "reid/pseudo.hpp"
#include "reid/synth.hpp"

namespace reid {

// Embedding files are UTF-8 JSON lines. A labeled row is
// {"id":<int>,"cam":<int>,"vec":[<float>...]}; a pool row carries only
// "vec". The first row fixes the dimension. Floating values are written in
// shortest round-trip decimal, so write -> read is exact.
LabeledDataset read_labeled(const std::filesystem::path& path);
UnlabeledPool read_pool(const std::filesystem::path& path);
std::variant<LabeledDataset, UnlabeledPool> read_embeddings(
    const std::filesystem::path& path);
void write_embeddings(const std::filesystem::path& path,
                      const LabeledDataset& dataset);
void write_embeddings(const std::filesystem::path& path,
                      const UnlabeledPool& pool);

// Pseudo-positive sets: one {"query","pool","dist","label"} object per line.
void write_pseudo_set(const std::filesystem::path& path,
                      const PseudoPositiveSet& set);
PseudoPositiveSet read_pseudo_set(const std::filesystem::path& path);

// Versioned JSON model container (shapes, parameters, momentum buffers,
// training seed, config hash).
struct Checkpoint {
  ModelParams model;
  std::uint64_t seed = 0;
  std::string config_hash;

  bool operator==(const Checkpoint&) const = default;
};
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::ordered_json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);
void write_report(const std::filesystem::path& path, const EvalReport& report);
EvalReport read_report(const std::filesystem::path& path);

// Config blocks shared by the CLI and the experiment runner. Unknown keys are
// rejected so a typo cannot silently fall back to a default.
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json train_config_to_json(const TrainConfig& c);
ProtocolConfig protocol_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json protocol_config_to_json(const ProtocolConfig& c);
SynthConfig synth_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json synth_config_to_json(const SynthConfig& c);

// FNV-1a over the canonical (sorted-key) dump; 16 hex digits. Stable across
// machines for identical configs.
std::string config_hash_hex(const nlohmann::json& j);

// Write-then-rename so concurrent readers never observe a partial file.
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content);
std::string read_text(const std::filesystem::path& path);

}  // namespace reid
