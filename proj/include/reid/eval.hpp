#pragma once

#include <cstdint>
#include <unordered_set>
#include <vector>

#include "reid/data.hpp"

namespace reid {

enum class ProtocolMode { SingleShotCmc, CrossCamera };

struct ProtocolConfig {
  ProtocolMode mode = ProtocolMode::CrossCamera;
  int trials = 20;  // gallery re-samplings in single-shot mode
  std::uint64_t seed = 0;
  int max_rank = 20;  // CMC curve length, clamped to the gallery size

  bool operator==(const ProtocolConfig&) const = default;
};

struct EvalReport {
  std::vector<double> cmc;  // cmc[r] = P(first true match at rank <= r+1)
  double map = 0.0;
  std::vector<double> per_query_ap;  // evaluated queries, in query order
  int num_queries_evaluated = 0;
  int num_queries_skipped = 0;
  ProtocolConfig protocol;

  bool operator==(const EvalReport&) const = default;
};

// Gallery indices by ascending Euclidean distance to the query; ties break
// toward the lower index; excluded indices are absent.
std::vector<std::size_t> rank_gallery(
    const FeatureVector& query, const std::vector<EmbeddingRecord>& gallery,
    const std::unordered_set<std::size_t>& exclusions);

// AP over the full ranked list: (1/R) * sum over relevant positions k of
// (relevant in top k) / k. Throws when nothing is relevant.
double average_precision(const std::vector<bool>& relevance);

// Market-1501-style: same-identity same-camera gallery entries are junk and
// removed from the ranking; a match counts only from a different camera.
// Queries with no cross-camera ground truth are skipped and counted.
EvalReport evaluate_cross_camera(const std::vector<EmbeddingRecord>& queries,
                                 const std::vector<EmbeddingRecord>& gallery,
                                 const ProtocolConfig& config);

// CUHK03-style: per trial one gallery record is sampled per identity and the
// curves are averaged over trials. With a single ground truth per trial the
// per-query AP reduces to 1/rank of the hit.
EvalReport evaluate_single_shot(const std::vector<EmbeddingRecord>& queries,
                                const std::vector<EmbeddingRecord>& gallery,
                                const ProtocolConfig& config);

// Dispatch on config.mode.
EvalReport evaluate(const std::vector<EmbeddingRecord>& queries,
                    const std::vector<EmbeddingRecord>& gallery,
                    const ProtocolConfig& config);

}  // namespace reid
