#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace reid {

// One embedding. Dimension is data, not a compile-time constant: upstream
// extractors disagree on feature width, so the files carry it.
using FeatureVector = std::vector<double>;

struct EmbeddingRecord {
  FeatureVector vector;
  int identity = 0;
  int camera = 0;

  bool operator==(const EmbeddingRecord&) const = default;
};

struct LabeledDataset {
  std::vector<EmbeddingRecord> records;
  int num_identities = 0;  // count of distinct identity labels

  std::size_t size() const { return records.size(); }
  std::size_t dim() const {
    return records.empty() ? 0 : records.front().vector.size();
  }

  bool operator==(const LabeledDataset&) const = default;
};

struct UnlabeledPool {
  std::vector<FeatureVector> records;

  std::size_t size() const { return records.size(); }
  std::size_t dim() const {
    return records.empty() ? 0 : records.front().size();
  }

  bool operator==(const UnlabeledPool&) const = default;
};

enum class SplitMode { ByRecord, ByIdentity };

struct SplitSpec {
  double train_fraction = 0.9;
  std::uint64_t seed = 0;
  SplitMode mode = SplitMode::ByRecord;

  bool operator==(const SplitSpec&) const = default;
};

// Throws std::runtime_error on the first violated invariant: empty vectors,
// non-finite components, mixed dimensions, negative identity or camera ids,
// or a num_identities field that disagrees with the records.
void validate(const LabeledDataset& dataset);
void validate(const UnlabeledPool& pool);

int count_distinct_identities(const LabeledDataset& dataset);

// True when identities are exactly 0..C-1 with every class populated.
bool has_canonical_labels(const LabeledDataset& dataset);

// Remaps identities onto 0..C-1, assigning canonical ids in ascending order
// of the original labels. The returned map records original -> canonical.
std::pair<LabeledDataset, std::map<int, int>> canonicalize_labels(
    const LabeledDataset& dataset);

// Deterministic partition under (spec.seed, spec). In by-record mode every
// identity keeps at least one record in the first partition so the classifier
// head never sees an untrainable class; in by-identity mode the two sides
// share no identity.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& dataset,
                                                const SplitSpec& spec);

}  // namespace reid
