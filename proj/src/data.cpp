#include "reid/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "reid/rng.hpp"

namespace reid {

namespace {

void check_vector(const FeatureVector& v, std::size_t expected_dim,
                  std::size_t index) {
  if (v.empty()) {
    throw std::runtime_error("record " + std::to_string(index) +
                             ": empty feature vector");
  }
  if (v.size() != expected_dim) {
    throw std::runtime_error(
        "record " + std::to_string(index) + ": dimension " +
        std::to_string(v.size()) + " != " + std::to_string(expected_dim));
  }
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw std::runtime_error("record " + std::to_string(index) +
                               ": non-finite component");
    }
  }
}

}  // namespace

void validate(const LabeledDataset& dataset) {
  const std::size_t d = dataset.dim();
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const EmbeddingRecord& r = dataset.records[i];
    check_vector(r.vector, d, i);
    if (r.identity < 0) {
      throw std::runtime_error("record " + std::to_string(i) +
                               ": negative identity label");
    }
    if (r.camera < 0) {
      throw std::runtime_error("record " + std::to_string(i) +
                               ": negative camera id");
    }
  }
  // num_identities is the distinct label count for raw datasets. Derived
  // training sets may instead declare the label-space width with labels in
  // [0, C): label disturbance can flip every record of an identity away
  // without shrinking the classifier head.
  int max_label = -1;
  for (const EmbeddingRecord& r : dataset.records) {
    max_label = std::max(max_label, r.identity);
  }
  const int distinct = count_distinct_identities(dataset);
  const bool raw = dataset.num_identities == distinct;
  const bool derived =
      distinct <= dataset.num_identities && max_label < dataset.num_identities;
  if (!raw && !derived) {
    throw std::runtime_error("num_identities does not match records");
  }
}

void validate(const UnlabeledPool& pool) {
  const std::size_t d = pool.dim();
  for (std::size_t i = 0; i < pool.records.size(); ++i) {
    check_vector(pool.records[i], d, i);
  }
}

int count_distinct_identities(const LabeledDataset& dataset) {
  std::set<int> ids;
  for (const EmbeddingRecord& r : dataset.records) ids.insert(r.identity);
  return static_cast<int>(ids.size());
}

bool has_canonical_labels(const LabeledDataset& dataset) {
  std::set<int> ids;
  for (const EmbeddingRecord& r : dataset.records) {
    if (r.identity < 0) return false;
    ids.insert(r.identity);
  }
  if (static_cast<int>(ids.size()) != dataset.num_identities) return false;
  return ids.empty() || (*ids.begin() == 0 &&
                         *ids.rbegin() == dataset.num_identities - 1);
}

std::pair<LabeledDataset, std::map<int, int>> canonicalize_labels(
    const LabeledDataset& dataset) {
  if (dataset.records.empty()) {
    throw std::runtime_error("empty dataset");
  }
  std::set<int> distinct;
  for (const EmbeddingRecord& r : dataset.records) {
    if (r.identity < 0) {
      throw std::runtime_error("negative identity label");
    }
    distinct.insert(r.identity);
  }
  std::map<int, int> label_map;
  int next = 0;
  for (int original : distinct) label_map[original] = next++;

  LabeledDataset out = dataset;
  for (EmbeddingRecord& r : out.records) r.identity = label_map[r.identity];
  out.num_identities = next;
  return {std::move(out), std::move(label_map)};
}

namespace {

LabeledDataset take(const LabeledDataset& dataset,
                    const std::vector<char>& in_first, bool first) {
  LabeledDataset out;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    if (static_cast<bool>(in_first[i]) == first) {
      out.records.push_back(dataset.records[i]);
    }
  }
  out.num_identities = count_distinct_identities(out);
  return out;
}

std::pair<LabeledDataset, LabeledDataset> split_by_record(
    const LabeledDataset& dataset, const SplitSpec& spec) {
  const std::size_t n = dataset.records.size();
  auto n_train = static_cast<std::size_t>(
      std::llround(spec.train_fraction * static_cast<double>(n)));
  n_train = std::min(n_train, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(spec.seed);
  rng.shuffle(order);

  std::vector<char> in_train(n, 0);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = 1;

  // Repair pass: every identity must keep at least one training record.
  std::unordered_map<int, std::size_t> train_count;
  for (std::size_t i = 0; i < n; ++i) {
    if (in_train[i]) ++train_count[dataset.records[i].identity];
  }
  std::map<int, std::size_t> missing;  // identity -> lowest val record index
  for (std::size_t i = 0; i < n; ++i) {
    int id = dataset.records[i].identity;
    if (!in_train[i] && train_count[id] == 0 && !missing.count(id)) {
      missing[id] = i;
    }
  }
  for (auto [id, val_index] : missing) {
    // Evict the highest-index train record whose identity stays covered.
    bool swapped = false;
    for (std::size_t j = n; j-- > 0;) {
      if (in_train[j] && train_count[dataset.records[j].identity] >= 2) {
        in_train[j] = 0;
        --train_count[dataset.records[j].identity];
        swapped = true;
        break;
      }
    }
    // If no donor exists, grow the train side instead of dropping a class.
    in_train[val_index] = 1;
    ++train_count[id];
    (void)swapped;
  }

  return {take(dataset, in_train, true), take(dataset, in_train, false)};
}

std::pair<LabeledDataset, LabeledDataset> split_by_identity(
    const LabeledDataset& dataset, const SplitSpec& spec) {
  std::set<int> distinct;
  for (const EmbeddingRecord& r : dataset.records) distinct.insert(r.identity);
  if (distinct.size() < 2) {
    throw std::runtime_error("by-identity split needs at least two identities");
  }
  std::vector<int> ids(distinct.begin(), distinct.end());
  Rng rng(spec.seed);
  rng.shuffle(ids);

  const auto c = static_cast<double>(ids.size());
  auto n_train_ids =
      static_cast<std::size_t>(std::llround(spec.train_fraction * c));
  n_train_ids = std::clamp<std::size_t>(n_train_ids, 1, ids.size());

  std::set<int> train_ids(ids.begin(), ids.begin() + n_train_ids);
  std::vector<char> in_train(dataset.records.size(), 0);
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    in_train[i] = train_ids.count(dataset.records[i].identity) ? 1 : 0;
  }
  return {take(dataset, in_train, true), take(dataset, in_train, false)};
}

}  // namespace

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& dataset,
                                                const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0) || spec.train_fraction > 1.0) {
    throw std::runtime_error("train_fraction must be in (0, 1]");
  }
  if (spec.mode == SplitMode::ByRecord) {
    return split_by_record(dataset, spec);
  }
  return split_by_identity(dataset, spec);
}

}  // namespace reid
