#include "reid/pseudo.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include "reid/rng.hpp"

namespace reid {

namespace {

FeatureVector unit_norm(const FeatureVector& v) {
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  if (norm2 == 0.0) return v;
  const double inv = 1.0 / std::sqrt(norm2);
  FeatureVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * inv;
  return out;
}

double squared_distance(const FeatureVector& a, const FeatureVector& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace

std::vector<MinedPair> mine_nearest(
    const std::vector<FeatureVector>& query_features,
    const std::vector<int>& query_labels,
    const std::vector<FeatureVector>& pool_features, bool l2_normalize) {
  if (pool_features.empty()) throw std::runtime_error("empty pool");
  if (query_features.size() != query_labels.size()) {
    throw std::runtime_error("feature/label count mismatch");
  }
  if (query_features.empty()) return {};
  const std::size_t d = query_features.front().size();
  for (const FeatureVector& v : pool_features) {
    if (v.size() != d) {
      throw std::runtime_error("query/pool dimension mismatch");
    }
  }

  std::vector<FeatureVector> pool_view;
  const std::vector<FeatureVector>* pool = &pool_features;
  if (l2_normalize) {
    pool_view.reserve(pool_features.size());
    for (const FeatureVector& v : pool_features) {
      pool_view.push_back(unit_norm(v));
    }
    pool = &pool_view;
  }

  std::vector<MinedPair> pairs;
  pairs.reserve(query_features.size());
  for (std::size_t qi = 0; qi < query_features.size(); ++qi) {
    const FeatureVector query =
        l2_normalize ? unit_norm(query_features[qi]) : query_features[qi];
    if (query.size() != d) {
      throw std::runtime_error("inconsistent query dimensions");
    }
    std::size_t best = 0;
    double best_d2 = squared_distance(query, (*pool)[0]);
    for (std::size_t pi = 1; pi < pool->size(); ++pi) {
      const double d2 = squared_distance(query, (*pool)[pi]);
      if (d2 < best_d2) {
        best_d2 = d2;
        best = pi;
      }
    }
    pairs.push_back(MinedPair{qi, best, std::sqrt(best_d2), query_labels[qi]});
  }
  return pairs;
}

PseudoPositiveSet select_pseudo_positives(const std::vector<MinedPair>& mined,
                                          std::size_t k, std::uint64_t seed) {
  // One unlabeled sample must never carry two identities: keep only the
  // minimum-distance claimant per pool index.
  std::map<std::size_t, MinedPair> best;
  for (const MinedPair& p : mined) {
    auto it = best.find(p.pool_index);
    if (it == best.end() || p.distance < it->second.distance ||
        (p.distance == it->second.distance &&
         p.query_index < it->second.query_index)) {
      best[p.pool_index] = p;
    }
  }
  std::vector<MinedPair> candidates;
  candidates.reserve(best.size());
  for (const auto& [pool_index, pair] : best) candidates.push_back(pair);
  std::sort(candidates.begin(), candidates.end(),
            [](const MinedPair& a, const MinedPair& b) {
              return a.query_index < b.query_index;
            });

  PseudoPositiveSet out;
  out.intended_count = k;
  if (k >= candidates.size()) {
    out.pairs = std::move(candidates);
    return out;
  }

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  order.resize(k);
  std::sort(order.begin(), order.end());
  for (std::size_t idx : order) out.pairs.push_back(candidates[idx]);
  return out;
}

LabeledDataset merge(const LabeledDataset& train,
                     const PseudoPositiveSet& pseudo,
                     const UnlabeledPool& pool) {
  if (!has_canonical_labels(train)) {
    throw std::runtime_error("merge requires canonical labels");
  }
  const int sentinel = sentinel_camera(train);
  LabeledDataset out = train;
  out.records.reserve(train.records.size() + pseudo.pairs.size());
  for (const MinedPair& p : pseudo.pairs) {
    if (p.transferred_label < 0 || p.transferred_label >= train.num_identities) {
      throw std::runtime_error("transferred label " +
                               std::to_string(p.transferred_label) +
                               " outside 0.." +
                               std::to_string(train.num_identities - 1));
    }
    if (p.pool_index >= pool.records.size()) {
      throw std::runtime_error("pool index out of range");
    }
    if (pool.records[p.pool_index].size() != train.dim()) {
      throw std::runtime_error("pool/train dimension mismatch");
    }
    out.records.push_back(EmbeddingRecord{pool.records[p.pool_index],
                                          p.transferred_label, sentinel});
  }
  return out;
}

LabeledDataset disturb_labels(const LabeledDataset& train, std::size_t count,
                              std::uint64_t seed) {
  if (!has_canonical_labels(train)) {
    throw std::runtime_error("disturb_labels requires canonical labels");
  }
  if (train.num_identities < 2) {
    throw std::runtime_error("need at least two identities");
  }
  if (count > train.records.size()) {
    throw std::runtime_error("count exceeds dataset size");
  }

  std::vector<std::size_t> order(train.records.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  order.resize(count);
  std::sort(order.begin(), order.end());

  LabeledDataset out = train;
  const auto c = static_cast<std::uint64_t>(train.num_identities);
  for (std::size_t idx : order) {
    const int original = out.records[idx].identity;
    // Uniform over the C-1 incorrect labels.
    auto draw = static_cast<int>(rng.next_below(c - 1));
    if (draw >= original) ++draw;
    out.records[idx].identity = draw;
  }
  return out;
}

LabeledDataset disturb_star(const LabeledDataset& train,
                            const UnlabeledPool& pool, std::size_t count,
                            std::uint64_t seed) {
  if (!has_canonical_labels(train)) {
    throw std::runtime_error("disturb_star requires canonical labels");
  }
  if (count > pool.records.size()) {
    throw std::runtime_error("count exceeds pool size");
  }
  if (count > 0 && pool.dim() != train.dim()) {
    throw std::runtime_error("pool/train dimension mismatch");
  }

  std::vector<std::size_t> order(pool.records.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  order.resize(count);
  std::sort(order.begin(), order.end());

  const int sentinel = sentinel_camera(train);
  const auto c = static_cast<std::uint64_t>(train.num_identities);
  LabeledDataset out = train;
  for (std::size_t idx : order) {
    const auto label = static_cast<int>(rng.next_below(c));
    out.records.push_back(EmbeddingRecord{pool.records[idx], label, sentinel});
  }
  return out;
}

int sentinel_camera(const LabeledDataset& dataset) {
  int max_camera = -1;
  for (const EmbeddingRecord& r : dataset.records) {
    max_camera = std::max(max_camera, r.camera);
  }
  return max_camera + 1;
}

}  // namespace reid
