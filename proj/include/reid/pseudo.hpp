#pragma once

#include <cstdint>
#include <vector>

#include "reid/data.hpp"

namespace reid {

struct MinedPair {
  std::size_t query_index = 0;  // into the labeled training set
  std::size_t pool_index = 0;   // into the unlabeled pool
  double distance = 0.0;        // exact Euclidean distance
  int transferred_label = 0;    // identity of the query record

  bool operator==(const MinedPair&) const = default;
};

struct PseudoPositiveSet {
  std::vector<MinedPair> pairs;
  std::size_t intended_count = 0;  // the requested K

  bool operator==(const PseudoPositiveSet&) const = default;
};

// Exact nearest-neighbor search, one pair per query. Ties break toward the
// lowest pool index. With l2_normalize set, both sides are scaled to unit
// norm before the distance (the stored distance is then the normalized one).
std::vector<MinedPair> mine_nearest(
    const std::vector<FeatureVector>& query_features,
    const std::vector<int>& query_labels,
    const std::vector<FeatureVector>& pool_features, bool l2_normalize = false);

// Deduplicates by pool index (the minimum-distance claimant wins, then the
// lower query index), then keeps a uniform random subset of size
// min(k, remaining). Output is ordered by query index.
PseudoPositiveSet select_pseudo_positives(const std::vector<MinedPair>& mined,
                                          std::size_t k, std::uint64_t seed);

// Appends the selected pool vectors to the training set under their
// transferred labels. Pseudo records get the sentinel camera id so the
// evaluator can never treat them as probe or gallery material.
LabeledDataset merge(const LabeledDataset& train,
                     const PseudoPositiveSet& pseudo, const UnlabeledPool& pool);

// DisturbLabel: exactly `count` distinct records get a uniformly random label
// different from their own.
LabeledDataset disturb_labels(const LabeledDataset& train, std::size_t count,
                              std::uint64_t seed);

// DisturbLabel*: `count` pool vectors sampled without replacement, each
// appended under a uniformly random identity.
LabeledDataset disturb_star(const LabeledDataset& train,
                            const UnlabeledPool& pool, std::size_t count,
                            std::uint64_t seed);

// One past the largest camera id present (0 for an empty set).
int sentinel_camera(const LabeledDataset& dataset);

}  // namespace reid
