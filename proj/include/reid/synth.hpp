#pragma once

#include <cstdint>

#include "reid/data.hpp"

namespace reid {

// Gaussian identity clusters with per-(identity, camera) additive offsets.
// The pool mixes points drawn near existing identity clusters (fraction
// pool_overlap: the useful pseudo-positives) with points from fresh clusters
// that belong to no training identity (the distractors).
struct SynthConfig {
  int num_identities = 50;
  int samples_per_identity = 6;
  int dim = 16;
  double cluster_std = 0.25;
  int camera_count = 2;
  double camera_shift_std = 1.0;
  int pool_size = 2000;
  double pool_overlap = 0.7;
  std::uint64_t seed = 0;

  bool operator==(const SynthConfig&) const = default;
};

struct SynthData {
  LabeledDataset train;
  LabeledDataset query;    // one record per identity
  LabeledDataset gallery;  // one record per (identity, camera)
  UnlabeledPool pool;
};

// Deterministic under config.seed. Every query identity has a cross-camera
// gallery match by construction (camera_count >= 2 is required).
SynthData generate(const SynthConfig& config);

}  // namespace reid
