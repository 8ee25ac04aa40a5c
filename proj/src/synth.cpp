#include "reid/synth.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "reid/rng.hpp"

namespace reid {

namespace {

void check_config(const SynthConfig& c) {
  if (c.num_identities < 1) throw std::runtime_error("num_identities must be >= 1");
  if (c.samples_per_identity < 1) {
    throw std::runtime_error("samples_per_identity must be >= 1");
  }
  if (c.dim < 1) throw std::runtime_error("dim must be >= 1");
  if (c.cluster_std < 0.0) throw std::runtime_error("cluster_std must be >= 0");
  if (c.camera_count < 2) {
    throw std::runtime_error(
        "camera_count must be >= 2 (cross-camera protocol impossible)");
  }
  if (c.camera_shift_std < 0.0) {
    throw std::runtime_error("camera_shift_std must be >= 0");
  }
  if (c.pool_size < 1) throw std::runtime_error("pool_size must be >= 1");
  if (c.pool_overlap < 0.0 || c.pool_overlap > 1.0) {
    throw std::runtime_error("pool_overlap must be in [0, 1]");
  }
}

FeatureVector draw_point(const FeatureVector& center, double std, Rng& rng) {
  FeatureVector v(center.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = center[i] + rng.next_gaussian(0.0, std);
  }
  return v;
}

std::vector<FeatureVector> draw_centers(int count, int dim, Rng& rng) {
  std::vector<FeatureVector> centers;
  centers.reserve(count);
  for (int i = 0; i < count; ++i) {
    FeatureVector c(dim);
    for (double& x : c) x = rng.next_gaussian(0.0, 1.0);
    centers.push_back(std::move(c));
  }
  return centers;
}

}  // namespace

SynthData generate(const SynthConfig& config) {
  check_config(config);
  const int C = config.num_identities;
  const int dim = config.dim;

  Rng center_rng(derive_seed(config.seed, "centers"));
  const std::vector<FeatureVector> centers = draw_centers(C, dim, center_rng);

  Rng offset_rng(derive_seed(config.seed, "camera-offsets"));
  // offsets[id][cam]
  std::vector<std::vector<FeatureVector>> offsets(C);
  for (int id = 0; id < C; ++id) {
    offsets[id].reserve(config.camera_count);
    for (int cam = 0; cam < config.camera_count; ++cam) {
      FeatureVector o(dim);
      for (double& x : o) {
        x = offset_rng.next_gaussian(0.0, config.camera_shift_std);
      }
      offsets[id].push_back(std::move(o));
    }
  }

  SynthData out;

  Rng train_rng(derive_seed(config.seed, "train-noise"));
  for (int id = 0; id < C; ++id) {
    for (int s = 0; s < config.samples_per_identity; ++s) {
      const int cam = s % config.camera_count;
      FeatureVector base(dim);
      for (int i = 0; i < dim; ++i) base[i] = centers[id][i] + offsets[id][cam][i];
      out.train.records.push_back(
          EmbeddingRecord{draw_point(base, config.cluster_std, train_rng), id, cam});
    }
  }
  out.train.num_identities = C;

  // Several probes per identity from alternating cameras keeps the rank-1
  // granularity fine without inflating the gallery.
  Rng query_rng(derive_seed(config.seed, "query-noise"));
  for (int id = 0; id < C; ++id) {
    for (int j = 0; j < 4; ++j) {
      const int cam = (id + j) % config.camera_count;
      FeatureVector base(dim);
      for (int i = 0; i < dim; ++i) {
        base[i] = centers[id][i] + offsets[id][cam][i];
      }
      out.query.records.push_back(EmbeddingRecord{
          draw_point(base, config.cluster_std, query_rng), id, cam});
    }
  }
  out.query.num_identities = C;

  Rng gallery_rng(derive_seed(config.seed, "gallery-noise"));
  for (int id = 0; id < C; ++id) {
    for (int cam = 0; cam < config.camera_count; ++cam) {
      FeatureVector base(dim);
      for (int i = 0; i < dim; ++i) base[i] = centers[id][i] + offsets[id][cam][i];
      out.gallery.records.push_back(EmbeddingRecord{
          draw_point(base, config.cluster_std, gallery_rng), id, cam});
    }
  }
  out.gallery.num_identities = C;

  // The independent database is captured under its own viewing conditions:
  // each pool point gets a private shift at the camera scale instead of one
  // of the training cameras' offsets.
  Rng pool_rng(derive_seed(config.seed, "pool"));
  // Fresh clusters are few, dense, and deliberately confusable: each sits
  // between two identities, an unknown pedestrian resembling both.
  const int num_fresh = std::max(4, C / 8); /*FRESHC*/
  std::vector<FeatureVector> fresh;
  fresh.reserve(num_fresh);
  for (int f = 0; f < num_fresh; ++f) {
    const auto a = pool_rng.next_below(static_cast<std::uint64_t>(C));
    auto b = pool_rng.next_below(static_cast<std::uint64_t>(C - 1));
    if (b >= a) ++b;
    FeatureVector mid(dim);
    for (int k = 0; k < dim; ++k) {
      mid[k] = 0.5 * (centers[a][k] + centers[b][k]); /*MIDT*/
    }
    fresh.push_back(std::move(mid));
  }
  // The capture site behind the pool has its own viewing conditions: one
  // session offset per pedestrian, at the camera shift scale.
  std::vector<FeatureVector> session(C + num_fresh);
  for (auto& o : session) {
    o.resize(dim);
    for (double& x : o) x = pool_rng.next_gaussian(0.0, config.camera_shift_std * 1.0 /*SESSF*/);
  }
  for (int i = 0; i < config.pool_size; ++i) {
    const bool near = pool_rng.next_double() < config.pool_overlap;
    const std::size_t who =
        near ? pool_rng.next_below(static_cast<std::uint64_t>(C))
             : static_cast<std::size_t>(C) + pool_rng.next_below(fresh.size());
    const FeatureVector& center = near ? centers[who] : fresh[who - C];
    FeatureVector base(dim);
    for (int k = 0; k < dim; ++k) {
      base[k] = center[k] + session[who][k];
    }
    out.pool.records.push_back(draw_point(base, config.cluster_std, pool_rng));
  }

  return out;
}

}  // namespace reid
