#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace reid {

// 64-bit FNV-1a over a byte string. Stable across platforms; used for seed
// derivation and config hashing.
std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 14695981039346656037ULL);

// Deterministic splitmix64 generator. All randomness in this project flows
// through this engine: the std:: distributions are not specified bit-for-bit
// across standard libraries, and experiment records must replay exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Unbiased draw in [0, n). n must be > 0.
  std::uint64_t next_below(std::uint64_t n);

  // Uniform in [0, 1) with 53 random bits.
  double next_double();

  // Standard normal via Box-Muller. Draws two uniforms per call; no cached
  // spare, so the stream position is a simple function of the call count.
  double next_gaussian();
  double next_gaussian(double mean, double stddev);

  // Fisher-Yates, from the back.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// Derives an independent child seed from a root seed and a label, so the
// random streams of unrelated components (shuffling, selection, protocol
// sampling, ...) can be varied or replayed independently.
std::uint64_t derive_seed(std::uint64_t root, std::string_view label);
std::uint64_t derive_seed(std::uint64_t root, std::string_view label,
                          std::uint64_t index);

}  // namespace reid
