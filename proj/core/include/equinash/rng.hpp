#pragma once

#include <array>
#include <cstdint>

namespace equinash {

// Philox4x32-10 counter-based generator. Stateless block function; a draw is
// fully determined by (key, counter), so streams keyed by (seed, path) are
// independent of scheduling and thread count.
struct Philox4x32 {
  static std::array<uint32_t, 4> block(uint64_t key,
                                       const std::array<uint32_t, 4>& counter);
};

// Uniform in (0,1) from 64 random bits, never exactly 0 or 1.
double uniform_from_bits(uint32_t hi, uint32_t lo);

// Two standard normals per counter via Box-Muller on one Philox block.
std::array<double, 2> normal_pair(uint64_t key,
                                  const std::array<uint32_t, 4>& counter);

// Indexed stream of N(0,1) draws for one (seed, path, substream) triple.
class NormalStream {
 public:
  NormalStream(uint64_t seed, uint32_t path, uint32_t substream)
      : seed_(seed), path_(path), substream_(substream) {}

  double operator()(uint64_t i) const;

 private:
  uint64_t seed_;
  uint32_t path_;
  uint32_t substream_;
};

// splitmix64-style combiner for deriving sub-seeds.
uint64_t mix_seed(uint64_t seed, uint64_t tag);

}  // namespace equinash
