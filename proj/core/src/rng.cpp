#include "equinash/rng.hpp"

#include <cmath>

namespace equinash {

namespace {

constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr uint32_t kWeyl0 = 0x9E3779B9u;
constexpr uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
  const uint64_t p = static_cast<uint64_t>(a) * b;
  hi = static_cast<uint32_t>(p >> 32);
  lo = static_cast<uint32_t>(p);
}

}  // namespace

std::array<uint32_t, 4> Philox4x32::block(
    uint64_t key, const std::array<uint32_t, 4>& counter) {
  uint32_t k0 = static_cast<uint32_t>(key);
  uint32_t k1 = static_cast<uint32_t>(key >> 32);
  std::array<uint32_t, 4> c = counter;
  for (int round = 0; round < 10; ++round) {
    uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, c[0], hi0, lo0);
    mulhilo(kPhiloxM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return c;
}

double uniform_from_bits(uint32_t hi, uint32_t lo) {
  const uint64_t bits = (static_cast<uint64_t>(hi) << 32) | lo;
  // 53 significant bits, offset by half an ulp to stay inside (0,1).
  return static_cast<double>(bits >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

std::array<double, 2> normal_pair(uint64_t key,
                                  const std::array<uint32_t, 4>& counter) {
  const auto c = Philox4x32::block(key, counter);
  const double u1 = uniform_from_bits(c[0], c[1]);
  const double u2 = uniform_from_bits(c[2], c[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 6.283185307179586476925286766559 * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

double NormalStream::operator()(uint64_t i) const {
  const std::array<uint32_t, 4> ctr = {path_, substream_,
                                       static_cast<uint32_t>(i >> 1),
                                       static_cast<uint32_t>(i >> 33)};
  const auto pair = normal_pair(seed_, ctr);
  return pair[i & 1];
}

uint64_t mix_seed(uint64_t seed, uint64_t tag) {
  uint64_t z = seed + 0x9E3779B97F4A7C15ull * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace equinash
