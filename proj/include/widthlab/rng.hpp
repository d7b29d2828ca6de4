#ifndef WIDTHLAB_RNG_HPP
#define WIDTHLAB_RNG_HPP

#include <cmath>
#include <cstdint>

namespace widthlab {

// Counter-based random stream: every draw is a pure function of
// (seed, stream, row, col), so entry (l, j, q) of a weight matrix has the
// same value at every width.  The top-left block of a width-4096 matrix is
// bit-identical to the whole width-64 matrix drawn from the same seed.

inline constexpr uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline constexpr uint64_t counter_key(uint64_t seed, uint32_t stream,
                                      uint64_t row, uint64_t col) {
  uint64_t k = mix64(seed ^ 0x243f6a8885a308d3ull);
  k = mix64(k ^ (uint64_t{stream} << 32));
  k = mix64(k ^ row);
  k = mix64(k ^ col);
  return k;
}

// Uniform in (0,1], 53-bit resolution.
inline double uniform01_at(uint64_t seed, uint32_t stream, uint64_t row,
                           uint64_t col, uint64_t salt = 0) {
  const uint64_t bits = mix64(counter_key(seed, stream, row, col) + salt);
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

// Standard normal via Box-Muller (cosine branch), one value per counter.
inline double gaussian_at(uint64_t seed, uint32_t stream, uint64_t row,
                          uint64_t col) {
  const double u1 = uniform01_at(seed, stream, row, col, 0x6b43a9b5eull);
  const double u2 = uniform01_at(seed, stream, row, col, 0x2545f4914f6cdd1dull);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

// Stream ids.  Weight/bias streams are keyed per layer; the rest are fixed.
namespace streams {
inline constexpr uint32_t weight(int layer) { return static_cast<uint32_t>(layer); }
inline constexpr uint32_t bias(int layer) { return 64u + static_cast<uint32_t>(layer); }
inline constexpr uint32_t data_inputs = 128;
inline constexpr uint32_t data_targets = 129;
inline constexpr uint32_t shuffle = 130;
inline constexpr uint32_t mc = 131;
inline constexpr uint32_t grad_subset = 132;
}  // namespace streams

}  // namespace widthlab

#endif  // WIDTHLAB_RNG_HPP
