#ifndef WIDTHLAB_SCALE_HPP
#define WIDTHLAB_SCALE_HPP

#include <cmath>
#include <compare>
#include <cstdint>
#include <stdexcept>

namespace widthlab {

// Exponent stored in units of 1/2.  Every exponent in an ac-parameterization
// here is a multiple of one half, so this keeps them exact; they become
// floating point only inside width_pow().
struct HalfExp {
  int halves = 0;

  static constexpr HalfExp of_int(int v) { return HalfExp{2 * v}; }
  static constexpr HalfExp of_halves(int h) { return HalfExp{h}; }

  constexpr double value() const { return 0.5 * static_cast<double>(halves); }
  constexpr HalfExp operator-() const { return HalfExp{-halves}; }
  constexpr HalfExp operator+(HalfExp o) const { return HalfExp{halves + o.halves}; }
  constexpr HalfExp operator-(HalfExp o) const { return HalfExp{halves - o.halves}; }
  friend constexpr auto operator<=>(HalfExp, HalfExp) = default;
};

namespace detail {
inline double ipow(double base, int n) {
  double r = 1.0;
  double b = base;
  for (int k = n; k > 0; k >>= 1) {
    if (k & 1) r *= b;
    if (k > 1) b *= b;
  }
  return r;
}
}  // namespace detail

// m^e with e a half-integer.  Computed as m^floor(e) * sqrt(m)^(e odd) so the
// result is exact whenever m is a power of four (the width grids used here),
// which in turn makes reparameterization identities hold bit-for-bit.
inline double width_pow(int m, HalfExp e) {
  if (m <= 0) throw std::invalid_argument("width_pow: m must be positive");
  const int h = e.halves >= 0 ? e.halves : -e.halves;
  double r = detail::ipow(static_cast<double>(m), h / 2);
  if (h & 1) r *= std::sqrt(static_cast<double>(m));
  return e.halves >= 0 ? r : 1.0 / r;
}

}  // namespace widthlab

#endif  // WIDTHLAB_SCALE_HPP
