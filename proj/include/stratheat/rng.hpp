#pragma once

// Seeding and sampling primitives shared by every stochastic module.
//
// All randomness flows through std::mt19937_64 engines whose seeds are derived
// deterministically from a base seed and a list of stream indices (path index,
// mode index, retry counter, ...). Distribution sampling is implemented here
// rather than with <random> adaptors so that sampled paths are identical across
// standard libraries and fast enough for ~1e10-draw coupling ensembles.

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>

namespace stratheat {

// splitmix64 finalizer: bijective 64-bit mixer with full avalanche.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Deterministic seed for a named substream, e.g. derive_seed(base, {mode, path}).
inline constexpr std::uint64_t derive_seed(std::uint64_t base,
                                           std::initializer_list<std::uint64_t> ids) noexcept {
  std::uint64_t s = mix64(base);
  for (std::uint64_t id : ids) s = mix64(s ^ (id + 0x9E3779B97F4A7C15ULL));
  return s;
}

inline std::mt19937_64 make_engine(std::uint64_t base,
                                   std::initializer_list<std::uint64_t> ids = {}) {
  return std::mt19937_64(derive_seed(base, ids));
}

// Uniform double in [0, 1) from the top 53 bits.
template <class URBG>
inline double uniform_unit(URBG& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

template <class URBG>
inline double sample_exponential(URBG& g, double rate) {
  if (rate <= 0.0) throw std::invalid_argument("sample_exponential: rate must be positive");
  double u;
  do { u = uniform_unit(g); } while (u <= 0.0);
  return -std::log(u) / rate;
}

template <class URBG>
inline double rademacher(URBG& g) {
  return (g() & 1u) ? 1.0 : -1.0;
}

namespace detail {

// 256-layer ziggurat for the standard normal. Tables are solved at first use by
// bisection on the base-strip abscissa r so that the equal-area recursion lands
// exactly on the mode; no hard-coded table constants to get subtly wrong.
struct ZigguratTables {
  static constexpr int layers = 256;
  std::array<double, layers + 1> x{};  // x[0] = virtual base width > x[1] = r > ... > x[256] = 0
  std::array<double, layers + 1> f{};  // f[i] = exp(-x[i]^2/2), f[256] = 1

  ZigguratTables() {
    auto phi = [](double t) { return std::exp(-0.5 * t * t); };
    auto tail_area = [](double r) {
      return std::sqrt(std::acos(-1.0) / 2.0) * std::erfc(r / std::sqrt(2.0));
    };
    // top_gap(r) = f-level reached after 255 equal-area strips, minus 1.
    auto top_gap = [&](double r) {
      const double v = r * phi(r) + tail_area(r);
      double xi = r, fi = phi(r);
      for (int i = 2; i <= layers; ++i) {
        fi += v / xi;
        if (fi >= 1.0) return fi - 1.0;  // overshoot: r too small
        xi = std::sqrt(-2.0 * std::log(fi));
      }
      return fi - 1.0;
    };
    double lo = 3.0, hi = 4.5;  // top_gap decreases in r; root is near 3.654
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (top_gap(mid) > 0.0 ? lo : hi) = mid;
    }
    const double r = 0.5 * (lo + hi);
    const double v = r * phi(r) + tail_area(r);
    x[0] = v / phi(r);
    x[1] = r;
    f[1] = phi(r);
    f[0] = f[1];  // base strip shares the curve value at r
    for (int i = 2; i <= layers; ++i) {
      f[i] = f[i - 1] + v / x[i - 1];
      x[i] = (f[i] >= 1.0) ? 0.0 : std::sqrt(-2.0 * std::log(f[i]));
    }
    x[layers] = 0.0;
    f[layers] = 1.0;
    if (x[layers - 1] <= 0.0 || x[layers - 1] >= x[1])
      throw std::logic_error("ziggurat table construction failed");
  }
};

inline const ZigguratTables& ziggurat() {
  static const ZigguratTables tables;
  return tables;
}

}  // namespace detail

// Standard normal draw; ~98% of calls cost one engine call plus one multiply.
template <class URBG>
inline double sample_normal(URBG& g) {
  const auto& z = detail::ziggurat();
  for (;;) {
    const std::uint64_t bits = g();
    const int i = static_cast<int>(bits & 0xFF);
    const double sign = (bits & 0x100) ? -1.0 : 1.0;
    const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
    const double v = u * z.x[i];
    if (v < z.x[i + 1]) return sign * v;
    if (i == 0) {
      // Tail beyond r via exponential rejection.
      const double r = z.x[1];
      for (;;) {
        const double e1 = -std::log(1.0 - uniform_unit(g)) / r;
        const double e2 = -std::log(1.0 - uniform_unit(g));
        if (2.0 * e2 >= e1 * e1) return sign * (r + e1);
      }
    }
    const double y = z.f[i] + uniform_unit(g) * (z.f[i + 1] - z.f[i]);
    if (y < std::exp(-0.5 * v * v)) return sign * v;
  }
}

}  // namespace stratheat
