#pragma once

// Scalar reaction nonlinearities applied pointwise (Nemytskii style). The
// bounds are caller-declared and used by sanity checks, not enforced on every
// evaluation.

#include <cmath>
#include <functional>
#include <stdexcept>

namespace stratheat {

struct VectorField {
  std::function<double(double)> f;
  std::function<double(double)> df;
  std::function<double(double)> d2f;
  double bound_f = 0.0;
  double bound_df = 0.0;
  double bound_d2f = 0.0;
};

enum class Jet { f, df, d2f };

inline VectorField zero_vector_field() {
  auto z = [](double) { return 0.0; };
  return {z, z, z, 0.0, 0.0, 0.0};
}

inline VectorField constant_vector_field(double kappa) {
  auto z = [](double) { return 0.0; };
  return {[kappa](double) { return kappa; }, z, z, std::abs(kappa), 0.0, 0.0};
}

inline VectorField sine_vector_field() {
  return {[](double y) { return std::sin(y); }, [](double y) { return std::cos(y); },
          [](double y) { return -std::sin(y); }, 1.0, 1.0, 1.0};
}

// f(y) = y on the declared range; the bounds describe that range rather than a
// global supremum (the map itself is unbounded).
inline VectorField identity_vector_field(double range) {
  if (!(range > 0.0)) throw std::invalid_argument("identity_vector_field: range must be positive");
  auto one = [](double) { return 1.0; };
  auto zero = [](double) { return 0.0; };
  return {[](double y) { return y; }, one, zero, range, 1.0, 0.0};
}

// Smooth bounded version of the identity: f(y) = cap tanh(y/cap). Near the
// origin f(y) = y + O(y^3/cap^2); all derivatives are globally bounded.
inline VectorField clipped_linear_vector_field(double cap) {
  if (!(cap > 0.0)) throw std::invalid_argument("clipped_linear_vector_field: cap must be positive");
  return {[cap](double y) { return cap * std::tanh(y / cap); },
          [cap](double y) {
            const double c = std::cosh(y / cap);
            return 1.0 / (c * c);
          },
          [cap](double y) {
            const double u = y / cap;
            const double c = std::cosh(u);
            return -2.0 * std::tanh(u) / (c * c * cap);
          },
          cap, 1.0, 0.7699 / cap};
}

}  // namespace stratheat
