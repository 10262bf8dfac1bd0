#pragma once

// Two-parameter increment calculus adapted to the heat semigroup, and the
// first- and second-order convolution operators built from a noise field by
// integration by parts:
//
//   L^W_{ts}(phi)  = S_{t-s}(phi dW_{ts}) - int_s^t Delta S_{t-u}(phi dW_{tu}) du
//   L^WW_{ts}(phi) = 1/2 { S_{t-s}(phi dW_{ts}^2)
//                          - int_s^t Delta S_{t-u}(phi [dW_{tu}^2 + 2 dW_{tu} dW_{us}]) du }
//
// with dW_{ts} := W_t - W_s evaluated pointwise. Per mode the kernel
// Delta S_v has the analytic factor -mu_k e^{-mu_k v}, so the integrals are
// computed by midpoint quadrature on a mesh graded quadratically toward
// v = t - u = 0, where the operator-norm singularity concentrates.
//
// The twisted increment (delta-hat z)_{tus} = z_ts - z_tu - S_{t-u} z_us
// satisfies two exact algebraic identities used as consistency checks:
// delta-hat L^W = 0 and (delta-hat L^WW)_{tus}(phi) = L^W_{tu}(phi dW_{us}).
// Numerical residuals of both are pure quadrature error, so they must shrink
// under quadrature refinement; chen_check measures them. To keep the second
// identity free of band-limit effects, the multiplier phi dW_{us} is kept in
// value space rather than re-truncated to coefficients.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stratheat/grid.hpp"
#include "stratheat/noise.hpp"
#include "stratheat/solver.hpp"
#include "stratheat/spectral.hpp"
#include "stratheat/vectorfield.hpp"

namespace stratheat {

struct TwoVarSample {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<double> separations;
  std::vector<double> values;

  void push(std::size_t i, std::size_t j, double sep, double value) {
    pairs.emplace_back(i, j);
    separations.push_back(sep);
    values.push_back(value);
  }
};

// Non-overlapping pairs at dyadic separations 2^{-j} of the horizon,
// j = j_coarse..j_fine; steps must be divisible by each 2^j.
inline std::vector<std::pair<std::size_t, std::size_t>> dyadic_pairs(std::size_t steps,
                                                                     std::size_t j_coarse,
                                                                     std::size_t j_fine) {
  if (j_coarse > j_fine) throw std::invalid_argument("dyadic_pairs: level order");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t j = j_coarse; j <= j_fine; ++j) {
    const std::size_t parts = static_cast<std::size_t>(1) << j;
    if (steps % parts != 0)
      throw std::invalid_argument("dyadic_pairs: steps not divisible by 2^level");
    const std::size_t sep = steps / parts;
    for (std::size_t i = 0; i + sep <= steps; i += sep) out.emplace_back(i, i + sep);
  }
  return out;
}

inline SpectralField delta_hat_path(const SolutionPath& y, std::size_t i_s, std::size_t i_t) {
  if (i_s >= i_t) throw std::invalid_argument("delta_hat_path: need s < t");
  SpectralField out = y.at(i_t);
  out -= semigroup_apply(y.at(i_s), y.grid.time(i_t) - y.grid.time(i_s));
  return out;
}

// (delta-hat z)_{tus} from the three samples of a two-parameter map.
inline SpectralField delta_hat_combine(const SpectralField& z_ts, const SpectralField& z_tu,
                                       const SpectralField& z_us, double t_minus_u) {
  if (t_minus_u <= 0.0) throw std::invalid_argument("delta_hat_combine: need u < t");
  SpectralField out = z_ts;
  out -= z_tu;
  out -= semigroup_apply(z_us, t_minus_u);
  return out;
}

namespace detail {

struct GradedMesh {
  std::vector<double> mid, weight;
};

// Cells of [0, L] with boundaries L (i/m)^2, clustering toward 0.
inline GradedMesh graded_mesh(double length, std::size_t cells) {
  GradedMesh mesh;
  mesh.mid.resize(cells);
  mesh.weight.resize(cells);
  double lo = 0.0;
  for (std::size_t i = 0; i < cells; ++i) {
    const double frac = static_cast<double>(i + 1) / static_cast<double>(cells);
    const double hi = length * frac * frac;
    mesh.mid[i] = 0.5 * (lo + hi);
    mesh.weight[i] = hi - lo;
    lo = hi;
  }
  return mesh;
}

inline void check_rough_args(const NoiseField& W, std::size_t i_s, std::size_t i_t,
                             std::size_t quad_steps, const SineBasis& basis) {
  if (i_s >= i_t || i_t >= W.grid().size())
    throw std::invalid_argument("rough operator: need grid indices s < t");
  if (quad_steps < 8) throw std::invalid_argument("rough operator: quad_steps >= 8 required");
  if (basis.modes() < W.modes())
    throw std::invalid_argument("rough operator: basis does not cover the noise modes");
}

// L^W with the multiplier given by its collocation values.
inline SpectralField l_w_values(const NoiseField& W, const std::vector<double>& mult,
                                std::size_t i_s, std::size_t i_t, std::size_t quad_steps,
                                const SineBasis& basis, std::size_t out_modes) {
  check_rough_args(W, i_s, i_t, quad_steps, basis);
  const std::size_t M = basis.grid().size();
  const double s = W.grid().time(i_s), t = W.grid().time(i_t), L = t - s;

  std::vector<double> w_t(M), w_u(M), prod(M);
  basis.synthesize_into(W.field_at(i_t), w_t);
  basis.synthesize_into(W.field_at(i_s), w_u);  // holds W_s for the boundary term
  for (std::size_t m = 0; m < M; ++m) prod[m] = mult[m] * (w_t[m] - w_u[m]);

  SpectralField out(out_modes), cell(out_modes);
  analyze_prefix(basis, prod, out_modes, out);
  for (std::size_t k = 1; k <= out_modes; ++k) out.coeff(k) *= std::exp(-laplace_eigenvalue(k) * L);

  const GradedMesh mesh = graded_mesh(L, quad_steps);
  for (std::size_t c = 0; c < quad_steps; ++c) {
    const double v = mesh.mid[c];
    basis.synthesize_into(W.field_at_time(t - v), w_u);
    for (std::size_t m = 0; m < M; ++m) prod[m] = mult[m] * (w_t[m] - w_u[m]);
    analyze_prefix(basis, prod, out_modes, cell);
    for (std::size_t k = 1; k <= out_modes; ++k) {
      const double mu = laplace_eigenvalue(k);
      out.coeff(k) += mesh.weight[c] * mu * std::exp(-mu * v) * cell.coeff(k);
    }
  }
  return out;
}

inline SpectralField l_ww_values(const NoiseField& W, const std::vector<double>& mult,
                                 std::size_t i_s, std::size_t i_t, std::size_t quad_steps,
                                 const SineBasis& basis, std::size_t out_modes) {
  check_rough_args(W, i_s, i_t, quad_steps, basis);
  const std::size_t M = basis.grid().size();
  const double s = W.grid().time(i_s), t = W.grid().time(i_t), L = t - s;

  std::vector<double> w_t(M), w_s(M), w_u(M), prod(M);
  basis.synthesize_into(W.field_at(i_t), w_t);
  basis.synthesize_into(W.field_at(i_s), w_s);
  for (std::size_t m = 0; m < M; ++m) {
    const double d = w_t[m] - w_s[m];
    prod[m] = mult[m] * d * d;
  }

  SpectralField out(out_modes), cell(out_modes);
  analyze_prefix(basis, prod, out_modes, out);
  for (std::size_t k = 1; k <= out_modes; ++k) out.coeff(k) *= std::exp(-laplace_eigenvalue(k) * L);

  const GradedMesh mesh = graded_mesh(L, quad_steps);
  for (std::size_t c = 0; c < quad_steps; ++c) {
    const double v = mesh.mid[c];
    basis.synthesize_into(W.field_at_time(t - v), w_u);
    for (std::size_t m = 0; m < M; ++m) {
      const double dtu = w_t[m] - w_u[m];
      const double dus = w_u[m] - w_s[m];
      prod[m] = mult[m] * (dtu * dtu + 2.0 * dtu * dus);
    }
    analyze_prefix(basis, prod, out_modes, cell);
    for (std::size_t k = 1; k <= out_modes; ++k) {
      const double mu = laplace_eigenvalue(k);
      out.coeff(k) += mesh.weight[c] * mu * std::exp(-mu * v) * cell.coeff(k);
    }
  }
  out *= 0.5;
  return out;
}

}  // namespace detail

inline SpectralField l_w_apply(const NoiseField& W, const SpectralField& phi, std::size_t i_s,
                               std::size_t i_t, std::size_t quad_steps, const Grid1D& g) {
  const SineBasis basis(std::max(phi.modes(), W.modes()), g);
  return detail::l_w_values(W, basis.synthesize(phi), i_s, i_t, quad_steps, basis, phi.modes());
}

inline SpectralField l_ww_apply(const NoiseField& W, const SpectralField& phi, std::size_t i_s,
                                std::size_t i_t, std::size_t quad_steps, const Grid1D& g) {
  const SineBasis basis(std::max(phi.modes(), W.modes()), g);
  return detail::l_ww_values(W, basis.synthesize(phi), i_s, i_t, quad_steps, basis, phi.modes());
}

// Residual norms of the two exact algebraic identities at s < u < t; both are
// zero in exact arithmetic up to quadrature error.
inline std::pair<double, double> chen_check(const NoiseField& W, const SpectralField& phi,
                                            std::size_t i_s, std::size_t i_u, std::size_t i_t,
                                            std::size_t quad_steps, const Grid1D& g) {
  if (!(i_s < i_u && i_u < i_t)) throw std::invalid_argument("chen_check: need s < u < t");
  const SineBasis basis(std::max(phi.modes(), W.modes()), g);
  const auto phi_values = basis.synthesize(phi);
  const double dt_tu = W.grid().time(i_t) - W.grid().time(i_u);
  const std::size_t K = phi.modes();

  const auto lw_ts = detail::l_w_values(W, phi_values, i_s, i_t, quad_steps, basis, K);
  const auto lw_tu = detail::l_w_values(W, phi_values, i_u, i_t, quad_steps, basis, K);
  const auto lw_us = detail::l_w_values(W, phi_values, i_s, i_u, quad_steps, basis, K);
  const double r1 = delta_hat_combine(lw_ts, lw_tu, lw_us, dt_tu).norm_b();

  const auto lww_ts = detail::l_ww_values(W, phi_values, i_s, i_t, quad_steps, basis, K);
  const auto lww_tu = detail::l_ww_values(W, phi_values, i_u, i_t, quad_steps, basis, K);
  const auto lww_us = detail::l_ww_values(W, phi_values, i_s, i_u, quad_steps, basis, K);
  SpectralField lhs = delta_hat_combine(lww_ts, lww_tu, lww_us, dt_tu);

  // phi dW_{us} in value space feeds the right-hand side L^W_{tu}.
  std::vector<double> w_u(basis.grid().size()), w_s(basis.grid().size()), mult(basis.grid().size());
  basis.synthesize_into(W.field_at(i_u), w_u);
  basis.synthesize_into(W.field_at(i_s), w_s);
  for (std::size_t m = 0; m < mult.size(); ++m) mult[m] = phi_values[m] * (w_u[m] - w_s[m]);
  lhs -= detail::l_w_values(W, mult, i_u, i_t, quad_steps, basis, K);
  return {r1, lhs.norm_b()};
}

struct RemainderSamples {
  TwoVarSample delta_hat;  // || (delta-hat Y)_{ts} ||_B
  TwoVarSample k_part;     // || (delta-hat Y)_{ts} - L^W_{ts}(f(Y_s)) ||_B
  TwoVarSample remainder;  // || K^Y_{ts} - L^WW_{ts}(f(Y_s) f'(Y_s)) ||_B
};

inline RemainderSamples remainder_probe(const SolutionPath& Y, const NoiseField& W,
                                        const VectorField& vf,
                                        const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                        std::size_t quad_steps, const Grid1D& g) {
  if (!(Y.grid == W.grid())) throw std::invalid_argument("remainder_probe: grid mismatch");
  const std::size_t K = Y.fields.front().modes();
  const SineBasis basis(std::max(K, W.modes()), g);
  const std::size_t M = g.size();
  RemainderSamples out;
  std::vector<double> ys(M), f_vals(M), ff_vals(M);
  for (const auto& [i_s, i_t] : pairs) {
    const double sep = Y.grid.time(i_t) - Y.grid.time(i_s);
    basis.synthesize_into(Y.at(i_s), ys);
    for (std::size_t m = 0; m < M; ++m) {
      f_vals[m] = vf.f(ys[m]);
      ff_vals[m] = f_vals[m] * vf.df(ys[m]);
    }
    SpectralField ky = delta_hat_path(Y, i_s, i_t);
    out.delta_hat.push(i_s, i_t, sep, ky.norm_b());
    ky -= detail::l_w_values(W, f_vals, i_s, i_t, quad_steps, basis, K);
    out.k_part.push(i_s, i_t, sep, ky.norm_b());
    ky -= detail::l_ww_values(W, ff_vals, i_s, i_t, quad_steps, basis, K);
    out.remainder.push(i_s, i_t, sep, ky.norm_b());
  }
  return out;
}

// Double-integral modulus functional over the simplex: the discrete analogue
// of [ int int_{u<v} (||R_vu|| / |v-u|^beta)^q du dv ]^{1/q}. Finiteness under
// grid refinement discriminates Holder regularity beta of the increments.
template <typename NormAt>
double grr_functional(const TimeGrid& grid, NormAt&& norm_at, double beta, double q) {
  if (!(q >= 1.0) || !(beta >= 0.0)) throw std::invalid_argument("grr_functional: bad exponents");
  const double dt = grid.dt();
  double sum = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (std::size_t j = i + 1; j < grid.size(); ++j) {
      const double sep = grid.time(j) - grid.time(i);
      sum += std::pow(norm_at(i, j) / std::pow(sep, beta), q) * dt * dt;
    }
  return std::pow(sum, 1.0 / q);
}

inline double grr_functional(const ScalarPath& path, double beta, double q) {
  return grr_functional(path.grid(),
                        [&](std::size_t i, std::size_t j) { return std::abs(path[j] - path[i]); },
                        beta, q);
}

}  // namespace stratheat
