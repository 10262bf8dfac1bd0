#pragma once

// Scalar noise paths and their assembly into a truncated trace-class field
// W_t = sum_{k<=K} sqrt(lambda_k) X^k_t e_k.
//
// Three approximation families of Brownian motion are provided next to the
// exact sampler: rescaled random walks (piecewise linear with knots at i/n),
// the sqrt(n)-scaled telegraph integral driven by a rate-n Poisson clock
// (simulated by exact event times, then evaluated on the grid), and the
// piecewise-linear interpolation of a given Brownian path on mesh 1/n.

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stratheat/grid.hpp"
#include "stratheat/rng.hpp"
#include "stratheat/spectral.hpp"

namespace stratheat {

class ScalarPath {
 public:
  ScalarPath(TimeGrid grid, std::vector<double> values)
      : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size())
      throw std::invalid_argument("ScalarPath: values must cover every grid time");
  }

  const TimeGrid& grid() const noexcept { return grid_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_.at(i); }

  // Linear interpolation between grid times; exact for the piecewise-linear
  // families whenever their kinks lie on the grid.
  double at_time(double t) const {
    const double dt = grid_.dt();
    if (t <= 0.0) return values_.front();
    if (t >= grid_.horizon()) return values_.back();
    const double pos = t / dt;
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    if (i + 1 >= values_.size()) return values_.back();
    return values_[i] + frac * (values_[i + 1] - values_[i]);
  }

 private:
  TimeGrid grid_;
  std::vector<double> values_;
};

inline ScalarPath sample_brownian(const TimeGrid& grid, std::uint64_t seed) {
  auto rng = make_engine(seed);
  const double root_dt = std::sqrt(grid.dt());
  std::vector<double> v(grid.size());
  v[0] = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) v[i] = v[i - 1] + root_dt * sample_normal(rng);
  return ScalarPath(grid, std::move(v));
}

enum class StepDist { rademacher, gaussian, uniform };

// Rescaled-walk path from explicit steps: S at i/n is n^{-1/2} sum_{j<=i} Z_j,
// linear between knots. Also the reconstruction primitive for the Skorokhod
// coupling, which supplies its own embedded steps.
inline ScalarPath donsker_from_steps(std::size_t n, const std::vector<double>& steps,
                                     const TimeGrid& grid) {
  if (n == 0) throw std::invalid_argument("donsker_from_steps: n must be positive");
  if (!grid.resolves_mesh(1.0 / static_cast<double>(n)))
    throw std::invalid_argument("donsker_from_steps: grid does not resolve mesh 1/n");
  const double rootn = std::sqrt(static_cast<double>(n));
  std::vector<double> v(grid.size());
  double partial = 0.0;  // sum of steps over completed knots
  std::size_t knot = 0;  // index i of the last completed knot i/n
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double t = grid.time(i);
    while (static_cast<double>(knot + 1) <= t * n + 1e-9 && knot < steps.size()) {
      partial += steps[knot];
      ++knot;
    }
    const double within = t * n - static_cast<double>(knot);  // in [0,1) up to rounding
    double value = partial;
    if (within > 1e-9) {
      if (knot >= steps.size())
        throw std::invalid_argument("donsker_from_steps: not enough steps for the horizon");
      value += within * steps[knot];
    }
    v[i] = value / rootn;
  }
  return ScalarPath(grid, std::move(v));
}

inline ScalarPath donsker_path(std::size_t n, StepDist dist, const TimeGrid& grid,
                               std::uint64_t seed) {
  auto rng = make_engine(seed);
  const auto count = static_cast<std::size_t>(std::ceil(grid.horizon() * n - 1e-9));
  std::vector<double> steps(count);
  for (double& z : steps) {
    switch (dist) {
      case StepDist::rademacher: z = rademacher(rng); break;
      case StepDist::gaussian: z = sample_normal(rng); break;
      case StepDist::uniform: z = std::sqrt(3.0) * (2.0 * uniform_unit(rng) - 1.0); break;
    }
  }
  return donsker_from_steps(n, steps, grid);
}

// theta^n_t = sqrt(n) * int_0^t (-1)^{zeta + N(ns)} ds from explicit initial sign
// and Poisson event times (strictly increasing). Exact piecewise-linear
// integration in the event partition, evaluated at the grid times.
inline ScalarPath kac_stroock_from_events(std::size_t n, bool flip_start,
                                          const std::vector<double>& events,
                                          const TimeGrid& grid) {
  if (n == 0) throw std::invalid_argument("kac_stroock_from_events: n must be positive");
  const double rootn = std::sqrt(static_cast<double>(n));
  std::vector<double> v(grid.size());
  double sign = flip_start ? -1.0 : 1.0;
  double value = 0.0, tau = 0.0;
  std::size_t e = 0;
  v[0] = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double t = grid.time(i);
    while (e < events.size() && events[e] < t) {
      value += sign * rootn * (events[e] - tau);
      tau = events[e];
      sign = -sign;
      ++e;
    }
    value += sign * rootn * (t - tau);
    tau = t;
    v[i] = value;
  }
  return ScalarPath(grid, std::move(v));
}

inline ScalarPath kac_stroock_path(std::size_t n, const TimeGrid& grid, std::uint64_t seed) {
  auto rng = make_engine(seed);
  const bool flip = (rng() & 1u) != 0;
  std::vector<double> events;
  const double rate = static_cast<double>(n);
  for (double t = sample_exponential(rng, rate); t < grid.horizon();
       t += sample_exponential(rng, rate))
    events.push_back(t);
  return kac_stroock_from_events(n, flip, events, grid);
}

// Piecewise-linear interpolation of beta at the knots i/n; exact at knots.
inline ScalarPath wong_zakai(const ScalarPath& beta, std::size_t n) {
  const TimeGrid& grid = beta.grid();
  const double mesh = 1.0 / static_cast<double>(n);
  if (!grid.resolves_mesh(mesh))
    throw std::invalid_argument("wong_zakai: grid does not resolve mesh 1/n");
  const double knots_exact = grid.horizon() * static_cast<double>(n);
  const auto knots = static_cast<std::size_t>(std::round(knots_exact));
  if (knots < 1 || std::abs(knots_exact - static_cast<double>(knots)) > 1e-9)
    throw std::invalid_argument("wong_zakai: horizon must be a whole number of knots");
  const std::size_t stride = grid.steps() / knots;  // grid steps per knot
  std::vector<double> v(grid.size());
  for (std::size_t j = 0; j < knots; ++j) {
    const double left = beta[j * stride];
    const double right = beta[(j + 1) * stride];
    for (std::size_t s = 0; s <= stride; ++s)
      v[j * stride + s] =
          left + (right - left) * static_cast<double>(s) / static_cast<double>(stride);
  }
  return ScalarPath(grid, std::move(v));
}

// Truncated noise field: raw mode paths X^k plus the covariance that scales them.
class NoiseField {
 public:
  NoiseField(CovarianceSpec cov, TimeGrid grid, std::vector<ScalarPath> modes)
      : cov_(std::move(cov)), grid_(grid), modes_(std::move(modes)) {
    if (modes_.size() != cov_.modes())
      throw std::invalid_argument("NoiseField: one path per covariance mode required");
    for (const auto& m : modes_)
      if (!(m.grid() == grid_)) throw std::invalid_argument("NoiseField: shared grid required");
    root_lambda_.resize(modes_.size());
    for (std::size_t k = 1; k <= modes_.size(); ++k)
      root_lambda_[k - 1] = std::sqrt(cov_.eigenvalue(k));
  }

  const CovarianceSpec& cov() const noexcept { return cov_; }
  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t modes() const noexcept { return modes_.size(); }
  const ScalarPath& mode(std::size_t k) const { return modes_.at(k - 1); }  // k is 1-based

  // W_{t_i} as a spectral field: a_k = sqrt(lambda_k) X^k_{t_i}.
  SpectralField field_at(std::size_t i) const {
    SpectralField f(modes_.size());
    for (std::size_t k = 0; k < modes_.size(); ++k)
      f.coeffs()[k] = root_lambda_[k] * modes_[k][i];
    return f;
  }

  SpectralField field_at_time(double t) const {
    SpectralField f(modes_.size());
    for (std::size_t k = 0; k < modes_.size(); ++k)
      f.coeffs()[k] = root_lambda_[k] * modes_[k].at_time(t);
    return f;
  }

  // delta W over [t_i, t_j] as a spectral field.
  SpectralField increment(std::size_t i, std::size_t j) const {
    SpectralField f(modes_.size());
    for (std::size_t k = 0; k < modes_.size(); ++k)
      f.coeffs()[k] = root_lambda_[k] * (modes_[k][j] - modes_[k][i]);
    return f;
  }

 private:
  CovarianceSpec cov_;
  TimeGrid grid_;
  std::vector<ScalarPath> modes_;
  std::vector<double> root_lambda_;
};

using PathMaker = std::function<ScalarPath(const TimeGrid&, std::uint64_t)>;

// K independent mode paths with per-mode derived seeds. Ensemble drivers pass
// a per-path base seed (derive_seed(run_seed, {path})), so mode k of path p
// sees hash(run_seed, path, mode) overall.
inline NoiseField assemble_noise(const CovarianceSpec& cov, const PathMaker& maker,
                                 const TimeGrid& grid, std::uint64_t seed) {
  cov.require_admissible();
  std::vector<ScalarPath> modes;
  modes.reserve(cov.modes());
  for (std::size_t k = 1; k <= cov.modes(); ++k)
    modes.push_back(maker(grid, derive_seed(seed, {k})));
  return NoiseField(cov, grid, std::move(modes));
}

inline PathMaker brownian_maker() {
  return [](const TimeGrid& g, std::uint64_t s) { return sample_brownian(g, s); };
}

inline PathMaker donsker_maker(std::size_t n, StepDist dist = StepDist::rademacher) {
  return [n, dist](const TimeGrid& g, std::uint64_t s) { return donsker_path(n, dist, g, s); };
}

inline PathMaker kac_stroock_maker(std::size_t n) {
  return [n](const TimeGrid& g, std::uint64_t s) { return kac_stroock_path(n, g, s); };
}

}  // namespace stratheat
