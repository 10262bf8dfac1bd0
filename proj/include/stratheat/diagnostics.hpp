#pragma once

// Measurable surrogates for the qualitative hypotheses behind the scheme:
// Holder seminorm estimators on grids, even-moment growth tables for the
// random-walk noise families, coupling-distance decay fits, and weak-error
// gaps between solution ensembles. Interval sups are estimated by grid sups,
// and pair sets default to near-dyadic separations so the cost stays
// O(N log N) per path; every Monte-Carlo mean carries a plug-in standard
// error so thresholds can be stated as SE multiples.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stratheat/coupling.hpp"
#include "stratheat/grid.hpp"
#include "stratheat/noise.hpp"
#include "stratheat/rng.hpp"
#include "stratheat/rough.hpp"
#include "stratheat/solver.hpp"
#include "stratheat/spectral.hpp"
#include "stratheat/stats.hpp"

namespace stratheat {

// Norm selector: p == 0 means the collocation sup norm, otherwise the
// fractional Sobolev norm with exponent alpha and even integrability p.
struct NormSpec {
  double alpha = 0.0;
  int p = 2;
};

inline double field_norm(const SpectralField& f, const NormSpec& spec, const Grid1D& g) {
  return spec.p == 0 ? sup_norm(f, g) : sobolev_norm(f, spec.alpha, spec.p, g);
}

using PairSet = std::vector<std::pair<std::size_t, std::size_t>>;

namespace detail {

inline void check_holder_args(double lambda, const PairSet& pairs) {
  if (!(lambda > 0.0) || !(lambda <= 1.0))
    throw std::invalid_argument("holder_seminorm: lambda must lie in (0, 1]");
  if (pairs.empty()) throw std::invalid_argument("holder_seminorm: empty pair set");
}

inline double int_pow(double x, std::size_t e) {
  double r = 1.0;
  for (; e; e >>= 1, x *= x)
    if (e & 1) r *= x;
  return r;
}

// Near-dyadic separations steps, steps/2, ..., 1 (rounded, deduplicated).
inline std::vector<std::size_t> near_dyadic_separations(std::size_t steps) {
  std::vector<std::size_t> seps;
  double s = static_cast<double>(steps);
  while (true) {
    auto r = static_cast<std::size_t>(std::llround(s));
    if (r < 1) r = 1;
    if (seps.empty() || seps.back() != r) seps.push_back(r);
    if (r == 1) break;
    s /= 2.0;
  }
  return seps;
}

// Running mean / sum-of-squares accumulator (Welford).
struct Accumulator {
  std::size_t count = 0;
  double mean = 0.0, m2 = 0.0;

  void add(double x) {
    ++count;
    const double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
  }
  double se() const {
    return count ? std::sqrt(m2 / static_cast<double>(count) / static_cast<double>(count)) : 0.0;
  }
};

}  // namespace detail

// Non-overlapping pairs at every near-dyadic separation of the grid; the
// default pair set for all grid-sup estimators below.
inline PairSet grid_pair_set(std::size_t steps) {
  PairSet pairs;
  for (std::size_t sep : detail::near_dyadic_separations(steps))
    for (std::size_t i = 0; i + sep <= steps; i += sep) pairs.emplace_back(i, i + sep);
  return pairs;
}

inline double holder_seminorm(const ScalarPath& y, double lambda, const PairSet& pairs) {
  detail::check_holder_args(lambda, pairs);
  const TimeGrid& grid = y.grid();
  double best = 0.0;
  for (const auto& [i, j] : pairs) {
    const double sep = grid.time(j) - grid.time(i);
    best = std::max(best, std::abs(y[j] - y[i]) / std::pow(sep, lambda));
  }
  return best;
}

inline double holder_seminorm(const SolutionPath& y, double lambda, const NormSpec& spec,
                              const Grid1D& g, const PairSet& pairs) {
  detail::check_holder_args(lambda, pairs);
  double best = 0.0;
  for (const auto& [i, j] : pairs) {
    const double sep = y.grid.time(j) - y.grid.time(i);
    SpectralField d = y.at(j);
    d -= y.at(i);
    best = std::max(best, field_norm(d, spec, g) / std::pow(sep, lambda));
  }
  return best;
}

// Same estimator on the semigroup-twisted increments y_t - S_{t-s} y_s.
inline double holder_seminorm_hat(const SolutionPath& y, double lambda, const NormSpec& spec,
                                  const Grid1D& g, const PairSet& pairs) {
  detail::check_holder_args(lambda, pairs);
  double best = 0.0;
  for (const auto& [i, j] : pairs) {
    const double sep = y.grid.time(j) - y.grid.time(i);
    best = std::max(best, field_norm(delta_hat_path(y, i, j), spec, g) / std::pow(sep, lambda));
  }
  return best;
}

// Holder-(1/2 - eps) seminorm of t -> W_t in the (eta, 2p) Sobolev norm,
// eta taken from the covariance of W.
inline double noise_holder_norm(const NoiseField& W, double eps, int p, const Grid1D& g,
                                const PairSet& pairs) {
  if (!(eps > 0.0) || !(eps < 0.5))
    throw std::invalid_argument("noise_holder_norm: eps must lie in (0, 1/2)");
  if (pairs.empty()) throw std::invalid_argument("noise_holder_norm: empty pair set");
  const NormSpec spec{W.cov().eta(), 2 * p};
  const double lambda = 0.5 - eps;
  double best = 0.0;
  for (const auto& [i, j] : pairs) {
    const double sep = W.grid().time(j) - W.grid().time(i);
    SpectralField d = W.field_at(j);
    d -= W.field_at(i);
    best = std::max(best, field_norm(d, spec, g) / std::pow(sep, lambda));
  }
  return best;
}

// --- moment-condition estimators for the scalar noise families -------------

// family(n, grid, seed) -> one sample path of the n-th approximation.
using ScalarFamily = std::function<ScalarPath(std::size_t, const TimeGrid&, std::uint64_t)>;
// coupler(n, seed) -> a coupled (Brownian, approximation) pair on a shared grid.
using CouplerFamily = std::function<CouplingResult(std::size_t, std::uint64_t)>;

inline ScalarFamily brownian_family() {
  return [](std::size_t, const TimeGrid& g, std::uint64_t s) { return sample_brownian(g, s); };
}

inline ScalarFamily donsker_family(StepDist dist = StepDist::rademacher) {
  return [dist](std::size_t n, const TimeGrid& g, std::uint64_t s) {
    return donsker_path(n, dist, g, s);
  };
}

inline ScalarFamily kac_stroock_family() {
  return [](std::size_t n, const TimeGrid& g, std::uint64_t s) {
    return kac_stroock_path(n, g, s);
  };
}

struct MomentRatioRow {
  double separation = 0.0;  // |t - s|
  double ratio = 0.0;       // E|delta beta|^{2p} / |t - s|^p
  double se = 0.0;
};

struct MomentConditionTable {
  std::size_t p = 1;
  std::vector<std::size_t> n_values;
  std::vector<std::vector<MomentRatioRow>> per_separation;  // one table per n
  std::vector<double> max_ratio, max_se;                    // per n, at the arg-max row
};

// Uniform increment-moment bound: for each n, the max over near-dyadic grid
// pairs of the Monte-Carlo estimate of E|beta^n_t - beta^n_s|^{2p} / |t-s|^p.
inline MomentConditionTable moment_condition_i(const ScalarFamily& family,
                                               std::span<const std::size_t> n_values,
                                               std::size_t p, std::size_t mc_count,
                                               const TimeGrid& grid, std::uint64_t seed) {
  if (mc_count < 1000) throw std::invalid_argument("moment_condition_i: mc_count >= 1000");
  if (p == 0 || n_values.empty()) throw std::invalid_argument("moment_condition_i: bad arguments");
  const PairSet pairs = grid_pair_set(grid.steps());

  MomentConditionTable table;
  table.p = p;
  for (std::size_t n : n_values) {
    std::vector<detail::Accumulator> acc(pairs.size());
    for (std::size_t s = 0; s < mc_count; ++s) {
      const ScalarPath path = family(n, grid, derive_seed(seed, {n, s}));
      for (std::size_t q = 0; q < pairs.size(); ++q)
        acc[q].add(detail::int_pow(std::abs(path[pairs[q].second] - path[pairs[q].first]), 2 * p));
    }
    std::vector<MomentRatioRow> rows(pairs.size());
    std::size_t best = 0;
    for (std::size_t q = 0; q < pairs.size(); ++q) {
      const double sep = grid.time(pairs[q].second) - grid.time(pairs[q].first);
      const double scale = detail::int_pow(sep, p);
      rows[q] = {sep, acc[q].mean / scale, acc[q].se() / scale};
      if (rows[q].ratio > rows[best].ratio) best = q;
    }
    table.n_values.push_back(n);
    table.max_ratio.push_back(rows[best].ratio);
    table.max_se.push_back(rows[best].se);
    table.per_separation.push_back(std::move(rows));
  }
  return table;
}

struct CouplingMomentResult {
  std::size_t p = 1;
  std::vector<std::size_t> n_values;
  std::vector<double> sup_moment;      // per n: sup_t of E|approx_t - brownian_t|^{2p}
  std::vector<double> se;              // SE at the arg-max time
  std::vector<std::size_t> failures;   // couplings aborted after seed retries
  RateFit fit;                         // sup_moment against n, log-log
};

// Uniform-in-time coupling distance: sup over report times of the estimated
// E|coupled approximation - Brownian|^{2p}, with a log-log decay fit in n.
inline CouplingMomentResult moment_condition_ii(const CouplerFamily& coupler,
                                                std::span<const std::size_t> n_values,
                                                std::size_t p, std::size_t mc_count,
                                                std::uint64_t seed) {
  if (mc_count < 1000) throw std::invalid_argument("moment_condition_ii: mc_count >= 1000");
  if (p == 0 || n_values.empty())
    throw std::invalid_argument("moment_condition_ii: bad arguments");

  CouplingMomentResult out;
  out.p = p;
  for (std::size_t n : n_values) {
    std::vector<detail::Accumulator> acc;
    std::size_t failures = 0, successes = 0;
    for (std::size_t s = 0; s < mc_count; ++s) {
      std::optional<CouplingResult> pair;
      try {
        pair = coupler(n, derive_seed(seed, {n, s}));
      } catch (const std::runtime_error&) {
        ++failures;
        continue;
      }
      const std::size_t times = pair->brownian.grid().size();
      if (acc.empty()) acc.resize(times);
      if (acc.size() != times)
        throw std::runtime_error("moment_condition_ii: coupler changed its report grid");
      for (std::size_t i = 1; i < times; ++i)
        acc[i].add(detail::int_pow(std::abs(pair->approx[i] - pair->brownian[i]), 2 * p));
      ++successes;
    }
    if (successes < 2) throw std::runtime_error("moment_condition_ii: coupling failed throughout");
    std::size_t best = 1;
    for (std::size_t i = 2; i < acc.size(); ++i)
      if (acc[i].mean > acc[best].mean) best = i;
    out.n_values.push_back(n);
    out.sup_moment.push_back(acc[best].mean);
    out.se.push_back(acc[best].se());
    out.failures.push_back(failures);
  }
  std::vector<double> ns(out.n_values.begin(), out.n_values.end());
  out.fit = fit_rate(ns, out.sup_moment);
  return out;
}

struct InterpolationCheck {
  std::vector<std::size_t> n_values;
  std::vector<double> max_ratio;  // per n: max over pairs of the interpolated bound ratio
  std::vector<double> se;
  std::vector<std::size_t> failures;
};

// Interpolated increment bound: for each n, the max over near-dyadic pairs of
// E|delta(approx - brownian)_{ts}|^{2p} * n^{p eps nu} / |t-s|^{(1-eps)p}.
// Boundedness across the n list is the testable content.
inline InterpolationCheck interpolation_bound_check(const CouplerFamily& coupler,
                                                    std::span<const std::size_t> n_values,
                                                    std::size_t p, double eps, double nu,
                                                    std::size_t mc_count, std::uint64_t seed) {
  if (!(eps > 0.0) || !(eps < 1.0))
    throw std::invalid_argument("interpolation_bound_check: eps must lie in (0, 1)");
  if (!(nu > 0.0)) throw std::invalid_argument("interpolation_bound_check: nu must be positive");
  if (mc_count < 1000) throw std::invalid_argument("interpolation_bound_check: mc_count >= 1000");

  InterpolationCheck out;
  for (std::size_t n : n_values) {
    std::vector<detail::Accumulator> acc;
    PairSet pairs;
    std::vector<double> seps;
    std::size_t failures = 0, successes = 0;
    for (std::size_t s = 0; s < mc_count; ++s) {
      std::optional<CouplingResult> cpl;
      try {
        cpl = coupler(n, derive_seed(seed, {n, s}));
      } catch (const std::runtime_error&) {
        ++failures;
        continue;
      }
      if (pairs.empty()) {
        const TimeGrid& grid = cpl->brownian.grid();
        pairs = grid_pair_set(grid.steps());
        acc.resize(pairs.size());
        for (const auto& [i, j] : pairs) seps.push_back(grid.time(j) - grid.time(i));
      }
      for (std::size_t q = 0; q < pairs.size(); ++q) {
        const auto [i, j] = pairs[q];
        const double d = (cpl->approx[j] - cpl->brownian[j]) - (cpl->approx[i] - cpl->brownian[i]);
        acc[q].add(detail::int_pow(std::abs(d), 2 * p));
      }
      ++successes;
    }
    if (successes < 2)
      throw std::runtime_error("interpolation_bound_check: coupling failed throughout");
    const double n_scale = std::pow(static_cast<double>(n), static_cast<double>(p) * eps * nu);
    double best_ratio = -1.0, best_se = 0.0;
    for (std::size_t q = 0; q < pairs.size(); ++q) {
      const double scale = n_scale / std::pow(seps[q], (1.0 - eps) * static_cast<double>(p));
      if (acc[q].mean * scale > best_ratio) {
        best_ratio = acc[q].mean * scale;
        best_se = acc[q].se() * scale;
      }
    }
    out.n_values.push_back(n);
    out.max_ratio.push_back(best_ratio);
    out.se.push_back(best_se);
    out.failures.push_back(failures);
  }
  return out;
}

// --- solution-level comparisons ---------------------------------------------

// sup over the common time grid of || Y_t - Z_t ||_{B_gamma} (Parseval).
inline double solution_distance(const SolutionPath& Y, const SolutionPath& Z, double gamma,
                                const Grid1D& g) {
  if (!(Y.grid == Z.grid)) throw std::invalid_argument("solution_distance: grid mismatch");
  const NormSpec spec{gamma, 2};
  double best = 0.0;
  for (std::size_t i = 0; i < Y.grid.size(); ++i) {
    SpectralField d = Y.at(i);
    d -= Z.at(i);
    best = std::max(best, field_norm(d, spec, g));
  }
  return best;
}

// Built-in menu of terminal-value functionals for weak-error comparisons.
enum class Functional { first_mode, norm_b_squared, midpoint_value };

inline double apply_functional(Functional g, const SpectralField& f) {
  switch (g) {
    case Functional::first_mode:
      return f.coeff(1);
    case Functional::norm_b_squared: {
      const double n = f.norm_b();
      return n * n;
    }
    case Functional::midpoint_value: {
      // sum_k a_k sqrt(2) sin(k pi / 2): odd modes alternate, even vanish.
      double v = 0.0;
      for (std::size_t k = 1; k <= f.modes(); k += 2)
        v += f.coeff(k) * std::numbers::sqrt2 * ((k - 1) / 2 % 2 ? -1.0 : 1.0);
      return v;
    }
  }
  throw std::invalid_argument("apply_functional: unknown functional");
}

struct WeakGap {
  double gap = 0.0;  // |mean_A - mean_B|
  double se = 0.0;   // pooled standard error
};

inline WeakGap weak_error(std::span<const double> a, std::span<const double> b) {
  const EnsembleStats sa = ensemble_stats(a), sb = ensemble_stats(b);
  return {std::abs(sa.mean - sb.mean), std::sqrt(sa.se * sa.se + sb.se * sb.se)};
}

}  // namespace stratheat
