#pragma once

// Same-probability-space couplings between a Brownian path and one member of
// each approximation family, built by barrier embeddings:
//
//  * walk coupling: successive exits of the Brownian path from a centred
//    window of half-width 1/sqrt(n) embed Rademacher steps; the rescaled walk
//    through those steps is coupled to the Brownian path that produced them.
//  * telegraph coupling: two-sided barriers with i.i.d. Exponential(2 sqrt(n))
//    half-widths embed signed jumps; replaying the snapped jumps at slope
//    +-sqrt(n) on a compressed clock (increments |jump|/sqrt(n), which are
//    Exponential(2n)) reconstructs a telegraph integral coupled to the path.
//
// Barrier hits are detected on an internal fine mesh (default step 1/(64 n^2))
// and the hit value is snapped to the exact barrier, so embedded partial sums
// are exact and the detection bias lives only in the Brownian side. Detection
// never materialises a fine-resolution path: only the caller's report grid is
// stored, keeping memory independent of the detection step.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "stratheat/grid.hpp"
#include "stratheat/noise.hpp"
#include "stratheat/rng.hpp"

namespace stratheat {

struct CouplingResult {
  ScalarPath brownian;                 // coupled Brownian path on the report grid
  ScalarPath approx;                   // coupled walk / telegraph on the same grid
  std::vector<double> stopping_times;  // barrier hit times, nondecreasing
  std::vector<double> embedded;        // snapped partial sums at those times
  std::size_t attempts = 1;            // 1 + reseeded retries after horizon exhaustion
};

namespace detail {

// Walk-time slack past the report horizon for the embeddings to finish. Both
// embeddings consume Brownian time at unit mean rate with O(1/sqrt(n))
// fluctuations; 6.4/sqrt(n) is many standard deviations, and a retry with a
// derived seed covers the remainder.
inline double walk_budget(double horizon, std::size_t n) {
  return horizon * (1.0 + std::min(1.0, 6.4 / std::sqrt(static_cast<double>(n))));
}

inline double resolve_detect_step(const TimeGrid& report, std::size_t n, double requested) {
  if (requested < 0.0) throw std::invalid_argument("coupling: detect_dt must be positive");
  const double want =
      requested > 0.0 ? requested : 1.0 / (64.0 * static_cast<double>(n) * static_cast<double>(n));
  const auto substeps =
      static_cast<std::size_t>(std::max(1.0, std::ceil(report.dt() / want - 1e-9)));
  return report.dt() / static_cast<double>(substeps);
}

}  // namespace detail

// Couples a Brownian path to the rescaled Rademacher walk embedded in it.
// Requires the report grid to resolve mesh 1/n so the walk's knots are grid
// times. detect_dt <= 0 selects the default detection step 1/(64 n^2).
inline CouplingResult skorokhod_couple_donsker(std::size_t n, const TimeGrid& report,
                                               std::uint64_t seed, double detect_dt = 0.0) {
  if (n == 0) throw std::invalid_argument("skorokhod_couple_donsker: n must be positive");
  if (!report.resolves_mesh(1.0 / static_cast<double>(n)))
    throw std::invalid_argument("skorokhod_couple_donsker: report grid must resolve mesh 1/n");
  const double h = detail::resolve_detect_step(report, n, detect_dt);
  const auto substeps = static_cast<std::size_t>(std::llround(report.dt() / h));
  const double root_h = std::sqrt(h);
  const double b = 1.0 / std::sqrt(static_cast<double>(n));
  const auto target = static_cast<std::size_t>(std::llround(report.horizon() * n));
  const double budget = detail::walk_budget(report.horizon(), n);
  constexpr std::size_t kMaxAttempts = 64;

  for (std::size_t attempt = 0; attempt < kMaxAttempts; ++attempt) {
    auto rng = make_engine(seed, {0xd0u, attempt});
    std::vector<double> beta_values(report.size());
    std::vector<double> stopping, embedded;
    stopping.reserve(target);
    embedded.reserve(target);
    double beta = 0.0, ref = 0.0, t = 0.0;
    std::size_t report_index = 0;
    beta_values[0] = 0.0;
    std::size_t until_report = substeps;
    bool exhausted = false;
    while (report_index < report.steps() || embedded.size() < target) {
      beta += root_h * sample_normal(rng);
      t += h;
      while (embedded.size() < target && std::abs(beta - ref) >= b) {
        ref += (beta >= ref) ? b : -b;
        stopping.push_back(t);
        embedded.push_back(ref);
      }
      if (--until_report == 0) {
        until_report = substeps;
        if (report_index < report.steps()) beta_values[++report_index] = beta;
      }
      if (t > budget && embedded.size() < target) {
        exhausted = true;
        break;
      }
    }
    if (exhausted) continue;

    std::vector<double> steps(target);
    double prev = 0.0;
    for (std::size_t i = 0; i < target; ++i) {
      steps[i] = (embedded[i] - prev) / b;  // exactly +-1 by construction
      prev = embedded[i];
    }
    return CouplingResult{ScalarPath(report, std::move(beta_values)),
                          donsker_from_steps(n, steps, report), std::move(stopping),
                          std::move(embedded), attempt + 1};
  }
  throw std::runtime_error("skorokhod_couple_donsker: walk horizon exhausted on every attempt");
}

// Couples a Brownian path to the telegraph integral reconstructed from its
// exponential-barrier embedding. The telegraph path is returned sampled on the
// report grid from its exact piecewise-linear form.
inline CouplingResult skorokhod_couple_kac(std::size_t n, const TimeGrid& report,
                                           std::uint64_t seed, double detect_dt = 0.0) {
  if (n == 0) throw std::invalid_argument("skorokhod_couple_kac: n must be positive");
  const double h = detail::resolve_detect_step(report, n, detect_dt);
  const auto substeps = static_cast<std::size_t>(std::llround(report.dt() / h));
  const double root_h = std::sqrt(h);
  const double rootn = std::sqrt(static_cast<double>(n));
  const double barrier_rate = 2.0 * rootn;
  const double budget = detail::walk_budget(report.horizon(), n);
  constexpr std::size_t kMaxAttempts = 64;

  for (std::size_t attempt = 0; attempt < kMaxAttempts; ++attempt) {
    auto rng = make_engine(seed, {0xacu, attempt});
    std::vector<double> beta_values(report.size());
    std::vector<double> stopping, embedded, clock_knots;
    double beta = 0.0, ref = 0.0, t = 0.0, clock = 0.0;
    double barrier = sample_exponential(rng, barrier_rate);
    std::size_t report_index = 0;
    std::size_t until_report = substeps;
    bool exhausted = false;
    while (report_index < report.steps() || clock < report.horizon()) {
      beta += root_h * sample_normal(rng);
      t += h;
      while (clock < report.horizon() && std::abs(beta - ref) >= barrier) {
        ref += (beta >= ref) ? barrier : -barrier;
        clock += barrier / rootn;
        stopping.push_back(t);
        embedded.push_back(ref);
        clock_knots.push_back(clock);
        barrier = sample_exponential(rng, barrier_rate);
      }
      if (--until_report == 0) {
        until_report = substeps;
        if (report_index < report.steps()) beta_values[++report_index] = beta;
      }
      if (t > budget && clock < report.horizon()) {
        exhausted = true;
        break;
      }
    }
    if (exhausted) continue;

    // Sample the piecewise-linear telegraph (clock knot, embedded value) pairs
    // on the report grid; slopes between knots are exactly +-sqrt(n).
    std::vector<double> theta(report.size());
    theta[0] = 0.0;
    std::size_t knot = 0;
    for (std::size_t i = 1; i < report.size(); ++i) {
      const double s = report.time(i);
      while (knot < clock_knots.size() && clock_knots[knot] < s) ++knot;
      const double left_clock = knot == 0 ? 0.0 : clock_knots[knot - 1];
      const double left_value = knot == 0 ? 0.0 : embedded[knot - 1];
      const double right_clock = clock_knots[knot];
      const double right_value = embedded[knot];
      theta[i] =
          left_value + (right_value - left_value) * (s - left_clock) / (right_clock - left_clock);
    }
    return CouplingResult{ScalarPath(report, std::move(beta_values)),
                          ScalarPath(report, std::move(theta)), std::move(stopping),
                          std::move(embedded), attempt + 1};
  }
  throw std::runtime_error("skorokhod_couple_kac: walk horizon exhausted on every attempt");
}

}  // namespace stratheat
