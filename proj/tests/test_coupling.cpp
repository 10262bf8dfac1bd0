#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "stratheat/coupling.hpp"

using namespace stratheat;

namespace {

constexpr std::uint64_t kBase = 0xc0051e5eedULL;

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  return xs[xs.size() / 2];
}

double sup_distance(const CouplingResult& c) {
  double worst = 0.0;
  for (std::size_t i = 0; i < c.brownian.grid().size(); ++i)
    worst = std::max(worst, std::abs(c.brownian[i] - c.approx[i]));
  return worst;
}

}  // namespace

TEST_CASE("walk coupling embeds exact unit steps at nondecreasing times", "[coupling]") {
  const TimeGrid report(1.0, 256);
  const std::size_t n = 16;
  const auto c = skorokhod_couple_donsker(n, report, derive_seed(kBase, {1}));
  REQUIRE(c.embedded.size() == n);
  REQUIRE(c.stopping_times.size() == n);
  const double b = 1.0 / std::sqrt(static_cast<double>(n));
  double prev_sum = 0.0, prev_time = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double step = (c.embedded[i] - prev_sum) / b;
    REQUIRE(std::abs(std::abs(step) - 1.0) < 1e-12);
    REQUIRE(c.stopping_times[i] >= prev_time);
    prev_sum = c.embedded[i];
    prev_time = c.stopping_times[i];
  }
  // The walk's knots at i/n reproduce the embedded partial sums exactly.
  const std::size_t stride = 256 / n;
  for (std::size_t i = 1; i <= n; ++i)
    REQUIRE(c.approx[i * stride] == Catch::Approx(c.embedded[i - 1]).margin(1e-12));
  REQUIRE(c.attempts == 1);

  REQUIRE_THROWS_AS(skorokhod_couple_donsker(0, report, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(skorokhod_couple_donsker(6, report, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(skorokhod_couple_donsker(4, report, 1, -0.5), std::invalid_argument);
}

TEST_CASE("walk coupling is reproducible and meets the Brownian path at hits", "[coupling]") {
  // Report grid chosen to coincide with the detection mesh (n = 4 gives a
  // default detection step of 1/1024), so hit times are report times and the
  // gap between the recorded path and the snapped sum is the pure overshoot.
  const TimeGrid report(1.0, 1024);
  const auto a = skorokhod_couple_donsker(4, report, 77);
  const auto b2 = skorokhod_couple_donsker(4, report, 77);
  REQUIRE(a.brownian.values() == b2.brownian.values());
  REQUIRE(a.embedded == b2.embedded);
  const double h = 1.0 / 1024.0;
  for (std::size_t i = 0; i < a.embedded.size(); ++i) {
    if (a.stopping_times[i] > 1.0) continue;  // hit in the slack window, off the report grid
    const double at_hit = a.brownian.at_time(a.stopping_times[i]);
    REQUIRE(std::abs(at_hit - a.embedded[i]) < 8.0 * std::sqrt(h));
  }
}

TEST_CASE("walk coupling consumes Brownian time at unit mean rate", "[coupling]") {
  const TimeGrid report(1.0, 64);
  const std::size_t n = 64, runs = 2000;
  // Default detection step: the hit-time mean carries an overshoot bias of
  // about 0.146/sqrt(n) relative, well inside the tolerance at n = 64.
  double total = 0.0;
  for (std::size_t r = 0; r < runs; ++r) {
    const auto c = skorokhod_couple_donsker(n, report, derive_seed(kBase, {2, r}));
    total += c.stopping_times.back();
  }
  REQUIRE(std::abs(total / runs - 1.0) < 0.05);
}

TEST_CASE("telegraph coupling draws exponential barriers and clock increments", "[coupling]") {
  const TimeGrid report(1.0, 128);
  const std::size_t n = 16;
  const double rootn = std::sqrt(static_cast<double>(n));
  std::vector<double> jumps, clock_incs;
  for (std::size_t r = 0; jumps.size() < 10000; ++r) {
    const auto c = skorokhod_couple_kac(n, report, derive_seed(kBase, {3, r}));
    double prev = 0.0;
    for (double e : c.embedded) {
      jumps.push_back(std::abs(e - prev));
      clock_incs.push_back(std::abs(e - prev) / rootn);
      prev = e;
    }
    REQUIRE(std::is_sorted(c.stopping_times.begin(), c.stopping_times.end()));
  }
  double jump_mean = 0.0, clock_mean = 0.0;
  for (std::size_t i = 0; i < jumps.size(); ++i) {
    jump_mean += jumps[i];
    clock_mean += clock_incs[i];
  }
  jump_mean /= static_cast<double>(jumps.size());
  clock_mean /= static_cast<double>(clock_incs.size());
  REQUIRE(std::abs(jump_mean - 1.0 / (2.0 * rootn)) < 0.05 / (2.0 * rootn));
  REQUIRE(std::abs(clock_mean - 1.0 / (2.0 * n)) < 0.05 / (2.0 * n));
}

TEST_CASE("telegraph reconstruction has exact slopes between its knots", "[coupling]") {
  const TimeGrid report(1.0, 512);
  const std::size_t n = 9;
  const double rootn = 3.0;
  const auto c = skorokhod_couple_kac(n, report, derive_seed(kBase, {4}));
  // Rebuild the knot clock from the embedded jumps and check the sampled path
  // lies on the piecewise-linear interpolant through (clock, sum) pairs.
  std::vector<double> clock(c.embedded.size()), sums = c.embedded;
  double acc = 0.0, prev = 0.0;
  for (std::size_t i = 0; i < sums.size(); ++i) {
    acc += std::abs(sums[i] - prev) / rootn;
    clock[i] = acc;
    prev = sums[i];
  }
  REQUIRE(clock.back() >= 1.0);
  for (std::size_t i = 1; i < report.size(); ++i) {
    const double t = report.time(i);
    std::size_t k = 0;
    while (clock[k] < t) ++k;
    const double lc = k == 0 ? 0.0 : clock[k - 1];
    const double lv = k == 0 ? 0.0 : sums[k - 1];
    const double expect = lv + (sums[k] - lv) * (t - lc) / (clock[k] - lc);
    REQUIRE(c.approx[i] == Catch::Approx(expect).margin(1e-10));
    if (i > 0 && clock[k] - lc > 1e-12) {
      const double slope = (sums[k] - lv) / (clock[k] - lc);
      REQUIRE(std::abs(std::abs(slope) - rootn) < 1e-9);
    }
  }
}

TEST_CASE("coupled sup distance shrinks with n for both families", "[coupling]") {
  const std::size_t paths = 24;
  double prev_walk = 1e9, prev_tel = 1e9;
  for (std::size_t n : {16u, 64u, 256u}) {
    const TimeGrid report(1.0, 256);
    std::vector<double> dw(paths), dk(paths);
    for (std::size_t p = 0; p < paths; ++p) {
      dw[p] = sup_distance(skorokhod_couple_donsker(n, report, derive_seed(kBase, {5, n, p})));
      dk[p] = sup_distance(skorokhod_couple_kac(n, report, derive_seed(kBase, {6, n, p})));
    }
    const double mw = median(dw), mk = median(dk);
    REQUIRE(mw < prev_walk);
    REQUIRE(mk < prev_tel);
    prev_walk = mw;
    prev_tel = mk;
  }
}
