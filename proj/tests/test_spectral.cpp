#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "stratheat/rng.hpp"
#include "stratheat/spectral.hpp"

using namespace stratheat;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kZeta3 = 1.2020569031595942854;  // Apery's constant

// Composite Simpson quadrature on [0,1]; panels must be even.
template <class F>
double simpson(F f, int panels) {
  const double h = 1.0 / panels;
  double s = f(0.0) + f(1.0);
  for (int i = 1; i < panels; ++i) s += f(i * h) * ((i % 2) ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Independent oracle for <phi, e_k> without the transform machinery.
double sine_coefficient(double (*phi)(double), int k) {
  return simpson([&](double x) { return phi(x) * std::numbers::sqrt2 * std::sin(k * kPi * x); },
                 20000);
}

double parabola(double x) { return x * (1.0 - x); }

}  // namespace

TEST_CASE("synthesize evaluates the sine sum at collocation nodes", "[spectral]") {
  Grid1D g(3);
  auto v = synthesize(SpectralField::unit_mode(1, 1), g);
  REQUIRE(v[0] == Catch::Approx(1.0).margin(1e-15));
  REQUIRE(v[1] == Catch::Approx(std::numbers::sqrt2).margin(1e-15));
  REQUIRE(v[2] == Catch::Approx(1.0).margin(1e-15));

  auto zeros = synthesize(SpectralField(4), Grid1D(8));
  for (double z : zeros) REQUIRE(z == 0.0);
}

TEST_CASE("analyze inverts synthesize exactly for K <= M", "[spectral]") {
  auto rng = make_engine(20240811);
  SpectralField f(8);
  for (std::size_t k = 1; k <= 8; ++k) f.coeff(k) = 2.0 * uniform_unit(rng) - 1.0;
  Grid1D g(32);
  auto back = analyze(synthesize(f, g), g, 8);
  for (std::size_t k = 1; k <= 8; ++k)
    REQUIRE(back.coeff(k) == Catch::Approx(f.coeff(k)).margin(1e-12));

  // delta detection of a pure mode at full rank
  Grid1D g8(8);
  auto coeffs = analyze(synthesize(SpectralField::unit_mode(2, 8), g8), g8);
  for (std::size_t k = 1; k <= 8; ++k)
    REQUIRE(coeffs.coeff(k) == Catch::Approx(k == 2 ? 1.0 : 0.0).margin(1e-13));

  REQUIRE_THROWS_AS(SineBasis(9, Grid1D(8)), std::invalid_argument);
}

TEST_CASE("analyze recovers the analytic sine series of x(1-x)", "[spectral]") {
  // Oracle first: closed form a_k = 4*sqrt(2)/(k pi)^3 for odd k, 0 for even k,
  // cross-checked against blind Simpson quadrature before it judges analyze().
  for (int k = 1; k <= 8; ++k) {
    const double closed = (k % 2 == 1) ? 4.0 * std::numbers::sqrt2 / std::pow(k * kPi, 3) : 0.0;
    REQUIRE(sine_coefficient(parabola, k) == Catch::Approx(closed).margin(1e-12));
  }

  // The function is not band-limited, so the discrete analysis carries the
  // aliases a_{2(M+1)j +- k}; on M=64 the first alias is ~9e-8, which bounds
  // the achievable agreement. M=1024 pushes the alias floor below 1e-10.
  for (std::size_t M : {std::size_t{64}, std::size_t{1024}}) {
    Grid1D g(M);
    std::vector<double> values(g.size());
    for (std::size_t m = 0; m < g.size(); ++m) values[m] = parabola(g.node(m));
    auto f = analyze(values, g);
    const double alias_floor =
        3.0 * 4.0 * std::numbers::sqrt2 / std::pow((2.0 * (M + 1.0) - 8.0) * kPi, 3);
    const double tol = std::max(1e-10, alias_floor);
    for (int k = 1; k <= 8; ++k) {
      const double expected =
          (k % 2 == 1) ? 4.0 * std::numbers::sqrt2 / std::pow(k * kPi, 3) : 0.0;
      REQUIRE(f.coeff(k) == Catch::Approx(expected).margin(tol));
    }
  }
}

TEST_CASE("semigroup acts diagonally with exact exponents", "[spectral]") {
  SpectralField f(5);
  for (std::size_t k = 1; k <= 5; ++k) f.coeff(k) = 1.0 / k;

  auto ft = semigroup_apply(f, 0.07);
  for (std::size_t k = 1; k <= 5; ++k)
    REQUIRE(ft.coeff(k) ==
            Catch::Approx(std::exp(-laplace_eigenvalue(k) * 0.07) / k).epsilon(1e-15));

  auto id = semigroup_apply(f, 0.0);
  for (std::size_t k = 1; k <= 5; ++k) REQUIRE(id.coeff(k) == f.coeff(k));

  auto twice = semigroup_apply(semigroup_apply(f, 0.2), 0.1);
  auto once = semigroup_apply(f, 0.3);
  for (std::size_t k = 1; k <= 5; ++k)
    REQUIRE(twice.coeff(k) == Catch::Approx(once.coeff(k)).margin(1e-14));

  REQUIRE_THROWS_AS(semigroup_apply(f, -1e-9), std::invalid_argument);
}

TEST_CASE("fractional powers of -Delta", "[spectral]") {
  SpectralField f(3);
  f.coeff(1) = 1.0;
  f.coeff(2) = 1.0;

  auto same = fractional_apply(f, 0.0);
  REQUIRE(same.coeff(1) == 1.0);
  REQUIRE(same.coeff(2) == 1.0);

  auto half = fractional_apply(SpectralField::unit_mode(3, 3), 0.5);
  REQUIRE(half.coeff(3) == Catch::Approx(3.0 * kPi).epsilon(1e-15));

  auto lap = fractional_apply(f, 1.0);
  REQUIRE(lap.coeff(1) == Catch::Approx(kPi * kPi).epsilon(1e-15));
  REQUIRE(lap.coeff(2) == Catch::Approx(4.0 * kPi * kPi).epsilon(1e-15));
}

TEST_CASE("Sobolev norms: exact p=2 and quadrature p=4", "[spectral]") {
  Grid1D g(128);

  for (std::size_t k : {1u, 3u}) {
    const double alpha = 0.37;
    REQUIRE(sobolev_norm(SpectralField::unit_mode(k, 4), alpha, 2, g) ==
            Catch::Approx(std::pow(laplace_eigenvalue(k), alpha)).epsilon(1e-14));
  }

  SpectralField f(2);
  f.coeff(1) = 1.0;
  f.coeff(2) = 1.0;
  REQUIRE(sobolev_norm(f, 0.0, 2, g) == Catch::Approx(std::numbers::sqrt2).epsilon(1e-15));

  // || e_1 ||_{L^4}: oracle = analytic integral 3/2, cross-checked by Simpson.
  const double l4_integral =
      simpson([](double x) { return std::pow(std::numbers::sqrt2 * std::sin(kPi * x), 4); }, 2000);
  REQUIRE(l4_integral == Catch::Approx(1.5).margin(1e-10));
  REQUIRE(sobolev_norm(SpectralField::unit_mode(1, 1), 0.0, 4, g) ==
          Catch::Approx(std::pow(1.5, 0.25)).margin(1e-10));

  REQUIRE_THROWS_AS(sobolev_norm(f, 0.0, 3, g), std::invalid_argument);
  REQUIRE_THROWS_AS(sobolev_norm(f, 0.0, 0, g), std::invalid_argument);
}

TEST_CASE("Parseval matches grid quadrature for band-limited fields", "[spectral]") {
  auto rng = make_engine(7);
  SpectralField f(16);
  for (std::size_t k = 1; k <= 16; ++k) f.coeff(k) = 2.0 * uniform_unit(rng) - 1.0;
  Grid1D g(2048);
  const auto values = synthesize(f, g);
  double q = 0.0;
  for (double v : values) q += v * v;
  q = std::sqrt(g.weight() * q);
  REQUIRE(q == Catch::Approx(f.norm_b()).margin(1e-12));
}

TEST_CASE("grid sup norm", "[spectral]") {
  Grid1D g31(31);
  REQUIRE(sup_norm(SpectralField(3), g31) == 0.0);
  // x = 1/2 is node 15, where e_1 attains sqrt(2).
  REQUIRE(sup_norm(SpectralField::unit_mode(1, 1), g31) ==
          Catch::Approx(std::numbers::sqrt2).margin(1e-15));
  for (std::size_t k = 1; k <= 6; ++k)
    REQUIRE(sup_norm(SpectralField::unit_mode(k, 6), g31) <= std::numbers::sqrt2 + 1e-12);
}

TEST_CASE("Yosida semigroup approaches the exact semigroup", "[spectral]") {
  SpectralField f(4);
  for (std::size_t k = 1; k <= 4; ++k) f.coeff(k) = 1.0;

  auto yos = yosida_semigroup_apply(f, 0.1, 1e-8);
  auto exact = semigroup_apply(f, 0.1);
  for (std::size_t k = 1; k <= 4; ++k)
    REQUIRE(yos.coeff(k) == Catch::Approx(exact.coeff(k)).margin(1e-5));

  auto id = yosida_semigroup_apply(f, 0.0, 0.5);
  for (std::size_t k = 1; k <= 4; ++k) REQUIRE(id.coeff(k) == 1.0);

  // Large eps: generator eigenvalue saturates at 1/eps.
  const double eps = 100.0, t = 0.5;
  auto slow = yosida_semigroup_apply(SpectralField::unit_mode(3, 3), t, eps);
  REQUIRE(slow.coeff(3) == Catch::Approx(std::exp(-t / eps)).epsilon(1e-3));

  REQUIRE_THROWS_AS(yosida_semigroup_apply(f, 0.1, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(yosida_semigroup_apply(f, -0.1, 1.0), std::invalid_argument);
}

TEST_CASE("trace function of the covariance", "[spectral]") {
  // lambda_k = k^{-3}: P(1/2) = sum over odd k of k^{-3} -> 7 zeta(3)/8.
  CovarianceSpec q(CovarianceSpec::Family::power, 3.0, 0.12, 200);
  REQUIRE(q.admissible());
  Grid1D g(3);  // nodes 1/4, 1/2, 3/4
  auto p = trace_function(q, g);

  double partial = 0.0;
  for (std::size_t k = 1; k <= 200; k += 2) partial += std::pow(double(k), -3.0);
  REQUIRE(p[1] == Catch::Approx(partial).margin(1e-14));
  REQUIRE(p[1] == Catch::Approx(7.0 * kZeta3 / 8.0).margin(2e-5));

  const double total = q.trace_sum();
  for (double v : p) {
    REQUIRE(v >= 0.0);
    REQUIRE(v <= total + 1e-15);
  }

  // single active mode: P(x) = sin^2(pi x)
  CovarianceSpec one(CovarianceSpec::Family::power, 2.0, 0.1, 1);
  Grid1D g7(7);
  auto p1 = trace_function(one, g7);
  for (std::size_t m = 0; m < g7.size(); ++m) {
    const double s = std::sin(kPi * g7.node(m));
    REQUIRE(p1[m] == Catch::Approx(s * s).margin(1e-15));
  }
}

TEST_CASE("covariance admissibility rules", "[spectral]") {
  REQUIRE(CovarianceSpec(CovarianceSpec::Family::power, 3.0, 0.12, 8).admissible());
  REQUIRE_FALSE(CovarianceSpec(CovarianceSpec::Family::power, 1.2, 0.12, 8).admissible());
  REQUIRE(CovarianceSpec(CovarianceSpec::Family::resolvent, 1.0, 0.12, 8).admissible());
  REQUIRE_FALSE(CovarianceSpec(CovarianceSpec::Family::resolvent, 0.7, 0.12, 8).admissible());
  REQUIRE_THROWS_AS(CovarianceSpec(CovarianceSpec::Family::power, 3.0, 0.2, 8),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(CovarianceSpec(CovarianceSpec::Family::power, 3.0, 0.12, 0),
                    std::invalid_argument);

  CovarianceSpec q(CovarianceSpec::Family::power, 3.0, 0.12, 16);
  for (std::size_t k = 2; k <= 16; ++k) REQUIRE(q.eigenvalue(k) <= q.eigenvalue(k - 1));
  REQUIRE(q.eigenvalue(17) == 0.0);  // truncation
}

TEST_CASE("semigroup smoothing ratio stays bounded as t -> 0", "[spectral]") {
  // psi = sum k^{-2} e_k; || S_t psi ||_{B_alpha} * t^alpha must stay below the
  // analytic envelope (sum k^{-4})^{1/2} * sup_x x^alpha e^{-x} ~ 0.55.
  const std::size_t K = 512;
  SpectralField psi(K);
  for (std::size_t k = 1; k <= K; ++k) psi.coeff(k) = 1.0 / (double(k) * double(k));
  const double alpha = 0.3;
  Grid1D g(4);  // norms below are p=2, grid unused
  for (int j = 0; j <= 14; ++j) {
    const double t = std::ldexp(1.0, -j);
    const double ratio = std::pow(t, alpha) * sobolev_norm(semigroup_apply(psi, t), alpha, 2, g);
    REQUIRE(ratio <= 0.6);
  }
}

TEST_CASE("normal sampler matches Gaussian moment oracles", "[spectral]") {
  auto rng = make_engine(99);
  const int n = 2'000'000;
  double m1 = 0, m2 = 0, m4 = 0, tail = 0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_normal(rng);
    m1 += x;
    m2 += x * x;
    m4 += x * x * x * x;
    if (std::abs(x) > 3.0) tail += 1.0;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  tail /= n;
  // SEs: sd(X)=1, sd(X^2)=sqrt(2), sd(X^4)=sqrt(96); 4 sigma bands.
  REQUIRE(std::abs(m1) < 4.0 / std::sqrt(double(n)));
  REQUIRE(std::abs(m2 - 1.0) < 4.0 * std::sqrt(2.0 / n));
  REQUIRE(std::abs(m4 - 3.0) < 4.0 * std::sqrt(96.0 / n));
  const double p3 = 0.0026997960632601866;  // P(|Z| > 3)
  REQUIRE(std::abs(tail - p3) < 4.0 * std::sqrt(p3 * (1 - p3) / n));
}
