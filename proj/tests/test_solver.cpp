#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "stratheat/coupling.hpp"
#include "stratheat/rng.hpp"
#include "stratheat/solver.hpp"

using namespace stratheat;

namespace {

constexpr std::uint64_t kBase = 0x50fa11e5ULL;

CovarianceSpec power_cov(std::size_t modes, double r = 3.0, double eta = 0.1) {
  return CovarianceSpec(CovarianceSpec::Family::power, r, eta, modes);
}

NoiseField brownian_field(const CovarianceSpec& cov, const TimeGrid& grid, std::uint64_t seed) {
  return assemble_noise(cov, brownian_maker(), grid, seed);
}

NoiseField zero_field_like(const CovarianceSpec& cov, const TimeGrid& grid) {
  std::vector<ScalarPath> modes;
  for (std::size_t k = 0; k < cov.modes(); ++k)
    modes.emplace_back(grid, std::vector<double>(grid.size(), 0.0));
  return NoiseField(cov, grid, std::move(modes));
}

// Subsample a path onto a grid whose step is a multiple of the source step.
ScalarPath subsample(const ScalarPath& fine, const TimeGrid& coarse) {
  const std::size_t stride = fine.grid().steps() / coarse.steps();
  std::vector<double> v(coarse.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = fine[i * stride];
  return ScalarPath(coarse, std::move(v));
}

// Simpson quadrature of phi over [0,1].
template <typename F>
double simpson(F phi, std::size_t panels) {
  const double h = 1.0 / static_cast<double>(panels);
  double s = phi(0.0) + phi(1.0);
  for (std::size_t j = 1; j < panels; ++j) s += (j % 2 ? 4.0 : 2.0) * phi(j * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("zero nonlinearity reproduces the heat semigroup exactly", "[solver]") {
  const auto cov = power_cov(8);
  SolverConfig cfg{cov, 8, Grid1D(32), TimeGrid(0.5, 64), SpectralField(8), 0.55, 0.5, 1};
  for (std::size_t k = 1; k <= 8; ++k) cfg.psi.coeff(k) = 1.0 / static_cast<double>(k);
  const auto W = brownian_field(cov, cfg.time, derive_seed(kBase, {1}));
  const auto ito = integrate_ito_corrected(cfg, W, zero_vector_field());
  const auto pathwise = integrate_pathwise(cfg, zero_field_like(cov, cfg.time), sine_vector_field());
  REQUIRE(ito.fields.size() == cfg.time.size());
  for (std::size_t i = 0; i <= 64; ++i) {
    const double t = cfg.time.time(i);
    for (std::size_t k = 1; k <= 8; ++k) {
      const double exact = std::exp(-laplace_eigenvalue(k) * t) * cfg.psi.coeff(k);
      REQUIRE(ito.at(i).coeff(k) == Catch::Approx(exact).margin(1e-12));
      REQUIRE(pathwise.at(i).coeff(k) == Catch::Approx(exact).margin(1e-12));
    }
  }
}

TEST_CASE("constant nonlinearity makes the correction factor inert", "[solver]") {
  const auto cov = power_cov(4);
  SolverConfig cfg{cov, 4, Grid1D(16), TimeGrid(0.25, 32), SpectralField::unit_mode(1, 4),
                   0.55, 0.0, 1};
  const auto W = brownian_field(cov, cfg.time, derive_seed(kBase, {2}));
  const auto vf = constant_vector_field(0.7);
  const auto plain = integrate_ito_corrected(cfg, W, vf);
  cfg.correction_factor = 0.5;
  const auto corrected = integrate_ito_corrected(cfg, W, vf);
  for (std::size_t i = 0; i <= 32; ++i)
    for (std::size_t k = 1; k <= 4; ++k)
      REQUIRE(plain.at(i).coeff(k) == corrected.at(i).coeff(k));
}

TEST_CASE("pathwise run with linear forcing hits the closed form", "[solver]") {
  const auto cov = power_cov(4);
  const TimeGrid grid(1.0, 1000);
  const std::vector<double> w = {1.0, 0.5, -0.3, 0.2};
  std::vector<ScalarPath> modes;
  for (std::size_t k = 1; k <= 4; ++k) {
    std::vector<double> v(grid.size());
    const double scale = w[k - 1] / std::sqrt(cov.eigenvalue(k));
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = scale * grid.time(i);
    modes.emplace_back(grid, std::move(v));
  }
  const NoiseField ramp(cov, grid, std::move(modes));
  SolverConfig cfg{cov, 4, Grid1D(16), grid, SpectralField(4), 0.55, 0.5, 1};
  cfg.psi.coeff(1) = 0.4;
  cfg.psi.coeff(3) = -0.2;
  const auto y = integrate_pathwise(cfg, ramp, constant_vector_field(1.0));
  for (std::size_t i : {100u, 500u, 1000u}) {
    const double t = grid.time(i);
    for (std::size_t k = 1; k <= 4; ++k) {
      const double mu = laplace_eigenvalue(k);
      const double exact =
          std::exp(-mu * t) * cfg.psi.coeff(k) + w[k - 1] * (1.0 - std::exp(-mu * t)) / mu;
      REQUIRE(y.at(i).coeff(k) == Catch::Approx(exact).margin(1e-6));
    }
  }
}

TEST_CASE("single-mode corrected run matches a fine-step scalar oracle", "[solver]") {
  const auto cov = power_cov(1);
  const double T = 0.1;
  const std::size_t solver_steps = 512, fine_per = 16, paths = 200;
  const TimeGrid coarse(T, solver_steps), fine(T, solver_steps * fine_per);
  const auto vf = clipped_linear_vector_field(2.0);
  const double mu = laplace_eigenvalue(1);

  // Projected drift and diffusion of the one-mode dynamics, tabulated over a
  // lattice in the coefficient and evaluated by Simpson quadrature that shares
  // nothing with the solver's collocation transform.
  const double lo = -4.0, hi = 4.0;
  const std::size_t cells = 4000;
  std::vector<double> Ftab(cells + 1), Gtab(cells + 1);
  auto e1 = [](double x) { return std::numbers::sqrt2 * std::sin(std::numbers::pi * x); };
  for (std::size_t j = 0; j <= cells; ++j) {
    const double a = lo + (hi - lo) * static_cast<double>(j) / cells;
    Ftab[j] = simpson([&](double x) { return vf.f(a * e1(x)) * e1(x); }, 512);
    Gtab[j] = simpson(
        [&](double x) {
          const double theta = 2.0 * std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * x);
          return vf.df(a * e1(x)) * vf.f(a * e1(x)) * theta * e1(x);
        },
        512);
  }
  auto interp = [&](const std::vector<double>& tab, double a) {
    const double pos = (std::clamp(a, lo, hi) - lo) / (hi - lo) * cells;
    const auto j = std::min(static_cast<std::size_t>(pos), cells - 1);
    const double frac = pos - static_cast<double>(j);
    return tab[j] + frac * (tab[j + 1] - tab[j]);
  };

  double mean_solver = 0.0, mean_oracle = 0.0;
  const double dtf = fine.dt();
  for (std::size_t p = 0; p < paths; ++p) {
    const auto beta = sample_brownian(fine, derive_seed(kBase, {3, p}));
    SolverConfig cfg{cov, 1, Grid1D(15), coarse, SpectralField::unit_mode(1, 1), 0.55, 0.5, 1};
    const NoiseField W(cov, coarse, {subsample(beta, coarse)});
    mean_solver += integrate_ito_corrected(cfg, W, vf).at(solver_steps).coeff(1);

    double a = 1.0;
    for (std::size_t i = 0; i < fine.steps(); ++i) {
      const double db = beta[i + 1] - beta[i];
      a += (-mu * a + 0.5 * interp(Gtab, a)) * dtf + interp(Ftab, a) * db;
    }
    mean_oracle += a;
  }
  mean_solver /= paths;
  mean_oracle /= paths;
  REQUIRE(std::abs(mean_solver - mean_oracle) < 0.02 * std::abs(mean_oracle));
}

TEST_CASE("pointwise composition handles identity, constants and sup bounds", "[solver]") {
  const Grid1D g(64);
  auto rng = make_engine(kBase, {4});
  SpectralField phi(8);
  for (std::size_t k = 1; k <= 8; ++k) phi.coeff(k) = 0.3 * sample_normal(rng);

  const auto same = nonlinearity_apply(phi, identity_vector_field(10.0), g);
  for (std::size_t k = 1; k <= 8; ++k)
    REQUIRE(same.coeff(k) == Catch::Approx(phi.coeff(k)).margin(1e-10));

  // Constant map: exact discrete sine transform of the all-ones vector is
  // cot(k pi / (2(M+1))) scaled, which approaches 2 sqrt(2)/(k pi) for odd k.
  const double kappa = 0.7;
  const auto flat = nonlinearity_apply(phi, constant_vector_field(kappa), g);
  const auto M1 = static_cast<double>(g.size() + 1);
  for (std::size_t k = 1; k <= 8; ++k) {
    if (k % 2 == 0) {
      REQUIRE(std::abs(flat.coeff(k)) < 1e-12);
      continue;
    }
    const double discrete =
        kappa * std::numbers::sqrt2 / M1 / std::tan(static_cast<double>(k) * std::numbers::pi / (2.0 * M1));
    REQUIRE(flat.coeff(k) == Catch::Approx(discrete).margin(1e-12));
    // Discrete-vs-continuum gap grows like k/(M+1)^2; 2e-3 covers k <= 8 at M = 64.
    const double continuum = kappa * 2.0 * std::numbers::sqrt2 / (static_cast<double>(k) * std::numbers::pi);
    REQUIRE(flat.coeff(k) == Catch::Approx(continuum).margin(2e-3 * kappa));
  }
  const auto dflat = nonlinearity_apply(phi, constant_vector_field(kappa), g, Jet::df);
  for (std::size_t k = 1; k <= 8; ++k) REQUIRE(std::abs(dflat.coeff(k)) < 1e-14);

  // Full-rank composition: node values are mapped values, so the grid sup is
  // bounded by sup |f|.
  const Grid1D g31(31);
  SpectralField big(31);
  for (std::size_t k = 1; k <= 31; ++k) big.coeff(k) = 2.0 * sample_normal(rng);
  const auto mapped = nonlinearity_apply(big, sine_vector_field(), g31);
  REQUIRE(sup_norm(mapped, g31) <= 1.0 + 1e-9);
}

TEST_CASE("solutions respect the boundary and stay mean-square bounded", "[solver]") {
  const auto cov = power_cov(8);
  SolverConfig cfg{cov, 8, Grid1D(32), TimeGrid(0.5, 128), SpectralField::unit_mode(1, 8),
                   0.55, 0.5, 1};
  double worst_second_moment = 0.0;
  std::vector<double> values(32);
  const SineBasis basis(8, cfg.space);
  const std::size_t paths = 32;
  std::vector<double> sq(cfg.time.size(), 0.0);
  for (std::size_t p = 0; p < paths; ++p) {
    const auto W = brownian_field(cov, cfg.time, derive_seed(kBase, {5, p}));
    const auto y = integrate_ito_corrected(cfg, W, sine_vector_field());
    for (std::size_t i = 0; i < cfg.time.size(); ++i)
      sq[i] += y.at(i).norm_b() * y.at(i).norm_b() / paths;
    // Dirichlet compliance: |v(x_1)| <= sum_k |a_k| sqrt(2) k pi x_1 since
    // |sin(k pi x)| <= k pi x.
    basis.synthesize_into(y.at(cfg.time.steps()), values);
    double slope_bound = 0.0;
    for (std::size_t k = 1; k <= 8; ++k)
      slope_bound += std::abs(y.at(cfg.time.steps()).coeff(k)) * std::numbers::sqrt2 *
                     static_cast<double>(k) * std::numbers::pi;
    REQUIRE(std::abs(values.front()) <= slope_bound * cfg.space.node(0) * (1.0 + 1e-12));
    REQUIRE(std::abs(values.back()) <= slope_bound * (1.0 - cfg.space.node(31)) * (1.0 + 1e-12));
  }
  for (double m : sq) worst_second_moment = std::max(worst_second_moment, m);
  REQUIRE(worst_second_moment < 5.0);
}

TEST_CASE("correction factor shifts the ensemble mean beyond noise", "[solver]") {
  const auto cov = power_cov(8, 3.0, 0.12);
  SolverConfig cfg{cov, 8, Grid1D(32), TimeGrid(0.25, 256), SpectralField::unit_mode(1, 8),
                   0.55, 0.0, 1};
  const std::size_t paths = 64;
  std::vector<double> gap(paths);
  for (std::size_t p = 0; p < paths; ++p) {
    const auto W = brownian_field(cov, cfg.time, derive_seed(kBase, {6, p}));
    cfg.correction_factor = 0.0;
    const double plain = integrate_ito_corrected(cfg, W, sine_vector_field()).at(256).coeff(1);
    cfg.correction_factor = 0.5;
    const double corr = integrate_ito_corrected(cfg, W, sine_vector_field()).at(256).coeff(1);
    gap[p] = corr - plain;
  }
  double m = 0.0, s2 = 0.0;
  for (double gp : gap) m += gp / paths;
  for (double gp : gap) s2 += (gp - m) * (gp - m) / (paths - 1);
  const double se = std::sqrt(s2 / paths);
  REQUIRE(std::abs(m) > 5.0 * se);
}

TEST_CASE("step halving self-converges monotonically", "[solver]") {
  const auto cov = power_cov(8);
  const std::size_t paths = 32;
  const TimeGrid finest(0.25, 1024);
  std::vector<double> med_err;
  for (std::size_t level = 0; level < 3; ++level) {
    const std::size_t n_coarse = 128u << level;
    std::vector<double> errs(paths);
    for (std::size_t p = 0; p < paths; ++p) {
      const auto W_fine = brownian_field(cov, finest, derive_seed(kBase, {7, p}));
      auto run = [&](std::size_t steps) {
        const TimeGrid grid(0.25, steps);
        std::vector<ScalarPath> modes;
        for (std::size_t k = 1; k <= 8; ++k) modes.push_back(subsample(W_fine.mode(k), grid));
        const NoiseField W(cov, grid, std::move(modes));
        SolverConfig cfg{cov, 8, Grid1D(32), grid, SpectralField::unit_mode(1, 8), 0.55, 0.5, 1};
        return integrate_ito_corrected(cfg, W, sine_vector_field()).at(steps);
      };
      auto diff = run(n_coarse);
      diff -= run(2 * n_coarse);
      errs[p] = diff.norm_b();
    }
    std::sort(errs.begin(), errs.end());
    med_err.push_back(errs[paths / 2]);
  }
  REQUIRE(med_err[1] < med_err[0]);
  REQUIRE(med_err[2] < med_err[1]);
}

TEST_CASE("solver rejects bad configurations and mismatched noise", "[solver]") {
  const auto cov = power_cov(4);
  const TimeGrid grid(0.25, 16);
  const auto W = brownian_field(cov, grid, 5);
  SolverConfig cfg{cov, 4, Grid1D(16), grid, SpectralField(4), 0.55, 0.5, 1};

  SolverConfig bad = cfg;
  bad.space = Grid1D(15);  // fails M >= 4K
  REQUIRE_THROWS_AS(integrate_ito_corrected(bad, W, sine_vector_field()), std::invalid_argument);
  bad = cfg;
  bad.correction_factor = 0.3;
  REQUIRE_THROWS_AS(integrate_ito_corrected(bad, W, sine_vector_field()), std::invalid_argument);
  bad = cfg;
  bad.substeps = 0;
  REQUIRE_THROWS_AS(integrate_pathwise(bad, W, sine_vector_field()), std::invalid_argument);

  const auto W_wrong_grid = brownian_field(cov, TimeGrid(0.25, 32), 5);
  REQUIRE_THROWS_AS(integrate_ito_corrected(cfg, W_wrong_grid, sine_vector_field()),
                    std::invalid_argument);
  const auto W_wrong_cov = brownian_field(power_cov(4, 2.5), grid, 5);
  REQUIRE_THROWS_AS(integrate_ito_corrected(cfg, W_wrong_cov, sine_vector_field()),
                    std::invalid_argument);
}

TEST_CASE("blow-up guard reports the offending step", "[solver]") {
  const auto cov = power_cov(2);
  SolverConfig cfg{cov, 2, Grid1D(8), TimeGrid(0.01, 10), SpectralField(2), 0.55, 0.0, 1};
  cfg.psi.coeff(1) = 2e6;
  const auto W = brownian_field(cov, cfg.time, 11);
  REQUIRE_THROWS_WITH(integrate_ito_corrected(cfg, W, zero_vector_field()),
                      Catch::Matchers::ContainsSubstring("step"));
}

TEST_CASE("pathwise integrator accepts telegraph drivers with substeps", "[solver]") {
  const auto cov = power_cov(4, 3.0, 0.12);
  const TimeGrid grid(0.25, 256);
  SolverConfig cfg{cov, 4, Grid1D(16), grid, SpectralField::unit_mode(1, 4), 0.55, 0.5, 4};
  const auto W = assemble_noise(cov, kac_stroock_maker(64), grid, derive_seed(kBase, {8}));
  const auto y = integrate_pathwise(cfg, W, sine_vector_field());
  REQUIRE(y.at(256).finite());
  REQUIRE(y.at(256).norm_b() < 10.0);
}
