// Minimal tour of the solver: integrate the stochastic heat equation with a
// sine drift once with the corrected scheme and once drift-free, then print
// how the first few coefficients evolve. Build target: demo_heat_decay.

#include <cstdio>

#include "stratheat/noise.hpp"
#include "stratheat/solver.hpp"
#include "stratheat/vectorfield.hpp"

int main() {
  using namespace stratheat;

  const CovarianceSpec cov(CovarianceSpec::Family::power, 3.0, 0.1, 8);
  const Grid1D space(32);
  const TimeGrid time(0.25, 256);
  const SolverConfig cfg{cov,  cov.modes(), space, time, SpectralField::unit_mode(1, cov.modes()),
                         0.55, 0.5,         1};

  const auto W = assemble_noise(cov, brownian_maker(), time, 2024);
  const auto noisy = integrate_ito_corrected(cfg, W, sine_vector_field());
  const auto quiet = integrate_ito_corrected(cfg, W, zero_vector_field());

  std::printf("%8s %12s %12s %12s\n", "t", "a1 (noisy)", "a2 (noisy)", "a1 (f=0)");
  for (std::size_t i = 0; i <= time.steps(); i += 32)
    std::printf("%8.4f %12.6f %12.6f %12.6f\n", time.time(i), noisy.at(i).coeff(1),
                noisy.at(i).coeff(2), quiet.at(i).coeff(1));

  std::printf("\nWith f = 0 the modes decay exactly like exp(-k^2 pi^2 t); the\n"
              "noisy run keeps that backbone but is pushed around by f(Y) dW.\n");
  return 0;
}
