#pragma once

// Ensemble statistics and power-law rate fitting shared by the diagnostic
// estimators and the experiment drivers. Everything here is a deterministic
// reduction over a sample vector, so parallel callers that fix the partition
// of samples get bit-identical results by merging in index order.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace stratheat {

struct EnsembleStats {
  std::size_t count = 0;
  double mean = 0.0;
  double se = 0.0;                  // plug-in standard error of the mean
  std::vector<double> central;      // central moments of orders 2 .. 2p

  double variance() const { return central.empty() ? 0.0 : central.front(); }
};

// Mean, plug-in SE, and central moments up to order 2p of a scalar sample.
inline EnsembleStats ensemble_stats(std::span<const double> samples, std::size_t p = 1) {
  if (samples.size() < 2) throw std::invalid_argument("ensemble_stats: need at least 2 samples");
  if (p == 0) throw std::invalid_argument("ensemble_stats: moment order p >= 1 required");
  EnsembleStats out;
  out.count = samples.size();
  for (double v : samples) out.mean += v;
  out.mean /= static_cast<double>(out.count);

  out.central.assign(2 * p - 1, 0.0);  // orders 2, 3, ..., 2p
  for (double v : samples) {
    const double d = v - out.mean;
    double power = d;
    for (auto& c : out.central) c += (power *= d);
  }
  for (auto& c : out.central) {
    c /= static_cast<double>(out.count);
    if (!std::isfinite(c)) throw std::invalid_argument("ensemble_stats: non-finite moment");
  }
  out.se = std::sqrt(out.central.front() / static_cast<double>(out.count));
  return out;
}

struct RateFit {
  std::vector<double> x, y;  // abscissae and ordinates as given
  double slope = 0.0;        // fitted exponent s in y ~ C x^s
  double intercept = 0.0;    // log C
  double r2 = 1.0;
};

// Ordinary least squares in log-log coordinates: fits y = C x^slope.
inline RateFit fit_rate(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3)
    throw std::invalid_argument("fit_rate: need at least 3 matched points");
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw std::invalid_argument("fit_rate: abscissae and ordinates must be positive");
    for (std::size_t j = 0; j < i; ++j)
      if (x[j] == x[i]) throw std::invalid_argument("fit_rate: abscissae must be distinct");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  RateFit fit;
  fit.x.assign(x.begin(), x.end());
  fit.y.assign(y.begin(), y.end());
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

}  // namespace stratheat
