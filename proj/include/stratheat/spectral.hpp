#pragma once

// Dirichlet sine eigenbasis on (0,1) and everything that acts diagonally on it.
//
// A field is stored by its coefficients a_1..a_K on e_k(x) = sqrt(2) sin(k pi x),
// the orthonormal eigenfunctions of -d^2/dx^2 with zero boundary values and
// eigenvalues mu_k = k^2 pi^2. The heat semigroup, fractional powers of -Delta
// and the Yosida approximation are exact per mode; collocation-grid transforms
// are exact whenever K <= M (discrete sine orthogonality).

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "stratheat/grid.hpp"

namespace stratheat {

inline double laplace_eigenvalue(std::size_t k) {  // k is 1-based
  const double kpi = static_cast<double>(k) * std::numbers::pi;
  return kpi * kpi;
}

// Covariance eigenvalue sequence lambda_k with regularity exponent eta.
// Admissibility means sum_k lambda_k k^{4 eta} < infinity, checked analytically
// for the two supported parametric families.
class CovarianceSpec {
 public:
  enum class Family { power, resolvent };

  CovarianceSpec(Family family, double r, double eta, std::size_t modes)
      : family_(family), r_(r), eta_(eta), modes_(modes) {
    if (modes_ == 0) throw std::invalid_argument("CovarianceSpec: need at least one mode");
    if (!(eta_ > 0.0) || !(eta_ < 0.125))
      throw std::invalid_argument("CovarianceSpec: eta must lie in (0, 1/8)");
  }

  Family family() const noexcept { return family_; }
  double decay() const noexcept { return r_; }
  double eta() const noexcept { return eta_; }
  std::size_t modes() const noexcept { return modes_; }

  double eigenvalue(std::size_t k) const {  // k is 1-based
    if (k == 0 || k > modes_) return 0.0;
    switch (family_) {
      case Family::power:
        return std::pow(static_cast<double>(k), -r_);
      case Family::resolvent:
        return std::pow(1.0 + laplace_eigenvalue(k), -r_);
    }
    return 0.0;
  }

  // power family: sum k^{4 eta - r} converges iff r - 4 eta > 1;
  // resolvent family: lambda_k ~ (k^2 pi^2)^{-r}, so need 2r - 4 eta > 1.
  bool admissible() const noexcept {
    switch (family_) {
      case Family::power: return r_ - 4.0 * eta_ > 1.0;
      case Family::resolvent: return 2.0 * r_ - 4.0 * eta_ > 1.0;
    }
    return false;
  }

  void require_admissible() const {
    if (!admissible())
      throw std::invalid_argument("CovarianceSpec: eigenvalues fail the trace condition");
  }

  double trace_sum() const {
    double s = 0.0;
    for (std::size_t k = 1; k <= modes_; ++k) s += eigenvalue(k);
    return s;
  }

  bool operator==(const CovarianceSpec&) const = default;

 private:
  Family family_;
  double r_;
  double eta_;
  std::size_t modes_;
};

// phi(x) = sum_{k<=K} a_k e_k(x), held by coefficients.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(std::size_t modes) : a_(modes, 0.0) {}
  explicit SpectralField(std::vector<double> coeffs) : a_(std::move(coeffs)) {
    if (a_.empty()) throw std::invalid_argument("SpectralField: need at least one mode");
  }

  std::size_t modes() const noexcept { return a_.size(); }
  double coeff(std::size_t k) const { return a_.at(k - 1); }  // k is 1-based
  double& coeff(std::size_t k) { return a_.at(k - 1); }
  const std::vector<double>& coeffs() const noexcept { return a_; }
  std::vector<double>& coeffs() noexcept { return a_; }

  // Exact L^2(0,1) norm by Parseval.
  double norm_b() const {
    double s = 0.0;
    for (double a : a_) s += a * a;
    return std::sqrt(s);
  }

  bool finite() const {
    for (double a : a_)
      if (!std::isfinite(a)) return false;
    return true;
  }

  SpectralField& operator+=(const SpectralField& o) {
    if (o.modes() != modes()) throw std::invalid_argument("SpectralField: mode mismatch");
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    if (o.modes() != modes()) throw std::invalid_argument("SpectralField: mode mismatch");
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
  }
  SpectralField& operator*=(double c) {
    for (double& a : a_) a *= c;
    return *this;
  }
  friend SpectralField operator+(SpectralField l, const SpectralField& r) { return l += r; }
  friend SpectralField operator-(SpectralField l, const SpectralField& r) { return l -= r; }
  friend SpectralField operator*(double c, SpectralField f) { return f *= c; }

  static SpectralField unit_mode(std::size_t k, std::size_t modes) {
    SpectralField f(modes);
    f.coeff(k) = 1.0;
    return f;
  }

 private:
  std::vector<double> a_;
};

// Transform plan between K coefficients and M collocation values.
// Discrete sine orthogonality, sum_{m=1}^{M} sin(j pi x_m) sin(k pi x_m)
// = (M+1)/2 delta_jk for j,k <= M, makes analyze an exact inverse of
// synthesize whenever K <= M.
class SineBasis {
 public:
  SineBasis(std::size_t modes, const Grid1D& grid)
      : modes_(modes), grid_(grid), table_(modes * grid.size()) {
    if (modes_ == 0) throw std::invalid_argument("SineBasis: need at least one mode");
    if (modes_ > grid_.size())
      throw std::invalid_argument("SineBasis: K > M aliases the transform");
    const double root2 = std::numbers::sqrt2;
    for (std::size_t k = 0; k < modes_; ++k)
      for (std::size_t m = 0; m < grid_.size(); ++m)
        table_[k * grid_.size() + m] =
            root2 * std::sin(static_cast<double>(k + 1) * std::numbers::pi * grid_.node(m));
  }

  std::size_t modes() const noexcept { return modes_; }
  const Grid1D& grid() const noexcept { return grid_; }

  void synthesize_into(const SpectralField& f, std::span<double> values) const {
    if (f.modes() > modes_) throw std::invalid_argument("SineBasis: field exceeds plan modes");
    if (values.size() != grid_.size()) throw std::invalid_argument("SineBasis: values size");
    const std::size_t M = grid_.size();
    for (std::size_t m = 0; m < M; ++m) values[m] = 0.0;
    for (std::size_t k = 0; k < f.modes(); ++k) {
      const double a = f.coeffs()[k];
      if (a == 0.0) continue;
      const double* row = &table_[k * M];
      for (std::size_t m = 0; m < M; ++m) values[m] += a * row[m];
    }
  }

  std::vector<double> synthesize(const SpectralField& f) const {
    std::vector<double> values(grid_.size());
    synthesize_into(f, values);
    return values;
  }

  SpectralField analyze(std::span<const double> values) const {
    if (values.size() != grid_.size()) throw std::invalid_argument("SineBasis: values size");
    const std::size_t M = grid_.size();
    SpectralField f(modes_);
    // a_k = (1/(M+1)) sum_m values_m e_k(x_m): table rows carry the sqrt(2).
    const double w = grid_.weight();
    for (std::size_t k = 0; k < modes_; ++k) {
      const double* row = &table_[k * M];
      double s = 0.0;
      for (std::size_t m = 0; m < M; ++m) s += values[m] * row[m];
      f.coeffs()[k] = w * s;
    }
    return f;
  }

  // e_k values at the nodes, k 1-based.
  std::span<const double> mode_row(std::size_t k) const {
    return {&table_[(k - 1) * grid_.size()], grid_.size()};
  }

 private:
  std::size_t modes_;
  Grid1D grid_;
  std::vector<double> table_;
};

inline std::vector<double> synthesize(const SpectralField& f, const Grid1D& g) {
  return SineBasis(f.modes(), g).synthesize(f);
}

// Full-rank analysis: returns M coefficients; truncate with the overload below.
inline SpectralField analyze(std::span<const double> values, const Grid1D& g) {
  return SineBasis(g.size(), g).analyze(values);
}

inline SpectralField analyze(std::span<const double> values, const Grid1D& g, std::size_t modes) {
  return SineBasis(modes, g).analyze(values);
}

inline SpectralField semigroup_apply(SpectralField f, double t) {
  if (t < 0.0) throw std::invalid_argument("semigroup_apply: negative time");
  for (std::size_t k = 1; k <= f.modes(); ++k) f.coeff(k) *= std::exp(-laplace_eigenvalue(k) * t);
  return f;
}

// (-Delta)^alpha, spectral convention: a_k -> (k^2 pi^2)^alpha a_k.
inline SpectralField fractional_apply(SpectralField f, double alpha) {
  if (alpha == 0.0) return f;
  for (std::size_t k = 1; k <= f.modes(); ++k) f.coeff(k) *= std::pow(laplace_eigenvalue(k), alpha);
  return f;
}

// Semigroup of the Yosida approximation -Delta_eps = (1/eps)(Id - (Id - eps Delta)^{-1});
// per mode the generator eigenvalue is mu_k/(1 + eps mu_k).
inline SpectralField yosida_semigroup_apply(SpectralField f, double t, double eps) {
  if (t < 0.0) throw std::invalid_argument("yosida_semigroup_apply: negative time");
  if (!(eps > 0.0)) throw std::invalid_argument("yosida_semigroup_apply: eps must be positive");
  for (std::size_t k = 1; k <= f.modes(); ++k) {
    const double mu = laplace_eigenvalue(k);
    f.coeff(k) *= std::exp(-t * mu / (1.0 + eps * mu));
  }
  return f;
}

inline double sup_norm(const SpectralField& f, const Grid1D& g) {
  const auto values = synthesize(f, g);
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

// || (-Delta)^alpha phi ||_{L^p(0,1)}. p = 2 is exact by Parseval; even p > 2
// uses the grid quadrature (exact trapezoid under zero boundary values, and in
// fact alias-free for |phi|^p whenever pK < 2(M+1)).
inline double sobolev_norm(const SpectralField& f, double alpha, int p, const Grid1D& g) {
  if (p < 2 || p % 2 != 0) throw std::invalid_argument("sobolev_norm: p must be even and >= 2");
  if (p == 2) {
    double s = 0.0;
    for (std::size_t k = 1; k <= f.modes(); ++k) {
      const double b = (alpha == 0.0 ? 1.0 : std::pow(laplace_eigenvalue(k), alpha)) * f.coeff(k);
      s += b * b;
    }
    return std::sqrt(s);
  }
  const auto values = synthesize(fractional_apply(f, alpha), g);
  double s = 0.0;
  for (double v : values) s += std::pow(std::abs(v), p);
  return std::pow(g.weight() * s, 1.0 / static_cast<double>(p));
}

// Trace function of the noise covariance: P(x) = (1/2) sum_k lambda_k e_k(x)^2
// = sum_{k<=K} lambda_k sin^2(k pi x). Values in [0, sum lambda_k].
inline std::vector<double> trace_function(const CovarianceSpec& q, const Grid1D& g) {
  q.require_admissible();
  std::vector<double> p(g.size(), 0.0);
  for (std::size_t k = 1; k <= q.modes(); ++k) {
    const double lam = q.eigenvalue(k);
    if (lam == 0.0) continue;
    for (std::size_t m = 0; m < g.size(); ++m) {
      const double s = std::sin(static_cast<double>(k) * std::numbers::pi * g.node(m));
      p[m] += lam * s * s;
    }
  }
  return p;
}

}  // namespace stratheat
