#pragma once

// Collocation and time grids. Both are value types with checked invariants.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace stratheat {

// M interior collocation nodes x_m = m/(M+1), m = 1..M, strictly inside (0,1).
class Grid1D {
 public:
  explicit Grid1D(std::size_t interior_points) : points_(interior_points) {
    if (points_ == 0) throw std::invalid_argument("Grid1D: need at least one node");
  }

  std::size_t size() const noexcept { return points_; }

  // 0-based index m -> node (m+1)/(M+1).
  double node(std::size_t m) const {
    return static_cast<double>(m + 1) / static_cast<double>(points_ + 1);
  }

  // Quadrature weight of each interior node; with zero Dirichlet boundary values
  // the resulting rule is the exact trapezoid rule on the uniform partition.
  double weight() const noexcept { return 1.0 / static_cast<double>(points_ + 1); }

  std::vector<double> nodes() const {
    std::vector<double> xs(points_);
    for (std::size_t m = 0; m < points_; ++m) xs[m] = node(m);
    return xs;
  }

  bool operator==(const Grid1D&) const = default;

 private:
  std::size_t points_;
};

// Uniform time grid t_i = i*T/N, i = 0..N.
class TimeGrid {
 public:
  TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be positive");
    if (steps == 0) throw std::invalid_argument("TimeGrid: need at least one step");
  }

  double horizon() const noexcept { return horizon_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t size() const noexcept { return steps_ + 1; }  // number of grid times
  double dt() const noexcept { return horizon_ / static_cast<double>(steps_); }
  double time(std::size_t i) const { return horizon_ * static_cast<double>(i) / static_cast<double>(steps_); }

  // True when every knot j*mesh (j >= 1) inside the horizon is a grid time,
  // i.e. mesh is an integer multiple of dt. Used by the piecewise-linear
  // noise families whose kinks must be representable on the grid.
  bool resolves_mesh(double mesh) const {
    if (!(mesh > 0.0)) return false;
    const double ratio = mesh / dt();
    const double nearest = std::round(ratio);
    return nearest >= 1.0 && std::abs(ratio - nearest) <= 1e-9 * ratio;
  }

  bool operator==(const TimeGrid&) const = default;

 private:
  double horizon_;
  std::size_t steps_;
};

}  // namespace stratheat
