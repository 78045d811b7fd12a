#pragma once

// Uniform space-time grids and dense 2D fields. Grids are immutable after
// construction; fields are plain row-major arrays indexed (x-node, t-node).

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "mfg/numerics.hpp"

namespace mfg {

enum class Topology { Torus, NeumannInterval, LagrangianInterval };

struct SpaceTimeGrid {
  double x_min = 0.0, x_max = 1.0;
  double horizon = 1.0;   // length of the time window
  double t_min = 0.0;     // solvers use [0, T]; slab views may start later
  int n_x = 3, n_t = 3;
  Topology topology = Topology::NeumannInterval;

  SpaceTimeGrid() = default;
  SpaceTimeGrid(double xmin, double xmax, double T, int nx, int nt,
                Topology topo = Topology::NeumannInterval, double tmin = 0.0)
      : x_min(xmin), x_max(xmax), horizon(T), t_min(tmin), n_x(nx), n_t(nt),
        topology(topo) {
    if (!(x_max > x_min)) throw std::invalid_argument("grid: x_max <= x_min");
    if (!(horizon > 0.0)) throw std::invalid_argument("grid: nonpositive horizon");
    if (n_x < 3 || n_t < 3) throw std::invalid_argument("grid: need at least 3 nodes");
  }

  double h_x() const { return (x_max - x_min) / (n_x - 1); }
  double h_t() const { return horizon / (n_t - 1); }
  double x(int i) const { return x_min + i * h_x(); }
  double t(int j) const { return t_min + j * h_t(); }

  std::vector<double> x_nodes() const {
    std::vector<double> v(n_x);
    for (int i = 0; i < n_x; ++i) v[i] = x(i);
    return v;
  }
  std::vector<double> t_nodes() const {
    std::vector<double> v(n_t);
    for (int j = 0; j < n_t; ++j) v[j] = t(j);
    return v;
  }

  // Torus grids carry a duplicated seam: node n_x-1 is the same physical
  // point as node 0. Periodic index arithmetic skips the duplicate.
  int wrap_left(int i) const { return i == 0 ? n_x - 2 : i - 1; }
  int wrap_right(int i) const { return i == n_x - 1 ? 1 : i + 1; }
};

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const SpaceTimeGrid& grid, double fill = 0.0)
      : grid_(grid), values_(size_t(grid.n_x) * grid.n_t, fill) {}

  const SpaceTimeGrid& grid() const { return grid_; }
  double& at(int i, int j) { return values_[size_t(j) * grid_.n_x + i]; }
  double at(int i, int j) const { return values_[size_t(j) * grid_.n_x + i]; }

  std::span<const double> data() const { return values_; }
  std::span<double> data() { return values_; }

  std::vector<double> time_slice(int j) const {
    std::vector<double> out(grid_.n_x);
    for (int i = 0; i < grid_.n_x; ++i) out[i] = at(i, j);
    return out;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  SpaceTimeGrid grid_;
  std::vector<double> values_;
};

// First derivatives of a field: centered in the interior, first-order
// one-sided at the ends (periodic wrap for torus grids in x).
inline ScalarField d_dx(const ScalarField& f) {
  const auto& g = f.grid();
  ScalarField out(g);
  double h = g.h_x();
  for (int j = 0; j < g.n_t; ++j) {
    for (int i = 0; i < g.n_x; ++i) {
      if (g.topology == Topology::Torus) {
        out.at(i, j) = (f.at(g.wrap_right(i), j) - f.at(g.wrap_left(i), j)) / (2 * h);
      } else if (i == 0) {
        out.at(i, j) = (f.at(1, j) - f.at(0, j)) / h;
      } else if (i == g.n_x - 1) {
        out.at(i, j) = (f.at(i, j) - f.at(i - 1, j)) / h;
      } else {
        out.at(i, j) = (f.at(i + 1, j) - f.at(i - 1, j)) / (2 * h);
      }
    }
  }
  return out;
}

inline ScalarField d_dt(const ScalarField& f) {
  const auto& g = f.grid();
  ScalarField out(g);
  double h = g.h_t();
  for (int j = 0; j < g.n_t; ++j) {
    for (int i = 0; i < g.n_x; ++i) {
      if (j == 0) {
        out.at(i, j) = (f.at(i, 1) - f.at(i, 0)) / h;
      } else if (j == g.n_t - 1) {
        out.at(i, j) = (f.at(i, j) - f.at(i, j - 1)) / h;
      } else {
        out.at(i, j) = (f.at(i, j + 1) - f.at(i, j - 1)) / (2 * h);
      }
    }
  }
  return out;
}

}  // namespace mfg
