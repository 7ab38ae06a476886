#pragma once

// Uniform (theta, z) grids and node-valued fields on the annulus.

#include "waistlab/errors.hpp"
#include "waistlab/surface.hpp"

#include <algorithm>
#include <cstddef>
#include <vector>

namespace waistlab {

struct GridSpec {
  int n_theta = 192;
  int n_z = 193;
};

/// Uniform periodic-in-theta grid on [0, 2 pi) x [-z_max, z_max].
struct Grid {
  int n_theta = 0;
  int n_z = 0;
  double z_max = 1.0;

  Grid() = default;
  Grid(int nt, int nz, double zmax) : n_theta(nt), n_z(nz), z_max(zmax) {
    if (nt < 4 || nz < 3)
      throw ValidationError("grid: need n_theta >= 4 and n_z >= 3");
  }
  double dtheta() const { return kTwoPi / n_theta; }
  double dz() const { return 2.0 * z_max / (n_z - 1); }
  double z(int j) const { return -z_max + j * dz(); }
  double theta(int i) const { return i * dtheta(); }
  int waist_row() const { return (n_z - 1) / 2; }
  std::size_t size() const { return static_cast<std::size_t>(n_theta) * n_z; }
  bool has_waist_row() const { return n_z % 2 == 1; }
};

/// Real values per node, theta index fastest.
struct ScalarField {
  Grid grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const Grid& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}

  double& at(int i, int j) { return values[static_cast<std::size_t>(j) * grid.n_theta + i]; }
  double at(int i, int j) const { return values[static_cast<std::size_t>(j) * grid.n_theta + i]; }
  bool boundary_row(int j) const { return j == 0 || j == grid.n_z - 1; }

  /// Max over rows of (max - min) along theta.
  double theta_oscillation() const {
    double worst = 0.0;
    for (int j = 0; j < grid.n_z; ++j) {
      double lo = at(0, j), hi = lo;
      for (int i = 1; i < grid.n_theta; ++i) {
        lo = std::min(lo, at(i, j));
        hi = std::max(hi, at(i, j));
      }
      worst = std::max(worst, hi - lo);
    }
    return worst;
  }

  std::vector<double> row_means() const {
    std::vector<double> out(grid.n_z, 0.0);
    for (int j = 0; j < grid.n_z; ++j) {
      double s = 0.0;
      for (int i = 0; i < grid.n_theta; ++i)
        s += at(i, j);
      out[j] = s / grid.n_theta;
    }
    return out;
  }

  static ScalarField from_rows(const Grid& g, const std::vector<double>& rows) {
    ScalarField f(g);
    for (int j = 0; j < g.n_z; ++j)
      for (int i = 0; i < g.n_theta; ++i)
        f.at(i, j) = rows[j];
    return f;
  }
};

} // namespace waistlab
