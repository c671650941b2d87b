#pragma once

// Torus geometry on uniform grids: cell indexing, minimal-image arithmetic
// and the compactly supported mollifier family used to regularize densities.

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace gflow {

using Field = Eigen::VectorXd;

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A point of the flat torus [0,1)^dim. Unused trailing coordinates are 0.
struct Point {
  int dim = 1;
  std::array<double, 2> x{0.0, 0.0};

  static Point of(double a) { return Point{1, {a, 0.0}}; }
  static Point of(double a, double b) { return Point{2, {a, b}}; }
};

/// Uniform periodic grid with n cells per axis on T^dim, dim in {1, 2}.
/// Cells are indexed row-major: index = i0 * n + i1 in 2D.
class TorusGrid {
 public:
  TorusGrid() = default;
  TorusGrid(int dim, int cells_per_dim);

  int dim() const { return dim_; }
  int n() const { return n_; }
  double spacing() const { return 1.0 / n_; }
  int cell_count() const { return dim_ == 1 ? n_ : n_ * n_; }
  /// Lebesgue measure of one cell, h^dim.
  double cell_volume() const { return 1.0 / cell_count(); }

  std::array<int, 2> coords(int cell) const;
  int index(std::array<int, 2> c) const;
  /// Cell reached from `cell` by an integer offset, with wrap-around.
  int shifted(int cell, std::array<int, 2> offset) const;
  Point center(int cell) const;
  /// Nearest cell to a point (ties round half away from zero per axis).
  int nearest_cell(const Point& p) const;

  bool operator==(const TorusGrid& o) const { return dim_ == o.dim_ && n_ == o.n_; }
  bool operator!=(const TorusGrid& o) const { return !(*this == o); }

 private:
  int dim_ = 1;
  int n_ = 2;
};

/// Wraps a coordinate into [0,1).
double wrap_unit(double a);

/// Representative of b - a in [-1/2, 1/2)^dim.
Point min_image_disp(const Point& a, const Point& b);
double geodesic_dist(const Point& a, const Point& b, const TorusGrid& grid);
double norm(const Point& v);

/// Squared geodesic distance between two cell centers.
double cell_dist2(const TorusGrid& grid, int a, int b);
/// Matrix of squared geodesic distances between all cell centers.
Eigen::MatrixXd cell_dist2_matrix(const TorusGrid& grid);

/// One-dimensional C-infinity bump supported on (-1/4, 1/4), not normalized.
double bump_profile(double v);

/// Mollifier psi^eps on the grid: the tensorized bump rescaled to support
/// [-eps/4, eps/4]^dim, sampled at cell offsets and renormalized to unit sum.
/// When eps/4 is below the grid spacing only the zero offset survives and the
/// kernel acts as the identity.
class Mollifier {
 public:
  struct Tap {
    std::array<int, 2> offset;
    double weight;
  };

  Mollifier(const TorusGrid& grid, double epsilon);
  /// Kernel with explicit nonnegative taps, renormalized to unit sum. Used for
  /// kernels wider than the bump family allows on coarse grids.
  static Mollifier from_taps(const TorusGrid& grid, std::vector<Tap> taps);

  const TorusGrid& grid() const { return grid_; }
  double epsilon() const { return eps_; }
  const std::vector<Tap>& taps() const { return taps_; }
  bool is_identity() const { return taps_.size() == 1; }
  /// Second moment sum_v w(v) |v|^2 of the discrete weights.
  double second_moment() const;

 private:
  Mollifier() = default;

  TorusGrid grid_;
  double eps_ = 0.0;
  std::vector<Tap> taps_;
};

/// Circular convolution of a grid field with the mollifier weights.
Field mollify(const Field& values, const Mollifier& kernel);

/// Mollification of a density (values relative to Lebesgue, unit mass).
Field mollify_density(const Field& rho, const Mollifier& kernel);

Field uniform_density(const TorusGrid& grid);
/// Sum of values times the cell volume.
double total_mass(const Field& rho, const TorusGrid& grid);

}  // namespace gflow
