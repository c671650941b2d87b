#pragma once

// Time-indexed grid fields: density paths, scalar/vector field paths, the
// regularity norm N (sup-in-time Lipschitz constant plus L2-in-time sup-in-space
// time derivative) and the time/space regularization of paths.

#include <optional>
#include <vector>

#include "gflow/torus.hpp"

namespace gflow {

/// Uniform time grid {0, 1/T, ..., 1}.
std::vector<double> uniform_times(int steps);
bool is_increasing_unit_grid(const std::vector<double>& times);

/// Time-indexed probability densities on the grid (density 1 = Lebesgue).
struct DensityPath {
  TorusGrid grid;
  std::vector<double> times;
  std::vector<Field> frames;

  static DensityPath uniform(const TorusGrid& grid, std::vector<double> times);
  int frame_count() const { return static_cast<int>(frames.size()); }
  /// Throws if frames are negative, not unit mass, or sized wrongly.
  void validate(double tol = 1e-9) const;
  /// Admissible for Pb(gamma, rho): additionally frame(0) = frame(1) = uniform.
  bool has_uniform_endpoints(double tol = 1e-12) const;
  double min_value() const;
};

/// Time-indexed scalar or vector grid field. Frames store `components`
/// values per cell, cell-major (value of component c at cell z is at
/// z * components + c).
struct FieldPath {
  TorusGrid grid;
  std::vector<double> times;
  std::vector<Field> frames;
  int components = 1;
  std::optional<double> tau;

  static FieldPath zeros(const TorusGrid& grid, std::vector<double> times, int components = 1);
  static FieldPath from_density(const DensityPath& rho);
  int frame_count() const { return static_cast<int>(frames.size()); }
  double sup_abs() const;
  /// True when every frame at t <= tau or t >= 1 - tau vanishes.
  bool vanishes_near_ends(double tau_value, double tol = 0.0) const;
};

/// Lipschitz part: max over cells and axes of |f(z + e_a) - f(z)| / h.
double discrete_lipschitz(const Field& frame, const TorusGrid& grid, int components = 1);

struct ENormParts {
  double lipschitz = 0.0;
  double time_derivative = 0.0;
  double total() const { return lipschitz + time_derivative; }
};

ENormParts e_norm_parts(const FieldPath& f);
/// N(f) on the discrete path; requires at least two frames.
double e_norm(const FieldPath& f);
double e_norm(const DensityPath& rho);

/// rho^eps: uniform for t in [0, eps] and [1 - eps, 1], otherwise the
/// mollified frame at rescaled time s = (t - eps)/(1 - 2 eps) (nearest input
/// frame). Output times default to the input times.
DensityPath regularize_density(const DensityPath& rho, double eps,
                               const std::optional<std::vector<double>>& out_times = std::nullopt);

/// xi^eps: zero on the end windows, mollified and time-rescaled elsewhere.
FieldPath regularize_field(const FieldPath& xi, double eps,
                           const std::optional<std::vector<double>>& out_times = std::nullopt);

/// L2-in-time, sup-in-space distance between two paths on the same grids
/// (piecewise-constant quadrature on the time grid).
double l2t_linf_distance(const FieldPath& a, const FieldPath& b);

struct ProductBound {
  double n_product = 0.0;  ///< N(ab)
  double bound = 0.0;      ///< C (|a|_inf N(b) + |b|_inf N(a))
  bool holds = false;
};

/// Leibniz-form product estimate for scalar paths, with C = 1 (the discrete
/// difference quotients satisfy it exactly).
ProductBound lipschitz_product_bound(const FieldPath& a, const FieldPath& b);

/// Index of the frame whose time is nearest to t.
int nearest_frame(const std::vector<double>& times, double t);

}  // namespace gflow
