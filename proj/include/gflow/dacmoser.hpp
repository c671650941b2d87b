#pragma once

// Dacorogna-Moser transport between density paths: solve
// Laplacian(theta) = f - g per frame, flow along v(s) = grad(theta) / ((1-s) f + s g)
// for pseudo-time s in [0,1]; the time-one map Psi pushes f forward to g.

#include <vector>

#include "json.hpp"

#include "gflow/fields.hpp"

namespace gflow {

/// Zero-mean solution of Laplacian(theta) = h with the continuum symbol
/// -4 pi^2 |k|^2. The mean of h is projected out if below tol * max(1, |h|_inf).
Field poisson_solve(const Field& h, const TorusGrid& grid, double tol = 1e-10);
/// The same spectral operator applied forward.
Field spectral_laplacian(const Field& theta, const TorusGrid& grid);
/// Centered-difference gradient, cell-major with dim components per cell.
Field centered_gradient(const Field& theta, const TorusGrid& grid);

/// v(s) = grad(theta)/rho(s) for every frame; components = dim.
FieldPath build_velocity(const DensityPath& f, const DensityPath& g, double s);

/// Psi(t, .) - Id as displacements of the cell centers.
struct StraighteningMap {
  TorusGrid grid;
  std::vector<double> times;
  std::vector<Field> frames;  ///< dim components per cell
  double norm_excess = 0.0;   ///< N(Psi - Id)
  int ode_steps = 0;          ///< steps of the accepted integration
  double min_jacobian = 1.0;

  static StraighteningMap identity(const TorusGrid& grid, std::vector<double> times);
  Point image(int frame, int cell) const;
};

struct FlowMapOptions {
  int ode_steps = 32;
  double refine_tol = 1e-6;  ///< stop doubling once N(Psi - Id) changes by less
  int max_doublings = 8;
};

class StepSizeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

StraighteningMap flow_map(const DensityPath& f, const DensityPath& g, const FlowMapOptions& opt = {});
StraighteningMap flow_map(const DensityPath& f, const DensityPath& g, int ode_steps);

/// Mass deposition of point masses onto the four (two in 1D) nearest cell
/// centers, weights given by the area overlap of a cell-sized box.
struct Deposit {
  std::array<int, 4> cells;
  std::array<double, 4> weights;
  int count;
};
Deposit cic_deposit(const TorusGrid& grid, const Point& p);

/// Exact 1-Wasserstein distance between two grid measures with equal mass
/// (1D circle formula; 2D by network simplex, grids up to 1024 cells, else NaN).
double grid_w1(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const TorusGrid& grid);

struct PushforwardReport {
  std::vector<double> w1;  ///< per frame
  std::vector<double> tv;  ///< per frame, total variation of masses
  double max_w1 = 0.0;
  double max_tv = 0.0;
  double mass_error = 0.0;
};

PushforwardReport verify_pushforward(const StraighteningMap& map, const DensityPath& f, const DensityPath& g);

nlohmann::json to_json(const StraighteningMap& map);

}  // namespace gflow
