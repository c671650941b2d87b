#pragma once

// Discrete generalized flows on a path lattice and the relaxed least-action
// problem with prescribed endpoint coupling and intermediate densities:
// exact LP over enumerated paths, entropic multimarginal scaling, pressure
// extraction and the optimality checks built on the LP duals.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "gflow/coupling.hpp"
#include "gflow/fields.hpp"

namespace gflow {

using Path = std::vector<int>;

/// Grid paths visiting one cell per time t_0 = 0 < ... < t_K = 1.
class PathLattice {
 public:
  PathLattice() : PathLattice(TorusGrid(1, 2), {0.0, 1.0}) {}
  PathLattice(const TorusGrid& grid, std::vector<double> times);
  static PathLattice uniform(const TorusGrid& grid, int steps) { return {grid, uniform_times(steps)}; }

  const TorusGrid& grid() const { return grid_; }
  const std::vector<double>& times() const { return times_; }
  int steps() const { return static_cast<int>(times_.size()) - 1; }
  double dt(int k) const { return times_[k + 1] - times_[k]; }
  /// Quadrature weight of interior time k: (t_{k+1} - t_{k-1}) / 2.
  double weight(int k) const { return 0.5 * (times_[k + 1] - times_[k - 1]); }
  bool uniform() const;
  /// |a - b|^2 between cell centers (minimal image).
  const Eigen::MatrixXd& dist2() const { return dist2_; }
  /// Cost of the step from time k to k+1: |a - b|^2 / (2 dt_k).
  Eigen::MatrixXd step_cost(int k) const { return dist2_ / (2.0 * dt(k)); }
  double path_action(const Path& w) const;
  /// N^(K+1), or nullopt when it overflows 64 bits.
  std::optional<std::uint64_t> path_count() const;
  /// Decodes a row-major path index (time 0 most significant).
  Path path_at(std::uint64_t index) const;

  bool operator==(const PathLattice& o) const { return grid_ == o.grid_ && times_ == o.times_; }

 private:
  TorusGrid grid_;
  std::vector<double> times_;
  Eigen::MatrixXd dist2_;
};

struct WeightedPath {
  Path cells;
  double mass;
};

/// Sparse list of charged paths.
struct ExplicitFlow {
  std::vector<WeightedPath> paths;
};

/// eta(w) = a(w_0, w_K) prod_k b_k(w_k) prod_k kernel_k(w_{k-1}, w_k).
struct ChainFlow {
  Eigen::MatrixXd endpoint;             ///< a, N x N
  std::vector<Eigen::VectorXd> scale;   ///< b_k for interior k = 1..K-1 (index k-1)
  std::vector<Eigen::MatrixXd> kernel;  ///< kernel_k for steps k = 1..K (index k-1)
};

struct GeneralizedFlow {
  PathLattice lattice;
  std::variant<ExplicitFlow, ChainFlow> rep;

  bool is_explicit() const { return std::holds_alternative<ExplicitFlow>(rep); }
  const ExplicitFlow& explicit_paths() const { return std::get<ExplicitFlow>(rep); }
};

double total_mass(const GeneralizedFlow& eta);
double flow_action(const GeneralizedFlow& eta);
/// Joint law of (w_0, w_K) as an N x N mass matrix.
Eigen::MatrixXd endpoint_coupling(const GeneralizedFlow& eta);
/// Mass of the time-k marginal per cell, k = 0..K.
std::vector<Eigen::VectorXd> time_marginal_masses(const GeneralizedFlow& eta);
/// Time marginals as densities (mass / cell volume) on the lattice times.
DensityPath density_of_flow(const GeneralizedFlow& eta);
/// Enumerates a chain flow into explicit paths; throws when N^(K+1) > budget.
GeneralizedFlow materialize(const GeneralizedFlow& eta, std::uint64_t budget = 1'000'000);

/// gamma (x) prod_k rho_k: independent intermediate positions.
GeneralizedFlow product_flow(const BistochasticMeasure& gamma, const DensityPath& rho, std::uint64_t budget = 1'000'000);

struct AdmissibilityReport {
  double endpoint_residual = 0.0;          ///< total variation against gamma
  std::vector<double> marginal_residuals;  ///< total variation against rho_k, k = 0..K
  double max_residual = 0.0;
  bool admissible = false;
};

AdmissibilityReport verify_admissible(const GeneralizedFlow& eta, const BistochasticMeasure& gamma,
                                      const DensityPath& rho, double tol);

/// Interior-time scalar fields with quadrature weights; zero mean per frame.
struct PressureField {
  TorusGrid grid;
  std::vector<double> times;
  std::vector<double> weights;
  std::vector<Field> frames;

  double max_abs_mean() const;
};

/// sum_k w_k sum_z p_k(z) r_k(z) h^d over interior frames. r frames must have zero mean.
double extract_pressure_pairing(const PressureField& p, const std::vector<Field>& r);
/// Same, with r given on the full lattice time grid (endpoint frames ignored).
double extract_pressure_pairing(const PressureField& p, const FieldPath& r);

class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExactSolution {
  double action = 0.0;
  double dual_objective = 0.0;
  GeneralizedFlow flow;
  PressureField pressure;
  /// phi(i, j); pairs outside the support of gamma carry the largest value
  /// keeping every path's reduced cost nonnegative.
  Eigen::MatrixXd endpoint_duals;
  BistochasticMeasure gamma;
  DensityPath rho;
  std::int64_t iterations = 0;
  double primal_residual = 0.0;
  double min_reduced_cost = 0.0;
};

ExactSolution solve_exact(const BistochasticMeasure& gamma, const DensityPath& rho,
                          std::uint64_t budget = 1'000'000);
ExactSolution solve_exact(const BistochasticMeasure& gamma, const PathLattice& lattice,
                          std::uint64_t budget = 1'000'000);

struct EntropicStats {
  int iterations = 0;
  double residual = 0.0;  ///< largest total-variation marginal error
  bool converged = false;
};

struct EntropicSolution {
  double action = 0.0;     ///< transport cost only
  double objective = 0.0;  ///< action + reg * sum eta log eta, from the dual potentials
  GeneralizedFlow flow;
  PressureField pressure;
  Eigen::MatrixXd endpoint_potential;
  EntropicStats stats;
};

EntropicSolution solve_entropic(const BistochasticMeasure& gamma, const DensityPath& rho, double reg,
                                int max_iter = 20000, double tol = 1e-10);

enum class Extrapolation { Linear, Richardson, Exponential };

struct ExtrapolatedAction {
  std::vector<double> regs;
  std::vector<double> actions;
  double value = 0.0;
};

/// Entropic actions over a decreasing reg schedule, extrapolated to reg = 0.
/// Linear: least-squares line in reg. Richardson: line through the last two
/// points. Exponential: A(r) = A0 + C x^(r0/r) through the last three points of
/// a halving schedule, which matches the exp(-gap/reg) bias of a discrete LP;
/// falls back to the last value when the differences are not geometric-like.
ExtrapolatedAction extrapolate_entropic(const BistochasticMeasure& gamma, const DensityPath& rho,
                                        const std::vector<double>& regs, Extrapolation method,
                                        int max_iter = 20000, double tol = 1e-10);

struct LeastActionReport {
  double worst_slack = 0.0;        ///< max over charged paths of rc - min rc with the same endpoints
  double min_reduced_cost = 0.0;   ///< over every path of the lattice
  std::size_t charged_paths = 0;
};

/// Reduced cost A(w) - sum_k w_k p_k(w_k) - phi(w_0, w_K).
double reduced_cost(const PathLattice& lattice, const Path& w, const PressureField& p, const Eigen::MatrixXd& phi);
LeastActionReport verify_least_action(const GeneralizedFlow& flow, const PressureField& p,
                                      const Eigen::MatrixXd& endpoint_duals);

/// A(H) - A(gamma, rho) - <p, R - rho>, R the density of H. Throws when H
/// does not have the endpoint coupling of the solution.
double lagrange_gap(const ExactSolution& sol, const GeneralizedFlow& H, double endpoint_tol = 1e-9);
double lagrange_gap(double action, const BistochasticMeasure& gamma, const DensityPath& rho, const PressureField& p,
                    const GeneralizedFlow& H, double endpoint_tol = 1e-9);

/// Optimum with the intermediate constraints dropped: each pair uses its
/// cheapest lattice path.
double solve_relaxed(const BistochasticMeasure& gamma, const PathLattice& lattice);

nlohmann::json to_json(const PressureField& p);
nlohmann::json to_json(const DensityPath& rho);
DensityPath density_path_from_json(const nlohmann::json& j);

}  // namespace gflow
