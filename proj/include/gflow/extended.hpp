#pragma once

// Label-indexed flows: particles carry a label a besides their path, and the
// endpoint data prescribe the joint laws of (a, x_0) and (a, x_1). Includes
// the two-segment coupling mu_inf and the sawtooth family mu_n that converge
// to it while the optimal action stays bounded away from zero.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "gflow/brenier.hpp"
#include "gflow/coupling.hpp"

namespace gflow {

enum class LabelGeometry {
  Interval,  ///< [0,1], cell centers (j + 1/2)/m, no wrap
  Torus      ///< T^1, cell centers j/m, minimal-image distance
};

/// Mass on (label cell, position cell) pairs, m cells each. Both marginals are
/// uniform (1/m per cell).
struct LabeledCoupling {
  int m = 2;
  LabelGeometry geometry = LabelGeometry::Interval;
  Eigen::MatrixXd mass;

  double marginal_error() const;
  void validate(double tol = 1e-9) const;
  double position(int cell) const;
  double dist2(int a, int b) const;

  /// Torus-geometry labeled coupling with label = first coordinate of gamma (1D grids).
  static LabeledCoupling from_bistochastic(const BistochasticMeasure& gamma);
  /// The same masses seen as a bistochastic measure on TorusGrid(1, m).
  BistochasticMeasure lift() const;
};

/// Integral of alpha(label, position) with labels and positions at cell centers.
double integrate(const LabeledCoupling& c, const std::function<double(double, double)>& alpha);

struct CounterexampleFamily {
  std::optional<int> n;  ///< nullopt for the limit measure
  LabeledCoupling measure;
};

/// Label x spread evenly over positions x/2 and 1/2 + x/2 (cell-snapped).
CounterexampleFamily build_mu_infinity(int m);
/// Sawtooth of 2n slope-one segments. Label block q (width 1/(2n)) starts at
/// position (q/2)/(2n) for even q and at 1/2 + ((q-1)/2)/(2n) for odd q.
CounterexampleFamily build_mu_n(int n, int m);

struct ExtendedOptions {
  /// Also solve the labeled problem with prescribed uniform interior marginals
  /// on the lattice times.
  bool incompressible = false;
  std::uint64_t budget = 1'000'000;
};

struct ExtendedResult {
  /// Lower bound: labels move independently by free motion, sum over labels
  /// of (1/m) * W2^2 / 2 between their initial and final laws.
  double action = 0.0;
  std::vector<double> per_label;  ///< W2^2 / 2 for each label's normalized laws
  std::optional<double> incompressible_action;
  std::optional<double> incompressible_residual;
};

ExtendedResult solve_extended(const LabeledCoupling& mu, const LabeledCoupling& nu, const PathLattice& lattice,
                              const ExtendedOptions& opt = {});

struct SeriesRow {
  std::optional<int> n;
  double dmk = 0.0;
  double action_lower = 0.0;  ///< (1/16)(1 - 1/n)^2, 0 in the limit
  double action_computed = 0.0;
};

struct DiscontinuityReport {
  int m = 0;
  std::vector<SeriesRow> rows;  ///< one per requested n, then the limit row
  bool distances_decreasing = false;
  bool actions_above_bound = false;  ///< computed >= lower - 2/m for every n >= 2
};

DiscontinuityReport discontinuity_series(const std::vector<int>& n_list, int m);

void write_csv(std::ostream& os, const DiscontinuityReport& r);

}  // namespace gflow
