#pragma once

// Bistochastic endpoint measures on the grid torus and the quadratic
// Monge-Kantorovich distance between them, with sparse optimal plans.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "gflow/torus.hpp"

namespace gflow {

/// Mass matrix indexed by (cell_i, cell_j); both marginals are 1/N per cell.
struct BistochasticMeasure {
  TorusGrid grid;
  Eigen::MatrixXd mass;

  /// Largest deviation of a row or column sum from 1/N (and of any entry below 0).
  double marginal_error() const;
  bool is_bistochastic(double tol = 1e-9) const;
  /// Throws std::invalid_argument when not bistochastic within tol.
  void validate(double tol = 1e-9) const;
};

/// Mass 1/N on each diagonal pair (i, i).
BistochasticMeasure gamma_identity(const TorusGrid& grid);
/// Mass 1/N on each pair (i, i + offset).
BistochasticMeasure gamma_shift(const TorusGrid& grid, std::array<int, 2> offset);
/// lambda x lambda: every entry 1/N^2.
BistochasticMeasure gamma_product(const TorusGrid& grid);

/// Sinkhorn-scaled exp(U / heat) with U uniform on [0,1), deterministic in seed.
BistochasticMeasure random_bistochastic(const TorusGrid& grid, std::uint64_t seed, double heat);
/// (1 - s) a + s b.
BistochasticMeasure blend(const BistochasticMeasure& a, const BistochasticMeasure& b, double s);

/// Squared product distance D2((x,y),(X,Y))^2 = |x-X|^2 + |y-Y|^2 between cell pairs.
double pair_dist2(const TorusGrid& grid, int x, int y, int X, int Y);

struct PlanEntry {
  int x, y, X, Y;
  double mass;
};

struct TransportPlan4 {
  BistochasticMeasure source;
  BistochasticMeasure target;
  std::vector<PlanEntry> entries;

  /// Max deviation of the (x,y) and (X,Y) projections from source and target.
  double marginal_residual() const;
  double cost() const;
};

struct MKResult {
  double distance = 0.0;
  TransportPlan4 plan;
};

/// Exact d_MK via the transport LP between the supports of mu and nu.
MKResult mk_distance(const BistochasticMeasure& mu, const BistochasticMeasure& nu);

void write_csv(std::ostream& os, const BistochasticMeasure& m);
void write_csv(std::ostream& os, const TransportPlan4& plan);
nlohmann::json to_json(const BistochasticMeasure& m);
BistochasticMeasure measure_from_json(const nlohmann::json& j);

}  // namespace gflow
