#pragma once

// Balanced discrete transport (Hitchcock) problems solved by the network
// simplex on the bipartite tree basis. Much faster than the general simplex
// for the dense couplings used when comparing endpoint measures.

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace gflow {

struct TransportFlow {
  int source;
  int target;
  double mass;
};

struct TransportResult {
  double cost = 0.0;
  std::vector<TransportFlow> flows;  ///< strictly positive entries only
  Eigen::VectorXd u;                 ///< source potentials, u[0] = 0
  Eigen::VectorXd v;                 ///< target potentials; u_i + v_j <= c_ij
  long iterations = 0;
};

/// Minimizes sum c(i,j) pi_ij over couplings of `supply` and `demand`.
/// Both must be positive; demand is rescaled to the supply total, and totals
/// differing by more than 1e-9 relative are rejected.
TransportResult solve_transport(const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
                                const std::function<double(int, int)>& cost);

}  // namespace gflow
