#pragma once

// Comparison flows between problems with different endpoint couplings:
// T1 moves the endpoints along an optimal plan, T2 spreads the flow over
// mollifier shifts on a time-rescaled lattice, T3 straightens the time
// marginals onto the regularized target with a Dacorogna-Moser map.

#include <string>

#include "json.hpp"

#include "gflow/brenier.hpp"
#include "gflow/dacmoser.hpp"

namespace gflow {

struct T1Result {
  GeneralizedFlow flow;
  double continuous_action = 0.0;  ///< action of the unsnapped shifted paths
  double snapped_action = 0.0;
  /// sqrt(A_in) + d_MK: the bound from the triangle inequality in L2
  double sqrt_bound = 0.0;
};

/// Each path with endpoints (x,y) is split along the plan entries (x,y,X,Y)
/// and shifted by (1 - t)(X - x) + t (Y - y), snapped to the nearest cell.
T1Result t1_recondition(const GeneralizedFlow& eta, const TransportPlan4& plan, double tol = 1e-9);

/// Times {0} U {eps + (1 - 2 eps) t_k} U {1}.
std::vector<double> diffused_times(const std::vector<double>& times, double eps);

/// Hold-move-return profile: [w_0, w_0 + v, ..., w_K + v, w_K] weighted by the kernel taps.
GeneralizedFlow t2_diffuse(const GeneralizedFlow& eta, double eps, const Mollifier& kernel);

/// Per-frame transition matrices (row-stochastic) that carry the flow's
/// density onto the target: deposition through Psi followed by an exact
/// transport correction.
struct Straightening {
  GeneralizedFlow flow;
  StraighteningMap map;
  double correction_cost = 0.0;  ///< squared W2 of the correction step, summed over frames
};

class DensityBoundViolation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

Straightening t3_straighten(const GeneralizedFlow& eta, const DensityPath& target, const FlowMapOptions& opt = {});

struct SurgeryBudget {
  double estim1 = 0.0;
  double estim2 = 0.0;
  double estim3 = 0.0;
  double total = 0.0;
};

struct SurgeryOptions {
  double smallness_constant = 1.0;
  std::uint64_t budget = 1'000'000;
  FlowMapOptions flow_map;
};

struct SurgeryReport {
  GeneralizedFlow flow;
  SurgeryBudget budget;
  double base_action = 0.0;  ///< A(mu, rho)
  double certified_action = 0.0;
  double d_mk = 0.0;
  double rho_lower_bound = 0.0;
  double n_rho_eps = 0.0;
  double smallness_lhs = 0.0;  ///< C (1 + N(rho^eps)) d_MK / eps^(d+2)
  bool smallness_ok = false;
  double t1_continuous_action = 0.0;
  double t1_sqrt_bound = 0.0;
  double snap_error = 0.0;  ///< snapped minus continuous T1 action
  double norm_excess = 0.0; ///< N(Psi - Id)
  AdmissibilityReport admissibility;
  DensityPath target;
};

class SurgeryError : public std::runtime_error {
 public:
  SurgeryError(const std::string& stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

SurgeryReport surgery_pipeline(const BistochasticMeasure& mu, const BistochasticMeasure& nu, const DensityPath& rho,
                               double eps, const SurgeryOptions& opt = {});

nlohmann::json to_json(const SurgeryReport& r);

}  // namespace gflow
