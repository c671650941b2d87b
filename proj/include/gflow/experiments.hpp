#pragma once

// Empirical studies: Hoelder envelopes of the optimal action and of the
// pressure pairing in the endpoint coupling, the labeled-model counterexample
// series and the diameter of the action over random couplings.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "gflow/brenier.hpp"
#include "gflow/extended.hpp"
#include "gflow/stats.hpp"
#include "gflow/surgery.hpp"

namespace gflow {

struct ExperimentConfig {
  int dim = 1;
  int n = 4;
  int steps = 2;
  int samples = 20;
  std::uint64_t seed = 0;
  std::string solver = "exact";  ///< exact | entropic
  double reg = 0.05;             ///< fixed reg of the entropic pressure selection
  std::vector<double> reg_schedule{0.2, 0.1, 0.05, 0.025};
  double heat = 0.3;  ///< temperature of the random base couplings
  double blend_min = 1e-3;
  double blend_max = 0.5;
  double heat_min = 1e-3;  ///< diameter sample: heats log-uniform in [heat_min, heat_max]
  double heat_max = 1.0;
  double tau = 0.25;
  int test_fields = 20;
  std::vector<double> eps_schedule{0.25, 0.125};
  std::vector<double> delta_schedule{0.2, 0.1, 0.05};
  bool diagnostics = true;
  int m = 32;
  std::vector<int> n_list{1, 2, 4, 8};
  std::uint64_t budget = 1'000'000;
  int threads = 0;  ///< 0: hardware concurrency

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Stable 64-bit FNV-1a hash of the compact JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

/// Deterministic per-instance seed from (base seed, stream, index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

/// Runs fn(0..count-1) on a pool of threads; results are stored by index so the
/// output does not depend on scheduling. The first exception (by index) is rethrown.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

// ---- instance builders --------------------------------------------------

/// {"kind": "identity" | "shift" | "product" | "random" | "inline", ...}
BistochasticMeasure coupling_from_spec(const TorusGrid& grid, const nlohmann::json& spec);
/// {"kind": "uniform" | "wavy" | "inline", ...} on the given time grid.
DensityPath density_from_spec(const TorusGrid& grid, const std::vector<double>& times, const nlohmann::json& spec);

/// Random smooth vector field vanishing for t <= tau and t >= 1 - tau,
/// normalized to N(xi) = 1.
FieldPath random_test_field(const TorusGrid& grid, const std::vector<double>& times, double tau, std::mt19937_64& rng);
/// Centered-difference divergence; every frame has zero mean.
FieldPath divergence(const FieldPath& xi);
/// Density of the push-forward of Lebesgue by x -> x + delta xi(t, x), by
/// cloud-in-cell deposition.
DensityPath push_density(const FieldPath& xi, double delta);
/// T_delta: every path point moved to x + delta xi(t, x) and split by
/// cloud-in-cell weights. Endpoints stay put when xi vanishes there.
GeneralizedFlow perturb_flow(const GeneralizedFlow& eta, const FieldPath& xi, double delta);

// ---- action envelope ----------------------------------------------------

struct ActionHolderRow {
  int index = 0;
  std::uint64_t mu_seed = 0;
  std::uint64_t zeta_seed = 0;
  double blend = 0.0;
  double dmk = 0.0;
  double action_mu = 0.0;
  double action_nu = 0.0;
  double delta_action = 0.0;  ///< |A(nu) - A(mu)|
  double ratio = 0.0;         ///< delta_action / dmk^(1/(d+3))
};

struct ActionHolderReport {
  double exponent = 0.0;
  std::vector<ActionHolderRow> rows;
  double envelope = 0.0;
  double envelope_half = 0.0;  ///< over the first half of the sample
  stats::LinearFit slope;      ///< log |dA| against log d_MK
  bool slope_ok = false;       ///< slope >= exponent - 0.1
  stats::KendallResult trend;  ///< ratio against -d_MK: positive means growth as d_MK -> 0
  bool bounded = false;        ///< no significant positive trend at 5%
};

ActionHolderReport run_action_holder(const ExperimentConfig& cfg);

// ---- pressure envelope --------------------------------------------------

struct PressureHolderRow {
  int index = 0;
  std::uint64_t mu_seed = 0;
  std::uint64_t zeta_seed = 0;
  double blend = 0.0;
  double dmk = 0.0;
  double gap = 0.0;     ///< sup over test fields of |<p_nu - p_mu, div xi>|, entropic pressure
  double gap_lp = 0.0;  ///< same with the LP dual pressure
  int worst_field = 0;
  double ratio = 0.0;   ///< gap / dmk^(1/(2 + 2(d+1)(d+2)))
  double entropic_residual = 0.0;  ///< worse of the two entropic marginal residuals
};

struct PerturbationRow {
  double delta = 0.0;
  double action_rho_delta = 0.0;  ///< A(mu, rho_delta)
  double action_perturbed = 0.0;  ///< A(T_delta eta_mu)
  /// A(mu, rho_delta) - A(mu, lambda) - <p_mu, rho_delta - 1>, LP pressure
  double defect = 0.0;
  double defect_over_delta2 = 0.0;
  /// first-order term: <p_mu, rho_delta - 1> + delta <p_mu, div xi>
  double linearization_error = 0.0;
};

struct MultiplierRow {
  double delta = 0.0;
  double eps = 0.0;
  double action_nu = 0.0;      ///< A(nu, lambda)
  double action_nu_reg = 0.0;  ///< A(nu, rho_delta^eps)
  double gap_lp = 0.0;         ///< A(nu, rho^eps) - A(nu, lambda) - <p_nu, rho^eps - 1>, LP pressure
  double gap_entropic = 0.0;   ///< same with the entropic pressure
};

struct SurgeryRow {
  double delta = 0.0;
  double eps = 0.0;
  double dmk = 0.0;
  double certified = 0.0;
  double exact = 0.0;  ///< A(nu, rho_delta^eps) on the surgery lattice
  double excess = 0.0;
  double scale = 0.0;  ///< eps + d_MK / eps^((d+1)(d+2))
  bool admissible = false;
};

struct PressureDiagnostics {
  int pair = 0;
  int field = 0;
  std::vector<PerturbationRow> perturbation;
  double perturbation_constant = 0.0;  ///< max defect / delta^2
  std::vector<MultiplierRow> multiplier;
  std::vector<SurgeryRow> surgery;
};

struct PressureHolderReport {
  double exponent = 0.0;
  std::vector<PressureHolderRow> rows;
  double envelope = 0.0;
  double envelope_half = 0.0;
  double envelope_lp = 0.0;
  stats::KendallResult trend;
  bool bounded = false;
  std::vector<PressureDiagnostics> diagnostics;
};

PressureHolderReport run_pressure_holder(const ExperimentConfig& cfg);

// ---- counterexample and diameter -----------------------------------------

struct CounterexampleReport {
  DiscontinuityReport series;
  bool headline = false;  ///< every n >= 2 row at least (1/16)(1 - 1/n)^2 - 2/m and distances strictly decreasing
};

CounterexampleReport run_counterexample(const ExperimentConfig& cfg);

struct DiameterRow {
  int index = 0;
  std::string kind;  ///< identity | shift | random
  std::uint64_t seed = 0;
  double heat = 0.0;
  double action = 0.0;
};

struct DiameterReport {
  std::vector<DiameterRow> rows;  ///< 2 * samples random couplings plus the identity and half shift
  double max_half = 0.0;          ///< max over the identity, the shift and the first `samples` random rows
  double max = 0.0;
  double mean = 0.0;
  double min = 0.0;
  double relative_change = 0.0;  ///< (max - max_half) / max_half
  bool stable = false;           ///< relative_change < 0.1
};

DiameterReport run_diameter(const ExperimentConfig& cfg);

// ---- serialization ----------------------------------------------------

nlohmann::json to_json(const ActionHolderReport& r);
nlohmann::json to_json(const PressureHolderReport& r);
nlohmann::json to_json(const CounterexampleReport& r);
nlohmann::json to_json(const DiameterReport& r);

void write_csv(std::ostream& os, const ActionHolderReport& r);
void write_csv(std::ostream& os, const PressureHolderReport& r);
void write_csv(std::ostream& os, const DiameterReport& r);

}  // namespace gflow
