#include "gflow/surgery.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "gflow/transport.hpp"

namespace gflow {

namespace {

using PathMap = std::map<Path, double>;

GeneralizedFlow from_map(const PathLattice& lat, const PathMap& m) {
  ExplicitFlow f;
  f.paths.reserve(m.size());
  for (const auto& [w, mass] : m)
    if (mass > 0.0) f.paths.push_back({w, mass});
  return {lat, f};
}

// minimal-image cell offset from a to b, each axis in [-n/2, n/2)
std::array<int, 2> cell_offset(const TorusGrid& g, int a, int b) {
  const auto ca = g.coords(a);
  const auto cb = g.coords(b);
  const int n = g.n();
  std::array<int, 2> o{0, 0};
  for (int i = 0; i < g.dim(); ++i) {
    int k = ((cb[i] - ca[i]) % n + n) % n;
    if (2 * k >= n) k -= n;
    o[i] = k;
  }
  return o;
}

}  // namespace

T1Result t1_recondition(const GeneralizedFlow& eta_in, const TransportPlan4& plan, double tol) {
  const GeneralizedFlow eta = materialize(eta_in);
  const PathLattice& lat = eta.lattice;
  const TorusGrid& g = lat.grid();
  if (plan.source.grid != g) throw DimensionMismatch("t1_recondition: grid mismatch");
  if ((endpoint_coupling(eta) - plan.source.mass).cwiseAbs().maxCoeff() > tol)
    throw std::invalid_argument("t1_recondition: plan source does not match the flow's endpoint coupling");
  const int N = g.cell_count();
  const int K = lat.steps();
  const double h = g.spacing();

  std::vector<std::vector<const PlanEntry*>> by_pair(static_cast<std::size_t>(N) * N);
  for (const auto& e : plan.entries) by_pair[static_cast<std::size_t>(e.x) * N + e.y].push_back(&e);

  T1Result r{{lat, ExplicitFlow{}}, 0.0, 0.0, 0.0};
  PathMap out;
  for (const auto& wp : eta.explicit_paths().paths) {
    const int x = wp.cells.front(), y = wp.cells.back();
    const double mu_xy = plan.source.mass(x, y);
    for (const PlanEntry* e : by_pair[static_cast<std::size_t>(x) * N + y]) {
      const double m = wp.mass * e->mass / mu_xy;
      const auto a = cell_offset(g, x, e->X);
      const auto b = cell_offset(g, y, e->Y);
      Path w(K + 1);
      for (int k = 0; k <= K; ++k) {
        const double t = lat.times()[k];
        std::array<int, 2> s{0, 0};
        for (int i = 0; i < g.dim(); ++i) s[i] = static_cast<int>(std::lround((1.0 - t) * a[i] + t * b[i]));
        w[k] = g.shifted(wp.cells[k], s);
      }
      double cont = 0.0;
      for (int k = 0; k < K; ++k) {
        const auto d = cell_offset(g, wp.cells[k], wp.cells[k + 1]);
        double len2 = 0.0;
        for (int i = 0; i < g.dim(); ++i) {
          const double step = (d[i] + (b[i] - a[i]) * lat.dt(k)) * h;
          len2 += step * step;
        }
        cont += len2 / (2.0 * lat.dt(k));
      }
      r.continuous_action += m * cont;
      out[w] += m;
    }
  }
  r.flow = from_map(lat, out);
  r.snapped_action = flow_action(r.flow);
  r.sqrt_bound = std::sqrt(flow_action(eta)) + std::sqrt(plan.cost());
  return r;
}

std::vector<double> diffused_times(const std::vector<double>& times, double eps) {
  if (!(eps > 0.0 && eps <= 0.25)) throw std::invalid_argument("diffused_times: eps must lie in (0, 1/4]");
  std::vector<double> t{0.0};
  for (double s : times) t.push_back(eps + (1.0 - 2.0 * eps) * s);
  t.push_back(1.0);
  return t;
}

GeneralizedFlow t2_diffuse(const GeneralizedFlow& eta_in, double eps, const Mollifier& kernel) {
  const GeneralizedFlow eta = materialize(eta_in);
  const TorusGrid& g = eta.lattice.grid();
  if (kernel.grid() != g) throw DimensionMismatch("t2_diffuse: kernel grid mismatch");
  const PathLattice lat(g, diffused_times(eta.lattice.times(), eps));
  const int K = eta.lattice.steps();
  PathMap out;
  for (const auto& wp : eta.explicit_paths().paths) {
    for (const auto& tap : kernel.taps()) {
      Path w(K + 3);
      w.front() = wp.cells.front();
      w.back() = wp.cells.back();
      for (int k = 0; k <= K; ++k) w[k + 1] = g.shifted(wp.cells[k], tap.offset);
      out[w] += wp.mass * tap.weight;
    }
  }
  return from_map(lat, out);
}

namespace {

// row-stochastic transition carrying mass q (per cell) onto `want` through Psi
Eigen::MatrixXd straightening_transition(const TorusGrid& g, const StraighteningMap& map, int frame,
                                         const Eigen::VectorXd& q, const Eigen::VectorXd& want, double& cost) {
  const int N = g.cell_count();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(N, N);
  for (int z = 0; z < N; ++z) {
    const Deposit d = cic_deposit(g, map.image(frame, z));
    for (int i = 0; i < d.count; ++i) D(z, d.cells[i]) += d.weights[i];
  }
  const Eigen::VectorXd moved = D.transpose() * q;
  // exact correction: optimal transport from the deposited masses to the target
  std::vector<int> src, dst;
  for (int z = 0; z < N; ++z) {
    if (moved[z] > 0.0) src.push_back(z);
    if (want[z] > 0.0) dst.push_back(z);
  }
  Eigen::VectorXd sa(src.size()), sb(dst.size());
  for (std::size_t a = 0; a < src.size(); ++a) sa[a] = moved[src[a]];
  // the target is rescaled to the deposited total so the problem is balanced exactly
  for (std::size_t b = 0; b < dst.size(); ++b) sb[b] = want[dst[b]] * (moved.sum() / want.sum());
  const auto sol = solve_transport(sa, sb, [&](int a, int b) { return cell_dist2(g, src[a], dst[b]); });
  cost += sol.cost;
  Eigen::MatrixXd E = Eigen::MatrixXd::Identity(N, N);
  for (int z : src) E.row(z).setZero();
  for (const auto& f : sol.flows) E(src[f.source], dst[f.target]) += f.mass / moved[src[f.source]];
  return D * E;
}

}  // namespace

Straightening t3_straighten(const GeneralizedFlow& eta_in, const DensityPath& target, const FlowMapOptions& opt) {
  const GeneralizedFlow eta = materialize(eta_in);
  const PathLattice& lat = eta.lattice;
  const TorusGrid& g = lat.grid();
  if (target.grid != g || target.times != lat.times()) throw DimensionMismatch("t3_straighten: target lattice mismatch");
  const int K = lat.steps();
  const DensityPath Q = density_of_flow(eta);
  if (Q.min_value() < 0.5 || target.min_value() < 0.5)
    throw DensityBoundViolation("t3_straighten: densities must be at least 1/2");

  // endpoints never move; frames already on target are left alone
  DensityPath goal = target;
  std::vector<bool> moving(K + 1, false);
  for (int k = 0; k <= K; ++k) {
    moving[k] = k > 0 && k < K && (Q.frames[k] - target.frames[k]).cwiseAbs().maxCoeff() > 1e-14;
    if (!moving[k]) goal.frames[k] = Q.frames[k];
  }
  Straightening r{eta, StraighteningMap::identity(g, lat.times()), 0.0};
  bool any = false;
  for (int k = 0; k <= K; ++k) any = any || moving[k];
  if (!any) return r;
  r.map = flow_map(Q, goal, opt);

  const double h = g.cell_volume();
  PathMap cur;
  for (const auto& wp : eta.explicit_paths().paths) cur[wp.cells] += wp.mass;
  for (int k = 1; k < K; ++k) {
    if (!moving[k]) continue;
    const Eigen::MatrixXd M =
        straightening_transition(g, r.map, k, Q.frames[k] * h, target.frames[k] * h, r.correction_cost);
    PathMap next;
    for (const auto& [w, mass] : cur) {
      for (int z = 0; z < g.cell_count(); ++z) {
        const double p = M(w[k], z);
        if (p <= 0.0) continue;
        Path v = w;
        v[k] = z;
        next[v] += mass * p;
      }
    }
    cur.swap(next);
  }
  r.flow = from_map(lat, cur);
  return r;
}

SurgeryReport surgery_pipeline(const BistochasticMeasure& mu, const BistochasticMeasure& nu, const DensityPath& rho,
                               double eps, const SurgeryOptions& opt) {
  SurgeryReport rep;
  rep.rho_lower_bound = rho.min_value();
  if (rep.rho_lower_bound < 0.75) throw SurgeryError("precondition", "rho must be at least 3/4");
  if (!(eps > 0.0 && eps <= 0.25)) throw SurgeryError("precondition", "eps must lie in (0, 1/4]");

  ExactSolution base;
  try {
    base = solve_exact(mu, rho, opt.budget);
  } catch (const std::exception& e) {
    throw SurgeryError("solve", e.what());
  }
  MKResult mk;
  try {
    mk = mk_distance(mu, nu);
  } catch (const std::exception& e) {
    throw SurgeryError("plan", e.what());
  }
  T1Result t1;
  try {
    t1 = t1_recondition(base.flow, mk.plan);
  } catch (const std::exception& e) {
    throw SurgeryError("t1", e.what());
  }
  GeneralizedFlow t2;
  try {
    t2 = t2_diffuse(t1.flow, eps, Mollifier(rho.grid, eps));
  } catch (const std::exception& e) {
    throw SurgeryError("t2", e.what());
  }
  rep.target = regularize_density(rho, eps, t2.lattice.times());
  Straightening t3;
  try {
    t3 = t3_straighten(t2, rep.target, opt.flow_map);
  } catch (const std::exception& e) {
    throw SurgeryError("t3", e.what());
  }

  const double a0 = base.action;
  const double a1 = t1.snapped_action;
  const double a2 = flow_action(t2);
  const double a3 = flow_action(t3.flow);
  rep.flow = t3.flow;
  rep.budget = {a1 - a0, a2 - a1, a3 - a2, a3 - a0};
  rep.base_action = a0;
  rep.certified_action = a3;
  rep.d_mk = mk.distance;
  rep.n_rho_eps = e_norm(rep.target);
  rep.smallness_lhs =
      opt.smallness_constant * (1.0 + rep.n_rho_eps) * rep.d_mk / std::pow(eps, rho.grid.dim() + 2);
  rep.smallness_ok = rep.smallness_lhs <= 0.25;
  rep.t1_continuous_action = t1.continuous_action;
  rep.t1_sqrt_bound = t1.sqrt_bound;
  rep.snap_error = t1.snapped_action - t1.continuous_action;
  rep.norm_excess = t3.map.norm_excess;
  rep.admissibility = verify_admissible(rep.flow, nu, rep.target, 1e-6);
  return rep;
}

nlohmann::json to_json(const SurgeryReport& r) {
  nlohmann::json j;
  j["budget"] = {{"estim1", r.budget.estim1},
                 {"estim2", r.budget.estim2},
                 {"estim3", r.budget.estim3},
                 {"total", r.budget.total}};
  j["conditions"] = {{"rho_lower_bound", r.rho_lower_bound},
                     {"smallness_lhs", r.smallness_lhs},
                     {"smallness_ok", r.smallness_ok},
                     {"sqrt_base_action", std::sqrt(r.base_action)}};
  j["certified_action"] = r.certified_action;
  j["base_action"] = r.base_action;
  j["d_mk"] = r.d_mk;
  j["n_rho_eps"] = r.n_rho_eps;
  j["norm_excess"] = r.norm_excess;
  j["t1"] = {{"continuous_action", r.t1_continuous_action},
             {"sqrt_bound", r.t1_sqrt_bound},
             {"snap_error", r.snap_error}};
  j["residuals"] = {{"endpoint", r.admissibility.endpoint_residual},
                    {"marginals", r.admissibility.marginal_residuals},
                    {"max", r.admissibility.max_residual},
                    {"admissible", r.admissibility.admissible}};
  return j;
}

}  // namespace gflow
