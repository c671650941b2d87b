#include "gflow/brenier.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "gflow/simplex.hpp"

namespace gflow {

PathLattice::PathLattice(const TorusGrid& grid, std::vector<double> times)
    : grid_(grid), times_(std::move(times)), dist2_(cell_dist2_matrix(grid)) {
  if (!is_increasing_unit_grid(times_)) throw std::invalid_argument("PathLattice: times must increase from 0 to 1");
}

bool PathLattice::uniform() const {
  const double h = 1.0 / steps();
  for (int k = 0; k < steps(); ++k)
    if (std::abs(dt(k) - h) > 1e-12) return false;
  return true;
}

double PathLattice::path_action(const Path& w) const {
  if (static_cast<int>(w.size()) != steps() + 1) throw DimensionMismatch("path_action: path length");
  double a = 0.0;
  for (int k = 0; k < steps(); ++k) a += dist2_(w[k], w[k + 1]) / (2.0 * dt(k));
  return a;
}

std::optional<std::uint64_t> PathLattice::path_count() const {
  const std::uint64_t N = grid_.cell_count();
  std::uint64_t c = 1;
  for (int k = 0; k <= steps(); ++k) {
    if (c > std::numeric_limits<std::uint64_t>::max() / N) return std::nullopt;
    c *= N;
  }
  return c;
}

Path PathLattice::path_at(std::uint64_t index) const {
  const int N = grid_.cell_count();
  Path w(steps() + 1);
  for (int k = steps(); k >= 0; --k) {
    w[k] = static_cast<int>(index % N);
    index /= N;
  }
  return w;
}

namespace {

void check_budget(const PathLattice& lat, std::uint64_t budget) {
  const auto c = lat.path_count();
  if (!c || *c > budget)
    throw BudgetExceeded("path enumeration exceeds budget (" + std::to_string(budget) + " paths)");
}

// advances w as a base-N odometer with time 0 most significant; false on wrap
bool next_path(Path& w, int N) {
  for (int k = static_cast<int>(w.size()) - 1; k >= 0; --k) {
    if (++w[k] < N) return true;
    w[k] = 0;
  }
  return false;
}

// Chain contractions. F[k] (k = 0..K-1): mass of reaching w_k = z from w_0 = x0
// including b_1..b_k. B[k] (k = 0..K-1): mass from w_k = z to w_K excluding b_k.
struct ChainOps {
  const PathLattice& lat;
  const ChainFlow& c;
  int K;
  std::vector<Eigen::MatrixXd> F, B;

  ChainOps(const PathLattice& l, const ChainFlow& cf) : lat(l), c(cf), K(l.steps()) {
    if (static_cast<int>(c.kernel.size()) != K || static_cast<int>(c.scale.size()) != K - 1)
      throw DimensionMismatch("ChainFlow: factor count does not match lattice");
    forward();
    backward();
  }

  void forward() {
    const int N = lat.grid().cell_count();
    F.assign(K, Eigen::MatrixXd());
    F[0] = Eigen::MatrixXd::Identity(N, N);
    for (int k = 1; k < K; ++k) F[k] = (F[k - 1] * c.kernel[k - 1]) * c.scale[k - 1].asDiagonal();
  }

  void backward() {
    B.assign(K, Eigen::MatrixXd());
    B[K - 1] = c.kernel[K - 1];
    for (int k = K - 2; k >= 0; --k) B[k] = c.kernel[k] * c.scale[k].asDiagonal() * B[k + 1];
  }

  Eigen::MatrixXd joint() const { return c.endpoint.cwiseProduct(B[0]); }

  // interior marginal mass at time k (1 <= k <= K-1)
  Eigen::VectorXd marginal(int k) const {
    const Eigen::MatrixXd L = F[k - 1] * c.kernel[k - 1];
    const Eigen::MatrixXd M = c.endpoint * B[k].transpose();
    return c.scale[k - 1].cwiseProduct(L.cwiseProduct(M).colwise().sum().transpose());
  }

  // joint law of (w_{k-1}, w_k), k = 1..K
  Eigen::MatrixXd pair(int k) const {
    Eigen::MatrixXd M = k < K ? Eigen::MatrixXd((c.endpoint * B[k].transpose()) * c.scale[k - 1].asDiagonal())
                              : c.endpoint;
    return c.kernel[k - 1].cwiseProduct(F[k - 1].transpose() * M);
  }
};

void check_same(const TorusGrid& a, const TorusGrid& b, const char* what) {
  if (a != b) throw DimensionMismatch(std::string(what) + ": grid mismatch");
}

}  // namespace

double total_mass(const GeneralizedFlow& eta) { return endpoint_coupling(eta).sum(); }

double flow_action(const GeneralizedFlow& eta) {
  if (eta.is_explicit()) {
    double a = 0.0;
    for (const auto& p : eta.explicit_paths().paths) a += p.mass * eta.lattice.path_action(p.cells);
    return a;
  }
  const ChainOps ops(eta.lattice, std::get<ChainFlow>(eta.rep));
  double a = 0.0;
  for (int k = 1; k <= eta.lattice.steps(); ++k) a += ops.pair(k).cwiseProduct(eta.lattice.step_cost(k - 1)).sum();
  return a;
}

Eigen::MatrixXd endpoint_coupling(const GeneralizedFlow& eta) {
  const int N = eta.lattice.grid().cell_count();
  if (eta.is_explicit()) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(N, N);
    for (const auto& p : eta.explicit_paths().paths) J(p.cells.front(), p.cells.back()) += p.mass;
    return J;
  }
  return ChainOps(eta.lattice, std::get<ChainFlow>(eta.rep)).joint();
}

std::vector<Eigen::VectorXd> time_marginal_masses(const GeneralizedFlow& eta) {
  const int N = eta.lattice.grid().cell_count();
  const int K = eta.lattice.steps();
  std::vector<Eigen::VectorXd> m(K + 1, Eigen::VectorXd::Zero(N));
  if (eta.is_explicit()) {
    for (const auto& p : eta.explicit_paths().paths)
      for (int k = 0; k <= K; ++k) m[k][p.cells[k]] += p.mass;
    return m;
  }
  const ChainOps ops(eta.lattice, std::get<ChainFlow>(eta.rep));
  const Eigen::MatrixXd J = ops.joint();
  m[0] = J.rowwise().sum();
  m[K] = J.colwise().sum().transpose();
  for (int k = 1; k < K; ++k) m[k] = ops.marginal(k);
  return m;
}

DensityPath density_of_flow(const GeneralizedFlow& eta) {
  const auto m = time_marginal_masses(eta);
  DensityPath d{eta.lattice.grid(), eta.lattice.times(), {}};
  for (const auto& v : m) d.frames.push_back(v / eta.lattice.grid().cell_volume());
  return d;
}

GeneralizedFlow materialize(const GeneralizedFlow& eta, std::uint64_t budget) {
  if (eta.is_explicit()) return eta;
  check_budget(eta.lattice, budget);
  const auto& c = std::get<ChainFlow>(eta.rep);
  const int N = eta.lattice.grid().cell_count();
  const int K = eta.lattice.steps();
  ExplicitFlow out;
  Path w(K + 1, 0);
  do {
    double m = c.endpoint(w[0], w[K]);
    for (int k = 1; k <= K && m > 0.0; ++k) {
      m *= c.kernel[k - 1](w[k - 1], w[k]);
      if (k < K) m *= c.scale[k - 1][w[k]];
    }
    if (m > 0.0) out.paths.push_back({w, m});
  } while (next_path(w, N));
  return {eta.lattice, out};
}

GeneralizedFlow product_flow(const BistochasticMeasure& gamma, const DensityPath& rho, std::uint64_t budget) {
  check_same(gamma.grid, rho.grid, "product_flow");
  const PathLattice lat(rho.grid, rho.times);
  check_budget(lat, budget);
  const int N = lat.grid().cell_count();
  const int K = lat.steps();
  const double h = lat.grid().cell_volume();
  ExplicitFlow out;
  Path w(K + 1, 0);
  do {
    double m = gamma.mass(w[0], w[K]);
    for (int k = 1; k < K && m > 0.0; ++k) m *= rho.frames[k][w[k]] * h;
    if (m > 0.0) out.paths.push_back({w, m});
  } while (next_path(w, N));
  return {lat, out};
}

AdmissibilityReport verify_admissible(const GeneralizedFlow& eta, const BistochasticMeasure& gamma,
                                      const DensityPath& rho, double tol) {
  check_same(eta.lattice.grid(), gamma.grid, "verify_admissible");
  check_same(eta.lattice.grid(), rho.grid, "verify_admissible");
  if (rho.times != eta.lattice.times()) throw DimensionMismatch("verify_admissible: time grids differ");
  AdmissibilityReport r;
  r.endpoint_residual = (endpoint_coupling(eta) - gamma.mass).cwiseAbs().sum();
  const auto m = time_marginal_masses(eta);
  const double h = rho.grid.cell_volume();
  r.max_residual = r.endpoint_residual;
  for (std::size_t k = 0; k < m.size(); ++k) {
    r.marginal_residuals.push_back((m[k] - rho.frames[k] * h).cwiseAbs().sum());
    r.max_residual = std::max(r.max_residual, r.marginal_residuals.back());
  }
  r.admissible = r.max_residual <= tol;
  return r;
}

double PressureField::max_abs_mean() const {
  double m = 0.0;
  for (const auto& f : frames) m = std::max(m, std::abs(f.mean()));
  return m;
}

double extract_pressure_pairing(const PressureField& p, const std::vector<Field>& r) {
  if (r.size() != p.frames.size()) throw DimensionMismatch("pressure pairing: frame count mismatch");
  const double h = p.grid.cell_volume();
  double s = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (r[k].size() != p.frames[k].size()) throw DimensionMismatch("pressure pairing: frame size mismatch");
    const double scale = std::max(1.0, r[k].cwiseAbs().maxCoeff());
    if (std::abs(r[k].mean()) > 1e-9 * scale) throw std::invalid_argument("pressure pairing: r frame has nonzero mean");
    s += p.weights[k] * p.frames[k].dot(r[k]) * h;
  }
  return s;
}

double extract_pressure_pairing(const PressureField& p, const FieldPath& r) {
  if (r.components != 1) throw std::invalid_argument("pressure pairing: scalar r expected");
  if (r.frames.size() != p.frames.size() + 2) throw DimensionMismatch("pressure pairing: time grid mismatch");
  for (std::size_t k = 0; k < p.times.size(); ++k)
    if (std::abs(r.times[k + 1] - p.times[k]) > 1e-12) throw DimensionMismatch("pressure pairing: time grid mismatch");
  return extract_pressure_pairing(p, std::vector<Field>(r.frames.begin() + 1, r.frames.end() - 1));
}

namespace {

// min over lattice paths from i to j of A(w) - sum_k pot_k(w_k)
Eigen::MatrixXd min_path_values(const PathLattice& lat, const std::vector<Eigen::VectorXd>& pot) {
  const int N = lat.grid().cell_count();
  const int K = lat.steps();
  Eigen::MatrixXd out(N, N);
  std::vector<Eigen::MatrixXd> cost;
  for (int k = 0; k < K; ++k) cost.push_back(lat.step_cost(k));
  for (int x0 = 0; x0 < N; ++x0) {
    Eigen::VectorXd v = cost[0].row(x0).transpose();
    for (int k = 1; k < K; ++k) {
      v -= pot[k - 1];
      Eigen::VectorXd nv(N);
      for (int z = 0; z < N; ++z) nv[z] = (v + cost[k].col(z)).minCoeff();
      v = nv;
    }
    out.row(x0) = v.transpose();
  }
  return out;
}

std::vector<Eigen::VectorXd> weighted_pressure(const PressureField& p) {
  std::vector<Eigen::VectorXd> pot;
  for (std::size_t k = 0; k < p.frames.size(); ++k) pot.push_back(p.weights[k] * p.frames[k]);
  return pot;
}

// shifts each frame to zero mean and moves the constants into phi
void gauge_fix(PressureField& p, Eigen::MatrixXd& phi) {
  double moved = 0.0;
  for (std::size_t k = 0; k < p.frames.size(); ++k) {
    const double c = p.frames[k].mean();
    p.frames[k].array() -= c;
    moved += c * p.weights[k];
  }
  phi.array() += moved;
}

PressureField empty_pressure(const PathLattice& lat) {
  PressureField p{lat.grid(), {}, {}, {}};
  for (int k = 1; k < lat.steps(); ++k) {
    p.times.push_back(lat.times()[k]);
    p.weights.push_back(lat.weight(k));
  }
  return p;
}

}  // namespace

ExactSolution solve_exact(const BistochasticMeasure& gamma, const PathLattice& lattice, std::uint64_t budget) {
  return solve_exact(gamma, DensityPath::uniform(lattice.grid(), lattice.times()), budget);
}

ExactSolution solve_exact(const BistochasticMeasure& gamma, const DensityPath& rho, std::uint64_t budget) {
  check_same(gamma.grid, rho.grid, "solve_exact");
  gamma.validate();
  rho.validate();
  const PathLattice lat(rho.grid, rho.times);
  check_budget(lat, budget);
  const int N = lat.grid().cell_count();
  const int K = lat.steps();
  const double h = lat.grid().cell_volume();

  Eigen::MatrixXi pair_row = Eigen::MatrixXi::Constant(N, N, -1);
  int S = 0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      if (gamma.mass(i, j) > 0.0) pair_row(i, j) = S++;
  lp::LinearProgram prog(S + (K - 1) * N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      if (pair_row(i, j) >= 0) prog.set_rhs(pair_row(i, j), gamma.mass(i, j));
  for (int k = 1; k < K; ++k)
    for (int z = 0; z < N; ++z) prog.set_rhs(S + (k - 1) * N + z, rho.frames[k][z] * h);

  std::vector<Path> columns;
  Path w(K + 1, 0);
  std::vector<lp::Entry> entries(K);
  do {
    const int r = pair_row(w[0], w[K]);
    if (r < 0) continue;
    entries[0] = {r, 1.0};
    for (int k = 1; k < K; ++k) entries[k] = {S + (k - 1) * N + w[k], 1.0};
    prog.add_column(lat.path_action(w), entries);
    columns.push_back(w);
  } while (next_path(w, N));

  const lp::Solution sol = lp::solve(prog);
  if (sol.status != lp::Status::Optimal)
    throw std::runtime_error("solve_exact: LP not solved (" + lp::to_string(sol.status) + ")");

  ExactSolution out{sol.objective, sol.dual_objective, {lat, ExplicitFlow{}}, empty_pressure(lat),
                    Eigen::MatrixXd::Zero(N, N), gamma, rho, sol.iterations, sol.primal_residual,
                    sol.min_reduced_cost};
  auto& paths = std::get<ExplicitFlow>(out.flow.rep).paths;
  for (std::size_t c = 0; c < columns.size(); ++c)
    if (sol.x[c] > 0.0) paths.push_back({columns[c], sol.x[c]});

  for (int k = 1; k < K; ++k)
    out.pressure.frames.push_back(sol.duals.segment(S + (k - 1) * N, N) / lat.weight(k));
  const Eigen::MatrixXd mins = min_path_values(lat, weighted_pressure(out.pressure));
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) out.endpoint_duals(i, j) = pair_row(i, j) >= 0 ? sol.duals[pair_row(i, j)] : mins(i, j);
  gauge_fix(out.pressure, out.endpoint_duals);
  return out;
}

EntropicSolution solve_entropic(const BistochasticMeasure& gamma, const DensityPath& rho, double reg, int max_iter,
                                double tol) {
  if (!(reg > 0.0)) throw std::invalid_argument("solve_entropic: reg must be positive");
  check_same(gamma.grid, rho.grid, "solve_entropic");
  gamma.validate();
  rho.validate();
  const PathLattice lat(rho.grid, rho.times);
  const int N = lat.grid().cell_count();
  const int K = lat.steps();
  const double h = lat.grid().cell_volume();

  ChainFlow c;
  c.endpoint = gamma.mass;
  for (int k = 0; k < K; ++k) c.kernel.push_back((-lat.step_cost(k).array() / reg).exp().matrix());
  for (int k = 1; k < K; ++k) c.scale.push_back(Eigen::VectorXd::Ones(N));
  std::vector<Eigen::VectorXd> target;
  for (int k = 1; k < K; ++k) target.push_back(rho.frames[k] * h);

  auto ratio = [](const Eigen::VectorXd& want, const Eigen::VectorXd& have) {
    Eigen::VectorXd r(want.size());
    for (Eigen::Index i = 0; i < want.size(); ++i) r[i] = want[i] > 0.0 ? want[i] / have[i] : 0.0;
    return r;
  };

  ChainOps ops(lat, c);
  EntropicStats stats;
  for (int it = 1; it <= max_iter; ++it) {
    for (int k = 1; k < K; ++k) {
      const Eigen::VectorXd m = ops.marginal(k);
      c.scale[k - 1] = c.scale[k - 1].cwiseProduct(ratio(target[k - 1], m));
      ops.F[k] = (ops.F[k - 1] * c.kernel[k - 1]) * c.scale[k - 1].asDiagonal();
    }
    ops.backward();
    const Eigen::MatrixXd reach = ops.B[0];
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) c.endpoint(i, j) = gamma.mass(i, j) > 0.0 ? gamma.mass(i, j) / reach(i, j) : 0.0;
    stats.iterations = it;
    if (it % 5 == 0 || it == max_iter || K == 1) {
      double res = 0.0;
      for (int k = 1; k < K; ++k) res = std::max(res, (ops.marginal(k) - target[k - 1]).cwiseAbs().sum());
      stats.residual = res;
      if (res < tol) {
        stats.converged = true;
        break;
      }
    }
  }

  EntropicSolution out{0.0, 0.0, {lat, c}, empty_pressure(lat), Eigen::MatrixXd::Zero(N, N), stats};
  out.action = flow_action(out.flow);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      if (gamma.mass(i, j) > 0.0) {
        out.endpoint_potential(i, j) = reg * std::log(c.endpoint(i, j));
        out.objective += out.endpoint_potential(i, j) * gamma.mass(i, j);
      }
  for (int k = 1; k < K; ++k) {
    Field q = Field::Zero(N);
    for (int z = 0; z < N; ++z)
      if (target[k - 1][z] > 0.0) {
        q[z] = reg * std::log(c.scale[k - 1][z]);
        out.objective += q[z] * target[k - 1][z];
      }
    out.pressure.frames.push_back(q / lat.weight(k));
  }
  gauge_fix(out.pressure, out.endpoint_potential);
  return out;
}

ExtrapolatedAction extrapolate_entropic(const BistochasticMeasure& gamma, const DensityPath& rho,
                                        const std::vector<double>& regs, Extrapolation method, int max_iter,
                                        double tol) {
  if (regs.size() < 2) throw std::invalid_argument("extrapolate_entropic: need at least two reg values");
  ExtrapolatedAction r;
  r.regs = regs;
  for (double reg : regs) r.actions.push_back(solve_entropic(gamma, rho, reg, max_iter, tol).action);
  const std::size_t n = regs.size();
  if (method == Extrapolation::Exponential) {
    if (n < 3) throw std::invalid_argument("extrapolate_entropic: exponential fit needs three reg values");
    for (std::size_t i = n - 2; i < n; ++i)
      if (std::abs(regs[i] - 0.5 * regs[i - 1]) > 1e-12 * regs[i - 1])
        throw std::invalid_argument("extrapolate_entropic: exponential fit needs a halving schedule");
    const double a1 = r.actions[n - 3], a2 = r.actions[n - 2], a3 = r.actions[n - 1];
    r.value = a3;
    // with x = exp(-gap / r1): a1 - a2 = C (x - x^2), a2 - a3 = C x^2 (1 - x^2)
    if (a1 != a2) {
      const double q = (a2 - a3) / (a1 - a2);
      if (q > 0.0 && q < 2.0) {
        const double x = 0.5 * (std::sqrt(1.0 + 4.0 * q) - 1.0);
        const double C = (a1 - a2) / (x - x * x);
        r.value = a3 - C * std::pow(x, 4);
      }
    }
  } else if (method == Extrapolation::Richardson) {
    const double r1 = regs[n - 2], r2 = regs[n - 1];
    r.value = (r1 * r.actions[n - 1] - r2 * r.actions[n - 2]) / (r1 - r2);
  } else {
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      X(i, 1) = regs[i];
      y[i] = r.actions[i];
    }
    r.value = X.colPivHouseholderQr().solve(y)[0];
  }
  return r;
}

double reduced_cost(const PathLattice& lattice, const Path& w, const PressureField& p, const Eigen::MatrixXd& phi) {
  double rc = lattice.path_action(w) - phi(w.front(), w.back());
  for (int k = 1; k < lattice.steps(); ++k) rc -= p.weights[k - 1] * p.frames[k - 1][w[k]];
  return rc;
}

LeastActionReport verify_least_action(const GeneralizedFlow& flow, const PressureField& p,
                                      const Eigen::MatrixXd& endpoint_duals) {
  const GeneralizedFlow ex = materialize(flow);
  const PathLattice& lat = ex.lattice;
  check_same(lat.grid(), p.grid, "verify_least_action");
  if (static_cast<int>(p.frames.size()) != lat.steps() - 1)
    throw DimensionMismatch("verify_least_action: pressure/lattice time mismatch");
  const Eigen::MatrixXd mins = min_path_values(lat, weighted_pressure(p)) - endpoint_duals;
  LeastActionReport r;
  r.min_reduced_cost = mins.minCoeff();
  r.worst_slack = -std::numeric_limits<double>::infinity();
  for (const auto& wp : ex.explicit_paths().paths) {
    const double rc = reduced_cost(lat, wp.cells, p, endpoint_duals);
    r.worst_slack = std::max(r.worst_slack, rc - mins(wp.cells.front(), wp.cells.back()));
    ++r.charged_paths;
  }
  if (r.charged_paths == 0) r.worst_slack = 0.0;
  return r;
}

double lagrange_gap(double action, const BistochasticMeasure& gamma, const DensityPath& rho, const PressureField& p,
                    const GeneralizedFlow& H, double endpoint_tol) {
  check_same(H.lattice.grid(), gamma.grid, "lagrange_gap");
  if (H.lattice.times() != rho.times) throw DimensionMismatch("lagrange_gap: time grids differ");
  if ((endpoint_coupling(H) - gamma.mass).cwiseAbs().maxCoeff() > endpoint_tol)
    throw std::invalid_argument("lagrange_gap: flow does not satisfy the endpoint condition");
  const auto m = time_marginal_masses(H);
  const double h = gamma.grid.cell_volume();
  double pairing = 0.0;
  for (std::size_t k = 0; k < p.frames.size(); ++k)
    pairing += p.weights[k] * p.frames[k].dot(m[k + 1] - rho.frames[k + 1] * h);
  return flow_action(H) - action - pairing;
}

double lagrange_gap(const ExactSolution& sol, const GeneralizedFlow& H, double endpoint_tol) {
  return lagrange_gap(sol.action, sol.gamma, sol.rho, sol.pressure, H, endpoint_tol);
}

double solve_relaxed(const BistochasticMeasure& gamma, const PathLattice& lattice) {
  check_same(gamma.grid, lattice.grid(), "solve_relaxed");
  const int N = lattice.grid().cell_count();
  const std::vector<Eigen::VectorXd> zero(std::max(0, lattice.steps() - 1), Eigen::VectorXd::Zero(N));
  return min_path_values(lattice, zero).cwiseProduct(gamma.mass).sum();
}

nlohmann::json to_json(const PressureField& p) {
  nlohmann::json j;
  j["dim"] = p.grid.dim();
  j["n"] = p.grid.n();
  j["times"] = p.times;
  j["weights"] = p.weights;
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& f : p.frames) frames.push_back(std::vector<double>(f.data(), f.data() + f.size()));
  j["frames"] = frames;
  return j;
}

nlohmann::json to_json(const DensityPath& rho) {
  nlohmann::json j;
  j["dim"] = rho.grid.dim();
  j["n"] = rho.grid.n();
  j["time_grid"] = rho.times;
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& f : rho.frames) frames.push_back(std::vector<double>(f.data(), f.data() + f.size()));
  j["frames"] = frames;
  return j;
}

DensityPath density_path_from_json(const nlohmann::json& j) {
  DensityPath rho{TorusGrid(j.at("dim").get<int>(), j.at("n").get<int>()), j.at("time_grid").get<std::vector<double>>(),
                  {}};
  for (const auto& f : j.at("frames")) {
    const auto v = f.get<std::vector<double>>();
    rho.frames.push_back(Eigen::Map<const Field>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  rho.validate();
  return rho;
}

}  // namespace gflow
