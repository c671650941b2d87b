#include "gflow/extended.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "gflow/simplex.hpp"
#include "gflow/transport.hpp"

namespace gflow {

double LabeledCoupling::marginal_error() const {
  if (mass.rows() != m || mass.cols() != m) return std::numeric_limits<double>::infinity();
  const double target = 1.0 / m;
  double err = std::max(0.0, -mass.minCoeff());
  err = std::max(err, (mass.rowwise().sum().array() - target).abs().maxCoeff());
  err = std::max(err, (mass.colwise().sum().array() - target).abs().maxCoeff());
  return err;
}

void LabeledCoupling::validate(double tol) const {
  if (m < 2) throw std::invalid_argument("LabeledCoupling: need at least 2 cells");
  if (marginal_error() > tol) throw std::invalid_argument("LabeledCoupling: marginals are not uniform");
}

double LabeledCoupling::position(int cell) const {
  return geometry == LabelGeometry::Interval ? (cell + 0.5) / m : static_cast<double>(cell) / m;
}

double LabeledCoupling::dist2(int a, int b) const {
  int k = std::abs(a - b);
  if (geometry == LabelGeometry::Torus) k = std::min(k, m - k);
  const double d = static_cast<double>(k) / m;
  return d * d;
}

LabeledCoupling LabeledCoupling::from_bistochastic(const BistochasticMeasure& gamma) {
  if (gamma.grid.dim() != 1) throw DimensionMismatch("from_bistochastic: labels need a 1D grid");
  return {gamma.grid.n(), LabelGeometry::Torus, gamma.mass};
}

BistochasticMeasure LabeledCoupling::lift() const { return {TorusGrid(1, m), mass}; }

double integrate(const LabeledCoupling& c, const std::function<double(double, double)>& alpha) {
  double s = 0.0;
  for (int a = 0; a < c.m; ++a)
    for (int x = 0; x < c.m; ++x)
      if (c.mass(a, x) != 0.0) s += c.mass(a, x) * alpha(c.position(a), c.position(x));
  return s;
}

CounterexampleFamily build_mu_infinity(int m) {
  if (m < 4 || m % 2 != 0) throw std::invalid_argument("build_mu_infinity: m must be even and at least 4");
  LabeledCoupling c{m, LabelGeometry::Interval, Eigen::MatrixXd::Zero(m, m)};
  for (int a = 0; a < m; ++a) {
    c.mass(a, a / 2) += 0.5 / m;
    c.mass(a, m / 2 + a / 2) += 0.5 / m;
  }
  return {std::nullopt, c};
}

CounterexampleFamily build_mu_n(int n, int m) {
  if (n < 1) throw std::invalid_argument("build_mu_n: n must be positive");
  if (m < 2 || m % (2 * n) != 0) throw std::invalid_argument("build_mu_n: m must be a multiple of 2n");
  const int L = m / (2 * n);
  LabeledCoupling c{m, LabelGeometry::Interval, Eigen::MatrixXd::Zero(m, m)};
  for (int a = 0; a < m; ++a) {
    const int q = a / L, r = a % L;
    const int i = q / 2;
    const int y = q % 2 == 0 ? i * L + r : m / 2 + i * L + r;
    c.mass(a, y) = 1.0 / m;
  }
  return {n, c};
}

namespace {

std::vector<int> support(const Eigen::MatrixXd& mass, int row) {
  std::vector<int> s;
  for (int x = 0; x < mass.cols(); ++x)
    if (mass(row, x) > 0.0) s.push_back(x);
  return s;
}

// W2^2 / 2 between the normalized rows of mu and nu for one label
double label_cost(const LabeledCoupling& mu, const LabeledCoupling& nu, int a) {
  const auto s0 = support(mu.mass, a), s1 = support(nu.mass, a);
  const double p = mu.mass.row(a).sum(), q = nu.mass.row(a).sum();
  if (s1.size() == 1 || s0.size() == 1) {
    // one side is a Dirac: every coupling is the product
    double c = 0.0;
    for (int x : s0)
      for (int y : s1) c += (mu.mass(a, x) / p) * (nu.mass(a, y) / q) * mu.dist2(x, y);
    return 0.5 * c;
  }
  Eigen::VectorXd u(s0.size()), v(s1.size());
  for (std::size_t i = 0; i < s0.size(); ++i) u[i] = mu.mass(a, s0[i]) / p;
  for (std::size_t j = 0; j < s1.size(); ++j) v[j] = nu.mass(a, s1[j]) / q;
  return 0.5 * solve_transport(u, v, [&](int i, int j) { return mu.dist2(s0[i], s1[j]); }).cost;
}

struct LabeledLp {
  double action;
  double residual;
};

LabeledLp solve_incompressible(const LabeledCoupling& mu, const LabeledCoupling& nu, const PathLattice& lat,
                               std::uint64_t budget) {
  const int m = mu.m;
  const int K = lat.steps();
  std::uint64_t inner = 1;
  for (int k = 1; k < K; ++k) {
    inner *= static_cast<std::uint64_t>(m);
    if (inner > budget) throw BudgetExceeded("labeled path enumeration exceeds budget");
  }
  std::vector<std::vector<int>> s0(m), s1(m);
  std::uint64_t columns = 0;
  for (int a = 0; a < m; ++a) {
    s0[a] = support(mu.mass, a);
    s1[a] = support(nu.mass, a);
    columns += s0[a].size() * s1[a].size() * inner;
  }
  if (columns > budget)
    throw BudgetExceeded("labeled path enumeration exceeds budget (" + std::to_string(budget) + " paths)");

  // rows: (a, x0) in supp mu, (a, xK) in supp nu, then (k, z) for interior k
  std::vector<std::vector<int>> row0(m, std::vector<int>(m, -1)), row1 = row0;
  int rows = 0;
  for (int a = 0; a < m; ++a)
    for (int x : s0[a]) row0[a][x] = rows++;
  for (int a = 0; a < m; ++a)
    for (int y : s1[a]) row1[a][y] = rows++;
  const int interior = rows;
  rows += (K - 1) * m;
  lp::LinearProgram prog(rows);
  for (int a = 0; a < m; ++a) {
    for (int x : s0[a]) prog.set_rhs(row0[a][x], mu.mass(a, x));
    for (int y : s1[a]) prog.set_rhs(row1[a][y], nu.mass(a, y));
  }
  for (int k = 1; k < K; ++k)
    for (int z = 0; z < m; ++z) prog.set_rhs(interior + (k - 1) * m + z, 1.0 / m);

  std::vector<int> path(K + 1);
  std::vector<lp::Entry> entries(K + 1);
  for (int a = 0; a < m; ++a)
    for (int x : s0[a])
      for (int y : s1[a])
        for (std::uint64_t idx = 0; idx < inner; ++idx) {
          path[0] = x;
          path[K] = y;
          std::uint64_t rem = idx;
          for (int k = K - 1; k >= 1; --k) {
            path[k] = static_cast<int>(rem % m);
            rem /= m;
          }
          double cost = 0.0;
          for (int k = 0; k < K; ++k) cost += mu.dist2(path[k], path[k + 1]) / (2.0 * lat.dt(k));
          entries[0] = {row0[a][x], 1.0};
          entries[1] = {row1[a][y], 1.0};
          for (int k = 1; k < K; ++k) entries[k + 1] = {interior + (k - 1) * m + path[k], 1.0};
          prog.add_column(cost, entries);
        }
  const lp::Solution sol = lp::solve(prog);
  if (sol.status != lp::Status::Optimal)
    throw std::runtime_error("solve_extended: labeled LP not solved (" + lp::to_string(sol.status) + ")");
  return {sol.objective, sol.primal_residual};
}

}  // namespace

ExtendedResult solve_extended(const LabeledCoupling& mu, const LabeledCoupling& nu, const PathLattice& lattice,
                              const ExtendedOptions& opt) {
  if (mu.m != nu.m || mu.geometry != nu.geometry) throw DimensionMismatch("solve_extended: label grids differ");
  mu.validate();
  nu.validate();
  if (lattice.grid().dim() != 1 || lattice.grid().n() != mu.m)
    throw DimensionMismatch("solve_extended: lattice grid does not match the label grid");
  ExtendedResult r;
  r.per_label.resize(mu.m);
  for (int a = 0; a < mu.m; ++a) {
    r.per_label[a] = label_cost(mu, nu, a);
    r.action += mu.mass.row(a).sum() * r.per_label[a];
  }
  if (opt.incompressible) {
    const LabeledLp s = solve_incompressible(mu, nu, lattice, opt.budget);
    r.incompressible_action = s.action;
    r.incompressible_residual = s.residual;
  }
  return r;
}

DiscontinuityReport discontinuity_series(const std::vector<int>& n_list, int m) {
  const CounterexampleFamily inf = build_mu_infinity(m);
  const PathLattice lat = PathLattice::uniform(TorusGrid(1, m), 1);
  DiscontinuityReport rep;
  rep.m = m;
  for (int n : n_list) {
    const CounterexampleFamily fam = build_mu_n(n, m);
    SeriesRow row;
    row.n = n;
    row.dmk = mk_distance(fam.measure.lift(), inf.measure.lift()).distance;
    const double f = 1.0 - 1.0 / n;
    row.action_lower = f * f / 16.0;
    row.action_computed = solve_extended(inf.measure, fam.measure, lat).action;
    rep.rows.push_back(row);
  }
  SeriesRow limit;
  limit.action_computed = solve_extended(inf.measure, inf.measure, lat).action;
  rep.rows.push_back(limit);

  rep.distances_decreasing = true;
  rep.actions_above_bound = true;
  for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i) {
    if (!(rep.rows[i + 1].dmk < rep.rows[i].dmk)) rep.distances_decreasing = false;
    const auto& row = rep.rows[i];
    if (*row.n >= 2 && row.action_computed < row.action_lower - 2.0 / m) rep.actions_above_bound = false;
  }
  return rep;
}

void write_csv(std::ostream& os, const DiscontinuityReport& r) {
  os << "n,dmk,action_lower,action_computed\n";
  os.precision(17);
  for (const auto& row : r.rows) {
    if (row.n)
      os << *row.n;
    else
      os << "inf";
    os << ',' << row.dmk << ',' << row.action_lower << ',' << row.action_computed << '\n';
  }
}

}  // namespace gflow
