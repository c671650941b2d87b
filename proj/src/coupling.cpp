#include "gflow/coupling.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include "gflow/transport.hpp"

namespace gflow {

double BistochasticMeasure::marginal_error() const {
  const int N = grid.cell_count();
  if (mass.rows() != N || mass.cols() != N) return std::numeric_limits<double>::infinity();
  const double target = 1.0 / N;
  double err = std::max(0.0, -mass.minCoeff());
  err = std::max(err, (mass.rowwise().sum().array() - target).abs().maxCoeff());
  err = std::max(err, (mass.colwise().sum().array() - target).abs().maxCoeff());
  return err;
}

bool BistochasticMeasure::is_bistochastic(double tol) const { return marginal_error() <= tol; }

void BistochasticMeasure::validate(double tol) const {
  if (!is_bistochastic(tol)) throw std::invalid_argument("measure is not bistochastic");
}

BistochasticMeasure gamma_identity(const TorusGrid& grid) { return gamma_shift(grid, {0, 0}); }

BistochasticMeasure gamma_shift(const TorusGrid& grid, std::array<int, 2> offset) {
  const int N = grid.cell_count();
  BistochasticMeasure m{grid, Eigen::MatrixXd::Zero(N, N)};
  for (int i = 0; i < N; ++i) m.mass(i, grid.shifted(i, offset)) = 1.0 / N;
  return m;
}

BistochasticMeasure gamma_product(const TorusGrid& grid) {
  const int N = grid.cell_count();
  return {grid, Eigen::MatrixXd::Constant(N, N, 1.0 / (double(N) * N))};
}

BistochasticMeasure random_bistochastic(const TorusGrid& grid, std::uint64_t seed, double heat) {
  if (!(heat > 0.0)) throw std::invalid_argument("random_bistochastic: heat must be positive");
  const int N = grid.cell_count();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // log-domain Sinkhorn; logits U/heat can be large when heat is small
  Eigen::MatrixXd logk(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) logk(i, j) = u(rng) / heat;
  Eigen::VectorXd f = Eigen::VectorXd::Zero(N), g = Eigen::VectorXd::Zero(N);
  const double logm = -std::log(static_cast<double>(N));
  auto lse = [](const Eigen::VectorXd& v) {
    const double m = v.maxCoeff();
    return m + std::log((v.array() - m).exp().sum());
  };
  Eigen::MatrixXd P(N, N);
  for (int it = 0; it < 20000; ++it) {
    for (int i = 0; i < N; ++i) f[i] = logm - lse(logk.row(i).transpose() + g);
    for (int j = 0; j < N; ++j) g[j] = logm - lse(logk.col(j) + f);
    if (it % 10 == 9) {
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) P(i, j) = std::exp(logk(i, j) + f[i] + g[j]);
      if ((P.rowwise().sum().array() - 1.0 / N).abs().maxCoeff() < 1e-15) break;
    }
  }
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) P(i, j) = std::exp(logk(i, j) + f[i] + g[j]);
  // Sinkhorn stalls at small heat; remove the leftover marginal error with a
  // rank-two correction and blend toward the product coupling if that dips below 0
  const Eigen::VectorXd r = (1.0 / N) - P.rowwise().sum().array();
  const Eigen::RowVectorXd c = (1.0 / N) - P.colwise().sum().array();
  P += (r * Eigen::RowVectorXd::Ones(N) + Eigen::VectorXd::Ones(N) * c) / N;
  const double low = P.minCoeff();
  if (low < 0.0) {
    const double floor = 1.0 / (double(N) * N);
    const double theta = -low / (floor - low);
    P = (1.0 - theta) * P + Eigen::MatrixXd::Constant(N, N, theta * floor);
    P = P.cwiseMax(0.0);
  }
  return {grid, P};
}

BistochasticMeasure blend(const BistochasticMeasure& a, const BistochasticMeasure& b, double s) {
  if (a.grid != b.grid) throw DimensionMismatch("blend: grid mismatch");
  return {a.grid, (1.0 - s) * a.mass + s * b.mass};
}

double pair_dist2(const TorusGrid& grid, int x, int y, int X, int Y) {
  return cell_dist2(grid, x, X) + cell_dist2(grid, y, Y);
}

double TransportPlan4::marginal_residual() const {
  Eigen::MatrixXd ps = Eigen::MatrixXd::Zero(source.mass.rows(), source.mass.cols());
  Eigen::MatrixXd pt = Eigen::MatrixXd::Zero(target.mass.rows(), target.mass.cols());
  for (const auto& e : entries) {
    ps(e.x, e.y) += e.mass;
    pt(e.X, e.Y) += e.mass;
  }
  return std::max((ps - source.mass).cwiseAbs().maxCoeff(), (pt - target.mass).cwiseAbs().maxCoeff());
}

double TransportPlan4::cost() const {
  double c = 0.0;
  for (const auto& e : entries) c += e.mass * pair_dist2(source.grid, e.x, e.y, e.X, e.Y);
  return c;
}

MKResult mk_distance(const BistochasticMeasure& mu, const BistochasticMeasure& nu) {
  if (mu.grid != nu.grid) throw DimensionMismatch("mk_distance: grid mismatch");
  mu.validate();
  nu.validate();
  const TorusGrid& g = mu.grid;
  const int N = g.cell_count();
  std::vector<std::array<int, 2>> src, dst;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      if (mu.mass(i, j) > 0.0) src.push_back({i, j});
      if (nu.mass(i, j) > 0.0) dst.push_back({i, j});
    }
  Eigen::VectorXd a(src.size()), b(dst.size());
  for (std::size_t k = 0; k < src.size(); ++k) a[k] = mu.mass(src[k][0], src[k][1]);
  for (std::size_t k = 0; k < dst.size(); ++k) b[k] = nu.mass(dst[k][0], dst[k][1]);
  const TransportResult sol = solve_transport(
      a, b, [&](int s, int t) { return pair_dist2(g, src[s][0], src[s][1], dst[t][0], dst[t][1]); });

  MKResult r;
  r.plan.source = mu;
  r.plan.target = nu;
  for (const auto& f : sol.flows)
    r.plan.entries.push_back({src[f.source][0], src[f.source][1], dst[f.target][0], dst[f.target][1], f.mass});
  r.distance = std::sqrt(std::max(0.0, sol.cost));
  return r;
}

void write_csv(std::ostream& os, const BistochasticMeasure& m) {
  os << "i,j,mass\n";
  os.precision(17);
  for (int i = 0; i < m.mass.rows(); ++i)
    for (int j = 0; j < m.mass.cols(); ++j)
      if (m.mass(i, j) != 0.0) os << i << ',' << j << ',' << m.mass(i, j) << '\n';
}

void write_csv(std::ostream& os, const TransportPlan4& plan) {
  os << "x,y,X,Y,mass\n";
  os.precision(17);
  for (const auto& e : plan.entries) os << e.x << ',' << e.y << ',' << e.X << ',' << e.Y << ',' << e.mass << '\n';
}

nlohmann::json to_json(const BistochasticMeasure& m) {
  nlohmann::json j;
  j["dim"] = m.grid.dim();
  j["n"] = m.grid.n();
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.mass.rows(); ++i) {
    std::vector<double> r(m.mass.cols());
    for (int k = 0; k < m.mass.cols(); ++k) r[k] = m.mass(i, k);
    rows.push_back(r);
  }
  j["mass"] = rows;
  return j;
}

BistochasticMeasure measure_from_json(const nlohmann::json& j) {
  const TorusGrid g(j.at("dim").get<int>(), j.at("n").get<int>());
  const int N = g.cell_count();
  const auto& rows = j.at("mass");
  if (static_cast<int>(rows.size()) != N) throw DimensionMismatch("measure_from_json: wrong row count");
  BistochasticMeasure m{g, Eigen::MatrixXd(N, N)};
  for (int i = 0; i < N; ++i) {
    if (static_cast<int>(rows[i].size()) != N) throw DimensionMismatch("measure_from_json: wrong column count");
    for (int k = 0; k < N; ++k) m.mass(i, k) = rows[i][k].get<double>();
  }
  m.validate();
  return m;
}

}  // namespace gflow
