#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gflow/simplex.hpp"
#include "gflow/transport.hpp"

using namespace gflow;

namespace {

double lp_transport(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::MatrixXd& C) {
  const int m = static_cast<int>(a.size()), n = static_cast<int>(b.size());
  lp::LinearProgram p(m + n);
  for (int i = 0; i < m; ++i) p.set_rhs(i, a[i]);
  for (int j = 0; j < n; ++j) p.set_rhs(m + j, b[j]);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) p.add_column(C(i, j), {{i, 1.0}, {m + j, 1.0}});
  return lp::solve(p).objective;
}

Eigen::VectorXd random_marginal(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.05, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = U(rng);
  return v / v.sum();
}

}  // namespace

TEST_CASE("permutation cost: assignment by brute force") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 5;
    Eigen::MatrixXd C(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) C(i, j) = U(rng);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += C(i, perm[i]);
      best = std::min(best, s / n);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / n);
    const auto r = solve_transport(w, w, [&](int i, int j) { return C(i, j); });
    CHECK(r.cost == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("random instances agree with the general simplex") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (auto [m, n] : std::vector<std::pair<int, int>>{{1, 4}, {4, 1}, {3, 7}, {12, 9}, {20, 20}}) {
    const Eigen::VectorXd a = random_marginal(m, rng), b = random_marginal(n, rng);
    Eigen::MatrixXd C(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) C(i, j) = U(rng);
    const auto r = solve_transport(a, b, [&](int i, int j) { return C(i, j); });
    CHECK(r.cost == doctest::Approx(lp_transport(a, b, C)).epsilon(1e-10));

    Eigen::VectorXd rows = Eigen::VectorXd::Zero(m), cols = Eigen::VectorXd::Zero(n);
    for (const auto& f : r.flows) {
      CHECK(f.mass > 0.0);
      rows[f.source] += f.mass;
      cols[f.target] += f.mass;
      // complementary slackness on the support
      CHECK(std::abs(C(f.source, f.target) - r.u[f.source] - r.v[f.target]) <= 1e-12);
    }
    CHECK((rows - a).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((cols - b).cwiseAbs().maxCoeff() <= 1e-14);
    // dual feasibility and zero gap
    double dual = r.u.dot(a) + r.v.dot(b);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) CHECK(C(i, j) - r.u[i] - r.v[j] >= -1e-12);
    CHECK(dual == doctest::Approx(r.cost).epsilon(1e-12));
  }
}

TEST_CASE("degenerate marginals and validation") {
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(4, 0.25);
  const auto r = solve_transport(a, a, [](int i, int j) { return i == j ? 0.0 : 1.0; });
  CHECK(r.cost == 0.0);
  CHECK(r.flows.size() == 4);
  Eigen::VectorXd z = a;
  z[0] = 0.0;
  CHECK_THROWS_AS(solve_transport(z, a, [](int, int) { return 0.0; }), std::invalid_argument);
  CHECK_THROWS_AS(solve_transport(a, 2.0 * a, [](int, int) { return 0.0; }), std::invalid_argument);
}

TEST_CASE("large instance finishes and matches a lower bound") {
  std::mt19937_64 rng(5);
  const int n = 300;
  const Eigen::VectorXd a = random_marginal(n, rng), b = random_marginal(n, rng);
  // 1D squared distance on a line: the monotone coupling is optimal
  auto c = [&](int i, int j) {
    const double d = (i - j) / double(n);
    return d * d;
  };
  const auto r = solve_transport(a, b, c);
  double mono = 0.0;
  int i = 0, j = 0;
  double ra = a[0], rb = b[0];
  while (i < n && j < n) {
    const double f = std::min(ra, rb);
    mono += f * c(i, j);
    ra -= f;
    rb -= f;
    if (ra <= 1e-18 && ++i < n) ra = a[i];
    if (rb <= 1e-18 && ++j < n) rb = b[j];
  }
  CHECK(r.cost == doctest::Approx(mono).epsilon(1e-9));
}
