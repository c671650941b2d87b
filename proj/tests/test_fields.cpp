#include "doctest.h"

#include <cmath>
#include <random>

#include "gflow/fields.hpp"

using namespace gflow;

namespace {

constexpr double kPi = 3.14159265358979323846;

FieldPath scalar_path(const TorusGrid& g, int T, double (*f)(double, double)) {
  FieldPath p = FieldPath::zeros(g, uniform_times(T));
  for (int k = 0; k <= T; ++k)
    for (int z = 0; z < g.cell_count(); ++z) p.frames[k][z] = f(p.times[k], g.center(z).x[0]);
  return p;
}

// the defining formula of N on a 1D scalar path, evaluated cell by cell
double n_oracle_1d(const FieldPath& p) {
  const int n = p.grid.n();
  double lip = 0.0;
  for (const auto& fr : p.frames)
    for (int i = 0; i < n; ++i) lip = std::max(lip, std::abs(fr[(i + 1) % n] - fr[i]) * n);
  double l2 = 0.0;
  for (std::size_t k = 0; k + 1 < p.frames.size(); ++k) {
    const double dt = p.times[k + 1] - p.times[k];
    double m = 0.0;
    for (int i = 0; i < n; ++i) m = std::max(m, std::abs(p.frames[k + 1][i] - p.frames[k][i]) / dt);
    l2 += dt * m * m;
  }
  return lip + std::sqrt(l2);
}

DensityPath random_density_path(const TorusGrid& g, int T, std::mt19937_64& rng, double floor = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DensityPath p = DensityPath::uniform(g, uniform_times(T));
  for (int k = 1; k < T; ++k) {
    for (auto& v : p.frames[k]) v = floor + u(rng);
    p.frames[k] /= total_mass(p.frames[k], g);
  }
  return p;
}

}  // namespace

TEST_CASE("e_norm examples") {
  const TorusGrid g(1, 16);
  CHECK(e_norm(scalar_path(g, 4, [](double, double) { return 5.0; })) == 0.0);
  CHECK(e_norm(scalar_path(g, 4, [](double t, double) { return t; })) == doctest::Approx(1.0).epsilon(1e-14));

  const FieldPath s = scalar_path(g, 4, [](double, double x) { return std::sin(2.0 * kPi * x); });
  // adjacent differences are 2 sin(pi/16) cos(2 pi (i + 1/2)/16), largest at i + 1/2 = 1/2
  const double lip = 2.0 * std::sin(kPi / 16.0) * std::cos(kPi / 16.0) * 16.0;
  CHECK(e_norm(s) == doctest::Approx(lip).epsilon(1e-13));
  CHECK(e_norm(s) == doctest::Approx(n_oracle_1d(s)).epsilon(1e-14));
  CHECK(lip == doctest::Approx(2.0 * kPi).epsilon(0.03));

  FieldPath single = FieldPath::zeros(g, {0.0});
  CHECK_THROWS(e_norm(single));
}

TEST_CASE("e_norm on random paths matches the direct formula") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  const TorusGrid g(1, 12);
  for (int trial = 0; trial < 10; ++trial) {
    FieldPath p = FieldPath::zeros(g, {0.0, 0.1, 0.35, 0.6, 1.0});
    for (auto& fr : p.frames)
      for (auto& v : fr) v = nd(rng);
    CHECK(e_norm(p) == doctest::Approx(n_oracle_1d(p)).epsilon(1e-13));
  }
}

TEST_CASE("e_norm is a seminorm") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  for (int dim : {1, 2}) {
    const TorusGrid g(dim, 8);
    for (int trial = 0; trial < 20; ++trial) {
      FieldPath a = FieldPath::zeros(g, uniform_times(4), dim);
      FieldPath b = a;
      for (int k = 1; k < 4; ++k) {
        for (auto& v : a.frames[k]) v = nd(rng);
        for (auto& v : b.frames[k]) v = nd(rng);
      }
      a.tau = b.tau = 0.2;
      FieldPath sum = a;
      FieldPath scaled = a;
      for (int k = 0; k <= 4; ++k) {
        sum.frames[k] += b.frames[k];
        scaled.frames[k] *= -2.5;
      }
      CHECK(e_norm(scaled) == doctest::Approx(2.5 * e_norm(a)).epsilon(1e-13));
      CHECK(e_norm(sum) <= e_norm(a) + e_norm(b) + 1e-12);
      CHECK(e_norm(a) > 0.0);
    }
  }
}

TEST_CASE("regularize_density end windows and uniform input") {
  std::mt19937_64 rng(21);
  for (int dim : {1, 2}) {
    const TorusGrid g(dim, 8);
    const DensityPath rho = random_density_path(g, 8, rng);
    for (double eps : {0.25, 0.125, 0.0625}) {
      const DensityPath out = regularize_density(rho, eps);
      out.validate(1e-12);
      for (std::size_t k = 0; k < out.times.size(); ++k) {
        const double t = out.times[k];
        if (t <= eps || t >= 1.0 - eps) CHECK((out.frames[k].array() == 1.0).all());
      }
      const DensityPath q = regularize_density(rho, eps, std::vector<double>{eps / 2.0, 1.0 - eps / 3.0});
      CHECK((q.frames[0].array() == 1.0).all());
      CHECK((q.frames[1].array() == 1.0).all());

      const DensityPath u = regularize_density(DensityPath::uniform(g, uniform_times(8)), eps);
      for (const auto& f : u.frames) CHECK((f.array() - 1.0).abs().maxCoeff() <= 1e-14);
    }
  }
  CHECK_THROWS(regularize_density(DensityPath::uniform(TorusGrid(1, 8), uniform_times(2)), 0.0));
  CHECK_THROWS(regularize_density(DensityPath::uniform(TorusGrid(1, 8), uniform_times(2)), 0.3));
}

TEST_CASE("regularize_density with one perturbed frame against a composed oracle") {
  const TorusGrid g(1, 32);
  const int T = 8;
  DensityPath rho = DensityPath::uniform(g, uniform_times(T));
  for (int i = 0; i < 32; ++i) rho.frames[4][i] = 1.0 + 0.5 * std::cos(2.0 * kPi * i / 32.0);
  const double eps = 0.25;
  const DensityPath out = regularize_density(rho, eps);

  // kernel oracle: bump exp(-1/(1-u^2)) with u = 4 v / eps, sampled at cell offsets
  std::vector<double> w;
  std::vector<int> off;
  double total = 0.0;
  for (int o = -8; o <= 8; ++o) {
    const double u = 4.0 * o / 32.0 / eps;
    if (std::abs(u) >= 1.0) continue;
    off.push_back(o);
    w.push_back(std::exp(-1.0 / (1.0 - u * u)));
    total += w.back();
  }
  REQUIRE(off.size() == 3);
  for (auto& x : w) x /= total;

  for (int m = 0; m <= T; ++m) {
    const double t = static_cast<double>(m) / T;
    Field expect = Field::Ones(32);
    if (t > eps && t < 1.0 - eps) {
      const double s = (t - eps) / (1.0 - 2.0 * eps);
      const int k = static_cast<int>(std::lround(s * T));
      for (int i = 0; i < 32; ++i) {
        expect[i] = 0.0;
        for (std::size_t a = 0; a < off.size(); ++a) expect[i] += w[a] * rho.frames[k][((i - off[a]) % 32 + 32) % 32];
      }
    }
    CHECK((out.frames[m] - expect).cwiseAbs().maxCoeff() <= 1e-14);
  }
  // t = 1/2 maps to s = 1/2: the perturbed frame, smoothed
  CHECK(out.frames[4].maxCoeff() < 1.5);
  CHECK(out.frames[4].maxCoeff() > 1.4);
}

TEST_CASE("regularize_density keeps lower bounds") {
  std::mt19937_64 rng(4);
  const TorusGrid g(2, 16);
  const DensityPath rho = random_density_path(g, 4, rng, 3.0);
  const double c = rho.min_value();
  REQUIRE(c > 0.5);
  for (double eps : {0.25, 0.125}) CHECK(regularize_density(rho, eps).min_value() >= std::min(c, 1.0) - 1e-14);
}

TEST_CASE("regularize_field") {
  const TorusGrid g(1, 16);
  const int T = 8;
  SUBCASE("zero stays zero") {
    const FieldPath z = regularize_field(FieldPath::zeros(g, uniform_times(T)), 0.125);
    CHECK(z.sup_abs() == 0.0);
  }
  SUBCASE("space-constant field is time-rescaled") {
    const FieldPath xi = scalar_path(g, T, [](double t, double) { return std::sin(kPi * t); });
    const double eps = 0.125;
    const FieldPath out = regularize_field(xi, eps);
    for (int m = 0; m <= T; ++m) {
      const double t = out.times[m];
      double expect = 0.0;
      if (t > eps && t < 1.0 - eps) expect = xi.frames[std::lround((t - eps) / (1.0 - 2.0 * eps) * T)][0];
      for (int i = 0; i < 16; ++i) CHECK(out.frames[m][i] == doctest::Approx(expect).epsilon(1e-14));
    }
  }
  SUBCASE("E_tau membership is kept") {
    FieldPath xi = scalar_path(g, T, [](double t, double x) {
      return (t > 0.25 && t < 0.75) ? std::cos(2.0 * kPi * x) : 0.0;
    });
    xi.tau = 0.25;
    CHECK(xi.vanishes_near_ends(0.25));
    const FieldPath out = regularize_field(xi, 0.125);
    REQUIRE(out.tau.has_value());
    CHECK(out.vanishes_near_ends(*out.tau));
  }
  SUBCASE("distance to the regularized field is first order in eps") {
    // smooth field vanishing at both ends; fine time grid so nearest-frame error is negligible
    const FieldPath xi = scalar_path(g, 256, [](double t, double x) {
      return std::sin(kPi * t) * std::sin(kPi * t) * std::cos(2.0 * kPi * x);
    });
    std::vector<double> le, ld;
    for (double eps : {0.25, 0.125, 0.0625}) {
      le.push_back(std::log(eps));
      ld.push_back(std::log(l2t_linf_distance(xi, regularize_field(xi, eps))));
    }
    const double slope1 = (ld[1] - ld[0]) / (le[1] - le[0]);
    const double slope2 = (ld[2] - ld[1]) / (le[2] - le[1]);
    CHECK(slope1 > 0.8);
    CHECK(slope2 > 0.8);
  }
}

TEST_CASE("Leibniz product bound") {
  const TorusGrid g(1, 16);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  const FieldPath one = scalar_path(g, 4, [](double, double) { return 1.0; });
  FieldPath b = FieldPath::zeros(g, uniform_times(4));
  for (auto& fr : b.frames)
    for (auto& v : fr) v = nd(rng);
  auto r = lipschitz_product_bound(one, b);
  CHECK(r.holds);
  CHECK(r.n_product == doctest::Approx(e_norm(b)).epsilon(1e-14));

  const FieldPath zero = FieldPath::zeros(g, uniform_times(4));
  r = lipschitz_product_bound(zero, zero);
  CHECK(r.holds);
  CHECK(r.n_product == 0.0);

  for (int trial = 0; trial < 20; ++trial) {
    const double a1 = nd(rng), a2 = nd(rng), b1 = nd(rng), b2 = nd(rng);
    FieldPath a = FieldPath::zeros(g, uniform_times(4));
    FieldPath c = a;
    for (int k = 0; k <= 4; ++k)
      for (int i = 0; i < 16; ++i) {
        const double t = a.times[k], x = i / 16.0;
        a.frames[k][i] = a1 * std::sin(2.0 * kPi * (x + t)) + a2 * t;
        c.frames[k][i] = b1 * std::cos(2.0 * kPi * x) * t + b2;
      }
    r = lipschitz_product_bound(a, c);
    // independent evaluation of both sides
    FieldPath ab = a;
    for (int k = 0; k <= 4; ++k) ab.frames[k] = a.frames[k].cwiseProduct(c.frames[k]);
    const double rhs = a.sup_abs() * n_oracle_1d(c) + c.sup_abs() * n_oracle_1d(a);
    CHECK(r.n_product == doctest::Approx(n_oracle_1d(ab)).epsilon(1e-13));
    CHECK(n_oracle_1d(ab) <= rhs + 1e-12);
    CHECK(r.holds);
  }
  CHECK_THROWS_AS(lipschitz_product_bound(one, FieldPath::zeros(TorusGrid(1, 8), uniform_times(4))),
                  DimensionMismatch);
}

TEST_CASE("N of the regularized density grows like a power of 1/eps") {
  std::mt19937_64 rng(12);
  const TorusGrid g(1, 64);
  const DensityPath rho = random_density_path(g, 8, rng, 0.5);
  double prev = 0.0;
  for (double eps : {0.25, 0.125, 0.0625}) {
    const double v = e_norm(regularize_density(rho, eps));
    CHECK(v > 0.0);
    if (prev > 0.0) CHECK(std::log(v / prev) / std::log(2.0) <= 2.0 + 1e-9);
    prev = v;
  }
}
