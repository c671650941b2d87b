// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "gflow/experiments.hpp"

using namespace gflow;

namespace {

// pinned tolerances and runtime limits (seconds)
constexpr double kExactTol = 1e-9;
constexpr double kEntropicTol = 5e-3;
constexpr double kDualityTol = 1e-9;
constexpr double kSlackTol = 1e-9;
constexpr double kGapTol = -1e-9;
constexpr double kAdmissibleTol = 1e-6;
constexpr double kCertifiedTol = 1e-9;
constexpr double kHalvingRatio = 0.55;
constexpr double kKendallLevel = 0.05;

struct Outcome {
  bool pass = true;
  std::ostringstream note;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      note << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(int id, const std::string& name, double limit, const std::function<void(Outcome&)>& body) {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.require(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.require(secs < limit, "runtime over " + std::to_string(limit) + " s");
  if (!out.pass) ++failures;
  std::printf("criterion %d: %s %s (%.2f s)%s\n", id, out.pass ? "PASS" : "FAIL", name.c_str(), secs,
              out.note.str().c_str());
  std::fflush(stdout);
}

// Brute force over all N^(K+1) lattice paths: each pair takes its cheapest
// paths (ties split evenly). When the resulting interior marginals are
// uniform this is the optimum of the constrained problem.
struct BruteForce {
  double value = 0.0;
  bool incompressible = false;
};

BruteForce brute_force(const BistochasticMeasure& gamma, const PathLattice& lat) {
  const int N = lat.grid().cell_count();
  const int K = lat.steps();
  std::vector<std::vector<double>> best(N, std::vector<double>(N, INFINITY));
  std::vector<std::vector<std::vector<Path>>> argmin(N, std::vector<std::vector<Path>>(N));
  const std::uint64_t count = *lat.path_count();
  for (std::uint64_t idx = 0; idx < count; ++idx) {
    const Path w = lat.path_at(idx);
    double a = 0.0;
    for (int k = 0; k < K; ++k) a += cell_dist2(lat.grid(), w[k], w[k + 1]) / (2.0 * lat.dt(k));
    double& b = best[w[0]][w[K]];
    auto& arg = argmin[w[0]][w[K]];
    if (a < b - 1e-15) {
      b = a;
      arg = {w};
    } else if (std::abs(a - b) <= 1e-15) {
      arg.push_back(w);
    }
  }
  BruteForce r;
  std::vector<std::vector<double>> marg(K + 1, std::vector<double>(N, 0.0));
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      const double m = gamma.mass(i, j);
      if (m == 0.0) continue;
      r.value += m * best[i][j];
      for (const auto& w : argmin[i][j])
        for (int k = 0; k <= K; ++k) marg[k][w[k]] += m / argmin[i][j].size();
    }
  r.incompressible = true;
  for (int k = 1; k < K; ++k)
    for (int z = 0; z < N; ++z) r.incompressible = r.incompressible && std::abs(marg[k][z] - 1.0 / N) <= 1e-12;
  return r;
}

DensityPath random_density_path(const TorusGrid& g, const std::vector<double>& times, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.5, 1.5);
  DensityPath p = DensityPath::uniform(g, times);
  for (std::size_t k = 1; k + 1 < times.size(); ++k) {
    for (int z = 0; z < g.cell_count(); ++z) p.frames[k][z] = u(rng);
    p.frames[k] /= p.frames[k].mean();
  }
  return p;
}

void check_solution(Outcome& out, const ExactSolution& s, const std::string& label) {
  out.require(std::abs(s.action - s.dual_objective) <= kDualityTol, label + " duality gap");
  const auto la = verify_least_action(s.flow, s.pressure, s.endpoint_duals);
  out.require(la.worst_slack <= kSlackTol, label + " least-action slack");
}

}  // namespace

int main() {
  criterion(1, "exact solver against brute force (n=4, T=2)", 1.0, [](Outcome& out) {
    const TorusGrid g(1, 4);
    const auto lat = PathLattice::uniform(g, 2);
    const auto id = solve_exact(gamma_identity(g), lat);
    const auto sh = solve_exact(gamma_shift(g, {2, 0}), lat);
    const auto bid = brute_force(gamma_identity(g), lat);
    const auto bsh = brute_force(gamma_shift(g, {2, 0}), lat);
    out.require(bid.incompressible && bsh.incompressible, "brute-force optimum is incompressible");
    out.require(id.action == 0.0 && bid.value == 0.0, "identity action is exactly 0");
    out.require(std::abs(sh.action - 0.125) <= kExactTol && std::abs(bsh.value - 0.125) <= kExactTol,
                "half shift action is 1/8");
    out.note << " A(id)=" << id.action << " A(shift2)=" << sh.action;
  });

  criterion(2, "entropic extrapolation matches exact on 10 instances", 30.0, [](Outcome& out) {
    const TorusGrid g(1, 4);
    const auto lat = PathLattice::uniform(g, 2);
    const auto lambda = DensityPath::uniform(g, lat.times());
    const std::vector<double> regs{0.2, 0.1, 0.05, 0.025};
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
      const auto gamma = random_bistochastic(g, derive_seed(0, 10, i), 0.3);
      const double exact = solve_exact(gamma, lat).action;
      const double ent = extrapolate_entropic(gamma, lambda, regs, Extrapolation::Exponential).value;
      worst = std::max(worst, std::abs(ent - exact));
    }
    out.require(worst <= kEntropicTol, "max |entropic - exact| <= 5e-3");
    out.note << " max|diff|=" << worst;
  });

  criterion(3, "duality gap and least-action slack", 10.0, [](Outcome& out) {
    double worst_instance = 0.0;
    int count = 0;
    for (int n : {4, 6}) {
      const TorusGrid g(1, n);
      for (int T : {2, 4}) {
        const auto lat = PathLattice::uniform(g, T);
        std::vector<BistochasticMeasure> gammas{gamma_identity(g), gamma_shift(g, {n / 2, 0})};
        for (int i = 0; i < 3; ++i) gammas.push_back(random_bistochastic(g, derive_seed(0, 11, i), 0.05));
        for (const auto& gamma : gammas) {
          const auto t0 = std::chrono::steady_clock::now();
          check_solution(out, solve_exact(gamma, lat), "n=" + std::to_string(n) + " T=" + std::to_string(T));
          worst_instance =
              std::max(worst_instance, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
          ++count;
        }
      }
    }
    const TorusGrid g2(2, 3);
    check_solution(out, solve_exact(random_bistochastic(g2, 5, 0.1), PathLattice::uniform(g2, 2)), "2D n=3");
    ++count;
    out.note << " instances=" << count << " slowest=" << worst_instance << " s";
  });

  criterion(4, "multiplier inequality on 20 comparison flows per instance", 60.0, [](Outcome& out) {
    double worst = INFINITY;
    int flows = 0;
    for (int inst = 0; inst < 4; ++inst) {
      const TorusGrid g(1, inst < 2 ? 4 : 6);
      const auto lat = PathLattice::uniform(g, inst % 2 == 0 ? 2 : 4);
      const auto gamma = random_bistochastic(g, derive_seed(0, 12, inst), 0.05);
      const auto sol = solve_exact(gamma, lat);
      std::mt19937_64 rng(derive_seed(0, 13, inst));
      for (int j = 0; j < 20; ++j) {
        GeneralizedFlow H;
        if (j % 2 == 0) {
          H = product_flow(gamma, random_density_path(g, lat.times(), rng));
        } else {
          const FieldPath xi = random_test_field(g, lat.times(), 0.25, rng);
          H = perturb_flow(sol.flow, xi, 0.05 * (1 + j % 5));
        }
        worst = std::min(worst, lagrange_gap(sol, H));
        ++flows;
      }
    }
    out.require(worst >= kGapTol, "lagrange_gap >= -1e-9");
    out.note << " flows=" << flows << " min gap=" << worst;
  });

  criterion(5, "counterexample series at m=32", 60.0, [](Outcome& out) {
    ExperimentConfig cfg;
    cfg.m = 32;
    cfg.n_list = {2, 4, 8};
    const auto rep = run_counterexample(cfg);
    out.require(rep.series.distances_decreasing, "d_MK strictly decreasing");
    out.require(rep.series.actions_above_bound, "action >= (1/16)(1-1/n)^2 - 2/m");
    for (const auto& row : rep.series.rows) {
      if (!row.n) continue;
      out.require(row.action_computed >= 0.0156, "action >= 0.0156 for n >= 2");
      out.note << " n=" << *row.n << ":(" << row.dmk << ", " << row.action_computed << ")";
    }
  });

  criterion(6, "Dacorogna-Moser identity and cosine push-forward", 30.0, [](Outcome& out) {
    std::vector<double> w1;
    for (int n : {32, 64}) {
      const TorusGrid g(1, n);
      const auto f = DensityPath::uniform(g, uniform_times(1));
      const auto id = flow_map(f, f, 32);
      for (const auto& fr : id.frames) out.require(fr.cwiseAbs().maxCoeff() == 0.0, "f = g gives Psi = Id");
      DensityPath c = f;
      for (auto& fr : c.frames)
        for (int z = 0; z < g.cell_count(); ++z) fr[z] = 1.0 + 0.2 * std::cos(2.0 * M_PI * g.center(z).x[0]);
      const auto rep = verify_pushforward(flow_map(f, c, 32), f, c);
      out.require(rep.max_w1 <= 2.0 / n, "per-frame W1 <= 2 spacing");
      w1.push_back(rep.max_w1);
    }
    out.require(w1[1] <= kHalvingRatio * w1[0], "W1 halves under grid doubling");
    out.note << " W1(32)=" << w1[0] << " W1(64)=" << w1[1];
  });

  criterion(7, "surgery certification and excess scaling fit", 300.0, [](Outcome& out) {
    const int n = 8;
    const TorusGrid g(1, n);
    const auto rho = DensityPath::uniform(g, uniform_times(2));
    const auto mu = random_bistochastic(g, 1, 0.3);
    const auto zeta = random_bistochastic(g, 2, 0.3);
    std::vector<double> f_eps, f_dmk, excess;
    double worst_res = 0.0, worst_cert = INFINITY;
    for (double s : {0.02, 0.05, 0.1})
      for (double eps : {0.25, 0.125, 0.0625}) {
        const auto nu = blend(mu, zeta, s);
        const auto rep = surgery_pipeline(mu, nu, rho, eps);
        worst_res = std::max(worst_res, rep.admissibility.max_residual);
        const double exact = solve_exact(nu, rep.target).action;
        worst_cert = std::min(worst_cert, rep.certified_action - exact);
        f_eps.push_back(eps);
        f_dmk.push_back(rep.d_mk / std::pow(eps, g.dim() + 2));
        excess.push_back(rep.certified_action - rep.base_action);
      }
    out.require(worst_res <= kAdmissibleTol, "admissible with residual <= 1e-6");
    out.require(worst_cert >= -kCertifiedTol, "certified >= exact");
    const auto c = stats::least_squares2(f_eps, f_dmk, excess);
    out.require(c[0] > 0.0 && c[1] > 0.0, "excess ~ a eps + b d_MK/eps^(d+2) with a, b > 0");
    out.note << " max residual=" << worst_res << " min(certified-exact)=" << worst_cert << " a=" << c[0]
             << " b=" << c[1];
  });

  criterion(8, "Hoelder envelopes show no growth trend (Kendall 5%)", 600.0, [](Outcome& out) {
    ExperimentConfig a;
    a.dim = 1;
    a.n = 4;
    a.steps = 2;
    a.samples = 20;
    const auto ra = run_action_holder(a);
    out.require(ra.trend.p_positive >= kKendallLevel, "action envelope trend");
    ExperimentConfig p = a;
    p.steps = 4;
    p.test_fields = 20;
    p.tau = 0.25;
    const auto rp = run_pressure_holder(p);
    out.require(rp.trend.p_positive >= kKendallLevel, "pressure envelope trend");
    out.note << " action: envelope=" << ra.envelope << " tau=" << ra.trend.tau << " p=" << ra.trend.p_positive
             << "; pressure: envelope=" << rp.envelope << " tau=" << rp.trend.tau << " p=" << rp.trend.p_positive;
  });

  criterion(9, "norm and mollifier suite", 30.0, [](Outcome& out) {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> nd;
    const TorusGrid g(1, 64);
    const auto times = uniform_times(8);
    auto random_path = [&] {
      FieldPath f = FieldPath::zeros(g, times, 1);
      for (auto& fr : f.frames)
        for (auto& v : fr) v = nd(rng);
      return f;
    };
    for (int t = 0; t < 20; ++t) {
      FieldPath a = random_path(), b = random_path(), s = a;
      for (std::size_t k = 0; k < s.frames.size(); ++k) s.frames[k] += b.frames[k];
      FieldPath scaled = a;
      for (auto& fr : scaled.frames) fr *= -2.5;
      out.require(e_norm(a) >= 0.0, "N >= 0");
      out.require(std::abs(e_norm(scaled) - 2.5 * e_norm(a)) <= 1e-12 * e_norm(a), "N homogeneous");
      out.require(e_norm(s) <= e_norm(a) + e_norm(b) + 1e-12, "N triangle inequality");
    }
    FieldPath constant = FieldPath::zeros(g, times, 1);
    for (auto& fr : constant.frames) fr.setConstant(3.0);
    out.require(e_norm(constant) == 0.0, "N vanishes on constants");

    std::uniform_real_distribution<double> u(0.2, 2.0);
    for (double eps : {0.25, 0.125, 0.0625}) {
      const Mollifier k(g, eps);
      Field rho(g.cell_count());
      for (auto& v : rho) v = u(rng);
      rho /= rho.mean();
      const Field m = mollify_density(rho, k);
      out.require(std::abs(total_mass(m, g) - 1.0) <= 1e-12, "mollifier preserves mass");
      out.require(m.minCoeff() >= 0.0, "mollifier preserves nonnegativity");
    }

    DensityPath rho = DensityPath::uniform(g, uniform_times(16));
    for (std::size_t k = 1; k + 1 < rho.times.size(); ++k) {
      for (int z = 0; z < g.cell_count(); ++z) rho.frames[k][z] = u(rng);
      rho.frames[k] /= rho.frames[k].mean();
    }
    std::vector<double> eps_list{0.25, 0.125, 0.0625}, norms;
    for (double eps : eps_list) {
      const DensityPath r = regularize_density(rho, eps);
      for (std::size_t k = 0; k < r.times.size(); ++k)
        if (r.times[k] <= eps || r.times[k] >= 1.0 - eps)
          out.require((r.frames[k].array() - 1.0).abs().maxCoeff() == 0.0, "rho^eps uniform on the end windows");
      norms.push_back(e_norm(r));
    }
    const auto fit = stats::loglog_fit(eps_list, norms);
    out.require(fit.slope >= -(g.dim() + 1) - 1e-9, "N(rho^eps) grows no faster than eps^-(d+1)");
    out.note << " N(rho^eps) slope=" << fit.slope;
  });

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
