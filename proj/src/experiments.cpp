#include "gflow/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "gflow/dacmoser.hpp"

namespace gflow {

using nlohmann::json;

namespace {

bool strictly_decreasing_positive(const std::vector<double>& v) {
  if (v.empty()) return false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0)) return false;
    if (i > 0 && !(v[i] < v[i - 1])) return false;
  }
  return true;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("ExperimentConfig: " + what);
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

void ExperimentConfig::validate() const {
  require(dim == 1 || dim == 2, "dim must be 1 or 2");
  require(n >= 2, "n must be at least 2");
  require(steps >= 1, "steps must be at least 1");
  require(samples >= 1, "samples must be positive");
  require(solver == "exact" || solver == "entropic", "solver must be exact or entropic");
  require(reg > 0.0, "reg must be positive");
  require(strictly_decreasing_positive(reg_schedule), "reg_schedule must be positive and strictly decreasing");
  require(heat > 0.0, "heat must be positive");
  require(blend_min > 0.0 && blend_min < blend_max && blend_max <= 1.0, "need 0 < blend_min < blend_max <= 1");
  require(heat_min > 0.0 && heat_min <= heat_max, "need 0 < heat_min <= heat_max");
  require(tau > 0.0 && tau <= 0.25, "tau must lie in (0, 1/4]");
  require(test_fields >= 1, "test_fields must be positive");
  require(strictly_decreasing_positive(eps_schedule) && eps_schedule.front() <= 0.25,
          "eps_schedule must be positive, strictly decreasing and at most 1/4");
  require(strictly_decreasing_positive(delta_schedule) && delta_schedule.front() < 1.0,
          "delta_schedule must be positive, strictly decreasing and below 1");
  require(m >= 4 && m % 2 == 0, "m must be even and at least 4");
  require(!n_list.empty(), "n_list must not be empty");
  for (int k : n_list) require(k >= 1 && m % (2 * k) == 0, "every n in n_list must divide m / 2");
  require(budget >= 1, "budget must be positive");
  require(threads >= 0, "threads must be nonnegative");
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("ExperimentConfig: expected a JSON object");
  ExperimentConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    if (k == "dim") c.dim = v.get<int>();
    else if (k == "n") c.n = v.get<int>();
    else if (k == "steps") c.steps = v.get<int>();
    else if (k == "samples") c.samples = v.get<int>();
    else if (k == "seed") c.seed = v.get<std::uint64_t>();
    else if (k == "solver") c.solver = v.get<std::string>();
    else if (k == "reg") c.reg = v.get<double>();
    else if (k == "reg_schedule") c.reg_schedule = v.get<std::vector<double>>();
    else if (k == "heat") c.heat = v.get<double>();
    else if (k == "blend_min") c.blend_min = v.get<double>();
    else if (k == "blend_max") c.blend_max = v.get<double>();
    else if (k == "heat_min") c.heat_min = v.get<double>();
    else if (k == "heat_max") c.heat_max = v.get<double>();
    else if (k == "tau") c.tau = v.get<double>();
    else if (k == "test_fields") c.test_fields = v.get<int>();
    else if (k == "eps_schedule") c.eps_schedule = v.get<std::vector<double>>();
    else if (k == "delta_schedule") c.delta_schedule = v.get<std::vector<double>>();
    else if (k == "diagnostics") c.diagnostics = v.get<bool>();
    else if (k == "m") c.m = v.get<int>();
    else if (k == "n_list") c.n_list = v.get<std::vector<int>>();
    else if (k == "budget") c.budget = v.get<std::uint64_t>();
    else if (k == "threads") c.threads = v.get<int>();
    else throw std::invalid_argument("ExperimentConfig: unknown key '" + k + "'");
  }
  c.validate();
  return c;
}

json ExperimentConfig::to_json() const {
  return json{{"dim", dim},
              {"n", n},
              {"steps", steps},
              {"samples", samples},
              {"seed", seed},
              {"solver", solver},
              {"reg", reg},
              {"reg_schedule", reg_schedule},
              {"heat", heat},
              {"blend_min", blend_min},
              {"blend_max", blend_max},
              {"heat_min", heat_min},
              {"heat_max", heat_max},
              {"tau", tau},
              {"test_fields", test_fields},
              {"eps_schedule", eps_schedule},
              {"delta_schedule", delta_schedule},
              {"diagnostics", diagnostics},
              {"m", m},
              {"n_list", n_list},
              {"budget", budget},
              {"threads", threads}};
}

std::string config_hash(const json& config) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  return rng();
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, count));
  std::vector<std::exception_ptr> errors(count);
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---- instance builders --------------------------------------------------

BistochasticMeasure coupling_from_spec(const TorusGrid& grid, const json& spec) {
  const std::string kind = spec.at("kind").get<std::string>();
  if (kind == "identity") return gamma_identity(grid);
  if (kind == "product") return gamma_product(grid);
  if (kind == "shift") {
    const auto off = spec.at("offset").get<std::vector<int>>();
    if (off.empty() || off.size() > 2) throw std::invalid_argument("coupling_from_spec: offset needs 1 or 2 entries");
    return gamma_shift(grid, {off[0], off.size() > 1 ? off[1] : 0});
  }
  if (kind == "random")
    return random_bistochastic(grid, spec.at("seed").get<std::uint64_t>(), spec.value("heat", 0.3));
  if (kind == "inline") {
    BistochasticMeasure m = measure_from_json(spec);
    if (m.grid != grid) throw DimensionMismatch("coupling_from_spec: inline measure on a different grid");
    return m;
  }
  throw std::invalid_argument("coupling_from_spec: unknown kind '" + kind + "'");
}

DensityPath density_from_spec(const TorusGrid& grid, const std::vector<double>& times, const json& spec) {
  const std::string kind = spec.at("kind").get<std::string>();
  if (kind == "uniform") return DensityPath::uniform(grid, times);
  if (kind == "wavy") {
    const double amp = spec.at("amplitude").get<double>();
    const int mode = spec.value("mode", 1);
    if (!(std::abs(amp) < 1.0)) throw std::invalid_argument("density_from_spec: |amplitude| must be below 1");
    DensityPath p = DensityPath::uniform(grid, times);
    for (std::size_t k = 1; k + 1 < times.size(); ++k)
      for (int z = 0; z < grid.cell_count(); ++z)
        p.frames[k][z] = 1.0 + amp * std::sin(2.0 * M_PI * mode * grid.center(z).x[0]);
    return p;
  }
  if (kind == "inline") {
    DensityPath p = density_path_from_json(spec);
    if (p.grid != grid || p.times != times) throw DimensionMismatch("density_from_spec: inline path on other grids");
    return p;
  }
  throw std::invalid_argument("density_from_spec: unknown kind '" + kind + "'");
}

FieldPath random_test_field(const TorusGrid& grid, const std::vector<double>& times, double tau, std::mt19937_64& rng) {
  if (!(tau > 0.0 && tau < 0.5)) throw std::invalid_argument("random_test_field: tau must lie in (0, 1/2)");
  const int d = grid.dim();
  FieldPath xi = FieldPath::zeros(grid, times, d);
  xi.tau = tau;
  std::normal_distribution<double> normal;
  // two modes per axis, each with a constant and a linear-in-time amplitude
  constexpr int modes = 2;
  struct Coef {
    double c[2][2][2];  // [mode freq][cos, sin][const, linear]
  };
  std::vector<std::vector<Coef>> coef(d, std::vector<Coef>(d));  // [component][axis]
  for (auto& comp : coef)
    for (auto& axis : comp)
      for (auto& a : axis.c)
        for (auto& b : a)
          for (double& v : b) v = normal(rng);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    if (t <= tau || t >= 1.0 - tau) continue;
    const double s = std::sin(M_PI * (t - tau) / (1.0 - 2.0 * tau));
    const double profile = s * s;
    for (int z = 0; z < grid.cell_count(); ++z) {
      const Point p = grid.center(z);
      for (int c = 0; c < d; ++c) {
        double v = 0.0;
        for (int a = 0; a < d; ++a)
          for (int f = 0; f < modes; ++f) {
            const double arg = 2.0 * M_PI * (f + 1) * p.x[a];
            const auto& cf = coef[c][a].c[f];
            v += std::cos(arg) * (cf[0][0] + (t - 0.5) * cf[0][1]) + std::sin(arg) * (cf[1][0] + (t - 0.5) * cf[1][1]);
          }
        xi.frames[k][z * d + c] = profile * v;
      }
    }
  }
  const double nrm = e_norm(xi);
  if (!(nrm > 0.0)) throw std::invalid_argument("random_test_field: no lattice time lies inside (tau, 1 - tau)");
  for (auto& f : xi.frames) f /= nrm;
  return xi;
}

FieldPath divergence(const FieldPath& xi) {
  const TorusGrid& g = xi.grid;
  const int d = g.dim();
  if (xi.components != d) throw DimensionMismatch("divergence: need one component per axis");
  FieldPath out = FieldPath::zeros(g, xi.times, 1);
  out.tau = xi.tau;
  const double inv2h = 0.5 / g.spacing();
  for (int k = 0; k < xi.frame_count(); ++k)
    for (int z = 0; z < g.cell_count(); ++z) {
      double s = 0.0;
      for (int a = 0; a < d; ++a) {
        std::array<int, 2> e{0, 0};
        e[a] = 1;
        const int up = g.shifted(z, e);
        e[a] = -1;
        const int down = g.shifted(z, e);
        s += (xi.frames[k][up * d + a] - xi.frames[k][down * d + a]) * inv2h;
      }
      out.frames[k][z] = s;
    }
  return out;
}

namespace {

// cells and weights receiving the mass of cell z moved by delta * xi_k(z)
Deposit moved_deposit(const FieldPath& xi, int k, int z, double delta) {
  const TorusGrid& g = xi.grid;
  const int d = g.dim();
  bool still = true;
  for (int c = 0; c < d; ++c) still = still && delta * xi.frames[k][z * d + c] == 0.0;
  if (still) return Deposit{{z, 0, 0, 0}, {1.0, 0.0, 0.0, 0.0}, 1};
  Point p = g.center(z);
  for (int c = 0; c < d; ++c) p.x[c] = wrap_unit(p.x[c] + delta * xi.frames[k][z * d + c]);
  return cic_deposit(g, p);
}

}  // namespace

DensityPath push_density(const FieldPath& xi, double delta) {
  const TorusGrid& g = xi.grid;
  if (xi.components != g.dim()) throw DimensionMismatch("push_density: need one component per axis");
  DensityPath rho = DensityPath::uniform(g, xi.times);
  for (int k = 0; k < xi.frame_count(); ++k) {
    Field f = Field::Zero(g.cell_count());
    for (int z = 0; z < g.cell_count(); ++z) {
      const Deposit dep = moved_deposit(xi, k, z, delta);
      for (int i = 0; i < dep.count; ++i) f[dep.cells[i]] += dep.weights[i];
    }
    rho.frames[k] = f;
  }
  return rho;
}

GeneralizedFlow perturb_flow(const GeneralizedFlow& eta, const FieldPath& xi, double delta) {
  const PathLattice& lat = eta.lattice;
  if (xi.grid != lat.grid() || xi.times != lat.times()) throw DimensionMismatch("perturb_flow: field and flow lattices differ");
  if (xi.components != lat.grid().dim()) throw DimensionMismatch("perturb_flow: need one component per axis");
  const GeneralizedFlow src = eta.is_explicit() ? eta : materialize(eta);
  const int K = lat.steps();
  std::vector<std::vector<Deposit>> moved(K + 1);
  for (int k = 0; k <= K; ++k)
    for (int z = 0; z < lat.grid().cell_count(); ++z) moved[k].push_back(moved_deposit(xi, k, z, delta));

  std::map<Path, double> acc;
  Path w(K + 1);
  for (const auto& wp : src.explicit_paths().paths) {
    if (wp.mass == 0.0) continue;
    // odometer over the deposit choices of every time
    std::vector<int> pick(K + 1, 0);
    while (true) {
      double m = wp.mass;
      for (int k = 0; k <= K; ++k) {
        const Deposit& dep = moved[k][wp.cells[k]];
        w[k] = dep.cells[pick[k]];
        m *= dep.weights[pick[k]];
      }
      if (m > 0.0) acc[w] += m;
      int k = K;
      for (; k >= 0; --k) {
        if (++pick[k] < moved[k][wp.cells[k]].count) break;
        pick[k] = 0;
      }
      if (k < 0) break;
    }
  }
  ExplicitFlow out;
  out.paths.reserve(acc.size());
  for (const auto& [cells, mass] : acc) out.paths.push_back({cells, mass});
  return {lat, out};
}

// ---- action envelope ----------------------------------------------------

namespace {

double log_spaced(double hi, double lo, int i, int count) {
  if (count == 1) return hi;
  return hi * std::pow(lo / hi, static_cast<double>(i) / (count - 1));
}

double envelope_over(const std::vector<double>& ratio, std::size_t count) {
  double e = 0.0;
  for (std::size_t i = 0; i < std::min(count, ratio.size()); ++i) e = std::max(e, ratio[i]);
  return e;
}

stats::KendallResult growth_trend(const std::vector<double>& dmk, const std::vector<double>& ratio) {
  std::vector<double> neg(dmk.size());
  for (std::size_t i = 0; i < dmk.size(); ++i) neg[i] = -dmk[i];
  return stats::kendall_tau(neg, ratio);
}

}  // namespace

ActionHolderReport run_action_holder(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.samples < 10) throw std::invalid_argument("run_action_holder: need at least 10 samples");
  const TorusGrid grid(cfg.dim, cfg.n);
  const PathLattice lat = PathLattice::uniform(grid, cfg.steps);
  const DensityPath lambda = DensityPath::uniform(grid, lat.times());

  ActionHolderReport rep;
  rep.exponent = 1.0 / (cfg.dim + 3);
  rep.rows.resize(cfg.samples);
  auto action = [&](const BistochasticMeasure& g) {
    if (cfg.solver == "exact") return solve_exact(g, lat, cfg.budget).action;
    return extrapolate_entropic(g, lambda, cfg.reg_schedule, Extrapolation::Exponential).value;
  };
  parallel_for(cfg.samples, cfg.threads, [&](int i) {
    ActionHolderRow& row = rep.rows[i];
    row.index = i;
    row.mu_seed = derive_seed(cfg.seed, 1, i);
    row.zeta_seed = derive_seed(cfg.seed, 2, i);
    row.blend = log_spaced(cfg.blend_max, cfg.blend_min, i, cfg.samples);
    const auto mu = random_bistochastic(grid, row.mu_seed, cfg.heat);
    const auto zeta = random_bistochastic(grid, row.zeta_seed, cfg.heat);
    const auto nu = blend(mu, zeta, row.blend);
    row.dmk = mk_distance(mu, nu).distance;
    row.action_mu = action(mu);
    row.action_nu = action(nu);
    row.delta_action = std::abs(row.action_nu - row.action_mu);
    row.ratio = row.dmk > 0.0 ? row.delta_action / std::pow(row.dmk, rep.exponent) : 0.0;
  });

  std::vector<double> d, da, ratio;
  for (const auto& r : rep.rows) {
    d.push_back(r.dmk);
    da.push_back(r.delta_action);
    ratio.push_back(r.ratio);
  }
  rep.envelope = envelope_over(ratio, ratio.size());
  rep.envelope_half = envelope_over(ratio, ratio.size() / 2);
  rep.slope = stats::loglog_fit(d, da);
  rep.slope_ok = rep.slope.n >= 2 && rep.slope.slope >= rep.exponent - 0.1;
  rep.trend = growth_trend(d, ratio);
  rep.bounded = rep.trend.p_positive >= 0.05;
  return rep;
}

// ---- pressure envelope --------------------------------------------------

namespace {

Field centered_frame(const Field& f) { return (f.array() - f.mean()).matrix(); }

// zero-mean scalar frames r_k = rho_k - 1 on the full time grid
FieldPath density_excess(const DensityPath& rho) {
  FieldPath r = FieldPath::zeros(rho.grid, rho.times, 1);
  for (int k = 0; k < rho.frame_count(); ++k) r.frames[k] = centered_frame(rho.frames[k]);
  return r;
}

struct PairSolution {
  BistochasticMeasure mu, nu;
  ExactSolution exact_mu, exact_nu;
  EntropicSolution ent_mu, ent_nu;
};

PressureDiagnostics run_diagnostics(const ExperimentConfig& cfg, const PairSolution& ps, int pair, int field,
                                    const FieldPath& xi, double dmk) {
  PressureDiagnostics diag;
  diag.pair = pair;
  diag.field = field;
  const FieldPath div = divergence(xi);
  const double base_mu = ps.exact_mu.action;
  const double div_pair = extract_pressure_pairing(ps.exact_mu.pressure, div);

  const int nd = static_cast<int>(cfg.delta_schedule.size());
  const int ne = static_cast<int>(cfg.eps_schedule.size());
  diag.perturbation.resize(nd);
  diag.multiplier.resize(nd * ne);
  diag.surgery.resize(nd * ne);
  parallel_for(nd, cfg.threads, [&](int i) {
    const double delta = cfg.delta_schedule[i];
    const DensityPath rho = push_density(xi, delta);
    PerturbationRow& row = diag.perturbation[i];
    row.delta = delta;
    row.action_rho_delta = solve_exact(ps.mu, rho, cfg.budget).action;
    row.action_perturbed = flow_action(perturb_flow(ps.exact_mu.flow, xi, delta));
    const double first = extract_pressure_pairing(ps.exact_mu.pressure, density_excess(rho));
    row.defect = row.action_rho_delta - base_mu - first;
    row.defect_over_delta2 = row.defect / (delta * delta);
    row.linearization_error = first + delta * div_pair;
  });
  for (const auto& r : diag.perturbation) diag.perturbation_constant = std::max(diag.perturbation_constant, r.defect_over_delta2);

  parallel_for(nd * ne, cfg.threads, [&](int idx) {
    const double delta = cfg.delta_schedule[idx / ne];
    const double eps = cfg.eps_schedule[idx % ne];
    const DensityPath rho = push_density(xi, delta);
    const DensityPath rho_eps = regularize_density(rho, eps);
    MultiplierRow& mr = diag.multiplier[idx];
    mr.delta = delta;
    mr.eps = eps;
    mr.action_nu = ps.exact_nu.action;
    mr.action_nu_reg = solve_exact(ps.nu, rho_eps, cfg.budget).action;
    const FieldPath excess = density_excess(rho_eps);
    mr.gap_lp = mr.action_nu_reg - mr.action_nu - extract_pressure_pairing(ps.exact_nu.pressure, excess);
    mr.gap_entropic = mr.action_nu_reg - mr.action_nu - extract_pressure_pairing(ps.ent_nu.pressure, excess);

    SurgeryRow& sr = diag.surgery[idx];
    sr.delta = delta;
    sr.eps = eps;
    sr.dmk = dmk;
    sr.scale = eps + dmk / std::pow(eps, (cfg.dim + 1) * (cfg.dim + 2));
    try {
      SurgeryOptions opt;
      opt.budget = cfg.budget;
      const SurgeryReport s = surgery_pipeline(ps.mu, ps.nu, rho, eps, opt);
      sr.certified = s.certified_action;
      sr.exact = solve_exact(ps.nu, s.target, cfg.budget).action;
      sr.excess = sr.certified - sr.exact;
      sr.admissible = s.admissibility.admissible;
    } catch (const SurgeryError&) {
      sr.certified = sr.exact = sr.excess = nan();
      sr.admissible = false;
    } catch (const BudgetExceeded&) {
      sr.certified = sr.exact = sr.excess = nan();
      sr.admissible = false;
    }
  });
  return diag;
}

}  // namespace

PressureHolderReport run_pressure_holder(const ExperimentConfig& cfg) {
  cfg.validate();
  const TorusGrid grid(cfg.dim, cfg.n);
  const PathLattice lat = PathLattice::uniform(grid, cfg.steps);
  const DensityPath lambda = DensityPath::uniform(grid, lat.times());
  if (lat.steps() < 2) throw std::invalid_argument("run_pressure_holder: pressure needs an interior time");

  std::vector<FieldPath> fields;
  std::vector<FieldPath> divs;
  for (int j = 0; j < cfg.test_fields; ++j) {
    std::mt19937_64 rng(derive_seed(cfg.seed, 3, j));
    fields.push_back(random_test_field(grid, lat.times(), cfg.tau, rng));
    divs.push_back(divergence(fields.back()));
  }

  PressureHolderReport rep;
  rep.exponent = 1.0 / (2.0 + 2.0 * (cfg.dim + 1) * (cfg.dim + 2));
  rep.rows.resize(cfg.samples);
  std::vector<PairSolution> keep(1);
  parallel_for(cfg.samples, cfg.threads, [&](int i) {
    PressureHolderRow& row = rep.rows[i];
    row.index = i;
    row.mu_seed = derive_seed(cfg.seed, 1, i);
    row.zeta_seed = derive_seed(cfg.seed, 2, i);
    row.blend = log_spaced(cfg.blend_max, cfg.blend_min, i, cfg.samples);
    PairSolution ps;
    ps.mu = random_bistochastic(grid, row.mu_seed, cfg.heat);
    ps.nu = blend(ps.mu, random_bistochastic(grid, row.zeta_seed, cfg.heat), row.blend);
    row.dmk = mk_distance(ps.mu, ps.nu).distance;
    ps.ent_mu = solve_entropic(ps.mu, lambda, cfg.reg);
    ps.ent_nu = solve_entropic(ps.nu, lambda, cfg.reg);
    row.entropic_residual = std::max(ps.ent_mu.stats.residual, ps.ent_nu.stats.residual);
    if (!(row.entropic_residual <= 1e-6))
      throw std::runtime_error("run_pressure_holder: entropic pressure selection did not converge");
    ps.exact_mu = solve_exact(ps.mu, lat, cfg.budget);
    ps.exact_nu = solve_exact(ps.nu, lat, cfg.budget);
    for (int j = 0; j < cfg.test_fields; ++j) {
      const double g = std::abs(extract_pressure_pairing(ps.ent_nu.pressure, divs[j]) -
                                extract_pressure_pairing(ps.ent_mu.pressure, divs[j]));
      const double g_lp = std::abs(extract_pressure_pairing(ps.exact_nu.pressure, divs[j]) -
                                   extract_pressure_pairing(ps.exact_mu.pressure, divs[j]));
      if (g > row.gap || j == 0) {
        row.gap = g;
        row.worst_field = j;
      }
      row.gap_lp = std::max(row.gap_lp, g_lp);
    }
    row.ratio = row.dmk > 0.0 ? row.gap / std::pow(row.dmk, rep.exponent) : 0.0;
    if (i == 0) keep[0] = std::move(ps);
  });

  std::vector<double> d, ratio, ratio_lp;
  for (const auto& r : rep.rows) {
    d.push_back(r.dmk);
    ratio.push_back(r.ratio);
    ratio_lp.push_back(r.dmk > 0.0 ? r.gap_lp / std::pow(r.dmk, rep.exponent) : 0.0);
  }
  rep.envelope = envelope_over(ratio, ratio.size());
  rep.envelope_half = envelope_over(ratio, ratio.size() / 2);
  rep.envelope_lp = envelope_over(ratio_lp, ratio_lp.size());
  if (rep.rows.size() >= 2) {
    rep.trend = growth_trend(d, ratio);
    rep.bounded = rep.trend.p_positive >= 0.05;
  }
  if (cfg.diagnostics) {
    const auto& row = rep.rows[0];
    rep.diagnostics.push_back(run_diagnostics(cfg, keep[0], 0, row.worst_field, fields[row.worst_field], row.dmk));
  }
  return rep;
}

// ---- counterexample and diameter -----------------------------------------

CounterexampleReport run_counterexample(const ExperimentConfig& cfg) {
  cfg.validate();
  CounterexampleReport rep;
  rep.series = discontinuity_series(cfg.n_list, cfg.m);
  rep.headline = rep.series.distances_decreasing && rep.series.actions_above_bound;
  return rep;
}

DiameterReport run_diameter(const ExperimentConfig& cfg) {
  cfg.validate();
  const TorusGrid grid(cfg.dim, cfg.n);
  const PathLattice lat = PathLattice::uniform(grid, cfg.steps);
  const int count = 2 + 2 * cfg.samples;
  DiameterReport rep;
  rep.rows.resize(count);
  parallel_for(count, cfg.threads, [&](int i) {
    DiameterRow& row = rep.rows[i];
    row.index = i;
    BistochasticMeasure g;
    if (i == 0) {
      row.kind = "identity";
      g = gamma_identity(grid);
    } else if (i == 1) {
      row.kind = "shift";
      g = gamma_shift(grid, {cfg.n / 2, 0});
    } else {
      row.kind = "random";
      row.seed = derive_seed(cfg.seed, 4, i - 2);
      std::mt19937_64 rng(row.seed);
      std::uniform_real_distribution<double> u(std::log(cfg.heat_min), std::log(cfg.heat_max));
      row.heat = std::exp(u(rng));
      g = random_bistochastic(grid, row.seed, row.heat);
    }
    row.action = solve_exact(g, lat, cfg.budget).action;
  });
  rep.min = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (int i = 0; i < count; ++i) {
    const double a = rep.rows[i].action;
    rep.max = std::max(rep.max, a);
    rep.min = std::min(rep.min, a);
    sum += a;
    if (i < 2 + cfg.samples) rep.max_half = std::max(rep.max_half, a);
  }
  rep.mean = sum / count;
  rep.relative_change = rep.max_half > 0.0 ? (rep.max - rep.max_half) / rep.max_half
                                           : (rep.max > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  rep.stable = rep.relative_change < 0.1;
  return rep;
}

// ---- serialization ----------------------------------------------------

namespace {

json to_json(const stats::KendallResult& k) {
  return json{{"tau", num(k.tau)}, {"z", num(k.z)}, {"p_positive", num(k.p_positive)}, {"n", k.n}};
}

json to_json(const stats::LinearFit& f) {
  return json{{"slope", num(f.slope)}, {"intercept", num(f.intercept)}, {"r2", num(f.r2)}, {"n", f.n}};
}

}  // namespace

json to_json(const ActionHolderReport& r) {
  json rows = json::array();
  for (const auto& x : r.rows)
    rows.push_back({{"index", x.index},
                    {"mu_seed", x.mu_seed},
                    {"zeta_seed", x.zeta_seed},
                    {"blend", x.blend},
                    {"dmk", x.dmk},
                    {"action_mu", x.action_mu},
                    {"action_nu", x.action_nu},
                    {"delta_action", x.delta_action},
                    {"ratio", x.ratio}});
  return json{{"exponent", r.exponent}, {"envelope", r.envelope}, {"envelope_half", r.envelope_half},
              {"slope", to_json(r.slope)}, {"slope_ok", r.slope_ok}, {"trend", to_json(r.trend)},
              {"bounded", r.bounded},     {"rows", rows}};
}

json to_json(const PressureHolderReport& r) {
  json rows = json::array();
  for (const auto& x : r.rows)
    rows.push_back({{"index", x.index},
                    {"mu_seed", x.mu_seed},
                    {"zeta_seed", x.zeta_seed},
                    {"blend", x.blend},
                    {"dmk", x.dmk},
                    {"gap", x.gap},
                    {"gap_lp", x.gap_lp},
                    {"worst_field", x.worst_field},
                    {"ratio", x.ratio},
                    {"entropic_residual", x.entropic_residual}});
  json diags = json::array();
  for (const auto& d : r.diagnostics) {
    json pert = json::array(), mult = json::array(), surg = json::array();
    for (const auto& p : d.perturbation)
      pert.push_back({{"delta", p.delta},
                      {"action_rho_delta", p.action_rho_delta},
                      {"action_perturbed", p.action_perturbed},
                      {"defect", p.defect},
                      {"defect_over_delta2", p.defect_over_delta2},
                      {"linearization_error", p.linearization_error}});
    for (const auto& m : d.multiplier)
      mult.push_back({{"delta", m.delta},
                      {"eps", m.eps},
                      {"action_nu", m.action_nu},
                      {"action_nu_reg", m.action_nu_reg},
                      {"gap_lp", m.gap_lp},
                      {"gap_entropic", m.gap_entropic}});
    for (const auto& s : d.surgery)
      surg.push_back({{"delta", s.delta},
                      {"eps", s.eps},
                      {"dmk", s.dmk},
                      {"certified", num(s.certified)},
                      {"exact", num(s.exact)},
                      {"excess", num(s.excess)},
                      {"scale", s.scale},
                      {"admissible", s.admissible}});
    diags.push_back({{"pair", d.pair},
                     {"field", d.field},
                     {"perturbation", pert},
                     {"perturbation_constant", d.perturbation_constant},
                     {"multiplier", mult},
                     {"surgery", surg}});
  }
  return json{{"exponent", r.exponent}, {"envelope", r.envelope}, {"envelope_half", r.envelope_half},
              {"envelope_lp", r.envelope_lp}, {"trend", to_json(r.trend)}, {"bounded", r.bounded},
              {"rows", rows},                 {"diagnostics", diags}};
}

json to_json(const CounterexampleReport& r) {
  json rows = json::array();
  for (const auto& x : r.series.rows)
    rows.push_back({{"n", x.n ? json(*x.n) : json("inf")},
                    {"dmk", x.dmk},
                    {"action_lower", x.action_lower},
                    {"action_computed", x.action_computed}});
  return json{{"m", r.series.m},
              {"distances_decreasing", r.series.distances_decreasing},
              {"actions_above_bound", r.series.actions_above_bound},
              {"headline", r.headline},
              {"rows", rows}};
}

json to_json(const DiameterReport& r) {
  json rows = json::array();
  for (const auto& x : r.rows)
    rows.push_back({{"index", x.index}, {"kind", x.kind}, {"seed", x.seed}, {"heat", x.heat}, {"action", x.action}});
  return json{{"max", r.max},   {"max_half", r.max_half}, {"mean", r.mean},
              {"min", r.min},   {"relative_change", num(r.relative_change)},
              {"stable", r.stable}, {"rows", rows}};
}

void write_csv(std::ostream& os, const ActionHolderReport& r) {
  os << "index,mu_seed,zeta_seed,blend,dmk,action_mu,action_nu,delta_action,ratio\n";
  os.precision(17);
  for (const auto& x : r.rows)
    os << x.index << ',' << x.mu_seed << ',' << x.zeta_seed << ',' << x.blend << ',' << x.dmk << ',' << x.action_mu
       << ',' << x.action_nu << ',' << x.delta_action << ',' << x.ratio << '\n';
}

void write_csv(std::ostream& os, const PressureHolderReport& r) {
  os << "index,mu_seed,zeta_seed,blend,dmk,gap,gap_lp,worst_field,ratio,entropic_residual\n";
  os.precision(17);
  for (const auto& x : r.rows)
    os << x.index << ',' << x.mu_seed << ',' << x.zeta_seed << ',' << x.blend << ',' << x.dmk << ',' << x.gap << ','
       << x.gap_lp << ',' << x.worst_field << ',' << x.ratio << ',' << x.entropic_residual << '\n';
}

void write_csv(std::ostream& os, const DiameterReport& r) {
  os << "index,kind,seed,heat,action\n";
  os.precision(17);
  for (const auto& x : r.rows) os << x.index << ',' << x.kind << ',' << x.seed << ',' << x.heat << ',' << x.action << '\n';
}

}  // namespace gflow
