// gflow: command-line front end for the studies and the single-instance solvers.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "gflow/experiments.hpp"

using namespace gflow;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  return json::parse(in);
}

class Output {
 public:
  explicit Output(const std::string& dir) : dir_(dir) { fs::create_directories(dir_); }

  std::ofstream open(const std::string& name) {
    files_.push_back(name);
    std::ofstream os(dir_ / name);
    if (!os) throw std::runtime_error("cannot write " + (dir_ / name).string());
    return os;
  }

  void write_json(const std::string& name, const json& j) { open(name) << j.dump(2) << '\n'; }

  void manifest(const std::string& command, const json& config, std::uint64_t seed, double seconds,
                const json& summary) {
    const json m{{"command", command},   {"config", config},   {"config_hash", config_hash(config)},
                 {"seed", seed},         {"outputs", files_},  {"runtime_seconds", seconds},
                 {"summary", summary}};
    std::ofstream os(dir_ / "manifest.json");
    os << m.dump(2) << '\n';
  }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

// ---- studies ----------------------------------------------------------

json study(const Run& run, Output& out, json& config, std::uint64_t& seed) {
  if (run.seed) config["seed"] = *run.seed;
  const ExperimentConfig cfg = ExperimentConfig::from_json(config);
  config = cfg.to_json();
  seed = cfg.seed;
  if (run.command == "action-holder") {
    const auto r = run_action_holder(cfg);
    auto os = out.open("action_holder.csv");
    write_csv(os, r);
    out.write_json("report.json", to_json(r));
    return {{"envelope", r.envelope}, {"slope", r.slope.slope}, {"kendall_p", r.trend.p_positive},
            {"bounded", r.bounded}};
  }
  if (run.command == "pressure-holder") {
    const auto r = run_pressure_holder(cfg);
    auto os = out.open("pressure_holder.csv");
    write_csv(os, r);
    out.write_json("report.json", to_json(r));
    return {{"envelope", r.envelope}, {"envelope_lp", r.envelope_lp}, {"kendall_p", r.trend.p_positive},
            {"bounded", r.bounded}};
  }
  if (run.command == "counterexample") {
    const auto r = run_counterexample(cfg);
    auto os = out.open("counterexample.csv");
    write_csv(os, r.series);
    out.write_json("report.json", to_json(r));
    return {{"headline", r.headline}};
  }
  const auto r = run_diameter(cfg);
  auto os = out.open("diameter.csv");
  write_csv(os, r);
  out.write_json("report.json", to_json(r));
  return {{"max", r.max}, {"mean", r.mean}, {"relative_change", r.relative_change}, {"stable", r.stable}};
}

// ---- single instances -------------------------------------------------

// Random coupling specs without a seed take one derived from the run seed.
json seeded(json spec, std::uint64_t seed, std::uint64_t slot) {
  if (spec.value("kind", "") == "random" && !spec.contains("seed")) spec["seed"] = derive_seed(seed, 5, slot);
  return spec;
}

std::vector<double> times_of(const json& config) {
  if (config.contains("times")) return config.at("times").get<std::vector<double>>();
  return uniform_times(config.value("steps", 2));
}

void write_paths(std::ostream& os, const GeneralizedFlow& eta) {
  const GeneralizedFlow flow = eta.is_explicit() ? eta : materialize(eta);
  os << "mass";
  for (int k = 0; k <= flow.lattice.steps(); ++k) os << ",cell" << k;
  os << '\n';
  os.precision(17);
  for (const auto& p : flow.explicit_paths().paths) {
    if (p.mass <= 0.0) continue;
    os << p.mass;
    for (int c : p.cells) os << ',' << c;
    os << '\n';
  }
}

void write_pressure(std::ostream& os, const PressureField& p) {
  os << "frame,time,weight,cell,pressure\n";
  os.precision(17);
  for (std::size_t k = 0; k < p.frames.size(); ++k)
    for (int z = 0; z < p.grid.cell_count(); ++z)
      os << k + 1 << ',' << p.times[k] << ',' << p.weights[k] << ',' << z << ',' << p.frames[k][z] << '\n';
}

json solve(Output& out, const json& config, std::uint64_t seed) {
  const TorusGrid grid(config.value("dim", 1), config.at("n").get<int>());
  const auto times = times_of(config);
  const auto gamma = coupling_from_spec(grid, seeded(config.at("gamma"), seed, 0));
  const auto rho = density_from_spec(grid, times, config.value("rho", json{{"kind", "uniform"}}));
  const std::string solver = config.value("solver", "exact");
  const std::uint64_t budget = config.value("budget", std::uint64_t{1'000'000});
  json summary;
  if (solver == "exact") {
    const auto s = solve_exact(gamma, rho, budget);
    const auto la = verify_least_action(s.flow, s.pressure, s.endpoint_duals);
    summary = {{"action", s.action},
               {"dual_objective", s.dual_objective},
               {"primal_residual", s.primal_residual},
               {"worst_slack", la.worst_slack},
               {"charged_paths", la.charged_paths}};
    auto pp = out.open("pressure.csv");
    write_pressure(pp, s.pressure);
    auto fp = out.open("paths.csv");
    write_paths(fp, s.flow);
  } else if (solver == "entropic") {
    const double reg = config.value("reg", 0.05);
    const auto s = solve_entropic(gamma, rho, reg);
    summary = {{"action", s.action},
               {"objective", s.objective},
               {"reg", reg},
               {"iterations", s.stats.iterations},
               {"residual", s.stats.residual},
               {"converged", s.stats.converged}};
    if (config.contains("reg_schedule")) {
      const auto ex = extrapolate_entropic(gamma, rho, config.at("reg_schedule").get<std::vector<double>>(),
                                           Extrapolation::Exponential);
      summary["extrapolated_action"] = ex.value;
    }
    auto pp = out.open("pressure.csv");
    write_pressure(pp, s.pressure);
  } else {
    throw std::invalid_argument("solve: solver must be exact or entropic");
  }
  out.write_json("gamma.json", to_json(gamma));
  out.write_json("result.json", summary);
  return summary;
}

json surgery(Output& out, const json& config, std::uint64_t seed) {
  const TorusGrid grid(config.value("dim", 1), config.at("n").get<int>());
  const auto times = times_of(config);
  const auto mu = coupling_from_spec(grid, seeded(config.at("mu"), seed, 0));
  BistochasticMeasure nu = coupling_from_spec(grid, seeded(config.at("nu"), seed, 1));
  if (config.contains("blend")) nu = blend(mu, nu, config.at("blend").get<double>());
  const auto rho = density_from_spec(grid, times, config.value("rho", json{{"kind", "uniform"}}));
  SurgeryOptions opt;
  opt.smallness_constant = config.value("smallness_constant", 1.0);
  opt.budget = config.value("budget", std::uint64_t{1'000'000});
  const auto r = surgery_pipeline(mu, nu, rho, config.at("eps").get<double>(), opt);
  const json report = to_json(r);
  out.write_json("surgery.json", report);
  auto bs = out.open("budget.csv");
  bs.precision(17);
  bs << "term,value\nestim1," << r.budget.estim1 << "\nestim2," << r.budget.estim2 << "\nestim3," << r.budget.estim3
     << "\ntotal," << r.budget.total << '\n';
  auto fp = out.open("paths.csv");
  write_paths(fp, r.flow);
  return {{"base_action", r.base_action},
          {"certified_action", r.certified_action},
          {"d_mk", r.d_mk},
          {"admissible", r.admissibility.admissible},
          {"max_residual", r.admissibility.max_residual}};
}

json dacmoser(Output& out, const json& config) {
  const TorusGrid grid(config.value("dim", 1), config.at("n").get<int>());
  const auto times = times_of(config);
  const auto f = density_from_spec(grid, times, config.value("f", json{{"kind", "uniform"}}));
  const auto g = density_from_spec(grid, times, config.at("g"));
  FlowMapOptions opt;
  opt.ode_steps = config.value("ode_steps", opt.ode_steps);
  const auto map = flow_map(f, g, opt);
  const auto rep = verify_pushforward(map, f, g);
  out.write_json("map.json", to_json(map));
  auto os = out.open("pushforward.csv");
  os.precision(17);
  os << "frame,time,w1,tv\n";
  for (std::size_t k = 0; k < rep.w1.size(); ++k)
    os << k << ',' << map.times[k] << ',' << rep.w1[k] << ',' << rep.tv[k] << '\n';
  return {{"norm_excess", map.norm_excess},
          {"ode_steps", map.ode_steps},
          {"min_jacobian", map.min_jacobian},
          {"max_w1", rep.max_w1},
          {"max_tv", rep.max_tv},
          {"mass_error", rep.mass_error}};
}

int execute(const Run& run) {
  const auto start = std::chrono::steady_clock::now();
  json config = read_json(run.config_path);
  Output out(run.out_dir);
  std::uint64_t seed = run.seed.value_or(config.value("seed", std::uint64_t{0}));
  json summary;
  if (run.command == "solve" || run.command == "surgery" || run.command == "dacmoser") {
    config["seed"] = seed;
    if (run.command == "solve") summary = solve(out, config, seed);
    else if (run.command == "surgery") summary = surgery(out, config, seed);
    else summary = dacmoser(out, config);
  } else {
    summary = study(run, out, config, seed);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.manifest(run.command, config, seed, secs, summary);
  std::cout << summary.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized incompressible flow lab"};
  app.require_subcommand(1);
  Run run;
  for (const char* name :
       {"action-holder", "pressure-holder", "counterexample", "diameter", "solve", "surgery", "dacmoser"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("config", run.config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", run.seed, "base seed (overrides the config)");
    sub->add_option("--out-dir", run.out_dir, "output directory")->capture_default_str();
    sub->callback([&run, name] { run.command = name; });
  }
  CLI11_PARSE(app, argc, argv);
  try {
    return execute(run);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
