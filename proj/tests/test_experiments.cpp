#include <cmath>
#include <sstream>

#include "doctest.h"
#include "gflow/experiments.hpp"

using namespace gflow;
using nlohmann::json;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.samples = 10;
  c.test_fields = 4;
  c.threads = 2;
  c.diagnostics = false;
  return c;
}

double frame_mean(const Field& f) { return f.mean(); }

}  // namespace

TEST_CASE("config round trip and validation") {
  ExperimentConfig c;
  c.seed = 42;
  c.eps_schedule = {0.25, 0.1};
  const auto back = ExperimentConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());

  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"nope", 1}}), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"tau", 0.3}}), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"tau", 0.0}}), std::invalid_argument);
  CHECK_NOTHROW(ExperimentConfig::from_json(json{{"tau", 0.25}}));
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"reg_schedule", {0.1, 0.2}}}), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"eps_schedule", {0.3, 0.1}}}), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"delta_schedule", {0.1, 0.1}}}), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"solver", "magic"}}), std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"m", 32}, {"n_list", {3}}}), std::invalid_argument);
}

TEST_CASE("config hash is stable and sensitive") {
  const json a = ExperimentConfig{}.to_json();
  json b = a;
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b["seed"] = 1;
  CHECK(config_hash(a) != config_hash(b));
  // FNV-1a of the empty object "{}"
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : std::string("{}")) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  CHECK(config_hash(json::object()) == std::string(buf));
}

TEST_CASE("derived seeds and the work pool are deterministic") {
  CHECK(derive_seed(0, 1, 2) == derive_seed(0, 1, 2));
  CHECK(derive_seed(0, 1, 2) != derive_seed(0, 2, 1));
  CHECK(derive_seed(0, 1, 2) != derive_seed(1, 1, 2));

  std::vector<int> out(100, -1);
  parallel_for(100, 7, [&](int i) { out[i] = i * i; });
  for (int i = 0; i < 100; ++i) CHECK(out[i] == i * i);

  try {
    parallel_for(50, 4, [](int i) {
      if (i == 13 || i == 31) throw std::runtime_error(std::to_string(i));
    });
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "13");
  }
}

TEST_CASE("instance specs") {
  const TorusGrid g(1, 4);
  CHECK(coupling_from_spec(g, json{{"kind", "identity"}}).mass.isApprox(gamma_identity(g).mass));
  CHECK(coupling_from_spec(g, json{{"kind", "shift"}, {"offset", {2}}}).mass.isApprox(gamma_shift(g, {2, 0}).mass));
  CHECK(coupling_from_spec(g, json{{"kind", "random"}, {"seed", 3}, {"heat", 0.5}})
            .mass.isApprox(random_bistochastic(g, 3, 0.5).mass));
  CHECK_THROWS_AS(coupling_from_spec(g, json{{"kind", "spiral"}}), std::invalid_argument);

  const auto times = uniform_times(2);
  const auto rho = density_from_spec(g, times, json{{"kind", "wavy"}, {"amplitude", 0.2}});
  rho.validate();
  CHECK(rho.has_uniform_endpoints());
  CHECK(rho.frames[1][1] == doctest::Approx(1.2));
  CHECK_THROWS_AS(density_from_spec(g, times, json{{"kind", "wavy"}, {"amplitude", 1.5}}), std::invalid_argument);
}

TEST_CASE("test fields lie in the unit ball and vanish near the ends") {
  for (int dim : {1, 2}) {
    const TorusGrid g(dim, 6);
    const auto times = uniform_times(8);
    std::mt19937_64 rng(5);
    const FieldPath xi = random_test_field(g, times, 0.25, rng);
    CHECK(xi.components == dim);
    CHECK(e_norm(xi) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(xi.vanishes_near_ends(0.25));
    CHECK(xi.sup_abs() > 0.0);

    const FieldPath div = divergence(xi);
    for (const auto& f : div.frames) CHECK(std::abs(frame_mean(f)) <= 1e-12);
  }
  std::mt19937_64 rng(1);
  // a single step leaves no interior time
  CHECK_THROWS_AS(random_test_field(TorusGrid(1, 4), uniform_times(1), 0.25, rng), std::invalid_argument);
}

TEST_CASE("divergence of a linear-phase field matches the centered oracle") {
  const TorusGrid g(1, 8);
  FieldPath xi = FieldPath::zeros(g, uniform_times(2), 1);
  for (int z = 0; z < 8; ++z) xi.frames[1][z] = std::sin(2.0 * M_PI * z / 8.0);
  const FieldPath div = divergence(xi);
  for (int z = 0; z < 8; ++z) {
    const double want = (std::sin(2.0 * M_PI * (z + 1) / 8.0) - std::sin(2.0 * M_PI * (z - 1) / 8.0)) * 8.0 / 2.0;
    CHECK(div.frames[1][z] == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("push-forward density and the perturbed flow") {
  const TorusGrid g(1, 4);
  const auto times = uniform_times(4);
  std::mt19937_64 rng(9);
  const FieldPath xi = random_test_field(g, times, 0.25, rng);
  const double delta = 0.1;
  const DensityPath rho = push_density(xi, delta);
  rho.validate(1e-12);
  CHECK(rho.has_uniform_endpoints());

  SUBCASE("zero displacement keeps Lebesgue") {
    const DensityPath same = push_density(xi, 0.0);
    for (const auto& f : same.frames) CHECK((f.array() - 1.0).abs().maxCoeff() == 0.0);
  }

  SUBCASE("T_delta of an optimal flow has density rho_delta and the same endpoints") {
    const auto mu = random_bistochastic(g, 2, 0.3);
    const auto sol = solve_exact(mu, PathLattice::uniform(g, 4));
    const GeneralizedFlow moved = perturb_flow(sol.flow, xi, delta);
    const auto adm = verify_admissible(moved, mu, rho, 1e-12);
    CHECK(adm.admissible);
    CHECK(total_mass(moved) == doctest::Approx(1.0).epsilon(1e-12));
    // admissible for (mu, rho_delta), so never below the optimum there
    CHECK(flow_action(moved) >= solve_exact(mu, rho).action - 1e-9);
  }

  SUBCASE("oracle: one cell moved by half a cell splits evenly") {
    FieldPath one = FieldPath::zeros(g, times, 1);
    one.frames[2][1] = 0.125;  // half the spacing
    const DensityPath r = push_density(one, 1.0);
    CHECK(r.frames[2][1] == doctest::Approx(0.5));
    CHECK(r.frames[2][2] == doctest::Approx(1.5));
    CHECK(r.frames[2][0] == doctest::Approx(1.0));
  }
}

TEST_CASE("pairing with a null field or equal couplings is zero") {
  const TorusGrid g(1, 4);
  const auto lat = PathLattice::uniform(g, 4);
  const auto mu = random_bistochastic(g, 4, 0.3);
  const auto sol = solve_exact(mu, lat);
  const FieldPath zero = divergence(FieldPath::zeros(g, lat.times(), 1));
  CHECK(extract_pressure_pairing(sol.pressure, zero) == 0.0);

  ExperimentConfig c = small_config();
  c.steps = 4;
  c.blend_min = 1e-12;
  c.blend_max = 2e-12;
  const auto rep = run_pressure_holder(c);
  for (const auto& row : rep.rows) CHECK(row.gap <= 1e-6);
}

TEST_CASE("action holder: near-equal pairs give tiny differences and threads do not matter") {
  ExperimentConfig c = small_config();
  c.blend_min = 1e-12;
  c.blend_max = 2e-12;
  const auto tiny = run_action_holder(c);
  for (const auto& row : tiny.rows) CHECK(row.delta_action <= 1e-9);

  ExperimentConfig a = small_config();
  a.threads = 1;
  ExperimentConfig b = small_config();
  b.threads = 4;
  const auto ra = run_action_holder(a);
  const auto rb = run_action_holder(b);
  CHECK(to_json(ra) == to_json(rb));
  CHECK(ra.rows.size() == 10);
  CHECK(ra.exponent == doctest::Approx(0.25));
  for (std::size_t i = 1; i < ra.rows.size(); ++i) CHECK(ra.rows[i].blend < ra.rows[i - 1].blend);
  std::ostringstream os;
  write_csv(os, ra);
  CHECK(os.str().rfind("index,mu_seed,zeta_seed,blend,dmk", 0) == 0);

  ExperimentConfig few = small_config();
  few.samples = 9;
  CHECK_THROWS_AS(run_action_holder(few), std::invalid_argument);
}

TEST_CASE("pressure holder diagnostics") {
  ExperimentConfig c = small_config();
  c.steps = 4;
  c.diagnostics = true;
  c.delta_schedule = {0.2, 0.1};
  c.eps_schedule = {0.25};
  const auto rep = run_pressure_holder(c);
  CHECK(rep.exponent == doctest::Approx(1.0 / 14.0));
  REQUIRE(rep.diagnostics.size() == 1);
  const auto& d = rep.diagnostics[0];
  CHECK(d.perturbation.size() == 2);
  for (const auto& p : d.perturbation) {
    // multiplier inequality at rho_delta with the LP pressure of mu
    CHECK(p.defect >= -1e-9);
    CHECK(p.action_perturbed >= p.action_rho_delta - 1e-9);
  }
  for (const auto& m : d.multiplier) CHECK(m.gap_lp >= -1e-9);
  for (const auto& s : d.surgery)
    if (s.admissible) CHECK(s.excess >= -1e-9);
}

TEST_CASE("diameter sample contains the identity and the half shift") {
  ExperimentConfig c = small_config();
  c.samples = 3;
  const auto rep = run_diameter(c);
  REQUIRE(rep.rows.size() == 8);
  CHECK(rep.rows[0].action == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rep.rows[1].action == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(rep.min == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rep.max >= 0.125 - 1e-12);
  for (const auto& r : rep.rows)
    if (r.kind == "random") CHECK((r.heat >= c.heat_min && r.heat <= c.heat_max));
}

TEST_CASE("counterexample headline") {
  ExperimentConfig c = small_config();
  c.n_list = {2, 4, 8};
  const auto rep = run_counterexample(c);
  CHECK(rep.headline);
  CHECK(rep.series.rows.size() == 4);
  CHECK(rep.series.rows[0].action_computed >= 1.0 / 64.0);
  CHECK(rep.series.rows[2].action_lower == doctest::Approx(49.0 / 1024.0));
  CHECK(to_json(rep)["rows"][3]["n"] == "inf");
}
