#include "sptforge/experiments.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

using namespace sptforge;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small_config(const std::string& out_dir) {
  ExperimentConfig c;
  c.model = {1.0, 1.0, 2.5, 4};
  c.seed = 4242;
  c.beta = 4.0;
  c.shots = 2000;
  c.initial_state = "++++";
  c.ansatz.restarts = 3;
  c.ansatz.max_iterations = 200;
  c.ansatz.max_layers = 8;
  c.out_dir = out_dir;
  return c;
}

}  // namespace

TEST_CASE("config defaults follow the reported device settings") {
  const ExperimentConfig c = ExperimentConfig::from_json_text("{}");
  CHECK(c.shots == 20000);
  CHECK(c.noise.p_ecr == doctest::Approx(0.005));
  CHECK(c.noise.p_readout == doctest::Approx(0.006));
  CHECK(c.zne.m_list == std::vector<int>{0, 2, 4, 6});
  CHECK_FALSE(c.seed.has_value());
  CHECK_THROWS_AS(c.require_seed(), SimError);
}

TEST_CASE("config round trip preserves every field") {
  ExperimentConfig c = small_config("round_trip_out");
  c.zne.form = FitForm::Quadratic;
  c.quench.initial_state = "0++0";
  const ExperimentConfig back = ExperimentConfig::from_json_text(c.to_json());
  CHECK(back.model.L == 4);
  CHECK(back.model.g == doctest::Approx(2.5));
  CHECK(back.beta.value() == doctest::Approx(4.0));
  CHECK(back.seed.value() == 4242);
  CHECK(back.zne.form == FitForm::Quadratic);
  CHECK(back.quench.initial_state == "0++0");
  CHECK(back.hash() == c.hash());
}

TEST_CASE("default quench initial state pins edges and relaxes the bulk") {
  ExperimentConfig c;
  c.model.L = 8;
  CHECK(c.quench_initial_or_default() == "0++++++0");
}

TEST_CASE("exact string sweep is deterministic byte for byte") {
  ExperimentConfig c = small_config("sweep_a");
  c.string_sweep.g_list = {0.5, 2.5};
  run_experiment_to_files("string-sweep", c, RunMode::Exact);
  c.out_dir = "sweep_b";
  run_experiment_to_files("string-sweep", c, RunMode::Exact);
  CHECK(slurp("sweep_a/string_sweep.csv") == slurp("sweep_b/string_sweep.csv"));
}

TEST_CASE("manifest lists outputs that exist and parse") {
  ExperimentConfig c = small_config("manifest_out");
  c.string_sweep.g_list = {0.2, 2.5};
  const RunManifest manifest =
      run_experiment_to_files("string-sweep", c, RunMode::Exact);
  CHECK(manifest.experiment == "string-sweep");
  CHECK_FALSE(manifest.outputs.empty());
  for (const std::string& path : manifest.outputs)
    CHECK(std::filesystem::exists(path));
  CHECK(std::filesystem::exists("manifest_out/string-sweep_manifest.json"));
  const std::string csv = slurp(manifest.outputs[0]);
  CHECK(csv.rfind("g,exact", 0) == 0);
}

TEST_CASE("phase diagram corners behave like the phase diagram") {
  ExperimentConfig c = small_config("phase_out");
  c.phase_diagram.resolution = 3;
  c.beta = 6.0;
  const std::vector<PhaseDiagramRow> rows =
      run_phase_diagram(c, RunMode::Exact);
  CHECK(rows.size() == 6);  // triangular grid with 3 points per edge
  for (const PhaseDiagramRow& r : rows) {
    if (r.gt == 1.0) CHECK(r.exact > 0.99);         // cluster corner
    if (r.jt == 1.0) CHECK(std::abs(r.exact) < 0.1);  // ferromagnetic corner
    if (r.ht == 1.0) CHECK(std::abs(r.exact) < 0.1);  // paramagnetic corner
  }
}

TEST_CASE("exact renyi rows match the closed-form ends") {
  ExperimentConfig c = small_config("renyi_out");
  c.renyi.x_list = {0, 2, 4};
  const std::vector<RenyiRow> rows = run_renyi(c, RunMode::Exact);
  CHECK(rows[0].exact_s2 == doctest::Approx(0.0));
  CHECK(rows[2].exact_s2 == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(std::abs(rows[1].exact_s2 - std::log(2.0)) < 0.05);
}

TEST_CASE("quench rows reproduce the dense evolution") {
  ExperimentConfig c = small_config("quench_out");
  c.quench.n_points = 3;
  c.quench.t_max = 1.0;
  c.quench.initial_state = "0++0";
  const std::vector<QuenchRow> rows = run_quench(c, RunMode::Exact);
  CHECK(rows.size() == 3);
  CHECK(rows[0].z_edge_exact == doctest::Approx(1.0));
  CHECK(rows[0].z_bulk_exact == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("tomography result carries the exact spectrum and the delta report") {
  ExperimentConfig c = small_config("tomo_out");
  c.tomography.shots_per_basis = 2000;
  c.tomography.shot_scan = {1000};
  const TomographyResult res = run_tomography(c, RunMode::Exact);
  CHECK(res.exact_eps.size() == 8);
  CHECK(res.analytic_rho_error < 1e-9);
  CHECK(res.sampled_delta_eps.size() == 8);
  CHECK(res.scan.size() == 1);
  CHECK(res.scan[0].shots == 1000);
  // dominant eigenvalues within sampling reach of the oracle
  CHECK(std::abs(res.sampled_eps[0] - res.exact_eps[0]) < 0.05);
}

TEST_CASE("unknown experiments and modes are rejected") {
  ExperimentConfig c = small_config("bad_out");
  CHECK_THROWS_AS(run_experiment_to_files("nope", c, RunMode::Exact), SimError);
  CHECK_THROWS_AS(run_mode_from_name("fast"), SimError);
}
