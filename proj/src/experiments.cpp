#include "sptforge/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace sptforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

int worker_count() {
  if (const char* env = std::getenv("SPTFORGE_WORKERS")) {
    const int w = std::atoi(env);
    if (w >= 1) return w;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(std::min(hc, 8u));
}

/// Runs fn(i) for i in [0, n) on a bounded pool; results land in order.
template <typename T, typename Fn>
std::vector<T> parallel_map(int n, const Fn& fn) {
  std::vector<T> out(static_cast<std::size_t>(n));
  const int workers = std::min(worker_count(), n == 0 ? 1 : n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = fn(i);
    return out;
  }
  std::atomic<int> next{0};
  auto drain = [&] {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= n) break;
      out[static_cast<std::size_t>(i)] = fn(i);
    }
  };
  std::vector<std::future<void>> futs;
  for (int w = 0; w < workers; ++w)
    futs.push_back(std::async(std::launch::async, drain));
  for (auto& f : futs) f.get();
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw SimError("cannot create directory " + dir);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SimError("cannot write " + path);
  out << text;
}

PauliString embed_on_register(const PauliString& p, int register_qubits) {
  std::string letters(static_cast<std::size_t>(register_qubits), 'I');
  for (int q = 0; q < p.n_qubits(); ++q)
    letters[static_cast<std::size_t>(q)] = p.letter(q);
  return PauliString(p.coefficient(), letters);
}

MeasurementRecord filter_postselect(const MeasurementRecord& rec, int qubit) {
  MeasurementRecord out;
  out.basis = rec.basis;
  out.seed = rec.seed;
  for (const auto& [bits, c] : rec.counts)
    if (bits.at(static_cast<std::size_t>(qubit)) == '0') out.counts[bits] = c;
  out.shots = rec.shots;
  if (out.counts.empty())
    throw PostselectionStarvedError("no shots survived ancilla postselection");
  return out;
}

}  // namespace

// ----- config ---------------------------------------------------------------

RunMode run_mode_from_name(const std::string& name) {
  if (name == "exact") return RunMode::Exact;
  if (name == "noiseless") return RunMode::Noiseless;
  if (name == "noisy") return RunMode::Noisy;
  throw SimError("unknown mode: " + name);
}

std::string run_mode_name(RunMode m) {
  switch (m) {
    case RunMode::Exact: return "exact";
    case RunMode::Noiseless: return "noiseless";
    case RunMode::Noisy: return "noisy";
  }
  throw SimError("unknown mode");
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  const json j = json::parse(text);
  ExperimentConfig c;
  if (j.contains("model")) {
    const auto& m = j.at("model");
    c.model.J = m.value("J", c.model.J);
    c.model.h = m.value("h", c.model.h);
    c.model.g = m.value("g", c.model.g);
    c.model.L = m.value("L", c.model.L);
  }
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  c.shots = j.value("shots", c.shots);
  if (j.contains("beta") && !j.at("beta").is_null())
    c.beta = j.at("beta").get<double>();
  c.target_fidelity = j.value("target_fidelity", c.target_fidelity);
  c.degeneracy_tol = j.value("degeneracy_tol", c.degeneracy_tol);
  c.initial_state = j.value("initial_state", c.initial_state);
  if (j.contains("ansatz")) {
    const auto& a = j.at("ansatz");
    c.ansatz.start_layers = a.value("start_layers", c.ansatz.start_layers);
    c.ansatz.max_layers = a.value("max_layers", c.ansatz.max_layers);
    c.ansatz.restarts = a.value("restarts", c.ansatz.restarts);
    c.ansatz.max_iterations = a.value("max_iterations", c.ansatz.max_iterations);
    c.ansatz.cost_tolerance = a.value("cost_tolerance", c.ansatz.cost_tolerance);
    c.ansatz.init_spread = a.value("init_spread", c.ansatz.init_spread);
  }
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    c.noise.p_ecr = n.value("p_ecr", c.noise.p_ecr);
    c.noise.p_readout = n.value("p_readout", c.noise.p_readout);
    c.noise.validate();
  }
  if (j.contains("zne")) {
    const auto& z = j.at("zne");
    if (z.contains("m_list")) c.zne.m_list = z.at("m_list").get<std::vector<int>>();
    if (z.contains("fit_form"))
      c.zne.form = fit_form_from_name(z.at("fit_form").get<std::string>());
  }
  if (j.contains("phase_diagram"))
    c.phase_diagram.resolution =
        j.at("phase_diagram").value("resolution", c.phase_diagram.resolution);
  if (j.contains("string_sweep") && j.at("string_sweep").contains("g_list"))
    c.string_sweep.g_list =
        j.at("string_sweep").at("g_list").get<std::vector<double>>();
  if (j.contains("quench")) {
    const auto& q = j.at("quench");
    c.quench.t_max = q.value("t_max", c.quench.t_max);
    c.quench.n_points = q.value("n_points", c.quench.n_points);
    c.quench.initial_state = q.value("initial_state", c.quench.initial_state);
  }
  if (j.contains("renyi") && j.at("renyi").contains("x_list"))
    c.renyi.x_list = j.at("renyi").at("x_list").get<std::vector<int>>();
  if (j.contains("tomography")) {
    const auto& t = j.at("tomography");
    if (t.contains("subsystem")) {
      const auto s = t.at("subsystem").get<std::vector<int>>();
      if (s.size() != 3) throw SimError("tomography subsystem must have 3 qubits");
      c.tomography.subsystem = {s[0], s[1], s[2]};
    }
    c.tomography.shots_per_basis =
        t.value("shots_per_basis", c.tomography.shots_per_basis);
    if (t.contains("shot_scan"))
      c.tomography.shot_scan = t.at("shot_scan").get<std::vector<int>>();
  }
  c.out_dir = j.value("out_dir", c.out_dir);
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SimError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["model"] = {{"J", model.J}, {"h", model.h}, {"g", model.g}, {"L", model.L}};
  if (seed) j["seed"] = *seed;
  j["shots"] = shots;
  if (beta) j["beta"] = *beta;
  j["target_fidelity"] = target_fidelity;
  j["degeneracy_tol"] = degeneracy_tol;
  if (!initial_state.empty()) j["initial_state"] = initial_state;
  j["ansatz"] = {{"start_layers", ansatz.start_layers},
                 {"max_layers", ansatz.max_layers},
                 {"restarts", ansatz.restarts},
                 {"max_iterations", ansatz.max_iterations},
                 {"cost_tolerance", ansatz.cost_tolerance},
                 {"init_spread", ansatz.init_spread}};
  j["noise"] = {{"p_ecr", noise.p_ecr}, {"p_readout", noise.p_readout}};
  std::vector<int> ms = zne.m_list;
  j["zne"] = {{"m_list", ms}, {"fit_form", fit_form_name(zne.form)}};
  j["phase_diagram"] = {{"resolution", phase_diagram.resolution}};
  j["string_sweep"] = {{"g_list", string_sweep.g_list}};
  json q = {{"t_max", quench.t_max}, {"n_points", quench.n_points}};
  if (!quench.initial_state.empty()) q["initial_state"] = quench.initial_state;
  j["quench"] = q;
  if (!renyi.x_list.empty()) j["renyi"] = {{"x_list", renyi.x_list}};
  j["tomography"] = {{"subsystem", std::vector<int>(tomography.subsystem.begin(),
                                                    tomography.subsystem.end())},
                     {"shots_per_basis", tomography.shots_per_basis},
                     {"shot_scan", tomography.shot_scan}};
  j["out_dir"] = out_dir;
  return j.dump(2);
}

std::string ExperimentConfig::hash() const {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_json())));
  return buf;
}

std::string ExperimentConfig::initial_or_default() const {
  if (!initial_state.empty()) {
    if (static_cast<int>(initial_state.size()) != model.L)
      throw SimError("initial_state length must equal L");
    return initial_state;
  }
  return std::string(static_cast<std::size_t>(model.L), '0');
}

std::vector<int> ExperimentConfig::x_list_or_default() const {
  if (!renyi.x_list.empty()) return renyi.x_list;
  std::vector<int> xs;
  for (int x = 0; x <= model.L; ++x) xs.push_back(x);
  return xs;
}

std::string ExperimentConfig::quench_initial_or_default() const {
  if (!quench.initial_state.empty()) {
    if (static_cast<int>(quench.initial_state.size()) != model.L)
      throw SimError("quench initial_state length must equal L");
    return quench.initial_state;
  }
  std::string s(static_cast<std::size_t>(model.L), '+');
  s.front() = '0';
  s.back() = '0';
  return s;
}

std::uint64_t ExperimentConfig::require_seed() const {
  if (!seed) throw SimError("config must specify a seed");
  return *seed;
}

// ----- manifest --------------------------------------------------------------

std::string RunManifest::to_json() const {
  json j;
  j["config_hash"] = config_hash;
  j["code_version"] = code_version;
  j["experiment"] = experiment;
  j["outputs"] = outputs;
  j["timings_s"] = timings_s;
  return j.dump(2);
}

void RunManifest::write(const std::string& out_dir) const {
  ensure_dir(out_dir);
  write_text(out_dir + "/" + experiment + "_manifest.json", to_json());
}

// ----- preparation -----------------------------------------------------------

namespace {

std::string prep_cache_key(const IsingClusterParams& p, double beta,
                           const std::string& initial,
                           const AnsatzConfig& a, std::uint64_t seed,
                           const std::string& flavor) {
  std::ostringstream os;
  os << flavor << "|" << fmt(p.J) << "," << fmt(p.h) << "," << fmt(p.g) << ","
     << p.L << "|" << fmt(beta) << "|" << initial << "|" << a.start_layers
     << "," << a.max_layers << "," << a.restarts << "," << a.max_iterations
     << "," << fmt(a.cost_tolerance) << "," << fmt(a.init_spread) << "|"
     << seed;
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(os.str())));
  return buf;
}

std::optional<LayeredCircuit> load_cached_circuit(const std::string& dir,
                                                  const std::string& key) {
  const std::string path = dir + "/" + key + ".json";
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return LayeredCircuit::from_json(ss.str());
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

CompileOptions make_compile_options(const AnsatzConfig& a, std::uint64_t seed) {
  CompileOptions opts;
  opts.start_layers = a.start_layers;
  opts.max_layers = a.max_layers;
  opts.cost_tolerance = a.cost_tolerance;
  opts.train.max_iterations = a.max_iterations;
  opts.train.restarts = a.restarts;
  opts.train.init_spread = a.init_spread;
  opts.train.seed = seed;
  return opts;
}

/// Compile a state-preparation target with a disk cache.
CompileResult compile_cached(int n_qubits, const Statevector& input,
                             const Statevector& target,
                             const AnsatzConfig& acfg, std::uint64_t seed,
                             const std::string& cache_dir,
                             const std::string& key) {
  if (!cache_dir.empty()) {
    if (auto cached = load_cached_circuit(cache_dir + "/trained", key)) {
      OverlapCost cost(*cached, input, target);
      const double c = cost.value(cached->params);
      if (c <= acfg.cost_tolerance) {
        CompileResult res;
        res.circuit = std::move(*cached);
        res.report.final_cost = c;
        res.report.converged = true;
        res.converged = true;
        return res;
      }
    }
  }
  CompileResult res = compile_state_prep(n_qubits, input, target,
                                         make_compile_options(acfg, seed));
  if (!cache_dir.empty()) {
    ensure_dir(cache_dir + "/trained");
    json j = json::parse(res.circuit.to_json());
    j["final_cost"] = res.report.final_cost;
    j["converged"] = res.converged;
    j["seed"] = seed;
    write_text(cache_dir + "/trained/" + key + ".json", j.dump(2));
  }
  return res;
}

}  // namespace

Preparation prepare_ground(const IsingClusterParams& params,
                           const ExperimentConfig& config, RunMode mode,
                           std::uint64_t seed, const std::string& cache_dir) {
  HamiltonianOperator h = build_hamiltonian(params);
  std::string initial = config.initial_state.empty()
                            ? std::string(static_cast<std::size_t>(params.L), '0')
                            : config.initial_state;
  if (static_cast<int>(initial.size()) != params.L)
    throw SimError("initial_state length must equal L");

  Preparation prep;
  prep.beta = config.beta ? *config.beta
                          : beta_schedule(h, Statevector::product_state(initial),
                                          config.target_fidelity,
                                          {config.degeneracy_tol, 0.5, 4096.0});

  const QitePreparation exact = qite_prepare(h, prep.beta,
                                             Statevector::product_state(initial));
  prep.exact_state = exact.state;
  prep.exact_success = exact.success_probability;

  if (mode == RunMode::Exact) return prep;

  const DilatedUnitary dil = dilate_qite(h, prep.beta);
  prep.circuit_input =
      tensor(Statevector::product_state(initial), Statevector(1));
  const OverlapCost cost = make_postselected_cost(
      LayeredCircuit::brick(params.L + 1, 1), dil, prep.circuit_input);

  const std::string key =
      prep_cache_key(params, prep.beta, initial, config.ansatz, seed, "qite");
  CompileResult res = compile_cached(params.L + 1, prep.circuit_input,
                                     cost.target(), config.ansatz, seed,
                                     cache_dir, key);
  prep.circuit = res.circuit;
  prep.report = res.report;

  Statevector out = evaluate(res.circuit, prep.circuit_input);
  auto [post, p] = postselect(out, params.L, 0);
  prep.noiseless_state = drop_qubit(post, params.L);
  return prep;
}

// ----- string sweep ----------------------------------------------------------

std::vector<SweepRow> run_string_sweep(const ExperimentConfig& config,
                                       RunMode mode) {
  const std::uint64_t seed = config.require_seed();
  const int L = config.model.L;
  const PauliString op = string_order_operator(L, L);

  const auto& gs = config.string_sweep.g_list;
  return parallel_map<SweepRow>(
      static_cast<int>(gs.size()), [&](int i) {
        IsingClusterParams p = config.model;
        p.g = gs[static_cast<std::size_t>(i)];
        const std::uint64_t point_seed = Rng::derive(seed, 100 + static_cast<std::uint64_t>(i));
        const Preparation prep =
            prepare_ground(p, config, mode, point_seed, config.out_dir);

        SweepRow row;
        row.g = p.g;
        row.exact = expectation(prep.exact_state, op);
        if (mode == RunMode::Exact) return row;

        row.noiseless = expectation(prep.noiseless_state, op);
        if (mode == RunMode::Noiseless) return row;

        NoiseModel noise = config.noise;
        noise.seed = Rng::derive(point_seed, 1);
        const ZneResult z = zne_expectation(
            *prep.circuit, prep.circuit_input, embed_on_register(op, L + 1),
            noise, config.zne.m_list, config.shots, config.zne.form,
            Rng::derive(point_seed, 2), L);
        row.noisy_raw = z.raw;
        row.mitigated = z.mitigated;
        row.fit_json = z.fit.to_json();
        return row;
      });
}

// ----- phase diagram ----------------------------------------------------------

std::vector<PhaseDiagramRow> run_phase_diagram(const ExperimentConfig& config,
                                               RunMode mode) {
  const std::uint64_t seed = config.require_seed();
  const int R = config.phase_diagram.resolution;
  if (R < 3) throw SimError("phase diagram needs at least 3 points per edge");
  const int L = config.model.L;
  const PauliString op = string_order_operator(L, L);

  struct Cell {
    double jt, ht, gt;
  };
  std::vector<Cell> cells;
  for (int a = 0; a < R; ++a)
    for (int b = 0; a + b < R; ++b) {
      const int c = R - 1 - a - b;
      cells.push_back({static_cast<double>(a) / (R - 1),
                       static_cast<double>(b) / (R - 1),
                       static_cast<double>(c) / (R - 1)});
    }

  return parallel_map<PhaseDiagramRow>(
      static_cast<int>(cells.size()), [&](int i) {
        const Cell& cell = cells[static_cast<std::size_t>(i)];
        IsingClusterParams p;
        p.J = cell.jt;
        p.h = cell.ht;
        p.g = cell.gt;
        p.L = L;
        const std::uint64_t cell_seed =
            Rng::derive(seed, 500 + static_cast<std::uint64_t>(i));
        const Preparation prep =
            prepare_ground(p, config, mode, cell_seed, config.out_dir);

        PhaseDiagramRow row;
        row.jt = cell.jt;
        row.ht = cell.ht;
        row.gt = cell.gt;
        row.exact = expectation(prep.exact_state, op);
        if (mode == RunMode::Exact) return row;
        row.noiseless = expectation(prep.noiseless_state, op);
        if (mode == RunMode::Noiseless) return row;

        NoiseModel noise = config.noise;
        noise.seed = Rng::derive(cell_seed, 1);
        const ZneResult z = zne_expectation(
            *prep.circuit, prep.circuit_input, embed_on_register(op, L + 1),
            noise, config.zne.m_list, config.shots, config.zne.form,
            Rng::derive(cell_seed, 2), L);
        row.noisy_raw = z.raw;
        row.mitigated = z.mitigated;
        return row;
      });
}

// ----- edge profile -----------------------------------------------------------

std::vector<ProfileRow> run_edge_profile(const ExperimentConfig& config,
                                         RunMode mode) {
  const std::uint64_t seed = config.require_seed();
  const int L = config.model.L;
  const Preparation prep =
      prepare_ground(config.model, config, mode, seed, config.out_dir);

  std::vector<ProfileRow> rows(static_cast<std::size_t>(L));
  const std::vector<double> exact = magnetization_profile(prep.exact_state);
  for (int i = 0; i < L; ++i) {
    rows[static_cast<std::size_t>(i)].site = i;
    rows[static_cast<std::size_t>(i)].exact = exact[static_cast<std::size_t>(i)];
  }
  if (mode == RunMode::Exact) return rows;

  const std::vector<double> noiseless =
      magnetization_profile(prep.noiseless_state);
  for (int i = 0; i < L; ++i)
    rows[static_cast<std::size_t>(i)].noiseless =
        noiseless[static_cast<std::size_t>(i)];
  if (mode == RunMode::Noiseless) return rows;

  std::vector<PauliString> zs;
  for (int i = 0; i < L; ++i)
    zs.push_back(embed_on_register(PauliString::single(L, i, 'Z'), L + 1));
  NoiseModel noise = config.noise;
  noise.seed = Rng::derive(seed, 1);
  const std::vector<ZneResult> z = zne_multi_expectation(
      *prep.circuit, prep.circuit_input, zs, noise, config.zne.m_list,
      config.shots, config.zne.form, Rng::derive(seed, 2), L);
  for (int i = 0; i < L; ++i) {
    rows[static_cast<std::size_t>(i)].noisy_raw = z[static_cast<std::size_t>(i)].raw;
    rows[static_cast<std::size_t>(i)].mitigated =
        z[static_cast<std::size_t>(i)].mitigated;
    rows[static_cast<std::size_t>(i)].fit_json =
        z[static_cast<std::size_t>(i)].fit.to_json();
  }
  return rows;
}

// ----- quench ------------------------------------------------------------------

std::vector<QuenchRow> run_quench(const ExperimentConfig& config, RunMode mode) {
  const std::uint64_t seed = config.require_seed();
  const int L = config.model.L;
  if (config.quench.n_points < 2) throw SimError("quench needs at least 2 points");
  const std::string initial = config.quench_initial_or_default();

  std::vector<double> ts;
  for (int k = 0; k < config.quench.n_points; ++k)
    ts.push_back(config.quench.t_max * k / (config.quench.n_points - 1));

  HamiltonianOperator h = build_hamiltonian(config.model);
  const QuenchResult exact = quench_edge_bulk(h, initial, ts);

  std::vector<QuenchRow> rows(ts.size());
  for (std::size_t k = 0; k < ts.size(); ++k) {
    rows[k].t = ts[k];
    rows[k].z_edge_exact = exact.z_edge[k];
    rows[k].z_bulk_exact = exact.z_bulk[k];
  }
  if (mode == RunMode::Exact) return rows;

  // circuit modes: compile e^{-itH}|init> per grid point, warm-starting each
  // point from the previous one
  const Statevector psi0 = Statevector::product_state(initial);
  std::optional<LayeredCircuit> incumbent;
  std::vector<PauliString> zs;
  for (int i = 0; i < L; ++i) zs.push_back(PauliString::single(L, i, 'Z'));

  for (std::size_t k = 0; k < ts.size(); ++k) {
    const Statevector target = evolve(h, psi0, ts[k]);
    const std::uint64_t point_seed = Rng::derive(seed, 900 + k);
    CompileResult res;
    bool done = false;
    if (incumbent) {
      LayeredCircuit warm = *incumbent;
      OverlapCost cost(warm, psi0, target);
      TrainOptions ropts;
      ropts.max_iterations = config.ansatz.max_iterations;
      ropts.cost_tolerance = config.ansatz.cost_tolerance;
      ropts.seed = point_seed;
      TrainingReport rep = refine(warm, cost, ropts);
      if (rep.converged) {
        res.circuit = std::move(warm);
        res.report = rep;
        res.converged = true;
        done = true;
      }
    }
    if (!done)
      res = compile_state_prep(L, psi0, target,
                               make_compile_options(config.ansatz, point_seed));
    incumbent = res.circuit;

    const Statevector out = evaluate(res.circuit, psi0);
    const std::vector<double> prof = magnetization_profile(out);
    double ze = (prof.front() + prof.back()) / 2.0;
    double zb = 0.0;
    for (int i = 1; i + 1 < L; ++i) zb += prof[static_cast<std::size_t>(i)];
    zb /= std::max(1, L - 2);
    rows[k].z_edge_noiseless = ze;
    rows[k].z_bulk_noiseless = zb;

    if (mode == RunMode::Noisy) {
      NoiseModel noise = config.noise;
      noise.seed = Rng::derive(point_seed, 1);
      const std::vector<ZneResult> z = zne_multi_expectation(
          res.circuit, psi0, zs, noise, config.zne.m_list, config.shots,
          config.zne.form, Rng::derive(point_seed, 2));
      double ze_n = (z.front().mitigated + z.back().mitigated) / 2.0;
      double zb_n = 0.0;
      for (int i = 1; i + 1 < L; ++i)
        zb_n += z[static_cast<std::size_t>(i)].mitigated;
      zb_n /= std::max(1, L - 2);
      rows[k].z_edge_noisy = ze_n;
      rows[k].z_bulk_noisy = zb_n;
    }
  }
  return rows;
}

// ----- renyi --------------------------------------------------------------------

std::vector<RenyiRow> run_renyi(const ExperimentConfig& config, RunMode mode) {
  const std::uint64_t seed = config.require_seed();
  const int L = config.model.L;
  const std::vector<int> xs = config.x_list_or_default();

  const Preparation prep =
      prepare_ground(config.model, config, RunMode::Exact, seed, config.out_dir);
  const TwoCopyState exact_two = TwoCopyState::from_single(prep.exact_state, 0);

  std::vector<RenyiRow> rows(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    rows[i].x = xs[i];
    rows[i].exact_r2 = renyi2_swap(exact_two, xs[i]);
    rows[i].exact_s2 = -std::log(rows[i].exact_r2);
  }
  if (mode == RunMode::Exact) return rows;

  // trained QAE pipeline: one circuit per x on the 2L+2 register
  HamiltonianOperator h = build_hamiltonian(config.model);
  const HamiltonianOperator h2 = two_copy_hamiltonian(h);
  const DilatedUnitary dil2 = dilate_qite(h2, prep.beta);
  const std::string initial = config.initial_or_default();
  const Statevector input_full = tensor(
      tensor(Statevector::product_state(initial), Statevector::product_state(initial)),
      Statevector(2));
  const int n_reg = 2 * L + 2;
  const int a0 = 2 * L + 1, a1 = 2 * L;

  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::uint64_t x_seed = Rng::derive(seed, 1300 + i);
    const OverlapCost cost = make_qae_cost(LayeredCircuit::brick(n_reg, 1),
                                           dil2, L, xs[i], input_full);
    const std::string key = prep_cache_key(
        config.model, prep.beta, initial + "|qae_x" + std::to_string(xs[i]),
        config.ansatz, x_seed, "qae");
    const CompileResult res =
        compile_cached(n_reg, input_full, cost.target(), config.ansatz, x_seed,
                       config.out_dir, key);
    rows[i].compile_converged = res.converged;

    // noiseless: exact conditional probabilities from the trained circuit
    const Statevector out = evaluate(res.circuit, input_full);
    double p_a0 = 0.0, p_both = 0.0;
    const std::uint64_t b0 = 1ULL << a0, b1 = 1ULL << a1;
    for (std::uint64_t idx = 0; idx < out.dim(); ++idx) {
      if (idx & b0) continue;
      const double w = std::norm(out.amp(idx));
      p_a0 += w;
      if (!(idx & b1)) p_both += w;
    }
    const double r2 = 2.0 * (p_both / p_a0) - 1.0;
    rows[i].noiseless_s2 = -std::log(std::max(r2, 1e-6));

    if (mode == RunMode::Noisy) {
      NoiseModel noise = config.noise;
      noise.seed = Rng::derive(x_seed, 1);
      const ZneResult z = zne_expectation(
          res.circuit, input_full, PauliString::single(n_reg, a1, 'Z'), noise,
          config.zne.m_list, config.shots, config.zne.form,
          Rng::derive(x_seed, 2), a0);
      rows[i].noisy_s2 = -std::log(std::max(z.mitigated, 1e-6));
      rows[i].fit_json = z.fit.to_json();
    }
  }
  return rows;
}

// ----- tomography ----------------------------------------------------------------

TomographyResult run_tomography(const ExperimentConfig& config, RunMode mode) {
  const std::uint64_t seed = config.require_seed();
  const auto& sub = config.tomography.subsystem;
  if (!(sub[0] < sub[1] && sub[1] < sub[2]))
    throw SimError("tomography subsystem must be sorted ascending");

  const Preparation prep = prepare_ground(
      config.model, config,
      mode == RunMode::Exact ? RunMode::Exact : RunMode::Noiseless, seed,
      config.out_dir);
  const Statevector& state =
      mode == RunMode::Exact ? prep.exact_state : prep.noiseless_state;

  TomographyResult result;

  // dense oracle reference
  const DensityMatrix rho_exact =
      reduced_density(prep.exact_state, {sub[0], sub[1], sub[2]});
  const EntanglementSpectrum spectrum_exact = entanglement_spectrum(rho_exact);
  result.exact_eps = spectrum_exact.epsilons;

  // analytic-mode tomography
  const DensityMatrix rho_analytic =
      tomography_3q(state, sub, 0, seed, std::nullopt);
  result.analytic_rho_error =
      (rho_analytic.mat - rho_exact.mat).cwiseAbs().maxCoeff();
  result.analytic_eps = entanglement_spectrum(rho_analytic).epsilons;

  // shot-mode tomography: plain sampling in the circuit-free modes, full
  // per-shot gate noise plus readout and ancilla postselection in noisy mode
  auto sampled_rho = [&](int shots_per_basis, std::uint64_t s_seed) {
    if (mode != RunMode::Noisy)
      return tomography_3q(state, sub, shots_per_basis, s_seed, std::nullopt);
    const int L = config.model.L;
    NoiseModel noise = config.noise;
    noise.seed = Rng::derive(s_seed, 77);
    std::map<std::string, MeasurementRecord> records;
    const auto settings = tomography_settings();
    for (std::size_t si = 0; si < settings.size(); ++si) {
      std::string basis(static_cast<std::size_t>(L + 1), 'Z');
      for (int k = 0; k < 3; ++k)
        basis[static_cast<std::size_t>(sub[static_cast<std::size_t>(k)])] =
            settings[si][static_cast<std::size_t>(k)];
      MeasurementRecord rec =
          noisy_sample(*prep.circuit, prep.circuit_input, basis, noise,
                       shots_per_basis, Rng::derive(s_seed, 100 + si));
      rec = apply_readout_error(rec, noise);
      records[settings[si]] = filter_postselect(rec, L);
    }
    return tomography_assemble(records, sub);
  };

  const DensityMatrix rho_shots =
      sampled_rho(config.tomography.shots_per_basis, Rng::derive(seed, 4));
  const EntanglementSpectrum spectrum_shots =
      entanglement_spectrum(rho_shots, 1e-12, &result.exact_eps);
  result.sampled_eps = spectrum_shots.epsilons;
  result.sampled_lambdas = spectrum_shots.lambdas;
  result.sampled_delta_eps = spectrum_shots.delta_eps;

  // shot scan (sampling error does not vanish with more shots)
  for (std::size_t si = 0; si < config.tomography.shot_scan.size(); ++si) {
    const int s = config.tomography.shot_scan[si];
    const DensityMatrix rho_s = sampled_rho(s, Rng::derive(seed, 10 + si));
    const EntanglementSpectrum es = entanglement_spectrum(rho_s);
    TomographyResult::ScanPoint pt;
    pt.shots = s;
    pt.eps = es.epsilons;
    pt.lambdas = es.lambdas;
    result.scan.push_back(std::move(pt));
  }
  return result;
}

// ----- file output ----------------------------------------------------------------

namespace {

std::string csv_cell(const std::optional<double>& v) {
  return v ? fmt(*v) : "";
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "g,exact,noiseless,noisy_raw,mitigated\n";
  for (const auto& r : rows)
    os << fmt(r.g) << "," << fmt(r.exact) << "," << csv_cell(r.noiseless) << ","
       << csv_cell(r.noisy_raw) << "," << csv_cell(r.mitigated) << "\n";
  return os.str();
}

std::string phase_csv(const std::vector<PhaseDiagramRow>& rows) {
  std::ostringstream os;
  os << "J_norm,h_norm,g_norm,exact,noiseless,noisy_raw,mitigated\n";
  for (const auto& r : rows)
    os << fmt(r.jt) << "," << fmt(r.ht) << "," << fmt(r.gt) << ","
       << fmt(r.exact) << "," << csv_cell(r.noiseless) << ","
       << csv_cell(r.noisy_raw) << "," << csv_cell(r.mitigated) << "\n";
  return os.str();
}

std::string profile_csv(const std::vector<ProfileRow>& rows) {
  std::ostringstream os;
  os << "site,exact,noiseless,noisy_raw,mitigated\n";
  for (const auto& r : rows)
    os << r.site << "," << fmt(r.exact) << "," << csv_cell(r.noiseless) << ","
       << csv_cell(r.noisy_raw) << "," << csv_cell(r.mitigated) << "\n";
  return os.str();
}

std::string quench_csv(const std::vector<QuenchRow>& rows) {
  std::ostringstream os;
  os << "t,z_edge_exact,z_bulk_exact,z_edge_noiseless,z_bulk_noiseless,"
        "z_edge_noisy,z_bulk_noisy\n";
  for (const auto& r : rows)
    os << fmt(r.t) << "," << fmt(r.z_edge_exact) << "," << fmt(r.z_bulk_exact)
       << "," << csv_cell(r.z_edge_noiseless) << ","
       << csv_cell(r.z_bulk_noiseless) << "," << csv_cell(r.z_edge_noisy)
       << "," << csv_cell(r.z_bulk_noisy) << "\n";
  return os.str();
}

std::string renyi_csv(const std::vector<RenyiRow>& rows) {
  std::ostringstream os;
  os << "x,exact_r2,exact_s2,noiseless_s2,noisy_s2,compile_converged\n";
  for (const auto& r : rows) {
    os << r.x << "," << fmt(r.exact_r2) << "," << fmt(r.exact_s2) << ","
       << csv_cell(r.noiseless_s2) << "," << csv_cell(r.noisy_s2) << ",";
    if (r.compile_converged) os << (*r.compile_converged ? "1" : "0");
    os << "\n";
  }
  return os.str();
}

json eps_json(const std::vector<double>& v) { return json(v); }

std::string tomography_json(const TomographyResult& r) {
  json j;
  j["exact_eps"] = eps_json(r.exact_eps);
  j["analytic_eps"] = eps_json(r.analytic_eps);
  j["analytic_rho_error"] = r.analytic_rho_error;
  j["sampled_eps"] = eps_json(r.sampled_eps);
  j["sampled_lambdas"] = eps_json(r.sampled_lambdas);
  j["sampled_delta_eps"] = eps_json(r.sampled_delta_eps);
  json scan = json::array();
  for (const auto& pt : r.scan) {
    json p;
    p["shots"] = pt.shots;
    p["eps"] = pt.eps;
    p["lambdas"] = pt.lambdas;
    scan.push_back(p);
  }
  j["shot_scan"] = scan;
  return j.dump(2);
}

}  // namespace

RunManifest run_experiment_to_files(const std::string& experiment,
                                    const ExperimentConfig& config,
                                    RunMode mode) {
  const auto t0 = std::chrono::steady_clock::now();
  ensure_dir(config.out_dir);

  RunManifest manifest;
  manifest.config_hash = config.hash();
  manifest.code_version = kVersion;
  manifest.experiment = experiment;

  auto emit = [&](const std::string& name, const std::string& text) {
    const std::string path = config.out_dir + "/" + name;
    write_text(path, text);
    manifest.outputs.push_back(path);
  };

  auto emit_fits = [&](const std::string& name, const auto& rows,
                       auto label_of) {
    json fits = json::array();
    for (const auto& r : rows)
      if (r.fit_json) {
        json f;
        f["point"] = label_of(r);
        f["fit"] = json::parse(*r.fit_json);
        fits.push_back(std::move(f));
      }
    if (!fits.empty()) emit(name, fits.dump(2));
  };

  if (experiment == "string-sweep") {
    const auto rows = run_string_sweep(config, mode);
    emit("string_sweep.csv", sweep_csv(rows));
    emit_fits("string_sweep_fits.json", rows,
              [](const SweepRow& r) { return r.g; });
  } else if (experiment == "phase-diagram") {
    emit("phase_diagram.csv", phase_csv(run_phase_diagram(config, mode)));
  } else if (experiment == "edge-profile") {
    const auto rows = run_edge_profile(config, mode);
    emit("edge_profile.csv", profile_csv(rows));
    emit_fits("edge_profile_fits.json", rows,
              [](const ProfileRow& r) { return r.site; });
  } else if (experiment == "quench") {
    emit("quench.csv", quench_csv(run_quench(config, mode)));
  } else if (experiment == "renyi") {
    const auto rows = run_renyi(config, mode);
    emit("renyi.csv", renyi_csv(rows));
    emit_fits("renyi_fits.json", rows, [](const RenyiRow& r) { return r.x; });
  } else if (experiment == "tomography") {
    emit("tomography.json", tomography_json(run_tomography(config, mode)));
  } else {
    throw SimError("unknown experiment: " + experiment);
  }

  const auto t1 = std::chrono::steady_clock::now();
  manifest.timings_s[experiment] =
      std::chrono::duration<double>(t1 - t0).count();
  manifest.write(config.out_dir);
  return manifest;
}

}  // namespace sptforge
