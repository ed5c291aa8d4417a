#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sptforge/ansatz.hpp"
#include "sptforge/model.hpp"
#include "sptforge/noise.hpp"
#include "sptforge/observables.hpp"
#include "sptforge/zne.hpp"

namespace sptforge {

enum class RunMode { Exact, Noiseless, Noisy };

RunMode run_mode_from_name(const std::string& name);
std::string run_mode_name(RunMode m);

struct AnsatzConfig {
  int start_layers = 2;
  int max_layers = 12;
  int restarts = 8;
  int max_iterations = 400;
  double cost_tolerance = 1e-3;
  double init_spread = 0.1;
};

struct ZneConfig {
  std::vector<int> m_list{0, 2, 4, 6};
  FitForm form = FitForm::Exponential;
};

struct PhaseDiagramConfig {
  int resolution = 15;  // points per simplex edge
};

struct StringSweepConfig {
  std::vector<double> g_list{0.2, 0.6, 1.0, 1.5, 2.0, 2.5};
};

struct QuenchConfig {
  double t_max = 5.0;
  int n_points = 26;
  std::string initial_state;  // default: edges |0>, bulk |+>
};

struct RenyiConfig {
  std::vector<int> x_list;  // default 0..L
};

struct TomographyConfig {
  std::array<int, 3> subsystem{0, 1, 2};
  int shots_per_basis = 20000;
  std::vector<int> shot_scan{5000, 200000};
};

/// One JSON document drives every experiment; defaults follow the reported
/// device settings (20000 shots, ECR error 0.5%, readout error 0.6%).
struct ExperimentConfig {
  IsingClusterParams model{1.0, 1.0, 2.5, 8};
  std::optional<std::uint64_t> seed;
  int shots = 20000;
  std::optional<double> beta;   // explicit imaginary time
  double target_fidelity = 0.999;  // used by the beta schedule when no beta
  double degeneracy_tol = 1e-8;
  std::string initial_state;    // default |0...0>
  AnsatzConfig ansatz;
  NoiseModel noise;
  ZneConfig zne;
  PhaseDiagramConfig phase_diagram;
  StringSweepConfig string_sweep;
  QuenchConfig quench;
  RenyiConfig renyi;
  TomographyConfig tomography;
  std::string out_dir = "out";

  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);
  std::string to_json() const;
  std::string hash() const;

  std::string initial_or_default() const;
  std::vector<int> x_list_or_default() const;
  std::string quench_initial_or_default() const;
  std::uint64_t require_seed() const;
};

struct RunManifest {
  std::string config_hash;
  std::string code_version;
  std::string experiment;
  std::vector<std::string> outputs;
  std::map<std::string, double> timings_s;

  std::string to_json() const;
  void write(const std::string& out_dir) const;
};

/// Ground-state preparation shared by the experiments: dense imaginary-time
/// projection as the exact reference, a trained circuit on L+1 qubits for the
/// circuit modes. Trained circuits are cached under <out_dir>/trained.
struct Preparation {
  double beta = 0.0;
  Statevector exact_state;  // system only
  double exact_success = 0.0;
  std::optional<LayeredCircuit> circuit;  // L+1 qubits (system + ancilla)
  std::optional<TrainingReport> report;
  Statevector noiseless_state;  // system only, from the trained circuit
  Statevector circuit_input;    // full-register input the circuit acts on
};

Preparation prepare_ground(const IsingClusterParams& params,
                           const ExperimentConfig& config, RunMode mode,
                           std::uint64_t seed,
                           const std::string& cache_dir = "");

struct SweepRow {
  double g = 0.0;
  double exact = 0.0;
  std::optional<double> noiseless;
  std::optional<double> noisy_raw;
  std::optional<double> mitigated;
  std::optional<std::string> fit_json;  // serialized extrapolation fit
};

std::vector<SweepRow> run_string_sweep(const ExperimentConfig& config,
                                       RunMode mode);

struct PhaseDiagramRow {
  double jt = 0.0, ht = 0.0, gt = 0.0;
  double exact = 0.0;
  std::optional<double> noiseless;
  std::optional<double> noisy_raw;
  std::optional<double> mitigated;
};

std::vector<PhaseDiagramRow> run_phase_diagram(const ExperimentConfig& config,
                                               RunMode mode);

struct ProfileRow {
  int site = 0;
  double exact = 0.0;
  std::optional<double> noiseless;
  std::optional<double> noisy_raw;
  std::optional<double> mitigated;
  std::optional<std::string> fit_json;
};

std::vector<ProfileRow> run_edge_profile(const ExperimentConfig& config,
                                         RunMode mode);

struct QuenchRow {
  double t = 0.0;
  double z_edge_exact = 0.0, z_bulk_exact = 0.0;
  std::optional<double> z_edge_noiseless, z_bulk_noiseless;
  std::optional<double> z_edge_noisy, z_bulk_noisy;
};

std::vector<QuenchRow> run_quench(const ExperimentConfig& config, RunMode mode);

struct RenyiRow {
  int x = 0;
  double exact_r2 = 0.0, exact_s2 = 0.0;
  std::optional<double> noiseless_s2;
  std::optional<double> noisy_s2;
  std::optional<bool> compile_converged;
  std::optional<std::string> fit_json;
};

std::vector<RenyiRow> run_renyi(const ExperimentConfig& config, RunMode mode);

struct TomographyResult {
  std::vector<double> exact_eps;
  std::vector<double> analytic_eps;   // analytic-mode tomography
  double analytic_rho_error = 0.0;    // max|rho_analytic - rho_exact|
  std::vector<double> sampled_eps;    // at tomography.shots_per_basis
  std::vector<double> sampled_lambdas;
  std::vector<double> sampled_delta_eps;
  struct ScanPoint {
    int shots = 0;
    std::vector<double> eps;
    std::vector<double> lambdas;
  };
  std::vector<ScanPoint> scan;
};

TomographyResult run_tomography(const ExperimentConfig& config, RunMode mode);

/// Writes the CSV/JSON artifacts plus a run manifest for one experiment.
/// Returns the manifest.
RunManifest run_experiment_to_files(const std::string& experiment,
                                    const ExperimentConfig& config,
                                    RunMode mode);

}  // namespace sptforge
