#include "sptforge/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

#include "sptforge/experiments.hpp"

namespace sptforge {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

AcceptanceCheck check_lt(const std::string& claim, double got, double bound) {
  return {claim, "< " + num(bound), num(got), num(bound), got < bound};
}

AcceptanceCheck check_gt(const std::string& claim, double got, double bound) {
  return {claim, "> " + num(bound), num(got), num(bound), got > bound};
}

AcceptanceCheck check_true(const std::string& claim, bool ok,
                           const std::string& detail) {
  return {claim, "true", detail, "-", ok};
}

ExperimentConfig base_config(const AcceptanceOptions& opts, int L) {
  ExperimentConfig c;
  c.model = {1.0, 1.0, 2.5, L};
  c.seed = opts.seed;
  c.shots = 20000;
  c.beta = 6.0;
  c.out_dir = opts.work_dir;
  c.noise.p_ecr = 0.005;
  c.noise.p_readout = 0.006;
  return c;
}

// random Pauli-string Hamiltonian with bounded coefficients
HamiltonianOperator random_hamiltonian(int L, Rng& rng) {
  HamiltonianOperator h(L);
  const int n_terms = 2 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(2 * L)));
  for (int t = 0; t < n_terms; ++t) {
    std::string letters(static_cast<std::size_t>(L), 'I');
    const char axes[3] = {'X', 'Y', 'Z'};
    int weight = 0;
    for (int q = 0; q < L; ++q)
      if (rng.uniform() < 0.5) {
        letters[static_cast<std::size_t>(q)] = axes[rng.uniform_int(3)];
        ++weight;
      }
    if (weight == 0) letters[0] = 'Z';
    h.add_term(PauliString(rng.uniform(-1.0, 1.0), letters));
  }
  return h;
}

Statevector random_state(int n, Rng& rng) {
  std::vector<cplx> amps(1ULL << n);
  for (auto& a : amps) a = cplx(rng.normal(), rng.normal());
  Statevector s = Statevector::from_amplitudes(n, std::move(amps));
  s.normalize();
  return s;
}

// ----- criteria -------------------------------------------------------------

CriterionResult criterion_1_dilation(const AcceptanceOptions& opts) {
  CriterionResult res;
  res.id = 1;
  res.name = "dilation soundness";
  Rng rng(Rng::derive(opts.seed, 1));
  double worst_block = 0.0, worst_unitarity = 0.0;
  for (int k = 0; k < 50; ++k) {
    const int L = 2 + static_cast<int>(rng.uniform_int(3));  // 2..4
    const HamiltonianOperator h = random_hamiltonian(L, rng);
    for (double beta : {0.5, 1.0, 2.0, 4.0}) {
      const Eigen::MatrixXcd u_beta = propagator(h, beta);
      const DilatedUnitary dil = dilate(u_beta, std::nullopt, beta);
      const Eigen::MatrixXcd expected = dil.u * u_beta;
      worst_block = std::max(
          worst_block, (dil.top_left() - expected).cwiseAbs().maxCoeff());
      const Eigen::MatrixXcd qq =
          dil.q.adjoint() * dil.q -
          Eigen::MatrixXcd::Identity(dil.q.rows(), dil.q.cols());
      worst_unitarity = std::max(worst_unitarity, qq.cwiseAbs().maxCoeff());
    }
  }
  res.checks.push_back(check_lt(
      "max |topLeft(Q) - u e^{-beta H}| over 50 random H, beta in {0.5,1,2,4}",
      worst_block, 1e-9));
  res.checks.push_back(
      check_lt("max |Q^dag Q - I|", worst_unitarity, 1e-10));
  return res;
}

CriterionResult criterion_2_qite(const AcceptanceOptions& opts) {
  CriterionResult res;
  res.id = 2;
  res.name = "QITE convergence";
  const IsingClusterParams p{1.0, 1.0, 2.5, 4};
  HamiltonianOperator h = build_hamiltonian(p);
  const Statevector init = Statevector::product_state("++++");
  const double beta = beta_schedule(h, init, 0.999);
  const QitePreparation prep = qite_prepare(h, beta, init);
  const GroundSpace gs = exact_ground_state(h);
  const double fid = std::norm(gs.states[0].inner(prep.state));
  res.checks.push_back(
      check_gt("qite_prepare fidelity with ED ground state (beta from schedule)",
               fid, 0.999));

  ExperimentConfig cfg = base_config(opts, 4);
  cfg.beta = beta;
  cfg.initial_state = "++++";
  const Preparation trained = prepare_ground(p, cfg, RunMode::Noiseless,
                                             opts.seed, opts.work_dir);
  const double fid_circ =
      std::norm(gs.states[0].inner(trained.noiseless_state));
  res.checks.push_back(
      check_gt("trained 4-qubit ansatz fidelity with ED ground state",
               fid_circ, 0.99));
  return res;
}

CriterionResult criterion_3_string_sweep(const AcceptanceOptions& opts) {
  CriterionResult res;
  res.id = 3;
  res.name = "string-order transition";
  ExperimentConfig cfg = base_config(opts, 8);
  cfg.string_sweep.g_list = {0.2, 0.6, 1.0, 1.5, 2.0, 2.5};
  const std::vector<SweepRow> rows = run_string_sweep(cfg, RunMode::Noiseless);

  double at_02 = 0.0, at_25 = 0.0, worst_track = 0.0;
  for (const SweepRow& r : rows) {
    if (r.g == 0.2) at_02 = r.exact;
    if (r.g == 2.5) at_25 = r.exact;
    worst_track = std::max(worst_track, std::abs(*r.noiseless - r.exact));
  }
  res.checks.push_back(
      check_lt("exact <O_str(8)> at g=0.2", std::abs(at_02), 0.1));
  res.checks.push_back(check_gt("exact <O_str(8)> at g=2.5", at_25, 0.9));
  res.checks.push_back(check_lt(
      "max |noiseless - exact| over the sweep grid", worst_track, 0.05));
  return res;
}

CriterionResult criterion_4_edge_modes(const AcceptanceOptions& opts) {
  CriterionResult res;
  res.id = 4;
  res.name = "edge modes";
  ExperimentConfig cfg = base_config(opts, 8);
  const std::vector<ProfileRow> rows = run_edge_profile(cfg, RunMode::Noiseless);
  auto margin = [&rows](auto get) {
    double edge = std::min(std::abs(get(rows.front())),
                           std::abs(get(rows.back())));
    double bulk = 0.0;
    for (std::size_t i = 1; i + 1 < rows.size(); ++i)
      bulk = std::max(bulk, std::abs(get(rows[i])));
    return edge - bulk;
  };
  res.checks.push_back(check_gt(
      "exact min(|Z_0|,|Z_7|) - max bulk |Z_i|",
      margin([](const ProfileRow& r) { return r.exact; }), 0.1));
  res.checks.push_back(check_gt(
      "noiseless min(|Z_0|,|Z_7|) - max bulk |Z_i|",
      margin([](const ProfileRow& r) { return *r.noiseless; }), 0.1));
  return res;
}

CriterionResult criterion_5_quench(const AcceptanceOptions& opts) {
  CriterionResult res;
  res.id = 5;
  res.name = "quench robustness";
  ExperimentConfig cfg = base_config(opts, 8);
  cfg.quench.n_points = 26;
  cfg.quench.t_max = 5.0;
  cfg.ansatz.max_layers = 16;
  const std::vector<QuenchRow> rows = run_quench(cfg, RunMode::Noiseless);
  double min_edge = 1e9, max_bulk = 0.0;
  for (const QuenchRow& r : rows) {
    min_edge = std::min(min_edge, *r.z_edge_noiseless);
    max_bulk = std::max(max_bulk, std::abs(*r.z_bulk_noiseless));
  }
  res.checks.push_back(check_gt(
      "min <Z_edge(t)> over 26 points in [0,5] (noiseless circuits)", min_edge,
      0.6));
  res.checks.push_back(check_lt(
      "max |<Z_bulk(t)>| over the same grid", max_bulk, 0.2));
  return res;
}

CriterionResult criterion_6_renyi(const AcceptanceOptions& opts) {
  CriterionResult res;
  res.id = 6;
  res.name = "Renyi entropy";
  ExperimentConfig cfg = base_config(opts, 4);
  cfg.initial_state = "++++";
  cfg.renyi.x_list = {0, 2, 4};
  cfg.ansatz.max_layers = 14;
  const std::vector<RenyiRow> rows = run_renyi(cfg, RunMode::Noiseless);
  const double ln2 = std::log(2.0);
  for (const RenyiRow& r : rows) {
    if (r.x == 2)
      res.checks.push_back(check_lt("|S2(x=2) - ln 2| (noiseless mode)",
                                    std::abs(*r.noiseless_s2 - ln2), 0.05));
    else
      res.checks.push_back(check_lt(
          "S2(x=" + std::to_string(r.x) + ") (pure-state end)",
          std::abs(*r.noiseless_s2), 0.02));
  }
  return res;
}

CriterionResult criterion_7_qae_agreement(const AcceptanceOptions& opts) {
  CriterionResult res;
  res.id = 7;
  res.name = "QAE/swap/trace agreement";
  Rng rng(Rng::derive(opts.seed, 7));
  double worst_analytic = 0.0, worst_shot_sigma = 0.0;
  for (int k = 0; k < 20; ++k) {
    const int L = 3;
    const int x = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(L + 1)));
    const Statevector psi = random_state(L, rng);
    const TwoCopyState two = TwoCopyState::from_single(psi, 2);

    const double swap_val = renyi2_swap(TwoCopyState::from_single(psi, 0), x);
    std::vector<int> keep;
    for (int q = 0; q < x; ++q) keep.push_back(q);
    double trace_val = 1.0;
    if (!keep.empty()) {
      const DensityMatrix rho = reduced_density(psi, keep);
      trace_val = (rho.mat * rho.mat).trace().real();
    }
    const QaeResult qae = qae_renyi(two, x, 0, std::nullopt, 0);
    worst_analytic = std::max(
        {worst_analytic, std::abs(qae.value - swap_val),
         std::abs(swap_val - trace_val), std::abs(qae.value - trace_val)});

    const QaeResult shot =
        qae_renyi(two, x, 20000, std::nullopt, Rng::derive(opts.seed, 70 + k));
    const double p = (1.0 + qae.value) / 2.0;
    const double sigma =
        2.0 * std::sqrt(std::max(p * (1.0 - p), 1e-12) / shot.shots_kept);
    worst_shot_sigma = std::max(
        worst_shot_sigma, std::abs(shot.value - qae.value) / std::max(sigma, 1e-12));
  }
  res.checks.push_back(check_lt(
      "max pairwise |qae - swap - trace| disagreement (analytic, 20 states)",
      worst_analytic, 1e-9));
  res.checks.push_back(check_lt(
      "max |qae(20000 shots) - analytic| in binomial sigmas", worst_shot_sigma,
      4.0));
  return res;
}

CriterionResult criterion_8_tomography(const AcceptanceOptions& opts) {
  CriterionResult res;
  res.id = 8;
  res.name = "tomography and spectrum";
  const IsingClusterParams p{1.0, 1.0, 2.5, 4};
  HamiltonianOperator h = build_hamiltonian(p);
  const Statevector ed_state = exact_ground_state(h).states[0];
  const std::array<int, 3> sub{0, 1, 2};

  const DensityMatrix rho_exact = reduced_density(ed_state, {0, 1, 2});
  const EntanglementSpectrum spectrum_exact = entanglement_spectrum(rho_exact);

  const DensityMatrix rho_analytic =
      tomography_3q(ed_state, sub, 0, opts.seed, std::nullopt);
  res.checks.push_back(check_lt(
      "analytic tomography max |rho - rho_exact|",
      (rho_analytic.mat - rho_exact.mat).cwiseAbs().maxCoeff(), 1e-9));

  const DensityMatrix rho_shot = tomography_3q(
      ed_state, sub, 20000, Rng::derive(opts.seed, 8), std::nullopt);
  const EntanglementSpectrum spectrum_shot =
      entanglement_spectrum(rho_shot, 1e-12, &spectrum_exact.epsilons);
  res.checks.push_back(check_lt(
      "shot-mode |eps1 - exact|",
      std::abs(spectrum_shot.epsilons[0] - spectrum_exact.epsilons[0]), 0.05));
  res.checks.push_back(check_lt(
      "shot-mode |eps2 - exact|",
      std::abs(spectrum_shot.epsilons[1] - spectrum_exact.epsilons[1]), 0.05));
  res.checks.push_back(check_gt("shot-mode eps1 + eps2",
                                spectrum_shot.epsilons[0] + spectrum_shot.epsilons[1],
                                0.9));
  res.checks.push_back(check_true(
      "delta-eps report generated",
      spectrum_shot.delta_eps.size() == spectrum_shot.epsilons.size(),
      std::to_string(spectrum_shot.delta_eps.size()) + " entries"));

  // small-eigenvalue noise persists from 5000 to 200000 shots
  for (std::size_t si = 0; si < 2; ++si) {
    const int shots = si == 0 ? 5000 : 200000;
    const DensityMatrix rho_s = tomography_3q(
        ed_state, sub, shots, Rng::derive(opts.seed, 80 + si), std::nullopt);
    const EntanglementSpectrum es = entanglement_spectrum(rho_s);
    const double eps1_dev = std::abs(es.epsilons[0] - spectrum_exact.epsilons[0]);
    for (int li : {2, 3}) {
      const double lam_dev =
          std::abs(es.lambdas[static_cast<std::size_t>(li)] -
                   spectrum_exact.lambdas[static_cast<std::size_t>(li)]);
      res.checks.push_back(check_gt(
          "lambda_" + std::to_string(li + 1) + " deviation vs 10x eps1 deviation (" +
              std::to_string(shots) + " shots)",
          lam_dev, 10.0 * eps1_dev));
    }
  }
  return res;
}

CriterionResult criterion_9_zne(const AcceptanceOptions& opts) {
  CriterionResult res;
  res.id = 9;
  res.name = "ZNE efficacy";
  ExperimentConfig cfg = base_config(opts, 4);
  cfg.initial_state = "++++";
  const Preparation prep = prepare_ground(cfg.model, cfg, RunMode::Noiseless,
                                          opts.seed, opts.work_dir);
  const PauliString op_sys = string_order_operator(4, 4);
  const double reference = expectation(prep.noiseless_state, op_sys);

  PauliString op(op_sys.coefficient(), op_sys.letters() + "I");

  // noiseless folding invariance
  double worst_fold = 0.0;
  for (int m : {2, 4}) {
    const FoldedCircuit f = fold(*prep.circuit, m);
    const Statevector folded_out = evaluate(f.circuit, prep.circuit_input);
    auto [ps, prob] = postselect(folded_out, 4, 0);
    const double v = expectation(drop_qubit(ps, 4), op_sys);
    worst_fold = std::max(worst_fold, std::abs(v - reference));
  }
  res.checks.push_back(
      check_lt("noiseless folding invariance |<O>_folded - <O>|", worst_fold,
               1e-9));

  std::vector<double> err_raw, err_zne;
  for (int s = 0; s < 20; ++s) {
    NoiseModel noise = cfg.noise;
    noise.seed = Rng::derive(opts.seed, 900 + static_cast<std::uint64_t>(s));
    const ZneResult z = zne_expectation(
        *prep.circuit, prep.circuit_input, op, noise, {0, 2, 4, 6}, 20000,
        FitForm::Exponential, Rng::derive(opts.seed, 950 + static_cast<std::uint64_t>(s)), 4);
    err_raw.push_back(std::abs(z.raw - reference));
    err_zne.push_back(std::abs(z.mitigated - reference));
  }
  std::sort(err_raw.begin(), err_raw.end());
  std::sort(err_zne.begin(), err_zne.end());
  const double med_raw = (err_raw[9] + err_raw[10]) / 2.0;
  const double med_zne = (err_zne[9] + err_zne[10]) / 2.0;
  res.checks.push_back(check_lt(
      "median |ZNE - noiseless| vs median |raw - noiseless| over 20 seeds (" +
          num(med_zne) + " vs " + num(med_raw) + ")",
      med_zne, med_raw));
  return res;
}

CriterionResult criterion_10_gradients(const AcceptanceOptions& opts) {
  CriterionResult res;
  res.id = 10;
  res.name = "gradient check";
  Rng rng(Rng::derive(opts.seed, 10));
  double worst = 0.0;
  for (int inst = 0; inst < 5; ++inst) {
    LayeredCircuit shape = LayeredCircuit::brick(3, 2);
    const Statevector input = random_state(3, rng);
    const Statevector target = random_state(3, rng);
    OverlapCost cost(shape, input, target);
    Eigen::VectorXd params(shape.param_count());
    for (int k = 0; k < params.size(); ++k) params[k] = rng.uniform(-0.7, 0.7);
    Eigen::VectorXd grad;
    cost.value_and_grad(params, grad);
    for (int k = 0; k < params.size(); ++k) {
      Eigen::VectorXd pp = params, pm = params;
      pp[k] += 1e-5;
      pm[k] -= 1e-5;
      const double fd = (cost.value(pp) - cost.value(pm)) / 2e-5;
      const double rel = std::abs(fd - grad[k]) /
                         std::max({std::abs(fd), std::abs(grad[k]), 1e-8});
      worst = std::max(worst, rel);
    }
  }
  res.checks.push_back(check_lt(
      "max relative error, analytic vs central differences (step 1e-5)", worst,
      1e-5));
  return res;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts) {
  using Fn = std::function<CriterionResult(const AcceptanceOptions&)>;
  const std::vector<Fn> criteria = {
      criterion_1_dilation,   criterion_2_qite,      criterion_3_string_sweep,
      criterion_4_edge_modes, criterion_5_quench,    criterion_6_renyi,
      criterion_7_qae_agreement, criterion_8_tomography, criterion_9_zne,
      criterion_10_gradients};

  std::vector<CriterionResult> results;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!opts.only.empty() &&
        std::find(opts.only.begin(), opts.only.end(), id) == opts.only.end())
      continue;
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult res = criteria[k](opts);
    const auto t1 = std::chrono::steady_clock::now();
    res.seconds = std::chrono::duration<double>(t1 - t0).count();
    res.passed = !res.checks.empty();
    for (const AcceptanceCheck& c : res.checks) res.passed &= c.passed;
    results.push_back(std::move(res));
  }
  return results;
}

void print_acceptance(const std::vector<CriterionResult>& results) {
  std::printf("%-4s %-28s %-6s %8s\n", "id", "criterion", "status", "secs");
  for (const CriterionResult& r : results) {
    std::printf("%-4d %-28s %-6s %8.1f\n", r.id, r.name.c_str(),
                r.passed ? "PASS" : "FAIL", r.seconds);
    for (const AcceptanceCheck& c : r.checks)
      std::printf("     [%s] %s | expected %s | got %s | tol %s\n",
                  c.passed ? "ok" : "XX", c.claim.c_str(), c.expected.c_str(),
                  c.got.c_str(), c.tolerance.c_str());
  }
}

int acceptance_exit_code(const std::vector<CriterionResult>& results) {
  for (const CriterionResult& r : results)
    if (!r.passed) return 1;
  return 0;
}

}  // namespace sptforge
