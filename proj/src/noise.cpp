#include "sptforge/noise.hpp"

#include <algorithm>
#include <cmath>

namespace sptforge {

namespace {

// Applies the k-th non-identity two-qubit Pauli (k in 1..15, letters indexed
// I,X,Y,Z per site) to the state on qubits (a, b). Global phase is dropped.
void apply_pauli_pair(std::vector<cplx>& amps, int a, int b, int k) {
  static const char kLetters[4] = {'I', 'X', 'Y', 'Z'};
  const char la = kLetters[k % 4];
  const char lb = kLetters[k / 4];
  const std::uint64_t sa = 1ULL << a, sb = 1ULL << b;
  std::uint64_t xm = 0, pm = 0;
  if (la == 'X' || la == 'Y') xm |= sa;
  if (la == 'Z' || la == 'Y') pm |= sa;
  if (lb == 'X' || lb == 'Y') xm |= sb;
  if (lb == 'Z' || lb == 'Y') pm |= sb;
  std::vector<cplx> out(amps.size());
  for (std::uint64_t i = 0; i < amps.size(); ++i) {
    const double sign = __builtin_parityll(i & pm) ? -1.0 : 1.0;
    out[i ^ xm] = sign * amps[i];
  }
  amps.swap(out);
}

}  // namespace

std::vector<NoisyExpectation> noisy_evaluate(
    const LayeredCircuit& circuit, const Statevector& input,
    const NoiseModel& model, int trajectories,
    const std::vector<PauliString>& observables,
    std::optional<int> postselect_qubit) {
  model.validate();
  if (trajectories <= 0) throw SimError("trajectory count must be positive");

  const std::vector<GateOp> gates = circuit.gate_sequence();

  // the noiseless output serves every insertion-free trajectory
  Statevector clean = input;
  for (const GateOp& g : gates) apply_gate_in_place(clean, g);

  const std::size_t n_obs = observables.size();
  std::vector<double> clean_vals(n_obs);
  double clean_weight = 1.0;
  Statevector clean_state = clean;
  if (postselect_qubit) {
    auto [ps, p] = postselect(clean, *postselect_qubit, 0);
    clean_state = std::move(ps);
    clean_weight = p;
  }
  for (std::size_t o = 0; o < n_obs; ++o)
    clean_vals[o] = expectation(clean_state, observables[o]);

  std::vector<std::vector<double>> vals(n_obs);
  std::vector<double> weights;
  weights.reserve(static_cast<std::size_t>(trajectories));
  for (auto& v : vals) v.reserve(static_cast<std::size_t>(trajectories));

  for (int t = 0; t < trajectories; ++t) {
    Rng rng(Rng::derive(model.seed, static_cast<std::uint64_t>(t)));
    bool dirty = false;
    // cheap pre-pass: decide insertions first; skip evolution when clean
    std::vector<int> insertions;
    int ecr_index = 0;
    for (const GateOp& g : gates) {
      if (g.kind != GateOp::Kind::ECR) continue;
      if (rng.uniform() < model.p_ecr) {
        insertions.push_back(ecr_index);
        dirty = true;
      }
      ++ecr_index;
    }

    if (!dirty) {
      weights.push_back(clean_weight);
      for (std::size_t o = 0; o < n_obs; ++o) vals[o].push_back(clean_vals[o]);
      continue;
    }

    Statevector state = input;
    int ecr_seen = 0;
    std::size_t next = 0;
    for (const GateOp& g : gates) {
      apply_gate_in_place(state, g);
      if (g.kind != GateOp::Kind::ECR) continue;
      if (next < insertions.size() && insertions[next] == ecr_seen) {
        const int k = static_cast<int>(rng.uniform_int(15)) + 1;
        apply_pauli_pair(state.amplitudes(), g.targets[0], g.targets[1], k);
        ++next;
      }
      ++ecr_seen;
    }

    double w = 1.0;
    if (postselect_qubit) {
      try {
        auto [ps, p] = postselect(state, *postselect_qubit, 0);
        state = std::move(ps);
        w = p;
      } catch (const ZeroProbabilityError&) {
        w = 0.0;
      }
    }
    weights.push_back(w);
    for (std::size_t o = 0; o < n_obs; ++o)
      vals[o].push_back(w > 0.0 ? expectation(state, observables[o]) : 0.0);
  }

  std::vector<NoisyExpectation> out(n_obs);
  const double wsum = pairwise_sum(weights);
  for (std::size_t o = 0; o < n_obs; ++o) {
    std::vector<double> weighted(vals[o].size());
    for (std::size_t t = 0; t < vals[o].size(); ++t)
      weighted[t] = weights[t] * vals[o][t];
    const double mean = pairwise_sum(weighted) / wsum;
    std::vector<double> dev2(vals[o].size());
    for (std::size_t t = 0; t < vals[o].size(); ++t) {
      const double d = weights[t] * (vals[o][t] - mean);
      dev2[t] = d * d;
    }
    NoisyExpectation e;
    e.mean = mean;
    e.trajectories = trajectories;
    e.std_error = std::sqrt(pairwise_sum(dev2)) / wsum;
    out[o] = e;
  }
  return out;
}

MeasurementRecord noisy_sample(const LayeredCircuit& circuit,
                               const Statevector& input,
                               const std::string& basis,
                               const NoiseModel& model, int shots,
                               std::uint64_t seed) {
  model.validate();
  if (shots <= 0) throw SimError("shots must be positive");
  if (static_cast<int>(basis.size()) != circuit.n_qubits)
    throw SimError("basis length mismatch");

  const std::vector<GateOp> gates = circuit.gate_sequence();
  std::vector<GateOp> rots;
  for (int q = 0; q < circuit.n_qubits; ++q)
    for (GateOp& g : basis_rotation(q, basis[static_cast<std::size_t>(q)]))
      rots.push_back(std::move(g));

  // cached clean distribution
  Statevector clean = input;
  for (const GateOp& g : gates) apply_gate_in_place(clean, g);
  for (const GateOp& g : rots) apply_gate_in_place(clean, g);
  std::vector<double> clean_cdf(clean.dim());
  double acc = 0.0;
  for (std::uint64_t i = 0; i < clean.dim(); ++i) {
    acc += std::norm(clean.amp(i));
    clean_cdf[i] = acc;
  }

  const int n = circuit.n_qubits;
  auto draw = [n](const std::vector<double>& cdf, double u) {
    const double total = cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u * total);
    const std::uint64_t idx =
        it == cdf.end() ? cdf.size() - 1
                        : static_cast<std::uint64_t>(it - cdf.begin());
    std::string s(static_cast<std::size_t>(n), '0');
    for (int q = 0; q < n; ++q)
      if (idx >> q & 1) s[static_cast<std::size_t>(q)] = '1';
    return s;
  };

  MeasurementRecord rec;
  rec.basis = basis;
  rec.shots = shots;
  rec.seed = seed;

  // per-shot streams mix the model's seed with the sampling seed
  const std::uint64_t stream_base = Rng::derive(model.seed, seed);
  for (int s = 0; s < shots; ++s) {
    Rng rng(Rng::derive(stream_base, static_cast<std::uint64_t>(s)));
    bool dirty = false;
    std::vector<int> insertions;
    int ecr_index = 0;
    for (const GateOp& g : gates) {
      if (g.kind != GateOp::Kind::ECR) continue;
      if (rng.uniform() < model.p_ecr) {
        insertions.push_back(ecr_index);
        dirty = true;
      }
      ++ecr_index;
    }

    std::string outcome;
    if (!dirty) {
      outcome = draw(clean_cdf, rng.uniform());
    } else {
      Statevector state = input;
      int seen = 0;
      std::size_t next = 0;
      for (const GateOp& g : gates) {
        apply_gate_in_place(state, g);
        if (g.kind != GateOp::Kind::ECR) continue;
        if (next < insertions.size() && insertions[next] == seen) {
          const int k = static_cast<int>(rng.uniform_int(15)) + 1;
          apply_pauli_pair(state.amplitudes(), g.targets[0], g.targets[1], k);
          ++next;
        }
        ++seen;
      }
      for (const GateOp& g : rots) apply_gate_in_place(state, g);
      std::vector<double> cdf(state.dim());
      double a2 = 0.0;
      for (std::uint64_t i = 0; i < state.dim(); ++i) {
        a2 += std::norm(state.amp(i));
        cdf[i] = a2;
      }
      outcome = draw(cdf, rng.uniform());
    }
    ++rec.counts[outcome];
  }
  return rec;
}

MeasurementRecord apply_readout_error(const MeasurementRecord& record,
                                      const NoiseModel& model) {
  model.validate();
  MeasurementRecord out;
  out.basis = record.basis;
  out.shots = record.shots;
  out.seed = record.seed;
  if (model.p_readout == 0.0) {
    out.counts = record.counts;
    return out;
  }
  Rng rng(Rng::derive(model.seed ^ 0xbadc0ffee0ddf00dULL, record.seed));
  for (const auto& [bits, count] : record.counts) {
    for (int c = 0; c < count; ++c) {
      std::string flipped = bits;
      for (char& b : flipped)
        if (rng.uniform() < model.p_readout) b = (b == '0') ? '1' : '0';
      ++out.counts[flipped];
    }
  }
  return out;
}

DensityMatrix density_matrix_reference(const LayeredCircuit& circuit,
                                       const Statevector& input,
                                       const NoiseModel& model) {
  const std::uint64_t d = input.dim();
  DensityMatrix rho0;
  rho0.n_qubits = input.n_qubits();
  const Eigen::Map<const Eigen::VectorXcd> v(
      input.amplitudes().data(), static_cast<Eigen::Index>(d));
  rho0.mat = v * v.adjoint();
  return density_matrix_reference(circuit, rho0, model);
}

DensityMatrix density_matrix_reference(const LayeredCircuit& circuit,
                                       const DensityMatrix& input,
                                       const NoiseModel& model) {
  model.validate();
  if (circuit.n_qubits > 6)
    throw SimError("density-matrix reference limited to 6 qubits");
  if (input.n_qubits != circuit.n_qubits)
    throw SimError("input size mismatch");

  const int n = circuit.n_qubits;
  const std::uint64_t d = 1ULL << n;
  Eigen::MatrixXcd rho = input.mat;

  auto apply_unitary = [&rho, d, n](const GateOp& g) {
    // U rho U^dag column- and row-wise through the statevector kernels
    for (std::uint64_t col = 0; col < d; ++col) {
      std::vector<cplx> column(d);
      for (std::uint64_t r = 0; r < d; ++r) column[r] = rho(r, col);
      Statevector sv = Statevector::from_amplitudes(n, std::move(column));
      apply_gate_in_place(sv, g);
      for (std::uint64_t r = 0; r < d; ++r) rho(r, col) = sv.amp(r);
    }
    for (std::uint64_t row = 0; row < d; ++row) {
      std::vector<cplx> conj_row(d);
      for (std::uint64_t c = 0; c < d; ++c) conj_row[c] = std::conj(rho(row, c));
      Statevector sv = Statevector::from_amplitudes(n, std::move(conj_row));
      apply_gate_in_place(sv, g);
      for (std::uint64_t c = 0; c < d; ++c) rho(row, c) = std::conj(sv.amp(c));
    }
  };

  for (const GateOp& g : circuit.gate_sequence()) {
    apply_unitary(g);
    if (g.kind == GateOp::Kind::ECR && model.p_ecr > 0.0) {
      Eigen::MatrixXcd mixed = Eigen::MatrixXcd::Zero(d, d);
      for (int k = 1; k < 16; ++k) {
        Eigen::MatrixXcd pk = rho;
        // P rho P for Pauli pair k: conjugate columns then rows
        for (std::uint64_t col = 0; col < d; ++col) {
          std::vector<cplx> column(d);
          for (std::uint64_t r = 0; r < d; ++r) column[r] = pk(r, col);
          apply_pauli_pair(column, g.targets[0], g.targets[1], k);
          for (std::uint64_t r = 0; r < d; ++r) pk(r, col) = column[r];
        }
        for (std::uint64_t row = 0; row < d; ++row) {
          std::vector<cplx> conj_row(d);
          for (std::uint64_t c = 0; c < d; ++c)
            conj_row[c] = std::conj(pk(row, c));
          apply_pauli_pair(conj_row, g.targets[0], g.targets[1], k);
          for (std::uint64_t c = 0; c < d; ++c)
            pk(row, c) = std::conj(conj_row[c]);
        }
        mixed += pk;
      }
      rho = (1.0 - model.p_ecr) * rho + (model.p_ecr / 15.0) * mixed;
    }
  }

  DensityMatrix out;
  out.n_qubits = circuit.n_qubits;
  out.mat = std::move(rho);
  return out;
}

}  // namespace sptforge
