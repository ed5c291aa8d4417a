#include "sptforge/observables.hpp"

#include <algorithm>
#include <cmath>

#include "sptforge/ansatz.hpp"

namespace sptforge {

PauliString string_order_operator(int L, int n) {
  if (n < 2 || n > L) throw SimError("string window must satisfy 2 <= n <= L");
  PauliString op = PauliString::single(L, 0, 'Z');
  op = op * PauliString::single(L, 1, 'Y');
  for (int k = 2; k <= n - 3; ++k) op = op * PauliString::single(L, k, 'X');
  op = op * PauliString::single(L, n - 2, 'Y');
  op = op * PauliString::single(L, n - 1, 'Z');
  return op;
}

double string_order(const Statevector& state, int n) {
  return expectation(state, string_order_operator(state.n_qubits(), n));
}

std::vector<double> magnetization_profile(const Statevector& state) {
  std::vector<double> z(static_cast<std::size_t>(state.n_qubits()));
  for (int i = 0; i < state.n_qubits(); ++i)
    z[static_cast<std::size_t>(i)] =
        expectation(state, PauliString::single(state.n_qubits(), i, 'Z'));
  return z;
}

QuenchResult quench_edge_bulk(const HamiltonianOperator& h,
                              const std::string& initial_sites,
                              const std::vector<double>& t_grid) {
  if (!std::is_sorted(t_grid.begin(), t_grid.end()))
    throw SimError("time grid must be sorted");
  const int L = h.n_qubits();
  if (static_cast<int>(initial_sites.size()) != L)
    throw SimError("initial state length mismatch");
  const Statevector psi0 = Statevector::product_state(initial_sites);

  QuenchResult out;
  out.ts = t_grid;
  for (double t : t_grid) {
    const Statevector psi = evolve(h, psi0, t);
    double ze = 0.0, zb = 0.0;
    for (int i = 0; i < L; ++i) {
      const double zi = expectation(psi, PauliString::single(L, i, 'Z'));
      if (i == 0 || i == L - 1)
        ze += zi;
      else
        zb += zi;
    }
    out.z_edge.push_back(ze / 2.0);
    out.z_bulk.push_back(L > 2 ? zb / (L - 2) : 0.0);
  }
  return out;
}

TwoCopyState TwoCopyState::from_single(const Statevector& single,
                                       int n_ancillas) {
  TwoCopyState t;
  t.copy_qubits = single.n_qubits();
  t.n_ancillas = n_ancillas;
  Statevector s = tensor(single, single);
  if (n_ancillas > 0) s = tensor(s, Statevector(n_ancillas));
  t.state = std::move(s);
  return t;
}

double TwoCopyState::copy_asymmetry() const {
  std::vector<int> first, second;
  for (int q = 0; q < copy_qubits; ++q) first.push_back(q);
  for (int q = 0; q < copy_qubits; ++q) second.push_back(copy_qubits + q);
  const DensityMatrix a = reduced_density(state, first);
  const DensityMatrix b = reduced_density(state, second);
  return (a.mat - b.mat).cwiseAbs().maxCoeff();
}

double renyi2_swap(const TwoCopyState& two_copy, int x) {
  const int L = two_copy.copy_qubits;
  if (x < 0 || x > L) throw SimError("swap length out of range");
  const Statevector& psi = two_copy.state;
  std::uint64_t low_mask = 0;
  for (int i = 0; i < x; ++i) low_mask |= 1ULL << i;
  const std::uint64_t hi_mask = low_mask << L;

  cplx acc = 0.0;
  for (std::uint64_t i = 0; i < psi.dim(); ++i) {
    const std::uint64_t a = i & low_mask;
    const std::uint64_t b = (i >> L) & low_mask;
    const std::uint64_t j = (i & ~(low_mask | hi_mask)) | b | (a << L);
    acc += std::conj(psi.amp(i)) * psi.amp(j);
  }
  if (std::abs(acc.imag()) > 1e-9)
    throw SimError("swap expectation is not real; invalid two-copy state");
  return acc.real();
}

QaeResult qae_renyi(const TwoCopyState& prepared, int x, int shots,
                    const std::optional<NoiseModel>& readout_noise,
                    std::uint64_t seed, int min_kept) {
  const int L = prepared.copy_qubits;
  if (prepared.n_ancillas != 2)
    throw SimError("QAE needs ancillas A1 = 2L and A0 = 2L+1");
  if (x < 0 || x > L) throw SimError("swap length out of range");
  const int a1 = 2 * L, a0 = 2 * L + 1;

  Statevector state = prepared.state;
  for (const GateOp& g : qae_readout_gates(L, x)) apply_gate_in_place(state, g);

  QaeResult res;
  if (shots == 0) {
    // exact probabilities conditioned on A0 = 0
    double p_a0 = 0.0, p_a0_a1_0 = 0.0;
    const std::uint64_t b0 = 1ULL << a0, b1 = 1ULL << a1;
    for (std::uint64_t i = 0; i < state.dim(); ++i) {
      if (i & b0) continue;
      const double w = std::norm(state.amp(i));
      p_a0 += w;
      if (!(i & b1)) p_a0_a1_0 += w;
    }
    if (p_a0 < 1e-14)
      throw ZeroProbabilityError("postselection branch has zero probability");
    res.p0 = p_a0_a1_0 / p_a0;
    res.value = 2.0 * res.p0 - 1.0;
    return res;
  }

  MeasurementRecord rec = sample(state, {}, shots, seed);
  if (readout_noise) rec = apply_readout_error(rec, *readout_noise);
  int kept = 0, zeros = 0;
  for (const auto& [bits, count] : rec.counts) {
    if (bits.at(static_cast<std::size_t>(a0)) != '0') continue;
    kept += count;
    if (bits.at(static_cast<std::size_t>(a1)) == '0') zeros += count;
  }
  if (kept < min_kept)
    throw PostselectionStarvedError(
        "too few shots survived postselection on A0");
  res.shots_total = shots;
  res.shots_kept = kept;
  res.p0 = static_cast<double>(zeros) / kept;
  res.value = 2.0 * res.p0 - 1.0;
  return res;
}

std::vector<std::string> tomography_settings() {
  std::vector<std::string> out;
  const char axes[3] = {'X', 'Y', 'Z'};
  for (char a : axes)
    for (char b : axes)
      for (char c : axes) out.push_back(std::string{a, b, c});
  return out;
}

namespace {

const std::array<char, 4> kPauliLetters = {'I', 'X', 'Y', 'Z'};

// Pauli matrices entry tables for assembling rho = (1/8) sum c S1 S2 S3
Eigen::Matrix2cd letter_matrix(char c) {
  const cplx i(0.0, 1.0);
  Eigen::Matrix2cd m;
  switch (c) {
    case 'I': m << 1, 0, 0, 1; break;
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, -i, i, 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: throw SimError("invalid letter");
  }
  return m;
}

}  // namespace

DensityMatrix tomography_assemble(
    const std::map<std::string, MeasurementRecord>& records,
    const std::array<int, 3>& bit_positions) {
  DensityMatrix rho;
  rho.n_qubits = 3;
  rho.mat = Eigen::MatrixXcd::Zero(8, 8);

  for (char s1 : kPauliLetters) {
    for (char s2 : kPauliLetters) {
      for (char s3 : kPauliLetters) {
        const std::string label{s1, s2, s3};
        double c = 0.0;
        if (label == "III") {
          c = 1.0;
        } else {
          // average the parity estimate over every compatible setting
          double sum = 0.0;
          int n_settings = 0;
          for (const auto& [setting, rec] : records) {
            bool compatible = true;
            for (int k = 0; k < 3; ++k)
              if (label[static_cast<std::size_t>(k)] != 'I' &&
                  label[static_cast<std::size_t>(k)] !=
                      setting[static_cast<std::size_t>(k)])
                compatible = false;
            if (!compatible) continue;
            std::vector<int> sites;
            for (int k = 0; k < 3; ++k)
              if (label[static_cast<std::size_t>(k)] != 'I')
                sites.push_back(bit_positions[static_cast<std::size_t>(k)]);
            sum += parity_mean(rec, sites).first;
            ++n_settings;
          }
          if (n_settings == 0)
            throw SimError("tomography records do not cover " + label);
          c = sum / n_settings;
        }
        Eigen::MatrixXcd op = Eigen::MatrixXcd::Identity(1, 1);
        // site 1 of the label acts on the least-significant reduced bit
        for (char letter : {s1, s2, s3}) {
          const Eigen::Matrix2cd m = letter_matrix(letter);
          Eigen::MatrixXcd next(op.rows() * 2, op.cols() * 2);
          for (int r = 0; r < 2; ++r)
            for (int s = 0; s < 2; ++s)
              next.block(r * op.rows(), s * op.cols(), op.rows(), op.cols()) =
                  m(r, s) * op;
          op.swap(next);
        }
        rho.mat += (c / 8.0) * op;
      }
    }
  }
  return rho;
}

DensityMatrix tomography_3q(const Statevector& state,
                            const std::array<int, 3>& subsystem,
                            int shots_per_basis, std::uint64_t seed,
                            const std::optional<NoiseModel>& readout_noise) {
  for (int q : subsystem)
    if (q < 0 || q >= state.n_qubits())
      throw SimError("subsystem index out of range");
  if (subsystem[0] == subsystem[1] || subsystem[1] == subsystem[2] ||
      subsystem[0] == subsystem[2])
    throw SimError("subsystem indices must be distinct");

  if (shots_per_basis == 0) {
    // exact expectations; equivalent to infinite shots
    DensityMatrix rho;
    rho.n_qubits = 3;
    rho.mat = Eigen::MatrixXcd::Zero(8, 8);
    for (char s1 : kPauliLetters) {
      for (char s2 : kPauliLetters) {
        for (char s3 : kPauliLetters) {
          PauliString p = PauliString::identity(state.n_qubits());
          const std::array<char, 3> letters{s1, s2, s3};
          for (int k = 0; k < 3; ++k)
            if (letters[static_cast<std::size_t>(k)] != 'I')
              p = p * PauliString::single(
                          state.n_qubits(),
                          subsystem[static_cast<std::size_t>(k)],
                          letters[static_cast<std::size_t>(k)]);
          const double c = expectation(state, p);
          Eigen::MatrixXcd op = Eigen::MatrixXcd::Identity(1, 1);
          for (char letter : letters) {
            const Eigen::Matrix2cd m = letter_matrix(letter);
            Eigen::MatrixXcd next(op.rows() * 2, op.cols() * 2);
            for (int r = 0; r < 2; ++r)
              for (int s = 0; s < 2; ++s)
                next.block(r * op.rows(), s * op.cols(), op.rows(),
                           op.cols()) = m(r, s) * op;
            op.swap(next);
          }
          rho.mat += (c / 8.0) * op;
        }
      }
    }
    return rho;
  }

  if (shots_per_basis < 64)
    throw SimError("tomography needs at least 64 shots per basis");

  std::map<std::string, MeasurementRecord> records;
  const auto settings = tomography_settings();
  for (std::size_t si = 0; si < settings.size(); ++si) {
    std::string basis(static_cast<std::size_t>(state.n_qubits()), 'Z');
    for (int k = 0; k < 3; ++k)
      basis[static_cast<std::size_t>(subsystem[static_cast<std::size_t>(k)])] =
          settings[si][static_cast<std::size_t>(k)];
    MeasurementRecord rec = sample_pauli_basis(
        state, basis, shots_per_basis, Rng::derive(seed, 100 + si));
    if (readout_noise) rec = apply_readout_error(rec, *readout_noise);
    records[settings[si]] = std::move(rec);
  }
  return tomography_assemble(records, subsystem);
}

EntanglementSpectrum entanglement_spectrum(
    const DensityMatrix& rho, double floor,
    const std::vector<double>* reference_eps, std::pair<int, int> gap_pair) {
  const double trace = rho.trace_real();
  if (std::abs(trace - 1.0) > 1e-3)
    throw SimError("density matrix trace deviates from 1 beyond tolerance");

  Eigen::VectorXd ev = rho.eigenvalues();  // ascending
  EntanglementSpectrum out;
  out.gap_pair = gap_pair;
  for (Eigen::Index k = ev.size() - 1; k >= 0; --k)
    out.epsilons.push_back(ev(k));
  for (double e : out.epsilons)
    out.lambdas.push_back(-std::log(std::max(e, floor)));
  const int n = static_cast<int>(out.lambdas.size());
  if (gap_pair.first < n && gap_pair.second < n)
    out.gap = out.lambdas[static_cast<std::size_t>(gap_pair.first)] -
              out.lambdas[static_cast<std::size_t>(gap_pair.second)];
  if (reference_eps) {
    for (std::size_t k = 0; k < out.epsilons.size(); ++k) {
      const double ref =
          k < reference_eps->size() ? (*reference_eps)[k] : 0.0;
      out.delta_eps.push_back(std::abs(out.epsilons[k] - ref));
    }
  }
  return out;
}

HamiltonianOperator two_copy_hamiltonian(const HamiltonianOperator& h) {
  const int L = h.n_qubits();
  HamiltonianOperator out(2 * L);
  for (const PauliString& t : h.terms()) {
    std::string a(static_cast<std::size_t>(2 * L), 'I');
    std::string b(static_cast<std::size_t>(2 * L), 'I');
    for (int q = 0; q < L; ++q) {
      a[static_cast<std::size_t>(q)] = t.letter(q);
      b[static_cast<std::size_t>(L + q)] = t.letter(q);
    }
    out.add_term(PauliString(t.coefficient(), a));
    out.add_term(PauliString(t.coefficient(), b));
  }
  return out;
}

}  // namespace sptforge
