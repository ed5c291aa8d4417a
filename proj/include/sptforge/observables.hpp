#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sptforge/model.hpp"
#include "sptforge/noise.hpp"
#include "sptforge/qstate.hpp"

namespace sptforge {

/// String-order window of length n anchored at site 0:
/// Z_0 Y_1 [prod_{k=2}^{n-3} X_k] Y_{n-2} Z_{n-1} as an ordered product;
/// same-site collisions at n = 2, 3 resolve through Pauli multiplication.
PauliString string_order_operator(int L, int n);

/// <O_str(n)> on an L-qubit state, n in [2, L].
double string_order(const Statevector& state, int n);

/// <Z_i> for every site.
std::vector<double> magnetization_profile(const Statevector& state);

struct QuenchResult {
  std::vector<double> ts;
  std::vector<double> z_edge;  // mean over {0, L-1}
  std::vector<double> z_bulk;  // mean over the rest
};

/// Exact quench e^{-itH}|initial>; the initial state is a product-state
/// specification over characters 0, 1, +, - (site 0 first).
QuenchResult quench_edge_bulk(const HamiltonianOperator& h,
                              const std::string& initial_sites,
                              const std::vector<double>& t_grid);

/// Two copies of an L-qubit state on qubits [0,L) and [L,2L), with optional
/// ancillas above; for the QAE register the estimation ancilla A1 sits at 2L
/// and the postselection ancilla A0 at 2L+1.
struct TwoCopyState {
  Statevector state;
  int copy_qubits = 0;
  int n_ancillas = 0;

  static TwoCopyState from_single(const Statevector& single, int n_ancillas);

  /// Max deviation between the two copies' reduced density matrices.
  double copy_asymmetry() const;
};

/// R^2_x = <SWAP_sub(x)> on the two-copy state; S^2 = -ln R^2.
double renyi2_swap(const TwoCopyState& two_copy, int x);

struct QaeResult {
  double value = 0.0;  // 2 P(0) - 1 at the estimation ancilla
  double p0 = 0.0;
  int shots_total = 0;
  int shots_kept = 0;  // after postselecting A0
};

/// QAE readout on a prepared two-copy register (2L + 2 qubits): SWAP(A1,A0),
/// Hadamard, C-SWAP over the first x sites, Hadamard, postselect A0 = 0,
/// estimate 2P(0)-1 on A1. shots == 0 computes exact probabilities; with
/// shots > 0 an optional NoiseModel applies readout errors. Throws
/// PostselectionStarvedError when fewer than min_kept shots survive.
QaeResult qae_renyi(const TwoCopyState& prepared, int x, int shots,
                    const std::optional<NoiseModel>& readout_noise,
                    std::uint64_t seed, int min_kept = 100);

/// The 27 three-qubit measurement settings in lexicographic X<Y<Z order.
std::vector<std::string> tomography_settings();

/// Linear-inversion tomography of a 3-qubit subsystem. shots_per_basis == 0
/// uses exact expectations; otherwise each setting is sampled (optional
/// readout noise). Identity positions marginalize from every compatible
/// setting. The result is Hermitian with unit trace by construction; negative
/// eigenvalues from sampling noise are reported, not clipped.
DensityMatrix tomography_3q(const Statevector& state,
                            const std::array<int, 3>& subsystem,
                            int shots_per_basis, std::uint64_t seed,
                            const std::optional<NoiseModel>& readout_noise);

/// Assembles rho from one measurement record per setting; `bit_positions`
/// locates the three subsystem bits inside the record bitstrings.
DensityMatrix tomography_assemble(
    const std::map<std::string, MeasurementRecord>& records,
    const std::array<int, 3>& bit_positions);

struct EntanglementSpectrum {
  std::vector<double> epsilons;  // descending
  std::vector<double> lambdas;   // -ln(max(eps, floor))
  double gap = 0.0;              // lambdas[gap_pair.first] - lambdas[gap_pair.second]
  std::pair<int, int> gap_pair{2, 1};
  std::vector<double> delta_eps;  // |eps - reference| when a reference is given
};

/// Spectrum of a (possibly sampled) reduced density matrix. Eigenvalues below
/// `floor` are clipped before the logarithm. Throws when |trace - 1| > 1e-3.
EntanglementSpectrum entanglement_spectrum(
    const DensityMatrix& rho, double floor = 1e-12,
    const std::vector<double>* reference_eps = nullptr,
    std::pair<int, int> gap_pair = {2, 1});

/// H (x) I + I (x) H on 2L qubits, the two-copy preparation generator.
HamiltonianOperator two_copy_hamiltonian(const HamiltonianOperator& h);

}  // namespace sptforge
