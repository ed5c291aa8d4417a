#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <vector>

#include "sptforge/pauli.hpp"
#include "sptforge/qstate.hpp"

namespace sptforge {

/// Ising-cluster couplings on an open chain of L sites:
///   H = -J sum_{i<L-1} Z_i Z_{i+1} - h sum_i X_i - g sum_{0<i<L-1} Z_{i-1} X_i Z_{i+1}
struct IsingClusterParams {
  double J = 1.0;
  double h = 1.0;
  double g = 1.0;
  int L = 4;

  /// (J,h,g)/(J+h+g); sums to 1 when the couplings are not all zero.
  std::array<double, 3> normalized() const;
};

class HamiltonianOperator {
 public:
  HamiltonianOperator() = default;
  explicit HamiltonianOperator(int n_qubits) : n_qubits_(n_qubits) {}

  int n_qubits() const { return n_qubits_; }
  const std::vector<PauliString>& terms() const { return terms_; }
  void add_term(PauliString term);

  /// Dense 2^n x 2^n matrix, cached after first build (n <= 12).
  const Eigen::MatrixXcd& dense() const;

  /// Eigendecomposition of the dense form, cached. Eigenvalues ascending.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>& spectral() const;

  double expectation_value(const Statevector& state) const;

 private:
  int n_qubits_ = 0;
  std::vector<PauliString> terms_;
  mutable std::optional<Eigen::MatrixXcd> dense_;
  mutable std::optional<Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>>
      spectral_;
};

HamiltonianOperator build_hamiltonian(const IsingClusterParams& p);

struct GroundSpace {
  double energy = 0.0;
  /// Orthonormal basis of all eigenvectors within degeneracy_tol of energy.
  std::vector<Statevector> states;

  int degeneracy() const { return static_cast<int>(states.size()); }
};

/// Lowest eigenvalue and every eigenvector within degeneracy_tol of it.
GroundSpace exact_ground_state(const HamiltonianOperator& h,
                               double degeneracy_tol = 1e-8);

/// Squared overlap of `state` with the ground space (projection weight).
double ground_space_weight(const GroundSpace& gs, const Statevector& state);

struct SymmetryOps {
  PauliString p_odd;   // product of X over odd sites
  PauliString p_even;  // product of X over even sites
  PauliString p;       // global spin flip p_odd * p_even
};

SymmetryOps symmetry_operators(int L);

/// Exact e^{-i t H} as a full-register generic-unitary gate.
GateOp quench_propagator(const HamiltonianOperator& h, double t);

/// e^{-i t H}|psi> via the cached spectral decomposition.
Statevector evolve(const HamiltonianOperator& h, const Statevector& psi,
                   double t);

}  // namespace sptforge
