#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sptforge/common.hpp"
#include "sptforge/pauli.hpp"

namespace sptforge {

/// Dense n-qubit state. Qubit 0 is the least-significant bit of the basis
/// index; bitstrings in I/O are written left-to-right as qubit 0 ... n-1.
class Statevector {
 public:
  Statevector() = default;
  /// |0...0> on n qubits.
  explicit Statevector(int n_qubits);

  static Statevector computational_basis(int n_qubits, std::uint64_t index);
  static Statevector from_amplitudes(int n_qubits, std::vector<cplx> amps);
  /// Product state from per-site characters '0', '1', '+', '-'
  /// (site 0 first, matching the I/O bit order).
  static Statevector product_state(const std::string& sites);

  int n_qubits() const { return n_qubits_; }
  std::uint64_t dim() const { return 1ULL << n_qubits_; }

  const std::vector<cplx>& amplitudes() const { return amps_; }
  std::vector<cplx>& amplitudes() { return amps_; }
  cplx amp(std::uint64_t i) const { return amps_[i]; }

  double norm() const;
  double squared_norm() const;
  void normalize();

  /// <this|other>.
  cplx inner(const Statevector& other) const;

 private:
  int n_qubits_ = 0;
  std::vector<cplx> amps_;
};

/// a on the low qubits, b appended above them.
Statevector tensor(const Statevector& a, const Statevector& b);

struct DensityMatrix {
  int n_qubits = 0;
  Eigen::MatrixXcd mat;

  double trace_real() const { return mat.trace().real(); }
  double hermiticity_error() const {
    return (mat - mat.adjoint()).cwiseAbs().maxCoeff();
  }
  /// Eigenvalues ascending (self-adjoint solve).
  Eigen::VectorXd eigenvalues() const;
};

/// Gate with explicit targets. For multi-qubit kinds targets[0] is the
/// least-significant bit of the gate-local index.
struct GateOp {
  enum class Kind { U3, ECR, X, Swap, ControlledSwap, Unitary };

  Kind kind = Kind::X;
  std::vector<int> targets;
  double theta = 0.0, phi = 0.0, lambda = 0.0;  // U3 only
  Eigen::MatrixXcd matrix;                      // Unitary only

  static GateOp u3(int q, double theta, double phi, double lambda);
  static GateOp ecr(int q0, int q1);
  static GateOp x(int q);
  static GateOp swap(int a, int b);
  static GateOp cswap(int control, int a, int b);
  /// Generic unitary on k targets; rejects matrices that are not unitary
  /// within 1e-12 (max-norm of G^dag G - I).
  static GateOp unitary(std::vector<int> targets, Eigen::MatrixXcd m);

  /// Dense matrix of the gate on its targets (2^k x 2^k).
  Eigen::MatrixXcd matrix_rep() const;
};

/// ECR matrix from the hardware convention: Hermitian and self-inverse.
Eigen::Matrix4cd ecr_matrix();
Eigen::Matrix2cd u3_matrix(double theta, double phi, double lambda);

void apply_gate_in_place(Statevector& state, const GateOp& gate);
Statevector apply_gate(Statevector state, const GateOp& gate);

/// <psi|P|psi>. Requires a Hermitian PauliString (real coefficient).
double expectation(const Statevector& state, const PauliString& obs);

/// P|psi> including the coefficient.
Statevector apply_pauli(const Statevector& state, const PauliString& p);

/// rho_A = Tr_B |psi><psi|. `keep` must be non-empty, sorted ascending;
/// keep[k] becomes bit k of the reduced index.
DensityMatrix reduced_density(const Statevector& state,
                              const std::vector<int>& keep);

struct MeasurementRecord {
  std::string basis;  // per-qubit measurement axis, e.g. "ZZYX"
  int shots = 0;
  std::map<std::string, int> counts;  // bitstring (qubit 0 first) -> count
  std::uint64_t seed = 0;

  int total_counts() const;
};

/// Measure all qubits after applying `rotations`; deterministic given seed.
MeasurementRecord sample(const Statevector& state,
                         const std::vector<GateOp>& rotations, int shots,
                         std::uint64_t seed);

/// Convenience: rotate each qubit into the given Pauli axis ('I' measured as Z).
MeasurementRecord sample_pauli_basis(const Statevector& state,
                                     const std::string& basis, int shots,
                                     std::uint64_t seed);

/// Rotation gates mapping the given Pauli axis onto Z for one qubit.
std::vector<GateOp> basis_rotation(int qubit, char axis);

/// Projects `qubit` onto |outcome> and renormalizes; the qubit stays in the
/// register, pinned. Throws ZeroProbabilityError on a vanishing branch.
std::pair<Statevector, double> postselect(const Statevector& state, int qubit,
                                          int outcome);

/// Removes a qubit that is pinned to |0> or |1> (product form required).
Statevector drop_qubit(const Statevector& state, int qubit);

/// Mean estimate of a +/-1 parity observable from a measurement record:
/// product of (-1)^bit over `sites`. Returns {mean, standard error}.
std::pair<double, double> parity_mean(const MeasurementRecord& record,
                                      const std::vector<int>& sites);

}  // namespace sptforge
