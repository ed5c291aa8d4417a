#pragma once

#include <Eigen/Dense>
#include <optional>

#include "sptforge/model.hpp"
#include "sptforge/qstate.hpp"

namespace sptforge {

/// Unitary embedding of a nonunitary operator N on L qubits into L+1 qubits:
/// with the ancilla as the most-significant qubit, the block layout is
///   Q = [[u*N, B], [C, D]],
/// so postselecting the ancilla on |0> applies u*N to the system.
struct DilatedUnitary {
  double beta = 0.0;   // imaginary time tag (0 for generic dilations)
  double u = 1.0;      // scale factor applied to the embedded block
  Eigen::MatrixXcd q;  // full (2^{L+1})-dim unitary
  int n_system_qubits = 0;
  int ancilla_index = 0;  // == n_system_qubits

  Eigen::Index system_dim() const { return 1LL << n_system_qubits; }
  Eigen::MatrixXcd top_left() const {
    return q.topLeftCorner(system_dim(), system_dim());
  }
  Eigen::MatrixXcd top_right() const {
    return q.topRightCorner(system_dim(), system_dim());
  }
  Eigen::MatrixXcd bottom_left() const {
    return q.bottomLeftCorner(system_dim(), system_dim());
  }
  Eigen::MatrixXcd bottom_right() const {
    return q.bottomRightCorner(system_dim(), system_dim());
  }

  /// Full-register generic-unitary gate (targets 0..L in order).
  GateOp as_gate() const;
};

/// e^{-beta H} of the dense Hamiltonian; symmetric positive definite.
Eigen::MatrixXcd propagator(const HamiltonianOperator& h, double beta);

/// Embeds a square nonunitary matrix. The scale defaults to 1/sigma_max so
/// that u^2 Sigma^2 <= I always holds; an explicit scale must respect that
/// bound. Construction: SVD -> C block -> QR of [[uN, I], [C, I]] with the
/// diagonal of the triangular factor forced real positive, which pins the
/// first block column of Q to exactly [uN; C].
DilatedUnitary dilate(const Eigen::MatrixXcd& n_op,
                      std::optional<double> scale = std::nullopt,
                      double beta_tag = 0.0);

/// Dilation of e^{-beta H} built from the spectral decomposition, stable for
/// large beta (works with e^{-beta(H - E0)} internally).
DilatedUnitary dilate_qite(const HamiltonianOperator& h, double beta);

struct QitePreparation {
  Statevector state;          // postselected, normalized system state
  double success_probability; // == || u e^{-beta H} |psi0> ||^2
};

/// Ancilla-dilated imaginary-time evolution with postselection on |0_A>.
/// Requires the initial state to overlap the ground space.
QitePreparation qite_prepare(const HamiltonianOperator& h, double beta,
                             const Statevector& initial);

struct BetaScheduleOptions {
  double degeneracy_tol = 1e-8;
  double beta_start = 0.5;
  double beta_cap = 4096.0;
};

/// Smallest beta on a doubling grid whose QITE output reaches target_fidelity
/// (squared overlap) with the unique exact ground state. Throws
/// DegenerateGroundStateError when the ground space is not one-dimensional.
double beta_schedule(const HamiltonianOperator& h, const Statevector& initial,
                     double target_fidelity,
                     const BetaScheduleOptions& opts = {});

}  // namespace sptforge
