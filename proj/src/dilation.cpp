#include "sptforge/dilation.hpp"

#include <cmath>

namespace sptforge {

namespace {

// Assembles Q from the scaled block uN (whose largest singular value must not
// exceed 1) and its SVD factors.
DilatedUnitary assemble(const Eigen::MatrixXcd& scaled,
                        const Eigen::MatrixXcd& a_factor,
                        const Eigen::VectorXd& scaled_sigmas,
                        const Eigen::MatrixXcd& b_factor, double u,
                        double beta_tag, int n_system) {
  const Eigen::Index d = scaled.rows();
  for (Eigen::Index k = 0; k < scaled_sigmas.size(); ++k) {
    if (scaled_sigmas(k) > 1.0 + 1e-12)
      throw SimError("scale policy violated: u*sigma exceeds 1");
  }

  Eigen::VectorXd comp(scaled_sigmas.size());
  for (Eigen::Index k = 0; k < comp.size(); ++k)
    comp(k) = std::sqrt(std::max(0.0, 1.0 - scaled_sigmas(k) * scaled_sigmas(k)));
  const Eigen::MatrixXcd c_block =
      a_factor * comp.asDiagonal() * b_factor.adjoint();

  Eigen::MatrixXcd upp(2 * d, 2 * d);
  upp.topLeftCorner(d, d) = scaled;
  upp.topRightCorner(d, d) = Eigen::MatrixXcd::Identity(d, d);
  upp.bottomLeftCorner(d, d) = c_block;
  upp.bottomRightCorner(d, d) = Eigen::MatrixXcd::Identity(d, d);

  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(upp);
  Eigen::MatrixXcd q = qr.householderQ();
  const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();

  // force a real positive diagonal on the triangular factor
  for (Eigen::Index k = 0; k < 2 * d; ++k) {
    const cplx rkk = r(k, k);
    const double mag = std::abs(rkk);
    if (mag < 1e-12) throw SimError("dilation block matrix is singular");
    q.col(k) *= rkk / mag;
  }

  DilatedUnitary out;
  out.beta = beta_tag;
  out.u = u;
  out.q = std::move(q);
  out.n_system_qubits = n_system;
  out.ancilla_index = n_system;
  return out;
}

int qubits_for_dim(Eigen::Index d) {
  int n = 0;
  while ((Eigen::Index{1} << n) < d) ++n;
  if ((Eigen::Index{1} << n) != d)
    throw SimError("matrix dimension must be a power of two");
  return n;
}

}  // namespace

GateOp DilatedUnitary::as_gate() const {
  std::vector<int> targets(static_cast<std::size_t>(n_system_qubits) + 1);
  for (std::size_t i = 0; i < targets.size(); ++i)
    targets[i] = static_cast<int>(i);
  return GateOp::unitary(std::move(targets), q);
}

Eigen::MatrixXcd propagator(const HamiltonianOperator& h, double beta) {
  if (beta < 0.0) throw SimError("beta must be non-negative");
  const auto& es = h.spectral();
  Eigen::VectorXd w(es.eigenvalues().size());
  for (Eigen::Index k = 0; k < w.size(); ++k)
    w(k) = std::exp(-beta * es.eigenvalues()(k));
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
}

DilatedUnitary dilate(const Eigen::MatrixXcd& n_op,
                      std::optional<double> scale, double beta_tag) {
  if (n_op.rows() != n_op.cols()) throw SimError("dilate expects a square matrix");
  const int n_system = qubits_for_dim(n_op.rows());

  // two-sided Jacobi: slower than divide-and-conquer but dependable on
  // complex matrices with tightly clustered singular values
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
      n_op, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double sigma_max = svd.singularValues()(0);
  if (sigma_max <= 0.0) throw SimError("dilate expects a nonzero matrix");
  const double u = scale.value_or(1.0 / sigma_max);

  const Eigen::MatrixXcd scaled = u * n_op;
  const Eigen::VectorXd scaled_sigmas = u * svd.singularValues();
  return assemble(scaled, svd.matrixU(), scaled_sigmas, svd.matrixV(), u,
                  beta_tag, n_system);
}

DilatedUnitary dilate_qite(const HamiltonianOperator& h, double beta) {
  if (beta < 0.0) throw SimError("beta must be non-negative");
  const auto& es = h.spectral();
  const Eigen::VectorXd& evals = es.eigenvalues();
  const double e0 = evals(0);

  // u e^{-beta H} = e^{-beta (H - E0)}; never overflows for beta >= 0
  Eigen::VectorXd w(evals.size());
  for (Eigen::Index k = 0; k < w.size(); ++k)
    w(k) = std::exp(-beta * (evals(k) - e0));
  const Eigen::MatrixXcd scaled =
      es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();

  // the eigenvector matrix serves as both SVD factors of the PSD propagator
  return assemble(scaled, es.eigenvectors(), w, es.eigenvectors(),
                  std::exp(beta * e0), beta, h.n_qubits());
}

QitePreparation qite_prepare(const HamiltonianOperator& h, double beta,
                             const Statevector& initial) {
  if (initial.n_qubits() != h.n_qubits())
    throw SimError("initial state size mismatch");

  // An initial state orthogonal to the ground space still converges, to the
  // lowest state within its own symmetry sector; the failure mode is the
  // postselection branch underflowing to zero probability.
  const DilatedUnitary dil = dilate_qite(h, beta);
  Statevector full = tensor(initial, Statevector(1));
  apply_gate_in_place(full, dil.as_gate());
  auto [post, prob] = postselect(full, dil.ancilla_index, 0);
  return {drop_qubit(post, dil.ancilla_index), prob};
}

double beta_schedule(const HamiltonianOperator& h, const Statevector& initial,
                     double target_fidelity, const BetaScheduleOptions& opts) {
  const GroundSpace gs = exact_ground_state(h, opts.degeneracy_tol);
  if (gs.degeneracy() > 1)
    throw DegenerateGroundStateError(
        "ground space is degenerate; choose a symmetry sector explicitly");
  const Statevector& target = gs.states[0];
  if (std::norm(target.inner(initial)) < 1e-12)
    throw SimError("initial state has no overlap with the ground state");

  // work in the eigenbasis: weights e^{-2 beta (E_k - E_0)}
  const auto& es = h.spectral();
  const Eigen::Map<const Eigen::VectorXcd> v(
      initial.amplitudes().data(), static_cast<Eigen::Index>(initial.dim()));
  const Eigen::VectorXcd coeffs = es.eigenvectors().adjoint() * v;

  for (double beta = opts.beta_start; beta <= opts.beta_cap; beta *= 2.0) {
    double total = 0.0, ground = 0.0;
    for (Eigen::Index k = 0; k < coeffs.size(); ++k) {
      const double w = std::norm(coeffs(k)) *
                       std::exp(-2.0 * beta * (es.eigenvalues()(k) -
                                               es.eigenvalues()(0)));
      total += w;
      if (es.eigenvalues()(k) - es.eigenvalues()(0) <= opts.degeneracy_tol)
        ground += w;
    }
    if (ground / total >= target_fidelity) return beta;
  }
  throw SimError("beta_schedule did not reach the target fidelity within cap");
}

}  // namespace sptforge
