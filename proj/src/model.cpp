#include "sptforge/model.hpp"

#include <cmath>

namespace sptforge {

std::array<double, 3> IsingClusterParams::normalized() const {
  const double s = J + h + g;
  if (s <= 0.0) return {0.0, 0.0, 0.0};
  return {J / s, h / s, g / s};
}

void HamiltonianOperator::add_term(PauliString term) {
  if (term.n_qubits() != n_qubits_)
    throw SimError("Hamiltonian term size mismatch");
  terms_.push_back(std::move(term));
  dense_.reset();
  spectral_.reset();
}

const Eigen::MatrixXcd& HamiltonianOperator::dense() const {
  if (!dense_) {
    if (n_qubits_ > 12)
      throw SimError("dense Hamiltonian limited to 12 qubits");
    const std::uint64_t d = 1ULL << n_qubits_;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
    for (const PauliString& t : terms_) m += t.dense();
    dense_ = std::move(m);
  }
  return *dense_;
}

const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>&
HamiltonianOperator::spectral() const {
  if (!spectral_) {
    spectral_.emplace(dense());
    if (spectral_->info() != Eigen::Success)
      throw SimError("eigensolver failed");
  }
  return *spectral_;
}

double HamiltonianOperator::expectation_value(const Statevector& state) const {
  double e = 0.0;
  for (const PauliString& t : terms_) e += expectation(state, t);
  return e;
}

HamiltonianOperator build_hamiltonian(const IsingClusterParams& p) {
  if (p.L < 3) throw SimError("Ising-cluster chain needs L >= 3");
  HamiltonianOperator h(p.L);
  if (p.J != 0.0) {
    for (int i = 0; i + 1 < p.L; ++i)
      h.add_term(PauliString::single(p.L, i, 'Z', -p.J) *
                 PauliString::single(p.L, i + 1, 'Z'));
  }
  if (p.h != 0.0) {
    for (int i = 0; i < p.L; ++i)
      h.add_term(PauliString::single(p.L, i, 'X', -p.h));
  }
  if (p.g != 0.0) {
    for (int i = 1; i + 1 < p.L; ++i)
      h.add_term(PauliString::single(p.L, i - 1, 'Z', -p.g) *
                 PauliString::single(p.L, i, 'X') *
                 PauliString::single(p.L, i + 1, 'Z'));
  }
  return h;
}

GroundSpace exact_ground_state(const HamiltonianOperator& h,
                               double degeneracy_tol) {
  const auto& es = h.spectral();
  const Eigen::VectorXd& evals = es.eigenvalues();
  GroundSpace gs;
  gs.energy = evals(0);
  for (Eigen::Index k = 0; k < evals.size(); ++k) {
    if (evals(k) - gs.energy > degeneracy_tol) break;
    const Eigen::VectorXcd v = es.eigenvectors().col(k);
    std::vector<cplx> amps(v.data(), v.data() + v.size());
    gs.states.push_back(
        Statevector::from_amplitudes(h.n_qubits(), std::move(amps)));
  }
  return gs;
}

double ground_space_weight(const GroundSpace& gs, const Statevector& state) {
  double w = 0.0;
  for (const Statevector& s : gs.states) w += std::norm(s.inner(state));
  return w;
}

SymmetryOps symmetry_operators(int L) {
  if (L < 1) throw SimError("L must be positive");
  SymmetryOps ops;
  ops.p_odd = PauliString::identity(L);
  ops.p_even = PauliString::identity(L);
  for (int i = 0; i < L; ++i) {
    PauliString x = PauliString::single(L, i, 'X');
    if (i % 2 == 1)
      ops.p_odd = ops.p_odd * x;
    else
      ops.p_even = ops.p_even * x;
  }
  ops.p = ops.p_odd * ops.p_even;
  return ops;
}

GateOp quench_propagator(const HamiltonianOperator& h, double t) {
  const auto& es = h.spectral();
  const Eigen::VectorXd& evals = es.eigenvalues();
  const Eigen::MatrixXcd& v = es.eigenvectors();
  Eigen::VectorXcd phases(evals.size());
  for (Eigen::Index k = 0; k < evals.size(); ++k)
    phases(k) = std::exp(cplx(0.0, -t * evals(k)));
  Eigen::MatrixXcd u = v * phases.asDiagonal() * v.adjoint();
  std::vector<int> targets(static_cast<std::size_t>(h.n_qubits()));
  for (int q = 0; q < h.n_qubits(); ++q) targets[static_cast<std::size_t>(q)] = q;
  return GateOp::unitary(std::move(targets), std::move(u));
}

Statevector evolve(const HamiltonianOperator& h, const Statevector& psi,
                   double t) {
  if (psi.n_qubits() != h.n_qubits()) throw SimError("evolve size mismatch");
  const auto& es = h.spectral();
  const Eigen::Map<const Eigen::VectorXcd> v(psi.amplitudes().data(),
                                             static_cast<Eigen::Index>(psi.dim()));
  Eigen::VectorXcd coeffs = es.eigenvectors().adjoint() * v;
  for (Eigen::Index k = 0; k < coeffs.size(); ++k)
    coeffs(k) *= std::exp(cplx(0.0, -t * es.eigenvalues()(k)));
  Eigen::VectorXcd out = es.eigenvectors() * coeffs;
  std::vector<cplx> amps(out.data(), out.data() + out.size());
  return Statevector::from_amplitudes(psi.n_qubits(), std::move(amps));
}

}  // namespace sptforge
