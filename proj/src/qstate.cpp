#include "sptforge/qstate.hpp"

#include <algorithm>
#include <cmath>

namespace sptforge {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

void check_targets(const std::vector<int>& targets, int n_qubits) {
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < 0 || targets[i] >= n_qubits)
      throw SimError("gate target out of range");
    for (std::size_t j = i + 1; j < targets.size(); ++j)
      if (targets[i] == targets[j]) throw SimError("duplicate gate target");
  }
}

void apply_single_qubit(std::vector<cplx>& a, int q, cplx m00, cplx m01,
                        cplx m10, cplx m11) {
  const std::uint64_t dim = a.size();
  const std::uint64_t stride = 1ULL << q;
  for (std::uint64_t base = 0; base < dim; base += 2 * stride) {
    for (std::uint64_t j = base; j < base + stride; ++j) {
      const cplx lo = a[j];
      const cplx hi = a[j + stride];
      a[j] = m00 * lo + m01 * hi;
      a[j + stride] = m10 * lo + m11 * hi;
    }
  }
}

// 4x4 row-major matrix; local index = bit(q0) + 2*bit(q1).
void apply_two_qubit(std::vector<cplx>& a, int q0, int q1, const cplx m[16]) {
  const std::uint64_t dim = a.size();
  const std::uint64_t s0 = 1ULL << q0;
  const std::uint64_t s1 = 1ULL << q1;
  const std::uint64_t mask = s0 | s1;
  for (std::uint64_t i = 0; i < dim; ++i) {
    if (i & mask) continue;
    const std::uint64_t i0 = i, i1 = i | s0, i2 = i | s1, i3 = i | mask;
    const cplx v0 = a[i0], v1 = a[i1], v2 = a[i2], v3 = a[i3];
    a[i0] = m[0] * v0 + m[1] * v1 + m[2] * v2 + m[3] * v3;
    a[i1] = m[4] * v0 + m[5] * v1 + m[6] * v2 + m[7] * v3;
    a[i2] = m[8] * v0 + m[9] * v1 + m[10] * v2 + m[11] * v3;
    a[i3] = m[12] * v0 + m[13] * v1 + m[14] * v2 + m[15] * v3;
  }
}

void apply_k_qubit(std::vector<cplx>& a, const std::vector<int>& targets,
                   const Eigen::MatrixXcd& m) {
  const std::uint64_t dim = a.size();
  const int k = static_cast<int>(targets.size());
  const std::uint64_t block = 1ULL << k;
  std::uint64_t mask = 0;
  for (int t : targets) mask |= 1ULL << t;

  std::vector<std::uint64_t> offset(block);
  for (std::uint64_t l = 0; l < block; ++l) {
    std::uint64_t off = 0;
    for (int b = 0; b < k; ++b)
      if (l >> b & 1) off |= 1ULL << targets[b];
    offset[l] = off;
  }

  std::vector<cplx> in(block), out(block);
  for (std::uint64_t i = 0; i < dim; ++i) {
    if (i & mask) continue;
    for (std::uint64_t l = 0; l < block; ++l) in[l] = a[i | offset[l]];
    for (std::uint64_t r = 0; r < block; ++r) {
      cplx acc = 0.0;
      for (std::uint64_t c = 0; c < block; ++c) acc += m(r, c) * in[c];
      out[r] = acc;
    }
    for (std::uint64_t l = 0; l < block; ++l) a[i | offset[l]] = out[l];
  }
}

}  // namespace

Statevector::Statevector(int n_qubits) : n_qubits_(n_qubits) {
  if (n_qubits < 0 || n_qubits > 26) throw SimError("qubit count out of range");
  amps_.assign(1ULL << n_qubits, 0.0);
  amps_[0] = 1.0;
}

Statevector Statevector::computational_basis(int n_qubits,
                                             std::uint64_t index) {
  Statevector s(n_qubits);
  if (index >= s.dim()) throw SimError("basis index out of range");
  s.amps_[0] = 0.0;
  s.amps_[index] = 1.0;
  return s;
}

Statevector Statevector::from_amplitudes(int n_qubits,
                                         std::vector<cplx> amps) {
  if (amps.size() != (1ULL << n_qubits))
    throw SimError("amplitude vector length must be 2^n");
  Statevector s;
  s.n_qubits_ = n_qubits;
  s.amps_ = std::move(amps);
  return s;
}

Statevector Statevector::product_state(const std::string& sites) {
  const int n = static_cast<int>(sites.size());
  Statevector s(n);
  std::vector<cplx>& a = s.amps_;
  a.assign(s.dim(), 1.0);
  for (int q = 0; q < n; ++q) {
    cplx w0, w1;
    switch (sites[static_cast<std::size_t>(q)]) {
      case '0': w0 = 1.0; w1 = 0.0; break;
      case '1': w0 = 0.0; w1 = 1.0; break;
      case '+': w0 = kInvSqrt2; w1 = kInvSqrt2; break;
      case '-': w0 = kInvSqrt2; w1 = -kInvSqrt2; break;
      default:
        throw SimError("product_state expects characters 0, 1, +, -");
    }
    for (std::uint64_t i = 0; i < s.dim(); ++i)
      a[i] *= (i >> q & 1) ? w1 : w0;
  }
  return s;
}

double Statevector::squared_norm() const {
  double s = 0.0;
  for (const cplx& c : amps_) s += std::norm(c);
  return s;
}

double Statevector::norm() const { return std::sqrt(squared_norm()); }

void Statevector::normalize() {
  const double n = norm();
  if (n < 1e-300) throw SimError("cannot normalize zero vector");
  const double inv = 1.0 / n;
  for (cplx& c : amps_) c *= inv;
}

cplx Statevector::inner(const Statevector& other) const {
  if (n_qubits_ != other.n_qubits_)
    throw SimError("inner product dimension mismatch");
  cplx s = 0.0;
  for (std::uint64_t i = 0; i < dim(); ++i)
    s += std::conj(amps_[i]) * other.amps_[i];
  return s;
}

Statevector tensor(const Statevector& a, const Statevector& b) {
  Statevector out;
  std::vector<cplx> amps(a.dim() * b.dim());
  for (std::uint64_t ib = 0; ib < b.dim(); ++ib)
    for (std::uint64_t ia = 0; ia < a.dim(); ++ia)
      amps[(ib << a.n_qubits()) | ia] = a.amp(ia) * b.amp(ib);
  return Statevector::from_amplitudes(a.n_qubits() + b.n_qubits(),
                                      std::move(amps));
}

Eigen::VectorXd DensityMatrix::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(mat,
                                                     Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

Eigen::Matrix4cd ecr_matrix() {
  const cplx i(0.0, 1.0);
  Eigen::Matrix4cd m;
  m << 0, 1, 0, i,
       1, 0, -i, 0,
       0, i, 0, 1,
       -i, 0, 1, 0;
  return kInvSqrt2 * m;
}

Eigen::Matrix2cd u3_matrix(double theta, double phi, double lambda) {
  const cplx i(0.0, 1.0);
  const double c = std::cos(theta / 2.0), s = std::sin(theta / 2.0);
  Eigen::Matrix2cd m;
  m << c, -std::exp(i * lambda) * s,
       std::exp(i * phi) * s, std::exp(i * (phi + lambda)) * c;
  return m;
}

GateOp GateOp::u3(int q, double theta, double phi, double lambda) {
  GateOp g;
  g.kind = Kind::U3;
  g.targets = {q};
  g.theta = theta;
  g.phi = phi;
  g.lambda = lambda;
  return g;
}

GateOp GateOp::ecr(int q0, int q1) {
  GateOp g;
  g.kind = Kind::ECR;
  g.targets = {q0, q1};
  return g;
}

GateOp GateOp::x(int q) {
  GateOp g;
  g.kind = Kind::X;
  g.targets = {q};
  return g;
}

GateOp GateOp::swap(int a, int b) {
  GateOp g;
  g.kind = Kind::Swap;
  g.targets = {a, b};
  return g;
}

GateOp GateOp::cswap(int control, int a, int b) {
  GateOp g;
  g.kind = Kind::ControlledSwap;
  g.targets = {control, a, b};
  return g;
}

GateOp GateOp::unitary(std::vector<int> targets, Eigen::MatrixXcd m) {
  const std::uint64_t d = 1ULL << targets.size();
  if (m.rows() != static_cast<Eigen::Index>(d) ||
      m.cols() != static_cast<Eigen::Index>(d))
    throw SimError("unitary matrix dimension does not match target count");
  const double err =
      (m.adjoint() * m - Eigen::MatrixXcd::Identity(m.rows(), m.cols()))
          .cwiseAbs()
          .maxCoeff();
  if (err > 1e-12) throw SimError("matrix fails unitarity check");
  GateOp g;
  g.kind = Kind::Unitary;
  g.targets = std::move(targets);
  g.matrix = std::move(m);
  return g;
}

Eigen::MatrixXcd GateOp::matrix_rep() const {
  switch (kind) {
    case Kind::U3:
      return u3_matrix(theta, phi, lambda);
    case Kind::ECR:
      return ecr_matrix();
    case Kind::X: {
      Eigen::MatrixXcd m(2, 2);
      m << 0, 1, 1, 0;
      return m;
    }
    case Kind::Swap: {
      Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(4, 4);
      m(0, 0) = m(3, 3) = 1;
      m(1, 2) = m(2, 1) = 1;
      return m;
    }
    case Kind::ControlledSwap: {
      // control is targets[0] = local bit 0
      Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(8, 8);
      // control set: local indices 1,3,5,7; swap maps bit1<->bit2
      m(3, 3) = 0;
      m(5, 5) = 0;
      m(3, 5) = 1;
      m(5, 3) = 1;
      return m;
    }
    case Kind::Unitary:
      return matrix;
  }
  throw SimError("unknown gate kind");
}

void apply_gate_in_place(Statevector& state, const GateOp& gate) {
  check_targets(gate.targets, state.n_qubits());
  std::vector<cplx>& a = state.amplitudes();
  switch (gate.kind) {
    case GateOp::Kind::U3: {
      const Eigen::Matrix2cd m = u3_matrix(gate.theta, gate.phi, gate.lambda);
      apply_single_qubit(a, gate.targets[0], m(0, 0), m(0, 1), m(1, 0),
                         m(1, 1));
      return;
    }
    case GateOp::Kind::ECR: {
      static const Eigen::Matrix4cd em = ecr_matrix();
      cplx m[16];
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) m[4 * r + c] = em(r, c);
      apply_two_qubit(a, gate.targets[0], gate.targets[1], m);
      return;
    }
    case GateOp::Kind::X: {
      const std::uint64_t stride = 1ULL << gate.targets[0];
      for (std::uint64_t base = 0; base < a.size(); base += 2 * stride)
        for (std::uint64_t j = base; j < base + stride; ++j)
          std::swap(a[j], a[j + stride]);
      return;
    }
    case GateOp::Kind::Swap: {
      const std::uint64_t sa = 1ULL << gate.targets[0];
      const std::uint64_t sb = 1ULL << gate.targets[1];
      for (std::uint64_t i = 0; i < a.size(); ++i) {
        const bool ba = i & sa, bb = i & sb;
        if (ba && !bb) std::swap(a[i], a[(i ^ sa) | sb]);
      }
      return;
    }
    case GateOp::Kind::ControlledSwap: {
      const std::uint64_t sc = 1ULL << gate.targets[0];
      const std::uint64_t sa = 1ULL << gate.targets[1];
      const std::uint64_t sb = 1ULL << gate.targets[2];
      for (std::uint64_t i = 0; i < a.size(); ++i) {
        if (!(i & sc)) continue;
        const bool ba = i & sa, bb = i & sb;
        if (ba && !bb) std::swap(a[i], a[(i ^ sa) | sb]);
      }
      return;
    }
    case GateOp::Kind::Unitary:
      apply_k_qubit(a, gate.targets, gate.matrix);
      return;
  }
  throw SimError("unknown gate kind");
}

Statevector apply_gate(Statevector state, const GateOp& gate) {
  apply_gate_in_place(state, gate);
  return state;
}

double expectation(const Statevector& state, const PauliString& obs) {
  if (obs.n_qubits() != state.n_qubits())
    throw SimError("observable size mismatch");
  if (!obs.is_hermitian()) throw SimError("observable is not Hermitian");
  const std::uint64_t xm = obs.x_mask();
  const std::uint64_t pm = obs.z_mask() | obs.y_mask();
  const int ny = __builtin_popcountll(obs.y_mask());
  const cplx iy = std::pow(cplx(0.0, 1.0), ny % 4);
  const std::vector<cplx>& a = state.amplitudes();
  cplx acc = 0.0;
  for (std::uint64_t i = 0; i < a.size(); ++i) {
    const double sign = __builtin_parityll(i & pm) ? -1.0 : 1.0;
    acc += std::conj(a[i ^ xm]) * (sign * a[i]);
  }
  acc *= iy * obs.coefficient();
  return acc.real();
}

Statevector apply_pauli(const Statevector& state, const PauliString& p) {
  if (p.n_qubits() != state.n_qubits())
    throw SimError("PauliString size mismatch");
  const std::uint64_t xm = p.x_mask();
  const std::uint64_t pm = p.z_mask() | p.y_mask();
  const int ny = __builtin_popcountll(p.y_mask());
  const cplx pref = p.coefficient() * std::pow(cplx(0.0, 1.0), ny % 4);
  const std::vector<cplx>& a = state.amplitudes();
  std::vector<cplx> out(a.size());
  for (std::uint64_t i = 0; i < a.size(); ++i) {
    const double sign = __builtin_parityll(i & pm) ? -1.0 : 1.0;
    out[i ^ xm] = pref * sign * a[i];
  }
  return Statevector::from_amplitudes(state.n_qubits(), std::move(out));
}

DensityMatrix reduced_density(const Statevector& state,
                              const std::vector<int>& keep) {
  if (keep.empty()) throw SimError("keep set must be non-empty");
  if (!std::is_sorted(keep.begin(), keep.end()))
    throw SimError("keep set must be sorted ascending");
  check_targets(keep, state.n_qubits());

  const int k = static_cast<int>(keep.size());
  const int n = state.n_qubits();
  std::uint64_t keep_mask = 0;
  for (int q : keep) keep_mask |= 1ULL << q;

  std::vector<int> env;
  for (int q = 0; q < n; ++q)
    if (!(keep_mask >> q & 1)) env.push_back(q);

  const std::uint64_t dk = 1ULL << k;
  const std::uint64_t de = 1ULL << env.size();

  std::vector<std::uint64_t> koff(dk, 0), eoff(de, 0);
  for (std::uint64_t i = 0; i < dk; ++i)
    for (int b = 0; b < k; ++b)
      if (i >> b & 1) koff[i] |= 1ULL << keep[b];
  for (std::uint64_t e = 0; e < de; ++e)
    for (std::size_t b = 0; b < env.size(); ++b)
      if (e >> b & 1) eoff[e] |= 1ULL << env[b];

  DensityMatrix rho;
  rho.n_qubits = k;
  rho.mat = Eigen::MatrixXcd::Zero(dk, dk);
  const std::vector<cplx>& a = state.amplitudes();
  for (std::uint64_t e = 0; e < de; ++e) {
    for (std::uint64_t i = 0; i < dk; ++i) {
      const cplx ai = a[koff[i] | eoff[e]];
      if (ai == cplx(0.0)) continue;
      for (std::uint64_t j = 0; j < dk; ++j)
        rho.mat(i, j) += ai * std::conj(a[koff[j] | eoff[e]]);
    }
  }
  return rho;
}

int MeasurementRecord::total_counts() const {
  int t = 0;
  for (const auto& [_, c] : counts) t += c;
  return t;
}

namespace {

std::string bitstring(std::uint64_t index, int n) {
  std::string s(static_cast<std::size_t>(n), '0');
  for (int q = 0; q < n; ++q)
    if (index >> q & 1) s[static_cast<std::size_t>(q)] = '1';
  return s;
}

}  // namespace

MeasurementRecord sample(const Statevector& state,
                         const std::vector<GateOp>& rotations, int shots,
                         std::uint64_t seed) {
  if (shots <= 0) throw SimError("shots must be positive");
  Statevector rotated = state;
  for (const GateOp& g : rotations) apply_gate_in_place(rotated, g);

  std::vector<double> cdf(rotated.dim());
  double acc = 0.0;
  for (std::uint64_t i = 0; i < rotated.dim(); ++i) {
    acc += std::norm(rotated.amp(i));
    cdf[i] = acc;
  }
  const double total = acc;

  MeasurementRecord rec;
  rec.basis = std::string(static_cast<std::size_t>(state.n_qubits()), 'Z');
  rec.shots = shots;
  rec.seed = seed;
  Rng rng(seed);
  for (int s = 0; s < shots; ++s) {
    const double u = rng.uniform() * total;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const std::uint64_t idx =
        it == cdf.end() ? rotated.dim() - 1
                        : static_cast<std::uint64_t>(it - cdf.begin());
    ++rec.counts[bitstring(idx, state.n_qubits())];
  }
  return rec;
}

std::vector<GateOp> basis_rotation(int qubit, char axis) {
  constexpr double kPi = 3.14159265358979323846;
  switch (axis) {
    case 'I':
    case 'Z':
      return {};
    case 'X':
      return {GateOp::u3(qubit, kPi / 2, 0.0, kPi)};  // H
    case 'Y':
      // S^dag then H == u3(pi/2, 0, pi/2) up to global phase
      return {GateOp::u3(qubit, kPi / 2, 0.0, kPi / 2)};
    default:
      throw SimError("invalid measurement axis");
  }
}

MeasurementRecord sample_pauli_basis(const Statevector& state,
                                     const std::string& basis, int shots,
                                     std::uint64_t seed) {
  if (static_cast<int>(basis.size()) != state.n_qubits())
    throw SimError("basis length mismatch");
  std::vector<GateOp> rots;
  for (int q = 0; q < state.n_qubits(); ++q)
    for (GateOp& g : basis_rotation(q, basis[static_cast<std::size_t>(q)]))
      rots.push_back(std::move(g));
  MeasurementRecord rec = sample(state, rots, shots, seed);
  rec.basis = basis;
  return rec;
}

std::pair<Statevector, double> postselect(const Statevector& state, int qubit,
                                          int outcome) {
  if (qubit < 0 || qubit >= state.n_qubits())
    throw SimError("postselect qubit out of range");
  if (outcome != 0 && outcome != 1) throw SimError("outcome must be 0 or 1");
  const std::uint64_t bit = 1ULL << qubit;
  std::vector<cplx> amps(state.dim(), 0.0);
  double p = 0.0;
  for (std::uint64_t i = 0; i < state.dim(); ++i) {
    const bool match = ((i & bit) != 0) == (outcome == 1);
    if (match) {
      amps[i] = state.amp(i);
      p += std::norm(amps[i]);
    }
  }
  if (p < 1e-14)
    throw ZeroProbabilityError("postselected branch has zero probability");
  Statevector out = Statevector::from_amplitudes(state.n_qubits(),
                                                 std::move(amps));
  out.normalize();
  return {std::move(out), p};
}

Statevector drop_qubit(const Statevector& state, int qubit) {
  const std::uint64_t bit = 1ULL << qubit;
  double w0 = 0.0, w1 = 0.0;
  for (std::uint64_t i = 0; i < state.dim(); ++i)
    ((i & bit) ? w1 : w0) += std::norm(state.amp(i));
  const int pinned = w1 > w0 ? 1 : 0;
  if (std::min(w0, w1) > 1e-18)
    throw SimError("drop_qubit requires a pinned qubit");
  const std::uint64_t low = bit - 1;
  std::vector<cplx> amps(state.dim() / 2);
  for (std::uint64_t i = 0; i < state.dim(); ++i) {
    if (((i & bit) != 0) != (pinned == 1)) continue;
    amps[(i & low) | ((i >> 1) & ~low)] = state.amp(i);
  }
  return Statevector::from_amplitudes(state.n_qubits() - 1, std::move(amps));
}

std::pair<double, double> parity_mean(const MeasurementRecord& record,
                                      const std::vector<int>& sites) {
  long long total = 0, plus = 0;
  for (const auto& [bits, count] : record.counts) {
    int par = 0;
    for (int q : sites) par ^= bits.at(static_cast<std::size_t>(q)) == '1';
    total += count;
    if (!par) plus += count;
  }
  if (total == 0) throw SimError("empty measurement record");
  const double mean =
      (2.0 * static_cast<double>(plus) - static_cast<double>(total)) /
      static_cast<double>(total);
  const double se =
      total > 1 ? std::sqrt(std::max(0.0, 1.0 - mean * mean) /
                            static_cast<double>(total))
                : 1.0;
  return {mean, se};
}

}  // namespace sptforge
