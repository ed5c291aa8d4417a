// Test-only dense oracles, built independently of the library's kernels and
// PauliString machinery: explicit Kronecker products and full-matrix algebra.
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

namespace oracles {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Matrix pauli(char c) {
  const cplx i(0.0, 1.0);
  Matrix m(2, 2);
  switch (c) {
    case 'I': m << 1, 0, 0, 1; break;
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, -i, i, 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: throw std::runtime_error("bad letter");
  }
  return m;
}

/// letters[k] acts on qubit k; qubit 0 is the least-significant bit.
inline Matrix pauli_string(const std::string& letters) {
  Matrix acc = Matrix::Identity(1, 1);
  for (char c : letters) acc = kron(pauli(c), acc);
  return acc;
}

/// Dense Ising-cluster Hamiltonian, open chain.
inline Matrix ising_cluster(double J, double h, double g, int L) {
  const Eigen::Index d = Eigen::Index{1} << L;
  Matrix H = Matrix::Zero(d, d);
  auto at = [L](int site, char c) {
    std::string s(static_cast<std::size_t>(L), 'I');
    s[static_cast<std::size_t>(site)] = c;
    return pauli_string(s);
  };
  for (int i = 0; i + 1 < L; ++i) H -= J * at(i, 'Z') * at(i + 1, 'Z');
  for (int i = 0; i < L; ++i) H -= h * at(i, 'X');
  for (int i = 1; i + 1 < L; ++i)
    H -= g * at(i - 1, 'Z') * at(i, 'X') * at(i + 1, 'Z');
  return H;
}

/// Dense partial trace keeping the listed (ascending) qubits.
inline Matrix partial_trace(const Vector& psi, const std::vector<int>& keep,
                            int n) {
  std::uint64_t keep_mask = 0;
  for (int q : keep) keep_mask |= 1ULL << q;
  std::vector<int> env;
  for (int q = 0; q < n; ++q)
    if (!(keep_mask >> q & 1)) env.push_back(q);

  const std::uint64_t dk = 1ULL << keep.size();
  const std::uint64_t de = 1ULL << env.size();
  auto scatter = [](std::uint64_t bits, const std::vector<int>& sites) {
    std::uint64_t out = 0;
    for (std::size_t b = 0; b < sites.size(); ++b)
      if (bits >> b & 1) out |= 1ULL << sites[b];
    return out;
  };

  Matrix rho = Matrix::Zero(dk, dk);
  for (std::uint64_t e = 0; e < de; ++e) {
    const std::uint64_t eoff = scatter(e, env);
    for (std::uint64_t i = 0; i < dk; ++i)
      for (std::uint64_t j = 0; j < dk; ++j)
        rho(i, j) += psi(scatter(i, keep) | eoff) *
                     std::conj(psi(scatter(j, keep) | eoff));
  }
  return rho;
}

/// Lowest-eigenvalue eigenvector of a Hermitian matrix.
inline Vector ground_vector(const Matrix& H) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  return es.eigenvectors().col(0);
}

inline Vector to_vector(const std::vector<cplx>& amps) {
  return Eigen::Map<const Vector>(amps.data(),
                                  static_cast<Eigen::Index>(amps.size()));
}

}  // namespace oracles
