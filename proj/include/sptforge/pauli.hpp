#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "sptforge/common.hpp"

namespace sptforge {

/// Signed product of single-site I/X/Y/Z operators: coeff * (s_0 x s_1 x ...),
/// site k acting on qubit k (qubit 0 is the least-significant bit of a basis
/// index). Closed under multiplication with exact phase tracking.
class PauliString {
 public:
  PauliString() = default;
  PauliString(cplx coeff, std::string letters);

  static PauliString identity(int n_qubits);
  /// Single non-identity letter at `site`, identities elsewhere.
  static PauliString single(int n_qubits, int site, char letter,
                            cplx coeff = 1.0);

  int n_qubits() const { return static_cast<int>(letters_.size()); }
  char letter(int site) const { return letters_.at(site); }
  const std::string& letters() const { return letters_; }
  cplx coefficient() const { return coeff_; }
  void set_coefficient(cplx c) { coeff_ = c; }

  /// Operator product; phases from same-site letter collisions fold into the
  /// coefficient (XY = iZ and so on).
  PauliString operator*(const PauliString& rhs) const;

  bool is_hermitian(double tol = 1e-12) const {
    return std::abs(coeff_.imag()) <= tol;
  }

  /// True if every letter is I (coefficient may be arbitrary).
  bool is_identity() const;

  /// Number of non-identity letters.
  int weight() const;

  /// Dense 2^n x 2^n matrix. Intended for oracle/test use at small n.
  Eigen::MatrixXcd dense() const;

  /// Bit masks of the X-like, Y, and Z-like site sets; the apply/expectation
  /// kernels in qstate are built from these.
  std::uint64_t x_mask() const;  // sites with X or Y (bit flip)
  std::uint64_t y_mask() const;
  std::uint64_t z_mask() const;  // sites with Z or Y (phase flip)

  std::string str() const;

 private:
  cplx coeff_ = 1.0;
  std::string letters_;  // one of 'I','X','Y','Z' per site
};

}  // namespace sptforge
