#include "sptforge/pauli.hpp"

#include <sstream>

namespace sptforge {

namespace {

bool valid_letter(char c) {
  return c == 'I' || c == 'X' || c == 'Y' || c == 'Z';
}

// Single-site product a*b = phase * c.
void site_product(char a, char b, char& c, cplx& phase) {
  if (a == 'I') {
    c = b;
    phase = 1.0;
    return;
  }
  if (b == 'I') {
    c = a;
    phase = 1.0;
    return;
  }
  if (a == b) {
    c = 'I';
    phase = 1.0;
    return;
  }
  const cplx i(0.0, 1.0);
  // cyclic: XY=iZ, YZ=iX, ZX=iY; reversed order picks up a minus sign
  auto cyc = [&](char u, char v, char w) {
    if (a == u && b == v) {
      c = w;
      phase = i;
      return true;
    }
    if (a == v && b == u) {
      c = w;
      phase = -i;
      return true;
    }
    return false;
  };
  if (cyc('X', 'Y', 'Z')) return;
  if (cyc('Y', 'Z', 'X')) return;
  if (cyc('Z', 'X', 'Y')) return;
  throw SimError("invalid Pauli letters");
}

Eigen::Matrix2cd letter_matrix(char c) {
  const cplx i(0.0, 1.0);
  Eigen::Matrix2cd m;
  switch (c) {
    case 'I':
      m << 1, 0, 0, 1;
      break;
    case 'X':
      m << 0, 1, 1, 0;
      break;
    case 'Y':
      m << 0, -i, i, 0;
      break;
    case 'Z':
      m << 1, 0, 0, -1;
      break;
    default:
      throw SimError("invalid Pauli letter");
  }
  return m;
}

}  // namespace

PauliString::PauliString(cplx coeff, std::string letters)
    : coeff_(coeff), letters_(std::move(letters)) {
  for (char c : letters_) {
    if (!valid_letter(c)) throw SimError("invalid Pauli letter in string");
  }
  if (letters_.size() > 64) throw SimError("PauliString limited to 64 sites");
}

PauliString PauliString::identity(int n_qubits) {
  return PauliString(1.0, std::string(static_cast<std::size_t>(n_qubits), 'I'));
}

PauliString PauliString::single(int n_qubits, int site, char letter,
                                cplx coeff) {
  if (site < 0 || site >= n_qubits) throw SimError("Pauli site out of range");
  std::string s(static_cast<std::size_t>(n_qubits), 'I');
  s[static_cast<std::size_t>(site)] = letter;
  return PauliString(coeff, std::move(s));
}

PauliString PauliString::operator*(const PauliString& rhs) const {
  if (n_qubits() != rhs.n_qubits())
    throw SimError("PauliString size mismatch in product");
  std::string out(letters_.size(), 'I');
  cplx c = coeff_ * rhs.coeff_;
  for (std::size_t k = 0; k < letters_.size(); ++k) {
    cplx phase;
    site_product(letters_[k], rhs.letters_[k], out[k], phase);
    c *= phase;
  }
  return PauliString(c, std::move(out));
}

bool PauliString::is_identity() const {
  return letters_.find_first_not_of('I') == std::string::npos;
}

int PauliString::weight() const {
  int w = 0;
  for (char c : letters_)
    if (c != 'I') ++w;
  return w;
}

Eigen::MatrixXcd PauliString::dense() const {
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Constant(1, 1, coeff_);
  // site k is the k-th bit of the basis index, so it goes on the inside
  for (char c : letters_) {
    const Eigen::Matrix2cd m = letter_matrix(c);
    Eigen::MatrixXcd next(acc.rows() * 2, acc.cols() * 2);
    for (int r = 0; r < 2; ++r)
      for (int s = 0; s < 2; ++s)
        next.block(r * acc.rows(), s * acc.cols(), acc.rows(), acc.cols()) =
            m(r, s) * acc;
    acc.swap(next);
  }
  return acc;
}

std::uint64_t PauliString::x_mask() const {
  std::uint64_t m = 0;
  for (std::size_t k = 0; k < letters_.size(); ++k)
    if (letters_[k] == 'X' || letters_[k] == 'Y') m |= 1ULL << k;
  return m;
}

std::uint64_t PauliString::y_mask() const {
  std::uint64_t m = 0;
  for (std::size_t k = 0; k < letters_.size(); ++k)
    if (letters_[k] == 'Y') m |= 1ULL << k;
  return m;
}

std::uint64_t PauliString::z_mask() const {
  std::uint64_t m = 0;
  for (std::size_t k = 0; k < letters_.size(); ++k)
    if (letters_[k] == 'Z' || letters_[k] == 'Y') m |= 1ULL << k;
  return m;
}

std::string PauliString::str() const {
  std::ostringstream os;
  os << "(" << coeff_.real();
  if (coeff_.imag() != 0.0) os << (coeff_.imag() > 0 ? "+" : "") << coeff_.imag() << "i";
  os << ")*" << letters_;
  return os.str();
}

}  // namespace sptforge
