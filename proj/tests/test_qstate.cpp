#include "sptforge/qstate.hpp"

#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "sptforge/model.hpp"

using namespace sptforge;

namespace {

Statevector random_state(int n, Rng& rng) {
  std::vector<cplx> amps(1ULL << n);
  for (auto& a : amps) a = cplx(rng.normal(), rng.normal());
  Statevector s = Statevector::from_amplitudes(n, std::move(amps));
  s.normalize();
  return s;
}

constexpr double kInvSqrt2 = 0.70710678118654752440;

}  // namespace

TEST_CASE("X flips a computational basis state") {
  Statevector s(1);
  s = apply_gate(std::move(s), GateOp::x(0));
  CHECK(std::abs(s.amp(1) - 1.0) < 1e-15);
  CHECK(std::abs(s.amp(0)) < 1e-15);
}

TEST_CASE("ECR on |00> produces the first matrix column") {
  // amplitude 1/sqrt(2) on index 1 and -i/sqrt(2) on index 3
  Statevector s(2);
  s = apply_gate(std::move(s), GateOp::ecr(0, 1));
  CHECK(std::abs(s.amp(0)) < 1e-15);
  CHECK(std::abs(s.amp(1) - kInvSqrt2) < 1e-15);
  CHECK(std::abs(s.amp(2)) < 1e-15);
  CHECK(std::abs(s.amp(3) - cplx(0.0, -kInvSqrt2)) < 1e-15);
}

TEST_CASE("U3(0,0,0) is the identity") {
  Rng rng(3);
  Statevector s = random_state(3, rng);
  const Statevector t = apply_gate(s, GateOp::u3(1, 0.0, 0.0, 0.0));
  for (std::uint64_t i = 0; i < s.dim(); ++i)
    CHECK(std::abs(s.amp(i) - t.amp(i)) < 1e-15);
}

TEST_CASE("every gate kind is unitary within 1e-12") {
  std::vector<GateOp> gates = {
      GateOp::u3(0, 0.3, -1.2, 2.2), GateOp::ecr(0, 1), GateOp::x(0),
      GateOp::swap(0, 1), GateOp::cswap(0, 1, 2)};
  Rng rng(11);
  Eigen::MatrixXcd rand4 = Eigen::MatrixXcd::Random(4, 4);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(rand4);
  gates.push_back(GateOp::unitary({0, 1}, qr.householderQ()));
  for (const GateOp& g : gates) {
    const Eigen::MatrixXcd m = g.matrix_rep();
    const double err =
        (m.adjoint() * m - Eigen::MatrixXcd::Identity(m.rows(), m.cols()))
            .cwiseAbs()
            .maxCoeff();
    CHECK(err < 1e-12);
  }
}

TEST_CASE("ECR is Hermitian and self-inverse on random states") {
  const Eigen::Matrix4cd m = ecr_matrix();
  CHECK((m - m.adjoint()).cwiseAbs().maxCoeff() < 1e-15);
  Rng rng(5);
  Statevector s = random_state(4, rng);
  Statevector t = apply_gate(s, GateOp::ecr(1, 3));
  t = apply_gate(std::move(t), GateOp::ecr(1, 3));
  for (std::uint64_t i = 0; i < s.dim(); ++i)
    CHECK(std::abs(s.amp(i) - t.amp(i)) < 1e-10);
}

TEST_CASE("norm is preserved by random gate sequences") {
  Rng rng(17);
  Statevector s = random_state(5, rng);
  for (int k = 0; k < 60; ++k) {
    const int a = static_cast<int>(rng.uniform_int(5));
    int b = static_cast<int>(rng.uniform_int(5));
    if (b == a) b = (b + 1) % 5;
    switch (rng.uniform_int(4)) {
      case 0:
        apply_gate_in_place(
            s, GateOp::u3(a, rng.uniform(-3, 3), rng.uniform(-3, 3),
                          rng.uniform(-3, 3)));
        break;
      case 1: apply_gate_in_place(s, GateOp::ecr(a, b)); break;
      case 2: apply_gate_in_place(s, GateOp::x(a)); break;
      default: apply_gate_in_place(s, GateOp::swap(a, b)); break;
    }
  }
  CHECK(std::abs(s.norm() - 1.0) < 1e-9);
}

TEST_CASE("generic unitary rejects a non-unitary matrix") {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(2, 2);
  m(0, 0) = 1.5;
  CHECK_THROWS_AS(GateOp::unitary({0}, m), SimError);
  CHECK_THROWS_AS(apply_gate(Statevector(1), GateOp::u3(2, 0, 0, 0)), SimError);
}

TEST_CASE("expectation of Pauli observables on simple states") {
  Statevector zero(1);
  CHECK(expectation(zero, PauliString::single(1, 0, 'Z')) == doctest::Approx(1.0));
  Statevector plus = Statevector::product_state("+");
  CHECK(expectation(plus, PauliString::single(1, 0, 'Z')) ==
        doctest::Approx(0.0).epsilon(1e-12));

  // Bell state (|00> + |11>)/sqrt(2)
  Statevector bell = Statevector::from_amplitudes(
      2, {kInvSqrt2, 0.0, 0.0, kInvSqrt2});
  const PauliString zz =
      PauliString::single(2, 0, 'Z') * PauliString::single(2, 1, 'Z');
  CHECK(expectation(bell, zz) == doctest::Approx(1.0));
}

TEST_CASE("expectation rejects non-Hermitian observables") {
  Statevector s(2);
  PauliString p = PauliString::single(2, 0, 'X', cplx(0.0, 1.0));
  CHECK_THROWS_AS(expectation(s, p), SimError);
}

TEST_CASE("expectation agrees with the dense oracle on random states") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 4;
    Statevector s = random_state(n, rng);
    std::string letters = "IIII";
    const char axes[4] = {'I', 'X', 'Y', 'Z'};
    for (int q = 0; q < n; ++q) letters[q] = axes[rng.uniform_int(4)];
    if (letters == "IIII") letters = "ZIII";
    const double got = expectation(s, PauliString(1.0, letters));
    const oracles::Vector v = oracles::to_vector(s.amplitudes());
    const double want =
        (v.adjoint() * oracles::pauli_string(letters) * v).real()(0);
    CHECK(got == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("reduced density of a Bell pair is maximally mixed") {
  Statevector bell = Statevector::from_amplitudes(
      2, {kInvSqrt2, 0.0, 0.0, kInvSqrt2});
  const DensityMatrix rho = reduced_density(bell, {0});
  CHECK(std::abs(rho.mat(0, 0) - 0.5) < 1e-12);
  CHECK(std::abs(rho.mat(1, 1) - 0.5) < 1e-12);
  CHECK(std::abs(rho.mat(0, 1)) < 1e-12);
}

TEST_CASE("reduced density of a product state is pure") {
  // |01>: qubit 0 in |0>, qubit 1 in |1>
  Statevector s = Statevector::product_state("01");
  const DensityMatrix rho = reduced_density(s, {0});
  CHECK(std::abs(rho.mat(0, 0) - 1.0) < 1e-12);
}

TEST_CASE("half-chain spectrum of the L=4 cluster ground state") {
  // dense-oracle derivation: eigenvalues {1/2, 1/2, 0, 0}
  const oracles::Matrix H = oracles::ising_cluster(0.0, 0.0, 1.0, 4);
  // project |0000> onto the ground space to pick the closed-form member
  Eigen::SelfAdjointEigenSolver<oracles::Matrix> es(H);
  oracles::Vector psi = oracles::Vector::Zero(16);
  for (int k = 0; k < 16; ++k) {
    if (es.eigenvalues()(k) - es.eigenvalues()(0) > 1e-9) break;
    const oracles::Vector v = es.eigenvectors().col(k);
    psi += v * (v.adjoint() * oracles::Vector::Unit(16, 0))(0);
  }
  psi.normalize();
  const oracles::Matrix rho_oracle = oracles::partial_trace(psi, {0, 1}, 4);
  Eigen::SelfAdjointEigenSolver<oracles::Matrix> res(rho_oracle);

  std::vector<cplx> amps(psi.data(), psi.data() + 16);
  const DensityMatrix rho =
      reduced_density(Statevector::from_amplitudes(4, amps), {0, 1});
  const Eigen::VectorXd ev = rho.eigenvalues();
  for (int k = 0; k < 4; ++k)
    CHECK(ev(k) == doctest::Approx(res.eigenvalues()(k)).epsilon(1e-10));
  CHECK(ev(3) == doctest::Approx(0.5));
  CHECK(ev(2) == doctest::Approx(0.5));
  CHECK(std::abs(ev(1)) < 1e-10);
  CHECK(std::abs(ev(0)) < 1e-10);
}

TEST_CASE("partial trace consistency with full expectations") {
  Rng rng(31);
  Statevector s = random_state(4, rng);
  const std::vector<int> keep{1, 3};
  const DensityMatrix rho = reduced_density(s, keep);
  CHECK(std::abs(rho.trace_real() - 1.0) < 1e-9);
  CHECK(rho.hermiticity_error() < 1e-10);

  const char axes[3] = {'X', 'Y', 'Z'};
  for (char a : axes) {
    for (char b : axes) {
      // local operator on the kept qubits vs embedded observable
      const oracles::Matrix local =
          oracles::kron(oracles::pauli(b), oracles::pauli(a));
      const double via_rho = (rho.mat * local).trace().real();
      std::string letters = "IIII";
      letters[1] = a;
      letters[3] = b;
      const double via_state = expectation(s, PauliString(1.0, letters));
      CHECK(via_rho == doctest::Approx(via_state).epsilon(1e-9));
    }
  }
}

TEST_CASE("sampling is deterministic and follows the Born rule") {
  Statevector zero(1);
  const MeasurementRecord all_zero = sample(zero, {}, 100, 42);
  CHECK(all_zero.counts.at("0") == 100);
  CHECK(all_zero.total_counts() == 100);

  Statevector plus = Statevector::product_state("+");
  const MeasurementRecord a = sample(plus, {}, 20000, 7);
  const MeasurementRecord b = sample(plus, {}, 20000, 7);
  CHECK(a.counts == b.counts);

  // empirical P(0) within 3 sigma of 1/2
  const double p0 = a.counts.at("0") / 20000.0;
  CHECK(std::abs(p0 - 0.5) < 3.0 * std::sqrt(0.25 / 20000.0));
}

TEST_CASE("sampling chi-square against Born probabilities at 20000 shots") {
  Rng rng(47);
  Statevector s = random_state(3, rng);
  const MeasurementRecord rec = sample(s, {}, 20000, 1234);
  double chi2 = 0.0;
  for (std::uint64_t i = 0; i < s.dim(); ++i) {
    std::string bits = "000";
    for (int q = 0; q < 3; ++q)
      if (i >> q & 1) bits[q] = '1';
    const double expected = 20000.0 * std::norm(s.amp(i));
    const auto it = rec.counts.find(bits);
    const double observed = it == rec.counts.end() ? 0.0 : it->second;
    if (expected > 1e-9) chi2 += (observed - expected) * (observed - expected) / expected;
  }
  // 7 degrees of freedom; 99.9th percentile is 24.3
  CHECK(chi2 < 24.3);
}

TEST_CASE("basis rotations map X and Y onto Z measurements") {
  Statevector plus = Statevector::product_state("+");
  const MeasurementRecord rx = sample_pauli_basis(plus, "X", 50, 3);
  CHECK(rx.counts.at("0") == 50);

  // +i eigenstate of Y
  Statevector yplus = Statevector::from_amplitudes(
      1, {kInvSqrt2, cplx(0.0, kInvSqrt2)});
  const MeasurementRecord ry = sample_pauli_basis(yplus, "Y", 50, 3);
  CHECK(ry.counts.at("0") == 50);
}

TEST_CASE("zero shots are rejected") {
  CHECK_THROWS_AS(sample(Statevector(1), {}, 0, 1), SimError);
}

TEST_CASE("postselect projects and renormalizes") {
  Statevector bell = Statevector::from_amplitudes(
      2, {kInvSqrt2, 0.0, 0.0, kInvSqrt2});
  auto [out, p] = postselect(bell, 1, 0);
  CHECK(p == doctest::Approx(0.5));
  CHECK(std::abs(out.amp(0) - 1.0) < 1e-12);

  Statevector one = Statevector::computational_basis(1, 1);
  CHECK_THROWS_AS(postselect(one, 0, 0), ZeroProbabilityError);
}

TEST_CASE("drop_qubit removes a pinned qubit") {
  Statevector s = Statevector::product_state("0+1");
  const Statevector dropped = drop_qubit(s, 2);
  const Statevector expected = Statevector::product_state("0+");
  for (std::uint64_t i = 0; i < dropped.dim(); ++i)
    CHECK(std::abs(dropped.amp(i) - expected.amp(i)) < 1e-12);
}

TEST_CASE("tensor places the second factor on high qubits") {
  Statevector a = Statevector::computational_basis(1, 1);
  Statevector b = Statevector::computational_basis(1, 0);
  const Statevector ab = tensor(a, b);  // qubit0=1, qubit1=0 -> index 1
  CHECK(std::abs(ab.amp(1) - 1.0) < 1e-15);
}

TEST_CASE("parity_mean estimates a two-site parity") {
  MeasurementRecord rec;
  rec.counts["00"] = 75;
  rec.counts["11"] = 15;
  rec.counts["01"] = 10;
  auto [mean, se] = parity_mean(rec, {0, 1});
  CHECK(mean == doctest::Approx((75 + 15 - 10) / 100.0));
  CHECK(se > 0.0);
}
