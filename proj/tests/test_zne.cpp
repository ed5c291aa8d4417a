#include "sptforge/zne.hpp"

#include <cmath>

#include "doctest.h"
#include "sptforge/model.hpp"

using namespace sptforge;

namespace {

LayeredCircuit random_circuit(int n, int layers, std::uint64_t seed) {
  LayeredCircuit c = LayeredCircuit::brick(n, layers);
  Rng rng(seed);
  for (int k = 0; k < c.params.size(); ++k) c.params[k] = rng.uniform(-1, 1);
  return c;
}

}  // namespace

TEST_CASE("folding with m = 0 leaves the circuit unchanged") {
  const LayeredCircuit base = random_circuit(4, 2, 1);
  const FoldedCircuit f = fold(base, 0);
  CHECK(f.circuit.n_layers() == base.n_layers());
  CHECK((f.circuit.params - base.params).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("odd identity-layer counts are rejected") {
  const LayeredCircuit base = random_circuit(3, 1, 2);
  CHECK_THROWS_AS(fold(base, 3), SimError);
  CHECK_THROWS_AS(fold(base, -2), SimError);
}

TEST_CASE("identity folding never changes the noiseless output") {
  const LayeredCircuit base = random_circuit(5, 3, 3);
  const Statevector in = Statevector(5);
  const Statevector ref = evaluate(base, in);
  for (int m : {2, 4, 6}) {
    const FoldedCircuit f = fold(base, m);
    CHECK(f.circuit.n_layers() == base.n_layers() + m);
    const Statevector out = evaluate(f.circuit, in);
    CHECK(overlap_fidelity(ref, out) == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("folded layers degrade a noisy expectation") {
  // identity-rotation base circuit on 4 qubits, <Z_0> = 1 noiselessly
  const LayeredCircuit base = LayeredCircuit::brick(4, 2);
  NoiseModel model;
  model.p_ecr = 0.005;
  const PauliString z0 = PauliString::single(4, 0, 'Z');
  const DensityMatrix rho0 =
      density_matrix_reference(base, Statevector(4), model);
  const DensityMatrix rho2 =
      density_matrix_reference(fold(base, 2).circuit, Statevector(4), model);
  const double v0 = (rho0.mat * z0.dense()).trace().real();
  const double v2 = (rho2.mat * z0.dense()).trace().real();
  CHECK(v2 < v0);
}

TEST_CASE("constant measurements extrapolate to the constant") {
  const std::vector<double> xs{2, 4, 6, 8};
  const std::vector<double> ys{0.42, 0.42, 0.42, 0.42};
  for (FitForm form :
       {FitForm::Linear, FitForm::Quadratic, FitForm::Exponential}) {
    const ExtrapolationFit fit = extrapolate(xs, ys, {}, form);
    CHECK(fit.zero_noise_value == doctest::Approx(0.42).epsilon(1e-9));
    CHECK(fit.zero_noise_value == doctest::Approx(fit.evaluate(0.0)));
  }
}

TEST_CASE("a linear trend is recovered exactly") {
  std::vector<double> xs{2, 4, 6, 8}, ys;
  for (double x : xs) ys.push_back(1.0 - 0.1 * x);
  const ExtrapolationFit fit = extrapolate(xs, ys, {}, FitForm::Linear);
  CHECK(fit.zero_noise_value == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fit.fit_residual < 1e-12);
}

TEST_CASE("an exponential decay is recovered accurately") {
  std::vector<double> xs{2, 4, 6, 8, 10}, ys;
  for (double x : xs) ys.push_back(0.2 + 0.75 * std::pow(0.9, x));
  const ExtrapolationFit fit = extrapolate(xs, ys, {}, FitForm::Exponential);
  CHECK_FALSE(fit.fell_back);
  CHECK(fit.zero_noise_value == doctest::Approx(0.95).epsilon(1e-4));
}

TEST_CASE("extrapolate validates its preconditions") {
  CHECK_THROWS_AS(extrapolate({1, 2}, {0.1, 0.2}, {}, FitForm::Linear),
                  SimError);
  CHECK_THROWS_AS(
      extrapolate({1, 2, 3}, {0.1, 0.2, 0.3}, {}, FitForm::Exponential),
      SimError);  // needs parameter count + 1
  CHECK_THROWS_AS(
      extrapolate({2, 2, 2, 2}, {0.1, 0.1, 0.1, 0.1}, {}, FitForm::Linear),
      SimError);  // not enough distinct levels
}

TEST_CASE("fit is deterministic on identical inputs") {
  std::vector<double> xs{2, 4, 6, 8}, ys{0.8, 0.7, 0.63, 0.58},
      es{0.01, 0.01, 0.012, 0.011};
  const ExtrapolationFit a = extrapolate(xs, ys, es, FitForm::Exponential);
  const ExtrapolationFit b = extrapolate(xs, ys, es, FitForm::Exponential);
  CHECK(a.zero_noise_value == b.zero_noise_value);
  CHECK(a.coeffs == b.coeffs);
}

TEST_CASE("zne pipeline with zero noise matches the raw estimate") {
  const LayeredCircuit base = random_circuit(3, 2, 5);
  NoiseModel model;
  model.p_ecr = 0.0;
  model.p_readout = 0.0;
  const PauliString z1 = PauliString::single(3, 1, 'Z');
  const ZneResult res = zne_expectation(base, Statevector(3), z1, model,
                                        {0, 2, 4, 6}, 20000, FitForm::Linear,
                                        99);
  const double exact = expectation(evaluate(base, Statevector(3)), z1);
  CHECK(std::abs(res.raw - exact) < 0.02);
  CHECK(std::abs(res.mitigated - exact) < 0.03);
}

TEST_CASE("fit residual shrinks with more shots") {
  const LayeredCircuit base = LayeredCircuit::brick(3, 2);
  NoiseModel model;
  model.p_ecr = 0.01;
  model.seed = 3;
  const PauliString z0 = PauliString::single(3, 0, 'Z');
  const ZneResult small = zne_expectation(base, Statevector(3), z0, model,
                                          {0, 2, 4, 6}, 2000,
                                          FitForm::Exponential, 5);
  const ZneResult large = zne_expectation(base, Statevector(3), z0, model,
                                          {0, 2, 4, 6}, 80000,
                                          FitForm::Exponential, 5);
  CHECK(large.fit.fit_residual < small.fit.fit_residual + 5e-3);
  // standard errors scale roughly like 1/sqrt(shots)
  CHECK(large.fit.yerrs[0] < small.fit.yerrs[0]);
}

TEST_CASE("mitigated string order beats the raw noisy value on average") {
  // small trained-free surrogate: identity-rotation circuit preparing |000>,
  //observing Z0 degraded by noise, ZNE recovers the clean value
  const LayeredCircuit base = LayeredCircuit::brick(3, 4);
  NoiseModel model;
  model.p_ecr = 0.005;
  const PauliString z0 = PauliString::single(3, 0, 'Z');
  int zne_wins = 0;
  for (int s = 0; s < 5; ++s) {
    NoiseModel m = model;
    m.seed = 100 + static_cast<std::uint64_t>(s);
    const ZneResult res =
        zne_expectation(base, Statevector(3), z0, m, {0, 2, 4, 6}, 20000,
                        FitForm::Exponential, 200 + static_cast<std::uint64_t>(s));
    if (std::abs(res.mitigated - 1.0) < std::abs(res.raw - 1.0)) ++zne_wins;
  }
  CHECK(zne_wins >= 3);
}
