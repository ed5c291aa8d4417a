#include "sptforge/ansatz.hpp"

#include <cmath>

#include "doctest.h"
#include "sptforge/model.hpp"
#include "sptforge/observables.hpp"

using namespace sptforge;

namespace {

Statevector random_state(int n, Rng& rng) {
  std::vector<cplx> amps(1ULL << n);
  for (auto& a : amps) a = cplx(rng.normal(), rng.normal());
  Statevector s = Statevector::from_amplitudes(n, std::move(amps));
  s.normalize();
  return s;
}

}  // namespace

TEST_CASE("zero layers act as the identity") {
  LayeredCircuit c = LayeredCircuit::brick(3, 0);
  Rng rng(1);
  const Statevector in = random_state(3, rng);
  const Statevector out = evaluate(c, in);
  for (std::uint64_t i = 0; i < in.dim(); ++i)
    CHECK(std::abs(in.amp(i) - out.amp(i)) < 1e-15);
}

TEST_CASE("a 9-qubit layer carries exactly 8 ECR gates") {
  LayeredCircuit c = LayeredCircuit::brick(9, 1);
  CHECK(c.ecr_per_layer() == 8);
  int ecr = 0;
  for (const GateOp& g : c.gate_sequence())
    if (g.kind == GateOp::Kind::ECR) ++ecr;
  CHECK(ecr == 8);
}

TEST_CASE("a mirrored identity pair composes to the identity") {
  LayeredCircuit c = LayeredCircuit::brick(5, 0);
  c.append_identity_pair();
  CHECK(c.n_layers() == 2);
  CHECK(c.layers[0].mirrored != c.layers[1].mirrored);
  Rng rng(2);
  const Statevector in = random_state(5, rng);
  const Statevector out = evaluate(c, in);
  for (std::uint64_t i = 0; i < in.dim(); ++i)
    CHECK(std::abs(in.amp(i) - out.amp(i)) < 1e-10);
}

TEST_CASE("random parameters preserve the norm") {
  LayeredCircuit c = LayeredCircuit::brick(4, 3);
  Rng rng(3);
  for (int k = 0; k < c.params.size(); ++k) c.params[k] = rng.uniform(-3, 3);
  const Statevector out = evaluate(c, Statevector(4));
  CHECK(std::abs(out.norm() - 1.0) < 1e-10);
}

TEST_CASE("overlap fidelity basics") {
  Rng rng(4);
  const Statevector a = random_state(2, rng);
  CHECK(overlap_fidelity(a, a) == doctest::Approx(1.0));
  CHECK(overlap_fidelity(Statevector::computational_basis(1, 0),
                         Statevector::computational_basis(1, 1)) ==
        doctest::Approx(0.0));
  // invariant under a global phase
  Statevector b = a;
  for (auto& amp : b.amplitudes()) amp *= std::exp(cplx(0.0, 0.77));
  CHECK(overlap_fidelity(a, b) == doctest::Approx(1.0));
}

TEST_CASE("unitary-compilation cost hits zero on an exact compilation") {
  // one layer of identity rotations is the circuit's own action; compiling
  // the circuit against itself as a target gives zero cost
  LayeredCircuit c = LayeredCircuit::brick(3, 1);
  Rng rng(5);
  for (int k = 0; k < c.params.size(); ++k) c.params[k] = rng.uniform(-1, 1);
  const Statevector in = Statevector(3);
  const Statevector target = evaluate(c, in);
  OverlapCost cost(c, in, target);
  CHECK(cost.value(c.params) == doctest::Approx(0.0).epsilon(1e-12));

  // orthogonal target costs 1
  LayeredCircuit id = LayeredCircuit::brick(1, 0);
  OverlapCost orth(id, Statevector::computational_basis(1, 0),
                   Statevector::computational_basis(1, 1));
  CHECK(orth.value(id.params) == doctest::Approx(1.0));
}

TEST_CASE("cost stays within [0,1] at random parameters") {
  LayeredCircuit shape = LayeredCircuit::brick(2, 2);
  Rng rng(6);
  OverlapCost cost(shape, Statevector(2), random_state(2, rng));
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd p(shape.param_count());
    for (int k = 0; k < p.size(); ++k) p[k] = rng.uniform(-3, 3);
    const double v = cost.value(p);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0 + 1e-12);
  }
}

TEST_CASE("adjoint gradients match central finite differences") {
  LayeredCircuit shape = LayeredCircuit::brick(3, 2);
  Rng rng(7);
  const Statevector in = random_state(3, rng);
  const Statevector target = random_state(3, rng);
  OverlapCost cost(shape, in, target);
  Eigen::VectorXd p(shape.param_count());
  for (int k = 0; k < p.size(); ++k) p[k] = rng.uniform(-0.8, 0.8);
  Eigen::VectorXd g;
  const double v = cost.value_and_grad(p, g);
  CHECK(v == doctest::Approx(cost.value(p)));
  for (int k = 0; k < p.size(); ++k) {
    Eigen::VectorXd pp = p, pm = p;
    pp[k] += 1e-5;
    pm[k] -= 1e-5;
    const double fd = (cost.value(pp) - cost.value(pm)) / 2e-5;
    CHECK(std::abs(fd - g[k]) <=
          1e-5 * std::max({std::abs(fd), std::abs(g[k]), 1e-3}));
  }
}

TEST_CASE("training flips |0> to |1> with a single U3") {
  LayeredCircuit c = LayeredCircuit::brick(1, 1);  // two U3 columns, no ECR
  OverlapCost cost(c, Statevector::computational_basis(1, 0),
                   Statevector::computational_basis(1, 1));
  TrainOptions opts;
  opts.max_iterations = 200;
  opts.cost_tolerance = 1e-8;
  opts.restarts = 2;
  opts.seed = 77;
  const TrainingReport rep = train(c, cost, opts);
  CHECK(rep.final_cost < 1e-8);
  CHECK(rep.converged);
  CHECK(rep.iterations <= 200);
}

TEST_CASE("a budget of one iteration reports non-convergence") {
  LayeredCircuit c = LayeredCircuit::brick(2, 1);
  Rng rng(8);
  OverlapCost cost(c, Statevector(2), random_state(2, rng));
  TrainOptions opts;
  opts.max_iterations = 1;
  opts.cost_tolerance = 1e-10;
  opts.restarts = 1;
  const TrainingReport rep = train(c, cost, opts);
  CHECK_FALSE(rep.converged);
}

TEST_CASE("cost history is non-increasing after best-so-far filtering") {
  LayeredCircuit c = LayeredCircuit::brick(2, 2);
  Rng rng(9);
  OverlapCost cost(c, Statevector(2), random_state(2, rng));
  TrainOptions opts;
  opts.max_iterations = 60;
  opts.restarts = 1;
  opts.seed = 5;
  const TrainingReport rep = train(c, cost, opts);
  for (std::size_t k = 1; k < rep.cost_history.size(); ++k)
    CHECK(rep.cost_history[k] <= rep.cost_history[k - 1] + 1e-15);
}

TEST_CASE("deeper circuits never fit worse on the same target") {
  Rng rng(10);
  const Statevector in = Statevector(3);
  const Statevector target = random_state(3, rng);
  double prev = 1.0;
  for (int layers : {1, 2, 3}) {
    LayeredCircuit c = LayeredCircuit::brick(3, layers);
    OverlapCost cost(c, in, target);
    TrainOptions opts;
    opts.max_iterations = 300;
    opts.restarts = 6;
    opts.seed = 11;
    const TrainingReport rep = train(c, cost, opts);
    CHECK(rep.final_cost <= prev + 1e-6);
    prev = rep.final_cost;
  }
}

TEST_CASE("training determinism given a seed") {
  LayeredCircuit a = LayeredCircuit::brick(2, 2);
  LayeredCircuit b = a;
  Rng rng(12);
  const Statevector target = random_state(2, rng);
  OverlapCost cost(a, Statevector(2), target);
  TrainOptions opts;
  opts.max_iterations = 40;
  opts.restarts = 3;
  opts.seed = 99;
  opts.parallel = true;
  const TrainingReport ra = train(a, cost, opts);
  const TrainingReport rb = train(b, cost, opts);
  CHECK(ra.final_cost == rb.final_cost);
  CHECK((a.params - b.params).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("compiled QITE preparation reaches the ED ground state") {
  HamiltonianOperator h = build_hamiltonian({1.0, 1.0, 2.5, 3});
  const double beta = 4.0;
  const DilatedUnitary dil = dilate_qite(h, beta);
  const Statevector input = Statevector::product_state("+++0");
  const OverlapCost cost =
      make_postselected_cost(LayeredCircuit::brick(4, 2), dil, input);

  CompileOptions copts;
  copts.start_layers = 2;
  copts.max_layers = 8;
  copts.cost_tolerance = 1e-4;
  copts.train.seed = 21;
  copts.train.restarts = 4;
  copts.train.max_iterations = 250;
  const CompileResult res = compile_state_prep(4, input, cost.target(), copts);
  CHECK(res.converged);

  const Statevector out = evaluate(res.circuit, input);
  auto [post, p] = postselect(out, 3, 0);
  const Statevector sys = drop_qubit(post, 3);
  const GroundSpace gs = exact_ground_state(h);
  CHECK(std::norm(gs.states[0].inner(sys)) > 0.99);
  CHECK(p > 0.9);  // the compiled isometry all but removes measurement loss
}

TEST_CASE("qae cost target matches the readout pipeline on a toy case") {
  // x = 0 swap is trivial: after H-CSWAP-H the estimation ancilla returns to
  // |0>, so the target equals the postselected preparation with A1, A0 at |0>
  HamiltonianOperator h = build_hamiltonian({0.0, 1.0, 0.0, 3});
  const HamiltonianOperator h2 = two_copy_hamiltonian(h);
  const DilatedUnitary dil2 = dilate_qite(h2, 1.0);
  const Statevector input = Statevector::product_state("00000000");
  const OverlapCost qae =
      make_qae_cost(LayeredCircuit::brick(8, 1), dil2, 3, 0, input);
  const OverlapCost plain =
      make_postselected_cost(LayeredCircuit::brick(8, 1), dil2, input);
  CHECK(overlap_fidelity(qae.target(), plain.target()) ==
        doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("circuit JSON round trip") {
  LayeredCircuit c = LayeredCircuit::brick(4, 2);
  c.append_identity_pair();
  Rng rng(13);
  for (int k = 0; k < c.params.size(); ++k) c.params[k] = rng.uniform(-2, 2);
  const LayeredCircuit back = LayeredCircuit::from_json(c.to_json());
  CHECK(back.n_qubits == c.n_qubits);
  CHECK(back.n_layers() == c.n_layers());
  CHECK((back.params - c.params).lpNorm<Eigen::Infinity>() < 1e-15);
  for (int l = 0; l < c.n_layers(); ++l)
    CHECK(back.layers[static_cast<std::size_t>(l)].mirrored ==
          c.layers[static_cast<std::size_t>(l)].mirrored);
}
