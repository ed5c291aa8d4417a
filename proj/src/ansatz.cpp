#include "sptforge/ansatz.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <optional>

#include "json.hpp"

namespace sptforge {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct FlatGate {
  bool is_u3 = false;
  int qubit = 0;       // U3
  int param_base = -1; // U3: index of theta in the parameter vector
  int q0 = 0, q1 = 0;  // ECR
};

std::vector<FlatGate> flatten(const LayeredCircuit& c) {
  std::vector<FlatGate> gates;
  gates.reserve(static_cast<std::size_t>(c.n_layers()) *
                (2 * c.n_qubits + c.ecr_per_layer()));
  const auto even = c.even_bonds();
  const auto odd = c.odd_bonds();
  for (int l = 0; l < c.n_layers(); ++l) {
    const bool mir = c.layers[static_cast<std::size_t>(l)].mirrored;
    for (int col = 0; col < 2; ++col) {
      const auto& bonds = (col == 0) != mir ? even : odd;
      for (auto [a, b] : bonds) {
        FlatGate g;
        g.is_u3 = false;
        g.q0 = a;
        g.q1 = b;
        gates.push_back(g);
      }
      for (int q = 0; q < c.n_qubits; ++q) {
        FlatGate g;
        g.is_u3 = true;
        g.qubit = q;
        g.param_base = c.param_index(l, col, q, 0);
        gates.push_back(g);
      }
    }
  }
  return gates;
}

void apply_2x2(std::vector<cplx>& a, int q, const cplx m[4]) {
  const std::uint64_t stride = 1ULL << q;
  for (std::uint64_t base = 0; base < a.size(); base += 2 * stride) {
    for (std::uint64_t j = base; j < base + stride; ++j) {
      const cplx lo = a[j], hi = a[j + stride];
      a[j] = m[0] * lo + m[1] * hi;
      a[j + stride] = m[2] * lo + m[3] * hi;
    }
  }
}

void u3_entries(double t, double p, double l, cplx m[4]) {
  const cplx i(0.0, 1.0);
  const double c = std::cos(t / 2.0), s = std::sin(t / 2.0);
  m[0] = c;
  m[1] = -std::exp(i * l) * s;
  m[2] = std::exp(i * p) * s;
  m[3] = std::exp(i * (p + l)) * c;
}

void ecr_entries(cplx m[16]) {
  static const Eigen::Matrix4cd em = ecr_matrix();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m[4 * r + c] = em(r, c);
}

void apply_ecr_flat(std::vector<cplx>& a, int q0, int q1) {
  static thread_local cplx m[16];
  static thread_local bool init = false;
  if (!init) {
    ecr_entries(m);
    init = true;
  }
  const std::uint64_t s0 = 1ULL << q0, s1 = 1ULL << q1;
  const std::uint64_t mask = s0 | s1;
  for (std::uint64_t i = 0; i < a.size(); ++i) {
    if (i & mask) continue;
    const cplx v0 = a[i], v1 = a[i | s0], v2 = a[i | s1], v3 = a[i | mask];
    a[i] = m[0] * v0 + m[1] * v1 + m[2] * v2 + m[3] * v3;
    a[i | s0] = m[4] * v0 + m[5] * v1 + m[6] * v2 + m[7] * v3;
    a[i | s1] = m[8] * v0 + m[9] * v1 + m[10] * v2 + m[11] * v3;
    a[i | mask] = m[12] * v0 + m[13] * v1 + m[14] * v2 + m[15] * v3;
  }
}

// <bra| M_q |ket> restricted to single-qubit operator M on qubit q
cplx subspace_bilinear(const std::vector<cplx>& bra,
                       const std::vector<cplx>& ket, int q, const cplx m[4]) {
  const std::uint64_t stride = 1ULL << q;
  cplx acc = 0.0;
  for (std::uint64_t base = 0; base < ket.size(); base += 2 * stride) {
    for (std::uint64_t j = base; j < base + stride; ++j) {
      const cplx klo = ket[j], khi = ket[j + stride];
      acc += std::conj(bra[j]) * (m[0] * klo + m[1] * khi);
      acc += std::conj(bra[j + stride]) * (m[2] * klo + m[3] * khi);
    }
  }
  return acc;
}

// ----- L-BFGS ------------------------------------------------------------

struct LbfgsOutcome {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  std::vector<double> history;
};

template <typename F>
LbfgsOutcome lbfgs_minimize(const F& value_and_grad, Eigen::VectorXd x0,
                            int max_iters, double f_goal) {
  constexpr int kMemory = 8;
  constexpr double kArmijo = 1e-4;
  const int n = static_cast<int>(x0.size());

  LbfgsOutcome out;
  Eigen::VectorXd x = std::move(x0), g(n);
  double f = value_and_grad(x, g);
  out.history.push_back(f);

  std::vector<Eigen::VectorXd> s_hist, y_hist;
  std::vector<double> rho_hist;

  for (int iter = 0; iter < max_iters; ++iter) {
    if (f <= f_goal || g.lpNorm<Eigen::Infinity>() < 1e-12) break;

    // two-loop recursion
    Eigen::VectorXd q = g;
    const int m = static_cast<int>(s_hist.size());
    std::vector<double> alpha(static_cast<std::size_t>(m));
    for (int k = m - 1; k >= 0; --k) {
      alpha[static_cast<std::size_t>(k)] =
          rho_hist[static_cast<std::size_t>(k)] *
          s_hist[static_cast<std::size_t>(k)].dot(q);
      q -= alpha[static_cast<std::size_t>(k)] *
           y_hist[static_cast<std::size_t>(k)];
    }
    if (m > 0) {
      const auto& s = s_hist.back();
      const auto& y = y_hist.back();
      q *= s.dot(y) / y.squaredNorm();
    }
    for (int k = 0; k < m; ++k) {
      const double beta = rho_hist[static_cast<std::size_t>(k)] *
                          y_hist[static_cast<std::size_t>(k)].dot(q);
      q += (alpha[static_cast<std::size_t>(k)] - beta) *
           s_hist[static_cast<std::size_t>(k)];
    }
    Eigen::VectorXd dir = -q;
    double dg = dir.dot(g);
    if (dg >= 0.0) {  // not a descent direction; reset
      dir = -g;
      dg = -g.squaredNorm();
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    // backtracking line search
    double step = 1.0;
    Eigen::VectorXd x_new(n), g_new(n);
    double f_new = f;
    bool ok = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = x + step * dir;
      f_new = value_and_grad(x_new, g_new);
      if (f_new <= f + kArmijo * step * dg) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    ++out.iterations;
    if (!ok) {
      out.history.push_back(f);
      break;  // line search failed; stationary enough
    }

    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > kMemory) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
        rho_hist.erase(rho_hist.begin());
      }
    }
    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    out.history.push_back(f);
  }

  out.x = std::move(x);
  out.f = f;
  return out;
}

}  // namespace

// ----- LayeredCircuit -----------------------------------------------------

LayeredCircuit LayeredCircuit::brick(int n_qubits, int n_layers) {
  if (n_qubits < 1) throw SimError("layered circuit needs at least 1 qubit");
  if (n_layers < 0) throw SimError("negative layer count");
  LayeredCircuit c;
  c.n_qubits = n_qubits;
  c.layers.assign(static_cast<std::size_t>(n_layers), Layer{});
  c.params = Eigen::VectorXd::Zero(c.param_count());
  return c;
}

int LayeredCircuit::param_index(int layer, int column, int qubit,
                                int component) const {
  return ((layer * 2 + column) * n_qubits + qubit) * 3 + component;
}

std::vector<std::pair<int, int>> LayeredCircuit::even_bonds() const {
  std::vector<std::pair<int, int>> b;
  for (int i = 0; i + 1 < n_qubits; i += 2) b.emplace_back(i, i + 1);
  return b;
}

std::vector<std::pair<int, int>> LayeredCircuit::odd_bonds() const {
  std::vector<std::pair<int, int>> b;
  for (int i = 1; i + 1 < n_qubits; i += 2) b.emplace_back(i, i + 1);
  return b;
}

void LayeredCircuit::append_identity_pair() {
  const bool last_mirrored =
      layers.empty() ? false : layers.back().mirrored;
  Layer first;
  first.mirrored = !last_mirrored;
  Layer second;
  second.mirrored = last_mirrored;
  layers.push_back(first);
  layers.push_back(second);
  Eigen::VectorXd grown = Eigen::VectorXd::Zero(param_count());
  grown.head(params.size()) = params;
  params = std::move(grown);
}

std::vector<GateOp> LayeredCircuit::gate_sequence() const {
  std::vector<GateOp> gates;
  for (const FlatGate& fg : flatten(*this)) {
    if (fg.is_u3)
      gates.push_back(GateOp::u3(fg.qubit, params[fg.param_base],
                                 params[fg.param_base + 1],
                                 params[fg.param_base + 2]));
    else
      gates.push_back(GateOp::ecr(fg.q0, fg.q1));
  }
  return gates;
}

std::string LayeredCircuit::to_json() const {
  nlohmann::json j;
  j["n_qubits"] = n_qubits;
  std::vector<int> mirrored;
  for (const Layer& l : layers) mirrored.push_back(l.mirrored ? 1 : 0);
  j["mirrored"] = mirrored;
  j["params"] = std::vector<double>(params.data(), params.data() + params.size());
  return j.dump(2);
}

LayeredCircuit LayeredCircuit::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  LayeredCircuit c;
  c.n_qubits = j.at("n_qubits").get<int>();
  for (int m : j.at("mirrored").get<std::vector<int>>())
    c.layers.push_back(Layer{m != 0});
  const auto p = j.at("params").get<std::vector<double>>();
  if (static_cast<int>(p.size()) != c.param_count())
    throw SimError("circuit JSON has inconsistent parameter count");
  c.params = Eigen::Map<const Eigen::VectorXd>(p.data(),
                                               static_cast<Eigen::Index>(p.size()));
  return c;
}

Statevector evaluate(const LayeredCircuit& circuit, const Statevector& input) {
  if (input.n_qubits() != circuit.n_qubits)
    throw SimError("circuit/input dimension mismatch");
  if (circuit.params.size() != circuit.param_count())
    throw SimError("circuit parameter vector has the wrong length");
  Statevector state = input;
  std::vector<cplx>& a = state.amplitudes();
  for (const FlatGate& fg : flatten(circuit)) {
    if (fg.is_u3) {
      cplx m[4];
      u3_entries(circuit.params[fg.param_base],
                 circuit.params[fg.param_base + 1],
                 circuit.params[fg.param_base + 2], m);
      apply_2x2(a, fg.qubit, m);
    } else {
      apply_ecr_flat(a, fg.q0, fg.q1);
    }
  }
  return state;
}

double overlap_fidelity(const Statevector& a, const Statevector& b) {
  return std::abs(a.inner(b));
}

// ----- OverlapCost ---------------------------------------------------------

OverlapCost::OverlapCost(LayeredCircuit shape, Statevector input,
                         Statevector target)
    : shape_(std::move(shape)),
      input_(std::move(input)),
      target_(std::move(target)) {
  if (input_.n_qubits() != shape_.n_qubits ||
      target_.n_qubits() != shape_.n_qubits)
    throw SimError("cost dimension mismatch");
}

double OverlapCost::value(const Eigen::VectorXd& params) const {
  LayeredCircuit c = shape_;
  c.params = params;
  const Statevector out = evaluate(c, input_);
  return 1.0 - overlap_fidelity(target_, out);
}

double OverlapCost::value_and_grad(const Eigen::VectorXd& params,
                                   Eigen::VectorXd& grad) const {
  if (params.size() != shape_.param_count())
    throw SimError("parameter vector has the wrong length");
  LayeredCircuit c = shape_;
  c.params = params;
  const std::vector<FlatGate> gates = flatten(c);

  // forward pass
  Statevector phi_state = input_;
  std::vector<cplx>& phi = phi_state.amplitudes();
  for (const FlatGate& fg : gates) {
    if (fg.is_u3) {
      cplx m[4];
      u3_entries(params[fg.param_base], params[fg.param_base + 1],
                 params[fg.param_base + 2], m);
      apply_2x2(phi, fg.qubit, m);
    } else {
      apply_ecr_flat(phi, fg.q0, fg.q1);
    }
  }
  const cplx o = target_.inner(phi_state);
  const double mag = std::abs(o);
  grad = Eigen::VectorXd::Zero(params.size());
  if (mag < 1e-12) return 1.0 - mag;  // gradient numerically undefined

  // backward pass: lam = (suffix)^dag |target>, sig = (prefix)|input>
  std::vector<cplx> lam = target_.amplitudes();
  std::vector<cplx>& sig = phi;
  const cplx o_unit = std::conj(o) / mag;

  for (auto it = gates.rbegin(); it != gates.rend(); ++it) {
    const FlatGate& fg = *it;
    if (fg.is_u3) {
      const double t = params[fg.param_base];
      const double p = params[fg.param_base + 1];
      const double l = params[fg.param_base + 2];
      cplx m[4];
      u3_entries(t, p, l, m);
      const cplx adj[4] = {std::conj(m[0]), std::conj(m[2]), std::conj(m[1]),
                           std::conj(m[3])};
      apply_2x2(sig, fg.qubit, adj);  // sig now precedes this gate

      const cplx i(0.0, 1.0);
      const double ch = std::cos(t / 2.0), sh = std::sin(t / 2.0);
      const cplx el = std::exp(i * l), ep = std::exp(i * p),
                 epl = std::exp(i * (p + l));
      const cplx dth[4] = {-0.5 * sh, -0.5 * el * ch, 0.5 * ep * ch,
                           -0.5 * epl * sh};
      const cplx dph[4] = {0.0, 0.0, i * ep * sh, i * epl * ch};
      const cplx dlm[4] = {0.0, -i * el * sh, 0.0, i * epl * ch};

      const cplx go_t = subspace_bilinear(lam, sig, fg.qubit, dth);
      const cplx go_p = subspace_bilinear(lam, sig, fg.qubit, dph);
      const cplx go_l = subspace_bilinear(lam, sig, fg.qubit, dlm);
      // d cost / dx = -d|o|/dx = -Re(conj(o) do/dx)/|o|
      grad[fg.param_base] = -(o_unit * go_t).real();
      grad[fg.param_base + 1] = -(o_unit * go_p).real();
      grad[fg.param_base + 2] = -(o_unit * go_l).real();

      apply_2x2(lam, fg.qubit, adj);
    } else {
      apply_ecr_flat(sig, fg.q0, fg.q1);  // self-inverse
      apply_ecr_flat(lam, fg.q0, fg.q1);
    }
  }
  return 1.0 - mag;
}

OverlapCost make_unitary_cost(LayeredCircuit shape, const GateOp& u_target,
                              const Statevector& input) {
  Statevector target = apply_gate(input, u_target);
  return OverlapCost(std::move(shape), input, std::move(target));
}

OverlapCost make_postselected_cost(LayeredCircuit shape,
                                   const DilatedUnitary& dilated,
                                   const Statevector& input_full) {
  Statevector target = apply_gate(input_full, dilated.as_gate());
  target = postselect(target, dilated.ancilla_index, 0).first;
  return OverlapCost(std::move(shape), input_full, std::move(target));
}

std::vector<GateOp> qae_readout_gates(int copy_qubits, int swap_length) {
  if (swap_length < 0 || swap_length > copy_qubits)
    throw SimError("swap length out of range");
  const int a1 = 2 * copy_qubits;
  const int a0 = 2 * copy_qubits + 1;
  std::vector<GateOp> gates;
  gates.push_back(GateOp::swap(a1, a0));
  gates.push_back(GateOp::u3(a1, kPi / 2, 0.0, kPi));  // H
  for (int i = 0; i < swap_length; ++i)
    gates.push_back(GateOp::cswap(a1, i, copy_qubits + i));
  gates.push_back(GateOp::u3(a1, kPi / 2, 0.0, kPi));  // H
  return gates;
}

OverlapCost make_qae_cost(LayeredCircuit shape, const DilatedUnitary& dilated,
                          int copy_qubits, int swap_length,
                          const Statevector& input_full) {
  if (dilated.ancilla_index != 2 * copy_qubits)
    throw SimError("two-copy dilation must use A1 = 2L as its ancilla");
  if (input_full.n_qubits() != 2 * copy_qubits + 2)
    throw SimError("QAE register must hold two copies plus two ancillas");
  // the dilation acts on the copies and A1; A0 rides along untouched
  Statevector target = apply_gate(input_full, dilated.as_gate());
  target = postselect(target, dilated.ancilla_index, 0).first;
  for (const GateOp& g : qae_readout_gates(copy_qubits, swap_length))
    apply_gate_in_place(target, g);
  return OverlapCost(std::move(shape), input_full, std::move(target));
}

double cost_unitary(const LayeredCircuit& circuit,
                    const Eigen::VectorXd& params, const GateOp& u_target,
                    const Statevector& input) {
  return make_unitary_cost(circuit, u_target, input).value(params);
}

double cost_postselected(const LayeredCircuit& circuit,
                         const Eigen::VectorXd& params,
                         const DilatedUnitary& dilated,
                         const Statevector& input_full) {
  return make_postselected_cost(circuit, dilated, input_full).value(params);
}

// ----- training -------------------------------------------------------------

namespace {

struct RestartResult {
  LbfgsOutcome outcome;
  int restart = 0;
};

RestartResult run_restart(const OverlapCost& cost, const LayeredCircuit& shape,
                          const TrainOptions& opts, int restart,
                          const Eigen::VectorXd* warm_start) {
  Eigen::VectorXd x0(shape.param_count());
  if (warm_start) {
    x0 = *warm_start;
  } else {
    Rng rng(Rng::derive(opts.seed, static_cast<std::uint64_t>(restart)));
    for (int k = 0; k < x0.size(); ++k)
      x0[k] = rng.uniform(-opts.init_spread, opts.init_spread);
  }
  auto fg = [&cost](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    return cost.value_and_grad(x, g);
  };
  RestartResult r;
  r.outcome = lbfgs_minimize(fg, std::move(x0), opts.max_iterations,
                             opts.cost_tolerance);
  r.restart = restart;
  return r;
}

}  // namespace

TrainingReport train(LayeredCircuit& circuit, const OverlapCost& cost,
                     const TrainOptions& opts) {
  if (opts.max_iterations <= 0) throw SimError("training budget must be positive");
  const int restarts = std::max(1, opts.restarts);

  std::vector<RestartResult> results;
  results.reserve(static_cast<std::size_t>(restarts));
  if (opts.parallel && restarts > 1) {
    std::vector<std::future<RestartResult>> futs;
    for (int r = 0; r < restarts; ++r)
      futs.push_back(std::async(std::launch::async, run_restart,
                                std::cref(cost), std::cref(circuit),
                                std::cref(opts), r, nullptr));
    for (auto& f : futs) results.push_back(f.get());
  } else {
    for (int r = 0; r < restarts; ++r)
      results.push_back(run_restart(cost, circuit, opts, r, nullptr));
  }

  // best cost wins; ties broken by iteration count, then restart index
  const RestartResult* best = &results[0];
  for (const RestartResult& r : results) {
    if (r.outcome.f < best->outcome.f ||
        (r.outcome.f == best->outcome.f &&
         (r.outcome.iterations < best->outcome.iterations ||
          (r.outcome.iterations == best->outcome.iterations &&
           r.restart < best->restart))))
      best = &r;
  }

  circuit.params = best->outcome.x;

  TrainingReport report;
  report.final_cost = best->outcome.f;
  report.iterations = best->outcome.iterations;
  report.seed = opts.seed;
  report.winning_restart = best->restart;
  report.converged = best->outcome.f <= opts.cost_tolerance;
  double running = std::numeric_limits<double>::infinity();
  for (double v : best->outcome.history) {
    running = std::min(running, v);
    report.cost_history.push_back(running);
  }
  return report;
}

TrainingReport refine(LayeredCircuit& circuit, const OverlapCost& cost,
                      const TrainOptions& opts) {
  auto fg = [&cost](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    return cost.value_and_grad(x, g);
  };
  LbfgsOutcome w = lbfgs_minimize(fg, circuit.params, opts.max_iterations,
                                  opts.cost_tolerance);
  circuit.params = w.x;
  TrainingReport report;
  report.final_cost = w.f;
  report.iterations = w.iterations;
  report.seed = opts.seed;
  report.converged = w.f <= opts.cost_tolerance;
  report.winning_restart = -1;
  double running = std::numeric_limits<double>::infinity();
  for (double v : w.history) {
    running = std::min(running, v);
    report.cost_history.push_back(running);
  }
  return report;
}

CompileResult compile_state_prep(int n_qubits, const Statevector& input,
                                 const Statevector& target,
                                 const CompileOptions& opts) {
  CompileResult result;
  LayeredCircuit shape = LayeredCircuit::brick(n_qubits, opts.start_layers);

  TrainOptions topts = opts.train;
  topts.cost_tolerance = opts.cost_tolerance;

  std::optional<Eigen::VectorXd> warm;
  int depth_round = 0;
  while (true) {
    OverlapCost cost(shape, input, target);
    TrainOptions round = topts;
    round.seed = Rng::derive(topts.seed, 1000 + static_cast<std::uint64_t>(depth_round));
    LayeredCircuit candidate = shape;
    TrainingReport report = train(candidate, cost, round);

    if (warm) {
      // continue from the previous depth's solution as well
      LayeredCircuit warm_circ = shape;
      auto fg = [&cost](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        return cost.value_and_grad(x, g);
      };
      LbfgsOutcome w = lbfgs_minimize(fg, *warm, round.max_iterations,
                                      round.cost_tolerance);
      if (w.f < report.final_cost) {
        warm_circ.params = w.x;
        candidate = warm_circ;
        report.final_cost = w.f;
        report.iterations = w.iterations;
        report.converged = w.f <= round.cost_tolerance;
        report.winning_restart = -1;  // warm start won
        report.cost_history.clear();
        double running = std::numeric_limits<double>::infinity();
        for (double v : w.history) {
          running = std::min(running, v);
          report.cost_history.push_back(running);
        }
      }
    }

    result.circuit = candidate;
    result.report = report;
    result.converged = report.converged;
    if (report.converged || shape.n_layers() + 2 > opts.max_layers) break;

    // grow by an identity pair, warm-started from the incumbent with a small
    // seeded jitter to break the saddle at exactly-identity rotations
    LayeredCircuit grown = candidate;
    grown.append_identity_pair();
    Rng jitter(Rng::derive(topts.seed, 5000 + static_cast<std::uint64_t>(depth_round)));
    Eigen::VectorXd wp = grown.params;
    for (int k = candidate.param_count(); k < grown.param_count(); ++k)
      wp[k] += jitter.uniform(-1e-3, 1e-3);
    warm = wp;
    shape = LayeredCircuit::brick(n_qubits, grown.n_layers());
    shape.layers = grown.layers;
    ++depth_round;
  }
  return result;
}

}  // namespace sptforge
