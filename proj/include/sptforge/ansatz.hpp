#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "sptforge/dilation.hpp"
#include "sptforge/qstate.hpp"

namespace sptforge {

/// Brick circuit of ECR and trainable U3 gates on an n-qubit chain.
/// A standard layer is [ECR on even bonds][U3 column][ECR on odd bonds]
/// [U3 column]; a mirrored layer runs the bond patterns in the other order.
/// Two consecutive layers of opposite parity with identity U3 rotations
/// compose to the identity (ECR^2 = I), which is what the ZNE identity
/// blocks rely on. Every layer carries n-1 ECR gates.
struct LayeredCircuit {
  struct Layer {
    bool mirrored = false;
  };

  int n_qubits = 0;
  std::vector<Layer> layers;
  Eigen::VectorXd params;  // 3 per U3, layout [layer][column][qubit][theta,phi,lambda]

  static LayeredCircuit brick(int n_qubits, int n_layers);

  int n_layers() const { return static_cast<int>(layers.size()); }
  int params_per_layer() const { return 6 * n_qubits; }
  int param_count() const { return n_layers() * params_per_layer(); }
  int param_index(int layer, int column, int qubit, int component) const;

  std::vector<std::pair<int, int>> even_bonds() const;
  std::vector<std::pair<int, int>> odd_bonds() const;
  int ecr_per_layer() const { return n_qubits - 1; }
  int ecr_count() const { return n_layers() * ecr_per_layer(); }

  /// Appends a (standard, mirrored) pair with identity rotations; a noiseless
  /// no-op on the circuit's action.
  void append_identity_pair();

  /// Flattened gate sequence; U3 gates reference `params`.
  std::vector<GateOp> gate_sequence() const;

  std::string to_json() const;
  static LayeredCircuit from_json(const std::string& text);
};

Statevector evaluate(const LayeredCircuit& circuit, const Statevector& input);

/// |<a|b>|.
double overlap_fidelity(const Statevector& a, const Statevector& b);

/// State-compilation cost 1 - |<target|V(params)|input>|, with an exact
/// adjoint-mode gradient.
class OverlapCost {
 public:
  OverlapCost(LayeredCircuit shape, Statevector input, Statevector target);

  double value(const Eigen::VectorXd& params) const;
  double value_and_grad(const Eigen::VectorXd& params,
                        Eigen::VectorXd& grad) const;

  const LayeredCircuit& shape() const { return shape_; }
  const Statevector& input() const { return input_; }
  const Statevector& target() const { return target_; }

 private:
  LayeredCircuit shape_;
  Statevector input_;
  Statevector target_;
};

/// Cost against U|input> for a fixed unitary gate.
OverlapCost make_unitary_cost(LayeredCircuit shape, const GateOp& u_target,
                              const Statevector& input);

/// Cost against the postselected, renormalized QITE output (ancilla pinned
/// to |0>), the ground-state-preparation cost of the variational framework.
OverlapCost make_postselected_cost(LayeredCircuit shape,
                                   const DilatedUnitary& dilated,
                                   const Statevector& input_full);

/// Cost against the QAE readout circuit applied after postselected two-copy
/// preparation. Register layout: copies on [0, 2L), estimation ancilla A1 at
/// 2L (also the dilation ancilla), postselection ancilla A0 at 2L+1.
OverlapCost make_qae_cost(LayeredCircuit shape, const DilatedUnitary& dilated,
                          int copy_qubits, int swap_length,
                          const Statevector& input_full);

/// QAE readout gates: SWAP(A1,A0), H(A1), C-SWAP over the first
/// `swap_length` sites of each copy, H(A1).
std::vector<GateOp> qae_readout_gates(int copy_qubits, int swap_length);

double cost_unitary(const LayeredCircuit& circuit,
                    const Eigen::VectorXd& params, const GateOp& u_target,
                    const Statevector& input);
double cost_postselected(const LayeredCircuit& circuit,
                         const Eigen::VectorXd& params,
                         const DilatedUnitary& dilated,
                         const Statevector& input_full);

struct TrainOptions {
  int max_iterations = 400;   // per restart
  double cost_tolerance = 1e-10;
  int restarts = 8;
  double init_spread = 0.1;   // uniform radians around identity
  std::uint64_t seed = 1;
  bool parallel = true;
};

struct TrainingReport {
  double final_cost = 1.0;
  int iterations = 0;
  std::vector<double> cost_history;  // best-so-far per iteration
  std::uint64_t seed = 0;
  bool converged = false;
  int winning_restart = 0;
};

/// Multi-start quasi-Newton minimization; best parameters are written into
/// `circuit`. Deterministic given the seed.
TrainingReport train(LayeredCircuit& circuit, const OverlapCost& cost,
                     const TrainOptions& opts);

/// Single quasi-Newton run continuing from the circuit's current parameters
/// (warm start); no restarts.
TrainingReport refine(LayeredCircuit& circuit, const OverlapCost& cost,
                      const TrainOptions& opts);

struct CompileOptions {
  int start_layers = 2;
  int max_layers = 12;
  double cost_tolerance = 1e-3;
  TrainOptions train;
};

struct CompileResult {
  LayeredCircuit circuit;
  TrainingReport report;
  bool converged = false;
};

/// Grows the circuit by identity pairs until the state-compilation cost drops
/// below tolerance: fresh restarts at each depth plus a warm start carried
/// over from the previous depth.
CompileResult compile_state_prep(int n_qubits, const Statevector& input,
                                 const Statevector& target,
                                 const CompileOptions& opts);

}  // namespace sptforge
