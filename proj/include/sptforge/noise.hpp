#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sptforge/ansatz.hpp"
#include "sptforge/qstate.hpp"

namespace sptforge {

/// Device-noise proxy: two-qubit depolarizing after every ECR (uniform over
/// the 15 non-identity Paulis) plus independent readout bit flips. Single-
/// qubit gates are treated as noiseless. All randomness derives from `seed`.
struct NoiseModel {
  double p_ecr = 0.005;
  double p_readout = 0.006;
  std::uint64_t seed = 0;

  void validate() const {
    if (p_ecr < 0.0 || p_ecr > 1.0 || p_readout < 0.0 || p_readout > 1.0)
      throw SimError("noise probabilities must lie in [0,1]");
  }
};

struct NoisyExpectation {
  double mean = 0.0;
  double std_error = 0.0;
  long trajectories = 0;
};

/// Trajectory-unraveled depolarizing noise: after each ECR, with probability
/// p_ecr a uniformly random non-identity two-qubit Pauli is inserted on its
/// targets. Expectations are averaged over trajectories (pairwise summation).
/// With `postselect_qubit` set, returns the self-normalized conditional
/// estimate given that qubit reads 0.
std::vector<NoisyExpectation> noisy_evaluate(
    const LayeredCircuit& circuit, const Statevector& input,
    const NoiseModel& model, int trajectories,
    const std::vector<PauliString>& observables,
    std::optional<int> postselect_qubit = std::nullopt);

/// One trajectory per shot, then one measurement outcome per trajectory.
/// Readout error is NOT applied here; compose with apply_readout_error.
MeasurementRecord noisy_sample(const LayeredCircuit& circuit,
                               const Statevector& input,
                               const std::string& basis,
                               const NoiseModel& model, int shots,
                               std::uint64_t seed);

/// Flips each bit of each shot independently with p_readout; seeded from
/// (model.seed, record.seed).
MeasurementRecord apply_readout_error(const MeasurementRecord& record,
                                      const NoiseModel& model);

/// Exact channel composition (depolarizing after each ECR applied as a
/// superoperator); the trajectory estimator must converge to this. n <= 6.
DensityMatrix density_matrix_reference(const LayeredCircuit& circuit,
                                       const Statevector& input,
                                       const NoiseModel& model);

/// Same channel composition starting from a mixed state.
DensityMatrix density_matrix_reference(const LayeredCircuit& circuit,
                                       const DensityMatrix& input,
                                       const NoiseModel& model);

}  // namespace sptforge
