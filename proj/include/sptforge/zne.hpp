#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sptforge/ansatz.hpp"
#include "sptforge/noise.hpp"

namespace sptforge {

/// Trained circuit extended by m appended identity layers (m/2 mirrored
/// pairs with identity rotations). Noiseless output is unchanged; each added
/// layer contributes n-1 noisy ECR gates.
struct FoldedCircuit {
  LayeredCircuit base;
  int m_identity = 0;
  LayeredCircuit circuit;  // base followed by the identity block
};

FoldedCircuit fold(const LayeredCircuit& base, int m_identity);

enum class FitForm { Linear, Quadratic, Exponential };

std::string fit_form_name(FitForm f);
FitForm fit_form_from_name(const std::string& name);

struct ExtrapolationFit {
  std::vector<double> xs;     // total layer counts n + m
  std::vector<double> ys;     // observable means
  std::vector<double> yerrs;  // standard errors (0 allowed)
  FitForm form = FitForm::Exponential;  // requested
  FitForm used_form = FitForm::Exponential;
  bool fell_back = false;     // exponential fit failed, quadratic used
  std::vector<double> coeffs;
  double zero_noise_value = 0.0;  // fit evaluated at x = 0
  double fit_residual = 0.0;      // weighted RMS residual

  double evaluate(double x) const;
  std::string to_json() const;
};

/// Weighted least squares in the chosen form; the zero-noise value is the
/// fit evaluated at zero layers. Forms: linear a+b*x, quadratic a+b*x+c*x^2,
/// exponential a+b*r^x (separable scan over r with linear solves).
ExtrapolationFit extrapolate(const std::vector<double>& xs,
                             const std::vector<double>& ys,
                             const std::vector<double>& yerrs, FitForm form);

struct ZneResult {
  double mitigated = 0.0;
  double raw = 0.0;  // unmitigated (m = 0) estimate
  ExtrapolationFit fit;
};

/// Full pipeline for one Pauli observable: fold at each m, estimate by
/// per-shot noisy trajectories (plus readout error and optional ancilla
/// postselection), then extrapolate to zero layers.
ZneResult zne_expectation(const LayeredCircuit& base, const Statevector& input,
                          const PauliString& observable,
                          const NoiseModel& model,
                          const std::vector<int>& m_list, int shots,
                          FitForm form, std::uint64_t seed,
                          std::optional<int> postselect_qubit = std::nullopt);

/// Same pipeline for several single-basis-compatible observables measured
/// from shared samples (one record per m). All observables must be diagonal
/// in the same product basis.
std::vector<ZneResult> zne_multi_expectation(
    const LayeredCircuit& base, const Statevector& input,
    const std::vector<PauliString>& observables, const NoiseModel& model,
    const std::vector<int>& m_list, int shots, FitForm form,
    std::uint64_t seed, std::optional<int> postselect_qubit = std::nullopt);

}  // namespace sptforge
