#include "sptforge/zne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "json.hpp"

namespace sptforge {

FoldedCircuit fold(const LayeredCircuit& base, int m_identity) {
  if (m_identity < 0 || m_identity % 2 != 0)
    throw SimError("identity layer count must be even and non-negative");
  FoldedCircuit f;
  f.base = base;
  f.m_identity = m_identity;
  f.circuit = base;
  for (int k = 0; k < m_identity / 2; ++k) f.circuit.append_identity_pair();
  return f;
}

std::string fit_form_name(FitForm f) {
  switch (f) {
    case FitForm::Linear: return "linear";
    case FitForm::Quadratic: return "quadratic";
    case FitForm::Exponential: return "exponential";
  }
  throw SimError("unknown fit form");
}

FitForm fit_form_from_name(const std::string& name) {
  if (name == "linear") return FitForm::Linear;
  if (name == "quadratic") return FitForm::Quadratic;
  if (name == "exponential") return FitForm::Exponential;
  throw SimError("unknown fit form: " + name);
}

double ExtrapolationFit::evaluate(double x) const {
  switch (used_form) {
    case FitForm::Linear:
      return coeffs[0] + coeffs[1] * x;
    case FitForm::Quadratic:
      return coeffs[0] + coeffs[1] * x + coeffs[2] * x * x;
    case FitForm::Exponential:
      return coeffs[0] + coeffs[1] * std::pow(coeffs[2], x);
  }
  throw SimError("unknown fit form");
}

std::string ExtrapolationFit::to_json() const {
  nlohmann::json j;
  j["xs"] = xs;
  j["ys"] = ys;
  j["yerrs"] = yerrs;
  j["form"] = fit_form_name(form);
  j["used_form"] = fit_form_name(used_form);
  j["fell_back"] = fell_back;
  j["coeffs"] = coeffs;
  j["zero_noise_value"] = zero_noise_value;
  j["fit_residual"] = fit_residual;
  return j.dump(2);
}

namespace {

int form_params(FitForm f) {
  switch (f) {
    case FitForm::Linear: return 2;
    case FitForm::Quadratic: return 3;
    case FitForm::Exponential: return 3;
  }
  throw SimError("unknown fit form");
}

struct Wls {
  Eigen::VectorXd coeffs;
  double residual = 0.0;  // weighted RMS
  bool ok = false;
};

Wls weighted_solve(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& w) {
  const Eigen::VectorXd sw = w.cwiseSqrt();
  Eigen::MatrixXd a = sw.asDiagonal() * design;
  Eigen::VectorXd b = sw.asDiagonal() * y;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  Wls out;
  if (qr.rank() < design.cols()) return out;
  out.coeffs = qr.solve(b);
  const Eigen::VectorXd r = y - design * out.coeffs;
  out.residual = std::sqrt((w.array() * r.array().square()).sum() / w.sum());
  out.ok = out.coeffs.allFinite();
  return out;
}

}  // namespace

ExtrapolationFit extrapolate(const std::vector<double>& xs,
                             const std::vector<double>& ys,
                             const std::vector<double>& yerrs, FitForm form) {
  const int n = static_cast<int>(xs.size());
  if (static_cast<int>(ys.size()) != n ||
      (!yerrs.empty() && static_cast<int>(yerrs.size()) != n))
    throw SimError("extrapolate: input length mismatch");
  if (std::set<double>(xs.begin(), xs.end()).size() < 3)
    throw SimError("extrapolate needs at least 3 distinct noise levels");
  if (n < form_params(form) + 1)
    throw SimError("extrapolate needs at least one more point than fit parameters");

  Eigen::VectorXd x(n), y(n), w(n);
  bool have_errs = !yerrs.empty();
  if (have_errs)
    for (double e : yerrs)
      if (e <= 0.0) have_errs = false;
  for (int i = 0; i < n; ++i) {
    x[i] = xs[i];
    y[i] = ys[i];
    w[i] = have_errs ? 1.0 / (yerrs[i] * yerrs[i]) : 1.0;
  }

  ExtrapolationFit fit;
  fit.xs = xs;
  fit.ys = ys;
  fit.yerrs = yerrs.empty() ? std::vector<double>(xs.size(), 0.0) : yerrs;
  fit.form = form;
  fit.used_form = form;

  auto poly_fit = [&](int degree) -> Wls {
    Eigen::MatrixXd design(n, degree + 1);
    for (int i = 0; i < n; ++i) {
      double p = 1.0;
      for (int d = 0; d <= degree; ++d) {
        design(i, d) = p;
        p *= x[i];
      }
    }
    return weighted_solve(design, y, w);
  };

  if (form == FitForm::Linear || form == FitForm::Quadratic) {
    const Wls s = poly_fit(form == FitForm::Linear ? 1 : 2);
    if (!s.ok) throw SimError("extrapolate: degenerate design matrix");
    fit.coeffs.assign(s.coeffs.data(), s.coeffs.data() + s.coeffs.size());
    fit.fit_residual = s.residual;
    fit.zero_noise_value = fit.evaluate(0.0);
    return fit;
  }

  // exponential a + b r^x: separable scan over r, linear WLS for (a, b).
  // Rates whose basis function has all but vanished at the smallest measured
  // x would let the intercept run away from noise alone, so the scan keeps
  // the zero-layer amplification bounded and the intercept physical.
  const double x_min = x.minCoeff();
  const double y_span = y.cwiseAbs().maxCoeff();
  const double intercept_bound = 1.5 * std::max(1.0, y_span);
  double best_sse = std::numeric_limits<double>::infinity();
  double best_r = 0.0, best_a = 0.0, best_b = 0.0, best_res = 0.0;
  bool found = false;
  auto try_r = [&](double r) {
    if (std::pow(r, x_min) < 0.05) return;
    Eigen::MatrixXd design(n, 2);
    for (int i = 0; i < n; ++i) {
      design(i, 0) = 1.0;
      design(i, 1) = std::pow(r, x[i]);
    }
    const Wls s = weighted_solve(design, y, w);
    if (!s.ok) return;
    if (std::abs(s.coeffs[0] + s.coeffs[1]) > intercept_bound) return;
    const Eigen::VectorXd res = y - design * s.coeffs;
    const double sse = (w.array() * res.array().square()).sum();
    if (sse < best_sse) {
      best_sse = sse;
      best_r = r;
      best_a = s.coeffs[0];
      best_b = s.coeffs[1];
      best_res = s.residual;
      found = true;
    }
  };
  for (int k = 1; k <= 98; ++k) try_r(k / 100.0);
  if (found) {  // local refinement around the best grid point
    const double lo = std::max(0.005, best_r - 0.01);
    const double hi = std::min(0.995, best_r + 0.01);
    for (int k = 0; k <= 40; ++k) try_r(lo + (hi - lo) * k / 40.0);
  }

  if (!found || !std::isfinite(best_a) || !std::isfinite(best_b)) {
    const Wls s = poly_fit(2);
    if (!s.ok) throw SimError("extrapolate: degenerate design matrix");
    fit.used_form = FitForm::Quadratic;
    fit.fell_back = true;
    fit.coeffs.assign(s.coeffs.data(), s.coeffs.data() + s.coeffs.size());
    fit.fit_residual = s.residual;
    fit.zero_noise_value = fit.evaluate(0.0);
    return fit;
  }

  fit.coeffs = {best_a, best_b, best_r};
  fit.fit_residual = best_res;
  fit.zero_noise_value = fit.evaluate(0.0);
  return fit;
}

namespace {

// Common measurement basis for a set of Pauli observables; error when two
// observables need different axes on one qubit.
std::string common_basis(int n_qubits,
                         const std::vector<PauliString>& observables) {
  std::string basis(static_cast<std::size_t>(n_qubits), 'Z');
  std::string fixed(static_cast<std::size_t>(n_qubits), 'I');
  for (const PauliString& p : observables) {
    if (p.n_qubits() != n_qubits) throw SimError("observable size mismatch");
    for (int q = 0; q < n_qubits; ++q) {
      const char c = p.letter(q);
      if (c == 'I') continue;
      if (fixed[static_cast<std::size_t>(q)] == 'I') {
        fixed[static_cast<std::size_t>(q)] = c;
        basis[static_cast<std::size_t>(q)] = c;
      } else if (fixed[static_cast<std::size_t>(q)] != c) {
        throw SimError("observables need incompatible measurement bases");
      }
    }
  }
  return basis;
}

std::pair<double, double> record_pauli_mean(const MeasurementRecord& rec,
                                            const PauliString& p,
                                            std::optional<int> post_qubit) {
  if (!p.is_hermitian()) throw SimError("observable is not Hermitian");
  MeasurementRecord kept;
  kept.shots = rec.shots;
  if (post_qubit) {
    for (const auto& [bits, c] : rec.counts)
      if (bits.at(static_cast<std::size_t>(*post_qubit)) == '0')
        kept.counts[bits] = c;
    if (kept.counts.empty())
      throw PostselectionStarvedError("no shots survived postselection");
  } else {
    kept.counts = rec.counts;
  }
  std::vector<int> sites;
  for (int q = 0; q < p.n_qubits(); ++q)
    if (p.letter(q) != 'I') sites.push_back(q);
  auto [mean, se] = parity_mean(kept, sites);
  const double c = p.coefficient().real();
  return {c * mean, std::abs(c) * se};
}

}  // namespace

std::vector<ZneResult> zne_multi_expectation(
    const LayeredCircuit& base, const Statevector& input,
    const std::vector<PauliString>& observables, const NoiseModel& model,
    const std::vector<int>& m_list, int shots, FitForm form,
    std::uint64_t seed, std::optional<int> postselect_qubit) {
  if (observables.empty()) throw SimError("no observables");
  const std::string basis = common_basis(base.n_qubits, observables);

  std::vector<double> xs;
  std::vector<std::vector<double>> ys(observables.size()),
      es(observables.size());
  int m_zero_index = -1;
  for (std::size_t mi = 0; mi < m_list.size(); ++mi) {
    const FoldedCircuit folded = fold(base, m_list[mi]);
    const std::uint64_t rec_seed = Rng::derive(seed, 7000 + mi);
    MeasurementRecord rec = noisy_sample(folded.circuit, input, basis, model,
                                         shots, rec_seed);
    rec = apply_readout_error(rec, model);
    xs.push_back(static_cast<double>(folded.circuit.n_layers()));
    if (m_list[mi] == 0) m_zero_index = static_cast<int>(mi);
    for (std::size_t o = 0; o < observables.size(); ++o) {
      auto [mean, se] = record_pauli_mean(rec, observables[o], postselect_qubit);
      ys[o].push_back(mean);
      es[o].push_back(se);
    }
  }

  std::vector<ZneResult> out(observables.size());
  for (std::size_t o = 0; o < observables.size(); ++o) {
    ZneResult r;
    r.fit = extrapolate(xs, ys[o], es[o], form);
    r.mitigated = r.fit.zero_noise_value;
    r.raw = m_zero_index >= 0 ? ys[o][static_cast<std::size_t>(m_zero_index)]
                              : ys[o].front();
    out[o] = r;
  }
  return out;
}

ZneResult zne_expectation(const LayeredCircuit& base, const Statevector& input,
                          const PauliString& observable,
                          const NoiseModel& model,
                          const std::vector<int>& m_list, int shots,
                          FitForm form, std::uint64_t seed,
                          std::optional<int> postselect_qubit) {
  return zne_multi_expectation(base, input, {observable}, model, m_list, shots,
                               form, seed, postselect_qubit)[0];
}

}  // namespace sptforge
