#ifndef CVQ_GATE_HPP
#define CVQ_GATE_HPP

// Moment-level noise budget of the measurement-based cubic phase gate:
//   x_out = (x_in - x_sqz)/sqrt(2)
//   p_out = sqrt(2)(p_in + 3k/(2 sqrt 2) x_in^2) + (p_anc - 3k x_anc^2)
//           + 3k (x_in x_sqz + x_sqz^2 / 2)
// with independent input, ancilla and zero-mean Gaussian squeezed modes.

#include <cmath>

#include "errors.hpp"
#include "fock.hpp"
#include "nonlinear_squeezing.hpp"

namespace cvq {

struct ModeMoments {
  double x = 0.0;
  double p = 0.0;
  double x2 = 0.0;
  double p2 = 0.0;
  double x3 = 0.0;
  double x4 = 0.0;
  double px2_sym = 0.0;  // <{p, x^2}>/2

  double var_x() const { return x2 - x * x; }
  double var_p() const { return p2 - p * p; }
  double var_x2() const { return x4 - x2 * x2; }
  double cov_p_x2() const { return px2_sym - p * x2; }

  void validate() const {
    if (var_x() * var_p() < 0.25 - 1e-9) throw InvalidInput("ModeMoments: uncertainty relation violated");
    if (var_x() < -1e-12 || var_x2() < -1e-12) throw InvalidInput("ModeMoments: negative variance");
  }

  static ModeMoments vacuum() { return {0.0, 0.0, 0.5, 0.5, 0.0, 0.75, 0.0}; }

  /// Moments after the squeeze x -> x/lambda, p -> lambda p.
  ModeMoments squeezed(double lambda) const {
    if (!(lambda > 0.0)) throw InvalidInput("ModeMoments::squeezed: lambda must be > 0");
    const double l2 = lambda * lambda;
    return {x / lambda, p * lambda, x2 / l2, p2 * l2, x3 / (l2 * lambda), x4 / (l2 * l2), px2_sym / lambda};
  }

  /// Exact moments of a Fock-basis state (padded past the cutoff).
  static ModeMoments of(const QuantumState &state) {
    const int dim = state.dim() + 2;
    const QuantumState s = state.resized(dim);
    const auto [x, p] = quadrature_ops(dim);
    const FockOperator xx = x * x;
    ModeMoments m;
    m.x = moment(s, x).real();
    m.p = moment(s, p).real();
    m.x2 = moment(s, xx).real();
    m.p2 = moment(s, p * p).real();
    m.x3 = moment(s, xx * x).real();
    m.x4 = moment(s, xx * xx).real();
    m.px2_sym = 0.5 * moment(s, p * xx + xx * p).real();
    return m;
  }
};

struct GateNoiseReport {
  double kappa = 1.0;
  double sqz_var = 0.0;
  double mean_x_out = 0.0;
  double mean_p_out = 0.0;
  double var_x_out = 0.0;
  double var_p_out = 0.0;
  /// Var of sqrt(2)(p_in + 3k/(2 sqrt 2) x_in^2), the ideal gate alone.
  double ideal_var = 0.0;
  double ancilla_excess = 0.0;
  double sqz_excess = 0.0;

  double excess() const { return var_p_out - ideal_var; }
};

/// Var(p - c x^2) from single-mode moments.
inline double var_p_minus_cx2(const ModeMoments &m, double c) {
  return m.var_p() + c * c * m.var_x2() - 2.0 * c * m.cov_p_x2();
}

inline GateNoiseReport propagate(const ModeMoments &input, const ModeMoments &ancilla, double sqz_var,
                                 double kappa = 1.0) {
  if (!(sqz_var >= 0.0)) throw InvalidInput("propagate: sqz_var must be >= 0");
  const double r2 = std::sqrt(2.0);
  GateNoiseReport r;
  r.kappa = kappa;
  r.sqz_var = sqz_var;

  r.mean_x_out = input.x / r2;
  r.var_x_out = 0.5 * (input.var_x() + sqz_var);

  // Signal term: sqrt(2) (p_in + c x_in^2) with c = 3k/(2 sqrt 2).
  const double c_in = 3.0 * kappa / (2.0 * r2);
  r.ideal_var = 2.0 * var_p_minus_cx2(input, -c_in);
  const double mean_signal = r2 * (input.p + c_in * input.x2);

  // Ancilla term p_anc - 3k x_anc^2 (note the opposite sign).
  r.ancilla_excess = var_p_minus_cx2(ancilla, 3.0 * kappa);
  const double mean_anc = ancilla.p - 3.0 * kappa * ancilla.x2;

  // 3k (x_in s + s^2/2) with s ~ N(0, v): mean 3k v/2, variance
  // 9k^2 (<x_in^2> v + v^2/2), uncorrelated with the other two terms.
  r.sqz_excess = 9.0 * kappa * kappa * (input.x2 * sqz_var + 0.5 * sqz_var * sqz_var);
  const double mean_sqz = 1.5 * kappa * sqz_var;

  r.mean_p_out = mean_signal + mean_anc + mean_sqz;
  r.var_p_out = r.ideal_var + r.ancilla_excess + r.sqz_excess;
  return r;
}

/// Best NLSQ (dB) reachable with a 0/1 superposition, lossless.
inline double best_single_photon_superposition_db() {
  static const double db = optimize_coefficients(1).result.db;
  return db;
}

/// NLSQ in dB an ancilla needs for its excess variance to meet the budget,
/// 10 log10(target / V_vac^opt(kappa)), clipped below at the best 0/1
/// superposition value.
inline double required_ancilla_db(double target_excess, double kappa = 1.0) {
  if (!(target_excess > 0.0)) throw InvalidInput("required_ancilla_db: target_excess must be > 0");
  const double vac = vacuum_optimum(kappa, 3).variance;
  const double db = 10.0 * std::log10(target_excess / vac);
  return std::max(db, best_single_photon_superposition_db());
}

} // namespace cvq

#endif // CVQ_GATE_HPP
