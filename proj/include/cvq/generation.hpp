#ifndef CVQ_GENERATION_HPP
#define CVQ_GENERATION_HPP

// Heralded preparation of c0|0> + c1|1> from weak two-mode squeezing and a
// weak idler displacement, and its lossy density-matrix model.

#include <cmath>
#include <limits>
#include <numbers>

#include "errors.hpp"
#include "fock.hpp"
#include "optimize.hpp"

namespace cvq {

inline double wrap_two_pi(double phi) {
  const double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(phi, two_pi);
  if (r < 0.0) r += two_pi;
  if (r >= two_pi) r = 0.0;
  return r;
}

/// (theta, phi, L) of cos(theta/2)|0> + e^{i phi} sin(theta/2)|1> under loss
/// L, together with the heralding amplitudes (q, alpha) when known.
struct GenerationParams {
  double theta = 0.0;
  double phi = 0.0;
  double loss = 0.0;
  Complex q = 0.0;
  Complex alpha = 0.0;

  static GenerationParams from_angles(double theta, double phi, double loss) {
    GenerationParams p;
    p.theta = theta;
    p.phi = wrap_two_pi(phi);
    p.loss = loss;
    p.validate();
    return p;
  }

  /// The herald projects onto alpha|0> + q|1>, so tan(theta/2) = |q|/|alpha|
  /// and phi = arg(q) - arg(alpha).
  static GenerationParams from_herald(Complex q, Complex alpha, double loss = 0.0) {
    if (q == Complex(0.0) && alpha == Complex(0.0))
      throw InvalidInput("GenerationParams: q and alpha both zero, herald impossible");
    GenerationParams p;
    p.q = q;
    p.alpha = alpha;
    p.theta = 2.0 * std::atan2(std::abs(q), std::abs(alpha));
    p.phi = (q == Complex(0.0) || alpha == Complex(0.0)) ? 0.0
                                                         : wrap_two_pi(std::arg(q) - std::arg(alpha));
    p.loss = loss;
    p.validate();
    return p;
  }

  void validate() const {
    if (!(theta >= 0.0 && theta <= std::numbers::pi))
      throw InvalidInput("GenerationParams: theta must lie in [0, pi]");
    if (!(phi >= 0.0 && phi < 2.0 * std::numbers::pi))
      throw InvalidInput("GenerationParams: phi must lie in [0, 2 pi)");
    if (!(loss >= 0.0 && loss <= 1.0)) throw InvalidInput("GenerationParams: loss must lie in [0, 1]");
  }
};

inline constexpr double kPerturbativeLimit = 0.3;

/// First-order heralded state: normalized alpha|0> + q|1>.
inline QuantumState herald(Complex q, Complex alpha, int dim = 6) {
  if (std::abs(q) >= kPerturbativeLimit || std::abs(alpha) >= kPerturbativeLimit)
    throw InvalidInput("herald: |q| and |alpha| must be < 0.3 (perturbative regime)");
  if (q == Complex(0.0) && alpha == Complex(0.0))
    throw InvalidInput("herald: q and alpha both zero, herald impossible");
  if (dim < 2) throw DimensionError("herald: dim must be >= 2");
  return make_superposition({alpha, q}, dim);
}

/// The lossy superposition
///   rho00 = 1 - (1-L) sin^2(theta/2)
///   rho01 = sin(theta) e^{-i phi} sqrt(1-L) / 2
///   rho11 = (1-L) sin^2(theta/2)
/// embedded at the given cutoff.
inline QuantumState rho_theta_phi_L(const GenerationParams &params, int dim = 6) {
  params.validate();
  if (dim < 2) throw DimensionError("rho_theta_phi_L: dim must be >= 2");
  const double s2 = std::pow(std::sin(params.theta / 2.0), 2);
  const double eta = 1.0 - params.loss;
  CMatrix m = CMatrix::Zero(dim, dim);
  m(0, 0) = 1.0 - eta * s2;
  m(1, 1) = eta * s2;
  m(0, 1) = 0.5 * std::sin(params.theta) * std::polar(1.0, -params.phi) * std::sqrt(eta);
  m(1, 0) = std::conj(m(0, 1));
  return QuantumState::from_matrix(std::move(m), {1e-12, 1e-12, -1e-10});
}

inline QuantumState rho_theta_phi_L(double theta, double phi, double loss, int dim = 6) {
  return rho_theta_phi_L(GenerationParams::from_angles(theta, phi, loss), dim);
}

struct PhaseLossFit {
  double phi = 0.0;
  double loss = 0.0;
  double residual = 0.0;
  /// Off-diagonal term too small to carry the phase (theta near 0 or pi).
  bool phi_reliable = true;
  /// Loss barely changes a state that is mostly vacuum (small theta).
  bool loss_reliable = true;
};

inline constexpr double kFitPhiMinSin = 0.2;
inline constexpr double kFitLossMinTheta = 0.3;

/// Least-squares fit of (phi, L) at fixed theta: minimizes the Frobenius
/// distance between the measured 2x2 block and the lossy model.
inline PhaseLossFit fit_phi_L(const QuantumState &measured, double theta) {
  if (!(theta >= 0.0 && theta <= std::numbers::pi))
    throw InvalidInput("fit_phi_L: theta must lie in [0, pi]");
  if (measured.dim() < 2) throw DimensionError("fit_phi_L: state needs at least two levels");
  double above = 0.0;
  for (int n = 2; n < measured.dim(); ++n) above += measured.population(n);
  if (above >= 0.1) throw InvalidInput("fit_phi_L: population above |1> must be < 0.1");

  const CMatrix block = measured.matrix().topLeftCorner(2, 2);
  const double s2 = std::pow(std::sin(theta / 2.0), 2);
  const double half_sin = 0.5 * std::sin(theta);

  auto model_distance = [&](double phi, double loss) {
    loss = std::clamp(loss, 0.0, 1.0);
    const double eta = 1.0 - loss;
    const Complex off = half_sin * std::polar(1.0, -phi) * std::sqrt(eta);
    const double d00 = block(0, 0).real() - (1.0 - eta * s2);
    const double d11 = block(1, 1).real() - eta * s2;
    const double d01 = std::norm(block(0, 1) - off);
    const double d10 = std::norm(block(1, 0) - std::conj(off));
    return std::sqrt(d00 * d00 + d11 * d11 + d01 + d10);
  };

  // Moment estimates seed the search: phi from the coherence phase, L from
  // the one-photon population (or the coherence size when s2 is tiny).
  const Complex coh = 0.5 * (block(0, 1) + std::conj(block(1, 0)));
  double phi0 = std::abs(coh) > 0.0 ? wrap_two_pi(-std::arg(coh)) : 0.0;
  double loss0 = 0.0;
  if (s2 > 1e-6) {
    loss0 = 1.0 - block(1, 1).real() / s2;
  } else if (half_sin > 1e-6) {
    loss0 = 1.0 - std::pow(std::abs(coh) / half_sin, 2);
  }
  loss0 = std::clamp(loss0, 0.0, 1.0);

  NelderMeadOptions nm;
  nm.initial_step = 0.05;
  nm.f_tol = 1e-16;
  nm.x_tol = 1e-12;
  auto r = nelder_mead([&](const std::vector<double> &v) { return model_distance(v[0], v[1]); },
                       {phi0, loss0}, nm);
  const double start_value = model_distance(phi0, loss0);
  double phi = r.x[0], loss = std::clamp(r.x[1], 0.0, 1.0), resid = r.value;
  if (start_value <= resid) {
    phi = phi0;
    loss = loss0;
    resid = start_value;
  }

  PhaseLossFit fit;
  fit.phi = wrap_two_pi(phi);
  fit.loss = loss;
  fit.residual = resid;
  fit.phi_reliable = std::sin(theta) >= kFitPhiMinSin;
  fit.loss_reliable = theta >= kFitLossMinTheta;
  return fit;
}

/// APD count-rate ratio (displacement beam on : off) for the pure model,
/// (1 + tan^2(theta/2)) / tan^2(theta/2). Infinite at theta = 0.
inline double count_rate_ratio(double theta) {
  if (!(theta >= 0.0 && theta <= std::numbers::pi))
    throw InvalidInput("count_rate_ratio: theta must lie in [0, pi]");
  if (theta == 0.0) return std::numeric_limits<double>::infinity();
  const double t2 = std::pow(std::tan(theta / 2.0), 2);
  if (!std::isfinite(t2)) return 1.0;
  return (1.0 + t2) / t2;
}

} // namespace cvq

#endif // CVQ_GENERATION_HPP
