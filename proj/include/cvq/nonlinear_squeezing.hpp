#ifndef CVQ_NONLINEAR_SQUEEZING_HPP
#define CVQ_NONLINEAR_SQUEEZING_HPP

// Nonlinear variance of y = lambda p - N kappa (x / lambda)^(N-1) and its
// optimum over lambda > 0, compared against the vacuum (Gaussian) optimum.

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <vector>

#include "errors.hpp"
#include "fock.hpp"
#include "optimize.hpp"
#include "random.hpp"

namespace cvq {

/// The moments that fully determine Var(y) as a function of lambda.
struct NonlinearMoments {
  int order = 3;
  double mean_p = 0.0;
  double mean_p2 = 0.0;
  double mean_xk = 0.0;   // <x^(N-1)>
  double mean_x2k = 0.0;  // <x^(2(N-1))>
  double sym_pxk = 0.0;   // <{p, x^(N-1)}>/2

  double var_p() const { return mean_p2 - mean_p * mean_p; }
  double var_xk() const { return mean_x2k - mean_xk * mean_xk; }
  double cov_pxk() const { return sym_pxk - mean_p * mean_xk; }
};

/// Exact moments: the state is embedded in a basis N-1 levels larger so
/// that x^(N-1) acting on any occupied level never meets the cutoff.
inline NonlinearMoments nonlinear_moments(const QuantumState &state, int order) {
  if (order < 3) throw InvalidInput("nonlinear_moments: order must be >= 3");
  const int k = order - 1;
  const int dim = state.dim() + k;
  const QuantumState padded = state.resized(dim);
  const auto [x, p] = quadrature_ops(dim);
  const FockOperator xk = x.pow(k);
  NonlinearMoments m;
  m.order = order;
  m.mean_p = moment(padded, p).real();
  m.mean_p2 = moment(padded, p * p).real();
  m.mean_xk = moment(padded, xk).real();
  m.mean_x2k = moment(padded, xk * xk).real();
  m.sym_pxk = 0.5 * moment(padded, p * xk + xk * p).real();
  return m;
}

/// Var(lambda p - c x^(N-1)) with c = N kappa / lambda^(N-1).
inline double nonlinear_variance(const NonlinearMoments &m, double lambda, double kappa) {
  if (!(lambda > 0.0)) throw InvalidInput("nonlinear_variance: lambda must be > 0");
  const double c = m.order * kappa / std::pow(lambda, m.order - 1);
  return lambda * lambda * m.var_p() + c * c * m.var_xk() - 2.0 * lambda * c * m.cov_pxk();
}

inline double nonlinear_variance(const QuantumState &state, double lambda, double kappa, int order) {
  if (!(lambda > 0.0)) throw InvalidInput("nonlinear_variance: lambda must be > 0");
  return nonlinear_variance(nonlinear_moments(state, order), lambda, kappa);
}

struct NlsqResult {
  double variance_opt = 0.0;
  double lambda_opt = 0.0;
  double ratio = 0.0;
  double db = 0.0;
  int order = 3;
  double kappa = 1.0;

  /// Negative dB: the state beats every Gaussian state.
  bool nonlinearly_squeezed() const { return ratio < 1.0; }
};

inline constexpr double kLambdaMin = 1e-2;
inline constexpr double kLambdaMax = 1e2;
inline constexpr int kLambdaGrid = 64;
inline constexpr double kLambdaTol = 1e-9;

struct LambdaOptimum {
  double variance = 0.0;
  double lambda = 0.0;
};

inline LambdaOptimum minimize_over_lambda(const NonlinearMoments &m, double kappa) {
  if (kappa == 0.0) throw InvalidInput("optimal_nonlinear_variance: kappa must be nonzero");
  try {
    const auto r = minimize_log_bracketed(
        [&](double lam) { return nonlinear_variance(m, lam, kappa); }, kLambdaMin, kLambdaMax,
        kLambdaGrid, kLambdaTol);
    return {r.value, r.x};
  } catch (const NumericalError &e) {
    std::ostringstream msg;
    msg << "optimal_nonlinear_variance: " << e.what() << "; Var(p)=" << m.var_p()
        << " Var(x^" << (m.order - 1) << ")=" << m.var_xk() << " Cov=" << m.cov_pxk()
        << " kappa=" << kappa;
    throw NumericalError(msg.str());
  }
}

/// Optimal nonlinear variance of the vacuum, the Gaussian bound.
inline LambdaOptimum vacuum_optimum(double kappa, int order) {
  return minimize_over_lambda(nonlinear_moments(vacuum(1), order), kappa);
}

inline NlsqResult optimal_nonlinear_variance(const NonlinearMoments &m, double kappa) {
  const auto opt = minimize_over_lambda(m, kappa);
  const auto vac = vacuum_optimum(kappa, m.order);
  NlsqResult r;
  r.variance_opt = opt.variance;
  r.lambda_opt = opt.lambda;
  r.ratio = opt.variance / vac.variance;
  r.db = 10.0 * std::log10(r.ratio);
  r.order = m.order;
  r.kappa = kappa;
  return r;
}

inline NlsqResult optimal_nonlinear_variance(const QuantumState &state, double kappa = 1.0,
                                             int order = 3) {
  return optimal_nonlinear_variance(nonlinear_moments(state, order), kappa);
}

inline double nlsq_db(const QuantumState &state, double kappa = 1.0, int order = 3) {
  return optimal_nonlinear_variance(state, kappa, order).db;
}

/// Result for kappa' = u^N kappa without re-optimizing: the substitution
/// lambda -> u lambda maps y(kappa) onto y(kappa')/u, so the variance scales
/// by u^2 and the ratio is unchanged.
inline NlsqResult kappa_rescale(const NlsqResult &r, double u) {
  if (!(u > 0.0)) throw InvalidInput("kappa_rescale: u must be > 0");
  NlsqResult out = r;
  out.variance_opt = r.variance_opt * u * u;
  out.lambda_opt = r.lambda_opt * u;
  out.kappa = r.kappa * std::pow(u, r.order);
  return out;
}

struct CoefficientOptimum {
  std::vector<Complex> coefficients;
  NlsqResult result;
};

struct CoefficientSearchOptions {
  int starts = 32;
  std::uint64_t seed = kDefaultSeed;
};

namespace detail {

/// Hyperspherical magnitudes (M angles) and relative phases (M angles) to a
/// unit coefficient vector with c_0 real and nonnegative.
inline std::vector<Complex> coefficients_from_angles(const std::vector<double> &params, int max_n) {
  std::vector<Complex> c(max_n + 1);
  double s = 1.0;
  for (int k = 0; k < max_n; ++k) {
    c[k] = s * std::cos(params[k]);
    s *= std::sin(params[k]);
  }
  c[max_n] = s;
  for (int k = 1; k <= max_n; ++k) c[k] *= std::polar(1.0, params[max_n + k - 1]);
  // Fix the global phase so c_0 >= 0.
  if (std::abs(c[0]) > 0.0) {
    const Complex g = std::conj(c[0]) / std::abs(c[0]);
    for (auto &v : c) v *= g;
  }
  return c;
}

} // namespace detail

/// Coefficients of sum_{k<=M} c_k |k> minimizing the NLSQ ratio, optionally
/// after loss. Multi-start Nelder-Mead over hyperspherical angles followed by
/// a polish from the best start. Deterministic for a fixed seed.
inline CoefficientOptimum optimize_coefficients(int max_photons, double kappa = 1.0, int order = 3,
                                                std::optional<double> loss = std::nullopt,
                                                const CoefficientSearchOptions &opt = {}) {
  if (max_photons < 0) throw InvalidInput("optimize_coefficients: M must be >= 0");
  if (loss && !(*loss >= 0.0 && *loss <= 1.0))
    throw InvalidInput("optimize_coefficients: loss must lie in [0, 1]");
  if (opt.starts < 1) throw InvalidInput("optimize_coefficients: need at least one start");
  const int dim = max_photons + 1;
  const double vac = vacuum_optimum(kappa, order).variance;

  auto state_of = [&](const std::vector<Complex> &c) {
    auto s = make_superposition(std::span<const Complex>(c), dim);
    return loss ? apply_loss(s, *loss) : s;
  };

  if (max_photons == 0) {
    std::vector<Complex> c{1.0};
    return {c, optimal_nonlinear_variance(state_of(c), kappa, order)};
  }

  const int n_params = 2 * max_photons;
  auto objective = [&](const std::vector<double> &params) {
    const auto c = detail::coefficients_from_angles(params, max_photons);
    try {
      const auto m = nonlinear_moments(state_of(c), order);
      return minimize_over_lambda(m, kappa).variance / vac;
    } catch (const NumericalError &) {
      return std::numeric_limits<double>::infinity();
    }
  };

  NelderMeadOptions nm;
  nm.initial_step = 0.3;
  nm.f_tol = 1e-13;
  nm.x_tol = 1e-8;
  nm.max_evals = 4000;

  Rng rng(derive_seed(opt.seed, 0));
  NelderMeadResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (int s = 0; s < opt.starts; ++s) {
    std::vector<double> start(n_params);
    for (int k = 0; k < max_photons; ++k) start[k] = uniform01(rng) * std::numbers::pi / 2.0;
    for (int k = max_photons; k < n_params; ++k) start[k] = uniform01(rng) * 2.0 * std::numbers::pi;
    auto r = nelder_mead(objective, start, nm);
    if (r.value < best.value) best = std::move(r);
  }
  nm.initial_step = 0.01;
  nm.max_evals = 20000;
  auto polished = nelder_mead(objective, best.x, nm);
  if (polished.value <= best.value) best = std::move(polished);
  if (!std::isfinite(best.value))
    throw NumericalError("optimize_coefficients: no start produced a finite objective");

  auto c = detail::coefficients_from_angles(best.x, max_photons);
  return {c, optimal_nonlinear_variance(state_of(c), kappa, order)};
}

} // namespace cvq

#endif // CVQ_NONLINEAR_SQUEEZING_HPP
