#ifndef CVQ_FOCK_HPP
#define CVQ_FOCK_HPP

// Truncated Fock-basis linear algebra. Quadratures follow [x, p] = i with
// vacuum variance 1/2, i.e. x = (a + a^dag)/sqrt(2), p = (a - a^dag)/(i sqrt(2)).

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace cvq {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

struct StateTolerance {
  double hermitian = 1e-12;
  double trace = 1e-12;
  double min_eigenvalue = -1e-10;
};

/// Density matrix on the basis {|0>, ..., |dim-1>}. Immutable; every
/// instance satisfies the Hermitian / unit-trace / PSD invariants.
class QuantumState {
public:
  /// Validates m strictly against the tolerances.
  static QuantumState from_matrix(CMatrix m, const StateTolerance &tol = {}) {
    check(m, tol);
    return QuantumState(std::move(m));
  }

  /// Hermitizes and trace-normalizes m, then validates positivity. For
  /// matrices produced by iterative numerics.
  static QuantumState normalized(CMatrix m, const StateTolerance &tol = {}) {
    if (m.rows() != m.cols() || m.rows() < 1)
      throw DimensionError("QuantumState: matrix must be square and nonempty");
    CMatrix h = 0.5 * (m + m.adjoint());
    const double tr = h.trace().real();
    if (!(tr > 0.0) || !std::isfinite(tr)) throw InvalidInput("QuantumState: nonpositive trace");
    h /= tr;
    check(h, tol);
    return QuantumState(std::move(h));
  }

  static QuantumState pure(const CVector &psi) {
    const double n = psi.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw InvalidInput("QuantumState: zero state vector");
    const CVector v = psi / n;
    CMatrix m = v * v.adjoint();
    m = 0.5 * (m + m.adjoint());
    return from_matrix(std::move(m));
  }

  int dim() const { return static_cast<int>(rho_.rows()); }
  const CMatrix &matrix() const { return rho_; }
  Complex operator()(int row, int col) const { return rho_(row, col); }

  double population(int n) const { return n < dim() ? rho_(n, n).real() : 0.0; }

  /// Same state on a different cutoff. Growing pads with zeros; shrinking
  /// requires the discarded populations to be below 1e-12.
  QuantumState resized(int new_dim) const {
    if (new_dim < 1) throw DimensionError("QuantumState::resized: dim must be >= 1");
    if (new_dim == dim()) return *this;
    if (new_dim > dim()) {
      CMatrix m = CMatrix::Zero(new_dim, new_dim);
      m.topLeftCorner(dim(), dim()) = rho_;
      return QuantumState(std::move(m));
    }
    double dropped = 0.0;
    for (int n = new_dim; n < dim(); ++n) dropped += rho_(n, n).real();
    if (dropped > 1e-12) {
      std::ostringstream msg;
      msg << "QuantumState::resized: truncation to dim " << new_dim << " discards population "
          << dropped;
      throw DimensionError(msg.str());
    }
    return normalized(rho_.topLeftCorner(new_dim, new_dim));
  }

  struct Diagnostics {
    double hermitian_error = 0.0;
    double trace_error = 0.0;
    double min_eigenvalue = 0.0;
  };

  static Diagnostics diagnose(const CMatrix &m) {
    Diagnostics d;
    d.hermitian_error = (m - m.adjoint()).cwiseAbs().maxCoeff();
    d.trace_error = std::abs(m.trace() - Complex(1.0, 0.0));
    const CMatrix h = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
    d.min_eigenvalue = es.eigenvalues().minCoeff();
    return d;
  }

private:
  explicit QuantumState(CMatrix m) : rho_(std::move(m)) {}

  static void check(const CMatrix &m, const StateTolerance &tol) {
    if (m.rows() != m.cols() || m.rows() < 1)
      throw DimensionError("QuantumState: matrix must be square and nonempty");
    if (!m.allFinite()) throw InvalidInput("QuantumState: non-finite entries");
    const auto d = diagnose(m);
    std::ostringstream msg;
    if (d.hermitian_error > tol.hermitian)
      msg << "not Hermitian (max |rho - rho^dag| = " << d.hermitian_error << ")";
    else if (d.trace_error > tol.trace)
      msg << "trace differs from 1 by " << d.trace_error;
    else if (d.min_eigenvalue < tol.min_eigenvalue)
      msg << "not positive semidefinite (min eigenvalue " << d.min_eigenvalue << ")";
    else
      return;
    throw InvalidInput("QuantumState: " + msg.str());
  }

  CMatrix rho_;
};

/// Operator on the truncated Fock space.
class FockOperator {
public:
  explicit FockOperator(CMatrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() < 1)
      throw DimensionError("FockOperator: matrix must be square and nonempty");
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  const CMatrix &matrix() const { return m_; }
  Complex operator()(int row, int col) const { return m_(row, col); }

  FockOperator adjoint() const { return FockOperator(m_.adjoint()); }

  friend FockOperator operator*(const FockOperator &a, const FockOperator &b) {
    same_dim(a, b);
    return FockOperator(a.m_ * b.m_);
  }
  friend FockOperator operator+(const FockOperator &a, const FockOperator &b) {
    same_dim(a, b);
    return FockOperator(a.m_ + b.m_);
  }
  friend FockOperator operator-(const FockOperator &a, const FockOperator &b) {
    same_dim(a, b);
    return FockOperator(a.m_ - b.m_);
  }
  friend FockOperator operator*(Complex s, const FockOperator &a) { return FockOperator(s * a.m_); }
  friend FockOperator operator*(double s, const FockOperator &a) { return FockOperator(s * a.m_); }

  FockOperator pow(int k) const {
    if (k < 0) throw InvalidInput("FockOperator::pow: negative exponent");
    CMatrix r = CMatrix::Identity(dim(), dim());
    for (int i = 0; i < k; ++i) r = r * m_;
    return FockOperator(std::move(r));
  }

private:
  static void same_dim(const FockOperator &a, const FockOperator &b) {
    if (a.dim() != b.dim()) throw DimensionError("FockOperator: dimension mismatch");
  }

  CMatrix m_;
};

inline FockOperator annihilation(int dim) {
  if (dim < 1) throw DimensionError("annihilation: dim must be >= 1");
  CMatrix a = CMatrix::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return FockOperator(std::move(a));
}

inline FockOperator number_operator(int dim) {
  if (dim < 1) throw DimensionError("number_operator: dim must be >= 1");
  CMatrix n = CMatrix::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) n(k, k) = k;
  return FockOperator(std::move(n));
}

struct Quadratures {
  FockOperator x;
  FockOperator p;
};

/// x and p with x_{n,n+1} = sqrt((n+1)/2).
inline Quadratures quadrature_ops(int dim) {
  if (dim < 2) throw DimensionError("quadrature_ops: dim must be >= 2");
  const CMatrix a = annihilation(dim).matrix();
  const CMatrix ad = a.adjoint();
  const double s = 1.0 / std::sqrt(2.0);
  return {FockOperator(s * (a + ad)), FockOperator(Complex(0.0, -s) * (a - ad))};
}

inline QuantumState fock_state(int n, int dim) {
  if (n < 0 || n >= dim) throw DimensionError("fock_state: need 0 <= n < dim");
  CMatrix m = CMatrix::Zero(dim, dim);
  m(n, n) = 1.0;
  return QuantumState::from_matrix(std::move(m));
}

inline QuantumState vacuum(int dim) { return fock_state(0, dim); }

/// |psi><psi| with psi proportional to sum_k c_k |k>.
inline QuantumState make_superposition(std::span<const Complex> coeffs, int dim) {
  if (coeffs.empty()) throw InvalidInput("make_superposition: empty coefficient list");
  if (static_cast<int>(coeffs.size()) > dim)
    throw DimensionError("make_superposition: need dim > M (coefficient count <= dim)");
  CVector psi = CVector::Zero(dim);
  for (std::size_t k = 0; k < coeffs.size(); ++k) psi(static_cast<Eigen::Index>(k)) = coeffs[k];
  if (psi.norm() == 0.0) throw InvalidInput("make_superposition: all coefficients are zero");
  return QuantumState::pure(psi);
}

inline QuantumState make_superposition(std::initializer_list<Complex> coeffs, int dim) {
  return make_superposition(std::span<const Complex>(coeffs.begin(), coeffs.size()), dim);
}

/// Tr(op rho).
inline Complex moment(const QuantumState &state, const FockOperator &op) {
  if (state.dim() != op.dim()) throw DimensionError("moment: dimension mismatch");
  return (op.matrix() * state.matrix()).trace();
}

namespace detail {

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline double int_pow(double base, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

} // namespace detail

/// Pure-loss channel: beamsplitter of transmissivity 1-L with vacuum, the
/// environment traced out. Exact Kraus sum
///   A_k = sum_n sqrt(C(n,k) (1-L)^(n-k) L^k) |n-k><n|,  k = 0..dim-1.
inline QuantumState apply_loss(const QuantumState &state, double loss) {
  if (!(loss >= 0.0 && loss <= 1.0)) throw InvalidInput("apply_loss: loss must lie in [0, 1]");
  const int d = state.dim();
  if (loss == 0.0) return state;
  const double eta = 1.0 - loss;
  CMatrix out = CMatrix::Zero(d, d);
  const CMatrix &rho = state.matrix();
  for (int k = 0; k < d; ++k) {
    CMatrix kraus = CMatrix::Zero(d, d);
    for (int n = k; n < d; ++n) {
      const double w = detail::binomial(n, k) * detail::int_pow(eta, n - k) * detail::int_pow(loss, k);
      kraus(n - k, n) = std::sqrt(w);
    }
    out.noalias() += kraus * rho * kraus.adjoint();
  }
  out = 0.5 * (out + out.adjoint());
  return QuantumState::from_matrix(std::move(out));
}

/// Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2.
inline double fidelity(const QuantumState &a, const QuantumState &b) {
  const int d = std::max(a.dim(), b.dim());
  const CMatrix ra = a.resized(d).matrix();
  const CMatrix rb = b.resized(d).matrix();
  Eigen::SelfAdjointEigenSolver<CMatrix> ea(ra);
  const Eigen::VectorXd la = ea.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const CMatrix sa = ea.eigenvectors() * la.asDiagonal() * ea.eigenvectors().adjoint();
  CMatrix inner = sa * rb * sa;
  inner = 0.5 * (inner + inner.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> ei(inner, Eigen::EigenvaluesOnly);
  const double f = ei.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::min(1.0, f * f);
}

/// Exact matrix element <m|D(beta)|n> of the displacement operator
/// exp(beta a^dag - beta* a), via associated Laguerre polynomials. Independent
/// of any truncation.
inline Complex displacement_element(int m, int n, Complex beta) {
  const bool lower = m >= n;
  const int hi = lower ? m : n, lo = lower ? n : m, k = hi - lo;
  const double y = std::norm(beta);
  // L_lo^{(k)}(y) by three-term recurrence.
  double lag_prev = 1.0, lag = 1.0;
  if (lo >= 1) {
    lag = 1.0 + k - y;
    for (int j = 1; j < lo; ++j) {
      const double next = ((2.0 * j + 1.0 + k - y) * lag - (j + k) * lag_prev) / (j + 1.0);
      lag_prev = lag;
      lag = next;
    }
  }
  if (k > 0 && y == 0.0) return 0.0;
  const double log_mag = 0.5 * (std::lgamma(lo + 1.0) - std::lgamma(hi + 1.0)) +
                         (k > 0 ? k * 0.5 * std::log(y) : 0.0) - 0.5 * y;
  const double arg = k > 0 ? std::arg(lower ? beta : -std::conj(beta)) * k : 0.0;
  return std::polar(std::exp(log_mag), arg) * lag;
}

/// Displacement by beta, evaluated with exact matrix elements on an output
/// cutoff; throws if more than 1e-10 of the population leaves the basis.
inline QuantumState displace(const QuantumState &state, Complex beta, int out_dim) {
  if (out_dim < 1) throw DimensionError("displace: out_dim must be >= 1");
  CMatrix d(out_dim, state.dim());
  for (int m = 0; m < out_dim; ++m)
    for (int n = 0; n < state.dim(); ++n) d(m, n) = displacement_element(m, n, beta);
  CMatrix out = d * state.matrix() * d.adjoint();
  const double kept = out.trace().real();
  if (1.0 - kept > 1e-10) {
    std::ostringstream msg;
    msg << "displace: cutoff " << out_dim << " loses population " << (1.0 - kept);
    throw DimensionError(msg.str());
  }
  return QuantumState::normalized(std::move(out));
}

/// Squeezed vacuum S(r)|0> with Var(x) = e^{-2r}/2, Var(p) = e^{2r}/2,
/// from the closed-form even-photon amplitudes. Throws if the cutoff misses
/// more than 1e-13 of the norm.
inline QuantumState squeezed_vacuum(double r, int dim) {
  if (dim < 1) throw DimensionError("squeezed_vacuum: dim must be >= 1");
  CVector psi = CVector::Zero(dim);
  const double t = -std::tanh(r);
  double amp = 1.0 / std::sqrt(std::cosh(r));
  for (int n = 0; 2 * n < dim; ++n) {
    psi(2 * n) = amp;
    // c_{n+1}/c_n = t sqrt((2n+1)(2n+2)) / (2(n+1))
    amp *= t * std::sqrt((2.0 * n + 1.0) * (2.0 * n + 2.0)) / (2.0 * (n + 1.0));
  }
  const double norm2 = psi.squaredNorm();
  if (1.0 - norm2 > 1e-13) {
    std::ostringstream msg;
    msg << "squeezed_vacuum: cutoff " << dim << " misses norm " << (1.0 - norm2);
    throw DimensionError(msg.str());
  }
  return QuantumState::pure(psi);
}

struct WignerField {
  std::vector<double> xs;
  std::vector<double> ps;
  /// values[ix * ps.size() + ip] = W(xs[ix], ps[ip])
  std::vector<double> values;

  double at(std::size_t ix, std::size_t ip) const { return values[ix * ps.size() + ip]; }
};

namespace detail {

/// Kernel K_{nm}(x,p) = <n| D(2a) P |m> / pi with a = (x + i p)/sqrt(2), so
/// that W = sum_{mn} rho_{mn} K_{nm}. This is the displaced-parity form
/// W(a) = Tr[rho D(a) P D(a)^dag] / pi written with D(a) P D(-a) = D(2a) P.
inline double wigner_point(const CMatrix &rho, double x, double p) {
  const Complex beta = 2.0 * Complex(x, p) / std::sqrt(2.0);
  const int d = static_cast<int>(rho.rows());
  Complex w = 0.0;
  for (int m = 0; m < d; ++m) {
    const double parity = (m % 2 == 0) ? 1.0 : -1.0;
    for (int n = 0; n < d; ++n) {
      if (rho(m, n) == Complex(0.0)) continue;
      w += rho(m, n) * parity * displacement_element(n, m, beta);
    }
  }
  return w.real() / std::numbers::pi;
}

} // namespace detail

inline double wigner_at(const QuantumState &state, double x, double p) {
  return detail::wigner_point(state.matrix(), x, p);
}

inline WignerField wigner(const QuantumState &state, std::vector<double> xs, std::vector<double> ps) {
  if (xs.empty() || ps.empty()) throw InvalidInput("wigner: empty grid");
  for (double v : xs)
    if (!std::isfinite(v)) throw InvalidInput("wigner: non-finite grid coordinate");
  for (double v : ps)
    if (!std::isfinite(v)) throw InvalidInput("wigner: non-finite grid coordinate");
  WignerField f{std::move(xs), std::move(ps), {}};
  f.values.resize(f.xs.size() * f.ps.size());
  for (std::size_t i = 0; i < f.xs.size(); ++i)
    for (std::size_t j = 0; j < f.ps.size(); ++j)
      f.values[i * f.ps.size() + j] = detail::wigner_point(state.matrix(), f.xs[i], f.ps[j]);
  return f;
}

/// n evenly spaced points on [lo, hi].
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  for (std::size_t i = 0; i < n; ++i) v[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  return v;
}

} // namespace cvq

#endif // CVQ_FOCK_HPP
