#ifndef CVQ_TOMOGRAPHY_HPP
#define CVQ_TOMOGRAPHY_HPP

// Homodyne quadrature statistics of Fock-basis states and iterative
// maximum-likelihood (R rho R) reconstruction from phase-tagged samples.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fock.hpp"
#include "nonlinear_squeezing.hpp"
#include "random.hpp"

namespace cvq {

/// psi_0(x) .. psi_{n_max}(x): harmonic-oscillator eigenfunctions for
/// vacuum variance 1/2, by the stable three-term recurrence.
inline void oscillator_wavefunctions(double x, int n_max, std::span<double> out) {
  out[0] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x * x);
  if (n_max >= 1) out[1] = std::sqrt(2.0) * x * out[0];
  for (int n = 1; n < n_max; ++n)
    out[n + 1] = std::sqrt(2.0 / (n + 1)) * x * out[n] - std::sqrt(static_cast<double>(n) / (n + 1)) * out[n - 1];
}

inline std::vector<double> oscillator_wavefunctions(double x, int n_max) {
  std::vector<double> v(n_max + 1);
  oscillator_wavefunctions(x, n_max, v);
  return v;
}

namespace detail {

/// rho rotated into the frame of the phase-theta quadrature, U^dag rho U with
/// U = diag(e^{i n theta}); its diagonal-in-x density is then the x density.
inline CMatrix rotate_to_phase(const CMatrix &rho, double theta) {
  const int d = static_cast<int>(rho.rows());
  CMatrix r(d, d);
  for (int m = 0; m < d; ++m)
    for (int n = 0; n < d; ++n) r(m, n) = rho(m, n) * std::polar(1.0, (n - m) * theta);
  return r;
}

inline double density_in_frame(const CMatrix &rotated, double x, std::vector<double> &psi) {
  const int d = static_cast<int>(rotated.rows());
  oscillator_wavefunctions(x, d - 1, psi);
  double acc = 0.0;
  for (int m = 0; m < d; ++m) {
    acc += rotated(m, m).real() * psi[m] * psi[m];
    for (int n = m + 1; n < d; ++n) acc += 2.0 * rotated(m, n).real() * psi[m] * psi[n];
  }
  return acc;
}

} // namespace detail

/// Density of the quadrature x cos(theta) + p sin(theta):
///   pr(x|theta) = sum_{mn} rho_{mn} e^{-i(m-n) theta} psi_m(x) psi_n(x).
inline double quadrature_pdf(const QuantumState &state, double phase, double x) {
  std::vector<double> psi(state.dim());
  return std::max(0.0, detail::density_in_frame(detail::rotate_to_phase(state.matrix(), phase), x, psi));
}

/// Inverse-CDF sampler for one (state, phase) pair on a fine tabulation.
class QuadratureSampler {
public:
  QuadratureSampler(const QuantumState &state, double phase, int intervals = 16384) {
    const double half_width = std::sqrt(2.0 * state.dim() + 1.0) + 7.0;
    xs_ = linspace(-half_width, half_width, static_cast<std::size_t>(intervals) + 1);
    const CMatrix rotated = detail::rotate_to_phase(state.matrix(), phase);
    std::vector<double> psi(state.dim());
    std::vector<double> pdf(xs_.size());
    for (std::size_t i = 0; i < xs_.size(); ++i)
      pdf[i] = std::max(0.0, detail::density_in_frame(rotated, xs_[i], psi));
    cdf_.assign(xs_.size(), 0.0);
    for (std::size_t i = 1; i < xs_.size(); ++i)
      cdf_[i] = cdf_[i - 1] + 0.5 * (pdf[i] + pdf[i - 1]) * (xs_[i] - xs_[i - 1]);
    const double total = cdf_.back();
    if (!(total > 0.0)) throw NumericalError("QuadratureSampler: density integrates to zero");
    for (auto &c : cdf_) c /= total;
  }

  double draw(Rng &rng) const {
    const double u = uniform01(rng);
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.begin()) return xs_.front();
    if (it == cdf_.end()) return xs_.back();
    const auto i = static_cast<std::size_t>(it - cdf_.begin());
    const double c0 = cdf_[i - 1], c1 = cdf_[i];
    const double t = c1 > c0 ? (u - c0) / (c1 - c0) : 0.5;
    return xs_[i - 1] + t * (xs_[i] - xs_[i - 1]);
  }

private:
  std::vector<double> xs_;
  std::vector<double> cdf_;
};

struct QuadratureRecord {
  double phase = 0.0;  // radians, folded into [0, pi)
  double value = 0.0;
};

struct TomographyDataset {
  std::vector<QuadratureRecord> records;
  std::uint64_t seed = 0;
  std::string source;
};

/// Maps (phase, x) onto [0, pi): a quadrature at theta + pi is -x at theta.
inline QuadratureRecord fold_record(double phase, double value) {
  const double pi = std::numbers::pi;
  double ph = std::fmod(phase, 2.0 * pi);
  if (ph < 0.0) ph += 2.0 * pi;
  if (ph >= pi) {
    ph -= pi;
    value = -value;
  }
  if (ph >= pi) ph = 0.0;
  return {ph, value};
}

inline std::vector<double> default_phases() {
  std::vector<double> v;
  for (int k = 0; k < 6; ++k) v.push_back(k * std::numbers::pi / 6.0);
  return v;
}

inline constexpr int kDefaultSamplesPerPhase = 21000;

/// n_per_phase records for every phase; phase k uses its own RNG stream
/// derived from the seed.
inline TomographyDataset sample(const QuantumState &state, const std::vector<double> &phases,
                                int n_per_phase, std::uint64_t seed) {
  if (n_per_phase < 1) throw InvalidInput("sample: n_per_phase must be >= 1");
  if (phases.empty()) throw InvalidInput("sample: no phases given");
  TomographyDataset data;
  data.seed = seed;
  data.source = "simulated";
  data.records.resize(phases.size() * static_cast<std::size_t>(n_per_phase));
  parallel_for(phases.size(), [&](std::size_t k) {
    const QuadratureSampler sampler(state, phases[k]);
    Rng rng = make_rng(seed, k);
    for (int i = 0; i < n_per_phase; ++i)
      data.records[k * n_per_phase + i] = fold_record(phases[k], sampler.draw(rng));
  });
  return data;
}

struct MleOptions {
  int bins = 256;
  double x_min = -6.0;
  double x_max = 6.0;
  int subdivisions = 8;
  double probability_floor = 1e-12;
  double tol = 1e-9;
  int max_iters = 2000;
};

/// Phase-grouped histogram of a dataset on the MLE quadrature bins.
struct BinnedData {
  std::vector<double> phases;
  std::vector<std::vector<double>> counts;  // [phase][bin]
  std::size_t dropped = 0;
  double total = 0.0;
};

namespace detail {

inline int bin_index(double x, const MleOptions &opt) {
  if (!(x >= opt.x_min && x < opt.x_max)) return -1;
  const int b = static_cast<int>((x - opt.x_min) / (opt.x_max - opt.x_min) * opt.bins);
  return std::min(b, opt.bins - 1);
}

/// Distinct phases in ascending order and the phase slot of each record.
inline std::vector<double> phase_slots(const TomographyDataset &data, std::vector<int> &slot) {
  std::map<double, int> index;
  for (const auto &r : data.records) index.emplace(r.phase, 0);
  std::vector<double> phases;
  for (auto &[ph, i] : index) {
    i = static_cast<int>(phases.size());
    phases.push_back(ph);
  }
  slot.resize(data.records.size());
  for (std::size_t i = 0; i < data.records.size(); ++i) slot[i] = index.at(data.records[i].phase);
  return phases;
}

} // namespace detail

inline BinnedData bin_dataset(const TomographyDataset &data, const MleOptions &opt = {}) {
  BinnedData b;
  std::vector<int> slot;
  b.phases = detail::phase_slots(data, slot);
  b.counts.assign(b.phases.size(), std::vector<double>(opt.bins, 0.0));
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const int bin = detail::bin_index(data.records[i].value, opt);
    if (bin < 0) {
      ++b.dropped;
      continue;
    }
    b.counts[slot[i]][bin] += 1.0;
    b.total += 1.0;
  }
  return b;
}

/// Bin-integrated kernels K_b(m,n) = int_bin psi_m psi_n dx (midpoint rule).
inline std::vector<Eigen::MatrixXd> bin_kernels(int dim, const MleOptions &opt = {}) {
  std::vector<Eigen::MatrixXd> k(opt.bins, Eigen::MatrixXd::Zero(dim, dim));
  const double width = (opt.x_max - opt.x_min) / opt.bins;
  const double h = width / opt.subdivisions;
  std::vector<double> psi(dim);
  for (int b = 0; b < opt.bins; ++b) {
    for (int s = 0; s < opt.subdivisions; ++s) {
      const double x = opt.x_min + b * width + (s + 0.5) * h;
      oscillator_wavefunctions(x, dim - 1, psi);
      for (int m = 0; m < dim; ++m)
        for (int n = 0; n < dim; ++n) k[b](m, n) += psi[m] * psi[n] * h;
    }
  }
  return k;
}

struct MleResult {
  QuantumState state = vacuum(1);
  int iterations = 0;
  double loglik = 0.0;
  std::vector<double> loglik_history;
  bool converged = false;
  std::vector<std::string> warnings;
};

/// Binned-likelihood model shared by reconstruction and bootstrap.
class HomodyneLikelihood {
public:
  HomodyneLikelihood(std::vector<double> phases, int dim, const MleOptions &opt)
      : phases_(std::move(phases)), dim_(dim), opt_(opt), kernels_(bin_kernels(dim, opt)) {}

  int dim() const { return dim_; }

  /// Bin probabilities pr[phase][bin] under rho.
  std::vector<std::vector<double>> probabilities(const CMatrix &rho) const {
    std::vector<std::vector<double>> pr(phases_.size(), std::vector<double>(opt_.bins));
    for (std::size_t k = 0; k < phases_.size(); ++k) {
      const Eigen::MatrixXd rr = detail::rotate_to_phase(rho, phases_[k]).real();
      for (int b = 0; b < opt_.bins; ++b) pr[k][b] = (rr.array() * kernels_[b].array()).sum();
    }
    return pr;
  }

  double loglik(const std::vector<std::vector<double>> &counts,
                const std::vector<std::vector<double>> &pr) const {
    double l = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k)
      for (int b = 0; b < opt_.bins; ++b)
        if (counts[k][b] > 0.0) l += counts[k][b] * std::log(std::max(pr[k][b], opt_.probability_floor));
    return l;
  }

  /// R(rho) = sum_j (f_j / pr_j) Pi_j with f_j the relative frequencies.
  CMatrix r_operator(const std::vector<std::vector<double>> &counts,
                     const std::vector<std::vector<double>> &pr, double total) const {
    CMatrix r = CMatrix::Zero(dim_, dim_);
    for (std::size_t k = 0; k < phases_.size(); ++k) {
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(dim_, dim_);
      for (int b = 0; b < opt_.bins; ++b)
        if (counts[k][b] > 0.0)
          acc += (counts[k][b] / total / std::max(pr[k][b], opt_.probability_floor)) * kernels_[b];
      // Back to the number basis: U acc U^dag.
      for (int m = 0; m < dim_; ++m)
        for (int n = 0; n < dim_; ++n) r(m, n) += acc(m, n) * std::polar(1.0, (m - n) * phases_[k]);
    }
    return r;
  }

private:
  std::vector<double> phases_;
  int dim_;
  MleOptions opt_;
  std::vector<Eigen::MatrixXd> kernels_;
};

namespace detail {

inline MleResult run_rrhor(const HomodyneLikelihood &model, const BinnedData &data, CMatrix rho,
                           const MleOptions &opt) {
  MleResult res;
  const int d = model.dim();
  const CMatrix id = CMatrix::Identity(d, d);
  auto pr = model.probabilities(rho);
  double ll = model.loglik(data.counts, pr);
  res.loglik_history.push_back(ll);
  for (int it = 1; it <= opt.max_iters; ++it) {
    const CMatrix r = model.r_operator(data.counts, pr, data.total);
    // Plain R rho R first; if the likelihood drops, fall back to the diluted
    // map (I + eps R) rho (I + eps R), which increases it for small eps.
    double eps = std::numeric_limits<double>::infinity();
    bool improved = false;
    CMatrix next;
    std::vector<std::vector<double>> next_pr;
    double next_ll = ll;
    for (int attempt = 0; attempt < 40; ++attempt) {
      const CMatrix step = std::isinf(eps) ? r : CMatrix(id + eps * r);
      next = step * rho * step.adjoint();
      next = 0.5 * (next + next.adjoint());
      next /= next.trace().real();
      next_pr = model.probabilities(next);
      next_ll = model.loglik(data.counts, next_pr);
      if (next_ll >= ll) {
        improved = true;
        break;
      }
      eps = std::isinf(eps) ? 1.0 : 0.5 * eps;
    }
    res.iterations = it;
    if (!improved) {
      res.converged = true;
      break;
    }
    const double gain = next_ll - ll;
    rho = std::move(next);
    pr = std::move(next_pr);
    ll = next_ll;
    res.loglik_history.push_back(ll);
    if (gain <= opt.tol * std::abs(ll)) {
      res.converged = true;
      break;
    }
  }
  res.loglik = ll;
  res.state = QuantumState::normalized(std::move(rho));
  if (!res.converged) res.warnings.push_back("max_iters reached before the likelihood converged");
  if (data.dropped > 0)
    res.warnings.push_back(std::to_string(data.dropped) + " records outside the binning range were ignored");
  return res;
}

} // namespace detail

/// Iterative maximum-likelihood reconstruction on the given cutoff.
inline MleResult mle_reconstruct(const TomographyDataset &data, int dim = 5, const MleOptions &opt = {}) {
  if (dim < 2) throw DimensionError("mle_reconstruct: dim must be >= 2");
  if (data.records.empty()) throw InvalidInput("mle_reconstruct: empty dataset");
  const BinnedData binned = bin_dataset(data, opt);
  if (binned.total <= 0.0) throw InvalidInput("mle_reconstruct: no records inside the binning range");
  const HomodyneLikelihood model(binned.phases, dim, opt);
  return detail::run_rrhor(model, binned, CMatrix::Identity(dim, dim) / dim, opt);
}

inline MleResult mle_reconstruct(const TomographyDataset &data, int dim, int max_iters, double tol) {
  MleOptions opt;
  opt.max_iters = max_iters;
  opt.tol = tol;
  return mle_reconstruct(data, dim, opt);
}

struct BootstrapResult {
  int resamples = 0;
  double nlsq_db = 0.0;     // point estimate on the full data
  double nlsq_db_se = 0.0;  // standard deviation across resamples
  Eigen::MatrixXd rho_re_se;
  Eigen::MatrixXd rho_im_se;
};

/// Nonparametric bootstrap, resampling records with replacement within each
/// phase. Each resample is reconstructed warm-started from the full-data
/// estimate.
inline BootstrapResult bootstrap_error(const TomographyDataset &data, int dim, int n_resamples,
                                       std::uint64_t seed, const MleOptions &opt = {}) {
  if (n_resamples < 2) throw InvalidInput("bootstrap_error: n_resamples must be >= 2");
  if (data.records.empty()) throw InvalidInput("bootstrap_error: empty dataset");
  const MleResult full = mle_reconstruct(data, dim, opt);

  std::vector<int> slot;
  const auto phases = detail::phase_slots(data, slot);
  std::vector<std::vector<int>> bins_by_phase(phases.size());
  for (std::size_t i = 0; i < data.records.size(); ++i)
    bins_by_phase[slot[i]].push_back(detail::bin_index(data.records[i].value, opt));
  const HomodyneLikelihood model(phases, dim, opt);

  std::vector<double> dbs(n_resamples);
  std::vector<CMatrix> rhos(n_resamples);
  parallel_for(static_cast<std::size_t>(n_resamples), [&](std::size_t s) {
    Rng rng = make_rng(seed, s);
    BinnedData b;
    b.phases = phases;
    b.counts.assign(phases.size(), std::vector<double>(opt.bins, 0.0));
    for (std::size_t k = 0; k < phases.size(); ++k) {
      const auto &pool = bins_by_phase[k];
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      for (std::size_t i = 0; i < pool.size(); ++i) {
        const int bin = pool[pick(rng)];
        if (bin < 0) {
          ++b.dropped;
          continue;
        }
        b.counts[k][bin] += 1.0;
        b.total += 1.0;
      }
    }
    const auto r = detail::run_rrhor(model, b, full.state.matrix(), opt);
    rhos[s] = r.state.matrix();
    dbs[s] = nlsq_db(r.state);
  });

  auto stddev = [](const std::vector<double> &v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / (v.size() - 1));
  };

  BootstrapResult out;
  out.resamples = n_resamples;
  out.nlsq_db = nlsq_db(full.state);
  out.nlsq_db_se = stddev(dbs);
  out.rho_re_se = Eigen::MatrixXd::Zero(dim, dim);
  out.rho_im_se = Eigen::MatrixXd::Zero(dim, dim);
  std::vector<double> re(n_resamples), im(n_resamples);
  for (int m = 0; m < dim; ++m)
    for (int n = 0; n < dim; ++n) {
      for (int s = 0; s < n_resamples; ++s) {
        re[s] = rhos[s](m, n).real();
        im[s] = rhos[s](m, n).imag();
      }
      out.rho_re_se(m, n) = stddev(re);
      out.rho_im_se(m, n) = stddev(im);
    }
  return out;
}

} // namespace cvq

#endif // CVQ_TOMOGRAPHY_HPP
