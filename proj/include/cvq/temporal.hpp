#ifndef CVQ_TEMPORAL_HPP
#define CVQ_TEMPORAL_HPP

// Temporal wave packets of the heralded signal, matched low-pass filters,
// simulated continuous homodyne traces and principal-component mode
// estimation. Times in seconds, decay rates in rad/s.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <sstream>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "errors.hpp"
#include "fock.hpp"
#include "optimize.hpp"
#include "random.hpp"
#include "tomography.hpp"

namespace cvq {

/// Uniform time lattice t_i = t_start + i dt.
struct TimeGrid {
  double t_start = 0.0;
  double dt = 0.0;
  std::size_t n = 0;

  double time(std::size_t i) const { return t_start + static_cast<double>(i) * dt; }
  double t_end() const { return time(n - 1); }

  /// Last index with t_i <= t (clamped to the grid).
  std::size_t last_index_at_or_before(double t) const {
    const double f = std::floor((t - t_start) / dt + 1e-9);
    if (f < 0.0) return 0;
    return std::min(n - 1, static_cast<std::size_t>(f));
  }

  bool operator==(const TimeGrid &o) const {
    return n == o.n && std::abs(dt - o.dt) <= 1e-12 * std::abs(dt) &&
           std::abs(t_start - o.t_start) <= 1e-9 * std::abs(dt);
  }

  void validate() const {
    if (n < 2 || !(dt > 0.0) || !std::isfinite(t_start))
      throw InvalidInput("TimeGrid: need n >= 2 and dt > 0");
  }
};

inline constexpr double kDefaultDt = 0.2e-9;       // 5 GS/s
inline constexpr double kDefaultFrame = 200e-9;

/// n = frame/dt + 1 samples centered on t = 0 (the herald time).
inline TimeGrid centered_grid(double dt = kDefaultDt, double frame = kDefaultFrame) {
  if (!(dt > 0.0) || !(frame > dt)) throw InvalidInput("centered_grid: need 0 < dt < frame");
  const auto half = static_cast<std::size_t>(std::llround(frame / dt / 2.0));
  TimeGrid g{-static_cast<double>(half) * dt, dt, 2 * half + 1};
  return g;
}

/// Linewidth convention: the field amplitude decays at gamma/2 = 2 pi HWHM.
inline double gamma_from_hwhm(double hwhm_hz) { return 4.0 * std::numbers::pi * hwhm_hz; }

inline constexpr std::array<double, 3> kOpoHwhmHz{33.7e6, 140.1e6, 90.9e6};

inline std::array<double, 3> opo_gammas() {
  return {gamma_from_hwhm(kOpoHwhmHz[0]), gamma_from_hwhm(kOpoHwhmHz[1]),
          gamma_from_hwhm(kOpoHwhmHz[2])};
}

/// Unit-norm real wave packet on a grid: sum samples^2 dt = 1.
struct TemporalMode {
  std::vector<double> decay_rates;
  std::vector<double> weights;
  double t0 = 0.0;
  TimeGrid grid;
  std::vector<double> samples;

  double norm_squared() const {
    double s = 0.0;
    for (double v : samples) s += v * v;
    return s * grid.dt;
  }

  void normalize() {
    const double n = std::sqrt(norm_squared());
    if (!(n > 0.0)) throw InvalidInput("TemporalMode: zero mode");
    for (auto &v : samples) v /= n;
  }
};

namespace detail {

/// sum_n w_n exp(-g_n (t0 - t)/2) for t <= t0, zero after.
inline std::vector<double> one_sided_exponentials(const std::vector<double> &gammas,
                                                  const std::vector<double> &weights, double t0,
                                                  const TimeGrid &grid) {
  std::vector<double> s(grid.n, 0.0);
  for (std::size_t i = 0; i < grid.n; ++i) {
    const double t = grid.time(i);
    if (t > t0 + 1e-9 * grid.dt) continue;
    const double tau = std::max(0.0, t0 - t);
    double v = 0.0;
    for (std::size_t k = 0; k < gammas.size(); ++k) v += weights[k] * std::exp(-0.5 * gammas[k] * tau);
    s[i] = v;
  }
  return s;
}

} // namespace detail

/// Normalized exp(-gamma |t - t0| / 2) Theta(t0 - t). Throws when the grid
/// before t0 captures less than 0.999 of the analytic norm.
inline TemporalMode single_pole_mode(double gamma, double t0, const TimeGrid &grid) {
  grid.validate();
  if (!(gamma > 0.0)) throw InvalidInput("single_pole_mode: gamma must be > 0");
  if (t0 < grid.t_start || t0 > grid.t_end()) throw InvalidInput("single_pole_mode: t0 outside grid");
  const double span = t0 - grid.t_start;
  const double captured = 1.0 - std::exp(-gamma * span);
  if (captured < 0.999) {
    std::ostringstream msg;
    msg << "single_pole_mode: grid covers " << span << " s before t0 but 1/gamma = " << 1.0 / gamma
        << " s; captured norm fraction " << captured << " < 0.999";
    throw InvalidInput(msg.str());
  }
  TemporalMode m;
  m.decay_rates = {gamma};
  m.weights = {1.0};
  m.t0 = t0;
  m.grid = grid;
  m.samples = detail::one_sided_exponentials(m.decay_rates, m.weights, t0, grid);
  m.normalize();
  return m;
}

/// c_1 = 1/((g2 - g1)(g3 - g1)) and cyclic permutations.
inline std::array<double, 3> composite_weights(const std::array<double, 3> &g) {
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      if (std::abs(g[i] - g[j]) <= 1e-12 * std::max(std::abs(g[i]), std::abs(g[j])))
        throw InvalidInput("composite_mode: repeated decay rates (degenerate poles are not supported)");
  std::array<double, 3> c{};
  for (int k = 0; k < 3; ++k) c[k] = 1.0 / ((g[(k + 1) % 3] - g[k]) * (g[(k + 2) % 3] - g[k]));
  return c;
}

/// Wave packet after the OPO and two Lorentzian filter cavities.
inline TemporalMode composite_mode(const std::array<double, 3> &gammas, double t0, const TimeGrid &grid) {
  grid.validate();
  for (double g : gammas)
    if (!(g > 0.0)) throw InvalidInput("composite_mode: decay rates must be > 0");
  if (t0 < grid.t_start || t0 > grid.t_end()) throw InvalidInput("composite_mode: t0 outside grid");
  const auto c = composite_weights(gammas);
  TemporalMode m;
  m.decay_rates.assign(gammas.begin(), gammas.end());
  m.weights.assign(c.begin(), c.end());
  m.t0 = t0;
  m.grid = grid;
  m.samples = detail::one_sided_exponentials(m.decay_rates, m.weights, t0, grid);
  m.normalize();
  return m;
}

inline TemporalMode opo_composite_mode(const TimeGrid &grid = centered_grid(), double t0 = 0.0) {
  return composite_mode(opo_gammas(), t0, grid);
}

/// Normalized inner product <a|b> (amplitude, may be negative).
inline double mode_inner(const TemporalMode &a, const TemporalMode &b) {
  if (!(a.grid == b.grid) || a.samples.size() != b.samples.size())
    throw DimensionError("mode_overlap: modes live on different grids");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    ab += a.samples[i] * b.samples[i];
    aa += a.samples[i] * a.samples[i];
    bb += b.samples[i] * b.samples[i];
  }
  if (!(aa > 0.0 && bb > 0.0)) throw InvalidInput("mode_overlap: zero mode");
  return ab / std::sqrt(aa * bb);
}

/// |<a|b>|^2 for normalized modes.
inline double mode_overlap(const TemporalMode &a, const TemporalMode &b) {
  const double s = mode_inner(a, b);
  return std::min(1.0, s * s);
}

/// Third-order low-pass filter with real poles (rad/s) and its time-reversed
/// impulse response, i.e. the weighting applied when sampling at t0.
struct MatchedFilter {
  std::array<double, 3> poles{};
  TemporalMode response;
  double overlap = 0.0;
};

/// Impulse response of three cascaded first-order sections, sampled as the
/// weighting h(t0 - t) on the grid. Uses the state-space form (e1' exp(A tau)
/// e3 with bidiagonal A), which stays exact for coincident poles.
inline TemporalMode filter_weighting(const std::array<double, 3> &poles, double t0, const TimeGrid &grid) {
  grid.validate();
  for (double p : poles)
    if (!(p > 0.0) || !std::isfinite(p)) throw InvalidInput("filter_weighting: poles must be > 0");
  const double scale = std::max({poles[0], poles[1], poles[2]});
  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  for (int k = 0; k < 3; ++k) a(k, k) = -poles[k] / scale;
  a(0, 1) = 1.0;
  a(1, 2) = 1.0;
  // Work in the dimensionless time s = scale * tau.
  const std::size_t i0 = grid.last_index_at_or_before(t0);
  const double tau_min = t0 - grid.time(i0);
  Eigen::Matrix3d m = (a * (tau_min * scale)).exp();
  const Eigen::Matrix3d step = (a * (grid.dt * scale)).exp();
  TemporalMode out;
  out.decay_rates.assign(poles.begin(), poles.end());
  out.weights = {};
  out.t0 = t0;
  out.grid = grid;
  out.samples.assign(grid.n, 0.0);
  for (std::size_t k = 0; k <= i0; ++k) {
    out.samples[i0 - k] = m(0, 2);
    m = m * step;
  }
  out.normalize();
  return out;
}

/// Poles of a third-order filter whose weighting best overlaps the target.
/// Nelder-Mead over log pole frequencies from several starts scaled to the
/// target's width; poles are confined to [1/span, 2/dt].
inline MatchedFilter design_matched_filter(const TemporalMode &target, int order = 3) {
  if (order != 3) throw InvalidInput("design_matched_filter: only third-order filters are supported");
  const TimeGrid &g = target.grid;
  g.validate();
  for (std::size_t i = 0; i < g.n; ++i)
    if (g.time(i) > target.t0 + 1e-9 * g.dt && target.samples[i] != 0.0)
      throw InvalidInput("design_matched_filter: target must be causal (zero after t0)");

  double w = 0.0, wt = 0.0;
  for (std::size_t i = 0; i < g.n; ++i) {
    const double p = target.samples[i] * target.samples[i];
    w += p;
    wt += p * std::max(0.0, target.t0 - g.time(i));
  }
  const double mean_tau = std::max(wt / w, g.dt);
  const double a_est = 1.0 / (2.0 * mean_tau);
  const double lo = std::log(1.0 / std::max(target.t0 - g.t_start, g.dt));
  const double hi = std::log(2.0 / g.dt);

  auto poles_of = [&](const std::vector<double> &u) {
    std::array<double, 3> p{};
    for (int k = 0; k < 3; ++k) p[k] = std::exp(std::clamp(u[k], lo, hi));
    return p;
  };
  auto objective = [&](const std::vector<double> &u) {
    const auto p = poles_of(u);
    return -mode_overlap(filter_weighting(p, target.t0, g), target);
  };

  const std::array<std::array<double, 3>, 4> seeds{{{1.0, 2.0, 4.0}, {1.5, 4.0, 10.0}, {0.8, 3.0, 30.0},
                                                    {2.0, 2.5, 3.0}}};
  NelderMeadOptions nm;
  nm.initial_step = 0.4;
  nm.f_tol = 1e-12;
  nm.x_tol = 1e-7;
  nm.max_evals = 3000;
  NelderMeadResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (const auto &s : seeds) {
    std::vector<double> u(3);
    for (int k = 0; k < 3; ++k) u[k] = std::clamp(std::log(a_est * s[k]), lo, hi);
    auto r = nelder_mead(objective, u, nm);
    if (r.value < best.value) best = std::move(r);
  }
  nm.initial_step = 0.05;
  auto polished = nelder_mead(objective, best.x, nm);
  if (polished.value <= best.value) best = std::move(polished);
  if (!std::isfinite(best.value)) throw NumericalError("design_matched_filter: optimizer failed");

  MatchedFilter f;
  f.poles = poles_of(best.x);
  std::sort(f.poles.begin(), f.poles.end());
  f.response = filter_weighting(f.poles, target.t0, g);
  f.overlap = mode_overlap(f.response, target);
  return f;
}

/// Simulated homodyne records: one row per heralding event.
struct TraceSet {
  TimeGrid grid;
  std::size_t n_events = 0;
  std::vector<float> samples;   // row-major n_events x grid.n
  std::vector<double> phases;   // LO phase per event, radians

  std::span<const float> trace(std::size_t e) const {
    return {samples.data() + e * grid.n, grid.n};
  }
};

namespace detail {

inline void require_unit_mode(const TemporalMode &f) {
  if (f.samples.size() != f.grid.n) throw DimensionError("trace simulation: mode/grid size mismatch");
  if (std::abs(f.norm_squared() - 1.0) > 1e-9) throw InvalidInput("trace simulation: mode is not normalized");
}

/// One event: q f(t) plus white vacuum noise with the f component removed,
/// so integrating against f returns q exactly. Noise variance per bin is
/// 1/(2 dt), i.e. 1/2 per unit-norm mode.
inline void simulate_event(const TemporalMode &f, double q, Rng &rng, std::vector<double> &out) {
  const std::size_t n = f.grid.n;
  const double dt = f.grid.dt;
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5 / dt));
  out.resize(n);
  double proj = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = gauss(rng);
    proj += out[i] * f.samples[i];
  }
  proj *= dt;
  for (std::size_t i = 0; i < n; ++i) out[i] += (q - proj) * f.samples[i];
}

inline std::map<double, QuadratureSampler> samplers_for(const QuantumState &state,
                                                        const std::vector<double> &phases) {
  std::map<double, QuadratureSampler> m;
  for (double ph : phases)
    if (!m.contains(ph)) m.emplace(ph, QuadratureSampler(state, ph));
  return m;
}

} // namespace detail

/// n_events traces of `state` in mode f; event i uses LO phase
/// phases[i % phases.size()] and its own RNG stream derived from the seed.
inline TraceSet simulate_traces(const QuantumState &state, const TemporalMode &f, std::size_t n_events,
                                const std::vector<double> &phases, std::uint64_t seed) {
  detail::require_unit_mode(f);
  if (n_events < 1) throw InvalidInput("simulate_traces: n_events must be >= 1");
  if (phases.empty()) throw InvalidInput("simulate_traces: no LO phases given");
  const auto samplers = detail::samplers_for(state, phases);
  TraceSet ts;
  ts.grid = f.grid;
  ts.n_events = n_events;
  ts.samples.resize(n_events * f.grid.n);
  ts.phases.resize(n_events);
  parallel_for(n_events, [&](std::size_t e) {
    Rng rng = make_rng(seed, e);
    const double phase = phases[e % phases.size()];
    const double q = samplers.at(phase).draw(rng);
    std::vector<double> row;
    detail::simulate_event(f, q, rng, row);
    for (std::size_t i = 0; i < f.grid.n; ++i) ts.samples[e * f.grid.n + i] = static_cast<float>(row[i]);
    ts.phases[e] = phase;
  });
  return ts;
}

/// Integral of a trace against a weighting, sum w_i y_i dt.
template <typename Sample>
double integrate_trace(std::span<const Sample> trace, const TemporalMode &weight) {
  if (trace.size() != weight.samples.size()) throw DimensionError("integrate_trace: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) acc += static_cast<double>(trace[i]) * weight.samples[i];
  return acc * weight.grid.dt;
}

/// Postprocessed quadratures of every trace, as a tomography dataset.
inline TomographyDataset integrate_traces(const TraceSet &ts, const TemporalMode &mode) {
  if (!(ts.grid == mode.grid)) throw DimensionError("integrate_traces: grid mismatch");
  TomographyDataset d;
  d.source = "trace integration";
  d.records.reserve(ts.n_events);
  for (std::size_t e = 0; e < ts.n_events; ++e)
    d.records.push_back(fold_record(ts.phases[e], integrate_trace(ts.trace(e), mode)));
  return d;
}

struct PcaOptions {
  /// Consecutive samples averaged into one PCA bin.
  std::size_t rebin = 5;
  /// Restrict to t <= t0; the heralded packet is one-sided.
  bool causal = true;
  double t0 = 0.0;
  /// Known vacuum variance per unit-norm bin subtracted from the covariance.
  double vacuum_floor = 0.5;
};

struct PcaEstimate {
  TemporalMode mode;
  double leading_eigenvalue = 0.0;
  double second_eigenvalue = 0.0;
  double noise_edge = 0.0;
};

/// Principal temporal mode of the traces: leading eigenvector of the
/// floor-subtracted covariance of (optionally rebinned, causally windowed)
/// traces, interpolated back onto the trace grid with positive peak.
/// Throws NumericalError when no eigenvalue stands out of the sampling-noise
/// bulk (e.g. pure vacuum).
inline PcaEstimate pca_mode_estimate_detailed(const TraceSet &ts, const PcaOptions &opt = {}) {
  const TimeGrid &g = ts.grid;
  g.validate();
  if (opt.rebin < 1) throw InvalidInput("pca_mode_estimate: rebin must be >= 1");
  if (ts.n_events < 2) throw InvalidInput("pca_mode_estimate: need at least two traces");
  const std::size_t last = opt.causal ? g.last_index_at_or_before(opt.t0) : g.n - 1;
  const std::size_t usable = last + 1;
  const std::size_t nb = usable / opt.rebin;
  if (nb < 2) throw InvalidInput("pca_mode_estimate: window too short for the rebin factor");
  const std::size_t first = usable - nb * opt.rebin;  // groups end exactly at `last`
  const double dt_c = g.dt * static_cast<double>(opt.rebin);
  const double scale = std::sqrt(dt_c) / static_cast<double>(opt.rebin);

  Eigen::MatrixXd x(static_cast<Eigen::Index>(ts.n_events), static_cast<Eigen::Index>(nb));
  for (std::size_t e = 0; e < ts.n_events; ++e) {
    const auto tr = ts.trace(e);
    for (std::size_t b = 0; b < nb; ++b) {
      double s = 0.0;
      for (std::size_t k = 0; k < opt.rebin; ++k) s += tr[first + b * opt.rebin + k];
      x(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(b)) = s * scale;
    }
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(ts.n_events - 1);
  cov.diagonal().array() -= opt.vacuum_floor;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const auto &ev = es.eigenvalues();
  const double l1 = ev(ev.size() - 1), l2 = ev(ev.size() - 2);
  const double ratio = static_cast<double>(nb) / static_cast<double>(ts.n_events);
  // Largest eigenvalue of a pure-noise sample covariance, floor removed.
  const double edge = opt.vacuum_floor * (std::pow(1.0 + std::sqrt(ratio), 2) - 1.0);
  if (!(l1 > 1.5 * edge)) {
    std::ostringstream msg;
    msg << "pca_mode_estimate: leading eigenvalue " << l1 << " is inside the noise bulk (edge " << edge
        << "); no preferred mode";
    throw NumericalError(msg.str());
  }
  Eigen::VectorXd v = es.eigenvectors().col(ev.size() - 1);

  // Amplitudes at the bin centers, then linear interpolation/extrapolation.
  std::vector<double> centers(nb), amps(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    centers[b] = g.time(first + b * opt.rebin) + 0.5 * (static_cast<double>(opt.rebin) - 1.0) * g.dt;
    amps[b] = v(static_cast<Eigen::Index>(b));
  }
  TemporalMode m;
  m.t0 = opt.t0;
  m.grid = g;
  m.samples.assign(g.n, 0.0);
  for (std::size_t i = first; i <= last; ++i) {
    const double t = g.time(i);
    std::size_t b = 0;
    if (nb > 1) {
      const double pos = (t - centers[0]) / dt_c;
      b = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0, static_cast<double>(nb - 2)));
    }
    const double frac = (t - centers[b]) / dt_c;
    m.samples[i] = amps[b] + frac * (amps[b + 1] - amps[b]);
  }
  std::size_t peak = 0;
  for (std::size_t i = 0; i < g.n; ++i)
    if (std::abs(m.samples[i]) > std::abs(m.samples[peak])) peak = i;
  if (m.samples[peak] < 0.0)
    for (auto &s : m.samples) s = -s;
  m.normalize();
  return {std::move(m), l1, l2, edge};
}

inline TemporalMode pca_mode_estimate(const TraceSet &ts, const PcaOptions &opt = {}) {
  return pca_mode_estimate_detailed(ts, opt).mode;
}

struct PhaseCorrelation {
  double phase = 0.0;
  std::size_t events = 0;
  double correlation = 0.0;
};

inline double pearson(const std::vector<double> &a, const std::vector<double> &b) {
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

/// Per-phase Pearson correlation between per-event quadrature pairs.
inline std::vector<PhaseCorrelation> correlate_by_phase(const std::vector<double> &phases,
                                                        const std::vector<double> &a,
                                                        const std::vector<double> &b) {
  std::map<double, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    auto &gp = groups[phases[i]];
    gp.first.push_back(a[i]);
    gp.second.push_back(b[i]);
  }
  std::vector<PhaseCorrelation> out;
  for (const auto &[ph, v] : groups) {
    if (v.first.size() < 2) throw InvalidInput("realtime_vs_postprocess: phase bin with fewer than two events");
    out.push_back({ph, v.first.size(), pearson(v.first, v.second)});
  }
  return out;
}

/// Digital postprocessing (integral against the mode) versus the real-time
/// emulation (filter output sampled at t0), correlated per LO phase.
inline std::vector<PhaseCorrelation> realtime_vs_postprocess(const TraceSet &ts, const TemporalMode &filter,
                                                             const TemporalMode &mode) {
  if (!(ts.grid == mode.grid) || !(ts.grid == filter.grid))
    throw DimensionError("realtime_vs_postprocess: filter, mode and traces must share a grid");
  if (ts.n_events == 0) throw InvalidInput("realtime_vs_postprocess: empty phase bin");
  std::vector<double> pp(ts.n_events), rt(ts.n_events);
  for (std::size_t e = 0; e < ts.n_events; ++e) {
    pp[e] = integrate_trace(ts.trace(e), mode);
    rt[e] = integrate_trace(ts.trace(e), filter);
  }
  return correlate_by_phase(ts.phases, pp, rt);
}

/// Both measurement paths for a stream of events without storing traces.
struct DualMeasurement {
  TomographyDataset postprocess;
  TomographyDataset realtime;
  std::vector<PhaseCorrelation> correlations;
};

inline DualMeasurement measure_events(const QuantumState &state, const TemporalMode &mode,
                                      const TemporalMode &filter, const std::vector<double> &phases,
                                      std::size_t n_per_phase, std::uint64_t seed) {
  detail::require_unit_mode(mode);
  if (!(mode.grid == filter.grid)) throw DimensionError("measure_events: filter/mode grid mismatch");
  if (phases.empty() || n_per_phase < 1) throw InvalidInput("measure_events: need phases and events");
  const auto samplers = detail::samplers_for(state, phases);
  const std::size_t n_events = phases.size() * n_per_phase;
  std::vector<double> pp(n_events), rt(n_events), ph(n_events);
  parallel_for(n_events, [&](std::size_t e) {
    Rng rng = make_rng(seed, e);
    const double phase = phases[e % phases.size()];
    const double q = samplers.at(phase).draw(rng);
    std::vector<double> row;
    detail::simulate_event(mode, q, rng, row);
    std::vector<float> stored(row.begin(), row.end());
    pp[e] = integrate_trace(std::span<const float>(stored), mode);
    rt[e] = integrate_trace(std::span<const float>(stored), filter);
    ph[e] = phase;
  });
  DualMeasurement out;
  out.postprocess.seed = out.realtime.seed = seed;
  out.postprocess.source = "postprocess";
  out.realtime.source = "realtime";
  for (std::size_t e = 0; e < n_events; ++e) {
    out.postprocess.records.push_back(fold_record(ph[e], pp[e]));
    out.realtime.records.push_back(fold_record(ph[e], rt[e]));
  }
  out.correlations = correlate_by_phase(ph, pp, rt);
  return out;
}

} // namespace cvq

#endif // CVQ_TEMPORAL_HPP
