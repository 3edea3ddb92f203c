#ifndef CVQ_IO_HPP
#define CVQ_IO_HPP

// Artifact formats:
//   density matrix  JSON {"dim", "re", "im"} (row-major)
//   Wigner field    CSV  x,p,w
//   dataset         CSV  phase_deg,quadrature
//   temporal mode   CSV  t_ns,amplitude   (amplitude in ns^-1/2)
//   traces          binary, little endian: u32 n_events, u32 n_bins,
//                   f64 dt_ns, f32 samples[n_events*n_bins], f64 phases[n_events]

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "fock.hpp"
#include "gate.hpp"
#include "nonlinear_squeezing.hpp"
#include "temporal.hpp"
#include "tomography.hpp"

namespace cvq {

using Json = nlohmann::ordered_json;

inline Json to_json(const QuantumState &s) {
  Json j;
  j["dim"] = s.dim();
  Json re = Json::array(), im = Json::array();
  for (int r = 0; r < s.dim(); ++r)
    for (int c = 0; c < s.dim(); ++c) {
      re.push_back(s(r, c).real());
      im.push_back(s(r, c).imag());
    }
  j["re"] = std::move(re);
  j["im"] = std::move(im);
  return j;
}

inline QuantumState state_from_json(const Json &j) {
  try {
    const int dim = j.at("dim").get<int>();
    const auto &re = j.at("re");
    const auto &im = j.at("im");
    if (dim < 1 || re.size() != static_cast<std::size_t>(dim * dim) || im.size() != re.size())
      throw InvalidInput("state JSON: re/im must hold dim*dim entries");
    CMatrix m(dim, dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) m(r, c) = Complex(re[r * dim + c].get<double>(), im[r * dim + c].get<double>());
    return QuantumState::from_matrix(std::move(m), {1e-9, 1e-9, -1e-9});
  } catch (const nlohmann::json::exception &e) {
    throw InvalidInput(std::string("state JSON: ") + e.what());
  }
}

inline Json to_json(const NlsqResult &r) {
  return Json{{"variance_opt", r.variance_opt}, {"lambda_opt", r.lambda_opt}, {"ratio", r.ratio},
              {"db", r.db},                     {"order", r.order},           {"kappa", r.kappa}};
}

inline Json to_json(const GateNoiseReport &r) {
  return Json{{"kappa", r.kappa},
              {"sqz_var", r.sqz_var},
              {"out_mean", {r.mean_x_out, r.mean_p_out}},
              {"out_var", {r.var_x_out, r.var_p_out}},
              {"ideal_var", r.ideal_var},
              {"excess", {{"total", r.excess()}, {"ancilla", r.ancilla_excess}, {"sqz", r.sqz_excess}}}};
}

inline Json to_json(const ModeMoments &m) {
  return Json{{"x", m.x},   {"p", m.p},   {"x2", m.x2},          {"p2", m.p2},
              {"x3", m.x3}, {"x4", m.x4}, {"px2_sym", m.px2_sym}};
}

inline Json mle_report(const MleResult &r) {
  return Json{{"iters", r.iterations}, {"loglik", r.loglik}, {"converged", r.converged}, {"warnings", r.warnings}};
}

inline Json to_json(const std::vector<PhaseCorrelation> &c) {
  Json a = Json::array();
  for (const auto &p : c)
    a.push_back({{"phase_deg", p.phase * 180.0 / std::numbers::pi}, {"events", p.events}, {"correlation", p.correlation}});
  return a;
}

inline std::ofstream open_out(const std::string &path, bool binary = false) {
  std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}

inline std::ifstream open_in(const std::string &path, bool binary = false) {
  std::ifstream f(path, binary ? std::ios::binary : std::ios::in);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  return f;
}

inline void write_json(const std::string &path, const Json &j) {
  auto f = open_out(path);
  f << j.dump(2) << '\n';
  if (!f) throw IoError("write failed: " + path);
}

inline Json read_json(const std::string &path) {
  auto f = open_in(path);
  try {
    return Json::parse(f);
  } catch (const nlohmann::json::exception &e) {
    throw InvalidInput("'" + path + "': " + e.what());
  }
}

namespace detail {

inline std::ostream &full_precision(std::ostream &os) {
  return os << std::setprecision(std::numeric_limits<double>::max_digits10);
}

inline std::vector<std::string> split(const std::string &line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

inline double parse_double(const std::string &s, const std::string &context) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() && s.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception &) {
    throw InvalidInput(context + ": cannot parse number '" + s + "'");
  }
}

/// Reads a two-column CSV with the given header.
inline std::vector<std::pair<double, double>> read_pairs(std::istream &in, const std::string &header,
                                                         const std::string &context) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput(context + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw InvalidInput(context + ": expected header '" + header + "'");
  std::vector<std::pair<double, double>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 2) throw InvalidInput(context + ": expected two columns in '" + line + "'");
    rows.emplace_back(parse_double(f[0], context), parse_double(f[1], context));
  }
  return rows;
}

} // namespace detail

inline void write_wigner_csv(std::ostream &os, const WignerField &w) {
  detail::full_precision(os) << "x,p,w\n";
  for (std::size_t i = 0; i < w.xs.size(); ++i)
    for (std::size_t j = 0; j < w.ps.size(); ++j) os << w.xs[i] << ',' << w.ps[j] << ',' << w.at(i, j) << '\n';
}

inline void write_dataset_csv(std::ostream &os, const TomographyDataset &d) {
  detail::full_precision(os) << "phase_deg,quadrature\n";
  for (const auto &r : d.records) os << r.phase * 180.0 / std::numbers::pi << ',' << r.value << '\n';
}

inline TomographyDataset read_dataset_csv(std::istream &in) {
  TomographyDataset d;
  d.source = "csv";
  for (const auto &[deg, x] : detail::read_pairs(in, "phase_deg,quadrature", "dataset CSV")) {
    if (!std::isfinite(deg) || !std::isfinite(x)) throw InvalidInput("dataset CSV: non-finite value");
    d.records.push_back(fold_record(deg * std::numbers::pi / 180.0, x));
  }
  return d;
}

inline void write_mode_csv(std::ostream &os, const TemporalMode &m) {
  detail::full_precision(os) << "t_ns,amplitude\n";
  const double to_ns = 1e9, amp = std::sqrt(1e-9);
  for (std::size_t i = 0; i < m.grid.n; ++i) os << m.grid.time(i) * to_ns << ',' << m.samples[i] * amp << '\n';
}

inline TemporalMode read_mode_csv(std::istream &in, double t0 = 0.0) {
  const auto rows = detail::read_pairs(in, "t_ns,amplitude", "mode CSV");
  if (rows.size() < 2) throw InvalidInput("mode CSV: need at least two samples");
  TemporalMode m;
  m.t0 = t0;
  m.grid = {rows.front().first * 1e-9, (rows[1].first - rows[0].first) * 1e-9, rows.size()};
  m.grid.validate();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (std::abs(rows[i].first * 1e-9 - m.grid.time(i)) > 1e-6 * m.grid.dt)
      throw InvalidInput("mode CSV: time column is not uniform");
    m.samples.push_back(rows[i].second / std::sqrt(1e-9));
  }
  m.normalize();
  return m;
}

static_assert(std::endian::native == std::endian::little, "trace files are written in host byte order");

inline void write_traces(std::ostream &os, const TraceSet &ts) {
  const auto n_events = static_cast<std::uint32_t>(ts.n_events);
  const auto n_bins = static_cast<std::uint32_t>(ts.grid.n);
  const double dt_ns = ts.grid.dt * 1e9;
  os.write(reinterpret_cast<const char *>(&n_events), sizeof n_events);
  os.write(reinterpret_cast<const char *>(&n_bins), sizeof n_bins);
  os.write(reinterpret_cast<const char *>(&dt_ns), sizeof dt_ns);
  os.write(reinterpret_cast<const char *>(ts.samples.data()),
           static_cast<std::streamsize>(ts.samples.size() * sizeof(float)));
  os.write(reinterpret_cast<const char *>(ts.phases.data()),
           static_cast<std::streamsize>(ts.phases.size() * sizeof(double)));
  if (!os) throw IoError("trace write failed");
}

/// Frames are centered on the herald: t = (i - (n-1)/2) dt.
inline TraceSet read_traces(std::istream &in) {
  std::uint32_t n_events = 0, n_bins = 0;
  double dt_ns = 0.0;
  in.read(reinterpret_cast<char *>(&n_events), sizeof n_events);
  in.read(reinterpret_cast<char *>(&n_bins), sizeof n_bins);
  in.read(reinterpret_cast<char *>(&dt_ns), sizeof dt_ns);
  if (!in || n_bins < 2 || !(dt_ns > 0.0)) throw IoError("trace file: bad header");
  TraceSet ts;
  ts.n_events = n_events;
  const double dt = dt_ns * 1e-9;
  ts.grid = {-0.5 * (n_bins - 1.0) * dt, dt, n_bins};
  ts.samples.resize(static_cast<std::size_t>(n_events) * n_bins);
  ts.phases.resize(n_events);
  in.read(reinterpret_cast<char *>(ts.samples.data()), static_cast<std::streamsize>(ts.samples.size() * sizeof(float)));
  in.read(reinterpret_cast<char *>(ts.phases.data()), static_cast<std::streamsize>(ts.phases.size() * sizeof(double)));
  if (!in) throw IoError("trace file: truncated payload");
  for (float v : ts.samples)
    if (!std::isfinite(v)) throw IoError("trace file: non-finite sample");
  return ts;
}

} // namespace cvq

#endif // CVQ_IO_HPP
