#ifndef CVQ_TOOLS_CLI_APP_HPP
#define CVQ_TOOLS_CLI_APP_HPP

// Command-line front end. Exit codes: 0 success, 2 usage, 3 numerical, 4 I/O.
// stdout carries data, stderr carries diagnostics.

#include <complex>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <cvq/cvq.hpp>

namespace cvq::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kNumerical = 3, kIo = 4 };

namespace detail {

constexpr double kDeg = std::numbers::pi / 180.0;

/// "re", "(re)" or "(re,im)" as accepted by std::complex extraction.
inline Complex parse_complex(const std::string &s) {
  std::istringstream in(s);
  Complex c;
  in >> c;
  if (!in || (in >> std::ws, !in.eof())) throw InvalidInput("cannot parse complex number '" + s + "' (use re or (re,im))");
  return c;
}

inline void emit(const Json &j, const std::string &path, std::ostream &out) {
  if (path.empty() || path == "-")
    out << j.dump(2) << '\n';
  else
    write_json(path, j);
}

template <typename Writer>
void emit_text(const std::string &path, std::ostream &out, Writer &&w) {
  if (path.empty() || path == "-") {
    w(out);
    return;
  }
  auto f = open_out(path);
  w(f);
  if (!f) throw IoError("write failed: " + path);
}

/// One of --vacuum, --fock, --coeffs, --theta/--phi/--loss or --state.
struct StateSource {
  bool vacuum = false;
  int fock = -1;
  std::vector<std::string> coeffs;
  std::optional<double> theta, phi, loss;
  std::string file;
  int dim = 0;

  void attach(CLI::App *app, bool with_model = true) {
    app->add_flag("--vacuum", vacuum, "vacuum state");
    app->add_option("--fock", fock, "Fock state |n>");
    app->add_option("--coeffs", coeffs, "superposition coefficients c0 c1 ... as re or (re,im)");
    if (with_model) {
      app->add_option("--theta", theta, "superposition angle");
      app->add_option("--phi", phi, "relative phase");
      app->add_option("--loss", loss, "optical loss L in [0,1]");
    }
    app->add_option("--state", file, "density matrix JSON file");
    app->add_option("--dim", dim, "Fock cutoff (default: smallest that holds the state)");
  }

  QuantumState build(bool degrees) const {
    const int given = int(vacuum) + int(fock >= 0) + int(!coeffs.empty()) + int(theta.has_value()) + int(!file.empty());
    if (given != 1) throw InvalidInput("give exactly one of --vacuum, --fock, --coeffs, --theta or --state");
    if (loss && !theta && coeffs.empty() && fock < 0)
      throw InvalidInput("--loss applies to --theta, --fock or --coeffs states");
    const double unit = degrees ? kDeg : 1.0;
    QuantumState s = cvq::vacuum(1);
    if (vacuum) {
      s = cvq::vacuum(std::max(dim, 1));
    } else if (fock >= 0) {
      s = fock_state(fock, std::max(dim, fock + 1));
    } else if (!coeffs.empty()) {
      std::vector<Complex> c;
      for (const auto &t : coeffs) c.push_back(parse_complex(t));
      s = make_superposition(std::span<const Complex>(c), std::max(dim, static_cast<int>(c.size())));
    } else if (theta) {
      if (phi && !(*phi == *phi)) throw InvalidInput("--phi is not a number");
      return rho_theta_phi_L(*theta * unit, wrap_two_pi(phi.value_or(0.0) * unit), loss.value_or(0.0),
                             std::max(dim, 2));
    } else {
      s = state_from_json(read_json(file));
      if (dim > 0) s = s.resized(dim);
    }
    if (loss) s = apply_loss(s, *loss);
    return s;
  }
};

/// Gate-noise state tokens: vacuum, fock:N, optimal, model:THETA,PHI,LOSS
/// (radians) or a density-matrix JSON path.
inline QuantumState state_from_token(const std::string &token) {
  if (token == "vacuum") return vacuum(1);
  if (token == "optimal") {
    const auto c = optimize_coefficients(1).coefficients;
    return make_superposition(std::span<const Complex>(c), 2);
  }
  if (token.rfind("fock:", 0) == 0) {
    const int n = static_cast<int>(cvq::detail::parse_double(token.substr(5), "fock token"));
    if (n < 0) throw InvalidInput("fock token: n must be >= 0");
    return fock_state(n, n + 1);
  }
  if (token.rfind("model:", 0) == 0) {
    const auto f = cvq::detail::split(token.substr(6), ',');
    if (f.size() != 3) throw InvalidInput("model token: expected model:THETA,PHI,LOSS");
    return rho_theta_phi_L(cvq::detail::parse_double(f[0], "model token"),
                           wrap_two_pi(cvq::detail::parse_double(f[1], "model token")),
                           cvq::detail::parse_double(f[2], "model token"), 2);
  }
  return state_from_json(read_json(token));
}

inline Json coefficients_json(const std::vector<Complex> &c) {
  Json a = Json::array();
  for (const auto &v : c) a.push_back({v.real(), v.imag()});
  return a;
}

inline TemporalMode load_mode_or_default(const std::string &path) {
  if (path.empty()) return opo_composite_mode();
  auto f = open_in(path);
  return read_mode_csv(f);
}

inline std::vector<double> phases_or_default(const std::vector<double> &deg) {
  if (deg.empty()) return default_phases();
  std::vector<double> out;
  for (double d : deg) out.push_back(d * kDeg);
  return out;
}

inline Json mle_summary(const MleResult &r, double kappa) {
  Json j = mle_report(r);
  j["nlsq"] = to_json(optimal_nonlinear_variance(r.state, kappa));
  return j;
}

/// Fills options the user did not pass from a JSON config: keys are long
/// option names, top level or nested under the subcommand name.
inline void apply_config(CLI::App *sub, const Json &cfg) {
  Json merged = Json::object();
  for (auto it = cfg.begin(); it != cfg.end(); ++it)
    if (!it.value().is_object()) merged[it.key()] = it.value();
  if (cfg.contains(sub->get_name()) && cfg[sub->get_name()].is_object())
    for (auto it = cfg[sub->get_name()].begin(); it != cfg[sub->get_name()].end(); ++it) merged[it.key()] = it.value();

  auto to_string = [](const Json &v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
    return v.dump();
  };
  for (auto it = merged.begin(); it != merged.end(); ++it) {
    if (it.key() == "config") continue;
    CLI::Option *opt = nullptr;
    try {
      opt = sub->get_option("--" + it.key());
    } catch (const CLI::OptionNotFound &) {
      continue;
    }
    if (opt->count() > 0) continue;
    std::vector<std::string> values;
    if (it.value().is_array())
      for (const auto &v : it.value()) values.push_back(to_string(v));
    else
      values.push_back(to_string(it.value()));
    for (const auto &v : values) opt->add_result(v);
    opt->run_callback();
  }
}

} // namespace detail

inline int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Nonlinear squeezing, heralded superpositions, temporal modes and homodyne tomography"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_path;
  bool degrees = false;
  app.add_option("--config", config_path, "JSON file with option values (flags override)");
  app.add_flag("--deg", degrees, "angles (theta, phi) in degrees instead of radians");

  std::string out_path;
  double kappa = 1.0;
  int order = 3;
  std::uint64_t seed = kDefaultSeed;

  // nlsq
  auto *nlsq = app.add_subcommand("nlsq", "optimal nonlinear variance of a state");
  detail::StateSource nlsq_state;
  nlsq_state.attach(nlsq);
  nlsq->add_option("--kappa", kappa, "gate strength")->capture_default_str();
  nlsq->add_option("--order", order, "nonlinearity order N")->capture_default_str();
  nlsq->add_option("-o,--out", out_path, "JSON output file");

  // optimize
  auto *optimize = app.add_subcommand("optimize", "best superposition up to M photons");
  int max_photons = 1, starts = 32;
  std::optional<double> opt_loss;
  optimize->add_option("--max-photons", max_photons, "largest photon number M")->capture_default_str();
  optimize->add_option("--kappa", kappa)->capture_default_str();
  optimize->add_option("--order", order)->capture_default_str();
  optimize->add_option("--loss", opt_loss, "loss applied before evaluation");
  optimize->add_option("--starts", starts, "random starts")->capture_default_str();
  optimize->add_option("--seed", seed)->capture_default_str();
  optimize->add_option("-o,--out", out_path);

  // sweep
  auto *sweep = app.add_subcommand("sweep", "NLSQ versus theta for several losses (CSV)");
  double theta_min = 0.0, theta_max = std::numbers::pi, sweep_phi = 1.5 * std::numbers::pi;
  int theta_steps = 61;
  std::vector<double> losses{0.0, 0.25, 0.5};
  sweep->add_option("--theta-min", theta_min)->capture_default_str();
  sweep->add_option("--theta-max", theta_max)->capture_default_str();
  sweep->add_option("--theta-steps", theta_steps)->capture_default_str();
  sweep->add_option("--phi", sweep_phi)->capture_default_str();
  sweep->add_option("--loss", losses, "loss values")->capture_default_str();
  sweep->add_option("--kappa", kappa)->capture_default_str();
  sweep->add_option("--order", order)->capture_default_str();
  sweep->add_option("-o,--out", out_path, "CSV output file");

  // herald
  auto *herald_cmd = app.add_subcommand("herald", "heralded superposition from (q, alpha)");
  std::string q_str = "(0,-0.0772)", alpha_str = "0.1", wigner_path, fit_sweep_path, state_out;
  double herald_loss = 0.0, wigner_extent = 4.0, fit_phi = 1.5 * std::numbers::pi;
  int herald_dim = 6, wigner_points = 81, fit_steps = 13, fit_samples = 0;
  herald_cmd->add_option("--q", q_str, "two-mode squeezing amplitude, re or (re,im)")->capture_default_str();
  herald_cmd->add_option("--alpha", alpha_str, "displacement amplitude, re or (re,im)")->capture_default_str();
  herald_cmd->add_option("--loss", herald_loss)->capture_default_str();
  herald_cmd->add_option("--dim", herald_dim)->capture_default_str();
  herald_cmd->add_option("--state-out", state_out, "density matrix JSON file");
  herald_cmd->add_option("--wigner", wigner_path, "Wigner CSV output");
  herald_cmd->add_option("--wigner-extent", wigner_extent)->capture_default_str();
  herald_cmd->add_option("--wigner-points", wigner_points)->capture_default_str();
  herald_cmd->add_option("--fit-sweep", fit_sweep_path, "CSV of (phi, L) fits across theta");
  herald_cmd->add_option("--fit-phi", fit_phi, "phase used by the fit sweep")->capture_default_str();
  herald_cmd->add_option("--fit-steps", fit_steps)->capture_default_str();
  herald_cmd->add_option("--fit-samples", fit_samples, "samples per phase; 0 fits the exact model")
      ->capture_default_str();
  herald_cmd->add_option("--seed", seed)->capture_default_str();
  herald_cmd->add_option("-o,--out", out_path);

  // mode
  auto *mode_cmd = app.add_subcommand("mode", "temporal mode samples (CSV)");
  std::string mode_kind = "composite";
  std::vector<double> hwhm_mhz{kOpoHwhmHz[0] / 1e6, kOpoHwhmHz[1] / 1e6, kOpoHwhmHz[2] / 1e6};
  double dt_ns = kDefaultDt * 1e9, frame_ns = kDefaultFrame * 1e9;
  mode_cmd->add_option("--kind", mode_kind, "composite or single")
      ->check(CLI::IsMember({"composite", "single"}))
      ->capture_default_str();
  mode_cmd->add_option("--hwhm", hwhm_mhz, "cavity HWHM linewidths in MHz")->capture_default_str();
  mode_cmd->add_option("--dt-ns", dt_ns)->capture_default_str();
  mode_cmd->add_option("--frame-ns", frame_ns)->capture_default_str();
  mode_cmd->add_option("-o,--out", out_path);

  // filter-design
  auto *filter_cmd = app.add_subcommand("filter-design", "third-order matched filter for a mode");
  std::string mode_path, response_path;
  filter_cmd->add_option("--mode", mode_path, "mode CSV (default: composite mode)");
  filter_cmd->add_option("--response", response_path, "filter weighting CSV output");
  filter_cmd->add_option("-o,--out", out_path);

  // traces
  auto *traces_cmd = app.add_subcommand("traces", "simulated homodyne traces (binary)");
  detail::StateSource trace_state;
  trace_state.attach(traces_cmd);
  int n_events = 10000;
  std::vector<double> phases_deg;
  traces_cmd->add_option("--mode", mode_path);
  traces_cmd->add_option("--events", n_events)->capture_default_str();
  traces_cmd->add_option("--phases", phases_deg, "LO phases in degrees (default 0..150 step 30)");
  traces_cmd->add_option("--seed", seed)->capture_default_str();
  traces_cmd->add_option("-o,--out", out_path, "trace file")->required();

  // pca
  auto *pca_cmd = app.add_subcommand("pca", "principal temporal mode of traces");
  std::string traces_path, reference_path;
  PcaOptions pca_opt;
  bool no_causal = false;
  pca_cmd->add_option("--traces", traces_path)->required();
  pca_cmd->add_option("--rebin", pca_opt.rebin)->capture_default_str();
  pca_cmd->add_flag("--no-causal", no_causal, "use the whole frame, not just t <= t0");
  pca_cmd->add_option("--reference", reference_path, "mode CSV to report the overlap against");
  pca_cmd->add_option("--mode-out", response_path, "estimated mode CSV");
  pca_cmd->add_option("-o,--out", out_path);

  // sample
  auto *sample_cmd = app.add_subcommand("sample", "homodyne quadrature samples (CSV)");
  detail::StateSource sample_state;
  sample_state.attach(sample_cmd);
  int samples = kDefaultSamplesPerPhase;
  sample_cmd->add_option("--phases", phases_deg, "LO phases in degrees");
  sample_cmd->add_option("--samples", samples, "records per phase")->capture_default_str();
  sample_cmd->add_option("--seed", seed)->capture_default_str();
  sample_cmd->add_option("-o,--out", out_path);

  // reconstruct
  auto *recon_cmd = app.add_subcommand("reconstruct", "maximum-likelihood density matrix");
  std::string data_path, report_path;
  int recon_dim = 5, bootstrap = 0;
  MleOptions mle_opt;
  recon_cmd->add_option("--data", data_path, "dataset CSV")->required();
  recon_cmd->add_option("--dim", recon_dim)->capture_default_str();
  recon_cmd->add_option("--max-iters", mle_opt.max_iters)->capture_default_str();
  recon_cmd->add_option("--tol", mle_opt.tol)->capture_default_str();
  recon_cmd->add_option("--bins", mle_opt.bins)->capture_default_str();
  recon_cmd->add_option("--bootstrap", bootstrap, "bootstrap resamples (0: none)")->capture_default_str();
  recon_cmd->add_option("--seed", seed)->capture_default_str();
  recon_cmd->add_option("--kappa", kappa)->capture_default_str();
  recon_cmd->add_option("--state-out", state_out, "density matrix JSON file");
  recon_cmd->add_option("--report", report_path, "run report JSON {iters, loglik, warnings}");
  recon_cmd->add_option("-o,--out", out_path);

  // pipeline
  auto *pipe_cmd = app.add_subcommand("pipeline", "generate, measure, reconstruct and fit");
  double pipe_theta = 1.09, pipe_phi = 1.5 * std::numbers::pi, pipe_loss = 0.25;
  bool via_traces = false;
  pipe_cmd->add_option("--theta", pipe_theta)->capture_default_str();
  pipe_cmd->add_option("--phi", pipe_phi)->capture_default_str();
  pipe_cmd->add_option("--loss", pipe_loss)->capture_default_str();
  pipe_cmd->add_option("--samples", samples, "records per phase")->capture_default_str();
  pipe_cmd->add_option("--phases", phases_deg, "LO phases in degrees");
  pipe_cmd->add_option("--dim", recon_dim)->capture_default_str();
  pipe_cmd->add_option("--kappa", kappa)->capture_default_str();
  pipe_cmd->add_option("--seed", seed)->capture_default_str();
  pipe_cmd->add_flag("--traces", via_traces, "measure through simulated traces, both paths");
  pipe_cmd->add_option("--mode", mode_path, "mode CSV for --traces");
  pipe_cmd->add_option("-o,--out", out_path);

  // gate-noise
  auto *gate_cmd = app.add_subcommand("gate-noise", "cubic phase gate noise budget");
  std::string input_token = "vacuum", ancilla_token = "vacuum";
  std::optional<double> sqz_var, sqz_db, budget;
  std::string ancilla_lambda = "1";
  gate_cmd->add_option("--input", input_token, "vacuum | fock:N | optimal | model:T,P,L | file.json")
      ->capture_default_str();
  gate_cmd->add_option("--ancilla", ancilla_token, "same forms as --input")->capture_default_str();
  gate_cmd->add_option("--ancilla-lambda", ancilla_lambda,
                       "squeeze applied to the ancilla: a value, or auto for its NLSQ optimum")
      ->capture_default_str();
  gate_cmd->add_option("--sqz-var", sqz_var, "Var(x) of the squeezed resource");
  gate_cmd->add_option("--sqz-db", sqz_db, "squeezing level in dB below vacuum");
  gate_cmd->add_option("--kappa", kappa)->capture_default_str();
  gate_cmd->add_option("--budget", budget, "ancilla excess budget; reports the NLSQ needed");
  gate_cmd->add_option("-o,--out", out_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  CLI::App *sub = app.get_subcommands().front();
  try {
    if (!config_path.empty()) detail::apply_config(sub, read_json(config_path));
    const double unit = degrees ? detail::kDeg : 1.0;

    if (sub == nlsq) {
      const auto s = nlsq_state.build(degrees);
      const auto r = optimal_nonlinear_variance(s, kappa, order);
      err << "ratio " << r.ratio << "  " << r.db << " dB  lambda_opt " << r.lambda_opt
          << (r.nonlinearly_squeezed() ? "  (nonlinearly squeezed)" : "") << '\n';
      detail::emit(to_json(r), out_path, out);
    } else if (sub == optimize) {
      err << "seed " << seed << '\n';
      const auto r = optimize_coefficients(max_photons, kappa, order, opt_loss, {starts, seed});
      Json j{{"max_photons", max_photons}, {"seed", seed}, {"coefficients", detail::coefficients_json(r.coefficients)},
             {"result", to_json(r.result)}};
      if (opt_loss) j["loss"] = *opt_loss;
      detail::emit(j, out_path, out);
    } else if (sub == sweep) {
      if (theta_steps < 2) throw InvalidInput("sweep: --theta-steps must be >= 2");
      const double lo = theta_min * unit, hi = theta_max * unit, phi = wrap_two_pi(sweep_phi * unit);
      const std::size_t n = static_cast<std::size_t>(theta_steps) * losses.size();
      std::vector<NlsqResult> res(n);
      std::vector<std::string> failures(n);
      parallel_for(n, [&](std::size_t i) {
        const double theta = lo + (hi - lo) * static_cast<double>(i % theta_steps) / (theta_steps - 1);
        try {
          res[i] = optimal_nonlinear_variance(rho_theta_phi_L(theta, phi, losses[i / theta_steps], 2), kappa, order);
        } catch (const std::exception &e) {
          failures[i] = e.what();
        }
      });
      for (const auto &f : failures)
        if (!f.empty()) throw InvalidInput("sweep: " + f);
      detail::emit_text(out_path, out, [&](std::ostream &os) {
        cvq::detail::full_precision(os) << "theta_rad,phi_rad,loss,ratio,db,lambda_opt\n";
        for (std::size_t i = 0; i < n; ++i) {
          const double theta = lo + (hi - lo) * static_cast<double>(i % theta_steps) / (theta_steps - 1);
          os << theta << ',' << phi << ',' << losses[i / theta_steps] << ',' << res[i].ratio << ',' << res[i].db
             << ',' << res[i].lambda_opt << '\n';
        }
      });
    } else if (sub == herald_cmd) {
      const Complex q = detail::parse_complex(q_str), alpha = detail::parse_complex(alpha_str);
      auto state = herald(q, alpha, herald_dim);
      state = apply_loss(state, herald_loss);
      const auto params = GenerationParams::from_herald(q, alpha, herald_loss);
      Json j{{"theta", params.theta},
             {"phi", params.phi},
             {"loss", herald_loss},
             {"count_rate_ratio", count_rate_ratio(params.theta)},
             {"nlsq", to_json(optimal_nonlinear_variance(state, kappa))},
             {"state", to_json(state)}};
      if (!state_out.empty()) write_json(state_out, to_json(state));
      if (!wigner_path.empty()) {
        if (wigner_points < 2) throw InvalidInput("herald: --wigner-points must be >= 2");
        const auto xs = linspace(-wigner_extent, wigner_extent, wigner_points);
        const auto w = wigner(state, xs, xs);
        auto f = open_out(wigner_path);
        write_wigner_csv(f, w);
      }
      if (!fit_sweep_path.empty()) {
        if (fit_steps < 2) throw InvalidInput("herald: --fit-steps must be >= 2");
        if (fit_samples > 0) err << "seed " << seed << '\n';
        std::vector<PhaseLossFit> fits(fit_steps);
        std::vector<double> thetas(fit_steps);
        for (int i = 0; i < fit_steps; ++i) thetas[i] = std::numbers::pi * i / (fit_steps - 1);
        for (int i = 0; i < fit_steps; ++i) {
          const auto truth = rho_theta_phi_L(thetas[i], wrap_two_pi(fit_phi * unit), herald_loss, 5);
          QuantumState measured = truth;
          if (fit_samples > 0)
            measured = mle_reconstruct(sample(truth, default_phases(), fit_samples, derive_seed(seed, i)), 5).state;
          fits[i] = fit_phi_L(measured, thetas[i]);
        }
        auto f = open_out(fit_sweep_path);
        cvq::detail::full_precision(f) << "theta_rad,phi_fit,L_fit,residual\n";
        for (int i = 0; i < fit_steps; ++i)
          f << thetas[i] << ',' << fits[i].phi << ',' << fits[i].loss << ',' << fits[i].residual << '\n';
        if (!f) throw IoError("write failed: " + fit_sweep_path);
      }
      detail::emit(j, out_path, out);
    } else if (sub == mode_cmd) {
      const TimeGrid g = centered_grid(dt_ns * 1e-9, frame_ns * 1e-9);
      TemporalMode m;
      if (mode_kind == "single") {
        if (hwhm_mhz.empty()) throw InvalidInput("mode: --hwhm needs a value");
        m = single_pole_mode(gamma_from_hwhm(hwhm_mhz[0] * 1e6), 0.0, g);
      } else {
        if (hwhm_mhz.size() != 3) throw InvalidInput("mode: composite mode needs three --hwhm values");
        m = composite_mode({gamma_from_hwhm(hwhm_mhz[0] * 1e6), gamma_from_hwhm(hwhm_mhz[1] * 1e6),
                            gamma_from_hwhm(hwhm_mhz[2] * 1e6)},
                           0.0, g);
      }
      detail::emit_text(out_path, out, [&](std::ostream &os) { write_mode_csv(os, m); });
    } else if (sub == filter_cmd) {
      const auto target = detail::load_mode_or_default(mode_path);
      const auto f = design_matched_filter(target);
      if (!response_path.empty()) {
        auto os = open_out(response_path);
        write_mode_csv(os, f.response);
      }
      detail::emit(Json{{"poles_rad_per_s", f.poles}, {"overlap", f.overlap}}, out_path, out);
    } else if (sub == traces_cmd) {
      if (n_events < 1) throw InvalidInput("traces: --events must be >= 1");
      err << "seed " << seed << '\n';
      const auto state = trace_state.build(degrees);
      const auto m = detail::load_mode_or_default(mode_path);
      const auto ts = simulate_traces(state, m, static_cast<std::size_t>(n_events),
                                      detail::phases_or_default(phases_deg), seed);
      auto f = open_out(out_path, true);
      write_traces(f, ts);
    } else if (sub == pca_cmd) {
      auto in = open_in(traces_path, true);
      const auto ts = read_traces(in);
      pca_opt.causal = !no_causal;
      const auto est = pca_mode_estimate_detailed(ts, pca_opt);
      Json j{{"events", ts.n_events},
             {"leading_eigenvalue", est.leading_eigenvalue},
             {"second_eigenvalue", est.second_eigenvalue},
             {"noise_edge", est.noise_edge}};
      if (!reference_path.empty()) {
        auto rf = open_in(reference_path);
        j["overlap"] = mode_overlap(est.mode, read_mode_csv(rf));
      }
      if (!response_path.empty()) {
        auto os = open_out(response_path);
        write_mode_csv(os, est.mode);
      }
      detail::emit(j, out_path, out);
    } else if (sub == sample_cmd) {
      if (samples < 1) throw InvalidInput("sample: --samples must be >= 1");
      err << "seed " << seed << '\n';
      const auto state = sample_state.build(degrees);
      const auto data = sample(state, detail::phases_or_default(phases_deg), samples, seed);
      detail::emit_text(out_path, out, [&](std::ostream &os) { write_dataset_csv(os, data); });
    } else if (sub == recon_cmd) {
      auto in = open_in(data_path);
      const auto data = read_dataset_csv(in);
      const auto r = mle_reconstruct(data, recon_dim, mle_opt);
      for (const auto &w : r.warnings) err << "warning: " << w << '\n';
      Json j = detail::mle_summary(r, kappa);
      if (bootstrap > 0) {
        err << "seed " << seed << '\n';
        const auto b = bootstrap_error(data, recon_dim, bootstrap, seed, mle_opt);
        j["bootstrap"] = {{"resamples", b.resamples}, {"seed", seed}, {"nlsq_db_se", b.nlsq_db_se}};
      }
      j["state"] = to_json(r.state);
      if (!state_out.empty()) write_json(state_out, to_json(r.state));
      if (!report_path.empty()) write_json(report_path, mle_report(r));
      detail::emit(j, out_path, out);
    } else if (sub == pipe_cmd) {
      if (samples < 1) throw InvalidInput("pipeline: --samples must be >= 1");
      err << "seed " << seed << '\n';
      const double theta = pipe_theta * unit, phi = wrap_two_pi(pipe_phi * unit);
      const auto truth = rho_theta_phi_L(theta, phi, pipe_loss, recon_dim);
      const auto phases = detail::phases_or_default(phases_deg);
      Json j{{"theta", theta}, {"phi", phi}, {"loss", pipe_loss}, {"samples_per_phase", samples},
             {"phases_deg", Json::array()}, {"seed", seed}, {"dim", recon_dim}};
      for (double p : phases) j["phases_deg"].push_back(p / detail::kDeg);
      j["model"] = to_json(optimal_nonlinear_variance(truth, kappa));
      TomographyDataset data;
      if (via_traces) {
        const auto m = detail::load_mode_or_default(mode_path);
        const auto filt = design_matched_filter(m);
        const auto dm = measure_events(truth, m, filt.response, phases, static_cast<std::size_t>(samples), seed);
        data = dm.postprocess;
        j["filter"] = {{"poles_rad_per_s", filt.poles}, {"overlap", filt.overlap}};
        j["correlations"] = to_json(dm.correlations);
      } else {
        data = sample(truth, phases, samples, seed);
      }
      const auto r = mle_reconstruct(data, recon_dim);
      for (const auto &w : r.warnings) err << "warning: " << w << '\n';
      Json rec = detail::mle_summary(r, kappa);
      rec["fidelity"] = fidelity(r.state, truth);
      j["reconstruction"] = rec;
      const auto fit = fit_phi_L(r.state, theta);
      j["fit"] = {{"phi", fit.phi}, {"loss", fit.loss}, {"residual", fit.residual},
                  {"phi_reliable", fit.phi_reliable}, {"loss_reliable", fit.loss_reliable}};
      detail::emit(j, out_path, out);
    } else if (sub == gate_cmd) {
      if (sqz_var && sqz_db) throw InvalidInput("gate-noise: give --sqz-var or --sqz-db, not both");
      const double v = sqz_var ? *sqz_var : sqz_db ? 0.5 * std::pow(10.0, -*sqz_db / 10.0) : 0.0;
      const auto in_m = ModeMoments::of(detail::state_from_token(input_token));
      const auto anc_state = detail::state_from_token(ancilla_token);
      const double lambda = ancilla_lambda == "auto" ? optimal_nonlinear_variance(anc_state, kappa).lambda_opt
                                                     : cvq::detail::parse_double(ancilla_lambda, "--ancilla-lambda");
      const auto anc_m = ModeMoments::of(anc_state).squeezed(lambda);
      const auto r = propagate(in_m, anc_m, v, kappa);
      Json j = to_json(r);
      j["input_moments"] = to_json(in_m);
      j["ancilla_lambda"] = lambda;
      j["ancilla_moments"] = to_json(anc_m);
      if (budget) j["required_ancilla_db"] = required_ancilla_db(*budget, kappa);
      detail::emit(j, out_path, out);
    }
    return kOk;
  } catch (const IoError &e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const NumericalError &e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const InvalidInput &e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DimensionError &e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const CLI::Error &e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

} // namespace cvq::cli

#endif // CVQ_TOOLS_CLI_APP_HPP
