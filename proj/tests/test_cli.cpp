#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "cli_app.hpp"

namespace cvq {
namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;

  Json json() const { return Json::parse(out); }
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "cvq");
  std::vector<const char *> argv;
  for (const auto &a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("cvq_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string file(const std::string &name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

std::string slurp(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

std::vector<std::vector<double>> read_csv_rows(const std::string &text, std::string *header = nullptr) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    for (const auto &f : detail::split(line, ',')) row.push_back(std::stod(f));
    rows.push_back(row);
  }
  return rows;
}

TEST(CliNlsq, ReferenceStates) {
  auto r = cli({"nlsq", "--fock", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(r.json()["db"].get<double>(), 4.7712, 1e-3);
  EXPECT_NEAR(r.json()["ratio"].get<double>(), 3.0, 1e-6);

  r = cli({"nlsq", "--theta", "1.09", "--phi", "4.712389", "--loss", "0.25"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(r.json()["db"].get<double>(), -0.65, 0.02);

  r = cli({"nlsq", "--vacuum"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(r.json()["db"].get<double>(), 0.0, 1e-9);
  EXPECT_NEAR(r.json()["variance_opt"].get<double>(), 1.96556, 1e-3);
}

TEST(CliNlsq, DegreesMatchRadians) {
  const auto rad = cli({"nlsq", "--theta", "1.09", "--phi", "4.71238898038469", "--loss", "0.25"});
  const auto deg = cli({"nlsq", "--theta", std::to_string(1.09 * 180.0 / std::numbers::pi), "--phi", "270",
                        "--loss", "0.25", "--deg"});
  ASSERT_EQ(deg.code, 0) << deg.err;
  EXPECT_NEAR(rad.json()["db"].get<double>(), deg.json()["db"].get<double>(), 1e-6);
}

TEST(CliNlsq, CoefficientsAndLoss) {
  auto r = cli({"nlsq", "--coeffs", "0", "1", "--loss", "0.25"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(r.json()["db"].get<double>(), 4.18, 0.02);
  r = cli({"nlsq", "--coeffs", "0.8", "(0,-0.6)"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LT(r.json()["db"].get<double>(), -1.0);
}

TEST(CliNlsq, StateFileInput) {
  TempDir dir;
  const auto path = dir.file("s.json");
  write_json(path, to_json(fock_state(1, 3)));
  const auto r = cli({"nlsq", "--state", path});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(r.json()["ratio"].get<double>(), 3.0, 1e-6);
}

TEST(CliNlsq, OutputFile) {
  TempDir dir;
  const auto path = dir.file("n.json");
  const auto r = cli({"nlsq", "--fock", "1", "-o", path});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  EXPECT_NEAR(read_json(path)["ratio"].get<double>(), 3.0, 1e-6);
}

TEST(CliSweep, CurveShape) {
  const auto r = cli({"sweep", "--theta-steps", "181", "--loss", "0", "0.25"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::string header;
  const auto rows = read_csv_rows(r.out, &header);
  EXPECT_EQ(header, "theta_rad,phi_rad,loss,ratio,db,lambda_opt");
  ASSERT_EQ(rows.size(), 362u);

  double min_db = 1e9, min_theta = 0.0;
  for (std::size_t i = 0; i < 181; ++i)
    if (rows[i][4] < min_db) {
      min_db = rows[i][4];
      min_theta = rows[i][0];
    }
  EXPECT_NEAR(min_db, -1.44, 0.03);
  EXPECT_NEAR(min_theta, 1.3149, 0.03);

  EXPECT_NEAR(rows[0][4], 0.0, 1e-6);             // theta = 0, L = 0
  EXPECT_NEAR(rows[181][4], 0.0, 1e-6);           // theta = 0, L = 0.25
  EXPECT_NEAR(rows[180][4], 4.7712, 1e-3);        // theta = pi, L = 0
  EXPECT_NEAR(rows[361][4], 4.18, 0.02);          // theta = pi, L = 0.25
  for (const auto &row : rows) EXPECT_NEAR(row[1], 1.5 * std::numbers::pi, 1e-12);
}

TEST(CliOptimize, SingleRail) {
  const auto r = cli({"optimize", "--max-photons", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = r.json();
  EXPECT_NEAR(j["result"]["db"].get<double>(), -1.44, 0.03);
  const auto &c = j["coefficients"];
  const double c0 = std::hypot(c[0][0].get<double>(), c[0][1].get<double>());
  const double c1 = std::hypot(c[1][0].get<double>(), c[1][1].get<double>());
  EXPECT_NEAR(c1 / c0, 0.772, 0.02);
  EXPECT_NE(r.err.find("seed 20210101"), std::string::npos);
}

TEST(CliHerald, DefaultsToBestSuperposition) {
  TempDir dir;
  const auto r = cli({"herald", "--wigner", dir.file("w.csv"), "--wigner-points", "11", "--state-out",
                      dir.file("s.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = r.json();
  EXPECT_NEAR(j["theta"].get<double>(), 1.3149, 0.01);
  EXPECT_NEAR(j["phi"].get<double>(), 1.5 * std::numbers::pi, 1e-9);
  EXPECT_NEAR(j["count_rate_ratio"].get<double>(), 2.678, 0.01);
  EXPECT_NEAR(j["nlsq"]["db"].get<double>(), -1.44, 0.03);
  const auto rows = read_csv_rows(slurp(dir.file("w.csv")));
  EXPECT_EQ(rows.size(), 121u);
  EXPECT_EQ(state_from_json(read_json(dir.file("s.json"))).dim(), 6);
}

TEST(CliHerald, FitSweepRecoversModel) {
  TempDir dir;
  const auto r = cli({"herald", "--loss", "0.25", "--fit-sweep", dir.file("fit.csv"), "--fit-steps", "7"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::string header;
  const auto rows = read_csv_rows(slurp(dir.file("fit.csv")), &header);
  EXPECT_EQ(header, "theta_rad,phi_fit,L_fit,residual");
  ASSERT_EQ(rows.size(), 7u);
  for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
    EXPECT_NEAR(rows[i][1], 1.5 * std::numbers::pi, 1e-6) << "theta " << rows[i][0];
    EXPECT_NEAR(rows[i][2], 0.25, 1e-6) << "theta " << rows[i][0];
    EXPECT_LT(rows[i][3], 1e-8);
  }
}

TEST(CliTemporal, ModeFilterTracesPca) {
  TempDir dir;
  auto r = cli({"mode", "-o", dir.file("mode.csv")});
  ASSERT_EQ(r.code, 0) << r.err;

  r = cli({"filter-design", "--mode", dir.file("mode.csv"), "--response", dir.file("resp.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_GE(r.json()["overlap"].get<double>(), 0.97);
  EXPECT_EQ(r.json()["poles_rad_per_s"].size(), 3u);

  r = cli({"traces", "--fock", "1", "--mode", dir.file("mode.csv"), "--events", "10000", "-o", dir.file("t.bin")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("seed"), std::string::npos);

  r = cli({"pca", "--traces", dir.file("t.bin"), "--reference", dir.file("mode.csv"), "--mode-out",
           dir.file("pca.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_GE(r.json()["overlap"].get<double>(), 0.98);
  EXPECT_TRUE(std::filesystem::exists(dir.file("pca.csv")));
}

TEST(CliTemporal, SinglePoleMode) {
  const auto r = cli({"mode", "--kind", "single", "--hwhm", "33.7"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  const auto m = read_mode_csv(in);
  const auto ref = single_pole_mode(gamma_from_hwhm(33.7e6), 0.0, centered_grid());
  EXPECT_NEAR(mode_overlap(m, ref), 1.0, 1e-9);
}

TEST(CliTomography, SampleThenReconstruct) {
  TempDir dir;
  auto r = cli({"sample", "--theta", "1.09", "--phi", "4.71238898038469", "--loss", "0.25", "-o", dir.file("d.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("seed 20210101"), std::string::npos);

  r = cli({"reconstruct", "--data", dir.file("d.csv"), "--report", dir.file("rep.json"), "--state-out",
           dir.file("s.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto truth = rho_theta_phi_L(1.09, 1.5 * std::numbers::pi, 0.25, 5);
  const auto rec = state_from_json(read_json(dir.file("s.json")));
  EXPECT_GE(fidelity(rec, truth), 0.99);
  const auto rep = read_json(dir.file("rep.json"));
  EXPECT_TRUE(rep.contains("iters"));
  EXPECT_TRUE(rep.contains("loglik"));
  EXPECT_TRUE(rep["warnings"].is_array());
  EXPECT_NEAR(r.json()["nlsq"]["db"].get<double>(), -0.65, 0.1);
}

TEST(CliTomography, SampleIsSeeded) {
  const auto a = cli({"sample", "--fock", "1", "--samples", "100", "--seed", "7"});
  const auto b = cli({"sample", "--fock", "1", "--samples", "100", "--seed", "7"});
  const auto c = cli({"sample", "--fock", "1", "--samples", "100", "--seed", "8"});
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
  EXPECT_NE(a.err.find("seed 7"), std::string::npos);
}

TEST(CliPipeline, DeterministicAndAccurate) {
  const auto a = cli({"pipeline"});
  const auto b = cli({"pipeline"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const auto j = a.json();
  EXPECT_NEAR(j["reconstruction"]["nlsq"]["db"].get<double>(), j["model"]["db"].get<double>(), 0.1);
  EXPECT_GE(j["reconstruction"]["fidelity"].get<double>(), 0.99);
  EXPECT_NEAR(j["fit"]["phi"].get<double>(), 1.5 * std::numbers::pi, 0.05);
  EXPECT_EQ(j["seed"].get<std::uint64_t>(), kDefaultSeed);
}

TEST(CliPipeline, ThroughTraces) {
  const auto r = cli({"pipeline", "--traces", "--samples", "3000"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = r.json();
  ASSERT_EQ(j["correlations"].size(), 6u);
  for (const auto &c : j["correlations"]) EXPECT_GE(c["correlation"].get<double>(), 0.98);
  EXPECT_GE(j["reconstruction"]["fidelity"].get<double>(), 0.98);
}

TEST(CliPipeline, ZeroSamplesIsUsageError) {
  const auto r = cli({"pipeline", "--samples", "0"});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(r.out.empty());
  EXPECT_FALSE(r.err.empty());
}

TEST(CliGate, NoiseReport) {
  auto r = cli({"gate-noise"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(r.json()["excess"]["ancilla"].get<double>(), 5.0, 1e-9);
  EXPECT_NEAR(r.json()["excess"]["sqz"].get<double>(), 0.0, 1e-15);

  // Squeezed to their optima, the ancilla excess is the optimal nonlinear variance.
  r = cli({"gate-noise", "--ancilla", "optimal", "--ancilla-lambda", "auto", "--sqz-var", "0.5", "--budget", "1.0"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = r.json();
  EXPECT_NEAR(j["excess"]["sqz"].get<double>(), 3.375, 1e-12);
  EXPECT_NEAR(j["excess"]["ancilla"].get<double>(), 1.409, 2e-3);
  EXPECT_TRUE(j.contains("required_ancilla_db"));
  const auto vac = cli({"gate-noise", "--ancilla-lambda", "auto"});
  EXPECT_NEAR(vac.json()["excess"]["ancilla"].get<double>(), vacuum_optimum(1.0, 3).variance, 1e-6);

  const auto db = cli({"gate-noise", "--sqz-db", "3.0103"});
  EXPECT_NEAR(db.json()["sqz_var"].get<double>(), 0.25, 1e-4);
}

TEST(CliConfig, FileValuesAndOverrides) {
  TempDir dir;
  const auto cfg = dir.file("c.json");
  write_json(cfg, Json{{"kappa", 2.0}, {"nlsq", {{"fock", 1}}}});

  const auto from_file = cli({"--config", cfg, "nlsq"});
  ASSERT_EQ(from_file.code, 0) << from_file.err;
  EXPECT_DOUBLE_EQ(from_file.json()["kappa"].get<double>(), 2.0);
  // kappa cancels in the ratio.
  EXPECT_NEAR(from_file.json()["ratio"].get<double>(), 3.0, 1e-6);

  const auto overridden = cli({"--config", cfg, "nlsq", "--kappa", "1", "--vacuum", "--fock", "-1"});
  ASSERT_EQ(overridden.code, 0) << overridden.err;
  EXPECT_DOUBLE_EQ(overridden.json()["kappa"].get<double>(), 1.0);
  EXPECT_NEAR(overridden.json()["ratio"].get<double>(), 1.0, 1e-9);

  const auto after_sub = cli({"nlsq", "--config", cfg, "--kappa", "3"});
  ASSERT_EQ(after_sub.code, 0) << after_sub.err;
  EXPECT_DOUBLE_EQ(after_sub.json()["kappa"].get<double>(), 3.0);
}

TEST(CliConfig, ListValues) {
  TempDir dir;
  const auto cfg = dir.file("c.json");
  write_json(cfg, Json{{"sweep", {{"loss", {0.5}}, {"theta-steps", 3}}}});
  const auto r = cli({"--config", cfg, "sweep"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = read_csv_rows(r.out);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto &row : rows) EXPECT_DOUBLE_EQ(row[2], 0.5);

  const auto over = cli({"--config", cfg, "sweep", "--loss", "0", "0.25"});
  EXPECT_EQ(read_csv_rows(over.out).size(), 6u);
}

TEST(CliExitCodes, UsageErrors) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  EXPECT_EQ(cli({"nlsq"}).code, 2);
  EXPECT_EQ(cli({"nlsq", "--vacuum", "--fock", "1"}).code, 2);
  EXPECT_EQ(cli({"nlsq", "--fock", "abc"}).code, 2);
  EXPECT_EQ(cli({"nlsq", "--theta", "1", "--loss", "1.5"}).code, 2);
  EXPECT_EQ(cli({"nlsq", "--coeffs", "(1,"}).code, 2);
  EXPECT_EQ(cli({"nlsq", "--coeffs", "0", "0"}).code, 2);
  EXPECT_EQ(cli({"sweep", "--theta-steps", "1"}).code, 2);
  EXPECT_EQ(cli({"gate-noise", "--sqz-var", "-1"}).code, 2);
  EXPECT_EQ(cli({"gate-noise", "--input", "fock:x"}).code, 2);
  EXPECT_EQ(cli({"traces", "--fock", "1"}).code, 2);
}

TEST(CliExitCodes, HelpSucceeds) {
  const auto r = cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("pipeline"), std::string::npos);
}

TEST(CliExitCodes, IoErrors) {
  EXPECT_EQ(cli({"reconstruct", "--data", "/nonexistent/d.csv"}).code, 4);
  EXPECT_EQ(cli({"nlsq", "--state", "/nonexistent/s.json"}).code, 4);
  EXPECT_EQ(cli({"nlsq", "--fock", "1", "-o", "/nonexistent/dir/o.json"}).code, 4);
  EXPECT_EQ(cli({"--config", "/nonexistent/c.json", "nlsq", "--vacuum"}).code, 4);
  TempDir dir;
  std::ofstream(dir.file("short.bin"), std::ios::binary) << "abc";
  EXPECT_EQ(cli({"pca", "--traces", dir.file("short.bin")}).code, 4);
}

TEST(CliExitCodes, MalformedInputsAreUsageErrors) {
  TempDir dir;
  std::ofstream(dir.file("bad.csv")) << "wrong,header\n1,2\n";
  EXPECT_EQ(cli({"reconstruct", "--data", dir.file("bad.csv")}).code, 2);
  std::ofstream(dir.file("bad.json")) << "{\"dim\": 2}";
  EXPECT_EQ(cli({"nlsq", "--state", dir.file("bad.json")}).code, 2);
}

TEST(CliExitCodes, NumericalFailure) {
  TempDir dir;
  ASSERT_EQ(cli({"traces", "--vacuum", "--events", "4000", "-o", dir.file("v.bin")}).code, 0);
  const auto r = cli({"pca", "--traces", dir.file("v.bin")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("noise"), std::string::npos);
}

} // namespace
} // namespace cvq
