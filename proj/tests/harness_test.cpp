#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "muskat/harness/emit.hpp"
#include "muskat/harness/run.hpp"
#include "oracles.hpp"

namespace muskat::harness {
namespace {

namespace fs = std::filesystem;
using boost::property_tree::ptree;

ptree ini(const std::string& text) {
  std::istringstream is(text);
  ptree t;
  boost::property_tree::read_ini(is, t);
  return t;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("muskat_harness_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> fields_of(const std::string& text) {
  try {
    parse_config(ini(text));
  } catch (const ConfigError& e) {
    return e.fields();
  }
  return {};
}

TEST(Config, DefaultsDependOnProblem) {
  const auto a = parse_config(ini("[experiment]\ntype = evolve\nproblem = pe1\n"));
  EXPECT_EQ(a.scheme, Scheme::kExplicitRk4);
  EXPECT_EQ(a.norms, std::vector<double>{1.75});
  const auto b = parse_config(ini("[experiment]\ntype = evolve\nproblem = pe2\n"));
  EXPECT_EQ(b.scheme, Scheme::kImexLinearlyImplicit);
  EXPECT_EQ(b.norms, std::vector<double>{2.5});
}

TEST(Config, ParsesAllSections) {
  const auto c = parse_config(ini(
      "[experiment]\ntype = decay\nproblem = pe2\nseed = 7\n"
      "[params]\nk = 2\nmu_minus = 3\nmu_plus = 1\nsigma = 0.5\ntheta = 4\n"
      "[grid]\nn = 32\nquadrature = 64\ndealias = false\n"
      "[time]\nscheme = rk4\ndt = 1e-3\nt_final = 2\noutput_every = 4\n"
      "[initial]\nmean = 0.5\nmodes = cos:1:0.01 sin:3:-0.02\nnoise = 1e-6\n"
      "[analysis]\nnorms = 0 2.5\nwindow_start = 0.5\nwindow_end = 1.5\n"));
  EXPECT_EQ(c.experiment, Experiment::kDecay);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.pe2.k, 2.0);
  EXPECT_DOUBLE_EQ(c.pe2.a_mu, 0.5);
  EXPECT_EQ(c.n, 32u);
  EXPECT_EQ(c.quadrature, 64u);
  EXPECT_FALSE(c.dealias);
  EXPECT_EQ(c.scheme, Scheme::kExplicitRk4);
  EXPECT_EQ(c.output_every, 4u);
  ASSERT_EQ(c.initial.modes.size(), 2u);
  EXPECT_FALSE(c.initial.modes[1].cosine);
  EXPECT_EQ(c.initial.modes[1].m, 3);
  EXPECT_EQ(c.initial.modes[1].amplitude, -0.02);
  EXPECT_EQ(c.norms, (std::vector<double>{0.0, 2.5}));
  EXPECT_EQ(c.window_end, 1.5);
}

TEST(Config, OddGridSizeNamesTheField) {
  EXPECT_EQ(fields_of("[grid]\nn = 33\nquadrature = 32\n"), std::vector<std::string>{"grid.n"});
}

TEST(Config, EveryViolationIsListed) {
  const auto f = fields_of(
      "[experiment]\nproblem = pe1\n[params]\nmu = -1\n[grid]\nn = 24\nquadrature = 3\n"
      "[time]\ndt = 0\n[analysis]\nnorms = -1\n[bogus]\nkey = 1\n");
  for (const std::string name : {"grid.n", "grid.quadrature", "params.mu", "time.dt",
                                 "analysis.norms", "bogus.key"})
    EXPECT_NE(std::find(f.begin(), f.end(), name), f.end()) << name;
}

TEST(Config, MalformedValuesAreFlagged) {
  EXPECT_EQ(fields_of("[time]\ndt = fast\n"), std::vector<std::string>{"time.dt"});
  EXPECT_EQ(fields_of("[grid]\nn = -64\n"), std::vector<std::string>{"grid.n"});
  EXPECT_EQ(fields_of("[initial]\nmodes = tan:1:0.1\n"), std::vector<std::string>{"initial.modes"});
  EXPECT_EQ(fields_of("[initial]\nmodes = cos:40:0.1\n"), std::vector<std::string>{"initial.modes"});
  EXPECT_EQ(fields_of("[experiment]\ntype = sweep\n"), std::vector<std::string>{"experiment.type"});
  EXPECT_EQ(fields_of("[grid]\ndealias = maybe\n"), std::vector<std::string>{"grid.dealias"});
}

TEST(Config, ExperimentSpecificChecks) {
  EXPECT_EQ(fields_of("[experiment]\ntype = instability\nproblem = pe2\n[params]\ntheta = 1\n"
                      "[instability]\namplitudes = 1e-3 1e-2\n"),
            (std::vector<std::string>{"params.theta", "instability.amplitudes"}));
  EXPECT_EQ(fields_of("[experiment]\ntype = spectrum\nproblem = scalar\n"),
            std::vector<std::string>{"experiment.problem"});
  EXPECT_EQ(fields_of("[experiment]\ntype = spectrum\n[grid]\nn = 16\n[analysis]\nm_max = 8\n"),
            std::vector<std::string>{"analysis.m_max"});
  EXPECT_EQ(fields_of("[experiment]\ntype = semiflow\n[semiflow]\nt = 0\n"),
            std::vector<std::string>{"semiflow.t"});
}

TEST(Config, OverridesAndExperimentImposition) {
  const fs::path dir = scratch_dir("overrides");
  const fs::path file = dir / "c.ini";
  std::ofstream(file) << "[experiment]\ntype = evolve\n[grid]\nn = 32\n";
  const auto c = load_config(file, {"grid.n=64", "time.dt = 0.5"});
  EXPECT_EQ(c.n, 64u);
  EXPECT_EQ(c.dt, 0.5);
  EXPECT_EQ(load_config(file, {}, Experiment::kEvolve).experiment, Experiment::kEvolve);
  EXPECT_THROW(load_config(file, {}, Experiment::kDecay), ConfigError);
  EXPECT_THROW(load_config(file, {"n=64"}), ConfigError);
  EXPECT_THROW(load_config(file, {"grid.n"}), ConfigError);
  EXPECT_THROW(load_config(dir / "missing.ini"), ConfigError);
}

TEST(Config, EveryScenarioFileIsValid) {
  const fs::path dir = fs::path(MUSKAT_SOURCE_DIR) / "scenarios";
  std::size_t count = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".ini") continue;
    EXPECT_NO_THROW(load_config(entry.path())) << entry.path();
    ++count;
  }
  EXPECT_GE(count, 10u);
}

TEST(InitialData, ModesMeanAndNoise) {
  InitialSpec s;
  s.mean = 0.5;
  s.modes = {{true, 1, 0.1}, {false, 2, 0.2}};
  const auto f = build_initial(s, 32, 0);
  for (std::size_t j = 0; j < 32; ++j) {
    const double x = GridFunction::node(32, j);
    EXPECT_NEAR(f[j], 0.5 + 0.1 * std::cos(x) + 0.2 * std::sin(2 * x), 1e-15);
  }
  s.noise = 1e-3;
  const auto a = build_initial(s, 32, 11), b = build_initial(s, 32, 11), c = build_initial(s, 32, 12);
  EXPECT_EQ(max_distance(a, b), 0.0);
  EXPECT_GT(max_distance(a, c), 0.0);
  EXPECT_LE(max_distance(a, f), 2.0 * 8 * 1e-3);
  EXPECT_NEAR(a.mean(), 0.5, 1e-15);
}

TEST(InitialData, FileValues) {
  const fs::path dir = scratch_dir("initial");
  {
    std::ofstream os(dir / "f.txt");
    os << "# sixteen values\n";
    for (int j = 0; j < 16; ++j) os << 0.01 * j << '\n';
  }
  InitialSpec s;
  s.file = "f.txt";
  const auto f = build_initial(s, 16, 0, dir);
  EXPECT_DOUBLE_EQ(f[5], 0.05);
  EXPECT_THROW(build_initial(s, 32, 0, dir), ConfigError);
  s.file = "absent.txt";
  EXPECT_THROW(build_initial(s, 16, 0, dir), ConfigError);
}

TEST(ScalarModel, ExactSolutionMatchesOracle) {
  for (double t : {0.0, 0.1, 0.5, 2.0})
    EXPECT_NEAR(scalar_model_exact(1.0, 1.0, 1.0, t), oracle::scalar_model(1.0, t), 1e-15);
  EXPECT_NEAR(scalar_model_exact(2.0, 0.0, 3.0, 0.7), 3.0 * std::exp(-1.4), 1e-15);
}

ExperimentConfig small(const std::string& text) { return parse_config(ini(text)); }

TEST(Run, SpectrumRecord) {
  const auto rec = run(small("[experiment]\ntype = spectrum\n[grid]\nn = 32\n[analysis]\nm_max = 4\n"));
  EXPECT_EQ(rec.payload["verdict"], "stable");
  EXPECT_EQ(rec.payload["matrix_size"], 30);
  EXPECT_LT(rec.payload["max_relative_error"].get<double>(), 1e-6);
  const auto& t = rec.table("spectrum");
  EXPECT_EQ(t.columns, (std::vector<std::string>{"m", "analytic", "numerical_re", "numerical_im",
                                                  "relative_error"}));
  EXPECT_EQ(t.rows.size(), 8u);
  EXPECT_EQ(rec.table("eigenvalues").rows.size(), 30u);
}

TEST(Run, DecayRecordColumns) {
  const auto rec = run(small("[experiment]\ntype = decay\n[grid]\nn = 32\n[time]\ndt = 0.02\n"
                             "t_final = 1\n[initial]\nmodes = cos:1:0.01\n[analysis]\nnorms = 0 1.75\n"));
  EXPECT_EQ(rec.table("trajectory").columns,
            (std::vector<std::string>{"t", "mean", "max_abs", "H0", "H1.75"}));
  EXPECT_EQ(rec.table("trajectory").rows.size(), 51u);
  EXPECT_EQ(rec.payload["fits"].size(), 2u);
  EXPECT_NEAR(rec.payload["fits"][1]["rate"].get<double>(), 1.0, 0.05);
  EXPECT_TRUE(rec.payload["reached_t_final"].get<bool>());
}

TEST(Run, OperatorsAndSemiflow) {
  const auto q = run(small("[experiment]\ntype = operators\n[grid]\nn = 32\n"
                           "[operators]\nfunctions = cos:1:0.1 | cos:2:0.1 sin:1:0.05\n"));
  EXPECT_LT(q.payload["max_residual"].get<double>(), 1e-12);
  const auto h = run(small("[experiment]\ntype = operators\n[grid]\nn = 32\n[analysis]\nm_max = 8\n"
                           "[operators]\ncheck = hilbert\n"));
  EXPECT_LT(h.payload["max_residual"].get<double>(), 1e-12);
  const auto s = run(small("[experiment]\ntype = semiflow\n[grid]\nn = 16\n[time]\ndt = 0.05\n"
                           "[initial]\nmodes = cos:1:0.05\n[semiflow]\ns = 0.2\nt = 0.3\n"));
  EXPECT_TRUE(s.payload["within_10x"].get<bool>());
}

TEST(Run, NumericalErrorsKeepTypeAndGainContext) {
  try {
    run(small("[experiment]\ntype = picard\nproblem = scalar\n[time]\nt_final = 3\n"
              "[picard]\nmax_iter = 2\ntol = 1e-14\n"));
    FAIL();
  } catch (const NonConvergenceError& e) {
    EXPECT_EQ(e.defects().size(), 2u);
    EXPECT_NE(std::string(e.what()).find("picard experiment"), std::string::npos);
  }
}

TEST(Emit, CsvAndJsonLayout) {
  const fs::path dir = scratch_dir("emit");
  const auto rec = run(small("[experiment]\ntype = evolve\n[grid]\nn = 16\n[time]\ndt = 0.1\n"
                             "t_final = 0.3\n[initial]\nmodes = cos:1:0.1\n"));
  const auto written = emit(rec, dir);
  EXPECT_EQ(written.size(), 3u);
  const std::string csv = slurp(dir / "trajectory.csv");
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,mean,max_abs,H1.75");
  EXPECT_EQ(csv.back(), '\n');
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);

  const auto j = Json::parse(slurp(dir / "result.json"));
  EXPECT_EQ(j["schema_version"], kSchemaVersion);
  EXPECT_EQ(j["experiment"], "evolve");
  EXPECT_EQ(j["config"]["grid"]["n"], 16);
  EXPECT_EQ(j["tables"][0]["file"], "trajectory.csv");
  EXPECT_TRUE(j["wall_seconds"].is_number());
}

TEST(Emit, IdenticalConfigsGiveIdenticalTables) {
  const std::string text = "[experiment]\ntype = decay\nseed = 5\n[grid]\nn = 32\n[time]\ndt = 0.05\n"
                           "t_final = 0.5\n[initial]\nmodes = cos:1:0.02\nnoise = 1e-3\n";
  const fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
  emit(run(small(text)), a);
  emit(run(small(text)), b);
  for (const std::string name : {"trajectory.csv", "final_state.csv", "fits.csv"})
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  auto strip = [](Json j) {
    j.erase("wall_seconds");
    return j.dump();
  };
  EXPECT_EQ(strip(Json::parse(slurp(a / "result.json"))), strip(Json::parse(slurp(b / "result.json"))));
}

TEST(Emit, UnwritableDirectoryNamesThePath) {
  const fs::path dir = scratch_dir("blocked");
  std::ofstream(dir / "file") << "x";
  const auto rec = run(small("[experiment]\ntype = operators\n[grid]\nn = 16\n[analysis]\nm_max = 2\n"
                             "[operators]\ncheck = hilbert\n"));
  try {
    emit(rec, dir / "file" / "sub");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("file"), std::string::npos);
  }
}

int cli(const std::string& args) {
  const std::string cmd = std::string(MUSKAT_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch_dir("cli");
  const fs::path good = dir / "good.ini";
  std::ofstream(good) << "[grid]\nn = 16\n[time]\ndt = 0.1\nt_final = 0.2\n[initial]\nmodes = cos:1:0.1\n";
  EXPECT_EQ(cli("evolve --config " + good.string() + " --out " + (dir / "o").string() + " --threads 1"), 0);
  EXPECT_TRUE(fs::exists(dir / "o" / "result.json"));
  EXPECT_EQ(cli("evolve --config " + good.string() + " --set grid.n=17 --out " + (dir / "o").string()), 2);
  EXPECT_EQ(cli("decay --config " + (dir / "absent.ini").string()), 2);
  EXPECT_EQ(cli("evolve"), 2);
  EXPECT_EQ(cli("frobnicate --config " + good.string()), 2);

  const fs::path bad = dir / "diverge.ini";
  std::ofstream(bad) << "[experiment]\nproblem = scalar\n[time]\nt_final = 3\n"
                        "[picard]\nmax_iter = 2\ntol = 1e-14\n";
  EXPECT_EQ(cli("picard --config " + bad.string() + " --out " + (dir / "p").string()), 3);
}

}  // namespace
}  // namespace muskat::harness
