#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "glmrot/harness.hpp"
#include "glmrot/io.hpp"

using namespace glmrot;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("glma_test_" + name + "_" + std::to_string(::getpid()));
  fs::create_directories(p);
  return p;
}

const char* kSmallConfig = R"(# small run
loss = "logistic"
penalty = "l2"
lambda2 = 0.1
alpha_grid = [0.5,
              1.5]   # two points
N = 50
trials = 4
base_seed = 3
[solver]
tol = 1e-9
)";

int run_cli(const std::string& args, std::string* out = nullptr) {
  fs::path log = fs::temp_directory_path() / ("glma_cli_" + std::to_string(::getpid()) + ".log");
  std::string cmd = std::string(GLMA_EXE) + " " + args + " > " + log.string() + " 2>&1";
  int rc = std::system(cmd.c_str());
  if (out) *out = read_file(log.string());
  fs::remove(log);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Toml, ParsesScalarsArraysAndSections) {
  TomlTable t = parse_toml(kSmallConfig, "small.toml");
  EXPECT_EQ(t.at("loss").str, "logistic");
  EXPECT_EQ(t.at("lambda2").num, 0.1);
  ASSERT_EQ(t.at("alpha_grid").arr.size(), 2u);
  EXPECT_EQ(t.at("alpha_grid").arr[1], 1.5);
  EXPECT_TRUE(t.at("N").integral);
  EXPECT_FALSE(t.at("lambda2").integral);
  EXPECT_EQ(t.at("solver.tol").num, 1e-9);
  EXPECT_EQ(t.at("solver.tol").line, 11);
}

TEST(Toml, ErrorsCarryLineNumbers) {
  try {
    parse_toml("a = 1\nb = [1, 2\nc = oops\n", "f.toml");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("f.toml:"), std::string::npos) << e.what();
  }
  try {
    parse_toml("a = 1\na = 2\n", "dup.toml");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("dup.toml:2"), std::string::npos) << e.what();
  }
}

TEST(Config, SectionKeysMapToFields) {
  ExperimentConfig c = config_from_table(parse_toml(kSmallConfig, "small.toml"), "small.toml");
  EXPECT_EQ(c.loss, FunctionKind::Logistic);
  EXPECT_EQ(c.N, 50);
  EXPECT_EQ(c.trials, 4);
  EXPECT_EQ(c.base_seed, 3u);
  EXPECT_EQ(c.solver_tol, 1e-9);
  EXPECT_EQ(c.alpha_grid, (std::vector<double>{0.5, 1.5}));
}

TEST(Config, MissingRequiredFieldIsNamed) {
  try {
    config_from_table(parse_toml("loss = \"square\"\nalpha_grid = [1]\n"), "m.toml");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("penalty"), std::string::npos) << e.what();
  }
  try {
    config_from_table(parse_toml("loss = \"square\"\npenalty = \"l2\"\nalpha_grid = [1]\nlamda2 = 3\n"), "m.toml");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("lamda2"), std::string::npos) << e.what();
  }
  try {
    config_from_table(parse_toml("loss = \"square\"\npenalty = \"l2\"\nalpha_grid = [1]\nrho = 2\n"), "m.toml");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("rho"), std::string::npos) << e.what();
  }
}

TEST(Config, OverridesAndRoundTrip) {
  ExperimentConfig c = config_from_table(parse_toml(kSmallConfig));
  apply_override(c, "penalty=elastic_net");
  apply_override(c, "lambda1=0.2");
  apply_override(c, "alpha_grid=0.25,0.75,2");
  apply_override(c, "solver.max_iter=77");
  EXPECT_EQ(c.penalty, FunctionKind::ElasticNet);
  EXPECT_EQ(c.lambda1, 0.2);
  EXPECT_EQ(c.alpha_grid, (std::vector<double>{0.25, 0.75, 2.0}));
  EXPECT_EQ(c.solver_max_iter, 77);
  EXPECT_THROW(apply_override(c, "trials=1.5"), ConfigError);
  EXPECT_THROW(apply_override(c, "nonsense"), ConfigError);
  ExperimentConfig back = config_from_table(parse_toml(config_to_toml(c)));
  EXPECT_EQ(config_to_toml(back), config_to_toml(c));
}

TEST(Numbers, FormatIsShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0, 123456789.0}) EXPECT_EQ(parse_double(format_double(v)), v);
  EXPECT_EQ(format_double(NAN), "nan");
  EXPECT_EQ(format_double(-INFINITY), "-inf");
  EXPECT_TRUE(std::isnan(parse_double("nan")));
}

TEST(Csv, HeaderIsExact) {
  std::string csv = results_to_csv({});
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "alpha,theory_angle,theory_mse,theory_mx,theory_qx,theory_free_energy,emp_angle_mean,emp_angle_stderr,"
            "emp_mse_mean,emp_mse_stderr,emp_qx_mean,emp_mx_mean,trials,diverged,solver_iters_mean,se_converged");
  EXPECT_EQ(kResultColumns.size(), 16u);
}

TEST(Csv, RoundTripIsByteIdentical) {
  std::vector<ResultRecord> rs(3);
  for (int i = 0; i < 3; ++i) {
    rs[i].alpha = 0.1 * (i + 1) + 1e-17;
    rs[i].theory_angle = std::acos(0.3 * i);
    rs[i].emp_mse_mean = 1.0 / (i + 3);
    rs[i].trials = 10 + i;
    rs[i].diverged = i;
    rs[i].se_converged = i % 2;
  }
  rs[1].theory_free_energy = INFINITY;
  std::string a = results_to_csv(rs);
  auto back = results_from_csv(a);
  EXPECT_EQ(results_to_csv(back), a);
  EXPECT_EQ(back[0].alpha, rs[0].alpha);
  EXPECT_TRUE(std::isnan(back[2].emp_angle_mean));

  fs::path dir = scratch_dir("csv");
  std::string path = (dir / "sub" / "r.csv").string();
  write_results(rs, path);
  EXPECT_EQ(read_file(path), a);
  EXPECT_EQ(results_to_csv(read_results(path)), a);
  fs::remove_all(dir);
}

TEST(Csv, MalformedInputIsRejected) {
  std::string good = results_to_csv(std::vector<ResultRecord>(1));
  std::string bad_field = good;
  bad_field.replace(bad_field.find('\n') + 1, 1, "x");
  EXPECT_THROW(results_from_csv(bad_field), std::exception);
  EXPECT_THROW(results_from_csv("alpha,beta\n1,2\n"), std::exception);
}

TEST(Harness, EmpiricalSweepIsDeterministic) {
  ExperimentConfig c = config_from_table(parse_toml(kSmallConfig));
  auto a = run_empirical_sweep(c, 1), b = run_empirical_sweep(c, 2);
  EXPECT_EQ(results_to_csv(a), results_to_csv(b));
  for (const auto& r : a) {
    EXPECT_EQ(r.trials, 4);
    EXPECT_GE(r.diverged, 0);
    EXPECT_LE(r.diverged, r.trials);
    EXPECT_GT(r.emp_angle_mean, 0.0);
    EXPECT_LT(r.emp_angle_mean, M_PI / 2);
  }
  EXPECT_EQ(make_instance(c, 0.5, 2).seed, make_instance(c, 0.5, 2).seed);
  EXPECT_NE(make_instance(c, 0.5, 2).seed, make_instance(c, 1.5, 2).seed);
  EXPECT_EQ(make_instance(c, 1.5, 0).design.M(), 75);
}

TEST(Harness, Pl2ObservablesAtRidgeFixedPoint) {
  ExperimentConfig c = config_from_table(parse_toml(kSmallConfig));
  c.loss = FunctionKind::Square;
  c.N = 800;
  ScalarModel m = c.model(1.5);
  SEResult fp = se_fixed_point(m, se_initial_state());
  ASSERT_TRUE(fp.converged);
  auto inst = make_instance(c, 1.5, 0);
  GlmProblem p{&inst.design, inst.teacher.y, c.loss_spec(), c.penalty_spec(), inst.teacher.x0};
  auto r = mlvamp_solve(p);
  ASSERT_TRUE(r.converged);
  auto obs = pl2_compare(inst.teacher.x0, r.x_hat1, fp.state, m);
  ASSERT_GE(obs.size(), 4u);
  for (const auto& o : obs) {
    EXPECT_NEAR(o.deviation, std::abs(o.empirical - o.theory), 1e-12) << o.name;
    EXPECT_LE(o.deviation, 0.15 * std::max(1.0, std::abs(o.theory))) << o.name;
  }
}

TEST(Cli, ExitCodesAndOutputs) {
  fs::path dir = scratch_dir("cli");
  std::string log;
  EXPECT_EQ(run_cli("theory --config " + (dir / "missing.toml").string() + " --out " + (dir / "x.csv").string(), &log),
            2);
  EXPECT_NE(log.find("missing.toml"), std::string::npos) << log;
  EXPECT_EQ(run_cli("theory", &log), 2);

  std::string cfg = (dir / "c.toml").string();
  { std::ofstream(cfg) << kSmallConfig; }
  std::string out = (dir / "t.csv").string();
  ASSERT_EQ(run_cli("theory --config " + cfg + " --out " + out + " --alpha 0.5", &log), 0) << log;
  auto rows = read_results(out);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].alpha, 0.5);
  EXPECT_EQ(rows[0].se_converged, 1);

  EXPECT_EQ(run_cli("theory --config " + cfg + " --out " + out + " --set rho=3", &log), 2);
  EXPECT_NE(log.find("rho"), std::string::npos) << log;
  fs::remove_all(dir);
}
