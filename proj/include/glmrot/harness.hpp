#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "convergence.hpp"
#include "ensembles.hpp"
#include "io.hpp"
#include "mlvamp.hpp"
#include "prox.hpp"
#include "state_evolution.hpp"

namespace glmrot {

enum class SolverKind { Mlvamp, Baseline, Both };
std::string to_string(SolverKind k);
SolverKind solver_kind_from_string(const std::string& s);

struct ExperimentConfig {
  FunctionKind loss = FunctionKind::Logistic;
  double loss_l2 = 0.0;
  FunctionKind penalty = FunctionKind::PureL2;
  double lambda1 = 0.0, lambda2 = 1e-3;
  EnsembleKind ensemble = EnsembleKind::GaussianIid;
  TeacherKind teacher = TeacherKind::Sign;
  double delta0 = 0.0;
  double rho = 1.0, sigma = 1.0;
  std::vector<double> alpha_grid;
  int N = 200;
  int trials = 100;
  std::uint64_t base_seed = 1;
  SolverKind solver = SolverKind::Mlvamp;

  double se_tol = 1e-10;
  int se_max_iter = 2000;
  double se_damping = 0.5;
  int quad_order = 60;
  int spectrum_order = 200;

  double solver_tol = 1e-8;
  int solver_max_iter = 2000;
  double solver_damping = 0.0;

  // ridge values scanned by the convergence study
  std::vector<double> lambda2_grid{0.0, 0.01, 0.05, 0.1};

  void validate() const;
  ScalarFunctionSpec loss_spec() const;
  ScalarFunctionSpec penalty_spec() const;
  TeacherSpec teacher_spec() const;
  ScalarModel model(double alpha) const;
  int rows(double alpha) const;
};

/** @brief Build a config from parsed TOML; every key must be a known field. */
ExperimentConfig config_from_table(const TomlTable& t, const std::string& origin = "<config>");
ExperimentConfig read_config(const std::string& path);
/** @brief Apply `key=value`; throws ConfigError naming the field. */
void apply_override(ExperimentConfig& cfg, const std::string& assignment);
std::string config_to_toml(const ExperimentConfig& cfg);

struct ResultRecord {
  double alpha = 0.0;
  double theory_angle = NAN, theory_mse = NAN, theory_mx = NAN, theory_qx = NAN, theory_free_energy = NAN;
  double emp_angle_mean = NAN, emp_angle_stderr = NAN, emp_mse_mean = NAN, emp_mse_stderr = NAN;
  double emp_qx_mean = NAN, emp_mx_mean = NAN;
  int trials = 0, diverged = 0;
  double solver_iters_mean = NAN;
  int se_converged = -1;  // -1: no theory run
  std::string series;     // only written by the figure tables
};

extern const std::vector<std::string> kResultColumns;

std::vector<ResultRecord> run_theory_sweep(const ExperimentConfig& cfg);
/** @brief Monte Carlo side; trial k uses seed base_seed + k. threads <= 0 picks hardware concurrency. */
std::vector<ResultRecord> run_empirical_sweep(const ExperimentConfig& cfg, int threads = 0);
/** @brief Theory and Monte Carlo for the same grid, merged row by row. */
std::vector<ResultRecord> run_compare_sweep(const ExperimentConfig& cfg, int threads = 0);

struct TrialOutcome {
  bool ok = false;
  int iterations = 0;
  double angle = NAN, mse = NAN, qx = NAN, mx = NAN;
  std::string message;
};

struct TrialInstance {
  DesignMatrix design;
  TeacherSample teacher;
  std::uint64_t seed = 0;
};
TrialInstance make_instance(const ExperimentConfig& cfg, double alpha, int trial);
TrialOutcome run_trial(const ExperimentConfig& cfg, double alpha, int trial);

std::string results_to_csv(const std::vector<ResultRecord>& records, bool with_series = false);
std::vector<ResultRecord> results_from_csv(const std::string& text);
void write_results(const std::vector<ResultRecord>& records, const std::string& path, bool with_series = false);
std::vector<ResultRecord> read_results(const std::string& path);

/** @brief Empirical average of phi(x0, x_hat) against its Gaussian-field prediction. */
struct Pl2Observable {
  std::string name;
  double empirical = NAN, theory = NAN, deviation = NAN, scale = NAN;
};
std::vector<Pl2Observable> pl2_compare(const Eigen::VectorXd& x0, const Eigen::VectorXd& x_hat,
                                       const SEState& se_star, const ScalarModel& model);

struct ConvergenceRun {
  double alpha = 0, lambda2 = 0;
  int n = 0;
  int seeds = 0, converged = 0, diverged = 0;
  double mean_rate = NAN, mean_angle = NAN;
  double theory_angle = NAN, certified_tau = NAN;
  bool certified = false;
  // trace of the first seed
  std::vector<MlvampIterate> trace;
  bool trace_diverged = false;
  double trace_rate = NAN;
};

/** @brief Sparse-penalty convergence study: every alpha of the grid against every lambda2_grid entry. */
std::vector<ConvergenceRun> run_convergence_study(const ExperimentConfig& cfg, int threads = 0);
std::string convergence_trace_csv(const std::vector<ConvergenceRun>& runs, const std::string& series);
std::string convergence_summary_csv(const std::vector<ConvergenceRun>& runs);

extern const std::vector<std::string> kTraceColumns;

int resolve_threads(int requested);

/**
 * @brief Write the CSVs behind every figure into `out_dir`; returns the paths.
 * `base` supplies N, trials, seed, solver settings and, when non-empty, the alpha grid.
 */
std::vector<std::string> generate_figures(const ExperimentConfig& base, const std::string& out_dir, int threads,
                                          bool theory_only = false);

}  // namespace glmrot
