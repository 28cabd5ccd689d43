// glma: theory sweeps, Monte Carlo experiments, convergence study and figure tables.
#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "glmrot/harness.hpp"

namespace {

struct Common {
  std::string config, out;
  std::vector<std::string> overrides;
  std::vector<double> alpha;
  int threads = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool verbose = false;
};

void add_common(CLI::App* sub, Common& c, bool config_required) {
  auto* opt = sub->add_option("--config", c.config, "TOML experiment file");
  if (config_required) opt->required();
  sub->add_option("--out", c.out, "output path")->required();
  sub->add_option("--set", c.overrides, "override a config field, key=value (repeatable)");
  sub->add_option("--threads", c.threads, "worker threads (GLMA_THREADS otherwise)");
  sub->add_option("--alpha", c.alpha, "restrict the alpha grid")->delimiter(',');
  sub->add_option_function<std::uint64_t>(
      "--seed", [&c](std::uint64_t s) { c.seed = s, c.seed_set = true; }, "base seed");
  sub->add_flag("--verbose,-v", c.verbose, "progress on stderr");
}

glmrot::ExperimentConfig load(const Common& c) {
  glmrot::ExperimentConfig cfg;
  if (!c.config.empty()) {
    if (!std::filesystem::exists(c.config)) throw glmrot::ConfigError("config file '" + c.config + "' does not exist");
    cfg = glmrot::read_config(c.config);
  }
  for (const auto& kv : c.overrides) glmrot::apply_override(cfg, kv);
  if (!c.alpha.empty()) cfg.alpha_grid = c.alpha;
  if (c.seed_set) cfg.base_seed = c.seed;
  return cfg;
}

void report(const std::vector<glmrot::ResultRecord>& recs, bool verbose) {
  if (!verbose) return;
  for (const auto& r : recs)
    std::cerr << "alpha=" << r.alpha << " theory_angle=" << r.theory_angle << " emp_angle=" << r.emp_angle_mean
              << " diverged=" << r.diverged << "/" << r.trials << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rotationally invariant GLM estimation: theory, experiments, convergence"};
  app.require_subcommand(1);
  Common theory, experiment, compare, convergence, figures;
  bool with_theory = false, theory_only = false;
  std::string summary;

  auto* st = app.add_subcommand("theory", "state-evolution sweep over the alpha grid");
  add_common(st, theory, true);
  auto* se = app.add_subcommand("experiment", "Monte Carlo sweep over the alpha grid");
  add_common(se, experiment, true);
  se->add_flag("--with-theory", with_theory, "fill the theory columns as well");
  auto* sc = app.add_subcommand("compare", "theory and Monte Carlo in one table");
  add_common(sc, compare, true);
  auto* sv = app.add_subcommand("convergence", "successive-distance traces and certificates per lambda2");
  add_common(sv, convergence, true);
  sv->add_option("--summary", summary, "per-(alpha, lambda2) summary CSV");
  auto* sf = app.add_subcommand("figures", "write every figure table into a directory");
  add_common(sf, figures, false);
  sf->add_flag("--theory-only", theory_only, "skip the Monte Carlo points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*st) {
      auto cfg = load(theory);
      auto recs = glmrot::run_theory_sweep(cfg);
      report(recs, theory.verbose);
      glmrot::write_results(recs, theory.out);
    } else if (*se) {
      auto cfg = load(experiment);
      auto recs = with_theory ? glmrot::run_compare_sweep(cfg, experiment.threads)
                              : glmrot::run_empirical_sweep(cfg, experiment.threads);
      report(recs, experiment.verbose);
      glmrot::write_results(recs, experiment.out);
    } else if (*sc) {
      auto cfg = load(compare);
      auto recs = glmrot::run_compare_sweep(cfg, compare.threads);
      report(recs, compare.verbose);
      glmrot::write_results(recs, compare.out);
    } else if (*sv) {
      auto cfg = load(convergence);
      auto runs = glmrot::run_convergence_study(cfg, convergence.threads);
      glmrot::atomic_write(convergence.out, glmrot::convergence_trace_csv(runs, to_string(cfg.loss)));
      if (!summary.empty()) glmrot::atomic_write(summary, glmrot::convergence_summary_csv(runs));
      for (const auto& r : runs) {
        std::cout << "alpha=" << r.alpha << " lambda2=" << r.lambda2 << " converged=" << r.converged << "/" << r.seeds
                  << " diverged=" << r.diverged << " rate=" << r.mean_rate << " angle=" << r.mean_angle
                  << " theory_angle=" << r.theory_angle;
        if (r.certified)
          std::cout << " certified_tau=" << r.certified_tau;
        else
          std::cout << " certificate=infeasible";
        std::cout << "\n";
      }
    } else if (*sf) {
      auto cfg = load(figures);
      auto paths = glmrot::generate_figures(cfg, figures.out, figures.threads, theory_only);
      for (const auto& p : paths) std::cout << p << "\n";
    }
  } catch (const glmrot::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const glmrot::InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
