#include <filesystem>

#include "glmrot/harness.hpp"

namespace glmrot {

namespace {

struct Series {
  std::string label;
  ExperimentConfig cfg;
};

std::vector<ResultRecord> run_series(const std::vector<Series>& ss, int threads, bool theory_only) {
  std::vector<ResultRecord> all;
  for (const auto& s : ss) {
    auto recs = theory_only ? run_theory_sweep(s.cfg) : run_compare_sweep(s.cfg, threads);
    for (auto& r : recs) {
      r.series = s.label;
      all.push_back(r);
    }
  }
  return all;
}

}  // namespace

std::vector<std::string> generate_figures(const ExperimentConfig& base, const std::string& out_dir, int threads,
                                          bool theory_only) {
  namespace fs = std::filesystem;
  std::vector<std::string> written;
  ExperimentConfig b = base;
  if (b.alpha_grid.empty())
    for (int k = 1; k <= 12; ++k) b.alpha_grid.push_back(0.25 * k);
  b.validate();
  auto emit = [&](const std::string& name, const std::vector<Series>& ss) {
    std::string path = (fs::path(out_dir) / name).string();
    write_results(run_series(ss, threads, theory_only), path, true);
    written.push_back(path);
  };

  // angle vs alpha for three losses, ridge 1e-3, dense teacher
  for (EnsembleKind e : {EnsembleKind::GaussianIid, EnsembleKind::SquaredUniform}) {
    std::vector<Series> ss;
    for (FunctionKind l : {FunctionKind::Square, FunctionKind::Hinge, FunctionKind::Logistic}) {
      ExperimentConfig c = b;
      c.ensemble = e;
      c.loss = l;
      c.loss_l2 = 0;
      c.penalty = FunctionKind::PureL2;
      c.lambda1 = 0;
      c.lambda2 = 1e-3;
      c.rho = 1.0;
      ss.push_back({to_string(l), c});
    }
    emit(e == EnsembleKind::GaussianIid ? "fig1_gaussian.csv" : "fig1_squared_uniform.csv", ss);
  }

  // sparsity of the planted vector, logistic loss
  for (EnsembleKind e : {EnsembleKind::GaussianIid, EnsembleKind::RowOrthogonal})
    for (bool l1 : {false, true}) {
      std::vector<Series> ss;
      for (double rho : {0.1, 0.5, 1.0}) {
        ExperimentConfig c = b;
        c.ensemble = e;
        c.loss = FunctionKind::Logistic;
        c.loss_l2 = 0;
        c.penalty = l1 ? FunctionKind::PureL1 : FunctionKind::PureL2;
        c.lambda1 = l1 ? 0.1 : 0.0;
        c.lambda2 = l1 ? 0.0 : 0.1;
        c.rho = rho;
        ss.push_back({"rho=" + format_double(rho), c});
      }
      emit("fig2_" + to_string(e) + (l1 ? "_l1.csv" : "_l2.csv"), ss);
    }

  // regularisation strength at rho = 0.1
  for (EnsembleKind e : {EnsembleKind::GaussianIid, EnsembleKind::RowOrthogonal})
    for (bool l1 : {false, true}) {
      std::vector<Series> ss;
      std::vector<double> lams = l1 ? std::vector<double>{0.01, 0.1, 0.5} : std::vector<double>{1e-3, 1e-2, 1e-1, 1.0};
      for (double lam : lams) {
        ExperimentConfig c = b;
        c.ensemble = e;
        c.loss = FunctionKind::Logistic;
        c.loss_l2 = 0;
        c.penalty = l1 ? FunctionKind::PureL1 : FunctionKind::PureL2;
        c.lambda1 = l1 ? lam : 0.0;
        c.lambda2 = l1 ? 0.0 : lam;
        c.rho = 0.1;
        ss.push_back({std::string(l1 ? "lambda1=" : "lambda2=") + format_double(lam), c});
      }
      emit("fig3_" + to_string(e) + (l1 ? "_l1.csv" : "_l2.csv"), ss);
    }

  // l1 against l2 on both ensembles
  {
    std::vector<Series> ss;
    for (EnsembleKind e : {EnsembleKind::GaussianIid, EnsembleKind::RowOrthogonal})
      for (bool l1 : {true, false}) {
        ExperimentConfig c = b;
        c.ensemble = e;
        c.loss = FunctionKind::Logistic;
        c.loss_l2 = 0;
        c.penalty = l1 ? FunctionKind::PureL1 : FunctionKind::PureL2;
        c.lambda1 = l1 ? 0.1 : 0.0;
        c.lambda2 = l1 ? 0.0 : 0.01;
        c.rho = 0.1;
        ss.push_back({to_string(e) + (l1 ? "_l1" : "_l2"), c});
      }
    emit("fig4.csv", ss);
  }

  // convergence traces of the sparse logistic problem
  {
    ExperimentConfig c = b;
    c.ensemble = EnsembleKind::GaussianIid;
    c.loss = FunctionKind::Logistic;
    c.loss_l2 = 0;
    c.penalty = FunctionKind::ElasticNet;
    c.lambda1 = 0.1;
    c.rho = 0.1;
    c.alpha_grid = {0.2, 1.0};
    c.trials = std::min(base.trials, 20);
    c.solver_max_iter = std::max(c.solver_max_iter, 5000);
    auto runs = run_convergence_study(c, threads);
    std::string tp = (fs::path(out_dir) / "fig5_trace.csv").string();
    atomic_write(tp, convergence_trace_csv(runs, "sparse_logistic"));
    written.push_back(tp);
    std::string sp = (fs::path(out_dir) / "fig5_summary.csv").string();
    atomic_write(sp, convergence_summary_csv(runs));
    written.push_back(sp);
  }
  return written;
}

}  // namespace glmrot
