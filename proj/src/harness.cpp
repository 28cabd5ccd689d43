#include "glmrot/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "glmrot/baseline.hpp"

namespace glmrot {

std::string to_string(SolverKind k) {
  switch (k) {
    case SolverKind::Mlvamp: return "mlvamp";
    case SolverKind::Baseline: return "baseline";
    case SolverKind::Both: return "both";
  }
  return "?";
}

SolverKind solver_kind_from_string(const std::string& s) {
  if (s == "mlvamp") return SolverKind::Mlvamp;
  if (s == "baseline") return SolverKind::Baseline;
  if (s == "both") return SolverKind::Both;
  throw InvalidInput("unknown solver '" + s + "'");
}

// ---------------------------------------------------------------- config

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ConfigError("field '" + field + "': " + what);
  };
  need(!alpha_grid.empty(), "alpha_grid", "must not be empty");
  for (double a : alpha_grid) need(a > 0.0 && std::isfinite(a), "alpha_grid", "entries must be positive");
  need(trials >= 1, "trials", "must be at least 1");
  need(N >= 50, "N", "must be at least 50");
  need(rho > 0.0 && rho <= 1.0, "rho", "must lie in (0, 1]");
  need(sigma > 0.0, "sigma", "must be positive");
  need(lambda1 >= 0.0, "lambda1", "must be non-negative");
  need(lambda2 >= 0.0, "lambda2", "must be non-negative");
  need(loss_l2 >= 0.0, "loss_l2", "must be non-negative");
  need(delta0 >= 0.0, "delta0", "must be non-negative");
  need(se_tol > 0.0, "se_tol", "must be positive");
  need(se_max_iter >= 1, "se_max_iter", "must be at least 1");
  need(se_damping >= 0.0 && se_damping < 1.0, "se_damping", "must lie in [0, 1)");
  need(quad_order >= 8, "quad_order", "must be at least 8");
  need(spectrum_order >= 16, "spectrum_order", "must be at least 16");
  need(solver_tol > 0.0, "solver_tol", "must be positive");
  need(solver_max_iter >= 1, "solver_max_iter", "must be at least 1");
  need(solver_damping >= 0.0 && solver_damping < 1.0, "solver_damping", "must lie in [0, 1)");
  for (double l : lambda2_grid) need(l >= 0.0, "lambda2_grid", "entries must be non-negative");
  need(loss_spec().is_loss(), "loss", "must be square, logistic or hinge");
  need(!penalty_spec().is_loss(), "penalty", "must be elastic_net, l1 or l2");
  need(ensemble != EnsembleKind::Empirical, "ensemble", "must be a sampled ensemble");
}

ScalarFunctionSpec ExperimentConfig::loss_spec() const { return {loss, 0.0, loss_l2, 0.0}; }

ScalarFunctionSpec ExperimentConfig::penalty_spec() const {
  switch (penalty) {
    case FunctionKind::PureL1: return pure_l1(lambda1);
    case FunctionKind::PureL2: return pure_l2(lambda2);
    default: return {penalty, lambda1, lambda2, 0.0};
  }
}

TeacherSpec ExperimentConfig::teacher_spec() const {
  TeacherSpec t;
  t.kind = teacher;
  t.delta0 = delta0;
  t.prior.rho = rho;
  t.prior.sigma = sigma;
  return t;
}

ScalarModel ExperimentConfig::model(double alpha) const {
  ScalarModel m;
  m.spectrum = spectral_density(ensemble, alpha, spectrum_order);
  m.teacher = teacher_spec();
  m.loss = loss_spec();
  m.penalty = penalty_spec();
  m.quad_order = quad_order;
  return m;
}

int ExperimentConfig::rows(double alpha) const { return std::max(1, int(std::lround(alpha * N))); }

namespace {

const std::set<std::string> kStringFields{"loss", "penalty", "ensemble", "teacher", "solver"};
const std::set<std::string> kArrayFields{"alpha_grid", "lambda2_grid"};

std::string field_name(std::string key) {
  std::replace(key.begin(), key.end(), '.', '_');
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

long long as_int(const TomlValue& v, const std::string& key) {
  if (v.type != TomlValue::Number || !v.integral) throw ConfigError("field '" + key + "': expected an integer");
  long long x = 0;
  auto [p, ec] = std::from_chars(v.str.data() + (v.str[0] == '+'), v.str.data() + v.str.size(), x);
  if (ec != std::errc() || p != v.str.data() + v.str.size()) throw ConfigError("field '" + key + "': integer out of range");
  return x;
}

double as_num(const TomlValue& v, const std::string& key) {
  if (v.type != TomlValue::Number) throw ConfigError("field '" + key + "': expected a number");
  return v.num;
}

std::string as_str(const TomlValue& v, const std::string& key) {
  if (v.type != TomlValue::String) throw ConfigError("field '" + key + "': expected a string");
  return v.str;
}

void assign(ExperimentConfig& c, const std::string& raw_key, const TomlValue& v) {
  const std::string key = field_name(raw_key);
  try {
    if (key == "loss") c.loss = function_kind_from_string(as_str(v, key));
    else if (key == "loss_l2") c.loss_l2 = as_num(v, key);
    else if (key == "penalty") c.penalty = function_kind_from_string(as_str(v, key));
    else if (key == "lambda1") c.lambda1 = as_num(v, key);
    else if (key == "lambda2") c.lambda2 = as_num(v, key);
    else if (key == "ensemble") c.ensemble = ensemble_kind_from_string(as_str(v, key));
    else if (key == "teacher") c.teacher = teacher_kind_from_string(as_str(v, key));
    else if (key == "delta0") c.delta0 = as_num(v, key);
    else if (key == "rho") c.rho = as_num(v, key);
    else if (key == "sigma") c.sigma = as_num(v, key);
    else if (key == "alpha_grid" || key == "lambda2_grid") {
      std::vector<double> xs;
      if (v.type == TomlValue::Array) xs = v.arr;
      else if (v.type == TomlValue::Number) xs = {v.num};
      else throw ConfigError("field '" + key + "': expected an array of numbers");
      (key == "alpha_grid" ? c.alpha_grid : c.lambda2_grid) = xs;
    } else if (key == "N") c.N = int(as_int(v, key));
    else if (key == "trials") c.trials = int(as_int(v, key));
    else if (key == "base_seed") {
      long long s = as_int(v, key);
      if (s < 0) throw ConfigError("field 'base_seed': must be non-negative");
      c.base_seed = std::uint64_t(s);
    } else if (key == "solver") c.solver = solver_kind_from_string(as_str(v, key));
    else if (key == "se_tol") c.se_tol = as_num(v, key);
    else if (key == "se_max_iter") c.se_max_iter = int(as_int(v, key));
    else if (key == "se_damping") c.se_damping = as_num(v, key);
    else if (key == "quad_order") c.quad_order = int(as_int(v, key));
    else if (key == "spectrum_order") c.spectrum_order = int(as_int(v, key));
    else if (key == "solver_tol") c.solver_tol = as_num(v, key);
    else if (key == "solver_max_iter") c.solver_max_iter = int(as_int(v, key));
    else if (key == "solver_damping") c.solver_damping = as_num(v, key);
    else throw ConfigError("unknown field '" + raw_key + "'");
  } catch (const InvalidInput& e) {
    throw ConfigError("field '" + key + "': " + e.what());
  }
}

}  // namespace

ExperimentConfig config_from_table(const TomlTable& t, const std::string& origin) {
  ExperimentConfig c;
  for (const char* req : {"loss", "penalty", "alpha_grid"}) {
    bool found = false;
    for (const auto& [k, v] : t) found = found || field_name(k) == req;
    if (!found) throw ConfigError(origin + ": missing required field '" + std::string(req) + "'");
  }
  for (const auto& [k, v] : t) {
    try {
      assign(c, k, v);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(v.line) + ": " + e.what());
    }
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return c;
}

ExperimentConfig read_config(const std::string& path) { return config_from_table(read_toml_file(path), path); }

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  std::string key = assignment.substr(0, eq), rhs = assignment.substr(eq + 1);
  std::string name = field_name(key);
  TomlValue v;
  if (kStringFields.count(name) && (rhs.empty() || rhs.front() != '"')) {
    v.type = TomlValue::String;
    v.str = rhs;
  } else if (kArrayFields.count(name) && (rhs.empty() || rhs.front() != '[')) {
    v = parse_toml_value("[" + rhs + "]");
  } else {
    try {
      v = parse_toml_value(rhs);
    } catch (const ConfigError& e) {
      throw ConfigError("override for field '" + key + "': " + e.what());
    }
  }
  assign(cfg, key, v);
}

std::string config_to_toml(const ExperimentConfig& c) {
  std::ostringstream o;
  auto arr = [](const std::vector<double>& xs) {
    std::string s = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + format_double(xs[i]);
    return s + "]";
  };
  o << "loss = \"" << to_string(c.loss) << "\"\n";
  o << "loss_l2 = " << format_double(c.loss_l2) << "\n";
  o << "penalty = \"" << to_string(c.penalty) << "\"\n";
  o << "lambda1 = " << format_double(c.lambda1) << "\n";
  o << "lambda2 = " << format_double(c.lambda2) << "\n";
  o << "ensemble = \"" << to_string(c.ensemble) << "\"\n";
  o << "teacher = \"" << to_string(c.teacher) << "\"\n";
  o << "delta0 = " << format_double(c.delta0) << "\n";
  o << "rho = " << format_double(c.rho) << "\n";
  o << "sigma = " << format_double(c.sigma) << "\n";
  o << "alpha_grid = " << arr(c.alpha_grid) << "\n";
  o << "N = " << c.N << "\n";
  o << "trials = " << c.trials << "\n";
  o << "base_seed = " << c.base_seed << "\n";
  o << "solver = \"" << to_string(c.solver) << "\"\n";
  o << "se_tol = " << format_double(c.se_tol) << "\n";
  o << "se_max_iter = " << c.se_max_iter << "\n";
  o << "se_damping = " << format_double(c.se_damping) << "\n";
  o << "quad_order = " << c.quad_order << "\n";
  o << "spectrum_order = " << c.spectrum_order << "\n";
  o << "solver_tol = " << format_double(c.solver_tol) << "\n";
  o << "solver_max_iter = " << c.solver_max_iter << "\n";
  o << "solver_damping = " << format_double(c.solver_damping) << "\n";
  o << "lambda2_grid = " << arr(c.lambda2_grid) << "\n";
  return o.str();
}

// ---------------------------------------------------------------- pool

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GLMA_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  int nt = std::max(1, std::min<int>(resolve_threads(threads), int(n)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex mu;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> g(mu);
        if (!err) err = std::current_exception();
        next = n;
      }
    }
  };
  if (nt == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace

// ---------------------------------------------------------------- sweeps

std::vector<ResultRecord> run_theory_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<ResultRecord> out(cfg.alpha_grid.size());
  parallel_for(out.size(), 0, [&](std::size_t i) {
    ResultRecord& r = out[i];
    r.alpha = cfg.alpha_grid[i];
    r.se_converged = 0;
    try {
      ScalarModel m = cfg.model(r.alpha);
      SEConfig sc;
      sc.tol = cfg.se_tol;
      sc.max_iter = cfg.se_max_iter;
      sc.damping = cfg.se_damping;
      SEResult fp = se_fixed_point(m, se_initial_state(), sc);
      Macroscopics mc = overlaps_and_errors(m, fp.state);
      r.theory_angle = mc.angle;
      r.theory_mse = mc.mse;
      r.theory_mx = mc.m_x;
      r.theory_qx = mc.q_x;
      r.theory_free_energy = free_energy(m, fp.state);
      r.se_converged = fp.converged ? 1 : 0;
    } catch (const std::runtime_error&) {
      // flagged through se_converged = 0
    } catch (const InvalidInput&) {
    }
  });
  return out;
}

TrialInstance make_instance(const ExperimentConfig& cfg, double alpha, int trial) {
  TrialInstance inst;
  std::uint64_t s = cfg.base_seed + std::uint64_t(trial);
  inst.seed = splitmix64(splitmix64(s) ^ std::bit_cast<std::uint64_t>(alpha));
  inst.design = sample_design(cfg.ensemble, cfg.rows(alpha), cfg.N, inst.seed);
  inst.teacher = sample_teacher(cfg.teacher_spec(), inst.design, splitmix64(inst.seed + 1));
  return inst;
}

TrialOutcome run_trial(const ExperimentConfig& cfg, double alpha, int trial) {
  TrialOutcome o;
  TrialInstance inst = make_instance(cfg, alpha, trial);
  GlmProblem p{&inst.design, inst.teacher.y, cfg.loss_spec(), cfg.penalty_spec(), inst.teacher.x0};
  Eigen::VectorXd xh;
  try {
    if (cfg.solver != SolverKind::Baseline) {
      MlvampConfig mc;
      mc.max_iter = cfg.solver_max_iter;
      mc.tol = cfg.solver_tol;
      mc.damping = cfg.solver_damping;
      mc.seed = splitmix64(inst.seed + 2);
      mc.record_trace = false;
      MlvampResult r = mlvamp_solve(p, mc);
      o.iterations = r.iterations;
      if (r.converged) {
        xh = r.x_hat1;
        o.ok = true;
      } else {
        o.message = r.message;
      }
    }
    if (!o.ok && cfg.solver != SolverKind::Mlvamp) {
      BaselineConfig bc;
      bc.tol = cfg.solver_tol;
      BaselineResult b = baseline_solve(p, bc);
      o.iterations = b.iterations;
      if (b.converged) {
        xh = b.x;
        o.ok = true;
      } else {
        o.message = "baseline did not reach tolerance";
      }
    }
  } catch (const std::runtime_error& e) {
    o.ok = false;
    o.message = e.what();
  }
  if (o.ok) {
    const Eigen::VectorXd& x0 = inst.teacher.x0;
    double n = double(cfg.N);
    o.angle = angle_between(x0, xh);
    o.mse = (xh - x0).squaredNorm() / n;
    o.qx = xh.squaredNorm() / n;
    o.mx = x0.dot(xh) / n;
  }
  return o;
}

std::vector<ResultRecord> run_empirical_sweep(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  const std::size_t A = cfg.alpha_grid.size(), T = std::size_t(cfg.trials);
  std::vector<TrialOutcome> res(A * T);
  parallel_for(res.size(), threads, [&](std::size_t k) {
    res[k] = run_trial(cfg, cfg.alpha_grid[k / T], int(k % T));
  });
  std::vector<ResultRecord> out(A);
  for (std::size_t a = 0; a < A; ++a) {
    ResultRecord& r = out[a];
    r.alpha = cfg.alpha_grid[a];
    r.trials = cfg.trials;
    std::vector<double> ang, mse;
    double qx = 0, mx = 0, it = 0;
    for (std::size_t t = 0; t < T; ++t) {
      const TrialOutcome& o = res[a * T + t];
      if (!o.ok) {
        ++r.diverged;
        continue;
      }
      ang.push_back(o.angle);
      mse.push_back(o.mse);
      qx += o.qx;
      mx += o.mx;
      it += o.iterations;
    }
    const std::size_t n = ang.size();
    if (n == 0) continue;
    auto mean_se = [n](const std::vector<double>& v, double& mean, double& se) {
      mean = 0;
      for (double x : v) mean += x;
      mean /= double(n);
      double ss = 0;
      for (double x : v) ss += (x - mean) * (x - mean);
      se = n > 1 ? std::sqrt(ss / double(n - 1)) / std::sqrt(double(n)) : 0.0;
    };
    mean_se(ang, r.emp_angle_mean, r.emp_angle_stderr);
    mean_se(mse, r.emp_mse_mean, r.emp_mse_stderr);
    r.emp_qx_mean = qx / double(n);
    r.emp_mx_mean = mx / double(n);
    r.solver_iters_mean = it / double(n);
  }
  return out;
}

std::vector<ResultRecord> run_compare_sweep(const ExperimentConfig& cfg, int threads) {
  std::vector<ResultRecord> th = run_theory_sweep(cfg);
  std::vector<ResultRecord> em = run_empirical_sweep(cfg, threads);
  for (std::size_t i = 0; i < em.size(); ++i) {
    em[i].theory_angle = th[i].theory_angle;
    em[i].theory_mse = th[i].theory_mse;
    em[i].theory_mx = th[i].theory_mx;
    em[i].theory_qx = th[i].theory_qx;
    em[i].theory_free_energy = th[i].theory_free_energy;
    em[i].se_converged = th[i].se_converged;
  }
  return em;
}

// ---------------------------------------------------------------- CSV

const std::vector<std::string> kResultColumns{
    "alpha",         "theory_angle",     "theory_mse",   "theory_mx",    "theory_qx",  "theory_free_energy",
    "emp_angle_mean", "emp_angle_stderr", "emp_mse_mean", "emp_mse_stderr", "emp_qx_mean", "emp_mx_mean",
    "trials",        "diverged",         "solver_iters_mean", "se_converged"};

std::string results_to_csv(const std::vector<ResultRecord>& records, bool with_series) {
  std::vector<const ResultRecord*> rows;
  for (const auto& r : records) rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRecord* a, const ResultRecord* b) {
    return a->series != b->series ? a->series < b->series : a->alpha < b->alpha;
  });
  std::string s;
  if (with_series) s += "series,";
  for (std::size_t i = 0; i < kResultColumns.size(); ++i) s += (i ? "," : "") + kResultColumns[i];
  s += "\n";
  for (const ResultRecord* r : rows) {
    if (with_series) {
      if (r->series.find_first_of(",\n\"") != std::string::npos)
        throw InvalidInput("series label '" + r->series + "' contains CSV delimiters");
      s += r->series + ",";
    }
    const double vals[] = {r->alpha,           r->theory_angle,     r->theory_mse,    r->theory_mx,
                           r->theory_qx,       r->theory_free_energy, r->emp_angle_mean, r->emp_angle_stderr,
                           r->emp_mse_mean,    r->emp_mse_stderr,   r->emp_qx_mean,   r->emp_mx_mean};
    for (double v : vals) s += format_double(v) + ",";
    s += std::to_string(r->trials) + "," + std::to_string(r->diverged) + ",";
    s += format_double(r->solver_iters_mean) + ",";
    s += r->se_converged < 0 ? std::string("nan") : std::to_string(r->se_converged);
    s += "\n";
  }
  return s;
}

std::vector<ResultRecord> results_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("results file is empty");
  auto header = split_csv_line(line);
  bool with_series = !header.empty() && header[0] == "series";
  std::vector<std::string> expect = kResultColumns;
  if (with_series) expect.insert(expect.begin(), "series");
  if (header != expect) throw ConfigError("line 1: header does not match the results schema");
  std::vector<ResultRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv_line(line);
    if (f.size() != expect.size())
      throw ConfigError("line " + std::to_string(lineno) + ": expected " + std::to_string(expect.size()) +
                        " fields, got " + std::to_string(f.size()));
    std::size_t k = 0;
    ResultRecord r;
    if (with_series) r.series = f[k++];
    auto num = [&](const char* name) {
      try {
        return parse_double(f[k++]);
      } catch (const ConfigError&) {
        throw ConfigError("line " + std::to_string(lineno) + ", field '" + name + "': not a number");
      }
    };
    auto integer = [&](const char* name) {
      double x = num(name);
      if (std::isnan(x)) return -1;
      if (x != std::floor(x)) throw ConfigError("line " + std::to_string(lineno) + ", field '" + name + "': not an integer");
      return int(x);
    };
    r.alpha = num("alpha");
    r.theory_angle = num("theory_angle");
    r.theory_mse = num("theory_mse");
    r.theory_mx = num("theory_mx");
    r.theory_qx = num("theory_qx");
    r.theory_free_energy = num("theory_free_energy");
    r.emp_angle_mean = num("emp_angle_mean");
    r.emp_angle_stderr = num("emp_angle_stderr");
    r.emp_mse_mean = num("emp_mse_mean");
    r.emp_mse_stderr = num("emp_mse_stderr");
    r.emp_qx_mean = num("emp_qx_mean");
    r.emp_mx_mean = num("emp_mx_mean");
    r.trials = integer("trials");
    r.diverged = integer("diverged");
    r.solver_iters_mean = num("solver_iters_mean");
    r.se_converged = integer("se_converged");
    out.push_back(r);
  }
  return out;
}

void write_results(const std::vector<ResultRecord>& records, const std::string& path, bool with_series) {
  atomic_write(path, results_to_csv(records, with_series));
}

std::vector<ResultRecord> read_results(const std::string& path) { return results_from_csv(read_file(path)); }

// ---------------------------------------------------------------- PL2

std::vector<Pl2Observable> pl2_compare(const Eigen::VectorXd& x0, const Eigen::VectorXd& x_hat,
                                       const SEState& se_star, const ScalarModel& model) {
  require(x0.size() == x_hat.size() && x0.size() > 0, "x0 and x_hat must have the same positive length");
  const double n = double(x0.size());
  Macroscopics mc = overlaps_and_errors(model, se_star);
  // E|prox| under the two-component Gaussian field
  const Hat& h = se_star.h1x;
  const auto& pen = model.penalty;
  const double l1 = pen.l1_weight, rho = model.teacher.prior.rho, s2 = model.teacher.prior.sigma * model.teacher.prior.sigma;
  auto abs_soft = [l1](double v) {
    if (v <= 0.0) return 0.0;
    return std::sqrt(2.0 * v / M_PI) * std::exp(-l1 * l1 / (2.0 * v)) - l1 * detail::tail2(l1, v);
  };
  double e_abs = ((1.0 - rho) * abs_soft(h.chi) + rho * abs_soft(h.chi + s2 * h.m * h.m)) / (h.Q + pen.l2_weight);

  std::vector<Pl2Observable> out;
  auto add = [&](const char* name, double emp, double th) {
    out.push_back({name, emp, th, std::abs(emp - th), 1.0 / std::sqrt(n)});
  };
  add("uv", x0.dot(x_hat) / n, mc.m_x);
  add("v2", x_hat.squaredNorm() / n, mc.q_x);
  add("(u-v)2", (x0 - x_hat).squaredNorm() / n, mc.mse);
  add("|v|", x_hat.cwiseAbs().sum() / n, e_abs);
  return out;
}

// ---------------------------------------------------------------- convergence study

const std::vector<std::string> kTraceColumns{"series", "alpha", "lambda2", "iteration", "dist_sq_per_n",
                                             "angle",  "diverged", "certified_tau", "fitted_rate"};

std::vector<ConvergenceRun> run_convergence_study(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  require(!cfg.lambda2_grid.empty(), "lambda2_grid must not be empty");
  std::vector<ConvergenceRun> runs;
  for (double a : cfg.alpha_grid)
    for (double l2 : cfg.lambda2_grid) {
      ConvergenceRun r;
      r.alpha = a;
      r.lambda2 = l2;
      r.seeds = cfg.trials;
      r.n = cfg.N;
      runs.push_back(r);
    }
  const std::size_t T = std::size_t(cfg.trials);
  struct One {
    bool conv = false, div = false;
    double rate = NAN, angle = NAN;
    std::vector<MlvampIterate> trace;
  };
  std::vector<One> res(runs.size() * T);
  const double tol = std::min(cfg.solver_tol, 1e-10);
  parallel_for(res.size(), threads, [&](std::size_t k) {
    const ConvergenceRun& run = runs[k / T];
    const int trial = int(k % T);
    TrialInstance inst = make_instance(cfg, run.alpha, trial);
    GlmProblem p{&inst.design, inst.teacher.y, cfg.loss_spec(), elastic_net(cfg.lambda1, run.lambda2),
                 inst.teacher.x0};
    MlvampConfig mc;
    mc.max_iter = cfg.solver_max_iter;
    mc.tol = tol;
    mc.damping = cfg.solver_damping;
    mc.seed = splitmix64(inst.seed + 2);
    MlvampResult r = mlvamp_solve(p, mc);
    One& o = res[k];
    o.conv = r.converged;
    o.div = r.diverged;
    o.angle = angle_between(inst.teacher.x0, r.x_hat1);
    if (r.converged) {
      try {
        o.rate = fit_empirical_rate(linear_regime(r.trace));
      } catch (const InvalidInput&) {
      }
    }
    if (trial == 0) o.trace = std::move(r.trace);
  });
  parallel_for(runs.size(), threads, [&](std::size_t i) {
    ConvergenceRun& run = runs[i];
    double rs = 0, as = 0;
    int nr = 0;
    for (std::size_t t = 0; t < T; ++t) {
      One& o = res[i * T + t];
      if (o.conv) {
        ++run.converged;
        as += o.angle;
        if (std::isfinite(o.rate)) {
          rs += o.rate;
          ++nr;
        }
      }
      if (o.div) ++run.diverged;
      if (t == 0) {
        run.trace = std::move(o.trace);
        run.trace_diverged = o.div;
        run.trace_rate = o.rate;
      }
    }
    if (nr) run.mean_rate = rs / nr;
    if (run.converged) run.mean_angle = as / run.converged;
    try {
      ExperimentConfig c = cfg;
      c.penalty = FunctionKind::ElasticNet;
      c.lambda2 = run.lambda2;
      ScalarModel m = c.model(run.alpha);
      SEConfig sc;
      sc.tol = cfg.se_tol;
      sc.max_iter = cfg.se_max_iter;
      sc.damping = cfg.se_damping;
      SEResult fp = se_fixed_point(m, se_initial_state(), sc);
      run.theory_angle = overlaps_and_errors(m, fp.state).angle;
      QHats q{fp.state.h1x.Q, fp.state.h2x.Q, fp.state.h1z.Q, fp.state.h2z.Q};
      Certificate cert = contraction_certificate(
          mode_system(m.spectrum, q, certificate_constants(q, m.penalty, m.loss)));
      run.certified = cert.feasible;
      run.certified_tau = cert.tau;
    } catch (const std::runtime_error&) {
    } catch (const InvalidInput&) {
    }
  });
  return runs;
}

std::string convergence_trace_csv(const std::vector<ConvergenceRun>& runs, const std::string& series) {
  std::string s;
  for (std::size_t i = 0; i < kTraceColumns.size(); ++i) s += (i ? "," : "") + kTraceColumns[i];
  s += "\n";
  for (const auto& r : runs) {
    for (const auto& it : r.trace) {
      s += series + "," + format_double(r.alpha) + "," + format_double(r.lambda2) + "," + std::to_string(it.t) + ",";
      s += format_double(it.dist * it.dist / double(r.n)) + "," + format_double(it.angle) + ",";
      s += std::string(r.trace_diverged ? "1" : "0") + "," + format_double(r.certified_tau) + ",";
      s += format_double(r.trace_rate) + "\n";
    }
  }
  return s;
}

std::string convergence_summary_csv(const std::vector<ConvergenceRun>& runs) {
  std::string s = "alpha,lambda2,seeds,converged,diverged,mean_rate,mean_angle,theory_angle,certified,certified_tau\n";
  for (const auto& r : runs) {
    s += format_double(r.alpha) + "," + format_double(r.lambda2) + "," + std::to_string(r.seeds) + "," +
         std::to_string(r.converged) + "," + std::to_string(r.diverged) + "," + format_double(r.mean_rate) + "," +
         format_double(r.mean_angle) + "," + format_double(r.theory_angle) + "," + (r.certified ? "1" : "0") + "," +
         format_double(r.certified_tau) + "\n";
  }
  return s;
}

}  // namespace glmrot
