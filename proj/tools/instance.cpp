#include <cmath>
#include <limits>

#include "cli.hpp"
#include "iterreg/errors.hpp"
#include "iterreg/experiments.hpp"
#include "iterreg/io.hpp"

namespace cli {

using namespace iterreg;
namespace ex = iterreg::experiments;

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j[key].get<T>() : fallback;
}

RegularizerPtr regularizer_by_name(const std::string& name) {
  if (name == "l1") return l1();
  if (name == "nonneg") return nonneg();
  if (name == "sq_l2") return sq_l2();
  if (name == "zero") return zero();
  throw ConfigError("regularizer '" + name + "' needs a matrix-valued instance");
}

}  // namespace

Built build_instance(const json& cfg, std::uint64_t seed) {
  const json& in = cfg["instance"];
  Built b;
  b.generator = in["generator"].get<std::string>();
  b.meta = {{"generator", b.generator}, {"seed", seed}, {"instance", in}};
  const auto n = get_or<std::size_t>(in, "n", 200);
  const auto d = get_or<std::size_t>(in, "d", 500);
  const double rho = get_or(in, "rho", 0.2);
  const double sparsity = get_or(in, "sparsity", 0.1);
  const double snr =
      get_or(in, "noiseless", false) ? std::numeric_limits<double>::infinity() : get_or(in, "snr", 10.0);

  if (b.generator == "sparse" || b.generator == "scaled") {
    const auto n_test = get_or<std::size_t>(in, "n_test", 0);
    SparseInstance inst;
    if (n_test > 0) {
      ex::SplitInstance s = ex::split_instance(n, n_test, d, rho, sparsity, snr, seed);
      inst = std::move(s.train);
      b.A_test = std::move(s.A_test);
      b.b_test = std::move(s.b_test);
    } else {
      inst = sparse_instance(n, d, rho, sparsity, snr, seed);
    }
    if (b.generator == "scaled")
      inst = ex::scale_columns(inst, get_or(in, "scale_lo", 1.0), get_or(in, "scale_hi", 5.0), seed);
    b.problem = ex::l1_problem(inst);
    if (b.A_test) b.problem.holdout = HoldoutSet{std::make_shared<DenseOp>(*b.A_test), *b.b_test};
    b.meta["delta"] = inst.delta;
    b.sparse = std::move(inst);
  } else if (b.generator == "certified") {
    const auto s = get_or<std::size_t>(in, "s", 5);
    CertifiedInstance ci = certified_instance(n, d, s, seed);
    const double delta = get_or(in, "delta", 0.0);
    const Vector bd = delta > 0.0 ? add_noise(ci.inst.b_star, delta, seed ^ 0xde17aULL) : ci.inst.b_star;
    ci.inst.b_delta = bd;
    ci.inst.delta = delta;
    b.problem = certified_problem(ci, bd, delta);
    b.meta["delta"] = delta;
    b.meta["tries"] = ci.tries;
    b.sparse = ci.inst;
    b.certified = std::move(ci);
  } else if (b.generator == "completion") {
    const auto r = get_or<std::size_t>(in, "r", 5);
    const double delta = get_or(in, "delta", 0.1);
    CompletionInstance ci = completion_instance(d, r, get_or(in, "hidden", 0.8), delta, seed);
    b.problem.A = ci.mask;
    b.problem.A_norm = 1.0;
    b.problem.b_delta = ci.B_delta.values();
    b.problem.b_star = ci.mask->apply(ci.B_star.values());
    b.problem.R = nuclear(d, d);
    b.problem.delta = ci.delta;
    b.meta["delta"] = ci.delta;
    b.meta["observed"] = ci.observed.size();
    b.completion = std::move(ci);
  } else if (b.generator == "illposed") {
    IllposedInstance ii = illposed_diag_instance(get_or<std::size_t>(in, "N", 10000), get_or(in, "delta", 0.1));
    b.problem = ii.problem;
    b.meta["delta"] = ii.problem.delta;
    b.meta["C"] = ii.C;
    b.illposed = std::move(ii);
  } else if (b.generator == "unfeasible-toy") {
    b.problem = unfeasible_toy(get_or(in, "feasible", false));
  } else if (b.generator == "files") {
    if (!in.contains("path")) throw ConfigError("config: generator 'files' needs instance.path");
    const fs::path dir = in["path"].get<std::string>();
    io::LoadedInstance li = io::read_instance(dir);
    SparseInstance inst;
    inst.A = std::move(li.A);
    inst.b_star = std::move(li.b_star);
    inst.b_delta = std::move(li.b_delta);
    inst.x_bar = std::move(li.x_true);
    inst.delta = norm2(sub(inst.b_delta, inst.b_star));
    b.problem = ex::l1_problem(inst);
    if (fs::exists(dir / "test_design.csv")) {
      b.A_test = io::read_matrix_csv(dir / "test_design.csv");
      b.b_test = io::read_vector_csv(dir / "test_bdelta.csv");
      if (b.A_test->cols() != inst.A.cols() || b.b_test->size() != b.A_test->rows())
        throw ParseError("test files have inconsistent dimensions");
      b.problem.holdout = HoldoutSet{std::make_shared<DenseOp>(*b.A_test), *b.b_test};
    }
    b.meta = li.meta;
    b.meta["delta"] = inst.delta;
    b.sparse = std::move(inst);
  }

  if (cfg.contains("regularizer")) {
    const std::string name = cfg["regularizer"].get<std::string>();
    if (name == "nuclear") {
      if (!b.completion) throw ConfigError("regularizer 'nuclear' needs the completion generator");
    } else {
      if (b.completion) throw ConfigError("the completion generator needs regularizer 'nuclear'");
      b.problem.R = regularizer_by_name(name);
    }
  }
  return b;
}

std::pair<DiagMetric, DiagMetric> make_steps(const json& solver, const ProblemSpec& p, double A_norm, json& report) {
  const std::size_t d = p.A->in_dim(), n = p.A->out_dim();
  const std::string rule = get_or<std::string>(solver, "steps", "symmetric");
  report["steps"] = rule;
  report["A_norm"] = A_norm;
  StepSizes s;
  if (rule == "datadriven") {
    s = datadriven_sigma(*p.A, p.b_delta, A_norm);
    report["degenerate"] = s.degenerate;
  } else if (rule == "symmetric") {
    s = ex::steps_with_ratio(A_norm, 1.0);
  } else if (rule == "tau/100") {
    s = ex::steps_with_ratio(A_norm, 1e-2);
  } else if (rule == "tau/10000") {
    s = ex::steps_with_ratio(A_norm, 1e-4);
  } else if (rule == "fixed") {
    s.sigma = solver["sigma"].get<double>();
    s.tau = solver["tau"].get<double>();
  } else {  // pock-chambolle
    const auto* dense = dynamic_cast<const DenseOp*>(p.A.get());
    const Matrix A = dense ? dense->matrix() : dense_assembly(*p.A);
    double theta;
    if (solver.contains("theta")) {
      theta = solver["theta"].get<double>();
    } else {
      // dual step equal to the datadriven sigma
      theta = static_cast<double>(d) / datadriven_sigma(*p.A, p.b_delta, A_norm).sigma;
    }
    PrecondOptions po;
    po.inverse_columns = get_or(solver, "inverse_columns", false);
    po.auto_scale = true;
    po.A_norm = A_norm;
    Preconditioners pc = pock_chambolle_precond(A, theta, po);
    report["theta"] = theta;
    report["tau_min"] = pc.T.tau_min();
    report["tau_max"] = pc.T.tau_max();
    report["sigma"] = pc.Sigma.tau_max();
    return {std::move(pc.T), std::move(pc.Sigma)};
  }
  if (!(s.sigma > 0.0) || !(s.tau > 0.0)) throw ConfigError("step sizes must be positive");
  report["sigma"] = s.sigma;
  report["tau"] = s.tau;
  return {DiagMetric::scalar(d, s.tau), DiagMetric::scalar(n, s.sigma)};
}

SolverConfig make_solver_config(const json& cfg, const Built& b, double A_norm, json& report) {
  const json solver = cfg.value("solver", json::object());
  SolverConfig c;
  std::tie(c.T, c.Sigma) = make_steps(solver, b.problem, A_norm, report);
  c.xi = get_or(solver, "xi", c.xi);
  c.eta = get_or(solver, "eta", c.eta);
  c.max_iters = get_or(solver, "max_iters", c.max_iters);
  c.log_every = get_or(solver, "log_every", c.log_every);
  c.strict = get_or(solver, "strict", c.strict);
  c.averaging = get_or(solver, "averaging", c.averaging);
  c.seed = get_or<std::uint64_t>(solver, "seed", 0);
  if (get_or<std::string>(solver, "metrics_on", "averaged") == "last") c.metrics_on = SolverConfig::MetricsOn::last;
  if (solver.contains("epsilon")) {
    const json& e = solver["epsilon"];
    const std::string mode = get_or<std::string>(e, "mode", "exact");
    c.schedule.mode = mode == "constant"             ? ProxErrorSchedule::Mode::constant
                      : mode == "noise-proportional" ? ProxErrorSchedule::Mode::noise_proportional
                                                     : ProxErrorSchedule::Mode::exact;
    c.schedule.C0 = get_or(e, "C0", 0.0);
    c.schedule.delta = b.problem.delta;
  }
  return c;
}

StoppingRule make_stopping(const json& cfg, double instance_delta) {
  const json st = cfg.contains("solver") ? cfg["solver"].value("stopping", json::object()) : json::object();
  const std::string rule = get_or<std::string>(st, "rule", "max-iters");
  if (rule == "fixed-k") {
    if (!st.contains("ctilde")) throw ConfigError("stopping rule fixed-k needs ctilde");
    const double delta = get_or(st, "delta", instance_delta);
    if (!(delta > 0.0)) throw ConfigError("stopping rule fixed-k needs delta > 0");
    return stopping::FixedK{st["ctilde"].get<double>(), delta};
  }
  if (rule == "holdout") return stopping::HoldoutCv{get_or<std::size_t>(st, "patience", 0)};
  return stopping::MaxIters{};
}

void prepare_output(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw ConfigError(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir) && !force)
      throw ConfigError("output directory " + dir.string() + " is not empty (use --force to overwrite)");
  }
  fs::create_directories(dir);
}

}  // namespace cli
