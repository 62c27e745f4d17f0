#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "cli.hpp"
#include "iterreg/baselines.hpp"
#include "iterreg/diagnostics.hpp"
#include "iterreg/errors.hpp"
#include "iterreg/experiments.hpp"
#include "iterreg/io.hpp"
#include "iterreg/kernels.hpp"
#include "iterreg/log.hpp"

namespace cli {

using namespace iterreg;
namespace ex = iterreg::experiments;

namespace {

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json row_json(const MetricsRow& r) {
  json j = {{"k", r.k},
            {"feasibility", opt_json(r.feasibility)},
            {"lagrangian_gap", opt_json(r.lagrangian_gap)},
            {"bregman_l1", opt_json(r.bregman_l1)},
            {"l1_norm", opt_json(r.l1_norm)},
            {"f1", opt_json(r.f1)},
            {"holdout_mse", opt_json(r.holdout_mse)}};
  j["support_size"] = r.support_size ? json(*r.support_size) : json(nullptr);
  return j;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

void write_log(const fs::path& p, const MetricsLog& log) {
  std::ostringstream os;
  log.write_csv(os);
  io::write_text(p, os.str());
}

void write_json(const fs::path& p, const json& j) { io::write_text(p, j.dump(2) + "\n"); }

std::vector<std::uint64_t> seeds_of(const json& cfg) {
  if (!cfg.contains("seeds")) return {0};
  return cfg["seeds"].get<std::vector<std::uint64_t>>();
}

fs::path seed_dir(const fs::path& out, const std::vector<std::uint64_t>& seeds, std::uint64_t seed) {
  return seeds.size() == 1 ? out : out / ("seed_" + std::to_string(seed));
}

/// Runs body(i) for every seed index, in parallel when the thread budget allows.
template <class F>
void for_each_seed(std::size_t count, F&& body) {
  std::vector<std::exception_ptr> errors(count);
#ifdef ITERREG_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(kernels::thread_budget())
#endif
  for (std::size_t i = 0; i < count; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void gen_one(const json& cfg, std::uint64_t seed, const fs::path& dir) {
  const Built b = build_instance(cfg, seed);
  json meta = b.meta;
  meta["config"] = cfg;
  meta["config"].erase("output");  // keeps the files independent of where they are written
  fs::create_directories(dir);
  if (b.completion) {
    io::write_completion(dir, *b.completion, meta);
  } else if (b.illposed) {
    const IllposedInstance& ii = *b.illposed;
    io::write_vector_csv(dir / "a.csv", ii.a);
    io::write_vector_csv(dir / "btrue.csv", ii.b_star);
    io::write_vector_csv(dir / "bdelta.csv", ii.problem.b_delta);
    io::write_vector_csv(dir / "xtrue.csv", ii.x_star);
    io::write_vector_csv(dir / "xdelta.csv", ii.x_delta);
    write_json(dir / "meta.json", meta);
  } else if (b.sparse) {
    io::write_instance(dir, *b.sparse, meta);
    if (b.A_test) {
      io::write_matrix_csv(dir / "test_design.csv", *b.A_test);
      io::write_vector_csv(dir / "test_bdelta.csv", *b.b_test);
    }
    if (b.certified) io::write_vector_csv(dir / "ystar.csv", b.certified->cert.y_star);
  } else {
    io::write_matrix_csv(dir / "design.csv", dense_assembly(*b.problem.A));
    io::write_vector_csv(dir / "bdelta.csv", b.problem.b_delta);
    write_json(dir / "meta.json", meta);
  }
}

std::size_t planned_iterations(const SolverConfig& sc, const StoppingRule& rule) {
  if (const auto* f = std::get_if<stopping::FixedK>(&rule))
    return std::min(sc.max_iters, fixed_k_iterations(f->ctilde, f->delta));
  return sc.max_iters;
}

struct SolveOutput {
  json summary;
  std::string metrics_csv;
};

SolveOutput solve_one(const json& cfg, std::uint64_t seed) {
  Built b = build_instance(cfg, seed);
  ProblemSpec& p = b.problem;
  const double nA = p.operator_norm();
  p.A_norm = nA;
  json steps;
  const SolverConfig sc = make_solver_config(cfg, b, nA, steps);
  const StoppingRule rule = make_stopping(cfg, p.delta);

  // dual growth check: norm of the reported dual iterate at K/100 against K
  const std::size_t K = planned_iterations(sc, rule);
  const std::size_t k_ref = std::max<std::size_t>(1, K / 100);
  const bool avg = sc.metrics_on == SolverConfig::MetricsOn::averaged;
  double y_ref = 0.0;
  const RunResult r = run(p, sc, rule, [&](const SolverState& s) {
    if (s.k == k_ref) y_ref = norm2(avg ? s.y_avg() : s.y);
  });

  const Vector x_avg = r.state.x_avg();
  const Vector& x_last = r.state.x;
  const double y_final = norm2(avg ? r.state.y_avg() : r.state.y);

  json s;
  s["seed"] = seed;
  s["generator"] = b.generator;
  s["dims"] = {{"n", p.A->out_dim()}, {"d", p.A->in_dim()}};
  s["delta"] = p.delta;
  s["steps"] = steps;
  s["params"] = io::to_json(r.params);
  s["A_norm"] = r.A_norm;
  s["stopped_at"] = r.stopped_at;
  s["metrics_on"] = avg ? "averaged" : "last";
  s["final_averaged"] = row_json(evaluate_metrics(p, x_avg, p.A->apply(x_avg), r.stopped_at));
  s["final_last"] = row_json(evaluate_metrics(p, x_last, p.A->apply(x_last), r.stopped_at));
  const auto [f1, f1_k] = ex::best_f1(r.log);
  if (f1_k > 0) s["f1_max"] = {{"value", f1}, {"k", f1_k}};
  s["best_k"] = r.best_k ? json(*r.best_k) : json(nullptr);
  s["fallbacks"] = r.fallbacks;
  if (p.A->in_dim() <= 16) s["x_hat"] = avg ? x_avg : x_last;
  s["dual_norm"] = {{"k_ref", k_ref},
                    {"at_k_ref", y_ref},
                    {"at_end", y_final},
                    {"ratio", y_ref > 0.0 ? y_final / y_ref : 0.0},
                    {"growing", y_ref > 0.0 && y_final >= 10.0 * y_ref}};
  if (p.cert) {
    try {
      const Vector x0(p.A->in_dim(), 0.0), y0(p.A->out_dim(), 0.0);
      const BoundConstants bc = compute_bound_constants(*p.cert, sc, x0, y0, sc.schedule.C0);
      const TheoreticalBounds tb = theoretical_bounds(bc, static_cast<double>(r.stopped_at), p.delta);
      s["bounds"] = io::to_json(bc);
      s["bounds"]["gap_at_end"] = tb.gap;
      s["bounds"]["feas_sq_at_end"] = tb.feas;
    } catch (const ConfigError& e) {
      s["bounds"] = {{"error", e.what()}};
    }
  }
  std::ostringstream csv;
  r.log.write_csv(csv);
  return {std::move(s), csv.str()};
}

}  // namespace

int cmd_gen(const json& cfg, bool force) {
  const fs::path out = cfg.value("output", std::string("out"));
  prepare_output(out, force);
  const auto seeds = seeds_of(cfg);
  for (const auto seed : seeds) gen_one(cfg, seed, seed_dir(out, seeds, seed));
  std::cout << out.string() << "\n";
  return 0;
}

int cmd_solve(const json& cfg, bool force) {
  const fs::path out = cfg.value("output", std::string("out"));
  prepare_output(out, force);
  write_json(out / "config.json", cfg);
  const auto seeds = seeds_of(cfg);
  std::vector<SolveOutput> results(seeds.size());
  for_each_seed(seeds.size(), [&](std::size_t i) { results[i] = solve_one(cfg, seeds[i]); });
  // single writer once every replicate is done
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const fs::path dir = seed_dir(out, seeds, seeds[i]);
    fs::create_directories(dir);
    io::write_text(dir / "metrics.csv", results[i].metrics_csv);
    write_json(dir / "summary.json", results[i].summary);
  }
  for (const auto& [s, csv] : results) {
    const json& fin = s["metrics_on"] == "averaged" ? s["final_averaged"] : s["final_last"];
    std::cout << "seed " << s["seed"] << ": " << s["stopped_at"] << " iterations, feasibility "
              << fin["feasibility"] << "\n";
  }
  return 0;
}

int cmd_compare(const json& cfg, bool force) {
  const std::size_t n_folds = cfg.value("folds", std::size_t{0});
  if (n_folds < 2) throw ConfigError("compare needs folds >= 2");
  const fs::path out = cfg.value("output", std::string("out"));
  const std::uint64_t seed = seeds_of(cfg).front();
  Built b = build_instance(cfg, seed);
  ProblemSpec& p = b.problem;
  if (p.R->kind() != RegKind::l1) throw ConfigError("compare needs the l1 regularizer");
  const Vector* x_ref = p.x_true ? &*p.x_true : p.cert ? &p.cert->x_star : nullptr;
  prepare_output(out, force);
  write_json(out / "config.json", cfg);

  const double nA = p.operator_norm();
  p.A_norm = nA;
  json steps;
  SolverConfig sc = make_solver_config(cfg, b, nA, steps);
  sc.log_every = 1;
  const RunResult r = run(p, sc);

  const std::vector<Fold> folds = make_folds(p, n_folds, seed);
  const json solver = cfg.value("solver", json::object());
  const CvResult cv = cv_early_stop(
      folds,
      [&](const ProblemSpec& f) {
        json ignored;
        SolverConfig c = sc;
        std::tie(c.T, c.Sigma) = make_steps(solver, f, f.operator_norm(), ignored);
        return c;
      },
      sc.max_iters);

  const json lasso = cfg.value("lasso", json::object());
  LassoPathOptions lo;
  lo.grid_size = lasso.value("grid_size", std::size_t{50});
  lo.lambda_min_ratio = lasso.value("lambda_min_ratio", 1e-2);
  lo.tol = lasso.value("tol", 1e-4);
  lo.max_iters = lasso.value("max_iters", std::size_t{5000});
  lo.folds = &folds;
  lo.holdout = p.holdout ? &*p.holdout : nullptr;
  lo.A_norm = nA;
  const LassoPath path = lasso_path(*p.A, p.b_delta, lo);

  std::ostringstream csv;
  csv << "method,index,param,holdout_mse,cv_mse,f1,support_size\n";
  for (std::size_t i = 0; i < path.lambdas.size(); ++i) {
    csv << "lasso," << i << "," << fmt(path.lambdas[i]) << ","
        << (path.holdout_mse.empty() ? "" : fmt(path.holdout_mse[i])) << "," << fmt(path.cv_mse[i]) << ","
        << (x_ref ? fmt(f1_support(path.solutions[i], *x_ref)) : "") << "," << path.support[i] << "\n";
  }
  for (const auto& row : r.log.rows) {
    csv << "pd," << row.k << "," << row.k << "," << fmt_opt(row.holdout_mse) << ","
        << (row.k <= cv.mean_mse.size() ? fmt(cv.mean_mse[row.k - 1]) : "") << "," << fmt_opt(row.f1) << ","
        << (row.support_size ? std::to_string(*row.support_size) : "") << "\n";
  }
  io::write_text(out / "comparison.csv", csv.str());

  const MetricsRow& pd_sel = r.log.rows.at(std::min(cv.best_k, r.log.rows.size()) - 1);
  json s;
  s["seed"] = seed;
  s["folds"] = n_folds;
  s["steps"] = steps;
  s["pd"] = {{"best_k", cv.best_k},
             {"cv_mse", cv.mean_mse[cv.best_k - 1]},
             {"holdout_mse", opt_json(pd_sel.holdout_mse)},
             {"f1", opt_json(pd_sel.f1)},
             {"f1_max", ex::best_f1(r.log).first}};
  const std::size_t bi = path.best_index;
  double lasso_f1_max = 0.0;
  if (x_ref)
    for (const auto& x : path.solutions) lasso_f1_max = std::max(lasso_f1_max, f1_support(x, *x_ref));
  s["lasso"] = {{"best_index", bi},
                {"lambda", path.lambdas[bi]},
                {"cv_mse", path.cv_mse[bi]},
                {"holdout_mse", path.holdout_mse.empty() ? json(nullptr) : json(path.holdout_mse[bi])},
                {"f1", x_ref ? json(f1_support(path.solutions[bi], *x_ref)) : json(nullptr)},
                {"f1_max", lasso_f1_max}};
  write_json(out / "summary.json", s);
  std::cout << "pd: k=" << cv.best_k << " holdout_mse=" << s["pd"]["holdout_mse"] << "\n"
            << "lasso: lambda=" << path.lambdas[bi] << " holdout_mse=" << s["lasso"]["holdout_mse"] << "\n";
  return 0;
}

int cmd_repro(const ReproOptions& o, bool force) {
  prepare_output(o.out, force);
  json manifest = {{"figure", o.figure}, {"seed", o.seed}};
  json files = json::array();
  json summary;

  if (o.figure == "fig3") {
    ex::Fig3Options f;
    f.seed = o.seed;
    if (o.iters) f.iters = *o.iters;
    for (const auto& c : ex::fig3(f)) {
      const std::string name = "fig3_" + c.label + ".csv";
      write_log(o.out / name, c.log);
      files.push_back(name);
      const auto [f1, k] = ex::best_f1(c.log);
      std::size_t supp = 0, supp_k = 0;
      for (const auto& row : c.log.rows)
        if (row.support_size && *row.support_size > supp) supp = *row.support_size, supp_k = row.k;
      summary[c.label] = {{"f1_max", f1}, {"f1_max_k", k}, {"support_max", supp}, {"support_max_k", supp_k}};
    }
    manifest["options"] = {{"n", f.n}, {"d", f.d}, {"rho", f.rho}, {"sparsity", f.sparsity},
                           {"snr", f.snr}, {"iters", f.iters}};
  } else if (o.figure == "fig4") {
    ex::Fig4Options f;
    f.seed = o.seed;
    f.folds = o.folds;
    f.lasso_tol = 1e-4;
    if (o.iters) f.pd_iters = *o.iters;
    if (o.scenario == "hard") {
      f.rho = 0.8;
      f.snr = 3.0;
    } else if (o.scenario != "easy") {
      throw ConfigError("scenario must be easy or hard");
    }
    const ex::Fig4Result r = ex::fig4(f);
    write_log(o.out / "fig4_pd.csv", r.pd);
    std::ostringstream lasso;
    r.lasso.write_csv(lasso);
    io::write_text(o.out / "fig4_lasso.csv", lasso.str());
    files = {"fig4_pd.csv", "fig4_lasso.csv"};
    if (!r.pd_cv_mse.empty()) {
      std::ostringstream cv;
      cv << "k,cv_mse\n";
      for (std::size_t k = 0; k < r.pd_cv_mse.size(); ++k) cv << k + 1 << "," << fmt(r.pd_cv_mse[k]) << "\n";
      io::write_text(o.out / "fig4_pd_cv.csv", cv.str());
      files.push_back("fig4_pd_cv.csv");
    }
    summary = {{"pd_best_k", r.pd_best_k},        {"pd_best_mse", r.pd_best_mse},
               {"lasso_best_mse", r.lasso_best_mse}, {"lasso_best_lambda", r.lasso.lambdas[r.lasso.best_index]},
               {"pd_f1_max", r.pd_best_f1},       {"lasso_f1_max", r.lasso_best_f1}};
    manifest["options"] = {{"scenario", o.scenario}, {"n", f.n},     {"d", f.d},
                           {"n_test", f.n_test},     {"rho", f.rho}, {"snr", f.snr},
                           {"pd_iters", f.pd_iters}, {"grid_size", f.grid_size},
                           {"lambda_min_ratio", f.lambda_min_ratio}, {"folds", f.folds}};
  } else if (o.figure == "fig5") {
    ex::Fig5Options f;
    f.seed = o.seed;
    if (o.iters) f.iters = *o.iters;
    const ex::Fig5Result r = ex::fig5(f);
    write_log(o.out / "fig5_scalar.csv", r.scalar.log);
    write_log(o.out / "fig5_diagonal.csv", r.diagonal.log);
    files = {"fig5_scalar.csv", "fig5_diagonal.csv"};
    summary = {{"f1_max_scalar", r.best_f1_scalar}, {"f1_max_diagonal", r.best_f1_diagonal}};
    manifest["options"] = {{"n", f.n}, {"d", f.d}, {"scale_lo", f.scale_lo}, {"scale_hi", f.scale_hi},
                           {"iters", f.iters}, {"inverse_columns", f.inverse_columns}};
  } else if (o.figure == "fig6") {
    ex::Fig6Options f;
    f.seed = o.seed;
    if (o.iters) f.iters = *o.iters;
    summary = json::array();
    for (const auto& c : ex::fig6(f)) {
      std::ostringstream name;
      name << "fig6_delta_" << c.delta << ".csv";
      std::ostringstream csv;
      csv << "k,dist_star,dist_noisy\n";
      for (std::size_t k = 0; k < c.dist_star.size(); ++k)
        csv << k + 1 << "," << fmt(c.dist_star[k]) << "," << (k < c.dist_noisy.size() ? fmt(c.dist_noisy[k]) : "")
            << "\n";
      io::write_text(o.out / name.str(), csv.str());
      files.push_back(name.str());
      const auto it = std::min_element(c.dist_star.begin(), c.dist_star.end());
      summary.push_back({{"delta", c.delta},
                         {"min_dist_star", *it},
                         {"argmin_k", (it - c.dist_star.begin()) + 1},
                         {"final_dist_star", c.dist_star.back()}});
    }
    manifest["options"] = {{"d", f.d}, {"r", f.r}, {"hidden", f.hidden}, {"deltas", f.deltas}, {"iters", f.iters}};
  } else {
    throw ConfigError("unknown figure '" + o.figure + "' (expected fig3, fig4, fig5 or fig6)");
  }
  manifest["files"] = files;
  manifest["summary"] = summary;
  write_json(o.out / "manifest.json", manifest);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

}  // namespace cli
