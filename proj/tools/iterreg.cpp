#include <iostream>

#include <CLI11.hpp>

#include "cli.hpp"
#include "iterreg/errors.hpp"
#include "iterreg/log.hpp"

#ifdef ITERREG_HAVE_OPENMP
#include <omp.h>
#include "iterreg/kernels.hpp"
#endif

namespace {

struct CommonOptions {
  std::optional<std::string> config, preset;
  cli::Overrides ov;
  bool force = false;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool solver_flags) {
  cmd->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--preset", o.preset, "built-in config; a --config file is merged on top");
  cmd->add_option("--seed", o.ov.seed, "single seed, replaces the seed list");
  cmd->add_option("--output,-o", o.ov.output, "output directory");
  cmd->add_flag("--force", o.force, "overwrite a non-empty output directory");
  if (!solver_flags) return;
  cmd->add_option("--instance", o.ov.instance_dir, "instance directory written by gen")->check(CLI::ExistingDirectory);
  cmd->add_option("--iters", o.ov.iters, "maximum number of iterations");
  cmd->add_option("--sigma,--steps", o.ov.steps, "step-size rule")
      ->check(CLI::IsMember({"datadriven", "tau", "symmetric", "tau/100", "tau/10000", "fixed", "pock-chambolle"}));
  cmd->add_option("--stopping", o.ov.stopping, "stopping rule")
      ->check(CLI::IsMember({"max-iters", "fixed-k", "holdout"}));
  cmd->add_option("--ctilde", o.ov.ctilde, "fixed-k constant: stop at ceil(ctilde / delta)");
  cmd->add_option("--delta", o.ov.delta, "noise level for the fixed-k rule");
  cmd->add_option("--metrics-on", o.ov.metrics_on, "iterate used for metrics")
      ->check(CLI::IsMember({"averaged", "last"}));
  cmd->add_option("--log-every", o.ov.log_every, "metrics cadence (0: automatic)");
  cmd->add_option("--folds", o.ov.folds, "cross-validation folds");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Primal-dual iterative regularization"};
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false, verbose = false;
  app.add_flag("-q,--quiet", quiet, "errors only");
  app.add_flag("-v,--verbose", verbose, "debug logging");

  CommonOptions gen_o, solve_o, cmp_o;
  auto* gen = app.add_subcommand("gen", "generate an instance directory");
  add_common(gen, gen_o, false);
  auto* solve = app.add_subcommand("solve", "run the solver, writing metrics.csv and summary.json");
  add_common(solve, solve_o, true);
  auto* compare = app.add_subcommand("compare", "early-stopped primal-dual against the Lasso path");
  add_common(compare, cmp_o, true);

  cli::ReproOptions ro;
  ro.out = "out/repro";
  bool repro_force = false;
  auto* repro = app.add_subcommand("repro", "reproduce one figure as a directory of CSV files");
  repro->add_option("figure", ro.figure, "fig3, fig4, fig5 or fig6")
      ->required()
      ->check(CLI::IsMember({"fig3", "fig4", "fig5", "fig6"}));
  repro->add_option("--output,-o", ro.out, "output directory");
  repro->add_option("--seed", ro.seed, "instance seed");
  repro->add_option("--iters", ro.iters, "iterations per curve");
  repro->add_option("--scenario", ro.scenario, "fig4 scenario")->check(CLI::IsMember({"easy", "hard"}));
  repro->add_option("--folds", ro.folds, "fig4 cross-validation folds (0: holdout selection)");
  repro->add_flag("--force", repro_force, "overwrite a non-empty output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  using iterreg::log::Level;
  if (quiet) iterreg::log::set_level(Level::error);
  if (verbose) iterreg::log::set_level(Level::debug);
#ifdef ITERREG_HAVE_OPENMP
  omp_set_num_threads(iterreg::kernels::thread_budget());
#endif

  try {
    if (*gen) return cli::cmd_gen(cli::resolve_config(gen_o.preset, gen_o.config, gen_o.ov), gen_o.force);
    if (*solve) return cli::cmd_solve(cli::resolve_config(solve_o.preset, solve_o.config, solve_o.ov), solve_o.force);
    if (*compare) return cli::cmd_compare(cli::resolve_config(cmp_o.preset, cmp_o.config, cmp_o.ov), cmp_o.force);
    if (*repro) return cli::cmd_repro(ro, repro_force);
  } catch (const iterreg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const iterreg::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const iterreg::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
