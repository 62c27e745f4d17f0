#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "iterreg/datagen.hpp"
#include "iterreg/pdsolver.hpp"

namespace cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int config_version = 1;

/// Built-in experiment configs.
json preset(const std::string& name);
std::vector<std::string> preset_names();

/// Parses a config file; ParseError on malformed JSON.
json load_config(const fs::path& path);

/// Rejects unknown keys, wrong types and unknown enum values (ConfigError).
void validate(const json& cfg);

/// Flag overrides; unset fields leave the config alone.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iters;
  std::optional<std::string> steps;
  std::optional<std::string> stopping;
  std::optional<double> ctilde;
  std::optional<double> delta;
  std::optional<std::string> metrics_on;
  std::optional<std::size_t> log_every;
  std::optional<std::string> output;
  std::optional<std::string> instance_dir;
  std::optional<std::size_t> folds;
};

/// preset (if any), then the file (if any), then flags; validated.
json resolve_config(const std::optional<std::string>& preset_name, const std::optional<std::string>& file,
                    const Overrides& ov);

/// Instance generated (or loaded) from the "instance" section.
struct Built {
  iterreg::ProblemSpec problem;
  std::string generator;
  std::optional<iterreg::SparseInstance> sparse;
  std::optional<iterreg::Matrix> A_test;
  std::optional<iterreg::Vector> b_test;
  std::optional<iterreg::CertifiedInstance> certified;
  std::optional<iterreg::CompletionInstance> completion;
  std::optional<iterreg::IllposedInstance> illposed;
  json meta;
};

Built build_instance(const json& cfg, std::uint64_t seed);

/// Solver settings from the "solver" section; records the chosen steps in `report`.
iterreg::SolverConfig make_solver_config(const json& cfg, const Built& b, double A_norm, json& report);
/// Steps for the "solver.steps" rule on an arbitrary problem (also used per fold).
std::pair<iterreg::DiagMetric, iterreg::DiagMetric> make_steps(const json& solver, const iterreg::ProblemSpec& p,
                                                              double A_norm, json& report);
/// fixed-k falls back to the instance noise level when stopping.delta is absent.
iterreg::StoppingRule make_stopping(const json& cfg, double instance_delta);

/// Creates `dir`, refusing a non-empty existing directory unless force is set.
void prepare_output(const fs::path& dir, bool force);

int cmd_gen(const json& cfg, bool force);
int cmd_solve(const json& cfg, bool force);
int cmd_compare(const json& cfg, bool force);

struct ReproOptions {
  std::string figure;
  fs::path out;
  std::uint64_t seed = 0;
  std::optional<std::size_t> iters;
  std::string scenario = "easy";
  std::size_t folds = 4;
};
int cmd_repro(const ReproOptions& o, bool force);

}  // namespace cli
