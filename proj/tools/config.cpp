#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "cli.hpp"
#include "iterreg/errors.hpp"
#include "iterreg/io.hpp"

namespace cli {

using iterreg::ConfigError;

namespace {

// Leaf types: integer, number, string, boolean, integer[], number[]. Objects nest.
const json& schema() {
  static const json s = {
      {"version", "integer"},
      {"name", "string"},
      {"output", "string"},
      {"seeds", "integer[]"},
      {"folds", "integer"},
      {"regularizer", "string"},
      {"instance",
       {{"generator", "string"},
        {"n", "integer"},
        {"d", "integer"},
        {"n_test", "integer"},
        {"rho", "number"},
        {"sparsity", "number"},
        {"snr", "number"},
        {"noiseless", "boolean"},
        {"scale_lo", "number"},
        {"scale_hi", "number"},
        {"s", "integer"},
        {"delta", "number"},
        {"r", "integer"},
        {"hidden", "number"},
        {"N", "integer"},
        {"feasible", "boolean"},
        {"path", "string"}}},
      {"solver",
       {{"steps", "string"},
        {"sigma", "number"},
        {"tau", "number"},
        {"theta", "number"},
        {"inverse_columns", "boolean"},
        {"xi", "number"},
        {"eta", "number"},
        {"max_iters", "integer"},
        {"log_every", "integer"},
        {"metrics_on", "string"},
        {"strict", "boolean"},
        {"averaging", "boolean"},
        {"epsilon", {{"mode", "string"}, {"C0", "number"}}},
        {"stopping", {{"rule", "string"}, {"ctilde", "number"}, {"delta", "number"}, {"patience", "integer"}}}}},
      {"lasso",
       {{"grid_size", "integer"}, {"lambda_min_ratio", "number"}, {"tol", "number"}, {"max_iters", "integer"}}},
  };
  return s;
}

bool type_ok(const json& v, const std::string& t) {
  if (t == "integer") return v.is_number_integer();
  if (t == "number") return v.is_number();
  if (t == "string") return v.is_string();
  if (t == "boolean") return v.is_boolean();
  if (t == "integer[]" || t == "number[]") {
    if (!v.is_array()) return false;
    const std::string elem = t.substr(0, t.size() - 2);
    return std::all_of(v.begin(), v.end(), [&](const json& e) { return type_ok(e, elem); });
  }
  return false;
}

void check_object(const json& v, const json& sch, const std::string& where) {
  if (!v.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (auto it = v.begin(); it != v.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    if (!sch.contains(it.key())) throw ConfigError("config: unknown key '" + key + "'");
    const json& t = sch[it.key()];
    if (t.is_object())
      check_object(it.value(), t, key);
    else if (!type_ok(it.value(), t.get<std::string>()))
      throw ConfigError("config: '" + key + "' must be of type " + t.get<std::string>());
  }
}

void check_enum(const json& cfg, const json::json_pointer& ptr, std::set<std::string> allowed) {
  if (!cfg.contains(ptr)) return;
  const std::string v = cfg[ptr].get<std::string>();
  if (!allowed.count(v)) {
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    throw ConfigError("config: '" + ptr.to_string() + "' = '" + v + "' is not one of {" + list + "}");
  }
}

json sparse_solver(std::size_t iters) {
  return {{"steps", "datadriven"}, {"max_iters", iters}, {"metrics_on", "last"}, {"log_every", 1}};
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"fig3", "fig4-easy", "fig4-hard", "fig5", "completion-200", "certified", "unfeasible-toy", "illposed"};
}

json preset(const std::string& name) {
  json c = {{"version", config_version}, {"name", name}, {"output", "out/" + name}, {"seeds", {0}}};
  if (name == "fig3") {
    c["instance"] = {{"generator", "sparse"}, {"n", 200}, {"d", 500}, {"rho", 0.2}, {"sparsity", 0.1}, {"snr", 10.0}};
    c["solver"] = sparse_solver(200);
  } else if (name == "fig4-easy" || name == "fig4-hard") {
    const bool hard = name == "fig4-hard";
    c["instance"] = {{"generator", "sparse"}, {"n", 1000},          {"d", 2000},
                     {"n_test", 250},         {"rho", hard ? 0.8 : 0.2}, {"sparsity", 0.1},
                     {"snr", hard ? 3.0 : 5.0}};
    c["solver"] = sparse_solver(300);
    c["lasso"] = {{"grid_size", 50}, {"lambda_min_ratio", 1e-2}, {"tol", 1e-4}, {"max_iters", 5000}};
    c["folds"] = 4;
  } else if (name == "fig5") {
    c["instance"] = {{"generator", "scaled"}, {"n", 500},      {"d", 1000},       {"rho", 0.2},
                     {"sparsity", 0.1},       {"snr", 5.0},    {"scale_lo", 1.0}, {"scale_hi", 5.0}};
    c["solver"] = sparse_solver(300);
    c["solver"]["steps"] = "pock-chambolle";
    c["solver"]["inverse_columns"] = true;
  } else if (name == "completion-200") {
    c["instance"] = {{"generator", "completion"}, {"d", 200}, {"r", 5}, {"hidden", 0.8}, {"delta", 0.1}};
    c["solver"] = {{"steps", "fixed"},     {"sigma", 0.99},     {"tau", 0.99},
                   {"max_iters", 1000},    {"log_every", 10},   {"metrics_on", "last"}};
  } else if (name == "certified") {
    c["instance"] = {{"generator", "certified"}, {"n", 50}, {"d", 100}, {"s", 5}, {"delta", 0.01}};
    c["solver"] = {{"steps", "symmetric"}, {"max_iters", 2000}, {"metrics_on", "averaged"}};
  } else if (name == "unfeasible-toy") {
    c["instance"] = {{"generator", "unfeasible-toy"}, {"feasible", false}};
    c["solver"] = {{"steps", "symmetric"}, {"max_iters", 10000}, {"log_every", 100}, {"metrics_on", "averaged"}};
  } else if (name == "illposed") {
    c["instance"] = {{"generator", "illposed"}, {"N", 10000}, {"delta", 0.1}};
    c["solver"] = {{"steps", "symmetric"}, {"max_iters", 1000}, {"log_every", 10}, {"metrics_on", "averaged"}};
  } else {
    std::string list;
    for (const auto& p : preset_names()) list += " " + p;
    throw ConfigError("unknown preset '" + name + "'; available:" + list);
  }
  return c;
}

json load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw iterreg::ParseError(path.string() + ": " + e.what());
  }
}

void validate(const json& cfg) {
  check_object(cfg, schema(), "");
  if (!cfg.contains("version")) throw ConfigError("config: 'version' is required");
  if (cfg["version"].get<int>() != config_version)
    throw ConfigError("config: unsupported version " + cfg["version"].dump() + " (expected " +
                      std::to_string(config_version) + ")");
  if (!cfg.contains("instance") || !cfg["instance"].contains("generator"))
    throw ConfigError("config: 'instance.generator' is required");
  using P = json::json_pointer;
  check_enum(cfg, P("/instance/generator"),
             {"sparse", "scaled", "certified", "completion", "illposed", "unfeasible-toy", "files"});
  check_enum(cfg, P("/regularizer"), {"l1", "nonneg", "sq_l2", "zero", "nuclear"});
  check_enum(cfg, P("/solver/steps"),
             {"datadriven", "symmetric", "tau/100", "tau/10000", "fixed", "pock-chambolle"});
  check_enum(cfg, P("/solver/metrics_on"), {"averaged", "last"});
  check_enum(cfg, P("/solver/epsilon/mode"), {"exact", "constant", "noise-proportional"});
  check_enum(cfg, P("/solver/stopping/rule"), {"max-iters", "fixed-k", "holdout"});
  if (cfg.contains("seeds") && cfg["seeds"].empty()) throw ConfigError("config: 'seeds' must not be empty");
  if (cfg.contains(P("/solver/steps")) && cfg[P("/solver/steps")] == "fixed" &&
      !(cfg.contains(P("/solver/sigma")) && cfg.contains(P("/solver/tau"))))
    throw ConfigError("config: steps 'fixed' needs solver.sigma and solver.tau");
}

json resolve_config(const std::optional<std::string>& preset_name, const std::optional<std::string>& file,
                    const Overrides& ov) {
  json cfg = json::object();
  if (preset_name) cfg = preset(*preset_name);
  if (file) {
    const json f = load_config(*file);
    if (!f.is_object()) throw ConfigError("config: top level must be an object");
    cfg.merge_patch(f);
  }
  if (!preset_name && !file) {
    cfg = preset("fig3");
    cfg["name"] = "default";
    cfg["output"] = "out/default";
  }
  if (!cfg.contains("version")) cfg["version"] = config_version;

  if (ov.instance_dir) cfg["instance"] = {{"generator", "files"}, {"path", *ov.instance_dir}};
  if (ov.seed) cfg["seeds"] = {*ov.seed};
  if (ov.iters) cfg["solver"]["max_iters"] = *ov.iters;
  if (ov.steps) cfg["solver"]["steps"] = *ov.steps == "tau" ? std::string("symmetric") : *ov.steps;
  if (ov.metrics_on) cfg["solver"]["metrics_on"] = *ov.metrics_on;
  if (ov.log_every) cfg["solver"]["log_every"] = *ov.log_every;
  if (ov.stopping) cfg["solver"]["stopping"]["rule"] = *ov.stopping;
  if (ov.ctilde) cfg["solver"]["stopping"]["ctilde"] = *ov.ctilde;
  if (ov.delta) cfg["solver"]["stopping"]["delta"] = *ov.delta;
  if (ov.output) cfg["output"] = *ov.output;
  if (ov.folds) cfg["folds"] = *ov.folds;
  validate(cfg);
  return cfg;
}

}  // namespace cli
