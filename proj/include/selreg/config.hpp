#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "selreg/experiments.hpp"

namespace selreg {

//! Raised with every violated constraint, one per entry.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems) : Error(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string s = "invalid experiment config:";
    for (const auto& m : p) s += "\n  - " + m;
    return s;
  }
  std::vector<std::string> problems_;
};

namespace detail {

using nlohmann::json;

//! Collects problems instead of stopping at the first one.
class ConfigReader {
 public:
  explicit ConfigReader(std::filesystem::path base) : base_(std::move(base)) {}

  // Seed for nested draws that do not name their own.
  std::uint64_t default_seed = 0;

  void problem(std::string msg) { problems_.push_back(std::move(msg)); }
  const std::vector<std::string>& problems() const { return problems_; }

  void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (!allowed.count(it.key())) problem(where + ": unknown key '" + it.key() + "'");
  }

  bool has(const json& obj, const char* key) const { return obj.is_object() && obj.contains(key); }

  std::optional<double> number(const json& obj, const char* key, const std::string& where, bool required) {
    if (!has(obj, key)) {
      if (required) problem(where + "." + key + " is required");
      return std::nullopt;
    }
    const auto& v = obj.at(key);
    if (!v.is_number()) {
      problem(where + "." + key + " must be a number");
      return std::nullopt;
    }
    return v.get<double>();
  }

  std::optional<std::uint64_t> unsigned_int(const json& obj, const char* key, const std::string& where,
                                            bool required) {
    if (!has(obj, key)) {
      if (required) problem(where + "." + key + " is required");
      return std::nullopt;
    }
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      problem(where + "." + key + " must be a non-negative integer");
      return std::nullopt;
    }
    return v.get<std::uint64_t>();
  }

  std::optional<std::string> string(const json& obj, const char* key, const std::string& where, bool required) {
    if (!has(obj, key)) {
      if (required) problem(where + "." + key + " is required");
      return std::nullopt;
    }
    if (!obj.at(key).is_string()) {
      problem(where + "." + key + " must be a string");
      return std::nullopt;
    }
    return obj.at(key).get<std::string>();
  }

  std::optional<bool> boolean(const json& obj, const char* key, const std::string& where) {
    if (!has(obj, key)) return std::nullopt;
    if (!obj.at(key).is_boolean()) {
      problem(where + "." + key + " must be true or false");
      return std::nullopt;
    }
    return obj.at(key).get<bool>();
  }

  //! A number or an array of numbers.
  std::vector<double> number_list(const json& v, const std::string& where) {
    std::vector<double> out;
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array() || v.empty()) {
      problem(where + " must be a number or a nonempty array of numbers");
      return out;
    }
    for (const auto& e : v) {
      if (!e.is_number()) {
        problem(where + " must contain only numbers");
        return {};
      }
      out.push_back(e.get<double>());
    }
    return out;
  }

  //! Array of numbers, or {"lo", "hi", "count"} for an evenly spaced range.
  std::vector<double> range_or_list(const json& v, const std::string& where) {
    if (v.is_object()) {
      check_keys(v, where, {"lo", "hi", "count"});
      const auto lo = number(v, "lo", where, true);
      const auto hi = number(v, "hi", where, true);
      const auto count = unsigned_int(v, "count", where, true);
      if (!lo || !hi || !count) return {};
      if (*count < 1 || (*count > 1 && !(*hi > *lo))) {
        problem(where + " needs count >= 1 and hi > lo");
        return {};
      }
      std::vector<double> out;
      for (std::uint64_t k = 0; k < *count; ++k)
        out.push_back(*count == 1 ? *lo : *lo + (*hi - *lo) * static_cast<double>(k) / static_cast<double>(*count - 1));
      return out;
    }
    return number_list(v, where);
  }

  std::vector<std::size_t> size_list(const json& v, const std::string& where) {
    std::vector<std::size_t> out;
    const json arr = v.is_array() ? v : json::array({v});
    if (arr.empty()) problem(where + " must not be empty");
    for (const auto& e : arr) {
      if (!e.is_number_integer() || e.get<std::int64_t>() < 1) {
        problem(where + " must contain positive integers");
        return {};
      }
      out.push_back(e.get<std::size_t>());
    }
    return out;
  }

  ResponseFunction response_function(const json& v, const std::string& where) {
    if (v.is_string()) {
      const auto name = v.get<std::string>();
      if (name == "quadratic") return ResponseFunction::quadratic();
      if (name == "sigmoid") return ResponseFunction::sigmoid();
      if (name == "heaviside") return ResponseFunction::heaviside();
      problem(where + ": unknown function '" + name + "' (quadratic, sigmoid, heaviside, {constant}, {table})");
      return {};
    }
    if (v.is_object() && v.contains("constant")) {
      check_keys(v, where, {"constant"});
      if (auto c = number(v, "constant", where, true)) return ResponseFunction::constant_value(*c);
      return {};
    }
    if (v.is_object() && v.contains("table")) {
      check_keys(v, where, {"table"});
      const auto& t = v.at("table");
      if (!t.is_object() || !t.contains("x") || !t.contains("y")) {
        problem(where + ".table needs x and y arrays");
        return {};
      }
      check_keys(t, where + ".table", {"x", "y"});
      try {
        return ResponseFunction::from_table({number_list(t.at("x"), where + ".table.x"),
                                             number_list(t.at("y"), where + ".table.y")});
      } catch (const Error& e) {
        problem(where + ": " + e.what());
      }
      return {};
    }
    problem(where + " must be a function name or an object with 'constant' or 'table'");
    return {};
  }

  SyntheticSpec synthetic(const json& v, const std::string& where, bool with_n) {
    SyntheticSpec spec;
    if (!v.is_object()) {
      problem(where + " must be an object");
      return spec;
    }
    std::set<std::string> keys{"covariates", "mean", "sd"};
    if (with_n) keys.insert({"n", "seed"});
    check_keys(v, where, keys);
    if (has(v, "covariates")) {
      const auto& cov = v.at("covariates");
      if (!cov.is_array() || cov.empty()) {
        problem(where + ".covariates must be a nonempty array");
      } else {
        spec.covariates.clear();
        for (std::size_t j = 0; j < cov.size(); ++j) {
          const std::string w = where + ".covariates[" + std::to_string(j) + "]";
          const auto& c = cov[j];
          if (!c.is_object()) {
            problem(w + " must be an object");
            continue;
          }
          const auto dist = string(c, "dist", w, true);
          if (dist == "uniform") {
            check_keys(c, w, {"dist", "lo", "hi"});
            const auto lo = number(c, "lo", w, true), hi = number(c, "hi", w, true);
            if (lo && hi && !(*lo < *hi)) problem(w + " needs lo < hi");
            spec.covariates.push_back(CovariateDist::uniform(lo.value_or(0.0), hi.value_or(1.0)));
          } else if (dist == "normal") {
            check_keys(c, w, {"dist", "mean", "sd"});
            const auto mu = number(c, "mean", w, true), sd = number(c, "sd", w, true);
            if (sd && !(*sd > 0.0)) problem(w + " needs sd > 0");
            spec.covariates.push_back(CovariateDist::normal(mu.value_or(0.0), sd.value_or(1.0)));
          } else if (dist) {
            problem(w + ".dist must be 'uniform' or 'normal'");
          }
        }
      }
    }
    if (has(v, "mean")) spec.mean_fn = response_function(v.at("mean"), where + ".mean");
    if (has(v, "sd")) spec.sd_fn = response_function(v.at("sd"), where + ".sd");
    if (with_n) {
      if (auto n = unsigned_int(v, "n", where, true)) {
        if (*n < 10) problem(where + ".n must be >= 10 for a split");
        spec.n = *n;
      }
      spec.seed = unsigned_int(v, "seed", where, false).value_or(default_seed);
    }
    return spec;
  }

  ShiftSplit split(const json& v, const std::string& where) {
    ShiftSplit s;
    if (!v.is_object()) {
      problem(where + " must be an object");
      return s;
    }
    check_keys(v, where, {"pivot_feature", "train_quantile", "swap_fraction", "seed"});
    if (auto p = unsigned_int(v, "pivot_feature", where, true)) s.pivot_feature = *p;
    if (auto q = number(v, "train_quantile", where, false)) s.train_quantile = *q;
    if (auto f = number(v, "swap_fraction", where, false)) s.swap_fraction = *f;
    if (!(s.train_quantile > 0.0 && s.train_quantile < 1.0)) problem(where + ".train_quantile must lie in (0, 1)");
    if (!(s.swap_fraction >= 0.0 && s.swap_fraction < 1.0)) problem(where + ".swap_fraction must lie in [0, 1)");
    s.seed = unsigned_int(v, "seed", where, false).value_or(default_seed);
    return s;
  }

  std::string path(const std::string& p) const {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? p : (base_ / fp).lexically_normal().string();
  }

 private:
  std::filesystem::path base_;
  std::vector<std::string> problems_;
};

inline std::optional<Scenario> parse_scenario(const std::string& s) {
  for (auto sc : {Scenario::AcceptanceCurve, Scenario::ExcessRiskVsN, Scenario::ExcessRiskVsBeta,
                  Scenario::PointwiseConvergence, Scenario::CoverageMseSweep})
    if (s == scenario_name(sc)) return sc;
  return std::nullopt;
}

}  // namespace detail

//! Parses and validates an experiment config. Relative data paths resolve
//! against base_dir. Throws ConfigError listing every problem found.
inline ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::filesystem::path& base_dir = ".") {
  detail::ConfigReader rd(base_dir);
  ExperimentConfig cfg;
  if (!j.is_object()) throw ConfigError({"config must be a JSON object"});

  const auto scenario_str = rd.string(j, "scenario", "config", true);
  std::optional<Scenario> scenario;
  if (scenario_str) {
    scenario = detail::parse_scenario(*scenario_str);
    if (!scenario)
      rd.problem("config.scenario '" + *scenario_str +
                 "' is not one of acceptance_curve, excess_risk_vs_n, excess_risk_vs_beta, "
                 "pointwise_convergence, coverage_mse_sweep");
  }
  if (!scenario) throw ConfigError(rd.problems());
  cfg.scenario = *scenario;
  const bool sweep = cfg.scenario == Scenario::CoverageMseSweep;

  std::set<std::string> keys{"scenario", "seed", "kernel", "bandwidth", "threads", "beta", "betas", "output"};
  if (sweep)
    keys.insert({"data", "has_header", "target_column", "standardize", "lambdas", "z_values"});
  else
    keys.insert({"lambda", "n", "replicates", "points", "x_grid", "synthetic"});
  rd.check_keys(j, "config", keys);

  if (auto seed = rd.unsigned_int(j, "seed", "config", true)) cfg.seed = *seed;
  rd.default_seed = cfg.seed;
  if (auto k = rd.string(j, "kernel", "config", false)) {
    try {
      cfg.kernel = parse_kernel_kind(*k);
    } catch (const Error& e) {
      rd.problem(std::string("config.kernel: ") + e.what());
    }
  }
  if (auto t = rd.unsigned_int(j, "threads", "config", false)) cfg.threads = static_cast<unsigned>(*t);

  // Bandwidth policy.
  if (rd.has(j, "bandwidth")) {
    const auto& b = j.at("bandwidth");
    const auto policy = rd.string(b, "policy", "config.bandwidth", true);
    if (!b.is_object()) {
      rd.problem("config.bandwidth must be an object");
    } else if (policy == "loocv") {
      rd.check_keys(b, "config.bandwidth", {"policy", "grid"});
      LoocvBandwidth cv;
      if (rd.has(b, "grid")) {
        cv.grid = rd.range_or_list(b.at("grid"), "config.bandwidth.grid");
        for (double h : cv.grid)
          if (!(h > 0.0)) rd.problem("config.bandwidth.grid entries must be > 0");
      }
      cfg.bandwidth = cv;
    } else if (policy == "fixed") {
      rd.check_keys(b, "config.bandwidth", {"policy", "h"});
      const auto h = rd.number(b, "h", "config.bandwidth", true);
      if (h && !(*h > 0.0)) rd.problem("config.bandwidth.h must be > 0");
      cfg.bandwidth = FixedBandwidth{h.value_or(1.0)};
    } else if (policy == "power_rule") {
      rd.check_keys(b, "config.bandwidth", {"policy", "c", "exponent"});
      const auto c = rd.number(b, "c", "config.bandwidth", true);
      const auto e = rd.number(b, "exponent", "config.bandwidth", true);
      if (c && !(*c > 0.0)) rd.problem("config.bandwidth.c must be > 0");
      cfg.bandwidth = PowerRuleBandwidth{c.value_or(1.0), e.value_or(-0.2)};
    } else if (policy) {
      rd.problem("config.bandwidth.policy must be loocv, fixed or power_rule");
    }
  }

  // Significance levels.
  auto check_beta = [&](double b, const std::string& where) {
    if (!(b > 0.0 && b <= 0.5)) rd.problem(where + " = " + format_real(b) + " must lie in (0, 0.5]");
  };
  if (rd.has(j, "beta") && rd.has(j, "betas")) rd.problem("config: give either beta or betas, not both");
  if (rd.has(j, "beta")) {
    if (auto b = rd.number(j, "beta", "config", true)) {
      check_beta(*b, "config.beta");
      cfg.betas = {*b};
    }
  } else if (rd.has(j, "betas")) {
    cfg.betas = rd.number_list(j.at("betas"), "config.betas");
    for (double b : cfg.betas) check_beta(b, "config.betas entry");
  }

  if (!sweep) {
    if (!rd.has(j, "beta") && !rd.has(j, "betas")) rd.problem("config.beta is required");
    if (auto l = rd.number(j, "lambda", "config", true)) {
      if (!(*l > 0.0)) rd.problem("config.lambda must be > 0");
      cfg.lambda = *l;
    }
    if (rd.has(j, "n"))
      cfg.ns = rd.size_list(j.at("n"), "config.n");
    else
      rd.problem("config.n is required");
    if (rd.has(j, "replicates"))
      cfg.replicates = rd.size_list(j.at("replicates"), "config.replicates");
    else
      rd.problem("config.replicates is required");
    if (!cfg.ns.empty() && cfg.replicates.size() > 1 && cfg.replicates.size() != cfg.ns.size())
      rd.problem("config.replicates must be a single count or one per n");
    if (rd.has(j, "synthetic")) cfg.synthetic = rd.synthetic(j.at("synthetic"), "config.synthetic", false);

    if (rd.has(j, "points") && rd.has(j, "x_grid")) rd.problem("config: give either points or x_grid, not both");
    if (rd.has(j, "points")) {
      const auto& p = j.at("points");
      if (!p.is_array() || p.empty()) {
        rd.problem("config.points must be a nonempty array");
      } else {
        for (const auto& e : p) {
          if (e.is_number())
            cfg.points.push_back({e.get<double>()});
          else
            cfg.points.push_back(rd.number_list(e, "config.points entry"));
          if (cfg.points.back().size() != cfg.synthetic.dim())
            rd.problem("config.points entry has dimension " + std::to_string(cfg.points.back().size()) +
                       ", expected " + std::to_string(cfg.synthetic.dim()));
        }
      }
    } else if (rd.has(j, "x_grid")) {
      for (double v : rd.range_or_list(j.at("x_grid"), "config.x_grid")) cfg.points.push_back({v});
      if (cfg.synthetic.dim() != 1) rd.problem("config.x_grid is only valid for 1-D covariates; use points");
    } else if (cfg.scenario == Scenario::PointwiseConvergence) {
      for (double v : {-1.6, -0.5, 0.3, 0.8, 1.6}) cfg.points.push_back({v});
    } else {
      cfg.points = default_grid_1d();
      if (cfg.synthetic.dim() != 1) rd.problem("config.points is required for multi-dimensional covariates");
    }

    const auto nb = cfg.betas.size();
    if (cfg.scenario == Scenario::ExcessRiskVsBeta) {
      if (cfg.ns.size() > 1) rd.problem("excess_risk_vs_beta takes a single n");
    } else if (nb > 1) {
      rd.problem(std::string(scenario_name(cfg.scenario)) + " takes a single beta");
    }
    if (cfg.scenario == Scenario::PointwiseConvergence && !std::holds_alternative<PowerRuleBandwidth>(cfg.bandwidth))
      rd.problem("pointwise_convergence requires bandwidth.policy = power_rule");
  } else {
    if (!rd.has(j, "beta") && !rd.has(j, "betas") && !rd.has(j, "z_values"))
      rd.problem("config needs betas and/or z_values");
    if (rd.has(j, "z_values")) {
      cfg.z_values = rd.number_list(j.at("z_values"), "config.z_values");
      for (double z : cfg.z_values)
        if (!(z >= 0.0)) rd.problem("config.z_values entries must be >= 0");
    }
    if (rd.has(j, "lambdas")) {
      cfg.lambdas = rd.range_or_list(j.at("lambdas"), "config.lambdas");
      for (double l : cfg.lambdas)
        if (!(l >= 0.0)) rd.problem("config.lambdas entries must be >= 0");
    } else {
      rd.problem("config.lambdas is required");
    }
    cfg.has_header = rd.boolean(j, "has_header", "config").value_or(true);
    cfg.standardize = rd.boolean(j, "standardize", "config").value_or(true);
    if (auto t = rd.unsigned_int(j, "target_column", "config", false)) cfg.target_column = *t;

    if (!rd.has(j, "data")) {
      rd.problem("config.data is required");
    } else {
      const auto& d = j.at("data");
      if (!d.is_object()) {
        rd.problem("config.data must be an object");
      } else if (rd.has(d, "train_csv") || rd.has(d, "test_csv")) {
        rd.check_keys(d, "config.data", {"train_csv", "test_csv"});
        const auto tr = rd.string(d, "train_csv", "config.data", true);
        const auto te = rd.string(d, "test_csv", "config.data", true);
        cfg.source = CsvPairSource{rd.path(tr.value_or("")), rd.path(te.value_or(""))};
      } else if (rd.has(d, "csv")) {
        rd.check_keys(d, "config.data", {"csv", "split"});
        const auto csv = rd.string(d, "csv", "config.data", true);
        ShiftSplit split;
        if (rd.has(d, "split"))
          split = rd.split(d.at("split"), "config.data.split");
        else
          rd.problem("config.data.split is required with csv");
        cfg.source = CsvSplitSource{rd.path(csv.value_or("")), split};
      } else if (rd.has(d, "synthetic")) {
        rd.check_keys(d, "config.data", {"synthetic", "split"});
        auto spec = rd.synthetic(d.at("synthetic"), "config.data.synthetic", true);
        ShiftSplit split;
        if (rd.has(d, "split"))
          split = rd.split(d.at("split"), "config.data.split");
        else
          rd.problem("config.data.split is required with synthetic");
        cfg.source = SyntheticSplitSource{spec, split};
      } else {
        rd.problem("config.data needs train_csv/test_csv, csv + split, or synthetic + split");
      }
      if (cfg.source && !std::holds_alternative<SyntheticSplitSource>(*cfg.source) && !cfg.target_column)
        rd.problem("config.target_column is required for CSV data");
    }
  }

  if (!rd.problems().empty()) throw ConfigError(rd.problems());
  return cfg;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({std::string("malformed JSON: ") + e.what()});
  }
}

}  // namespace selreg
