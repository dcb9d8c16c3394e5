#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "selreg/abstention.hpp"
#include "selreg/data.hpp"
#include "selreg/risk.hpp"
#include "selreg/table.hpp"

namespace selreg {

enum class Scenario { AcceptanceCurve, ExcessRiskVsN, ExcessRiskVsBeta, PointwiseConvergence, CoverageMseSweep };

inline const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::AcceptanceCurve: return "acceptance_curve";
    case Scenario::ExcessRiskVsN: return "excess_risk_vs_n";
    case Scenario::ExcessRiskVsBeta: return "excess_risk_vs_beta";
    case Scenario::PointwiseConvergence: return "pointwise_convergence";
    case Scenario::CoverageMseSweep: return "coverage_mse_sweep";
  }
  return "?";
}

//! Train and test tables supplied directly.
struct CsvPairSource {
  std::string train_csv;
  std::string test_csv;
};
//! One table, split by the covariate-shift protocol.
struct CsvSplitSource {
  std::string csv;
  ShiftSplit split;
};
//! Synthetic draw (spec.n rows), split by the covariate-shift protocol.
struct SyntheticSplitSource {
  SyntheticSpec spec;
  ShiftSplit split;
};
using SweepSource = std::variant<CsvPairSource, CsvSplitSource, SyntheticSplitSource>;

struct ExperimentConfig {
  Scenario scenario = Scenario::AcceptanceCurve;
  std::uint64_t seed = 0;
  KernelKind kernel = KernelKind::Gaussian;
  BandwidthPolicy bandwidth = LoocvBandwidth{};
  unsigned threads = 0;

  // Synthetic Monte-Carlo scenarios.
  SyntheticSpec synthetic;
  double lambda = 0.36;
  std::vector<double> betas;
  std::vector<std::size_t> ns;
  std::vector<std::size_t> replicates;  // one entry, or one per n
  std::vector<std::vector<double>> points;

  // Coverage / MSE sweep.
  std::optional<SweepSource> source;
  bool has_header = true;
  std::optional<std::size_t> target_column;
  bool standardize = true;
  std::vector<double> lambdas;
  std::vector<double> z_values;

  std::size_t replicates_for(std::size_t n_index) const {
    return replicates.size() == 1 ? replicates.front() : replicates.at(n_index);
  }
};

//! 81 equally spaced points on [-2, 2].
inline std::vector<std::vector<double>> default_grid_1d(std::size_t count = 81, double lo = -2.0, double hi = 2.0) {
  std::vector<std::vector<double>> pts;
  for (std::size_t k = 0; k < count; ++k)
    pts.push_back({count == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1)});
  return pts;
}

namespace detail {

inline MonteCarloSetup setup_for(const ExperimentConfig& cfg, std::size_t n_index) {
  MonteCarloSetup s;
  s.truth = ground_truth(cfg.synthetic);
  s.sampler = make_sampler(cfg.synthetic);
  s.kernel = cfg.kernel;
  s.bandwidth = cfg.bandwidth;
  s.n = cfg.ns.at(n_index);
  s.replicates = cfg.replicates_for(n_index);
  s.seed = cfg.seed;
  s.threads = cfg.threads;
  return s;
}

//! Coordinate cells for a point: "x" for d = 1, otherwise "x0", "x1", ...
inline std::vector<std::string> point_columns(const ExperimentConfig& cfg) {
  if (cfg.synthetic.dim() == 1) return {"x"};
  std::vector<std::string> cols;
  for (std::size_t j = 0; j < cfg.synthetic.dim(); ++j) cols.push_back("x" + std::to_string(j));
  return cols;
}

inline void append_point(std::vector<Cell>& row, const std::vector<double>& x) {
  for (double v : x) row.emplace_back(v);
}

inline void require(bool ok, const std::string& message) {
  if (!ok) throw Error(message);
}

inline void check_synthetic_common(const ExperimentConfig& cfg) {
  require(!cfg.ns.empty(), "experiment needs at least one n");
  require(!cfg.points.empty(), "experiment needs at least one evaluation point");
  require(cfg.replicates.size() == 1 || cfg.replicates.size() == cfg.ns.size(),
          "replicates must be a single count or one per n");
  for (auto r : cfg.replicates) require(r >= 1, "replicates must be >= 1");
  for (const auto& p : cfg.points) require(p.size() == cfg.synthetic.dim(), "evaluation point has wrong dimension");
  cfg.synthetic.validate();
}

inline std::string method_label(double beta) { return beta == 0.5 ? "plugin" : "testing"; }

}  // namespace detail

//! Acceptance fraction over replicated training sets at every grid point.
//! Columns: x, n, accept_fraction.
inline Table run_acceptance_curve(const ExperimentConfig& cfg) {
  detail::check_synthetic_common(cfg);
  detail::require(cfg.betas.size() == 1, "acceptance_curve takes exactly one beta");
  const RuleSpec rule = rule_from(AbstentionConfig{cfg.lambda, cfg.betas.front()});

  Table t;
  t.columns = detail::point_columns(cfg);
  t.columns.insert(t.columns.end(), {"n", "accept_fraction"});
  for (std::size_t k = 0; k < cfg.ns.size(); ++k) {
    const auto res = monte_carlo_rules(detail::setup_for(cfg, k), std::span<const RuleSpec>(&rule, 1), cfg.points);
    for (const auto& rep : res.reports.front()) {
      std::vector<Cell> row;
      detail::append_point(row, rep.x);
      row.emplace_back(static_cast<std::int64_t>(cfg.ns[k]));
      row.emplace_back(rep.accept_fraction);
      t.add(std::move(row));
    }
  }
  return t;
}

//! Expected excess risk of the testing rule and the plugin rule on the same
//! replicated datasets. Columns: x, n, method, beta, expected_excess, stderr,
//! accept_fraction, replicates.
inline Table run_excess_risk_vs_n(const ExperimentConfig& cfg) {
  detail::check_synthetic_common(cfg);
  detail::require(cfg.betas.size() == 1, "excess_risk_vs_n takes exactly one beta");
  const std::vector<double> betas{cfg.betas.front(), 0.5};
  const std::vector<std::string> labels{"testing", "plugin"};
  std::vector<RuleSpec> rules;
  for (double b : betas) rules.push_back(rule_from(AbstentionConfig{cfg.lambda, b}));

  Table t;
  t.columns = detail::point_columns(cfg);
  t.columns.insert(t.columns.end(),
                   {"n", "method", "beta", "expected_excess", "stderr", "accept_fraction", "replicates"});
  for (std::size_t k = 0; k < cfg.ns.size(); ++k) {
    const auto res = monte_carlo_rules(detail::setup_for(cfg, k), rules, cfg.points);
    for (std::size_t r = 0; r < rules.size(); ++r)
      for (const auto& rep : res.reports[r]) {
        std::vector<Cell> row;
        detail::append_point(row, rep.x);
        row.emplace_back(static_cast<std::int64_t>(cfg.ns[k]));
        row.emplace_back(labels[r]);
        row.emplace_back(betas[r]);
        row.emplace_back(rep.expected_excess);
        row.emplace_back(rep.mc_stderr);
        row.emplace_back(rep.accept_fraction);
        row.emplace_back(static_cast<std::int64_t>(rep.replicates));
        t.add(std::move(row));
      }
  }
  return t;
}

//! One curve per beta at a fixed n plus the plugin curve, all on the same
//! replicated datasets. Columns: x, beta, method, expected_excess, stderr,
//! accept_fraction, replicates.
inline Table run_excess_risk_vs_beta(const ExperimentConfig& cfg) {
  detail::check_synthetic_common(cfg);
  detail::require(cfg.ns.size() == 1, "excess_risk_vs_beta takes exactly one n");
  detail::require(!cfg.betas.empty(), "excess_risk_vs_beta needs a list of betas");
  std::vector<double> betas = cfg.betas;
  std::vector<std::string> labels(betas.size(), "testing");
  betas.push_back(0.5);
  labels.push_back("plugin");
  std::vector<RuleSpec> rules;
  for (double b : betas) rules.push_back(rule_from(AbstentionConfig{cfg.lambda, b}));

  const auto res = monte_carlo_rules(detail::setup_for(cfg, 0), rules, cfg.points);
  Table t;
  t.columns = detail::point_columns(cfg);
  t.columns.insert(t.columns.end(), {"beta", "method", "expected_excess", "stderr", "accept_fraction", "replicates"});
  for (std::size_t r = 0; r < rules.size(); ++r)
    for (const auto& rep : res.reports[r]) {
      std::vector<Cell> row;
      detail::append_point(row, rep.x);
      row.emplace_back(betas[r]);
      row.emplace_back(labels[r]);
      row.emplace_back(rep.expected_excess);
      row.emplace_back(rep.mc_stderr);
      row.emplace_back(rep.accept_fraction);
      row.emplace_back(static_cast<std::int64_t>(rep.replicates));
      t.add(std::move(row));
    }
  return t;
}

//! Expected excess at diagnostic points across n with a power-rule bandwidth,
//! reported against n h. Columns: x, n, h, nh, method, beta,
//! expected_excess, stderr, accept_fraction, replicates.
inline Table run_pointwise_convergence(const ExperimentConfig& cfg) {
  detail::check_synthetic_common(cfg);
  detail::require(std::holds_alternative<PowerRuleBandwidth>(cfg.bandwidth),
                  "pointwise_convergence requires the power_rule bandwidth policy");
  detail::require(cfg.betas.size() == 1, "pointwise_convergence takes exactly one beta");
  const auto rule_h = std::get<PowerRuleBandwidth>(cfg.bandwidth);
  const std::vector<double> betas{cfg.betas.front(), 0.5};
  const std::vector<std::string> labels{"testing", "plugin"};
  std::vector<RuleSpec> rules;
  for (double b : betas) rules.push_back(rule_from(AbstentionConfig{cfg.lambda, b}));

  Table t;
  t.columns = detail::point_columns(cfg);
  t.columns.insert(t.columns.end(), {"n", "h", "nh", "method", "beta", "expected_excess", "stderr",
                                     "accept_fraction", "replicates"});
  for (std::size_t k = 0; k < cfg.ns.size(); ++k) {
    const auto n = static_cast<double>(cfg.ns[k]);
    const double h = rule_h.c * std::pow(n, rule_h.exponent);
    const auto res = monte_carlo_rules(detail::setup_for(cfg, k), rules, cfg.points);
    for (std::size_t r = 0; r < rules.size(); ++r)
      for (const auto& rep : res.reports[r]) {
        std::vector<Cell> row;
        detail::append_point(row, rep.x);
        row.emplace_back(static_cast<std::int64_t>(cfg.ns[k]));
        row.emplace_back(h);
        row.emplace_back(n * h);
        row.emplace_back(labels[r]);
        row.emplace_back(betas[r]);
        row.emplace_back(rep.expected_excess);
        row.emplace_back(rep.mc_stderr);
        row.emplace_back(rep.accept_fraction);
        row.emplace_back(static_cast<std::int64_t>(rep.replicates));
        t.add(std::move(row));
      }
  }
  return t;
}

struct SweepData {
  Dataset train;
  Dataset test;
};

//! Loads or synthesizes the sweep's train/test pair (not yet standardized).
inline SweepData load_sweep_data(const ExperimentConfig& cfg) {
  detail::require(cfg.source.has_value(), "coverage_mse_sweep needs a data source");
  return std::visit(
      [&](const auto& src) -> SweepData {
        using T = std::decay_t<decltype(src)>;
        if constexpr (std::is_same_v<T, CsvPairSource>) {
          return {load_csv(src.train_csv, cfg.has_header, cfg.target_column),
                  load_csv(src.test_csv, cfg.has_header, cfg.target_column)};
        } else if constexpr (std::is_same_v<T, CsvSplitSource>) {
          auto s = covariate_shift_split(load_csv(src.csv, cfg.has_header, cfg.target_column), src.split);
          return {std::move(s.train), std::move(s.test)};
        } else {
          auto s = covariate_shift_split(generate_synthetic(src.spec), src.split);
          return {std::move(s.train), std::move(s.test)};
        }
      },
      *cfg.source);
}

//! Fits on the training part, then for every rule (each beta, each direct z)
//! and every lambda reports the fraction of test points accepted and the MSE
//! of f_hat against y over them. Columns: lambda, method, beta, z,
//! accept_fraction, mse_accepted, accepted, h.
inline Table run_coverage_mse_sweep(const ExperimentConfig& cfg, const SweepData& input) {
  detail::require(!cfg.lambdas.empty(), "coverage_mse_sweep needs lambdas");
  detail::require(!cfg.betas.empty() || !cfg.z_values.empty(), "coverage_mse_sweep needs betas or z_values");
  detail::require(input.test.size() > 0, "test set is empty");
  detail::require(input.train.has_response() && input.test.has_response(), "sweep data needs responses");
  detail::require(input.train.dim() == input.test.dim(), "train and test dimensions differ");
  for (double l : cfg.lambdas) detail::require(l >= 0.0 && std::isfinite(l), "lambdas must be >= 0");

  Dataset train = input.train, test = input.test;
  if (cfg.standardize) {
    auto st = standardize(train, test);
    train = std::move(st.train);
    test = std::move(st.test);
  }
  const auto kernel = make_kernel(cfg.kernel, train.dim());
  const double h = resolve_bandwidth(cfg.bandwidth, train, kernel, cfg.threads);
  const FitState fit(train, kernel, h);

  std::vector<PointEvaluation> evals(test.size());
  parallel_for(
      test.size(), [&](std::size_t i) { evals[i] = detail::evaluate_point(fit, test.row(i)); }, cfg.threads);

  struct Rule {
    std::string method;
    Cell beta;
    double z;
  };
  std::vector<Rule> rules;
  for (double b : cfg.betas) {
    AbstentionConfig{1.0, b}.validate();
    rules.push_back({detail::method_label(b), b, AbstentionConfig{1.0, b}.critical_value()});
  }
  for (double z : cfg.z_values) {
    detail::require(z >= 0.0 && std::isfinite(z), "z_values must be finite and >= 0");
    rules.push_back({"z", std::monostate{}, z});
  }

  Table t;
  t.columns = {"lambda", "method", "beta", "z", "accept_fraction", "mse_accepted", "accepted", "h"};
  for (const auto& rule : rules)
    for (double lambda : cfg.lambdas) {
      std::size_t accepted = 0;
      double sse = 0.0;
      for (std::size_t i = 0; i < test.size(); ++i) {
        if (!decide_from_evaluation(fit, evals[i], lambda, rule.z).accepted()) continue;
        ++accepted;
        const double r = evals[i].f_hat - test.y(i);
        sse += r * r;
      }
      const Cell mse = accepted ? Cell{sse / static_cast<double>(accepted)} : Cell{std::monostate{}};
      t.add({lambda, rule.method, rule.beta, rule.z, static_cast<double>(accepted) / static_cast<double>(test.size()),
             mse, static_cast<std::int64_t>(accepted), h});
    }
  return t;
}

inline Table run_coverage_mse_sweep(const ExperimentConfig& cfg) { return run_coverage_mse_sweep(cfg, load_sweep_data(cfg)); }

inline Table run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.scenario) {
    case Scenario::AcceptanceCurve: return run_acceptance_curve(cfg);
    case Scenario::ExcessRiskVsN: return run_excess_risk_vs_n(cfg);
    case Scenario::ExcessRiskVsBeta: return run_excess_risk_vs_beta(cfg);
    case Scenario::PointwiseConvergence: return run_pointwise_convergence(cfg);
    case Scenario::CoverageMseSweep: return run_coverage_mse_sweep(cfg);
  }
  throw Error("unknown scenario");
}

}  // namespace selreg
