#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "selreg/abstention.hpp"
#include "selreg/data.hpp"
#include "selreg/estimator.hpp"
#include "selreg/parallel.hpp"
#include "selreg/random.hpp"

namespace selreg {

//! Known regression function f and noise standard deviation sigma.
struct GroundTruth {
  std::function<double(Point)> mean_fn;
  std::function<double(Point)> sd_fn;

  double mean(Point x) const { return mean_fn(x); }
  double variance(Point x) const {
    const double s = sd_fn(x);
    return s * s;
  }
};

inline GroundTruth ground_truth(const SyntheticSpec& spec) {
  return {[f = spec.mean_fn](Point x) { return f(x); }, [s = spec.sd_fn](Point x) { return s(x); }};
}

//! Risk of the best rule at a point: min(sigma^2, lambda).
inline double oracle_risk(double sigma2, double lambda) { return std::min(sigma2, lambda); }

//! The oracle abstains iff sigma^2 >= lambda.
inline bool oracle_abstains(double sigma2, double lambda) { return sigma2 >= lambda; }

//! Conditional Chow risk given the training data: lambda when abstaining,
//! otherwise E[(Y - f_hat)^2 | X = x] = sigma^2 + (f_hat - f)^2.
inline double conditional_chow_risk(double f_hat, const GroundTruth& truth, Point x, double lambda, Verdict verdict) {
  if (verdict == Verdict::Reject) return lambda;
  const double bias = f_hat - truth.mean(x);
  return truth.variance(x) + bias * bias;
}

//! Excess over the oracle, split into the estimation term (accepted points
//! only) and the abstention-mismatch term |sigma^2 - lambda|.
inline double pointwise_excess(double f_hat, const GroundTruth& truth, Point x, double lambda, Verdict verdict) {
  const double sigma2 = truth.variance(x);
  const bool accepted = verdict == Verdict::Accept;
  double excess = 0.0;
  if (accepted) {
    const double bias = f_hat - truth.mean(x);
    excess += bias * bias;
  }
  if (accepted == oracle_abstains(sigma2, lambda)) excess += std::abs(sigma2 - lambda);
  return excess;
}

struct RiskReport {
  std::vector<double> x;
  double expected_excess = 0.0;
  double accept_fraction = 0.0;
  double mc_stderr = 0.0;
  std::size_t replicates = 0;

  friend bool operator==(const RiskReport&, const RiskReport&) = default;
};

// ---------------------------------------------------------------------------
// Bandwidth rules
// ---------------------------------------------------------------------------

struct LoocvBandwidth {
  std::vector<double> grid;  // empty: default grid from the data
};
struct FixedBandwidth {
  double h = 1.0;
};
//! h = c * n^exponent.
struct PowerRuleBandwidth {
  double c = 1.0;
  double exponent = -0.2;
};

using BandwidthPolicy = std::variant<LoocvBandwidth, FixedBandwidth, PowerRuleBandwidth>;

//! Used by the LOO-CV policy when there are too few points (n < 3) or no
//! covariate spread to cross-validate.
inline constexpr double kFallbackBandwidth = 1.0;

inline double resolve_bandwidth(const BandwidthPolicy& policy, const Dataset& data, const KernelSpec& kernel,
                                unsigned threads = 1) {
  if (const auto* fixed = std::get_if<FixedBandwidth>(&policy)) return fixed->h;
  if (const auto* rule = std::get_if<PowerRuleBandwidth>(&policy))
    return rule->c * std::pow(static_cast<double>(data.size()), rule->exponent);
  const auto& cv = std::get<LoocvBandwidth>(policy);
  if (data.size() < 3) return kFallbackBandwidth;
  if (!cv.grid.empty()) return select_bandwidth_loocv(data, kernel, cv.grid, threads);
  std::vector<double> grid;
  try {
    grid = default_bandwidth_grid(data);
  } catch (const Error&) {
    return kFallbackBandwidth;
  }
  return select_bandwidth_loocv(data, kernel, grid, threads);
}

// ---------------------------------------------------------------------------
// Monte-Carlo replication
// ---------------------------------------------------------------------------

//! Draws a training set of size n from a stream key.
using DatasetSampler = std::function<Dataset(std::size_t n, std::uint64_t key)>;

inline DatasetSampler make_sampler(SyntheticSpec spec) {
  return [spec = std::move(spec)](std::size_t n, std::uint64_t key) mutable {
    auto s = spec;
    s.n = n;
    s.seed = key;
    return generate_synthetic(s);
  };
}

//! Per-replicate seed; the same (seed, n, replicate) always yields the same data.
inline std::uint64_t replicate_key(std::uint64_t seed, std::size_t n, std::size_t replicate) {
  return derive_seed(seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(replicate)});
}

struct MonteCarloSetup {
  GroundTruth truth;
  DatasetSampler sampler;
  KernelKind kernel = KernelKind::Gaussian;
  BandwidthPolicy bandwidth = LoocvBandwidth{};
  std::size_t n = 100;
  std::size_t replicates = 100;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

//! Lambda and critical value of one decision rule scored on shared replicates.
struct RuleSpec {
  double lambda;
  double z;
};

inline RuleSpec rule_from(const AbstentionConfig& cfg) {
  cfg.validate();
  return {cfg.lambda, cfg.critical_value()};
}

struct ReplicateOutcome {
  double h = 0.0;
  // [rule][point]
  std::vector<std::vector<double>> excess;
  std::vector<std::vector<char>> accepted;
};

//! Fits one replicate and scores every rule at every point.
inline ReplicateOutcome run_replicate(const MonteCarloSetup& setup, std::span<const RuleSpec> rules,
                                      std::span<const std::vector<double>> points, std::size_t replicate) {
  const auto data = setup.sampler(setup.n, replicate_key(setup.seed, setup.n, replicate));
  const auto kernel = make_kernel(setup.kernel, data.dim());
  const double h = resolve_bandwidth(setup.bandwidth, data, kernel);
  const FitState fit(data, kernel, h);

  ReplicateOutcome out;
  out.h = h;
  out.excess.assign(rules.size(), std::vector<double>(points.size()));
  out.accepted.assign(rules.size(), std::vector<char>(points.size()));
  for (std::size_t p = 0; p < points.size(); ++p) {
    const Point x(points[p]);
    const auto eval = detail::evaluate_point(fit, x);
    for (std::size_t r = 0; r < rules.size(); ++r) {
      const auto dec = decide_from_evaluation(fit, eval, rules[r].lambda, rules[r].z);
      out.excess[r][p] = pointwise_excess(eval.f_hat, setup.truth, x, rules[r].lambda, dec.verdict);
      out.accepted[r][p] = dec.accepted() ? 1 : 0;
    }
  }
  return out;
}

struct MonteCarloResult {
  std::vector<std::vector<RiskReport>> reports;  // [rule][point]
  std::vector<double> bandwidths;                // per replicate
};

//! Scores several rules on the same replicated training sets. Replicates run
//! in parallel; aggregation is in replicate order.
inline MonteCarloResult monte_carlo_rules(const MonteCarloSetup& setup, std::span<const RuleSpec> rules,
                                          std::span<const std::vector<double>> points) {
  if (setup.replicates < 1) throw Error("need at least one replicate");
  if (points.empty()) throw Error("need at least one evaluation point");
  if (rules.empty()) throw Error("need at least one decision rule");

  std::vector<ReplicateOutcome> outcomes(setup.replicates);
  parallel_for(
      setup.replicates, [&](std::size_t r) { outcomes[r] = run_replicate(setup, rules, points, r); },
      setup.threads);

  MonteCarloResult result;
  const auto reps = static_cast<double>(setup.replicates);
  result.reports.assign(rules.size(), std::vector<RiskReport>(points.size()));
  for (std::size_t k = 0; k < rules.size(); ++k)
    for (std::size_t p = 0; p < points.size(); ++p) {
      double sum = 0.0, accepted = 0.0;
      for (const auto& o : outcomes) {
        sum += o.excess[k][p];
        accepted += o.accepted[k][p];
      }
      const double mean = sum / reps;
      double ss = 0.0;
      for (const auto& o : outcomes) ss += (o.excess[k][p] - mean) * (o.excess[k][p] - mean);
      auto& rep = result.reports[k][p];
      rep.x = points[p];
      rep.expected_excess = mean;
      rep.accept_fraction = accepted / reps;
      rep.mc_stderr = setup.replicates > 1 ? std::sqrt(ss / (reps - 1.0) / reps) : 0.0;
      rep.replicates = setup.replicates;
    }
  result.bandwidths.reserve(outcomes.size());
  for (const auto& o : outcomes) result.bandwidths.push_back(o.h);
  return result;
}

//! Monte-Carlo estimate of the expected pointwise excess risk of one rule.
inline std::vector<RiskReport> monte_carlo_expected_excess(const MonteCarloSetup& setup, const AbstentionConfig& cfg,
                                                           std::span<const std::vector<double>> points) {
  const RuleSpec rule = rule_from(cfg);
  return monte_carlo_rules(setup, std::span<const RuleSpec>(&rule, 1), points).reports.front();
}

}  // namespace selreg
