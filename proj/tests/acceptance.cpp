// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "selreg/abstention.hpp"
#include "selreg/data.hpp"
#include "selreg/estimator.hpp"
#include "selreg/experiments.hpp"
#include "selreg/risk.hpp"
#include "selreg/stats.hpp"

using namespace selreg;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("[%s] %2d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Random (dataset, bandwidth, query, lambda, beta) draw.
struct Case {
  Dataset data;
  double h;
  std::vector<double> x;
  double lambda;
  double beta;
};

Case random_case(std::uint64_t seed) {
  CounterRng rng(derive_seed(seed, {0xACCE}));
  SyntheticSpec spec;
  const std::size_t d = 1 + rng.below(3);
  spec.covariates.clear();
  for (std::size_t j = 0; j < d; ++j)
    spec.covariates.push_back(rng.uniform() < 0.5 ? CovariateDist::uniform(-2, 2) : CovariateDist::normal(0, 1));
  spec.sd_fn = rng.uniform() < 0.5 ? ResponseFunction::sigmoid() : ResponseFunction::heaviside();
  spec.n = 2 + rng.below(300);
  spec.seed = seed;
  Case c{generate_synthetic(spec), std::exp(rng.uniform(std::log(0.03), std::log(2.0))), {}, 0, 0};
  for (std::size_t j = 0; j < d; ++j) c.x.push_back(rng.uniform(-2.5, 2.5));
  c.lambda = std::exp(rng.uniform(std::log(0.01), std::log(2.0)));
  c.beta = rng.uniform(0.001, 0.5);
  return c;
}

Outcome decomposition_identity() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 500; ++s) {
    const auto c = random_case(s);
    SyntheticSpec spec;
    spec.covariates.assign(c.data.dim(), CovariateDist::uniform(-2, 2));
    const auto truth = ground_truth(spec);
    const FitState fit(c.data, make_kernel(KernelKind::Gaussian, c.data.dim()), c.h);
    const auto d = decide(fit, c.x, AbstentionConfig{c.lambda, c.beta});
    const double f_hat = std::isfinite(d.eval.f_hat) ? d.eval.f_hat : 0.0;
    for (auto v : {d.verdict, Verdict::Accept, Verdict::Reject}) {
      const double lhs = conditional_chow_risk(f_hat, truth, c.x, c.lambda, v) - oracle_risk(truth.variance(c.x), c.lambda);
      worst = std::max(worst, std::abs(lhs - pointwise_excess(f_hat, truth, c.x, c.lambda, v)));
    }
  }
  return {worst <= 1e-12, fmt("max |chow - oracle - excess| = %.3g over 500 cases", worst)};
}

Outcome oracle_optimality() {
  int checked = 0, violations = 0;
  const std::vector<double> x{0.0};
  for (double lambda : {0.1, 0.36, 1.0})
    for (int k = 0; k <= 20; ++k) {
      const double sigma2 = 0.1 * k;
      const GroundTruth truth{[](Point) { return 0.5; }, [s = std::sqrt(sigma2)](Point) { return s; }};
      const double oracle = oracle_risk(truth.variance(x), lambda);
      const double var = truth.variance(x);
      // Deterministic rules: abstain, or predict f + delta.
      for (double delta : {std::numeric_limits<double>::quiet_NaN(), 0.0, 0.05, -0.05, 0.3, -1.0}) {
        const bool reject = std::isnan(delta);
        const double risk = reject ? conditional_chow_risk(0.0, truth, x, lambda, Verdict::Reject)
                                   : conditional_chow_risk(0.5 + delta, truth, x, lambda, Verdict::Accept);
        const bool matches_oracle = reject ? var >= lambda : (delta == 0.0 && var <= lambda);
        ++checked;
        if (risk < oracle) ++violations;
        if ((risk == oracle) != matches_oracle) ++violations;
      }
    }
  return {violations == 0, fmt("%d rule/point pairs, %d violations", checked, violations)};
}

Outcome plugin_reduction() {
  int mismatches = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto c = random_case(1000 + s);
    const FitState fit(c.data, make_kernel(KernelKind::Gaussian, c.data.dim()), c.h);
    const auto a = decide(fit, c.x, AbstentionConfig{c.lambda, 0.5});
    const auto b = plugin_decide(fit, c.x, c.lambda);
    if (a.verdict != b.verdict || a.reason != b.reason) ++mismatches;
  }
  return {mismatches == 0, fmt("1000 cases, %d mismatches", mismatches)};
}

Outcome monotonicity() {
  int violations = 0, accepted = 0;
  const std::vector<double> lambdas{0.01, 0.05, 0.1, 0.2, 0.36, 0.5, 0.8, 1.2, 2.0, 5.0};
  const std::vector<double> betas{0.001, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto c = random_case(2000 + s);
    const FitState fit(c.data, make_kernel(KernelKind::Gaussian, c.data.dim()), c.h);
    bool prev = false;
    for (double l : lambdas) {
      const bool a = decide(fit, c.x, AbstentionConfig{l, c.beta}).accepted();
      if (prev && !a) ++violations;
      prev = a;
      accepted += a;
    }
    prev = false;
    for (double b : betas) {
      const bool a = decide(fit, c.x, AbstentionConfig{c.lambda, b}).accepted();
      if (prev && !a) ++violations;
      prev = a;
    }
  }
  return {violations == 0, fmt("1000 cases x (10 lambdas + 8 betas), %d accepts, %d violations", accepted, violations)};
}

Outcome estimator_correctness() {
  double weight_err = 0.0, min_var = 0.0, equiv_err = 0.0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto c = random_case(3000 + s);
    const std::size_t d = c.data.dim();
    const auto kernel = make_kernel(KernelKind::Gaussian, d);
    const FitState fit(c.data, kernel, c.h);
    const auto w = nw_weights(fit, c.x);
    double sum = 0.0;
    for (double v : w) sum += v;
    weight_err = std::max(weight_err, std::abs(sum - 1.0));
    const auto e = evaluate(fit, c.x);
    min_var = std::min(min_var, e.sigma2_hat);

    // y -> a y + b and a common shift of covariates and query.
    const double a = -2.3, b = 1.7;
    auto y = c.data.responses();
    for (auto& v : y) v = a * v + b;
    const auto es = evaluate(FitState(Dataset(d, c.data.covariates(), y), kernel, c.h), c.x);
    equiv_err = std::max({equiv_err, std::abs(es.f_hat - (a * e.f_hat + b)), std::abs(es.sigma2_hat - a * a * e.sigma2_hat)});
    auto xs = c.data.covariates();
    for (auto& v : xs) v += 0.83;
    auto q = c.x;
    for (auto& v : q) v += 0.83;
    const auto et = evaluate(FitState(Dataset(d, xs, c.data.responses()), kernel, c.h), q);
    equiv_err = std::max({equiv_err, std::abs(et.f_hat - e.f_hat), std::abs(et.sigma2_hat - e.sigma2_hat),
                          std::abs(et.p_hat - e.p_hat)});
  }
  SyntheticSpec spec;
  spec.n = 2000;
  spec.seed = 17;
  const FitState fit(generate_synthetic(spec), make_kernel(KernelKind::Gaussian, 1), 0.2);
  const int points = 600;
  const double step = 6.0 / (points - 1);
  double mass = 0.0;
  for (int k = 0; k < points; ++k) {
    const std::vector<double> x{-3.0 + k * step};
    mass += (k == 0 || k == points - 1 ? 0.5 : 1.0) * estimate_density(fit, x);
  }
  mass *= step;
  const bool ok = weight_err <= 1e-12 && min_var >= 0.0 && equiv_err <= 1e-10 && mass >= 0.97 && mass <= 1.03;
  return {ok, fmt("weight sum err %.2g, min sigma2 %.2g, equivariance err %.2g, density mass %.4f", weight_err,
                  min_var, equiv_err, mass)};
}

Outcome quantile_accuracy() {
  double worst_cdf = 0.0, worst_x = 0.0;
  for (int k = 1; k <= 999; ++k) {
    const long double q = k / 1000.0L;
    long double lo = -40.0L, hi = 40.0L;
    for (int i = 0; i < 200; ++i) {
      const long double mid = 0.5L * (lo + hi);
      (0.5L * std::erfc(-mid / std::sqrt(2.0L)) < q ? lo : hi) = mid;
    }
    const double z = normal_quantile(static_cast<double>(q));
    const long double cdf = 0.5L * std::erfc(-static_cast<long double>(z) / std::sqrt(2.0L));
    worst_cdf = std::max(worst_cdf, static_cast<double>(std::abs(cdf - q)));
    worst_x = std::max(worst_x, static_cast<double>(std::abs(z - 0.5L * (lo + hi))));
  }
  return {worst_cdf <= 1e-8, fmt("max |Phi(z) - q| = %.3g, max |z - bisection| = %.3g on 999 points", worst_cdf, worst_x)};
}

ExperimentConfig figure_config(Scenario s) {
  ExperimentConfig c;
  c.scenario = s;
  c.seed = 20240;
  c.threads = 1;
  c.lambda = 0.36;
  c.betas = {0.05};
  return c;
}

double mean_over(const Table& t, double lo, double hi) {
  double sum = 0.0;
  int count = 0;
  for (const auto& row : t.rows) {
    const double x = as_real(row[t.column("x")]);
    if (x >= lo - 1e-12 && x <= hi + 1e-12) sum += as_real(row[t.column("accept_fraction")]), ++count;
  }
  return sum / count;
}

struct Estimate {
  double value, se;
};

Estimate lookup(const Table& t, double x, double n, const std::string& method) {
  for (const auto& row : t.rows)
    if (as_real(row[t.column("x")]) == x && as_real(row[t.column("n")]) == n &&
        std::get<std::string>(row[t.column("method")]) == method)
      return {as_real(row[t.column("expected_excess")]), as_real(row[t.column("stderr")])};
  throw Error("missing row");
}

Outcome regime_reproduction() {
  auto a = figure_config(Scenario::AcceptanceCurve);
  a.ns = {1000};
  a.replicates = {100};
  a.points = default_grid_1d();
  const auto curve = run_acceptance_curve(a);
  const double right = mean_over(curve, 1.0, 2.0), left = mean_over(curve, -2.0, -1.0);
  const bool ok_a = right < 0.10 && left > 0.80;

  auto e = figure_config(Scenario::ExcessRiskVsN);
  e.ns = {50, 500};
  e.replicates = {100};
  e.points = {{-0.5}, {0.8}, {1.6}};
  const auto t = run_excess_risk_vs_n(e);

  // (b) Upper 3-sigma bound at n = 500 within a quarter of the n = 50 value.
  // When n = 50 already sits at the oracle on every replicate (0 +- 0) the
  // bound holds only if n = 500 does too.
  bool ok_b = true;
  double ratio_fast = 0.0;
  std::string detail_b;
  for (double x : {0.8, 1.6}) {
    const auto e50 = lookup(t, x, 50, "testing"), e500 = lookup(t, x, 500, "testing");
    const double upper = e500.value + 3 * e500.se;
    ok_b = ok_b && upper <= 0.25 * e50.value;
    const double r = e50.value > 0 ? upper / e50.value : (upper == 0 ? 0.0 : INFINITY);
    ratio_fast = std::max(ratio_fast, r);
    detail_b += fmt(" x=%.1f: %.3g+-%.2g -> %.3g+-%.2g;", x, e50.value, e50.se, e500.value, e500.se);
  }

  // (c) Decrease at x = -0.5 beyond 3 sigma, but by a smaller factor.
  const auto s50 = lookup(t, -0.5, 50, "testing"), s500 = lookup(t, -0.5, 500, "testing");
  const bool decreases = s500.value + 3 * s500.se < s50.value - 3 * s50.se;
  const double ratio_slow_lo = std::max(0.0, s500.value - 3 * s500.se) / (s50.value + 3 * s50.se);
  const bool ok_c = decreases && ratio_slow_lo > ratio_fast;

  return {ok_a && ok_b && ok_c,
          fmt("(a) accept[1,2]=%.3f accept[-2,-1]=%.3f; (b)%s upper ratio %.3g; (c) x=-0.5: %.3g+-%.2g -> %.3g+-%.2g, "
              "lower ratio %.3g",
              right, left, detail_b.c_str(), ratio_fast, s50.value, s50.se, s500.value, s500.se, ratio_slow_lo)};
}

Outcome testing_beats_plugin() {
  auto c = figure_config(Scenario::ExcessRiskVsN);
  c.bandwidth = PowerRuleBandwidth{1.0, -0.2};
  c.ns = {500};
  c.replicates = {200};
  c.points = {{1.6}};
  const auto t = run_excess_risk_vs_n(c);
  const auto test = lookup(t, 1.6, 500, "testing"), plug = lookup(t, 1.6, 500, "plugin");
  const double pooled = std::hypot(test.se, plug.se);
  const double margin = plug.value - test.value;
  return {margin > 2 * pooled, fmt("testing %.3g+-%.2g, plugin %.3g+-%.2g, margin %.3g vs 2*pooled se %.3g", test.value,
                                   test.se, plug.value, plug.se, margin, 2 * pooled)};
}

// Least-squares non-decreasing fit (pool adjacent violators).
std::vector<double> isotonic_fit(const std::vector<double>& v) {
  std::vector<double> level;
  std::vector<std::size_t> width;
  for (double x : v) {
    level.push_back(x);
    width.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] > level.back()) {
      const auto w = width[width.size() - 2] + width.back();
      level[level.size() - 2] = (level[level.size() - 2] * width[width.size() - 2] + level.back() * width.back()) / w;
      width[width.size() - 2] = w;
      level.pop_back();
      width.pop_back();
    }
  }
  std::vector<double> out;
  for (std::size_t b = 0; b < level.size(); ++b) out.insert(out.end(), width[b], level[b]);
  return out;
}

Outcome covariate_shift_sweep() {
  ExperimentConfig c;
  c.scenario = Scenario::CoverageMseSweep;
  c.seed = 1;
  c.source = CsvSplitSource{std::string(SELREG_SOURCE_DIR) + "/data/airfoil_standin.csv", ShiftSplit{1, 0.7, 0.2, 7}};
  c.has_header = true;
  c.target_column = 5;
  c.betas = {0.01, 0.05, 0.1, 0.25, 0.5};
  for (int k = 0; k <= 50; ++k) c.lambdas.push_back(k);
  const auto data = load_sweep_data(c);
  if (data.train.size() + data.test.size() != 1500 || data.train.dim() != 5) return {false, "unexpected stand-in shape"};
  const auto t = run_coverage_mse_sweep(c, data);

  const std::size_t L = c.lambdas.size();
  int lambda_violations = 0, step_drops = 0, steps = 0;
  double worst_rel_rms = 0.0, max_accept = 0.0;
  for (std::size_t r = 0; r < c.betas.size(); ++r) {
    // MSE at each new acceptance level, in order of increasing acceptance.
    std::vector<double> mse;
    double prev_acc = -1.0;
    for (std::size_t k = 0; k < L; ++k) {
      const auto& row = t.rows[r * L + k];
      const double acc = as_real(row[t.column("accept_fraction")]);
      const double m = as_real(row[t.column("mse_accepted")]);
      max_accept = std::max(max_accept, acc);
      if (acc < prev_acc) ++lambda_violations;
      if (acc > prev_acc && std::isfinite(m)) {
        if (!mse.empty() && m < 0.9 * *std::max_element(mse.begin(), mse.end())) ++step_drops;
        mse.push_back(m);
      }
      prev_acc = std::max(prev_acc, acc);
    }
    steps += static_cast<int>(mse.size());
    const auto fit = isotonic_fit(mse);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < mse.size(); ++k) {
      num += (mse[k] - fit[k]) * (mse[k] - fit[k]);
      den += mse[k] * mse[k];
    }
    worst_rel_rms = std::max(worst_rel_rms, den > 0 ? std::sqrt(num / den) : 0.0);
  }
  return {lambda_violations == 0 && worst_rel_rms <= 0.10 && steps > 20,
          fmt("%zu test rows, %d acceptance levels, max acceptance %.3f, lambda violations %d, worst relative RMS "
              "distance to isotonic fit %.4f (<= 0.10); steps dropping >10%% below an earlier level: %d",
              data.test.size(), steps, max_accept, lambda_violations, worst_rel_rms, step_drops)};
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "selreg_acceptance_determinism";
  fs::create_directories(dir);
  std::vector<ExperimentConfig> configs;
  for (auto s : {Scenario::AcceptanceCurve, Scenario::ExcessRiskVsN, Scenario::ExcessRiskVsBeta,
                 Scenario::PointwiseConvergence}) {
    auto c = figure_config(s);
    c.ns = s == Scenario::ExcessRiskVsBeta ? std::vector<std::size_t>{100} : std::vector<std::size_t>{50, 200};
    c.replicates = {20};
    c.points = s == Scenario::AcceptanceCurve ? default_grid_1d() : default_grid_1d(9);
    if (s == Scenario::ExcessRiskVsBeta) c.betas = {0.01, 0.05, 0.25};
    if (s == Scenario::PointwiseConvergence) c.bandwidth = PowerRuleBandwidth{1.0, -0.2};
    configs.push_back(c);
  }
  ExperimentConfig sweep;
  sweep.scenario = Scenario::CoverageMseSweep;
  sweep.seed = 5;
  sweep.source = CsvSplitSource{std::string(SELREG_SOURCE_DIR) + "/data/airfoil_standin.csv", ShiftSplit{0, 0.7, 0.2, 9}};
  sweep.target_column = 5;
  sweep.betas = {0.05, 0.5};
  sweep.z_values = {0.5};
  for (int k = 0; k <= 10; ++k) sweep.lambdas.push_back(5.0 * k);
  configs.push_back(sweep);

  auto read = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  };
  int identical = 0;
  std::string detail;
  for (auto& c : configs) {
    const std::string name = scenario_name(c.scenario);
    c.threads = 1;
    run_experiment(c).save((dir / (name + ".a.csv")).string());
    c.threads = 0;  // all cores: scheduling must not leak into the output
    run_experiment(c).save((dir / (name + ".b.csv")).string());
    const auto a = read(dir / (name + ".a.csv")), b = read(dir / (name + ".b.csv"));
    if (!a.empty() && a == b) ++identical;
    else detail += " " + name + " differs;";
  }
  fs::remove_all(dir);
  return {identical == 5, fmt("%d/5 scenarios byte-identical on rerun%s", identical, detail.c_str())};
}

}  // namespace

int main() {
  report(1, "excess-risk decomposition identity", decomposition_identity);
  report(2, "oracle rule optimality", oracle_optimality);
  report(3, "plugin reduction at beta = 0.5", plugin_reduction);
  report(4, "acceptance monotone in lambda and beta", monotonicity);
  report(5, "estimator correctness", estimator_correctness);
  report(6, "normal quantile accuracy", quantile_accuracy);
  report(7, "convergence regimes (single-threaded)", regime_reproduction);
  report(8, "testing beats plugin where sigma2 > lambda", testing_beats_plugin);
  report(9, "covariate-shift sweep on the airfoil stand-in", covariate_shift_sweep);
  report(10, "determinism of every scenario", determinism);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
