#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "selreg/error.hpp"
#include "selreg/estimator.hpp"
#include "selreg/stats.hpp"

namespace selreg {

enum class Verdict { Accept, Reject };
enum class Reason { Accepted, LowDensity, VarianceTestFailed };

inline const char* to_string(Verdict v) { return v == Verdict::Accept ? "accept" : "reject"; }

inline const char* to_string(Reason r) {
  switch (r) {
    case Reason::Accepted: return "accepted";
    case Reason::LowDensity: return "low_density";
    case Reason::VarianceTestFailed: return "variance_test_failed";
  }
  return "?";
}

//! Abstention cost lambda and significance level beta of the one-sided
//! variance test. beta = 0.5 gives the plugin rule.
struct AbstentionConfig {
  double lambda = 0.0;
  double beta = 0.5;

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw Error("lambda must be positive, got " + std::to_string(lambda));
    if (!(beta > 0.0 && beta <= 0.5))
      throw Error("beta must lie in (0, 0.5], got " + std::to_string(beta));
  }

  //! z_{1-beta}; exactly 0 for the plugin level.
  double critical_value() const { return beta == 0.5 ? 0.0 : normal_quantile(1.0 - beta); }
};

struct Decision {
  Verdict verdict = Verdict::Reject;
  Reason reason = Reason::LowDensity;
  PointEvaluation eval;
  double threshold = 0.0;

  bool accepted() const noexcept { return verdict == Verdict::Accept; }
};

//! Minimum density 4a / (n h^d) a point needs before it may be accepted.
inline double density_gate(const FitState& fit) { return 4.0 * fit.kernel().a / fit.n_hd(); }

//! lambda * (1 - z ||K||_2 sqrt(2 / (n h^d p_hat))). The estimated density
//! stands in for the true one. With z = 0 this is exactly lambda.
inline double acceptance_threshold(double lambda, double z, double l2_norm, double n_hd, double p_hat) {
  if (z == 0.0) return lambda;
  if (!(p_hat > 0.0)) return -std::numeric_limits<double>::infinity();
  return lambda * (1.0 - z * l2_norm * std::sqrt(2.0 / (n_hd * p_hat)));
}

//! Applies the density gate and the variance test to an already computed
//! evaluation. lambda may be 0 here (used by lambda sweeps); z must be >= 0.
inline Decision decide_from_evaluation(const FitState& fit, const PointEvaluation& eval, double lambda, double z) {
  Decision d;
  d.eval = eval;
  d.threshold = acceptance_threshold(lambda, z, fit.kernel().l2_norm, fit.n_hd(), eval.p_hat);
  if (eval.degenerate() || eval.p_hat < density_gate(fit)) {
    d.verdict = Verdict::Reject;
    d.reason = Reason::LowDensity;
  } else if (eval.sigma2_hat <= d.threshold) {
    d.verdict = Verdict::Accept;
    d.reason = Reason::Accepted;
  } else {
    d.verdict = Verdict::Reject;
    d.reason = Reason::VarianceTestFailed;
  }
  return d;
}

//! Acceptance test with the critical value given directly instead of via beta.
inline Decision decide_with_z(const FitState& fit, Point x, double lambda, double z) {
  if (!(z >= 0.0) || !std::isfinite(z)) throw Error("critical value z must be finite and >= 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error("lambda must be finite and >= 0");
  return decide_from_evaluation(fit, detail::evaluate_point(fit, x), lambda, z);
}

//! Accept iff p_hat >= 4a / (n h^d) and sigma2_hat <= threshold.
inline Decision decide(const FitState& fit, Point x, const AbstentionConfig& cfg) {
  cfg.validate();
  return decide_with_z(fit, x, cfg.lambda, cfg.critical_value());
}

inline Decision plugin_decide(const FitState& fit, Point x, double lambda) {
  return decide(fit, x, AbstentionConfig{lambda, 0.5});
}

}  // namespace selreg
