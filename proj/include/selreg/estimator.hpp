#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "selreg/dataset.hpp"
#include "selreg/error.hpp"
#include "selreg/kernel.hpp"
#include "selreg/parallel.hpp"

namespace selreg {

//! Training data, kernel and bandwidth frozen together. Every estimator is a
//! pure read against this state.
class FitState {
 public:
  FitState(Dataset train, KernelSpec kernel, double h)
      : train_(std::move(train)), kernel_(kernel), h_(h) {
    if (!(h_ > 0.0) || !std::isfinite(h_)) throw Error("bandwidth must be positive and finite");
    if (!train_.has_response()) throw Error("training data needs a response column");
    if (kernel_.dimension != train_.dim())
      throw Error("kernel dimension " + std::to_string(kernel_.dimension) +
                  " does not match data dimension " + std::to_string(train_.dim()));
    volume_ = std::pow(h_, static_cast<double>(train_.dim()));
  }

  const Dataset& train() const noexcept { return train_; }
  const KernelSpec& kernel() const noexcept { return kernel_; }
  double h() const noexcept { return h_; }
  std::size_t n() const noexcept { return train_.size(); }
  std::size_t dim() const noexcept { return train_.dim(); }

  //! n * h^d, the effective sample-size scale shared by the density estimate
  //! and the acceptance test.
  double n_hd() const noexcept { return static_cast<double>(n()) * volume_; }

 private:
  Dataset train_;
  KernelSpec kernel_;
  double h_;
  double volume_ = 1.0;
};

struct PointEvaluation {
  double f_hat = std::numeric_limits<double>::quiet_NaN();
  double sigma2_hat = std::numeric_limits<double>::quiet_NaN();
  double p_hat = 0.0;
  double weight_denominator = 0.0;  // sum_i K((x - X_i) / h)

  //! True when every kernel weight vanished and f_hat / sigma2_hat are undefined.
  bool degenerate() const noexcept { return std::isnan(f_hat); }
};

namespace detail {

inline void check_query(const FitState& fit, Point x) {
  if (x.size() != fit.dim())
    throw Error("query point has dimension " + std::to_string(x.size()) + ", expected " +
                std::to_string(fit.dim()));
}

inline double squared_distance(Point a, Point b) noexcept {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    s += diff * diff;
  }
  return s;
}

//! Relative (unnormalized) weights. For the Gaussian kernel the exponent is
//! shifted by its minimum so that weights stay representable far from the
//! data; the normalized weights are unchanged by the shift.
inline double relative_weights(const KernelSpec& kernel, std::span<const double> scaled_sq,
                               double min_sq, std::vector<double>& w) {
  w.resize(scaled_sq.size());
  double total = 0.0;
  if (kernel.kind == KernelKind::Gaussian) {
    for (std::size_t i = 0; i < scaled_sq.size(); ++i) {
      w[i] = std::exp(-0.5 * (scaled_sq[i] - min_sq));
      total += w[i];
    }
  } else {
    for (std::size_t i = 0; i < scaled_sq.size(); ++i) {
      w[i] = kernel.profile(scaled_sq[i]);
      total += w[i];
    }
  }
  return total;
}

//! Computes everything in one sweep over the training set. Degenerate points
//! come back with NaN mean and variance instead of throwing.
inline PointEvaluation evaluate_point(const FitState& fit, Point x, std::vector<double>* weights_out = nullptr) {
  check_query(fit, x);
  const auto& data = fit.train();
  const std::size_t n = data.size();
  const double inv_h2 = 1.0 / (fit.h() * fit.h());

  std::vector<double> sq(n);
  double min_sq = std::numeric_limits<double>::infinity();
  double denom = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sq[i] = squared_distance(x, data.row(i)) * inv_h2;
    min_sq = std::min(min_sq, sq[i]);
    denom += fit.kernel().eval_sq(sq[i]);
  }

  PointEvaluation out;
  out.weight_denominator = denom;
  out.p_hat = denom / fit.n_hd();

  std::vector<double> local;
  std::vector<double>& w = weights_out ? *weights_out : local;
  const double total = relative_weights(fit.kernel(), sq, min_sq, w);
  if (!(total > 0.0)) {
    w.clear();
    return out;
  }
  for (auto& v : w) v /= total;

  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += w[i] * data.y(i);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = data.y(i) - mean;
    var += w[i] * r * r;
  }
  out.f_hat = mean;
  out.sigma2_hat = std::max(var, 0.0);
  return out;
}

}  // namespace detail

//! f_hat, sigma2_hat and p_hat at x in a single pass.
//! Throws DegenerateNeighborhood when all kernel weights are zero.
inline PointEvaluation evaluate(const FitState& fit, Point x) {
  auto e = detail::evaluate_point(fit, x);
  if (e.degenerate()) throw DegenerateNeighborhood();
  return e;
}

//! Normalized Nadaraya-Watson weights at x.
inline std::vector<double> nw_weights(const FitState& fit, Point x) {
  std::vector<double> w;
  const auto e = detail::evaluate_point(fit, x, &w);
  if (e.degenerate()) throw DegenerateNeighborhood();
  return w;
}

inline double predict_mean(const FitState& fit, Point x) { return evaluate(fit, x).f_hat; }

//! Weighted variance of the responses, sum_i w_i (Y_i - f_hat)^2, which is
//! algebraically the weighted second moment minus the squared weighted mean.
inline double predict_variance(const FitState& fit, Point x) { return evaluate(fit, x).sigma2_hat; }

//! Kernel density estimate (1 / (n h^d)) sum_i K((x - X_i) / h). Zero is a
//! legal value for bounded-support kernels.
inline double estimate_density(const FitState& fit, Point x) {
  return detail::evaluate_point(fit, x).p_hat;
}

//! Log-spaced bandwidth grid between lo_frac and hi_frac times the covariate
//! range averaged over coordinates.
inline std::vector<double> default_bandwidth_grid(const Dataset& data, std::size_t count = 30,
                                                  double lo_frac = 0.05, double hi_frac = 1.0) {
  if (count == 0) throw Error("bandwidth grid must have at least one point");
  double range = 0.0;
  for (std::size_t j = 0; j < data.dim(); ++j) {
    double lo = data.x(0, j), hi = data.x(0, j);
    for (std::size_t i = 1; i < data.size(); ++i) {
      lo = std::min(lo, data.x(i, j));
      hi = std::max(hi, data.x(i, j));
    }
    range += hi - lo;
  }
  range /= static_cast<double>(data.dim());
  if (!(range > 0.0)) throw Error("covariates have zero range; cannot build a bandwidth grid");

  std::vector<double> grid(count);
  const double lo = std::log(lo_frac * range), hi = std::log(hi_frac * range);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
    grid[k] = std::exp(lo + t * (hi - lo));
  }
  return grid;
}

//! Leave-one-out sum of squared prediction errors for every bandwidth in the
//! grid. A point whose leave-one-out neighbourhood is empty scores
//! (Y_i - mean(Y))^2.
inline std::vector<double> loocv_scores(const Dataset& data, const KernelSpec& kernel,
                                        std::span<const double> grid, unsigned threads = 1) {
  if (grid.empty()) throw Error("bandwidth grid is empty");
  for (double h : grid)
    if (!(h > 0.0) || !std::isfinite(h)) throw Error("bandwidth grid entries must be positive");
  if (!data.has_response()) throw Error("cross-validation needs responses");
  if (kernel.dimension != data.dim()) throw Error("kernel dimension does not match data");

  const std::size_t n = data.size();
  const std::size_t g = grid.size();
  double y_bar = 0.0;
  for (std::size_t i = 0; i < n; ++i) y_bar += data.y(i);
  y_bar /= static_cast<double>(n);

  // errors[k * n + i]: squared LOO error of point i at grid[k]; summed in
  // index order below so the result does not depend on threading.
  std::vector<double> errors(g * n);
  parallel_for(
      n,
      [&](std::size_t i) {
        std::vector<double> sq;
        std::vector<double> ys;
        sq.reserve(n - 1);
        ys.reserve(n - 1);
        double min_sq = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i) continue;
          const double s = detail::squared_distance(data.row(i), data.row(j));
          sq.push_back(s);
          ys.push_back(data.y(j));
          min_sq = std::min(min_sq, s);
        }
        for (std::size_t k = 0; k < g; ++k) {
          const double inv_h2 = 1.0 / (grid[k] * grid[k]);
          double num = 0.0, den = 0.0;
          if (kernel.kind == KernelKind::Gaussian) {
            for (std::size_t m = 0; m < sq.size(); ++m) {
              const double w = std::exp(-0.5 * (sq[m] - min_sq) * inv_h2);
              num += w * ys[m];
              den += w;
            }
          } else {
            for (std::size_t m = 0; m < sq.size(); ++m) {
              const double w = kernel.profile(sq[m] * inv_h2);
              num += w * ys[m];
              den += w;
            }
          }
          const double pred = den > 0.0 ? num / den : y_bar;
          const double r = data.y(i) - pred;
          errors[k * n + i] = r * r;
        }
      },
      threads);

  std::vector<double> scores(g, 0.0);
  for (std::size_t k = 0; k < g; ++k)
    for (std::size_t i = 0; i < n; ++i) scores[k] += errors[k * n + i];
  return scores;
}

//! Grid bandwidth minimizing the leave-one-out squared error; ties go to the
//! smaller bandwidth.
inline double select_bandwidth_loocv(const Dataset& data, const KernelSpec& kernel,
                                     std::span<const double> grid, unsigned threads = 1) {
  if (grid.empty()) throw Error("bandwidth grid is empty");
  if (data.size() < 3) throw Error("leave-one-out cross-validation needs at least 3 samples");
  const auto scores = loocv_scores(data, kernel, grid, threads);
  std::size_t best = 0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (scores[k] < scores[best] || (scores[k] == scores[best] && grid[k] < grid[best])) best = k;
  }
  return grid[best];
}

}  // namespace selreg
