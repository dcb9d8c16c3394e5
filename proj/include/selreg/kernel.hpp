#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>

#include "selreg/error.hpp"

namespace selreg {

enum class KernelKind { Gaussian, Epanechnikov };

//! Radially symmetric smoothing kernel K(t) = norm * profile(|t|^2) together
//! with the constants the abstention rule needs: a lower bound
//! K(t) >= a * 1{|t| <= b} and the L2 norm (int K^2)^(1/2).
struct KernelSpec {
  KernelKind kind = KernelKind::Gaussian;
  std::size_t dimension = 1;
  double a = 0.0;
  double b = 0.0;
  double l2_norm = 0.0;
  double norm = 0.0;  // normalizing constant in front of the profile

  //! Unnormalized profile as a function of the squared radius.
  double profile(double sq_radius) const noexcept {
    if (kind == KernelKind::Gaussian) return std::exp(-0.5 * sq_radius);
    return sq_radius <= 1.0 ? 1.0 - sq_radius : 0.0;
  }

  double eval_sq(double sq_radius) const noexcept { return norm * profile(sq_radius); }

  bool bounded_support() const noexcept { return kind == KernelKind::Epanechnikov; }
};

inline const char* kernel_name(KernelKind kind) {
  return kind == KernelKind::Gaussian ? "gaussian" : "epanechnikov";
}

inline KernelKind parse_kernel_kind(std::string_view name) {
  if (name == "gaussian") return KernelKind::Gaussian;
  if (name == "epanechnikov") return KernelKind::Epanechnikov;
  throw Error("unknown kernel '" + std::string(name) + "' (expected gaussian or epanechnikov)");
}

namespace detail {

inline void check_supported(KernelKind kind, std::size_t d) {
  if (d == 0) throw Error("kernel dimension must be positive");
  if (kind == KernelKind::Epanechnikov && d != 1)
    throw Error("epanechnikov kernel is only supported for d = 1");
}

inline double gaussian_norm(std::size_t d) {
  return std::pow(2.0 * std::numbers::pi, -0.5 * static_cast<double>(d));
}

}  // namespace detail

//! ||K||_2. Gaussian: (4 pi)^(-d/4). Epanechnikov (d = 1): sqrt(0.6).
inline double l2_norm_of(KernelKind kind, std::size_t d) {
  detail::check_supported(kind, d);
  if (kind == KernelKind::Gaussian)
    return std::pow(4.0 * std::numbers::pi, -0.25 * static_cast<double>(d));
  return std::sqrt(0.6);
}

struct LowerBound {
  double a;
  double b;
};

//! Gaussian uses b = 1, so a = K at the unit sphere. Epanechnikov uses b = 1/2.
inline LowerBound lower_bound_constants(KernelKind kind, std::size_t d) {
  detail::check_supported(kind, d);
  if (kind == KernelKind::Gaussian) return {detail::gaussian_norm(d) * std::exp(-0.5), 1.0};
  return {0.75 * (1.0 - 0.25), 0.5};
}

inline KernelSpec make_kernel(KernelKind kind, std::size_t d) {
  detail::check_supported(kind, d);
  KernelSpec k;
  k.kind = kind;
  k.dimension = d;
  const auto lb = lower_bound_constants(kind, d);
  k.a = lb.a;
  k.b = lb.b;
  k.l2_norm = l2_norm_of(kind, d);
  k.norm = kind == KernelKind::Gaussian ? detail::gaussian_norm(d) : 0.75;
  return k;
}

inline double eval(const KernelSpec& kernel, std::span<const double> t) {
  if (t.size() != kernel.dimension)
    throw Error("kernel argument has dimension " + std::to_string(t.size()) + ", expected " +
                std::to_string(kernel.dimension));
  double sq = 0.0;
  for (double v : t) sq += v * v;
  return kernel.eval_sq(sq);
}

inline double eval(const KernelSpec& kernel, double t) { return eval(kernel, std::span<const double>(&t, 1)); }

}  // namespace selreg
