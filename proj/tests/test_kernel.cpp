#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "selreg/kernel.hpp"
#include "selreg/random.hpp"

namespace selreg {
namespace {

// Composite Simpson on [lo, hi].
template <typename F>
double simpson(F f, double lo, double hi, int intervals) {
  const double step = (hi - lo) / intervals;
  double s = f(lo) + f(hi);
  for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * step);
  return s * step / 3.0;
}

template <typename F>
double simpson2d(F f, double lo, double hi, int intervals) {
  return simpson([&](double u) { return simpson([&](double v) { return f(u, v); }, lo, hi, intervals); }, lo, hi,
                 intervals);
}

TEST(Kernel, GaussianAtOrigin) {
  const auto k = make_kernel(KernelKind::Gaussian, 1);
  EXPECT_NEAR(eval(k, 0.0), 0.3989423, 1e-7);
}

TEST(Kernel, EpanechnikovOutsideSupport) {
  const auto k = make_kernel(KernelKind::Epanechnikov, 1);
  EXPECT_EQ(eval(k, 1.5), 0.0);
  EXPECT_DOUBLE_EQ(eval(k, 0.0), 0.75);
}

TEST(Kernel, DimensionMismatchThrows) {
  const auto k = make_kernel(KernelKind::Gaussian, 2);
  const std::vector<double> t{0.1};
  EXPECT_THROW(eval(k, t), Error);
}

TEST(Kernel, UnsupportedPairs) {
  EXPECT_THROW(l2_norm_of(KernelKind::Epanechnikov, 2), Error);
  EXPECT_THROW(make_kernel(KernelKind::Gaussian, 0), Error);
  EXPECT_THROW(parse_kernel_kind("triangle"), Error);
  EXPECT_EQ(parse_kernel_kind("epanechnikov"), KernelKind::Epanechnikov);
}

TEST(Kernel, L2NormMatchesQuadrature) {
  // Values frozen from independent quadrature.
  EXPECT_NEAR(l2_norm_of(KernelKind::Gaussian, 1), 0.5311259660135986, 1e-12);
  EXPECT_NEAR(l2_norm_of(KernelKind::Gaussian, 2), 0.2820947917738782, 1e-12);
  EXPECT_NEAR(l2_norm_of(KernelKind::Epanechnikov, 1), 0.7745966692414834, 1e-12);

  const auto g1 = make_kernel(KernelKind::Gaussian, 1);
  const auto e1 = make_kernel(KernelKind::Epanechnikov, 1);
  const auto g2 = make_kernel(KernelKind::Gaussian, 2);
  auto sq1 = [](const KernelSpec& k) { return [&k](double t) { return std::pow(eval(k, t), 2); }; };
  EXPECT_NEAR(std::sqrt(simpson(sq1(g1), -10, 10, 4000)), g1.l2_norm, 1e-6);
  EXPECT_NEAR(std::sqrt(simpson(sq1(e1), -1, 1, 4000)), e1.l2_norm, 1e-6);
  const double int2 = simpson2d(
      [&](double u, double v) {
        const std::vector<double> t{u, v};
        return std::pow(eval(g2, t), 2);
      },
      -8, 8, 400);
  EXPECT_NEAR(std::sqrt(int2), g2.l2_norm, 1e-6);
}

TEST(Kernel, IntegratesToOne) {
  const auto g1 = make_kernel(KernelKind::Gaussian, 1);
  const auto e1 = make_kernel(KernelKind::Epanechnikov, 1);
  const auto g2 = make_kernel(KernelKind::Gaussian, 2);
  EXPECT_NEAR(simpson([&](double t) { return eval(g1, t); }, -10, 10, 4000), 1.0, 1e-6);
  EXPECT_NEAR(simpson([&](double t) { return eval(e1, t); }, -1, 1, 4000), 1.0, 1e-6);
  EXPECT_NEAR(simpson2d(
                  [&](double u, double v) {
                    const std::vector<double> t{u, v};
                    return eval(g2, t);
                  },
                  -8, 8, 400),
              1.0, 1e-6);
}

TEST(Kernel, LowerBoundConstants) {
  auto g1 = lower_bound_constants(KernelKind::Gaussian, 1);
  EXPECT_NEAR(g1.a, 0.24197072451914337, 1e-12);
  EXPECT_EQ(g1.b, 1.0);
  auto g2 = lower_bound_constants(KernelKind::Gaussian, 2);
  EXPECT_NEAR(g2.a, 0.09653235263005391, 1e-12);
  EXPECT_EQ(g2.b, 1.0);
  auto e1 = lower_bound_constants(KernelKind::Epanechnikov, 1);
  EXPECT_EQ(e1.a, 0.5625);
  EXPECT_EQ(e1.b, 0.5);
}

class KernelProperty : public ::testing::TestWithParam<std::pair<KernelKind, std::size_t>> {};

TEST_P(KernelProperty, LowerBoundSymmetryAndTail) {
  const auto [kind, d] = GetParam();
  const auto k = make_kernel(kind, d);
  CounterRng rng(derive_seed(7, {static_cast<std::uint64_t>(kind), d}));
  const double envelope = std::pow(2.0 * std::numbers::pi, -0.5 * static_cast<double>(d)) * std::exp(0.5);
  std::vector<double> t(d), neg(d);
  for (int trial = 0; trial < 10000; ++trial) {
    // Inside the lower-bound ball: draw a direction and a radius <= b.
    double norm = 0.0;
    for (auto& v : t) {
      v = rng.normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    const double radius = k.b * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    for (auto& v : t) v *= radius / norm;
    EXPECT_GE(eval(k, t), k.a);

    // Anywhere: symmetry and, for the Gaussian, the exponential envelope.
    for (std::size_t j = 0; j < d; ++j) {
      t[j] = rng.uniform(-6.0, 6.0);
      neg[j] = -t[j];
    }
    ASSERT_EQ(eval(k, t), eval(k, neg));
    if (kind == KernelKind::Gaussian) {
      double r = 0.0;
      for (double v : t) r += v * v;
      EXPECT_LE(eval(k, t), envelope * std::exp(-0.5 * std::sqrt(r)));
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Kinds, KernelProperty,
                         ::testing::Values(std::pair{KernelKind::Gaussian, std::size_t{1}},
                                           std::pair{KernelKind::Gaussian, std::size_t{2}},
                                           std::pair{KernelKind::Gaussian, std::size_t{5}},
                                           std::pair{KernelKind::Epanechnikov, std::size_t{1}}),
                         [](const auto& info) {
                           return std::string(kernel_name(info.param.first)) + "_d" + std::to_string(info.param.second);
                         });

}  // namespace
}  // namespace selreg
