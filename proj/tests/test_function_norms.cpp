#include <gtest/gtest.h>

#include "sml/bumps.hpp"
#include "sml/function_norms.hpp"

using namespace sml;

TEST(Bumps, PartitionOfUnity) {
  for (double x : {0.001, 0.3, 1.0, 3.7, 10.1, 1e5}) {
    double s = 0;
    for (int l = -40; l <= 40; ++l) s += partition_phi(std::ldexp(x, -l));
    EXPECT_NEAR(s, 1, 1e-12) << x;
  }
  EXPECT_EQ(bump_on(0.2, 0.25, 4), 0);
  EXPECT_GT(bump_on(1, 0.25, 4), 0);
}

TEST(Bumps, GaussLegendreIntegratesPolynomials) {
  const Quadrature q(8);
  EXPECT_NEAR(q.integrate([](double x) { return std::pow(x, 10); }, 0, 1), 1.0 / 11, 1e-14);
  EXPECT_NEAR(q.integrate([](double x) { return std::exp(x); }, 0, 1, 4), std::exp(1.0) - 1, 1e-14);
}

TEST(FunctionNorms, GaussianSobolevClosedForms) {
  const auto g = sample_function([](double x) { return cd(std::exp(-x * x)); }, -6, 6);
  // ||e^{-x^2}||_2^2 = sqrt(pi/2); W^1_2 squared adds ||g'||_2^2 = sqrt(pi/2)
  EXPECT_NEAR(std::pow(sobolev_norm(g, 0, 2), 2), std::sqrt(M_PI / 2), 1e-8);
  EXPECT_NEAR(std::pow(sobolev_norm(g, 1, 2), 2), 2 * std::sqrt(M_PI / 2), 1e-8);
}

TEST(FunctionNorms, SupNormOfBump) {
  const auto g = sample_function([](double x) { return cd(bump_on(x, 0.25, 4)); }, 0.25, 4);
  EXPECT_NEAR(sobolev_norm(g, 0, kInf), 1, 1e-3);
}

TEST(FunctionNorms, HighOrderSobolevIsResolutionStable) {
  auto f = [](double x) { return cd(bump_on(x, 0.25, 1)); };
  const double a = sobolev_norm(sample_function(f, 0.25, 1, Index(1) << 12), 5, 2);
  const double b = sobolev_norm(sample_function(f, 0.25, 1, Index(1) << 15), 5, 2);
  EXPECT_NEAR(a / b, 1, 1e-6);
}

TEST(FunctionNorms, ImaginaryPowerIsDilationInvariant) {
  const double gamma = 3;
  ComplexFn F = [gamma](double x) { return x > 0 ? std::exp(cd(0, gamma * std::log(x))) : cd(0); };
  const double a = local_sobolev_norm(F, default_eta, 1, 2, {1.0});
  const double b = local_sobolev_norm(F, default_eta, 1, 2, {2.0});
  EXPECT_TRUE(std::isfinite(a));
  EXPECT_NEAR(a, b, 1e-6 * a);
}

TEST(FunctionNorms, ScalingCovariance) {
  // delta_t F at t and the same function resampled agree
  ComplexFn F = [](double x) { return cd(std::exp(-x) * std::sin(3 * x)); };
  const double a = local_sobolev_norm(F, default_eta, 1.5, 2, {2.0});
  ComplexFn G = [F](double x) { return F(2 * x); };
  const double b = local_sobolev_norm(G, default_eta, 1.5, 2, {1.0});
  EXPECT_NEAR(a, b, 1e-6 * a);
}

TEST(FunctionNorms, NqNormOfConstantsAndSteps) {
  EXPECT_NEAR(nq_norm([](double) { return 1.0; }, 8, 2), 1, 1e-12);
  // indicator of [0, 1/N): one cell of 2N carries the value
  const int N = 4;
  EXPECT_NEAR(nq_norm([](double x) { return (x >= 0 && x < 0.25) ? 1.0 : 0.0; }, N, 1), 1.0 / (2 * N), 1e-12);
  EXPECT_NEAR(nq_norm([](double x) { return x; }, 2, kInf), 1, 1e-12);
}

TEST(FunctionNorms, RoughFunctionFailsStability) {
  auto f = [](double x) { return cd(x > 1 && x < 2 ? 1.0 : 0.0); };
  EXPECT_THROW(sobolev_norm(sample_function(f, 0.5, 2.5, Index(1) << 11), 1, 2), ResolutionError);
}
