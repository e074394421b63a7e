#include <gtest/gtest.h>

#include "sml/fft.hpp"
#include "sml/periodic_convolution.hpp"
#include "sml/random.hpp"

using namespace sml;

TEST(Fft, MatchesNaiveDft) {
  const int n = 12;
  Eigen::VectorXcd v(n);
  Rng rng(3);
  for (int i = 0; i < n; ++i) v(i) = cd(normal(rng), normal(rng));
  Eigen::VectorXcd f = v;
  fftn(f, {n}, false);
  for (int k = 0; k < n; ++k) {
    cd s = 0;
    for (int j = 0; j < n; ++j) s += v(j) * std::exp(cd(0, -2 * M_PI * k * j / n));
    EXPECT_NEAR(std::abs(f(k) - s), 0, 1e-12);
  }
  fftn(f, {n}, true);
  EXPECT_NEAR((f - v).norm(), 0, 1e-12);
}

TEST(Fft, RavelUnravelRoundTrip) {
  const std::vector<int> dims{3, 4, 5};
  for (Index i = 0; i < 60; ++i) EXPECT_EQ(ravel(unravel(i, dims), dims), i);
  EXPECT_EQ(signed_freq(3, 8), 3);
  EXPECT_EQ(signed_freq(5, 8), -3);
}

TEST(Circulant, LaplacianSymbol) {
  const int n = 16;
  Eigen::VectorXcd k = Eigen::VectorXcd::Zero(n);
  k(0) = 2;
  k(1) = -1;
  k(n - 1) = -1;
  const CirculantOperator C({n}, k);
  for (int j = 0; j < n; ++j) EXPECT_NEAR(std::abs(C.symbol()(j) - (2 - 2 * std::cos(2 * M_PI * j / n))), 0, 1e-12);
}

TEST(Circulant, ApplyMatchesDense) {
  const std::vector<int> dims{4, 6};
  Rng rng(11);
  Eigen::VectorXcd k(24), x(24);
  for (int i = 0; i < 24; ++i) {
    k(i) = cd(normal(rng), normal(rng));
    x(i) = cd(normal(rng), 0);
  }
  const CirculantOperator C(dims, k);
  const Eigen::MatrixXcd D = C.to_dense();
  EXPECT_NEAR((C.apply(x) - D * x).norm(), 0, 1e-10);
  EXPECT_NEAR((C.apply_adjoint(x) - D.adjoint() * x).norm(), 0, 1e-10);
}

TEST(Circulant, ExactNorms) {
  Eigen::VectorXcd k = Eigen::VectorXcd::Zero(8);
  k(0) = 1;
  k(1) = cd(0, -2);
  k(5) = 0.5;
  const CirculantOperator C({8}, k);
  // l1 of the kernel, and max |symbol|
  EXPECT_NEAR(C.norm(1, 1).lower, 3.5, 1e-12);
  EXPECT_NEAR(C.norm(2, 2).lower, C.symbol().cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(C.norm(1, kInf).lower, 2, 1e-12);
  const auto mid = C.norm(3, 3);
  EXPECT_LE(mid.lower, mid.upper * (1 + 1e-12));
  EXPECT_LE(mid.upper, 3.5 + 1e-9);
}

TEST(Circulant, DiagonalCompositeAgreesWithDense) {
  Rng rng(4);
  Eigen::VectorXcd k(10);
  Eigen::VectorXd v(10);
  for (int i = 0; i < 10; ++i) {
    k(i) = cd(normal(rng), normal(rng));
    v(i) = uniform(rng, 0, 2);
  }
  const CirculantOperator C({10}, k);
  const Eigen::MatrixXcd D = C.to_dense() * v.asDiagonal();
  const auto a = circulant_times_diagonal_norm(C, v, 1, 1);
  const auto b = lp_operator_norm(D, Eigen::VectorXd::Ones(10), 1, 1);
  EXPECT_NEAR(a.lower, b.lower, 1e-10);
}
