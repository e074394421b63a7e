#include <gtest/gtest.h>

#include "sml/model_operators.hpp"
#include "sml/spectral_core.hpp"

using namespace sml;

TEST(SpectralCore, DirichletPathOfThree) {
  const auto L = build_grid_laplacian({3}, Boundary::Dirichlet);
  const Eigen::VectorXd& lam = L.eigenvalues();
  EXPECT_NEAR(lam(0), 2 - std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(lam(1), 2, 1e-12);
  EXPECT_NEAR(lam(2), 2 + std::sqrt(2.0), 1e-12);
}

TEST(SpectralCore, PeriodicPathSpectrum) {
  const int n = 10;
  const auto L = build_grid_laplacian({n}, Boundary::Periodic);
  std::vector<double> expect;
  for (int k = 0; k < n; ++k) expect.push_back(2 - 2 * std::cos(2 * M_PI * k / n));
  std::sort(expect.begin(), expect.end());
  for (int k = 0; k < n; ++k) EXPECT_NEAR(L.eigenvalues()(k), expect[std::size_t(k)], 1e-12);
  ASSERT_TRUE(L.circulant().has_value());
}

TEST(SpectralCore, WeightedSelfAdjointnessIsChecked) {
  const auto s = std::make_shared<MetricMeasureSpace>(grid_distance({2}, false), Eigen::Vector2d(1, 2));
  Eigen::Matrix2d bad;
  bad << 1, 1, 1, 1;  // mu_0 M_01 != mu_1 M_10
  EXPECT_THROW(WeightedOperator(s, bad), InvalidArgument);
  Eigen::Matrix2d good;
  good << 1, -2, -1, 1;  // 1 * (-2) == 2 * (-1)
  EXPECT_NO_THROW(WeightedOperator(s, good));
}

TEST(SpectralCore, HeatSemigroupAndMass) {
  const auto L = random_weighted_operator(24, 17);
  const Eigen::MatrixXd a = heat_operator(L, 0.3), b = heat_operator(L, 0.5), c = heat_operator(L, 0.8);
  EXPECT_NEAR((a * b - c).norm(), 0, 1e-10);
  // the graph Laplacian kills constants, so e^{-tL} 1 = 1
  const auto G = build_grid_laplacian({6, 4}, Boundary::Neumann);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(24);
  EXPECT_NEAR((heat_operator(G, 0.7) * one - one).norm(), 0, 1e-9);
}

TEST(SpectralCore, ResolventInvertsShift) {
  const auto L = random_weighted_operator(16, 5);
  const std::complex<double> z(-0.5, 0.25);
  const Eigen::MatrixXcd R = resolvent(L, z);
  const Eigen::MatrixXcd A = L.matrix().cast<cd>() - z * Eigen::MatrixXcd::Identity(16, 16);
  EXPECT_NEAR((A * R - Eigen::MatrixXcd::Identity(16, 16)).norm(), 0, 1e-9);
  EXPECT_THROW(resolvent(L, L.eigenvalues()(3)), SpectrumHit);
}

TEST(SpectralCore, MultiplierOfRootMatchesMatrixPower) {
  const auto L = build_grid_laplacian({12}, Boundary::Periodic);
  // F(s) = s^2 applied to L^{1/2} is L
  const Eigen::MatrixXd T = apply_multiplier([](double s) { return s * s; }, L, 2);
  EXPECT_NEAR((T - L.matrix()).norm(), 0, 1e-10);
}

TEST(SpectralCore, BandRankAndProjector) {
  const auto L = build_grid_laplacian({8}, Boundary::Periodic);
  // eigenvalues 0, 2-sqrt2 (x2), 2 (x2), 2+sqrt2 (x2), 4
  EXPECT_EQ(band_rank(L, 0.5, 2.5), 4);
  const Eigen::MatrixXd P = band_projector(L, 0.5, 2.5);
  EXPECT_NEAR((P * P - P).norm(), 0, 1e-10);
  EXPECT_NEAR(P.trace(), 4, 1e-10);
}

TEST(SpectralCore, CirculantMultiplierMatchesDense) {
  const auto L = build_grid_laplacian({16}, Boundary::Periodic);
  auto F = [](double s) { return std::exp(-s); };
  const Eigen::MatrixXcd C = circulant_multiplier(F, L, 2).to_dense();
  const Eigen::MatrixXd D = apply_multiplier(F, L, 2);
  EXPECT_NEAR((C - D.cast<cd>()).norm(), 0, 1e-10);
}

TEST(SpectralCore, RootOf) {
  EXPECT_DOUBLE_EQ(root_of(16, 4), 2);
  EXPECT_DOUBLE_EQ(root_of(-1e-15, 2), 0);
  EXPECT_DOUBLE_EQ(root_of(3, 1), 3);
}
