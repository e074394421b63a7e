#include <gtest/gtest.h>

#include "sml/model_operators.hpp"

using namespace sml;

TEST(ModelOperators, DirichletMinimumEigenvalue) {
  const int n = 20;
  const auto L = build_grid_laplacian({n}, Boundary::Dirichlet);
  EXPECT_NEAR(L.eigenvalues()(0), 2 - 2 * std::cos(M_PI / (n + 1)), 1e-12);
  EXPECT_DOUBLE_EQ(L.m_tag(), 2);
}

TEST(ModelOperators, NeumannHasZeroMode) {
  const auto L = build_grid_laplacian({5, 3}, Boundary::Neumann);
  EXPECT_NEAR(L.eigenvalues()(0), 0, 1e-12);
  EXPECT_THROW(parse_boundary("sticky"), InvalidArgument);
}

TEST(ModelOperators, TorusSymbolMatchesGridLaplacian) {
  const auto P = parse_symbol("x1^2 + x2^2", 2);
  const auto T = build_torus_symbol_operator({8, 8}, P, SymbolMode::Sine, 0);
  const auto G = build_grid_laplacian({8, 8}, Boundary::Periodic);
  EXPECT_NEAR((T.matrix() - G.matrix()).norm(), 0, 1e-12);
}

TEST(ModelOperators, SymbolParsing) {
  const auto P = parse_symbol("2*x1^4 + x1^2*x2^2 + 3*x2^4", 2);
  EXPECT_EQ(P.degree(), 4);
  EXPECT_NEAR(P({1.0, 2.0}), 2 + 4 + 48, 1e-12);
  EXPECT_THROW(parse_symbol("x1^^2", 1), ParseError);
  EXPECT_THROW(parse_symbol("x3^2", 2), ParseError);
}

TEST(ModelOperators, NonEllipticSymbolRejected) {
  // vanishes on the whole x2 axis
  EXPECT_THROW(build_torus_symbol_operator({8, 8}, parse_symbol("x1^2", 2), SymbolMode::Sine, 0), EllipticityError);
}

TEST(ModelOperators, ExactModeHasIntegerRoots) {
  const auto T = build_torus_symbol_operator({16}, parse_symbol("x1^2", 1), SymbolMode::Exact, 2 * M_PI);
  for (Index k = 0; k < T.size(); ++k) {
    const double r = std::sqrt(T.eigenvalues()(k));
    EXPECT_NEAR(r, std::round(r), 1e-9);
  }
}

TEST(ModelOperators, PotentialMassAndSign) {
  const Eigen::VectorXd V = make_potential(8, PotentialKind::Bump, 10, 1.5);
  EXPECT_NEAR(V.sum(), 10, 1e-9);
  EXPECT_GE(V.minCoeff(), 0);
  Eigen::VectorXd bad = V;
  bad(3) = -1;
  EXPECT_THROW(build_bilaplacian_potential(8, bad, BilaplacianSymbol::FiniteDifference), NegativePotential);
  const auto L = build_bilaplacian_potential(4, Eigen::VectorXd::Zero(64), BilaplacianSymbol::FiniteDifference);
  EXPECT_TRUE(L.circulant().has_value());
  EXPECT_DOUBLE_EQ(L.m_tag(), 4);
}

TEST(ModelOperators, BiharmonicKernelSmallArgumentLimit) {
  const cd mu(1.3, 0.2);
  const cd limit = cd(1, 1) / (8 * M_PI * mu);
  EXPECT_NEAR(std::abs(biharmonic_green_kernel(mu, 1e-7) - limit), 0, 1e-8);
}

TEST(ModelOperators, BiharmonicKernelAgainstRadialQuadrature) {
  // (1 / 2 pi^2 r) int_0^inf k sin(kr) / (k^4 - mu^4) dk at mu = 1 + 0.09i, r = 2, by oscillatory quadrature
  const cd oracle(-0.006573153678843238, 0.016912129441036089);
  const cd K = biharmonic_green_kernel(cd(1, 0.09), 2.0);
  EXPECT_LT(std::abs(K - oracle) / std::abs(oracle), 1e-3);
}

TEST(ModelOperators, SectorBound) {
  for (double l : {0.3, 1.0, 4.0})
    for (double r : {0.01, 1.0, 10.0}) {
      const cd mu(l, 0.05 * l);
      EXPECT_LE(std::abs(biharmonic_green_kernel(mu, r, true)) * std::abs(mu), 1.0);
    }
  EXPECT_THROW(biharmonic_green_kernel(cd(1, 2), 1.0, true), InvalidArgument);
}

TEST(ModelOperators, FreeResolventInvertsSymbol) {
  const int N = 6;
  const cd z(0.3, 0.1);
  const auto R = free_resolvent(N, z, BilaplacianSymbol::Spectral);
  const Eigen::VectorXd s = bilaplacian_symbol(N, BilaplacianSymbol::Spectral);
  for (Index k = 0; k < s.size(); ++k) EXPECT_NEAR(std::abs(R.symbol()(k) * (s(k) - z) - 1.0), 0, 1e-10);
}

TEST(ModelOperators, GasketCountsAndSpectrum) {
  for (int k = 0; k <= 4; ++k) EXPECT_EQ(gasket_vertex_count(k), (Index(std::pow(3, k + 1)) + 3) / 2);
  EXPECT_EQ(gasket_vertex_count(0), 3);
  EXPECT_EQ(gasket_vertex_count(3), 42);
  const auto L0 = build_sierpinski_gasket(0);
  EXPECT_NEAR(L0.eigenvalues()(1), 9, 1e-9);
  EXPECT_NEAR(L0.eigenvalues()(2), 9, 1e-9);
  const auto L1 = build_sierpinski_gasket(1);
  EXPECT_NEAR(L1.eigenvalues()(1), 22.5, 1e-9);
  EXPECT_NEAR(L1.space().total_measure(), 1, 1e-12);
  EXPECT_THROW(build_sierpinski_gasket(8), InvalidArgument);
}

TEST(ModelOperators, ResistanceOfTriangle) {
  // unit conductances on a triangle: effective resistance 2/3 between any two corners
  Eigen::Matrix3d E;
  E << 2, -1, -1, -1, 2, -1, -1, -1, 2;
  const Eigen::MatrixXd R = resistance_metric(E);
  EXPECT_NEAR(R(0, 1), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(R(1, 2), 2.0 / 3.0, 1e-12);
}

TEST(ModelOperators, BuildModelFamilies) {
  ModelSpec s;
  s.family = "path_laplacian";
  s.sizes = {16};
  EXPECT_EQ(build_model(s).size(), 16);
  s.family = "nonsense";
  EXPECT_THROW(build_model(s), InvalidArgument);
  s.family = "grid_laplacian";
  s.sizes = {100, 100};
  EXPECT_THROW(build_model(s), InvalidArgument);  // over the dense budget
}
