#include <gtest/gtest.h>

#include "sml/lp_norms.hpp"
#include "sml/random.hpp"

using namespace sml;

TEST(LpNorms, ConjugateExponent) {
  EXPECT_DOUBLE_EQ(conjugate_exponent(2), 2);
  EXPECT_NEAR(conjugate_exponent(4.0 / 3.0), 4, 1e-12);
  EXPECT_TRUE(std::isinf(conjugate_exponent(1)));
  EXPECT_DOUBLE_EQ(conjugate_exponent(kInf), 1);
}

TEST(LpNorms, ExactEndpointsOfSmallMatrix) {
  Eigen::Matrix2d T;
  T << 1, 2, 3, 4;
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(2);
  // max column sum, max row sum, largest singular value
  EXPECT_NEAR(lp_operator_norm(T, w, 1, 1).lower, 6, 1e-12);
  EXPECT_NEAR(lp_operator_norm(T, w, kInf, kInf).lower, 7, 1e-12);
  const auto two = lp_operator_norm(T, w, 2, 2);
  EXPECT_NEAR(two.lower, 5.464985704219043, 1e-10);
  EXPECT_TRUE(two.exact());
  // 1 -> inf: largest entry
  EXPECT_NEAR(lp_operator_norm(T, w, 1, kInf).lower, 4, 1e-12);
}

TEST(LpNorms, WeightsEnterBothSides) {
  // T = identity on two points with weights (1, 4): ||f||_{L^1(mu)} -> ||f||_{L^2(mu)}
  const Eigen::Matrix2d T = Eigen::Matrix2d::Identity();
  const Eigen::Vector2d w(1, 4);
  // 1 -> 1 is 1; 1 -> inf is 1/min(w) = 1 (delta at the light point)
  EXPECT_NEAR(lp_operator_norm(T, w, 1, 1).lower, 1, 1e-12);
  EXPECT_NEAR(lp_operator_norm(T, w, 1, kInf).lower, 1, 1e-12);
  // 1 -> 2: sup over points of w^{1/2 - 1} = 1 at the light point
  EXPECT_NEAR(lp_operator_norm(T, w, 1, 2).lower, 1, 1e-9);
}

TEST(LpNorms, DiagonalInteriorNormIsExact) {
  // diagonal operators have ||D||_{p->p} = max |d| for every p
  Eigen::Matrix3d D = Eigen::Vector3d(0.5, -3, 2).asDiagonal();
  const auto e = lp_operator_norm(D, Eigen::VectorXd::Ones(3), 3, 3);
  EXPECT_NEAR(e.lower, 3, 1e-9);
  EXPECT_GE(e.upper, e.lower);
  EXPECT_LE(e.upper, 3 * (1 + 1e-9));
}

TEST(LpNorms, LowerNeverExceedsUpper) {
  for (int k = 0; k < 10; ++k) {
    Rng rng(derive_seed(1, k));
    Eigen::MatrixXd T(6, 6);
    for (Eigen::Index i = 0; i < 6; ++i)
      for (Eigen::Index j = 0; j < 6; ++j) T(i, j) = normal(rng);
    for (auto [p, q] : {std::pair{3.0, 3.0}, std::pair{4.0 / 3.0, 4.0}, std::pair{1.5, 2.0}}) {
      const auto e = lp_operator_norm(T, Eigen::VectorXd::Ones(6), p, q, k);
      EXPECT_LE(e.lower, e.upper * (1 + 1e-12));
      EXPECT_GT(e.lower, 0);
    }
  }
}

TEST(LpNorms, SeedDeterminism) {
  Rng rng(5);
  Eigen::MatrixXd T(5, 5);
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 5; ++j) T(i, j) = normal(rng);
  const auto a = lp_operator_norm(T, Eigen::VectorXd::Ones(5), 3, 1.5, 77);
  const auto b = lp_operator_norm(T, Eigen::VectorXd::Ones(5), 3, 1.5, 77);
  EXPECT_EQ(a.lower, b.lower);
  EXPECT_EQ(a.upper, b.upper);
}

TEST(Random, DerivedSeedsDiffer) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(9, 3), derive_seed(9, 3));
}
