#include <gtest/gtest.h>

#include "sml/experiments.hpp"

using namespace sml;

namespace {

ModelSpec path(int N) {
  ModelSpec s;
  s.family = "path_laplacian";
  s.sizes = {N};
  s.boundary = "periodic";
  return s;
}

}  // namespace

TEST(ParallelRows, OrderedAndEqualToSerial) {
  auto f = [](std::size_t i) { return double(i * i) + 0.5; };
  const auto serial = parallel_rows(1, 100, f);
  const auto threaded = parallel_rows(4, 100, f);
  EXPECT_EQ(serial, threaded);
  EXPECT_EQ(serial[7], 49.5);
}

TEST(ParallelRows, RethrowsFirstError) {
  EXPECT_THROW(parallel_rows(3, 20,
                             [](std::size_t i) {
                               if (i == 5) throw EvaluationError("boom");
                               return int(i);
                             }),
               EvaluationError);
}

TEST(ParallelRows, InterruptKeepsCompletedPrefix) {
  bool truncated = false;
  const auto out = parallel_rows(
      1, 10,
      [](std::size_t i) {
        if (i == 3) interrupt_flag() = true;
        return int(i);
      },
      &truncated);
  interrupt_flag() = false;
  EXPECT_TRUE(truncated);
  EXPECT_EQ(out, (std::vector<int>{0, 1, 2, 3}));
}

TEST(Riesz, SymbolValues) {
  EXPECT_DOUBLE_EQ(bochner_riesz_symbol(1, 2, 2, 1), 0.75);
  EXPECT_DOUBLE_EQ(bochner_riesz_symbol(1, 2, 2, 0), 1);
  EXPECT_DOUBLE_EQ(bochner_riesz_symbol(4, 2, 2, 0), 0);
  EXPECT_DOUBLE_EQ(bochner_riesz_symbol(-1, 2, 2, 0.5), 1);
}

TEST(Riesz, L2NormsAreAtMostOneAndRowsComplete) {
  RieszConfig c;
  c.model = path(32);
  c.sizes = {32, 64};
  c.deltas = {0, 1};
  c.r_exponents = {2, 1};
  c.R_count = 24;
  const auto t = run_bochner_riesz(c);
  ASSERT_EQ(t.rows.size(), 8u);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (t.number(i, "r") == 2) {
      EXPECT_LE(t.number(i, "supR_norm"), 1 + 1e-12);
      EXPECT_EQ(t.text(i, "flag"), "BOUNDED");
    }
    EXPECT_GE(t.number(i, "supR_upper"), t.number(i, "supR_norm") * (1 - 1e-12));
  }
  // the smooth mean (delta = 1) stays bounded on L^1 too
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    if (t.number(i, "r") == 1 && t.number(i, "delta") == 1) EXPECT_LT(t.number(i, "supR_norm"), 3);
}

TEST(Riesz, ParallelRunMatchesSerial) {
  RieszConfig c;
  c.model = path(32);
  c.sizes = {32, 48};
  c.deltas = {0.5};
  c.r_exponents = {1};
  c.R_count = 12;
  RunContext a, b;
  b.parallel = 3;
  EXPECT_EQ(render(run_bochner_riesz(c, a), "csv", "T"), render(run_bochner_riesz(c, b), "csv", "T"));
}

TEST(Multiplier, FamilyLadder) {
  MultiplierConfig c;
  EXPECT_EQ(multiplier_family(c).size(), 12u);
  c.families = {"unit", "spiky"};
  EXPECT_THROW(multiplier_family(c), InvalidArgument);
  EXPECT_EQ(split_words(" unit, rough ,,"), (std::vector<std::string>{"unit", "rough"}));
}

TEST(Multiplier, UnitFamilyHasConstantRatio) {
  MultiplierConfig c;
  c.model = path(32);
  c.sizes = {32, 64};
  c.p_grid = {1};
  c.families = {"unit"};
  const auto t = run_multiplier_bound(c);
  ASSERT_EQ(t.rows.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(t.number(i, "norm_lower"), 1, 1e-9);
  EXPECT_EQ(t.text(1, "flag"), "BOUNDED");
}

TEST(Biharmonic, SamplingAndSector) {
  EXPECT_NO_THROW(check_sampling(cd(3.0, 0.1)));
  EXPECT_THROW(check_sampling(cd(3.2, 0.1)), InvalidArgument);
  EXPECT_LT(sector_bound({0.5, 1, 2}, {0.01, 0.05}, {0.1, 1, 5}), 0.1);
}

TEST(Config, SuiteKeysOverrideDefaults) {
  const auto cfg = Config::from_string(
      "[model]\nfamily = path_laplacian\nsizes = 16\n[riesz]\nsizes = 16, 32\ndeltas = 1\n[gasket]\nlevels = 2\n");
  const auto r = riesz_config_from(cfg);
  EXPECT_EQ(r.sizes, (std::vector<int>{16, 32}));
  EXPECT_EQ(r.deltas, std::vector<double>{1});
  EXPECT_EQ(r.R_count, 400);
  EXPECT_EQ(gasket_config_from(cfg).levels, std::vector<int>{2});
}

TEST(Gasket, MScanCoversGrid) {
  GasketConfig g;
  g.pairs = 64;
  const auto s = gasket_m_scan(build_sierpinski_gasket(2), g, 1);
  ASSERT_EQ(s.m.size(), 17u);
  EXPECT_DOUBLE_EQ(s.m.front(), 1.6);
  EXPECT_DOUBLE_EQ(s.m.back(), 3.2);
  EXPECT_GE(s.argmin, 1.6);
  EXPECT_LE(s.argmin, 3.2);
}
