#include <gtest/gtest.h>

#include <sstream>

#include "sml/config.hpp"
#include "sml/io.hpp"

using namespace sml;

TEST(Io, NumberFormatting) {
  EXPECT_EQ(format_number(30), "30");
  EXPECT_EQ(format_number(-4), "-4");
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1.0 / 3), "0.3333333333333333");
  EXPECT_EQ(format_number(1e-20), "1e-20");
  EXPECT_EQ(format_number(kInf), "inf");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  for (double v : {M_PI, 2.5e-7, 123456.789, 1e300})
    EXPECT_EQ(std::strtod(format_number(v).c_str(), nullptr), v);
}

TEST(Io, CsvQuotingAndLayout) {
  EXPECT_EQ(csv_field(std::string("a,b")), "\"a,b\"");
  EXPECT_EQ(csv_field(std::string("say \"hi\"")), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field(std::string("plain")), "plain");
  ExperimentTable t;
  t.id = "demo";
  t.columns = {"x", "label"};
  t.set("seed", "7");
  t.add_row({1.5, std::string("ok")});
  EXPECT_THROW(t.add_row({1.0}), EvaluationError);
  std::ostringstream os;
  write_csv(os, t, "2000-01-01T00:00:00Z");
  EXPECT_EQ(os.str(), "# experiment: demo\n# seed: 7\n# timestamp: 2000-01-01T00:00:00Z\nx,label\n1.5,ok\n");
  EXPECT_DOUBLE_EQ(t.number(0, "x"), 1.5);
  EXPECT_EQ(t.text(0, "label"), "ok");
}

TEST(Io, JsonTableAndTimestampStripping) {
  ExperimentTable t;
  t.id = "demo";
  t.columns = {"v"};
  t.add_row({kInf});
  const json j = to_json(t, "T1");
  EXPECT_EQ(j["rows"][0][0], "inf");
  EXPECT_EQ(j["provenance"]["timestamp"], "T1");
  EXPECT_EQ(strip_timestamp(to_json(t, "T1").dump(2)), strip_timestamp(to_json(t, "T2").dump(2)));
  EXPECT_EQ(strip_timestamp(render(t, "csv", "T1")), strip_timestamp(render(t, "csv", "T2")));
  EXPECT_NE(render(t, "csv", "T1"), render(t, "csv", "T2"));
}

TEST(Io, ReportJsonFields) {
  ConditionReport r;
  r.condition = "GE";
  r.params = {{"m", 2}};
  r.C_hat = 1.5;
  r.pass = true;
  r.rows = {{{"t", 0.1}, {"lhs", 0.2}}};
  const json j = to_json(r);
  for (const char* k : {"condition", "params", "C_hat", "c_hat", "worst_ratio", "verdict", "status", "sample_count", "tightness", "budget"})
    EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j["verdict"], "pass");
  const auto t = report_rows_table(r);
  EXPECT_EQ(t.columns, (std::vector<std::string>{"lhs", "t"}));
}

TEST(Config, TypedAccess) {
  const auto c = Config::from_string(
      "; comment\n[a]\nx = 2.5\nn = 4\nlist = 1, 2,3\ng = 1:100:3\nb = yes\ns = word \n[b]\nseed = 0x10\n");
  EXPECT_DOUBLE_EQ(c.num("a.x", 0), 2.5);
  EXPECT_EQ(c.integer("a.n", 0), 4);
  EXPECT_EQ(c.nums("a.list"), (std::vector<double>{1, 2, 3}));
  const auto g = c.grid("a.g");
  ASSERT_EQ(g.size(), 3u);
  EXPECT_NEAR(g[1], 10, 1e-9);
  EXPECT_TRUE(c.flag("a.b", false));
  EXPECT_EQ(c.str("a.s"), "word");
  EXPECT_EQ(c.u64("b.seed", 0), 16u);
  EXPECT_EQ(c.num("a.missing", 7), 7);
}

TEST(Config, Errors) {
  EXPECT_THROW(Config::from_string("[a\nx=1\n"), ParseError);
  const auto c = Config::from_string("[a]\nx = two\nn = 1.5\ng = 1:2\nb = maybe\n");
  EXPECT_THROW(c.num("a.x", 0), ParseError);
  EXPECT_THROW(c.integer("a.n", 0), ParseError);
  EXPECT_THROW(c.grid("a.g"), ParseError);
  EXPECT_THROW(c.flag("a.b", false), ParseError);
  EXPECT_THROW(Config::from_file("/nonexistent/file.cfg"), ParseError);
}

TEST(Config, CanonicalIsOrderIndependent) {
  const auto a = Config::from_string("[s]\nb = 2\na = 1\n");
  const auto b = Config::from_string("[s]\na = 1\nb =   2\n");
  EXPECT_EQ(a.canonical(), b.canonical());
  EXPECT_EQ(a.canonical(), "s.a=1;s.b=2");
}

TEST(Config, FixtureModelSpec) {
  const auto c = Config::from_file(std::string(SML_FIXTURES) + "/ge_path.cfg");
  const auto s = model_spec_from(c);
  EXPECT_EQ(s.family, "path_laplacian");
  EXPECT_EQ(s.sizes, std::vector<int>{128});
  EXPECT_EQ(describe(s), "family=path_laplacian;sizes=128;boundary=periodic");
  EXPECT_EQ(c.u64("run.seed", 0), 12345u);
}
