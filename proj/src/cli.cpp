#include "sml/cli.hpp"

#include <CLI11.hpp>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "sml/condition_checkers.hpp"
#include "sml/config.hpp"
#include "sml/experiments.hpp"
#include "sml/io.hpp"

namespace sml {
namespace {

namespace fs = std::filesystem;

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string format;
  int parallel = 0;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "config file ([section] key = value)");
  app->add_option("--out", c.out, "output directory (default $SML_OUT_DIR, else ./sml_out)");
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--parallel", c.parallel, "row pool width")->check(CLI::PositiveNumber);
}

fs::path out_dir(const Common& c) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv("SML_OUT_DIR"); env && *env) return env;
  return "sml_out";
}

Config load(const Common& c) { return c.config.empty() ? Config{} : Config::from_file(c.config); }

RunContext context(const Common& c, const Config& cfg) {
  RunContext ctx;
  ctx.seed = c.seed ? *c.seed : cfg.u64("run.seed", ctx.seed);
  ctx.parallel = c.parallel > 0 ? c.parallel : cfg.integer("run.parallel", 1);
  return ctx;
}

void emit(const std::vector<ExperimentTable>& tables, const Common& c, const Config& cfg, const std::string& def_format) {
  const std::string fmt = c.format.empty() ? def_format : c.format;
  const std::string ts = utc_timestamp();
  for (ExperimentTable t : tables) {
    t.set("config", cfg.canonical());
    const fs::path path = out_dir(c) / (t.id + "." + fmt);
    write_text(path, render(t, fmt, ts));
    std::cout << path.string() << (t.truncated ? " (truncated)" : "") << "\n";
  }
}

std::vector<Index> strided_centers(Index n, int count) {
  std::vector<Index> out;
  const Index step = std::max<Index>(1, n / std::max(1, count));
  for (Index i = 0; i < n && int(out.size()) < count; i += step) out.push_back(i);
  return out;
}

std::vector<cd> z_grid_from(const Config& cfg, const WeightedOperator& L, double m) {
  std::vector<double> mod = cfg.grid("check.z_modulus", {});
  if (mod.empty()) mod = default_t_grid(L, m, 4);
  const std::vector<double> arg = cfg.nums("check.z_arg", {0, 0.5, 1.0});
  std::vector<cd> z;
  for (double r : mod)
    for (double a : arg) {
      if (std::abs(a) >= M_PI / 2) throw InvalidArgument("complex times need |arg z| < pi/2");
      z.push_back(std::polar(r, a));
    }
  return z;
}

EpsRule eps_rule_from(const Config& cfg) {
  const std::string r = cfg.str("check.eps_rule", "gap");
  if (r == "gap") return EpsRule::GapAdapted;
  if (r == "proportional") return EpsRule::Proportional;
  throw ParseError("check.eps_rule must be gap or proportional");
}

ConditionReport run_check(const std::string& cond, const Config& cfg, const RunContext& ctx) {
  const WeightedOperator L = build_model(model_spec_from(cfg));
  const auto& s = L.space();
  const double m = cfg.num("check.m", L.m_tag());
  CheckOptions o;
  o.seed = ctx.seed;
  o.budget = cfg.num("check.budget", o.budget);
  o.keep_rows = cfg.flag("check.keep_rows", true);
  if (cfg.has("check.n")) o.n = cfg.num("check.n", 1);
  const double p = cfg.num("check.p", 1), q = cfg.num("check.q", 2);
  const double ceiling = root_of(L.spectrum().radius, m);
  const std::size_t npairs = std::size_t(cfg.integer("check.pairs", 512));
  const auto t_grid = cfg.grid("check.t_grid", {});
  const auto r_grid =
      cfg.grid("check.r_grid", log_grid(2 * s.min_positive_distance(), std::max(2.5 * s.min_positive_distance(), s.diameter() / 4), 5));
  const auto R_grid = cfg.grid("check.R_grid", log_grid(ceiling / 8, ceiling / 2, 3));
  const auto lambda_grid = cfg.grid("check.lambda_grid", log_grid(ceiling / 8, ceiling / 2, 6));
  std::vector<Index> centers;
  if (cfg.has("check.centers"))
    for (int c : cfg.ints("check.centers")) centers.push_back(c);
  else centers = strided_centers(L.size(), cfg.integer("check.center_count", 4));
  for (Index c : centers)
    if (c < 0 || c >= L.size()) throw InvalidArgument("center index out of range");
  const int ensemble = cfg.integer("check.ensemble", 20);
  const double R0 = cfg.num("check.R0", 0);

  if (cond == "GE") return check_GE(L, m, t_grid, sample_pairs(s, ctx.seed, npairs), o);
  if (cond == "DG") return check_DG(L, m, t_grid, sample_pairs(s, ctx.seed, std::size_t(cfg.integer("check.pairs", 128))), o);
  if (cond == "complex_time")
    return check_complex_time(L, m, z_grid_from(cfg, L, m), p, cfg.num("check.q", kInf), r_grid,
                              sample_pairs(s, ctx.seed, std::size_t(cfg.integer("check.pairs", 64)), 16), o);
  if (cond == "offdiag")
    return check_offdiag_multiplier(L, m, cfg.num("check.M", 3), R_grid, r_grid, centers, cfg.integer("check.J", 8), {}, o);
  if (cond == "G_E")
    return check_G_and_E(L, m, p, cfg.num("check.N_exp", 0.5), r_grid, t_grid.empty() ? default_t_grid(L, m, 6) : t_grid,
                         centers, o);
  if (cond == "ST" || cond == "ST1") {
    const STVariant v = cfg.str("check.variant", "full") == "local" ? STVariant::Local : STVariant::Full;
    const double target = cond == "ST1" ? conjugate_exponent(p) : 2;
    return check_ST(L, m, p, cond == "ST1" ? 1 : q, STGrids{R_grid, r_grid, centers}, v, R0, ensemble, target, o);
  }
  if (cond == "R") return check_restriction_R(L, m, p, lambda_grid, cfg.num("check.lambda0", 0), eps_rule_from(cfg), o);
  if (cond == "SC_AB") {
    SCGrids g{cfg.ints("check.sc_N", {2, 4, 8}), r_grid, centers};
    return check_SC_and_AB(L, m, p, q, cfg.num("check.kappa", 1), g, cfg.num("check.eps", 0), ensemble, o);
  }
  if (cond == "prop44") {
    AuditGrids g{lambda_grid, STGrids{R_grid, r_grid, centers}, eps_rule_from(cfg), ensemble};
    return audit_prop44(L, m, p, R0, g, o);
  }
  throw InvalidArgument("unknown condition '" + cond + "'");
}

int cmd_build(const Common& c) {
  const Config cfg = load(c);
  const ModelSpec spec = model_spec_from(cfg);
  const WeightedOperator L = build_model(spec);
  const auto& s = L.space();
  const fs::path dir = out_dir(c);
  ExperimentTable space{"space", {"index", "weight"}, {}, {}, false};
  for (Index i = 0; i < s.size(); ++i) space.add_row({double(i), s.weight()(i)});
  ExperimentTable spectrum{"spectrum", {"k", "lambda"}, {}, {}, false};
  for (Index k = 0; k < L.size(); ++k) spectrum.add_row({double(k), L.eigenvalues()(k)});
  for (auto* t : {&space, &spectrum}) {
    t->set("tool_version", kToolVersion);
    t->set("operator", describe(spec));
  }
  emit({space, spectrum}, c, cfg, "csv");
  json j;
  j["model"] = describe(spec);
  j["label"] = L.label();
  j["size"] = L.size();
  j["m_tag"] = number_json(L.m_tag());
  j["diameter"] = number_json(s.diameter());
  j["min_distance"] = number_json(s.min_positive_distance());
  j["total_measure"] = number_json(s.total_measure());
  j["spectral_radius"] = number_json(L.spectrum().radius);
  j["circulant"] = L.circulant().has_value();
  const bool dense = L.size() <= 1024;
  j["matrix_files"] = dense;
  write_text(dir / "model.json", j.dump(2) + "\n");
  if (dense) {
    auto dump = [](const Eigen::MatrixXd& A) {
      std::string t;
      for (Index i = 0; i < A.rows(); ++i) {
        for (Index k = 0; k < A.cols(); ++k) t += (k ? "," : "") + format_number(A(i, k));
        t += "\n";
      }
      return t;
    };
    write_text(dir / "operator.csv", dump(L.matrix()));
    write_text(dir / "distance.csv", dump(s.dist()));
  }
  std::cout << (dir / "model.json").string() << "\n";
  return 0;
}

int cmd_check(const Common& c, const std::string& cond) {
  const Config cfg = load(c);
  const RunContext ctx = context(c, cfg);
  const ConditionReport rep = run_check(cond, cfg, ctx);
  json j = to_json(rep);
  json prov;
  prov["tool_version"] = kToolVersion;
  prov["seed"] = std::to_string(ctx.seed);
  prov["operator"] = describe(model_spec_from(cfg));
  prov["config"] = cfg.canonical();
  prov["timestamp"] = utc_timestamp();
  j["provenance"] = prov;
  const fs::path path = out_dir(c) / ("check_" + cond + ".json");
  write_text(path, j.dump(2) + "\n");
  std::cout << path.string() << "\n";
  if (c.format == "csv" && !rep.rows.empty()) {
    ExperimentTable t = report_rows_table(rep);
    t.set("tool_version", kToolVersion);
    t.set("seed", std::to_string(ctx.seed));
    emit({t}, c, cfg, "csv");
  }
  std::cout << rep.condition << ": " << (rep.pass ? "pass" : "fail") << " (C_hat = " << format_number(rep.C_hat)
            << ", status " << rep.status << ")\n";
  return rep.pass ? 0 : 2;
}

int cmd_report(const Common& c, std::vector<std::string> files) {
  const fs::path dir = out_dir(c);
  if (files.empty() && fs::is_directory(dir))
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().extension() == ".json" && e.path().filename() != "summary.json") files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InvalidArgument("no JSON reports to merge");
  json out;
  out["tool_version"] = kToolVersion;
  json reports = json::array();
  std::size_t failures = 0, truncated = 0;
  for (const auto& f : files) {
    json j;
    try {
      j = json::parse(read_text(f));
    } catch (const json::parse_error& e) {
      throw ParseError(f + ": " + e.what());
    }
    json entry;
    entry["file"] = fs::path(f).filename().string();
    if (j.contains("condition")) {
      entry["condition"] = j["condition"];
      entry["verdict"] = j.value("verdict", "");
      entry["C_hat"] = j["C_hat"];
      entry["status"] = j.value("status", "");
      failures += j.value("verdict", "") != "pass";
    } else if (j.contains("experiment")) {
      entry["experiment"] = j["experiment"];
      entry["rows"] = j["rows"].size();
      entry["truncated"] = j.value("truncated", false);
      truncated += j.value("truncated", false);
    }
    reports.push_back(entry);
  }
  out["reports"] = reports;
  out["failures"] = failures;
  out["truncated"] = truncated;
  const fs::path path = dir / "summary.json";
  write_text(path, out.dump(2) + "\n");
  std::cout << path.string() << "\n";
  return failures ? 2 : 0;
}

extern "C" void on_sigint(int) { interrupt_flag().store(true); }

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Spectral multiplier laboratory", "sml"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  Common common;
  std::string condition;
  std::vector<std::string> files;

  auto* build = app.add_subcommand("build", "materialize a model (space, spectrum, operator) to files");
  auto* check = app.add_subcommand("check", "run one condition checker from a config");
  check->add_option("condition", condition, "GE | DG | complex_time | offdiag | G_E | ST | ST1 | R | SC_AB | prop44")
      ->required();
  auto* riesz = app.add_subcommand("riesz", "Bochner-Riesz size sweep");
  auto* mult = app.add_subcommand("multiplier", "multiplier norm against local Sobolev norm");
  auto* bih = app.add_subcommand("biharmonic", "biharmonic resolvent suite on the periodic cube");
  auto* gas = app.add_subcommand("gasket", "Sierpinski gasket exponents");
  auto* rep = app.add_subcommand("report", "merge JSON reports into summary.json");
  rep->add_option("files", files, "JSON files (default: every .json in the output directory)");
  for (auto* s : {build, check, riesz, mult, bih, gas, rep}) add_common(s, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  std::signal(SIGINT, on_sigint);
  try {
    if (build->parsed()) return cmd_build(common);
    if (check->parsed()) return cmd_check(common, condition);
    if (rep->parsed()) return cmd_report(common, files);
    const Config cfg = load(common);
    const RunContext ctx = context(common, cfg);
    std::vector<ExperimentTable> tables;
    if (riesz->parsed()) tables = {run_bochner_riesz(riesz_config_from(cfg), ctx)};
    else if (mult->parsed()) tables = {run_multiplier_bound(multiplier_config_from(cfg), ctx)};
    else if (bih->parsed()) tables = run_biharmonic_suite(biharmonic_config_from(cfg), ctx);
    else if (gas->parsed()) tables = run_gasket_suite(gasket_config_from(cfg), ctx);
    emit(tables, common, cfg, "csv");
    if (interrupt_flag().load()) {
      std::cerr << "interrupted; partial tables carry a truncation marker\n";
      return 1;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace sml
