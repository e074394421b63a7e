// One line per criterion: "criterion <k>: PASS|FAIL  <details>". Exit status 0 iff the criterion passes.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "sml/cli.hpp"
#include "sml/condition_checkers.hpp"
#include "sml/config.hpp"
#include "sml/decompositions.hpp"
#include "sml/experiments.hpp"
#include "sml/io.hpp"
#include "sml/model_operators.hpp"

using namespace sml;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void need(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [miss: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double weighted_two_norm(const Eigen::MatrixXd& T, const Eigen::VectorXd& w) {
  return lp_operator_norm(T, w, 2, 2).lower;
}

// 1. functional calculus algebra on random weighted operators
void criterion1(Outcome& o) {
  double mult = 0, unit = 0, sup = 0;
  auto F = [](double x) { return std::exp(-x) * std::cos(x); };
  auto G = [](double x) { return 1 / (1 + x * x); };
  for (int k = 0; k < 20; ++k) {
    const WeightedOperator L = random_weighted_operator(64, derive_seed(2024, k));
    const Eigen::VectorXd& w = L.space().weight();
    for (double m : {1.0, 2.0, 4.0}) {
      const Eigen::MatrixXd FG = apply_multiplier([&](double x) { return F(x) * G(x); }, L, m);
      const Eigen::MatrixXd prod = apply_multiplier(F, L, m) * apply_multiplier(G, L, m);
      mult = std::max(mult, weighted_two_norm(FG - prod, w));
      const Eigen::MatrixXd I = apply_multiplier([](double) { return 1.0; }, L, m);
      unit = std::max(unit, weighted_two_norm(I - Eigen::MatrixXd::Identity(64, 64), w));
      double mx = 0;
      for (Index i = 0; i < L.size(); ++i) mx = std::max(mx, std::abs(F(root_of(L.eigenvalues()(i), m))));
      sup = std::max(sup, std::abs(weighted_two_norm(apply_multiplier(F, L, m), w) - mx));
    }
  }
  o.detail << "multiplicativity " << mult << ", unit " << unit << ", sup-norm identity " << sup;
  o.need(mult <= 1e-9, "multiplicativity <= 1e-9");
  o.need(unit <= 1e-10, "unit <= 1e-10");
  o.need(sup <= 1e-9, "||F||_{2->2} = max|F| within 1e-9");
}

std::vector<std::pair<std::string, RealFn>> test_multipliers() {
  auto cap = [](double x) { return bump_on(x, 0.3, 3.5); };
  return {
      {"cos2", [=](double x) { return cap(x) * std::cos(2 * x); }},
      {"exp", [=](double x) { return cap(x) * std::exp(-x); }},
      {"sin3", [=](double x) { return cap(x) * std::sin(3 * x); }},
      {"rational", [=](double x) { return cap(x) / (1 + x * x); }},
      {"gauss", [=](double x) { return cap(x) * std::exp(-(x - 1.5) * (x - 1.5)); }},
      {"poly", [=](double x) { return cap(x) * (x * x - 2 * x + 0.5); }},
      {"log", [=](double x) { return cap(x) * std::log1p(x); }},
      {"chirp", [=](double x) { return cap(x) * std::cos(x * x); }},
      {"atan", [=](double x) { return cap(x) * std::atan(4 * (x - 2)); }},
      {"plain", [=](double x) { return cap(x); }},
  };
}

// 2. decomposition reconstruction, support containment and piece decay
void criterion2(Outcome& o) {
  const DyadicPartition P = build_dyadic_partition(4);
  const MollifierFamily moll = build_mollifier_family();
  const double alpha = 2, q = 2;
  const double slope_bound = -std::min(alpha - 1 / q, 0.5) + 0.1;
  const int L_max = 8;
  double worst_smooth = 0, worst_fourier = 0, worst_slope = -kInf, worst_leak = 0;
  bool supported = true;
  for (const auto& [name, F] : test_multipliers()) {
    const auto d = smoothing_decomposition(F, P, moll, L_max, 0.25, 4);
    std::vector<double> sups(L_max + 1, 0.0);
    for (int i = 0; i <= 400; ++i) {
      const double x = 0.25 * std::pow(16.0, i / 400.0);
      double s = 0;
      for (int l = 0; l <= L_max; ++l) {
        const double v = d.pieces[std::size_t(l)](x);
        s += v;
        sups[std::size_t(l)] = std::max(sups[std::size_t(l)], std::abs(v));
      }
      worst_smooth = std::max(worst_smooth, std::abs(s - F(x)));
    }
    for (int j : d.active_j)
      for (int l = 0; l <= L_max; ++l) supported = supported && smoothing_piece_supported(d, j, l);
    std::vector<double> lx, ly;
    for (int l = 1; l <= L_max; ++l)
      if (sups[std::size_t(l)] > 0) {
        lx.push_back(l);
        ly.push_back(std::log2(sups[std::size_t(l)]));
      }
    worst_slope = std::max(worst_slope, ls_slope(lx, ly));

    const auto fw = fourier_window_decomposition(F, 2, 14, Index(1) << 17, 1e-4);
    worst_fourier = std::max(worst_fourier, fw.reconstruction_error);
    for (int l = -1; l <= fw.T_max; ++l) worst_leak = std::max(worst_leak, fw.leakage(l));
  }
  o.detail << "smoothing sup error " << worst_smooth << ", Fourier-window sup error " << worst_fourier
           << ", worst piece slope " << worst_slope << " (bound " << slope_bound << "), window leakage " << worst_leak
           << ", supports " << (supported ? "ok" : "violated");
  o.need(worst_smooth <= 1e-4, "smoothing reconstruction <= 1e-4");
  o.need(worst_fourier <= 1e-4, "window reconstruction <= 1e-4");
  o.need(supported, "smoothing pieces supported in [1/4, 4]");
  o.need(worst_leak <= 1e-8, "window pieces keep their frequency support");
  o.need(worst_slope <= slope_bound, "piece decay slope");
}

// 3. off-diagonal multiplier bound on the periodic path
void criterion3(Outcome& o) {
  const WeightedOperator L = build_grid_laplacian({512}, Boundary::Periodic);
  CheckOptions opt;
  opt.keep_rows = false;
  const auto rep = check_offdiag_multiplier(L, 2, 3, {0.25, 0.5, 1.0}, {8, 16, 32}, {0, 128, 256, 384}, 8, {}, opt);
  o.detail << "C_hat " << rep.C_hat << ", worst_ratio " << rep.worst_ratio << ", samples " << rep.sample_count
           << ", status " << rep.status;
  o.need(rep.pass, "fit within budget");
  o.need(rep.worst_ratio <= 1 + 1e-9, "worst_ratio <= 1");
}

// 4. vanishing-moment mollifier decay
void criterion4(Outcome& o) {
  const double c = 0.3;
  for (double alpha : {1.0, 2.0, 3.0}) {
    // |x - c|^beta under a cap lies in W^alpha_2 when beta + 1/2 > alpha
    const double beta = alpha - 0.25;
    RealFn H = [=](double x) { return bump_on(x, -0.9, 0.9) * std::pow(std::abs(x - c), beta); };
    const auto xi = build_vanishing_moment_mollifier(alpha);
    std::vector<double> lx, ly;
    for (int N = 16; N <= 1024; N *= 2) {
      const RealFn S = mollify_N(H, xi, N, {c, -0.9, 0.9});
      const double e = nq_norm([&](double x) { return H(x) - S(x); }, N, 2);
      lx.push_back(std::log(N));
      ly.push_back(std::log(e));
    }
    const double slope = ls_slope(lx, ly);
    o.detail << "alpha " << alpha << ": slope " << slope << "; ";
    o.need(slope <= -alpha + 0.15, "slope <= -alpha + 0.15 at alpha " + format_number(alpha));
  }
}

// 5. Bochner-Riesz transition
void criterion5(Outcome& o) {
  RieszConfig cfg;
  cfg.model.family = "path_laplacian";
  cfg.model.sizes = {64};
  cfg.model.boundary = "periodic";
  const ExperimentTable t = run_bochner_riesz(cfg);
  double g0 = 0, lo1 = kInf, hi1 = 0, r2 = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double d = t.number(i, "delta"), r = t.number(i, "r"), v = t.number(i, "supR_norm");
    if (r == 1 && d == 0) g0 = t.number(i, "growth");
    if (r == 1 && d == 1) {
      lo1 = std::min(lo1, v);
      hi1 = std::max(hi1, v);
    }
    if (r == 2) r2 = std::max(r2, v);
  }
  o.detail << "delta 0 growth 64->1024 " << g0 << ", delta 1 spread " << hi1 / lo1 - 1 << ", max r=2 norm " << r2;
  o.need(g0 >= 2, "delta = 0 growth >= 2x");
  o.need(hi1 / lo1 - 1 <= 0.10, "delta = 1 within 10%");
  o.need(r2 <= 1 + 1e-12, "r = 2 norms <= 1");
}

// 6. restriction / Stein-Tomas equivalence audit
void criterion6(Outcome& o) {
  struct Case {
    std::vector<int> dims;
    EpsRule rule;
  };
  for (const Case& cs : {Case{{256}, EpsRule::GapAdapted}, Case{{24, 24}, EpsRule::Proportional}}) {
    const WeightedOperator L = build_grid_laplacian(cs.dims, Boundary::Periodic);
    const double ceiling = root_of(L.spectrum().radius, 2);
    std::vector<Index> centers;
    for (int k = 0; k < 4; ++k) centers.push_back(Index(k) * L.size() / 4);
    const auto& s = L.space();
    AuditGrids g{log_grid(ceiling / 8, ceiling / 2, 6),
                 STGrids{log_grid(ceiling / 8, ceiling / 2, 3),
                         log_grid(2 * s.min_positive_distance(), s.diameter() / 4, 5), centers},
                 cs.rule, 20};
    const auto rep = audit_prop44(L, 2, 1, 0, g);
    const bool agree = rep.extras.at("verdicts_agree") == 1;
    o.detail << cs.dims.size() << "-D: R " << (rep.sub[0].pass ? "pass" : "fail") << " ST2 "
             << (rep.sub[1].pass ? "pass" : "fail") << " ST1 " << (rep.sub[2].pass ? "pass" : "fail") << "; ";
    o.need(agree, std::to_string(cs.dims.size()) + "-D verdicts coincide");
  }
}

// 7. biharmonic validation
void criterion7(Outcome& o) {
  const auto tables = run_biharmonic_suite(BiharmonicConfig{});
  double dev = 0, sector = 0;
  bool mono = true;
  for (const auto& t : tables) {
    if (t.id == "biharmonic_kernel")
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double r = t.number(i, "norm_x");
        if (r >= 3 && r <= 6) dev = std::max(dev, t.number(i, "rel_dev"));
      }
    if (t.id == "biharmonic_sector")
      for (std::size_t i = 0; i < t.rows.size(); ++i) sector = std::max(sector, t.number(i, "max_K_times_mu"));
    if (t.id == "biharmonic_margin")
      for (std::size_t i = 0; i < t.rows.size(); ++i) mono = mono && t.number(i, "monotone") == 1;
  }
  o.detail << "kernel deviation " << dev << ", max |K||mu| " << sector << ", margin monotone " << (mono ? "yes" : "no");
  o.need(dev <= 0.10, "kernel within 10%");
  o.need(sector <= 1, "|K| <= 1/|mu| on the sector sample");
  o.need(mono, "margin decreasing in lambda");
}

// 8. gasket exponents
void criterion8(Outcome& o) {
  GasketConfig cfg;
  cfg.levels = {5, 6};
  const auto tables = run_gasket_suite(cfg);
  const ExperimentTable& t = tables[0];
  const double n6 = t.number(1, "n_hat_resistance"), g6 = t.number(1, "n_hat_geodesic");
  const double a5 = t.number(0, "argmin_m_resistance"), a6 = t.number(1, "argmin_m_resistance");
  o.detail << "n_hat(level 6) " << n6 << ", geodesic " << g6 << ", argmin m " << a5 << " -> " << a6
           << " (geodesic " << t.number(0, "argmin_m_geodesic") << " -> " << t.number(1, "argmin_m_geodesic") << ")";
  o.need(n6 >= 2.0 && n6 <= 2.3, "n_hat in [2.0, 2.3]");
  o.need(a6 >= 2.0 && a6 <= 2.6, "argmin m in [2.0, 2.6]");
  o.need(std::abs(a6 - a5) <= 0.15 + 1e-9, "argmin stable within 0.15");
  o.need(g6 >= 1.45 && g6 <= 1.75 && std::abs(g6 - n6) > 0.1, "geodesic n_hat in [1.45, 1.75] and distinct");
}

// 9. operator-norm estimator soundness against brute-force sphere sampling
void criterion9(Outcome& o) {
  double worst_rel = kInf;
  int violations = 0;
  for (int k = 0; k < 50; ++k) {
    Rng rng(derive_seed(99, k));
    const Index n = 2 + Index(uniform_index(rng, 9));
    Eigen::MatrixXd T(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) T(i, j) = normal(rng);
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
    for (auto [p, q] : {std::pair{3.0, 3.0}, std::pair{4.0 / 3.0, 4.0}}) {
      const auto est = lp_operator_norm(T, w, p, q, derive_seed(7, k));
      double brute = 0;
      for (int s = 0; s < 20000; ++s) {
        Eigen::VectorXd x(n);
        for (Index i = 0; i < n; ++i) x(i) = normal(rng);
        if (s % 2) x = x.array().sign() * x.array().abs().pow(3);  // heavier tails reach sparse maximizers
        const double nx = x.array().abs().pow(p).sum();
        brute = std::max(brute, std::pow((T * x).array().abs().pow(q).sum(), 1 / q) / std::pow(nx, 1 / p));
      }
      worst_rel = std::min(worst_rel, est.lower / brute);
      violations += est.lower > est.upper * (1 + 1e-12);
    }
  }
  o.detail << "min lower/brute " << worst_rel << ", lower > upper in " << violations << " cases";
  o.need(worst_rel >= 0.98, "lower bound within 2% of brute force");
  o.need(violations == 0, "lower <= upper");
}

// 10. byte-identical reruns through the CLI
void criterion10(Outcome& o) {
  const fs::path root = fs::temp_directory_path() / "sml_acceptance_10";
  fs::remove_all(root);
  struct Run {
    std::vector<std::string> args;
    std::vector<std::string> files;
  };
  const std::string fx = SML_FIXTURES;
  const std::vector<Run> runs{
      {{"check", "GE", "--config", fx + "/ge_path.cfg"}, {"check_GE.json"}},
      {{"riesz", "--config", fx + "/riesz_1d.cfg"}, {"bochner_riesz.csv"}},
      {{"riesz", "--config", fx + "/riesz_1d.cfg", "--format", "json"}, {"bochner_riesz.json"}},
      {{"multiplier", "--config", fx + "/multiplier_1d.cfg"}, {"multiplier_bound.csv"}},
  };
  std::size_t compared = 0;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    std::string out[2];
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path dir = root / (std::to_string(k) + "_" + std::to_string(rep));
      std::vector<std::string> a{"sml"};
      a.insert(a.end(), runs[k].args.begin(), runs[k].args.end());
      a.push_back("--out");
      a.push_back(dir.string());
      std::vector<const char*> argv;
      for (auto& s : a) argv.push_back(s.c_str());
      std::streambuf* old = std::cout.rdbuf();
      std::ostringstream sink;
      std::cout.rdbuf(sink.rdbuf());
      const int code = cli_main(int(argv.size()), argv.data());
      std::cout.rdbuf(old);
      o.need(code == 0, "fixture run " + std::to_string(k) + " exits 0");
      for (const auto& f : runs[k].files) out[rep] += strip_timestamp(read_text(dir / f));
    }
    o.need(out[0] == out[1] && !out[0].empty(), "fixture " + std::to_string(k) + " byte-identical");
    ++compared;
  }
  o.detail << compared << " fixture runs compared (timestamp excluded)";
  fs::remove_all(root);
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<void (*)(Outcome&)> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                 criterion6, criterion7, criterion8, criterion9, criterion10};
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  if (which.empty())
    for (int k = 1; k <= 10; ++k) which.push_back(k);
  // stated runtime limits in seconds
  const double limit[] = {10, 30, 60, 30, 300, 300, 180, 600, 120, kInf};
  bool all = true;
  for (int k : which) {
    if (k < 1 || k > 10) {
      std::cerr << "no criterion " << k << "\n";
      return 1;
    }
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[std::size_t(k - 1)](o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [error: " << e.what() << "]";
    }
    o.need(seconds_since(t0) < limit[k - 1], "runtime < " + format_number(limit[k - 1]) + " s");
    std::cout << "criterion " << k << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail.str() << " ("
              << format_number(std::round(seconds_since(t0) * 10) / 10) << " s)" << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
