#pragma once
#include <atomic>
#include <cmath>
#include <complex>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sml/condition_checkers.hpp"
#include "sml/config.hpp"
#include "sml/function_norms.hpp"
#include "sml/io.hpp"
#include "sml/model_operators.hpp"
#include "sml/periodic_convolution.hpp"
#include "sml/spectral_core.hpp"

namespace sml {

inline std::atomic<bool>& interrupt_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}

struct RunContext {
  std::uint64_t seed = 0x5eed;
  int parallel = 1;
};

// Evaluates fn(i) for i < count on `width` threads; results come back in index order. After an
// interrupt only the completed prefix is returned.
template <class Fn>
auto parallel_rows(int width, std::size_t count, Fn fn, bool* truncated = nullptr) {
  using R = decltype(fn(std::size_t(0)));
  std::vector<std::optional<R>> slots(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      if (interrupt_flag().load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        slots[i] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    }
  };
  const int w = std::max(1, std::min<int>(width, int(count)));
  if (w == 1) worker();
  else {
    std::vector<std::thread> pool;
    for (int k = 0; k < w; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  std::vector<R> out;
  for (auto& s : slots) {
    if (!s) break;
    out.push_back(std::move(*s));
  }
  if (truncated) *truncated = out.size() < count;
  return out;
}

inline ModelSpec with_size(ModelSpec s, int N) {
  for (auto& v : s.sizes) v = N;
  return s;
}

inline std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_number(v[i]);
  return out;
}

inline std::string join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

inline void stamp(ExperimentTable& t, const RunContext& ctx, const std::string& spec) {
  t.set("tool_version", kToolVersion);
  t.set("seed", std::to_string(ctx.seed));
  t.set("operator", spec);
}

// Norm of a multiplier of L, through the periodic symbol when available.
template <class Fn>
OperatorNormEstimate multiplier_norm(const Fn& F, const WeightedOperator& L, double m, double p, double q,
                                     std::uint64_t seed) {
  if (L.circulant()) {
    bool unit = true;
    for (Index i = 0; i < L.size(); ++i) unit = unit && L.space().weight()(i) == 1.0;
    if (unit) return circulant_multiplier(F, L, m).norm(p, q, seed);
  }
  return lp_operator_norm(apply_multiplier(F, L, m), L.space().weight(), p, q, seed);
}

inline std::vector<double> spectral_roots(const WeightedOperator& L, double m) {
  std::vector<double> r;
  if (L.circulant())
    for (Index k = 0; k < L.circulant()->symbol.size(); ++k) r.push_back(root_of(std::max(0.0, L.circulant()->symbol(k)), m));
  else
    for (Index k = 0; k < L.size(); ++k) r.push_back(root_of(L.eigenvalues()(k), m));
  std::sort(r.begin(), r.end());
  return r;
}

// ---------------------------------------------------------------- Bochner-Riesz

struct RieszConfig {
  ModelSpec model;
  std::vector<int> sizes{64, 128, 256, 512, 1024};
  double m = 2;
  std::vector<double> deltas{0, 0.5, 1};
  std::vector<double> r_exponents{1, 2};
  double q = 2;
  int R_count = 400;
  int R_count_interpolated = 24;
  double growth_threshold = 1.25;
  std::optional<double> n;
};

inline RieszConfig riesz_config_from(const Config& c) {
  RieszConfig r;
  r.model = model_spec_from(c);
  r.sizes = c.ints("riesz.sizes", r.sizes);
  r.m = c.num("riesz.m", r.m);
  r.deltas = c.nums("riesz.deltas", r.deltas);
  r.r_exponents = c.nums("riesz.r", r.r_exponents);
  r.q = c.num("riesz.q", r.q);
  r.R_count = c.integer("riesz.R_count", r.R_count);
  r.R_count_interpolated = c.integer("riesz.R_count_interpolated", r.R_count_interpolated);
  r.growth_threshold = c.num("riesz.growth_threshold", r.growth_threshold);
  if (c.has("riesz.n")) r.n = c.num("riesz.n", 1);
  return r;
}

inline double bochner_riesz_symbol(double lambda, double R, double m, double delta) {
  const double x = 1 - std::max(0.0, lambda) / std::pow(R, m);
  if (x <= 0) return 0.0;
  return delta == 0 ? 1.0 : std::pow(x, delta);
}

struct RieszSup {
  double lower = 0, upper = 0, R_at = 0;
};

// sup over R of ||S_R^delta(L)||_{r->r}.
inline RieszSup riesz_sup(const WeightedOperator& L, double m, double delta, double r, int R_count, std::uint64_t seed) {
  const auto roots = spectral_roots(L, m);
  const double Rmax = roots.back() * (1 + 1e-9) + 1e-300;
  std::vector<double> Rs;
  for (int k = 1; k <= R_count; ++k) Rs.push_back(Rmax * k / R_count);
  if (delta == 0) {
    // every distinct sharp cutoff
    for (std::size_t i = 0; i + 1 < roots.size(); ++i)
      if (roots[i + 1] - roots[i] > 1e-12 * Rmax) Rs.push_back(0.5 * (roots[i] + roots[i + 1]));
  }
  std::sort(Rs.begin(), Rs.end());
  RieszSup best;
  for (double R : Rs) {
    auto F = [&](double nu) { return bochner_riesz_symbol(std::pow(nu, m), R, m, delta); };
    const auto e = multiplier_norm(F, L, m, r, r, seed);
    if (e.lower > best.lower) best = {e.lower, e.upper, R};
    best.upper = std::max(best.upper, e.upper);
  }
  return best;
}

inline ExperimentTable run_bochner_riesz(const RieszConfig& cfg, const RunContext& ctx = {}) {
  require(!cfg.sizes.empty(), "size sweep must be non-empty");
  ExperimentTable t;
  t.id = "bochner_riesz";
  t.columns = {"N", "delta", "r", "supR_norm", "supR_upper", "R_at_sup", "growth", "flag", "delta_crit", "predicted"};
  stamp(t, ctx, describe(cfg.model));
  t.set("sizes", join(cfg.sizes));
  t.set("deltas", join(cfg.deltas));
  t.set("r", join(cfg.r_exponents));
  t.set("m", format_number(cfg.m));
  t.set("q", format_number(cfg.q));
  t.set("R_count", std::to_string(cfg.R_count));
  t.set("growth_threshold", format_number(cfg.growth_threshold));
  const double n = cfg.n ? *cfg.n : double(cfg.model.sizes.size());
  struct Job {
    int N;
    double delta, r;
  };
  std::vector<Job> jobs;
  for (double r : cfg.r_exponents)
    for (double d : cfg.deltas)
      for (int N : cfg.sizes) jobs.push_back({N, d, r});
  std::map<int, WeightedOperator> ops;
  for (int N : cfg.sizes) ops.emplace(N, build_model(with_size(cfg.model, N)));
  bool truncated = false;
  auto sups = parallel_rows(
      ctx.parallel, jobs.size(),
      [&](std::size_t i) {
        const Job& j = jobs[i];
        const bool exact = j.r == 1 || j.r == 2 || std::isinf(j.r);
        return riesz_sup(ops.at(j.N), cfg.m, j.delta, j.r, exact ? cfg.R_count : cfg.R_count_interpolated,
                         derive_seed(ctx.seed, i));
      },
      &truncated);
  t.truncated = truncated;
  for (std::size_t i = 0; i < sups.size(); ++i) {
    const Job& j = jobs[i];
    // growth across the sweep, from this (delta, r) block's first and last size
    const std::size_t block = i / cfg.sizes.size() * cfg.sizes.size();
    const std::size_t last = block + cfg.sizes.size() - 1;
    double growth = std::nan("");
    std::string flag = "INCOMPLETE";
    if (last < sups.size() && sups[block].lower > 0) {
      growth = sups[last].lower / sups[block].lower;
      flag = growth <= cfg.growth_threshold ? "BOUNDED" : "GROWING";
    }
    const double crit = n * (1 / j.r - 0.5) - 1 / cfg.q;
    t.add_row({double(j.N), j.delta, j.r, sups[i].lower, sups[i].upper, sups[i].R_at, growth, flag, crit,
               std::string(j.delta > crit ? "BOUNDED" : "UNBOUNDED")});
  }
  return t;
}

// ---------------------------------------------------------------- multiplier bound

struct MultiplierConfig {
  ModelSpec model;
  std::vector<int> sizes{64, 256, 1024};
  double m = 2;
  std::vector<double> p_grid{1, 1.5};
  double alpha = 1, q = 2;
  int t_grid_K = 6;
  int M = 1;
  std::vector<std::string> families{"unit", "imaginary_power", "bochner_riesz", "rough"};
  std::vector<double> gammas{1, 2, 4, 8};
  std::vector<double> deltas{0.5, 1, 2};
  std::vector<double> betas{0, 0.25, 0.5, 1};
  double cap = 1.0;
  double growth_threshold = 1.25;
  std::optional<double> n;
};

inline std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(" \t"), b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

inline MultiplierConfig multiplier_config_from(const Config& c) {
  MultiplierConfig r;
  r.model = model_spec_from(c);
  r.sizes = c.ints("multiplier.sizes", r.sizes);
  r.m = c.num("multiplier.m", r.m);
  r.p_grid = c.nums("multiplier.p", r.p_grid);
  r.alpha = c.num("multiplier.alpha", r.alpha);
  r.q = c.num("multiplier.q", r.q);
  r.t_grid_K = c.integer("multiplier.t_grid_K", r.t_grid_K);
  r.M = c.integer("multiplier.M", r.M);
  if (c.has("multiplier.families")) r.families = split_words(c.str("multiplier.families"));
  r.gammas = c.nums("multiplier.gammas", r.gammas);
  r.deltas = c.nums("multiplier.deltas", r.deltas);
  r.betas = c.nums("multiplier.betas", r.betas);
  r.cap = c.num("multiplier.cap", r.cap);
  r.growth_threshold = c.num("multiplier.growth_threshold", r.growth_threshold);
  if (c.has("multiplier.n")) r.n = c.num("multiplier.n", 1);
  return r;
}

struct FamilyMember {
  std::string family;
  double param = 0;
  ComplexFn F;
};

inline std::vector<FamilyMember> multiplier_family(const MultiplierConfig& cfg) {
  std::vector<FamilyMember> out;
  const double c = cfg.cap;
  for (const auto& fam : cfg.families) {
    if (fam == "unit") out.push_back({fam, 0, [](double) { return cd(1); }});
    else if (fam == "imaginary_power")
      for (double g : cfg.gammas)
        out.push_back({fam, g, [g](double x) { return x > 0 ? std::exp(cd(0, g * std::log(x))) : cd(0); }});
    else if (fam == "bochner_riesz")
      for (double d : cfg.deltas)
        out.push_back({fam, d, [d, c](double x) {
                         const double u = 1 - (x / c) * (x / c);
                         return cd(u > 0 ? std::pow(u, d) : 0.0);
                       }});
    else if (fam == "rough")
      // |x - c|^beta under a smooth cap on (0, 2c); beta = 0 is a jump at c. Sobolev class alpha < beta + 1/2.
      for (double b : cfg.betas)
        out.push_back({fam, b, [b, c](double x) {
                         const double cap = bump_on(x, 0, 2 * c);
                         if (b == 0) return cd(x < c ? cap : 0.0);
                         return cd(cap * std::pow(std::abs(x - c), b));
                       }});
    else throw InvalidArgument("unknown multiplier family '" + fam + "'");
  }
  return out;
}

struct LocalNorm {
  double value = 0;
  bool stable = true;
};

inline LocalNorm local_norm_checked(const ComplexFn& F, double alpha, double q, int K) {
  NormOptionsF o;
  o.check_stability = false;
  const auto t = dyadic_t_grid(K);
  LocalNorm r;
  r.value = local_sobolev_norm(F, default_eta, alpha, q, t, kDefaultSamples, o);
  const double fine = local_sobolev_norm(F, default_eta, alpha, q, t, 2 * kDefaultSamples, o);
  r.stable = std::abs(fine - r.value) <= 1e-4 * std::max(fine, r.value);
  return r;
}

inline ExperimentTable run_multiplier_bound(const MultiplierConfig& cfg, const RunContext& ctx = {}) {
  ExperimentTable t;
  t.id = "multiplier_bound";
  t.columns = {"family", "param", "N", "p", "norm_lower", "norm_upper", "local_sobolev", "F0", "ratio",
               "sobolev_stable", "log_diagnostic", "critical_alpha", "growth", "flag"};
  stamp(t, ctx, describe(cfg.model));
  t.set("sizes", join(cfg.sizes));
  t.set("p", join(cfg.p_grid));
  t.set("alpha", format_number(cfg.alpha));
  t.set("q", format_number(cfg.q));
  t.set("m", format_number(cfg.m));
  t.set("eta", "bump on [1/4, 4]");
  t.set("t_grid", "2^k, |k| <= " + std::to_string(cfg.t_grid_K));
  const double n = cfg.n ? *cfg.n : double(cfg.model.sizes.size());
  const auto members = multiplier_family(cfg);
  std::map<int, WeightedOperator> ops;
  for (int N : cfg.sizes) ops.emplace(N, build_model(with_size(cfg.model, N)));

  struct Static {
    LocalNorm local, high;
  };
  bool trunc_a = false, trunc_b = false;
  auto statics = parallel_rows(
      ctx.parallel, members.size(),
      [&](std::size_t i) {
        return Static{local_norm_checked(members[i].F, cfg.alpha, cfg.q, cfg.t_grid_K),
                      local_norm_checked(members[i].F, cfg.M + n + 1, 2, cfg.t_grid_K)};
      },
      &trunc_a);
  struct Job {
    std::size_t member;
    double p;
    int N;
  };
  std::vector<Job> jobs;
  for (std::size_t k = 0; k < statics.size(); ++k)
    for (double p : cfg.p_grid)
      for (int N : cfg.sizes) jobs.push_back({k, p, N});
  auto norms = parallel_rows(
      ctx.parallel, jobs.size(),
      [&](std::size_t i) {
        const Job& j = jobs[i];
        const ComplexFn& F = members[j.member].F;
        return multiplier_norm([&F](double x) { return F(x); }, ops.at(j.N), cfg.m, j.p, j.p, derive_seed(ctx.seed, i));
      },
      &trunc_b);
  t.truncated = trunc_a || trunc_b;
  for (std::size_t i = 0; i < norms.size(); ++i) {
    const Job& j = jobs[i];
    const auto& mem = members[j.member];
    const Static& st = statics[j.member];
    const double F0 = std::abs(mem.F(0.0));
    const double A = st.local.value + F0;
    const std::size_t block = i / cfg.sizes.size() * cfg.sizes.size(), last = block + cfg.sizes.size() - 1;
    double growth = std::nan("");
    std::string flag = "INCOMPLETE";
    if (last < norms.size() && norms[block].lower > 0) {
      growth = norms[last].lower / norms[block].lower;
      flag = growth <= cfg.growth_threshold ? "BOUNDED" : "GROWING";
    }
    t.add_row({mem.family, mem.param, double(j.N), j.p, norms[i].lower, norms[i].upper, st.local.value, F0,
               A > 0 ? norms[i].lower / A : std::nan(""), double(st.local.stable && st.high.stable),
               std::log(2 + st.high.value / A), n * std::abs(1 / j.p - 0.5), growth, flag});
  }
  return t;
}

// ---------------------------------------------------------------- biharmonic

struct BiharmonicConfig {
  int N = 16;
  std::string symbol = "spectral";
  std::vector<double> p_grid{1, 4.0 / 3.0, 2};
  std::vector<double> resolvent_lambdas{0.4, 0.6, 0.8, 1.0, 1.2, 1.6};
  double eps_rel = 0.05;
  double kernel_mode = 4;  // mu = (1 + eps_rel i) 2 pi mode / N
  std::vector<double> margin_lambdas{1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0};
  std::vector<double> margin_p{1, 4.0 / 3.0};
  std::string potential = "bump";
  double potential_mass = 10, potential_sigma = 1.5;
  std::vector<double> restriction_lambdas{0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0, 2.2, 2.4};
  std::vector<double> restriction_p{1};
  int images = 12;
};

inline BiharmonicConfig biharmonic_config_from(const Config& c) {
  BiharmonicConfig b;
  b.N = c.integer("biharmonic.N", b.N);
  b.symbol = c.str("biharmonic.symbol", b.symbol);
  b.p_grid = c.nums("biharmonic.p", b.p_grid);
  b.resolvent_lambdas = c.nums("biharmonic.resolvent_lambdas", b.resolvent_lambdas);
  b.eps_rel = c.num("biharmonic.eps_rel", b.eps_rel);
  b.kernel_mode = c.num("biharmonic.kernel_mode", b.kernel_mode);
  b.margin_lambdas = c.nums("biharmonic.margin_lambdas", b.margin_lambdas);
  b.margin_p = c.nums("biharmonic.margin_p", b.margin_p);
  b.potential = c.str("biharmonic.potential", b.potential);
  b.potential_mass = c.num("biharmonic.potential_mass", b.potential_mass);
  b.potential_sigma = c.num("biharmonic.potential_sigma", b.potential_sigma);
  b.restriction_lambdas = c.nums("biharmonic.restriction_lambdas", b.restriction_lambdas);
  b.restriction_p = c.nums("biharmonic.restriction_p", b.restriction_p);
  b.images = c.integer("biharmonic.images", b.images);
  return b;
}

inline void check_sampling(cd mu) {
  // grid spacing 1: the sampled wavelength must stay above the Nyquist limit
  if (std::abs(mu) > M_PI) throw InvalidArgument("|mu| h exceeds pi; the grid does not resolve mu");
}

// Sector sample 0 < eps < lambda/10: max over |x| of |K(mu^4, x)| |mu|.
inline double sector_bound(const std::vector<double>& lambdas, const std::vector<double>& eps_rel,
                           const std::vector<double>& radii) {
  double worst = 0;
  for (double l : lambdas)
    for (double e : eps_rel)
      for (double r : radii) {
        const cd mu(l, e * l);
        worst = std::max(worst, std::abs(biharmonic_green_kernel(mu, r, true)) * std::abs(mu));
      }
  return worst;
}

inline std::vector<ExperimentTable> run_biharmonic_suite(const BiharmonicConfig& cfg, const RunContext& ctx = {}) {
  const int N = cfg.N;
  const std::vector<int> dims{N, N, N};
  const BilaplacianSymbol mode = parse_bilaplacian_symbol(cfg.symbol);
  const Eigen::VectorXd sym = bilaplacian_symbol(N, mode);
  const std::string spec = "bilaplacian_potential;N=" + std::to_string(N) + ";symbol=" + cfg.symbol;
  std::vector<ExperimentTable> out;

  // (a) free resolvent norms against |mu|^{3(1/p - 1/p') - 4}
  {
    ExperimentTable t;
    t.id = "biharmonic_resolvent";
    t.columns = {"lambda", "mu_re", "mu_im", "p", "norm_lower", "norm_upper", "exact_2_2", "fitted_slope", "expected_slope"};
    stamp(t, ctx, spec);
    t.set("eps_rel", format_number(cfg.eps_rel));
    t.set("sampling_rule", "|mu| h <= pi");
    struct R {
      OperatorNormEstimate e;
      double exact22;
    };
    std::vector<std::pair<double, double>> jobs;
    for (double p : cfg.p_grid)
      for (double l : cfg.resolvent_lambdas) jobs.push_back({p, l});
    bool trunc = false;
    auto res = parallel_rows(
        ctx.parallel, jobs.size(),
        [&](std::size_t i) {
          const auto [p, l] = jobs[i];
          const cd mu(l, cfg.eps_rel * l);
          check_sampling(mu);
          const cd z = std::pow(mu, 4);
          const CirculantOperator R0 = free_resolvent(N, z, mode);
          double dmin = kInf;
          for (Index k = 0; k < sym.size(); ++k) dmin = std::min(dmin, std::abs(sym(k) - z));
          NormOptions o;
          o.iterations = 120;
          o.starts = 4;
          return R{R0.norm(p, conjugate_exponent(p), derive_seed(ctx.seed, i), o), 1 / dmin};
        },
        &trunc);
    t.truncated = trunc;
    for (std::size_t i = 0; i < res.size(); ++i) {
      const auto [p, l] = jobs[i];
      std::vector<double> lx, ly;
      for (std::size_t k = 0; k < res.size(); ++k)
        if (jobs[k].first == p && res[k].e.lower > 0) {
          lx.push_back(std::log(std::abs(cd(jobs[k].second, cfg.eps_rel * jobs[k].second))));
          ly.push_back(std::log(res[k].e.lower));
        }
      const double slope = lx.size() >= 2 ? ls_slope(lx, ly) : std::nan("");
      const double pc = conjugate_exponent(p);
      t.add_row({l, l, cfg.eps_rel * l, p, res[i].e.lower, res[i].e.upper, p == 2 ? res[i].exact22 : std::nan(""), slope,
                 3 * (1 / p - inv_exp(pc)) - 4});
    }
    out.push_back(std::move(t));
  }

  // (b) kernel comparison: discrete resolvent vs the lattice image sum of the closed form
  {
    ExperimentTable t;
    t.id = "biharmonic_kernel";
    t.columns = {"x", "norm_x", "discrete_re", "discrete_im", "periodized_re", "periodized_im", "free_re", "free_im",
                 "rel_dev", "rel_dev_free"};
    const cd mu = cd(1, cfg.eps_rel) * (2 * M_PI * cfg.kernel_mode / N);
    check_sampling(mu);
    stamp(t, ctx, spec);
    t.set("mu", format_number(mu.real()) + "+" + format_number(mu.imag()) + "i");
    t.set("images", std::to_string(cfg.images));
    const CirculantOperator R0 = free_resolvent(N, std::pow(mu, 4), mode);
    const std::vector<std::array<int, 3>> pts{{3, 0, 0}, {4, 0, 0}, {5, 0, 0}, {6, 0, 0}, {2, 2, 1}, {3, 3, 0},
                                              {2, 2, 2}, {4, 3, 0}, {3, 3, 3}, {4, 4, 0}, {4, 4, 2}};
    for (const auto& pt : pts) {
      const Index idx = ravel({pt[0], pt[1], pt[2]}, dims);
      const cd d = R0.kernel()(idx);
      const cd per = periodized_green_kernel(mu, {double(pt[0]), double(pt[1]), double(pt[2])}, N, cfg.images);
      const double r = std::sqrt(double(pt[0] * pt[0] + pt[1] * pt[1] + pt[2] * pt[2]));
      const cd fr = biharmonic_green_kernel(mu, r);
      t.add_row({std::to_string(pt[0]) + " " + std::to_string(pt[1]) + " " + std::to_string(pt[2]), r, d.real(), d.imag(),
                 per.real(), per.imag(), fr.real(), fr.imag(), std::abs(d - per) / std::abs(per),
                 std::abs(d - fr) / std::abs(fr)});
    }
    out.push_back(std::move(t));
  }

  // sector bound |K| |mu| <= 1 on a 10 x 10 x 10 sample
  {
    ExperimentTable t;
    t.id = "biharmonic_sector";
    t.columns = {"lambda", "max_K_times_mu", "bound_ok"};
    stamp(t, ctx, "closed-form kernel");
    const auto lambdas = log_grid(0.2, 5, 10), radii = log_grid(0.01, 10, 10);
    std::vector<double> eps;
    for (int k = 1; k <= 10; ++k) eps.push_back(0.0099 * k);
    for (double l : lambdas) {
      const double w = sector_bound({l}, eps, radii);
      t.add_row({l, w, double(w <= 1)});
    }
    out.push_back(std::move(t));
  }

  // (c) invertibility margin ||R_0(mu^4) V||_{p->p}
  {
    ExperimentTable t;
    t.id = "biharmonic_margin";
    t.columns = {"lambda", "p", "margin_lower", "margin_upper", "below_half", "monotone"};
    stamp(t, ctx, spec);
    t.set("potential", cfg.potential + ";mass=" + format_number(cfg.potential_mass) + ";sigma=" + format_number(cfg.potential_sigma));
    t.set("mu", "lambda (1 + " + format_number(cfg.eps_rel) + " i)");
    const Eigen::VectorXd V = make_potential(N, parse_potential(cfg.potential), cfg.potential_mass, cfg.potential_sigma);
    std::vector<std::pair<double, double>> jobs;
    for (double p : cfg.margin_p)
      for (double l : cfg.margin_lambdas) jobs.push_back({p, l});
    bool trunc = false;
    auto res = parallel_rows(
        ctx.parallel, jobs.size(),
        [&](std::size_t i) {
          const auto [p, l] = jobs[i];
          const cd mu(l, cfg.eps_rel * l);
          check_sampling(mu);
          NormOptions o;
          o.iterations = 120;
          o.starts = 4;
          return circulant_times_diagonal_norm(free_resolvent(N, std::pow(mu, 4), mode), V, p, p, derive_seed(ctx.seed, i), o);
        },
        &trunc);
    t.truncated = trunc;
    double prev = kInf, prev_p = -1;
    bool mono = true;
    for (std::size_t i = 0; i < res.size(); ++i) {
      const auto [p, l] = jobs[i];
      if (p != prev_p) {
        prev = kInf;
        mono = true;
        prev_p = p;
      }
      mono = mono && res[i].lower < prev;
      prev = res[i].lower;
      t.add_row({l, p, res[i].lower, res[i].upper, double(res[i].upper <= 0.5), double(mono)});
    }
    out.push_back(std::move(t));
  }

  // (d) restriction scan at m = 4 on the free operator (circulant band projectors, epsilon = lambda/8)
  {
    ExperimentTable t;
    t.id = "biharmonic_restriction";
    t.columns = {"lambda", "p", "eps", "rank", "density_lower", "density_upper", "fitted_slope", "expected_slope"};
    stamp(t, ctx, spec + ";potential=zero");
    t.set("eps_rule", "lambda/8");
    t.set("m", "4");
    struct D {
      double eps, lower, upper;
      Index rank;
    };
    std::vector<std::pair<double, double>> jobs;
    for (double p : cfg.restriction_p)
      for (double l : cfg.restriction_lambdas) jobs.push_back({p, l});
    bool trunc = false;
    auto res = parallel_rows(
        ctx.parallel, jobs.size(),
        [&](std::size_t i) {
          const auto [p, l] = jobs[i];
          const double eps = l / 8;
          Eigen::VectorXcd band(sym.size());
          Index rank = 0;
          for (Index k = 0; k < sym.size(); ++k) {
            const double r = root_of(std::max(0.0, sym(k)), 4);
            const bool in = r > l - eps && r <= l + eps;
            band(k) = in ? 1.0 : 0.0;
            rank += in;
          }
          if (rank == 0) return D{eps, 0, 0, 0};
          NormOptions o;
          o.iterations = 120;
          o.starts = 4;
          const auto e = CirculantOperator::from_symbol(dims, band).norm(p, conjugate_exponent(p), derive_seed(ctx.seed, i), o);
          return D{eps, e.lower / (2 * eps), e.upper / (2 * eps), rank};
        },
        &trunc);
    t.truncated = trunc;
    for (std::size_t i = 0; i < res.size(); ++i) {
      const auto [p, l] = jobs[i];
      std::vector<double> lx, ly;
      for (std::size_t k = 0; k < res.size(); ++k)
        if (jobs[k].first == p && res[k].lower > 0) {
          lx.push_back(std::log(jobs[k].second));
          ly.push_back(std::log(res[k].lower));
        }
      const double slope = lx.size() >= 2 ? ls_slope(lx, ly) : std::nan("");
      t.add_row({l, p, res[i].eps, double(res[i].rank), res[i].lower, res[i].upper, slope,
                 3 * (1 / p - inv_exp(conjugate_exponent(p))) - 1});
    }
    out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------- gasket

struct GasketConfig {
  std::vector<int> levels{3, 4, 5, 6};
  double m_min = 1.6, m_max = 3.2, m_step = 0.1;
  double t_lo_factor = 10, t_hi_factor = 1;  // t in [t_lo / lambda_max, t_hi / lambda_1]
  int t_count = 12;
  std::size_t pairs = 512;
  double alpha = 3;
  int t_grid_K = 6;
};

inline GasketConfig gasket_config_from(const Config& c) {
  GasketConfig g;
  g.levels = c.ints("gasket.levels", g.levels);
  g.m_min = c.num("gasket.m_min", g.m_min);
  g.m_max = c.num("gasket.m_max", g.m_max);
  g.m_step = c.num("gasket.m_step", g.m_step);
  g.t_lo_factor = c.num("gasket.t_lo_factor", g.t_lo_factor);
  g.t_hi_factor = c.num("gasket.t_hi_factor", g.t_hi_factor);
  g.t_count = c.integer("gasket.t_count", g.t_count);
  g.pairs = std::size_t(c.integer("gasket.pairs", int(g.pairs)));
  g.alpha = c.num("gasket.alpha", g.alpha);
  g.t_grid_K = c.integer("gasket.t_grid_K", g.t_grid_K);
  return g;
}

struct MScan {
  std::vector<double> m, tightness, C, c;
  double argmin = 0;
};

inline MScan gasket_m_scan(const WeightedOperator& L, const GasketConfig& cfg, std::uint64_t seed) {
  const Eigen::VectorXd& lam = L.eigenvalues();
  double l1 = 0;
  for (Index k = 0; k < lam.size(); ++k)
    if (lam(k) > 1e-9 * lam(lam.size() - 1)) {
      l1 = lam(k);
      break;
    }
  const auto t_grid = log_grid(cfg.t_lo_factor / lam(lam.size() - 1), cfg.t_hi_factor / l1, cfg.t_count);
  const PairList pairs = sample_pairs(L.space(), seed, cfg.pairs);
  CheckOptions o;
  o.seed = seed;
  MScan s;
  double best = kInf;
  const int steps = int(std::floor((cfg.m_max - cfg.m_min) / cfg.m_step + 1e-9));
  for (int k = 0; k <= steps; ++k) {
    const double m = std::round((cfg.m_min + k * cfg.m_step) * 1e9) / 1e9;
    const auto rep = check_GE(L, m, t_grid, pairs, o);
    s.m.push_back(m);
    s.tightness.push_back(rep.tightness);
    s.C.push_back(rep.C_hat);
    s.c.push_back(rep.c_hat);
    if (rep.tightness < best) {
      best = rep.tightness;
      s.argmin = m;
    }
  }
  return s;
}

inline std::vector<ExperimentTable> run_gasket_suite(const GasketConfig& cfg, const RunContext& ctx = {}) {
  ExperimentTable lv, sc;
  lv.id = "gasket";
  lv.columns = {"level", "vertices", "n_hat_resistance", "n_hat_geodesic", "argmin_m_resistance", "argmin_m_geodesic",
                "tightness_resistance", "argmin_shift", "multiplier_norm", "local_sobolev_inf", "ratio"};
  sc.id = "gasket_mscan";
  sc.columns = {"level", "metric", "m", "tightness", "C_hat", "c_hat"};
  for (auto* t : {&lv, &sc}) {
    stamp(*t, ctx, "sierpinski_gasket");
    t->set("levels", join(cfg.levels));
    t->set("m_scan", format_number(cfg.m_min) + ":" + format_number(cfg.m_step) + ":" + format_number(cfg.m_max));
    t->set("t_window", "[" + format_number(cfg.t_lo_factor) + "/lambda_max, " + format_number(cfg.t_hi_factor) + "/lambda_1]");
    t->set("targets", "n = log3/(log5-log3) = 2.1506601; m = log5/(log5-log3) = 3.1507");
  }
  lv.set("multiplier", "F(lambda) = exp(-lambda / (10 lambda_1)), norm 1->1, local W^alpha_inf with alpha = " +
                           format_number(cfg.alpha));
  struct LevelResult {
    Index vertices;
    double n_res, n_geo;
    MScan res, geo;
    double mult, local;
  };
  bool trunc = false;
  auto results = parallel_rows(
      ctx.parallel, cfg.levels.size(),
      [&](std::size_t i) {
        const int level = cfg.levels[i];
        const auto R = build_sierpinski_gasket(level, GasketMetric::Resistance);
        const auto G = build_sierpinski_gasket(level, GasketMetric::Geodesic);
        LevelResult r;
        r.vertices = R.size();
        r.n_res = estimate_dimension(R.space());
        r.n_geo = estimate_dimension(G.space());
        r.res = gasket_m_scan(R, cfg, derive_seed(ctx.seed, 2 * i));
        r.geo = gasket_m_scan(G, cfg, derive_seed(ctx.seed, 2 * i + 1));
        const Eigen::VectorXd& lam = R.eigenvalues();
        double l1 = 0;
        for (Index k = 0; k < lam.size(); ++k)
          if (lam(k) > 1e-9 * lam(lam.size() - 1)) {
            l1 = lam(k);
            break;
          }
        const double s = 10 * l1;
        r.mult = lp_operator_norm(apply_multiplier([s](double l) { return std::exp(-l / s); }, R, 1), R.space().weight(), 1, 1).lower;
        r.local = local_sobolev_norm([](double x) { return cd(std::exp(-x)); }, default_eta, cfg.alpha, kInf,
                                     dyadic_t_grid(cfg.t_grid_K));
        return r;
      },
      &trunc);
  lv.truncated = sc.truncated = trunc;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const double shift = i > 0 ? std::abs(r.res.argmin - results[i - 1].res.argmin) : std::nan("");
    const double tight = r.res.tightness[std::size_t(std::find(r.res.m.begin(), r.res.m.end(), r.res.argmin) - r.res.m.begin())];
    lv.add_row({double(cfg.levels[i]), double(r.vertices), r.n_res, r.n_geo, r.res.argmin, r.geo.argmin, tight, shift,
                r.mult, r.local, r.mult / r.local});
    for (const auto* scan : {&r.res, &r.geo})
      for (std::size_t k = 0; k < scan->m.size(); ++k)
        sc.add_row({double(cfg.levels[i]), std::string(scan == &r.res ? "resistance" : "geodesic"), scan->m[k],
                    scan->tightness[k], scan->C[k], scan->c[k]});
  }
  return {lv, sc};
}

}  // namespace sml
