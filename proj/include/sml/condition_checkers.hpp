#pragma once
#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <set>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sml/bumps.hpp"
#include "sml/errors.hpp"
#include "sml/function_norms.hpp"
#include "sml/lp_norms.hpp"
#include "sml/metric_space.hpp"
#include "sml/random.hpp"
#include "sml/spectral_core.hpp"

namespace sml {

using Row = std::map<std::string, double>;

struct ConditionReport {
  std::string condition;
  std::map<std::string, double> params;
  double C_hat = 0, c_hat = 0;
  bool has_decay = false;
  std::size_t sample_count = 0, excluded = 0;
  double worst_ratio = 0;
  double tightness = 0;  // mean log-gap between envelope and samples
  double budget = 1e4;
  bool pass = false;
  std::string status = "ok";  // ok | over_budget | NoFit | empty
  std::map<std::string, double> extras;
  std::vector<Row> rows;
  std::vector<ConditionReport> sub;
};

struct CheckOptions {
  double budget = 1e4;
  double nofit_threshold = 1e6;
  double c_lo = 0.01, c_hi = 5;
  int c_points = 64;
  std::optional<double> fixed_c;
  std::optional<double> n;  // homogeneous dimension override
  std::uint64_t seed = 0x5eed;
  bool keep_rows = false;
  double slope_band = 0.3;
};

// One inequality instance: lhs <= C * base * exp(-c * s).
struct EnvelopeSample {
  double lhs = 0, base = 1, s = 0;
  Row tags;
};

struct EnvelopeFit {
  double C = 0, c = 0, tightness = 0, worst_ratio = 0;
  bool has_decay = false;
  std::size_t used = 0, excluded = 0;
};

// Over a log grid of decay rates, C(c) is the max ratio; the selected c minimizes the mean log-gap.
// Samples below 1e-12 of the largest |lhs| are at rounding level and carry no constraint.
inline EnvelopeFit fit_envelope(const std::vector<EnvelopeSample>& samples, const CheckOptions& opt = {}) {
  EnvelopeFit fit;
  double lmax = 0;
  for (const auto& e : samples) {
    require(e.base > 0 && std::isfinite(e.base), "envelope base must be positive");
    require(e.s >= 0, "decay argument must be nonnegative");
    lmax = std::max(lmax, std::abs(e.lhs));
    fit.has_decay = fit.has_decay || e.s > 0;
  }
  if (samples.empty() || lmax == 0) return fit;
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (std::abs(samples[i].lhs) >= 1e-12 * lmax) active.push_back(i);
  fit.used = active.size();
  fit.excluded = samples.size() - active.size();
  std::vector<double> grid;
  if (opt.fixed_c) grid = {*opt.fixed_c};
  else if (!fit.has_decay) grid = {0.0};
  else grid = log_grid(opt.c_lo, opt.c_hi, opt.c_points);
  double best_gap = kInf;
  for (double c : grid) {
    double logC = -kInf;
    for (std::size_t i : active) logC = std::max(logC, std::log(std::abs(samples[i].lhs) / samples[i].base) + c * samples[i].s);
    double gap = 0;
    for (std::size_t i : active) gap += logC - (std::log(std::abs(samples[i].lhs) / samples[i].base) + c * samples[i].s);
    gap /= double(active.size());
    if (gap < best_gap - 1e-15) {
      best_gap = gap;
      fit.c = c;
      fit.C = std::exp(logC);
    }
  }
  fit.tightness = best_gap;
  for (std::size_t i : active) {
    const auto& e = samples[i];
    fit.worst_ratio = std::max(fit.worst_ratio, std::abs(e.lhs) / (fit.C * e.base * std::exp(-fit.c * e.s)));
  }
  return fit;
}

inline ConditionReport make_report(std::string name, std::map<std::string, double> params,
                                   const std::vector<EnvelopeSample>& samples, const CheckOptions& opt) {
  ConditionReport r;
  r.condition = std::move(name);
  r.params = std::move(params);
  r.budget = opt.budget;
  const EnvelopeFit f = fit_envelope(samples, opt);
  r.C_hat = f.C;
  r.c_hat = f.c;
  r.has_decay = f.has_decay;
  r.tightness = f.tightness;
  r.worst_ratio = f.worst_ratio;
  r.sample_count = samples.size();
  r.excluded = f.excluded;
  if (f.worst_ratio > 1 + 1e-9) throw EvaluationError("envelope fit violates its own constants");
  if (samples.empty()) {
    r.status = "empty";
    r.pass = false;
  } else if (f.C > opt.nofit_threshold) {
    r.status = "NoFit";
  } else if (f.C > opt.budget) {
    r.status = "over_budget";
  } else {
    r.pass = true;
  }
  double lmax = 0;
  for (const auto& e : samples) lmax = std::max(lmax, std::abs(e.lhs));
  if (opt.keep_rows)
    for (const auto& e : samples) {
      Row row = e.tags;
      row["lhs"] = e.lhs;
      row["rhs"] = f.C * e.base * std::exp(-f.c * e.s);
      row["ratio"] = f.C > 0 ? std::abs(e.lhs) / row["rhs"] : 0.0;
      row["rounding_level"] = std::abs(e.lhs) < 1e-12 * lmax;
      r.rows.push_back(std::move(row));
    }
  return r;
}

inline const ConditionReport& require_fit(const ConditionReport& r) {
  if (r.status == "NoFit") throw NoFit(r.condition + ": fitted constant exceeds the no-fit threshold");
  return r;
}

// Open-ball volumes from lazily sorted distance rows.
class VolumeTable {
 public:
  explicit VolumeTable(const MetricMeasureSpace& s) : s_(s) {}

  double operator()(Index x, double r) const {
    auto it = rows_.find(x);
    if (it == rows_.end()) {
      std::vector<std::pair<double, double>> dw(s_.size());
      for (Index i = 0; i < s_.size(); ++i) dw[i] = {s_.dist(x, i), s_.weight()(i)};
      std::sort(dw.begin(), dw.end());
      Sorted srt;
      srt.d.reserve(dw.size());
      srt.cum.assign(dw.size() + 1, 0.0);
      for (std::size_t i = 0; i < dw.size(); ++i) {
        srt.d.push_back(dw[i].first);
        srt.cum[i + 1] = srt.cum[i] + dw[i].second;
      }
      it = rows_.emplace(x, std::move(srt)).first;
    }
    const auto& srt = it->second;
    const std::size_t k = std::size_t(std::lower_bound(srt.d.begin(), srt.d.end(), r) - srt.d.begin());
    return srt.cum[k];
  }

 private:
  struct Sorted {
    std::vector<double> d, cum;
  };
  const MetricMeasureSpace& s_;
  mutable std::map<Index, Sorted> rows_;
};

// Doubling exponent from strided centers unless the space carries one.
inline double estimate_dimension(const MetricMeasureSpace& s, int max_centers = 64) {
  if (s.homogeneous_dimension()) return *s.homogeneous_dimension();
  const double rmin = s.min_positive_distance(), diam = s.diameter();
  require(rmin > 0, "space needs two distinct points");
  const double hi = std::max(diam / 8, std::min(diam / 4, 4 * rmin));
  std::vector<double> radii = hi > 1.5 * rmin ? log_grid(1.5 * rmin, hi, 8) : std::vector<double>{1.5 * rmin};
  DoublingOptions o;
  o.max_outer_radius = diam / 2;
  const Index stride = std::max<Index>(1, s.size() / max_centers);
  for (Index i = 0; i < s.size(); i += stride) o.centers.push_back(i);
  return fit_doubling(s, radii, {1.5, 2, 3, 4}, o).n_hat;
}

using PairList = std::vector<std::pair<Index, Index>>;

// All pairs (x <= y) for small spaces, else `count` seeded pairs stratified by distance decile.
inline PairList sample_pairs(const MetricMeasureSpace& s, std::uint64_t seed, std::size_t count = 512,
                             Index all_below = 64) {
  PairList out;
  const Index n = s.size();
  if (n <= all_below) {
    for (Index x = 0; x < n; ++x)
      for (Index y = x; y < n; ++y) out.emplace_back(x, y);
    return out;
  }
  Rng rng = make_rng(seed, 0x9a1c);
  PairList pool(16 * count);
  for (auto& p : pool) p = {Index(uniform_index(rng, n)), Index(uniform_index(rng, n))};
  std::stable_sort(pool.begin(), pool.end(),
                   [&](const auto& a, const auto& b) { return s.dist(a.first, a.second) < s.dist(b.first, b.second); });
  const std::size_t per = std::max<std::size_t>(1, count / 10);
  for (int dec = 0; dec < 10; ++dec) {
    const std::size_t lo = pool.size() * dec / 10, hi = pool.size() * (dec + 1) / 10;
    for (std::size_t k = 0; k < per; ++k) out.push_back(pool[lo + (hi - lo) * k / per]);
  }
  return out;
}

inline std::vector<Index> ball_indices(const MetricMeasureSpace& s, Index x, double r) {
  return region_indices(s, Ball{x, r});
}

inline std::vector<Index> all_indices(Index n) {
  std::vector<Index> v(n);
  for (Index i = 0; i < n; ++i) v[i] = i;
  return v;
}

// Exact weighted 2->2 norm of the block T[rows, cols].
template <class Mat>
double block_two_norm(const Mat& T, const MetricMeasureSpace& s, const std::vector<Index>& rows,
                      const std::vector<Index>& cols) {
  if (rows.empty() || cols.empty()) return 0.0;
  using Scalar = typename Mat::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> A(Index(rows.size()), Index(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      A(Index(i), Index(j)) = T(rows[i], cols[j]) * std::sqrt(s.weight()(rows[i]) / s.weight()(cols[j]));
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> G =
      A.rows() < A.cols() ? (A * A.adjoint()).eval() : (A.adjoint() * A).eval();
  Eigen::SelfAdjointEigenSolver<decltype(G)> es(G, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

// Columns `cols` of the kernel matrix of sum_k f_k Pi_k.
inline Eigen::MatrixXd multiplier_columns(const WeightedOperator& L, const Eigen::VectorXd& f,
                                          const std::vector<Index>& cols) {
  const Spectrum& sp = L.spectrum();
  const Eigen::VectorXd s = L.space().weight().cwiseSqrt();
  std::vector<Index> keep;
  for (Index k = 0; k < f.size(); ++k)
    if (f(k) != 0) keep.push_back(k);
  const Index n = L.size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, Index(cols.size()));
  if (keep.empty() || cols.empty()) return out;
  Eigen::MatrixXd left(n, Index(keep.size())), right(Index(cols.size()), Index(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    left.col(Index(c)) = sp.Q.col(keep[c]) * f(keep[c]);
    for (std::size_t j = 0; j < cols.size(); ++j) right(Index(j), Index(c)) = sp.Q(cols[j], keep[c]) * s(cols[j]);
  }
  out = s.cwiseInverse().asDiagonal() * (left * right.transpose());
  return out;
}

inline Eigen::VectorXd multiplier_values(const std::function<double(double)>& F, const WeightedOperator& L, double m) {
  const Eigen::VectorXd& lam = L.eigenvalues();
  Eigen::VectorXd f(lam.size());
  for (Index k = 0; k < lam.size(); ++k) f(k) = F(root_of(lam(k), m));
  return f;
}

inline std::vector<double> default_t_grid(const WeightedOperator& L, double m, int count = 12) {
  const auto& s = L.space();
  return log_grid(std::pow(s.min_positive_distance(), m) / 10, std::pow(s.diameter(), m) * 10, count);
}

// |p_t(x, y)| <= C V(x, t^{1/m})^{-1} exp(-c (d^m / t)^{1/(m-1)})
inline ConditionReport check_GE(const WeightedOperator& L, double m, std::vector<double> t_grid = {},
                                PairList pairs = {}, const CheckOptions& opt = {}) {
  require(m > 1, "GE needs m > 1");
  const auto& s = L.space();
  if (t_grid.empty()) t_grid = default_t_grid(L, m);
  if (pairs.empty()) pairs = sample_pairs(s, opt.seed);
  const Spectrum& sp = L.spectrum();
  const Eigen::VectorXd& lam = sp.values;
  const Eigen::VectorXd& mu = s.weight();
  VolumeTable vol(s);
  std::vector<EnvelopeSample> samples;
  samples.reserve(t_grid.size() * pairs.size());
  for (double t : t_grid) {
    require(t > 0, "times must be positive");
    const Eigen::VectorXd e = (-t * lam.array()).exp().matrix();
    const double r = std::pow(t, 1.0 / m);
    for (const auto& [x, y] : pairs) {
      const double p = sp.Q.row(x).cwiseProduct(e.transpose()).dot(sp.Q.row(y)) / std::sqrt(mu(x) * mu(y));
      const double V = std::max(vol(x, r), mu(x));
      const double d = s.dist(x, y);
      samples.push_back({std::abs(p), 1.0 / V, std::pow(std::pow(d, m) / t, 1.0 / (m - 1)),
                         {{"t", t}, {"x", double(x)}, {"y", double(y)}, {"d", d}, {"V", V}}});
    }
  }
  return make_report("GE", {{"m", m}}, samples, opt);
}

// ||P_{B(x,r)} e^{-tL} P_{B(y,r)}||_{2->2} <= C exp(-c (d/r)^{m/(m-1)}), r = t^{1/m}
inline ConditionReport check_DG(const WeightedOperator& L, double m, std::vector<double> t_grid = {},
                                PairList pairs = {}, const CheckOptions& opt = {}) {
  require(m > 1, "DG needs m > 1");
  const auto& s = L.space();
  if (t_grid.empty()) t_grid = default_t_grid(L, m, 8);
  if (pairs.empty()) pairs = sample_pairs(s, opt.seed, 128);
  std::vector<EnvelopeSample> samples;
  for (double t : t_grid) {
    const Eigen::MatrixXd H = heat_operator(L, t);
    const double r = std::pow(t, 1.0 / m);
    std::map<std::pair<std::vector<Index>, std::vector<Index>>, double> cache;
    for (const auto& [x, y] : pairs) {
      auto key = std::make_pair(ball_indices(s, x, r), ball_indices(s, y, r));
      auto it = cache.find(key);
      if (it == cache.end()) it = cache.emplace(key, block_two_norm(H, s, key.first, key.second)).first;
      const double d = s.dist(x, y);
      samples.push_back({it->second, 1.0, std::pow(d / r, m / (m - 1)),
                         {{"t", t}, {"x", double(x)}, {"y", double(y)}, {"d", d}}});
    }
  }
  return make_report("DG", {{"m", m}}, samples, opt);
}

// Masked e^{-zL} between balls of radius r against the complex-time envelope with r_z = (Re z)^{1/m - 1} |z|.
inline ConditionReport check_complex_time(const WeightedOperator& L, double m, const std::vector<cd>& z_grid, double p,
                                          double q, const std::vector<double>& r_grid, PairList pairs = {},
                                          const CheckOptions& opt = {}) {
  require(m > 1, "complex-time check needs m > 1");
  const bool endpoint = (p == 2 && q == 2) || (p == 1 && std::isinf(q));
  require(endpoint, "complex-time check supports (p,q) = (2,2) or (1,inf)");
  const auto& s = L.space();
  if (pairs.empty()) pairs = sample_pairs(s, opt.seed, 64, 16);
  const double n = opt.n ? *opt.n : estimate_dimension(s);
  const double theta = inv_exp(p) - inv_exp(q);
  VolumeTable vol(s);
  std::vector<EnvelopeSample> samples;
  for (cd z : z_grid) {
    require(z.real() > 0, "z must lie in the right half-plane");
    const Eigen::MatrixXcd K = complex_heat_operator(L, z);
    const double rz = std::pow(z.real(), 1.0 / m - 1) * std::abs(z);
    for (double r : r_grid)
      for (const auto& [x, y] : pairs) {
        const auto bx = ball_indices(s, x, r), by = ball_indices(s, y, r);
        const double lhs = masked_norm(K, s, bx, by, p, q).lower;
        const double V = std::max(vol(x, r), s.weight()(x));
        const double base = std::pow(V, -theta) * std::pow(1 + r / rz, n * theta) *
                            std::pow(std::abs(z) / z.real(), n * theta);
        const double d = s.dist(x, y);
        samples.push_back({lhs, base, std::pow(d / rz, m / (m - 1)),
                           {{"re_z", z.real()}, {"im_z", z.imag()}, {"r", r}, {"x", double(x)}, {"y", double(y)}, {"d", d}}});
      }
  }
  return make_report("complex_time", {{"m", m}, {"p", p}, {"q", q}, {"n", n}}, samples, opt);
}

// ||P_B F(L^{1/m}) P_{A(x_B, r_B, j)}||_{2->2} <= C j^{-M} (R r_B)^{-(M+n)} ||delta_R F||_{W^{M+n+1}_2},
// with F = G(./R) and the profile G supported in [1/4, 1].
inline ConditionReport check_offdiag_multiplier(const WeightedOperator& L, double m, double M,
                                                const std::vector<double>& R_grid, const std::vector<double>& r_grid,
                                                const std::vector<Index>& centers, int J = 8,
                                                std::function<double(double)> profile = {},
                                                const CheckOptions& opt = {}) {
  require(M > 0, "M must be positive");
  require(J >= 2, "need at least j = 2");
  if (!profile) profile = [](double u) { return bump_on(u, 0.25, 1.0); };
  const auto& s = L.space();
  const double n = opt.n ? *opt.n : estimate_dimension(s);
  const double sob =
      sobolev_norm(sample_function([profile](double u) { return cd(profile(u)); }, 0.25, 1.0), M + n + 1, 2);
  std::vector<EnvelopeSample> samples;
  for (double R : R_grid) {
    require(R > 0, "R must be positive");
    auto F = [&](double l) {
      const double u = l / R;
      return (u <= 0.25 || u >= 1) ? 0.0 : profile(u);
    };
    const Eigen::MatrixXd T = apply_multiplier(F, L, m);
    for (double rb : r_grid)
      for (Index x : centers)
        for (int j = 2; j <= J; ++j) {
          const auto B = ball_indices(s, x, rb);
          const auto A = region_indices(s, Annulus{x, rb, j});
          const double lhs = block_two_norm(T, s, B, A);
          const double base = std::pow(double(j), -M) * std::pow(R * rb, -(M + n)) * sob;
          samples.push_back({lhs, base, 0.0, {{"R", R}, {"r_B", rb}, {"x", double(x)}, {"j", double(j)}}});
        }
  }
  auto rep = make_report("offdiag_multiplier", {{"m", m}, {"M", M}, {"n", n}}, samples, opt);
  rep.extras["sobolev_norm"] = sob;
  return rep;
}

// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "slope needs two points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= double(x.size());
  my /= double(y.size());
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0, "slope needs distinct abscissae");
  return sxy / sxx;
}

// Heat form (G) and resolvent-power form (E) of the p->2 ball estimate, r >= t.
inline ConditionReport check_G_and_E(const WeightedOperator& L, double m, double p, double N_exp,
                                     const std::vector<double>& r_grid, const std::vector<double>& t_grid,
                                     const std::vector<Index>& centers, const CheckOptions& opt = {}) {
  require(p >= 1 && p <= 2, "p must lie in [1, 2]");
  const auto& s = L.space();
  const double n = opt.n ? *opt.n : estimate_dimension(s);
  const double sigma = n * (1 / p - 0.5);
  if (!(N_exp > sigma)) throw InvalidArgument("resolvent power must exceed n(1/p - 1/2)");
  VolumeTable vol(s);
  std::vector<EnvelopeSample> G, E;
  std::vector<double> lx, ly;
  for (double t : t_grid) {
    const Eigen::VectorXd fh = multiplier_values([&](double l) { return std::exp(-std::pow(t, m) * std::pow(l, m)); }, L, m);
    const Eigen::VectorXd fe = multiplier_values([&](double l) { return std::pow(1 + t * l, -N_exp); }, L, m);
    for (double r : r_grid) {
      if (r < t) continue;
      for (Index x : centers) {
        const auto B = ball_indices(s, x, r);
        Eigen::VectorXd wb(Index(B.size()));
        for (std::size_t j = 0; j < B.size(); ++j) wb(Index(j)) = s.weight()(B[j]);
        const double V = vol(x, r);
        const double base = std::pow(V, 0.5 - 1 / p) * std::pow(r / t, sigma);
        const Row tags{{"t", t}, {"r", r}, {"x", double(x)}};
        const double lg = lp_operator_norm(multiplier_columns(L, fh, B), s.weight(), wb, p, 2, opt.seed).lower;
        const double le = lp_operator_norm(multiplier_columns(L, fe, B), s.weight(), wb, p, 2, opt.seed).lower;
        G.push_back({lg, base, 0.0, tags});
        E.push_back({le, base, 0.0, tags});
        if (lg > 0) {
          lx.push_back(std::log(r / t));
          ly.push_back(std::log(lg / std::pow(V, 0.5 - 1 / p)));
        }
      }
    }
  }
  ConditionReport rep;
  rep.condition = "G_and_E";
  rep.params = {{"m", m}, {"p", p}, {"N", N_exp}, {"n", n}};
  rep.sub.push_back(make_report("G", rep.params, G, opt));
  rep.sub.push_back(make_report("E", rep.params, E, opt));
  rep.C_hat = std::max(rep.sub[0].C_hat, rep.sub[1].C_hat);
  rep.worst_ratio = std::max(rep.sub[0].worst_ratio, rep.sub[1].worst_ratio);
  rep.sample_count = G.size() + E.size();
  rep.budget = opt.budget;
  const bool agree = rep.sub[0].pass == rep.sub[1].pass;
  rep.extras["verdicts_agree"] = agree;
  std::set<double> distinct(lx.begin(), lx.end());
  if (distinct.size() >= 2) rep.extras["G_exponent"] = ls_slope(lx, ly);
  rep.extras["expected_exponent"] = sigma;
  rep.pass = rep.sub[0].pass && rep.sub[1].pass;
  rep.status = rep.pass ? "ok" : rep.sub[0].status != "ok" ? rep.sub[0].status : rep.sub[1].status;
  return rep;
}

// Random smooth profiles: sums of three bumps inside [lo, hi].
inline std::vector<std::function<double(double)>> random_profiles(int count, double lo, double hi, std::uint64_t seed) {
  require(hi > lo, "profile interval must be non-empty");
  std::vector<std::function<double(double)>> out;
  Rng rng = make_rng(seed, 0x7f0f);
  for (int k = 0; k < count; ++k) {
    std::vector<std::array<double, 3>> parts;
    for (int i = 0; i < 3; ++i) {
      const double w = (0.05 + 0.2 * uniform01(rng)) * (hi - lo);
      const double c = uniform(rng, lo + w, hi - w);
      const double a = normal(rng);
      parts.push_back({a, c - w, c + w});
    }
    out.push_back([parts](double u) {
      double v = 0;
      for (const auto& pt : parts) v += pt[0] * bump_on(u, pt[1], pt[2]);
      return v;
    });
  }
  return out;
}

// L^q norm of a profile over [lo, hi].
inline double profile_lq(const std::function<double(double)>& G, double lo, double hi, double q) {
  if (std::isinf(q)) {
    double best = 0;
    for (int i = 0; i <= 8192; ++i) best = std::max(best, std::abs(G(lo + (hi - lo) * i / 8192.0)));
    return best;
  }
  static const Quadrature quad(32);
  return std::pow(quad.integrate([&](double u) { return std::pow(std::abs(G(u)), q); }, lo, hi, 32), 1 / q);
}

enum class STVariant { Full, Local };

struct STGrids {
  std::vector<double> R;
  std::vector<double> r;
  std::vector<Index> centers;
};

// ||F(L^{1/m}) P_{B(x,r)}||_{p->s} <= C V(x,r)^{1/s - 1/p} (R r)^{n(1/p - 1/s)} ||delta_R F||_q, r >= 1/R.
// s = 2 is the Stein-Tomas form; s = p' with q = 1 is its p->p' variant.
inline ConditionReport check_ST(const WeightedOperator& L, double m, double p, double q, const STGrids& g,
                                STVariant variant = STVariant::Full, double R0 = 0, int ensemble = 20,
                                double target = 2, const CheckOptions& opt = {},
                                std::vector<std::function<double(double)>> profiles = {}) {
  require(p >= 1 && p <= 2, "p must lie in [1, 2]");
  const auto& s = L.space();
  const double n = opt.n ? *opt.n : estimate_dimension(s);
  const double lo = variant == STVariant::Local ? 0.5 : 0.0;
  if (profiles.empty()) {
    require(ensemble >= 20, "ensemble needs at least 20 multipliers");
    profiles = random_profiles(ensemble, lo, 1.0, opt.seed);
  }
  std::vector<double> norms;
  for (const auto& G : profiles) norms.push_back(profile_lq(G, lo, 1.0, q));
  const double theta = 1 / p - inv_exp(target);
  VolumeTable vol(s);
  std::vector<EnvelopeSample> samples;
  for (double R : g.R) {
    if (variant == STVariant::Local) require(R > R0, "local variant needs R > R_0");
    for (std::size_t k = 0; k < profiles.size(); ++k) {
      const auto& G = profiles[k];
      const Eigen::VectorXd f = multiplier_values(
          [&](double l) {
            const double u = l / R;
            return (u <= lo || u >= 1) ? 0.0 : G(u);
          },
          L, m);
      for (double r : g.r) {
        if (r * R < 1) continue;
        for (Index x : g.centers) {
          const auto B = ball_indices(s, x, r);
          Eigen::VectorXd wb(Index(B.size()));
          for (std::size_t j = 0; j < B.size(); ++j) wb(Index(j)) = s.weight()(B[j]);
          const double lhs = lp_operator_norm(multiplier_columns(L, f, B), s.weight(), wb, p, target, opt.seed).lower;
          const double V = vol(x, r);
          const double base = std::pow(V, -theta) * std::pow(R * r, n * theta) * norms[k];
          if (norms[k] == 0) continue;
          samples.push_back({lhs, base, 0.0, {{"F", double(k)}, {"R", R}, {"r", r}, {"x", double(x)}}});
        }
      }
    }
  }
  const std::string name = target != 2 ? "ST1_p_pprime" : "ST";
  auto rep = make_report(name, {{"m", m}, {"p", p}, {"q", q}, {"n", n}, {"target", target},
                                {"local", double(variant == STVariant::Local)}},
                         samples, opt);
  double worst = -1;
  for (const auto& e : samples) {
    const double r = e.lhs / (rep.C_hat * e.base);
    if (r > worst) {
      worst = r;
      for (const auto& [k, v] : e.tags) rep.extras["worst_" + k] = v;
    }
  }
  return rep;
}

// ||dE_{L^{1/m}}(lambda)||_{p->p'} <= C lambda^{n(1/p - 1/p') - 1} via epsilon-band averages.
inline ConditionReport check_restriction_R(const WeightedOperator& L, double m, double p,
                                           const std::vector<double>& lambda_grid, double lambda0 = 0,
                                           EpsRule rule = EpsRule::GapAdapted, const CheckOptions& opt = {}) {
  require(p >= 1 && p <= 2, "p must lie in [1, 2]");
  const auto& s = L.space();
  const double n = opt.n ? *opt.n : estimate_dimension(s);
  const double pc = conjugate_exponent(p);
  const double expected = n * (1 / p - inv_exp(pc)) - 1;
  const double ceiling = root_of(L.spectrum().radius, m);
  std::vector<EnvelopeSample> samples;
  std::vector<double> lx, ly;
  std::size_t empty = 0;
  for (double lambda : lambda_grid) {
    require(lambda > lambda0, "lambda grid must lie above lambda_0");
    require(lambda <= ceiling / 2 + 1e-12, "lambda grid must stay below half the spectral ceiling");
    const BandChoice b = choose_band(L, lambda, m, rule);
    const DensityEstimate d = spectral_measure_density(L, b.lambda, b.eps, p, m, opt.seed);
    if (d.empty_band) {
      ++empty;
      continue;
    }
    samples.push_back({d.estimate.lower, std::pow(b.lambda, expected), 0.0,
                       {{"lambda", b.lambda}, {"eps", b.eps}, {"rank", double(d.rank)}}});
    if (d.estimate.lower > 0) {
      lx.push_back(std::log(b.lambda));
      ly.push_back(std::log(d.estimate.lower));
    }
  }
  auto rep = make_report("R", {{"m", m}, {"p", p}, {"n", n}, {"lambda0", lambda0}}, samples, opt);
  rep.extras["empty_bands"] = double(empty);
  rep.extras["expected_slope"] = expected;
  std::set<double> distinct(lx.begin(), lx.end());
  if (distinct.size() >= 2) {
    const double slope = ls_slope(lx, ly);
    rep.extras["slope"] = slope;
    const bool ok = std::abs(slope - expected) <= opt.slope_band;
    rep.extras["slope_ok"] = ok;
    if (!ok && rep.pass) {
      rep.pass = false;
      rep.status = "slope_mismatch";
    }
  }
  return rep;
}

struct SCGrids {
  std::vector<int> N;
  std::vector<double> r;
  std::vector<Index> centers;
};

// Spectral cluster bound at cell resolution N^kappa and the derived all-ball bound; profiles G on [0, 1], F = G(|.|/N).
inline ConditionReport check_SC_and_AB(const WeightedOperator& L, double m, double p, double q, double kappa,
                                       const SCGrids& g, double eps = 0, int ensemble = 20,
                                       const CheckOptions& opt = {},
                                       std::vector<std::function<double(double)>> profiles = {}) {
  require(p >= 1 && p <= 2, "p must lie in [1, 2]");
  require(kappa >= 1, "kappa must be >= 1");
  const auto& s = L.space();
  const double n = opt.n ? *opt.n : estimate_dimension(s);
  if (profiles.empty()) profiles = random_profiles(ensemble, 0.0, 1.0, opt.seed);
  const double sigma = n * (1 / p - 0.5);
  const double r_all = s.diameter() * (1 + 1e-9) + 1e-300;  // the open ball of this radius is X
  VolumeTable vol(s);
  std::vector<EnvelopeSample> sc, ab;
  std::vector<std::array<double, 3>> ab_raw;  // lhs, N, cell norm
  for (int N : g.N) {
    require(N >= 1, "N must be positive");
    const int cells = int(std::lround(std::pow(double(N), kappa)));
    for (std::size_t k = 0; k < profiles.size(); ++k) {
      const auto& G = profiles[k];
      auto cap = [&G](double u) {
        const double a = std::abs(u);
        return a >= 1 ? 0.0 : G(a);
      };
      const double cell = nq_norm(cap, cells, q);
      if (cell == 0) continue;
      const Eigen::VectorXd f = multiplier_values([&](double l) { return cap(l / N); }, L, m);
      std::vector<double> radii = g.r;
      radii.push_back(r_all);
      for (double r : radii) {
        if (r * N < 1) continue;
        for (Index x : g.centers) {
          const auto B = ball_indices(s, x, r);
          Eigen::VectorXd wb(Index(B.size()));
          for (std::size_t j = 0; j < B.size(); ++j) wb(Index(j)) = s.weight()(B[j]);
          const double lhs = lp_operator_norm(multiplier_columns(L, f, B), s.weight(), wb, p, 2, opt.seed).lower;
          const double base = std::pow(vol(x, r), 0.5 - 1 / p) * std::pow(N * r, sigma) * cell;
          sc.push_back({lhs, base, 0.0, {{"F", double(k)}, {"N", double(N)}, {"r", r}, {"x", double(x)}}});
        }
      }
      const Eigen::MatrixXd T = multiplier_columns(L, f, all_indices(L.size()));
      const double lab = lp_operator_norm(T, s.weight(), p, p, opt.seed).lower;
      ab.push_back({lab, std::pow(double(N), kappa * sigma + eps) * cell, 0.0, {{"F", double(k)}, {"N", double(N)}}});
      ab_raw.push_back({lab, double(N), cell});
    }
  }
  ConditionReport rep;
  rep.condition = "SC_and_AB";
  rep.params = {{"m", m}, {"p", p}, {"q", q}, {"kappa", kappa}, {"n", n}, {"eps", eps}};
  rep.budget = opt.budget;
  rep.sub.push_back(make_report("SC", rep.params, sc, opt));
  rep.sub.push_back(make_report("AB", rep.params, ab, opt));
  rep.C_hat = rep.sub[0].C_hat;
  rep.worst_ratio = std::max(rep.sub[0].worst_ratio, rep.sub[1].worst_ratio);
  rep.sample_count = sc.size() + ab.size();
  // finite measure: SC on B = X plus Hoelder gives ||F||_{p->p} <= C_SC (N r_X)^{n(1/p-1/2)} ||delta_N F||
  const double C_sc = rep.sub[0].C_hat;
  bool holds = true;
  for (const auto& a : ab_raw) holds = holds && a[0] <= C_sc * std::pow(a[1] * r_all, sigma) * a[2] * (1 + 1e-9);
  rep.extras["prop49_checked"] = 1;
  rep.extras["prop49_holds"] = holds;
  rep.extras["prop49_constant"] = C_sc * std::pow(r_all, sigma);
  rep.pass = rep.sub[0].pass && rep.sub[1].pass && holds;
  rep.status = rep.pass ? "ok" : rep.sub[0].status != "ok" ? rep.sub[0].status : rep.sub[1].status;
  return rep;
}

struct AhlforsCheck {
  double n = 0, C = 0;
  bool pass = false;
};

// Two-sided fit of a r^n <= V(x, r) <= b r^n; C = sqrt(b/a).
inline AhlforsCheck ahlfors_precheck(const MetricMeasureSpace& s, std::optional<double> n_opt = std::nullopt,
                                     double tolerance = 8) {
  AhlforsCheck a;
  a.n = n_opt ? *n_opt : estimate_dimension(s);
  const double rmin = s.min_positive_distance(), diam = s.diameter();
  VolumeTable vol(s);
  double lo = kInf, hi = 0;
  const Index stride = std::max<Index>(1, s.size() / 64);
  for (Index x = 0; x < s.size(); x += stride)
    for (double r : log_grid(rmin, std::max(rmin, diam / 2), 12)) {
      const double v = std::max(vol(x, r * (1 + 1e-9)), s.weight()(x)) / std::pow(r, a.n);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  for (Index x = 0; x < s.size(); ++x) {
    const double v = s.weight()(x) / std::pow(rmin, a.n);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  a.C = std::sqrt(hi / lo);
  a.pass = a.C <= tolerance;
  return a;
}

struct AuditGrids {
  std::vector<double> lambda;
  STGrids st;
  EpsRule rule = EpsRule::GapAdapted;
  int ensemble = 20;
};

// Restriction, Stein-Tomas (q = 2) and the p->p' form on shared grids; the three verdicts should agree.
inline ConditionReport audit_prop44(const WeightedOperator& L, double m, double p, double R0, const AuditGrids& g,
                                    const CheckOptions& opt = {}) {
  const AhlforsCheck pre = ahlfors_precheck(L.space(), opt.n);
  if (!pre.pass)
    throw PrecheckFailed("space is not approximately Ahlfors-regular (C = " + std::to_string(pre.C) + ")");
  CheckOptions o = opt;
  o.n = pre.n;
  ConditionReport rep;
  rep.condition = "prop44_audit";
  rep.params = {{"m", m}, {"p", p}, {"R0", R0}, {"n", pre.n}};
  rep.budget = opt.budget;
  rep.extras["ahlfors_C"] = pre.C;
  rep.sub.push_back(check_restriction_R(L, m, p, g.lambda, R0, g.rule, o));
  rep.sub.push_back(check_ST(L, m, p, 2, g.st, STVariant::Local, R0, g.ensemble, 2, o));
  rep.sub.push_back(check_ST(L, m, p, 1, g.st, STVariant::Local, R0, g.ensemble, conjugate_exponent(p), o));
  const bool agree = rep.sub[0].pass == rep.sub[1].pass && rep.sub[1].pass == rep.sub[2].pass;
  rep.extras["verdicts_agree"] = agree;
  rep.extras["C_R"] = rep.sub[0].C_hat;
  rep.extras["C_ST2"] = rep.sub[1].C_hat;
  rep.extras["C_ST1"] = rep.sub[2].C_hat;
  rep.pass = agree;
  rep.status = agree ? "ok" : "disagree";
  rep.C_hat = std::max({rep.sub[0].C_hat, rep.sub[1].C_hat, rep.sub[2].C_hat});
  for (const auto& r : rep.sub) {
    rep.sample_count += r.sample_count;
    rep.worst_ratio = std::max(rep.worst_ratio, r.worst_ratio);
  }
  return rep;
}

}  // namespace sml
