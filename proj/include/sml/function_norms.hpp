#pragma once
#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sml/bumps.hpp"
#include "sml/errors.hpp"
#include "sml/fft.hpp"
#include "sml/lp_norms.hpp"

namespace sml {

using ComplexFn = std::function<cd(double)>;

// Uniform periodic grid over a padded interval; the declared core sits in the middle.
struct SampledFunction {
  double x0 = 0, h = 1;
  Eigen::VectorXcd values;
  int pad_factor = 4;
  double core_lo = 0, core_hi = 1;
  ComplexFn source;  // kept so the grid can be refined

  Index size() const { return values.size(); }
  double x(Index i) const { return x0 + double(i) * h; }
  double resolution() const { return 1.0 / h; }
};

inline constexpr Index kDefaultSamples = Index(1) << 14;

inline SampledFunction sample_function(ComplexFn f, double core_lo, double core_hi, Index n = kDefaultSamples,
                                       int pad = 4) {
  require(core_hi > core_lo, "empty core interval");
  require(pad >= 4, "pad factor must be >= 4");
  require(n >= 16, "too few samples");
  SampledFunction s;
  const double len = pad * (core_hi - core_lo);
  const double c = 0.5 * (core_lo + core_hi);
  s.x0 = c - 0.5 * len;
  s.h = len / double(n);
  s.pad_factor = pad;
  s.core_lo = core_lo;
  s.core_hi = core_hi;
  s.values.resize(n);
  for (Index i = 0; i < n; ++i) s.values(i) = f(s.x(i));
  s.source = std::move(f);
  return s;
}

inline SampledFunction refine(const SampledFunction& F, Index factor = 2) {
  if (!F.source) throw ResolutionError("function has no source evaluator to refine");
  return sample_function(F.source, F.core_lo, F.core_hi, F.size() * factor, F.pad_factor);
}

inline Eigen::VectorXd angular_frequencies(Index n, double h) {
  Eigen::VectorXd xi(n);
  for (Index k = 0; k < n; ++k) xi(k) = 2 * M_PI * signed_freq(int(k), int(n)) / (double(n) * h);
  return xi;
}

inline double grid_lq(const Eigen::VectorXcd& g, double h, double q) {
  if (std::isinf(q)) return g.cwiseAbs().maxCoeff();
  return std::pow(h, 1.0 / q) * vec_norm(g, q);
}

struct NormEvaluation {
  std::string norm_kind;
  std::map<std::string, double> parameters;
  double value = 0;
  double resolution = 0;
  bool stable = true;
};

struct NormOptionsF {
  bool check_stability = true;
  double stability_tol = 1e-4;
};

inline constexpr double kFourierNoiseFloor = 1e-13;

namespace detail {

inline void check_decay(const SampledFunction& F) {
  const double peak = F.values.cwiseAbs().maxCoeff();
  const double edge = std::max(std::abs(F.values(0)), std::abs(F.values(F.size() - 1)));
  if (peak > 0 && edge > 1e-8 * peak) throw InvalidArgument("function does not decay at the padded boundary");
}

inline double sobolev_raw(const SampledFunction& F, double alpha, double q) {
  require(alpha >= 0, "alpha must be nonnegative");
  check_decay(F);
  const Index n = F.size();
  Eigen::VectorXcd hat = F.values;
  fftn(hat, {int(n)}, false);
  const Eigen::VectorXd xi = angular_frequencies(n, F.h);
  Eigen::VectorXd mult = (1.0 + xi.array().square()).pow(alpha / 2);
  // coefficients at the rounding floor would be amplified by (1 + xi^2)^{alpha/2}
  const double floor = kFourierNoiseFloor * hat.cwiseAbs().maxCoeff();
  for (Index k = 0; k < n; ++k)
    if (std::abs(hat(k)) <= floor) hat(k) = 0;
  Eigen::VectorXcd g = hat.cwiseProduct(mult.cast<cd>());
  const double freq_side = q == 2 ? std::sqrt(F.h / double(n)) * g.norm() : 0.0;
  fftn(g, {int(n)}, true);
  const double value = grid_lq(g, F.h, q);
  if (q == 2 && std::abs(value - freq_side) > 1e-6 * std::max(value, 1e-300))
    throw EvaluationError("Plancherel cross-check failed");
  return value;
}

template <class Fn>
NormEvaluation stabilized(const SampledFunction& F, const NormOptionsF& opt, std::string kind,
                          std::map<std::string, double> params, const Fn& raw) {
  NormEvaluation e{std::move(kind), std::move(params), raw(F), F.resolution(), true};
  if (opt.check_stability && F.source) {
    const double fine = raw(refine(F));
    const double scale = std::max({std::abs(fine), std::abs(e.value), 1e-300});
    if (std::abs(fine - e.value) > opt.stability_tol * scale) e.stable = false;
  }
  return e;
}

}  // namespace detail

// ||(1 - d^2/dx^2)^{alpha/2} F||_q, spectral on the periodized grid.
inline NormEvaluation sobolev_evaluation(const SampledFunction& F, double alpha, double q, const NormOptionsF& opt = {}) {
  return detail::stabilized(F, opt, "sobolev", {{"alpha", alpha}, {"q", q}},
                            [&](const SampledFunction& G) { return detail::sobolev_raw(G, alpha, q); });
}

inline double sobolev_norm(const SampledFunction& F, double alpha, double q, const NormOptionsF& opt = {}) {
  auto e = sobolev_evaluation(F, alpha, q, opt);
  if (!e.stable) throw ResolutionError("Sobolev norm changes under resolution doubling");
  return e.value;
}

// Default auxiliary bump on [1/4, 4].
inline double default_eta(double x) { return bump_on(x, 0.25, 4.0); }

inline std::vector<double> dyadic_t_grid(int K) {
  std::vector<double> t;
  for (int k = -K; k <= K; ++k) t.push_back(std::ldexp(1.0, k));
  return t;
}

// sup_t ||eta . F(t .)||_{W^alpha_q} over a finite t-grid.
inline double local_sobolev_norm(const ComplexFn& F, const std::function<double(double)>& eta, double alpha, double q,
                                 const std::vector<double>& t_grid, Index n = kDefaultSamples,
                                 const NormOptionsF& opt = {}) {
  require(!t_grid.empty(), "t grid must be non-empty");
  double best = 0;
  for (double t : t_grid) {
    auto G = sample_function([&F, &eta, t](double x) { return eta(x) == 0 ? cd(0) : eta(x) * F(t * x); }, 0.25, 4.0, n);
    best = std::max(best, sobolev_norm(G, alpha, q, opt));
  }
  return best;
}

// ((1/2N) sum_{l=1-N}^{N} sup_{[(l-1)/N, l/N)} |F|^q)^{1/q}
inline double nq_norm(const std::function<double(double)>& F, int N, double q, int samples_per_cell = 32) {
  require(N >= 1, "N must be positive");
  require(samples_per_cell >= 32, "at least 32 samples per cell");
  std::vector<double> sups;
  sups.reserve(2 * N);
  for (int l = 1 - N; l <= N; ++l) {
    const double a = double(l - 1) / N, b = double(l) / N;
    double s = 0;
    for (int k = 0; k <= samples_per_cell; ++k) {
      double x = a + (b - a) * k / samples_per_cell;
      if (k == samples_per_cell) x = std::nextafter(b, a);
      s = std::max(s, std::abs(F(x)));
    }
    sups.push_back(s);
  }
  if (std::isinf(q)) return *std::max_element(sups.begin(), sups.end());
  double acc = 0;
  for (double s : sups) acc += std::pow(s, q);
  return std::pow(acc / (2.0 * N), 1.0 / q);
}

// Littlewood-Paley windows in angular frequency: l = 0 low-pass, l >= 1 partition_phi(2^{-l} |xi|).
inline double lp_window(int l, double xi) {
  const double a = std::abs(xi);
  if (l >= 1) return partition_phi(std::ldexp(a, -l));
  double s = 0;
  for (int k = 1; k < 2048 && std::ldexp(kPartitionLo, k) < a; ++k) s += partition_phi(std::ldexp(a, -k));
  return 1.0 - s;
}

namespace detail {
inline double besov_raw(const SampledFunction& F, double s, double q) {
  check_decay(F);
  const Index n = F.size();
  Eigen::VectorXcd hat = F.values;
  fftn(hat, {int(n)}, false);
  const Eigen::VectorXd xi = angular_frequencies(n, F.h);
  const double nyq = M_PI / F.h;
  const double floor = kFourierNoiseFloor * hat.cwiseAbs().maxCoeff();
  for (Index k = 0; k < n; ++k)
    if (std::abs(hat(k)) <= floor) hat(k) = 0;
  double total = 0;
  for (int l = 0; std::ldexp(kPartitionLo, l) < nyq; ++l) {
    Eigen::VectorXcd g(n);
    for (Index k = 0; k < n; ++k) g(k) = hat(k) * lp_window(l, xi(k));
    fftn(g, {int(n)}, true);
    total += std::pow(2.0, l * s) * grid_lq(g, F.h, q);
  }
  return total;
}
}  // namespace detail

inline NormEvaluation besov_evaluation(const SampledFunction& F, double s, double q, const NormOptionsF& opt = {}) {
  return detail::stabilized(F, opt, "besov", {{"s", s}, {"q", q}},
                            [&](const SampledFunction& G) { return detail::besov_raw(G, s, q); });
}

inline double besov_norm(const SampledFunction& F, double s, double q, const NormOptionsF& opt = {}) {
  auto e = besov_evaluation(F, s, q, opt);
  if (!e.stable) throw ResolutionError("Besov norm changes under resolution doubling");
  return e.value;
}

// max over core sample pairs with separation h <= 1 of |F(x+h) - F(x)| / h^beta.
inline double holder_seminorm(const SampledFunction& F, double beta) {
  require(beta > 0 && beta <= 1, "beta must lie in (0, 1]");
  std::vector<cd> v;
  for (Index i = 0; i < F.size(); ++i) {
    const double x = F.x(i);
    if (x >= F.core_lo - 1e-12 && x <= F.core_hi + 1e-12) v.push_back(F.values(i));
  }
  const Index w = std::max<Index>(1, Index(std::floor(1.0 / F.h + 1e-9)));
  double best = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size() && Index(j - i) <= w; ++j)
      best = std::max(best, std::abs(v[j] - v[i]) / std::pow(double(j - i) * F.h, beta));
  return best;
}

}  // namespace sml
