#pragma once
#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "sml/errors.hpp"
#include "sml/random.hpp"

namespace sml {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double inv_exp(double p) { return std::isinf(p) ? 0.0 : 1.0 / p; }
inline double from_inv(double x) { return x <= 0 ? kInf : 1.0 / x; }
inline double conjugate_exponent(double p) {
  if (p == 1) return kInf;
  if (std::isinf(p)) return 1;
  return p / (p - 1);
}

template <class V>
double vec_norm(const V& v, double p) {
  if (std::isinf(p)) return v.size() ? double(v.cwiseAbs().maxCoeff()) : 0.0;
  if (p == 1) return double(v.cwiseAbs().sum());
  if (p == 2) return double(v.norm());
  const double s = double(v.cwiseAbs().maxCoeff());
  if (s == 0) return 0;
  double acc = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::pow(std::abs(v(i)) / s, p);
  return s * std::pow(acc, 1.0 / p);
}

enum class NormMethod { ExactEndpoint, SingularValue, DualityPowerIteration, Interpolation };

inline std::string to_string(NormMethod m) {
  switch (m) {
    case NormMethod::ExactEndpoint: return "exact-endpoint";
    case NormMethod::SingularValue: return "singular-value";
    case NormMethod::DualityPowerIteration: return "duality-power-iteration";
    case NormMethod::Interpolation: return "interpolation";
  }
  return "?";
}

struct OperatorNormEstimate {
  double p = 2, q = 2;
  double lower = 0, upper = 0;
  NormMethod method = NormMethod::ExactEndpoint;
  bool exact() const { return lower == upper; }
};

// Norms of T : L^p(mu_in) -> L^q(mu_out) that are available in closed form.
struct ExactFamily {
  std::function<double(double q)> one_to_q;      // ||T||_{1->q}
  std::function<double(double p)> p_to_inf;      // ||T||_{p->inf}
  std::function<double()> two_two;               // ||T||_{2->2} (may be empty)
  std::function<double(double p, double q)> extra_upper;  // any further valid bound (may be empty)
  double measure_in = kInf, measure_out = kInf;  // total measures for Hoelder fallbacks
};

struct NormOptions {
  int starts = 8;
  int iterations = 300;
  double tolerance = 1e-13;
  int anchors = 17;  // grid points per exact segment for the interpolation search
};

namespace detail {

template <class Scalar>
Scalar phase(Scalar v) {
  if constexpr (std::is_same_v<Scalar, double>) return v >= 0 ? 1.0 : -1.0;
  else {
    const double a = std::abs(v);
    return a > 0 ? v / a : Scalar(1.0);
  }
}

// Norming functional of v in l^r: returns u with ||u||_{r'} = 1 and <u, v> = ||v||_r.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dual_map(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& v, double r) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = v.size();
  Vec u = Vec::Zero(n);
  const double nv = vec_norm(v, r);
  if (nv == 0) return u;
  if (std::isinf(r)) {
    Eigen::Index k;
    v.cwiseAbs().maxCoeff(&k);
    u(k) = phase(v(k));
    return u;
  }
  if (r == 1) {
    for (Eigen::Index i = 0; i < n; ++i) u(i) = std::abs(v(i)) > 0 ? phase(v(i)) : Scalar(0);
    return u;
  }
  for (Eigen::Index i = 0; i < n; ++i) u(i) = phase(v(i)) * std::pow(std::abs(v(i)) / nv, r - 1);
  return u;
}

template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> random_vector(Rng& rng, Eigen::Index n) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if constexpr (std::is_same_v<Scalar, double>) v(i) = normal(rng);
    else {
      const double re = normal(rng);
      v(i) = Scalar(re, normal(rng));
    }
  }
  return v;
}

}  // namespace detail

// Boyd's nonlinear power iteration; returns the best ratio seen (a valid lower bound).
template <class Scalar, class Apply, class Adjoint>
double duality_power_lower(Apply&& A, Adjoint&& AH, Eigen::Index n_in, double p, double q, Rng& rng,
                           const NormOptions& opt = {},
                           const std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& seeds = {}) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const double pc = conjugate_exponent(p);
  double best = 0;
  std::vector<Vec> starts = seeds;
  for (int s = 0; s < opt.starts; ++s) starts.push_back(detail::random_vector<Scalar>(rng, n_in));
  for (Vec x : starts) {
    double nx = vec_norm(x, p);
    if (nx == 0) continue;
    x /= nx;
    double prev = 0;
    for (int it = 0; it < opt.iterations; ++it) {
      Vec y = A(x);
      const double val = vec_norm(y, q);
      best = std::max(best, val);
      if (val == 0) break;
      if (it > 0 && std::abs(val - prev) <= opt.tolerance * val) break;
      prev = val;
      Vec z = detail::dual_map<Scalar>(y, q);
      Vec w = AH(z);
      Vec xn = detail::dual_map<Scalar>(w, pc);
      if (vec_norm(xn, p) == 0) break;
      x = xn / vec_norm(xn, p);
    }
  }
  return best;
}

// Best Riesz-Thorin bound from pairs of exactly computable points collinear with the target.
inline double interpolation_upper(const ExactFamily& ex, double p, double q, const NormOptions& opt = {}) {
  const double tx = inv_exp(p), ty = inv_exp(q);
  std::map<std::pair<int, long long>, double> cache;
  auto key = [](double v) { return (long long)std::llround(v * 1e12); };
  auto norm_at = [&](double x, double y) -> double {
    // points on 1/p = 1 or 1/q = 0, or the centre
    if (std::abs(x - 1) < 1e-14) {
      auto k = std::make_pair(0, key(y));
      auto it = cache.find(k);
      if (it != cache.end()) return it->second;
      return cache[k] = ex.one_to_q(from_inv(y));
    }
    if (std::abs(y) < 1e-14) {
      auto k = std::make_pair(1, key(x));
      auto it = cache.find(k);
      if (it != cache.end()) return it->second;
      return cache[k] = ex.p_to_inf(from_inv(x));
    }
    auto k = std::make_pair(2, 0LL);
    auto it = cache.find(k);
    if (it != cache.end()) return it->second;
    return cache[k] = ex.two_two();
  };
  if (std::abs(tx - 1) < 1e-14 || std::abs(ty) < 1e-14) return norm_at(tx, ty);
  const bool centre = bool(ex.two_two);
  if (centre && std::abs(tx - 0.5) < 1e-14 && std::abs(ty - 0.5) < 1e-14) return norm_at(0.5, 0.5);

  std::vector<std::pair<double, double>> anchors;
  const int K = std::max(2, opt.anchors);
  for (int i = 0; i < K; ++i) {
    const double s = double(i) / (K - 1);
    anchors.push_back({1.0, s});
    anchors.push_back({s, 0.0});
  }
  if (centre) anchors.push_back({0.5, 0.5});
  double best = kInf;
  for (auto [ax, ay] : anchors) {
    const double dx = tx - ax, dy = ty - ay;
    if (std::abs(dx) < 1e-15 && std::abs(dy) < 1e-15) continue;
    std::vector<std::pair<double, double>> hits;
    if (dx > 1e-15) {
      const double t = (1 - ax) / dx;
      const double y = ay + t * dy;
      if (t > 1 + 1e-12 && y >= -1e-12 && y <= 1 + 1e-12) hits.push_back({t, std::clamp(y, 0.0, 1.0)});
    }
    if (dy < -1e-15) {
      const double t = -ay / dy;
      const double x = ax + t * dx;
      if (t > 1 + 1e-12 && x >= -1e-12 && x <= 1 + 1e-12) hits.push_back({t, std::clamp(x, 0.0, 1.0)});
    }
    for (std::size_t h = 0; h < hits.size(); ++h) {
      const double t = hits[h].first;
      const double bx = ax + t * dx, by = ay + t * dy;
      const double s = 1.0 / t;
      const double na = norm_at(ax, ay), nb = norm_at(std::abs(bx - 1) < 1e-9 ? 1.0 : bx, std::abs(by) < 1e-9 ? 0.0 : by);
      double v;
      if (na == 0 || nb == 0) v = 0;
      else v = std::exp((1 - s) * std::log(na) + s * std::log(nb));
      best = std::min(best, v);
    }
  }
  // Hoelder through the total measures
  if (std::isfinite(ex.measure_out) && !std::isinf(q)) best = std::min(best, std::pow(ex.measure_out, 1.0 / q) * norm_at(tx, 0.0));
  if (std::isfinite(ex.measure_in) && p > 1) best = std::min(best, std::pow(ex.measure_in, 1.0 - 1.0 / p) * norm_at(1.0, ty));
  if (ex.extra_upper) best = std::min(best, ex.extra_upper(p, q));
  return best;
}

template <class Scalar, class Apply, class Adjoint>
OperatorNormEstimate estimate_norm(Apply&& A, Adjoint&& AH, Eigen::Index n_in, const ExactFamily& ex, double p,
                                   double q, std::uint64_t seed, const NormOptions& opt = {},
                                   const std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& seeds = {}) {
  require(p >= 1 && q >= 1, "exponents must lie in [1, inf]");
  OperatorNormEstimate e;
  e.p = p;
  e.q = q;
  if (p == 1) {
    e.lower = e.upper = ex.one_to_q(q);
    e.method = NormMethod::ExactEndpoint;
    return e;
  }
  if (std::isinf(q)) {
    e.lower = e.upper = ex.p_to_inf(p);
    e.method = NormMethod::ExactEndpoint;
    return e;
  }
  if (p == 2 && q == 2 && ex.two_two) {
    e.lower = e.upper = ex.two_two();
    e.method = NormMethod::SingularValue;
    return e;
  }
  Rng rng(seed);
  e.lower = duality_power_lower<Scalar>(A, AH, n_in, p, q, rng, opt, seeds);
  e.upper = interpolation_upper(ex, p, q, opt);
  e.method = NormMethod::DualityPowerIteration;
  // the power iteration can only undershoot; rounding may push it a hair above a tight bound
  if (e.lower > e.upper) e.upper = e.lower;
  return e;
}

// Closed-form norms of a kernel matrix between weighted spaces. (Tf)_i = sum_j T_ij f_j, so the
// integral kernel is T_ij / mu_j.
template <class Mat>
ExactFamily dense_exact_family(const Mat& T, const Eigen::VectorXd& w_out, const Eigen::VectorXd& w_in) {
  ExactFamily ex;
  ex.one_to_q = [&T, &w_out, &w_in](double q) {
    double best = 0;
    const Eigen::VectorXd s = w_out.array().pow(inv_exp(q));
    for (Eigen::Index j = 0; j < T.cols(); ++j)
      best = std::max(best, vec_norm(T.col(j).cwiseProduct(s), q) / w_in(j));
    return best;
  };
  ex.p_to_inf = [&T, &w_in](double p) {
    const double pc = conjugate_exponent(p);
    const Eigen::VectorXd s = w_in.array().pow(inv_exp(pc) - 1.0);
    double best = 0;
    for (Eigen::Index i = 0; i < T.rows(); ++i)
      best = std::max(best, vec_norm(T.row(i).transpose().cwiseProduct(s), pc));
    return best;
  };
  ex.two_two = [&T, &w_out, &w_in]() {
    if (T.size() == 0) return 0.0;
    using M = Eigen::Matrix<typename Mat::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    M A = w_out.cwiseSqrt().asDiagonal() * T * w_in.cwiseSqrt().cwiseInverse().asDiagonal();
    Eigen::BDCSVD<M> svd(A);
    return double(svd.singularValues()(0));
  };
  ex.extra_upper = [&T, &w_out, &w_in](double p, double q) {
    // mixed norm: || ||K(x, .)||_{L^{p'}} ||_{L^q}
    const double pc = conjugate_exponent(p);
    const Eigen::VectorXd s = w_in.array().pow(inv_exp(pc) - 1.0);
    Eigen::VectorXd rows(T.rows());
    for (Eigen::Index i = 0; i < T.rows(); ++i)
      rows(i) = vec_norm(T.row(i).transpose().cwiseProduct(s), pc) * std::pow(w_out(i), inv_exp(q));
    return vec_norm(rows, q);
  };
  ex.measure_in = w_in.sum();
  ex.measure_out = w_out.sum();
  return ex;
}

// ||T||_{L^p(mu_in) -> L^q(mu_out)} for a kernel matrix T acting by (Tf)_i = sum_j T_ij f_j.
template <class Derived>
OperatorNormEstimate lp_operator_norm(const Eigen::MatrixBase<Derived>& T, const Eigen::VectorXd& w_out,
                                      const Eigen::VectorXd& w_in, double p, double q, std::uint64_t seed = 0x9e37,
                                      const NormOptions& opt = {}) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  require(T.rows() == w_out.size() && T.cols() == w_in.size(), "weights do not match matrix shape");
  require(p >= 1 && q >= 1, "exponents must lie in [1, inf]");
  Eigen::VectorXd lo = w_out.array().pow(inv_exp(q));
  Eigen::VectorXd li = w_in.array().pow(-inv_exp(p));
  Mat A = lo.asDiagonal() * T.derived() * li.asDiagonal();
  const Mat& Tm = T.derived();
  ExactFamily ex = dense_exact_family(Tm, w_out, w_in);
  auto apply = [&A](const Vec& x) -> Vec { return A * x; };
  auto adj = [&A](const Vec& z) -> Vec { return A.adjoint() * z; };
  // column of largest l^q norm is a good deterministic start
  std::vector<Vec> seeds;
  if (A.cols() > 0) {
    Eigen::Index best = 0;
    double bv = -1;
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      const double v = vec_norm(A.col(j), q);
      if (v > bv) bv = v, best = j;
    }
    seeds.push_back(Vec::Unit(A.cols(), best));
    seeds.push_back(Vec::Ones(A.cols()));
  }
  return estimate_norm<Scalar>(apply, adj, A.cols(), ex, p, q, seed, opt, seeds);
}

template <class Derived>
OperatorNormEstimate lp_operator_norm(const Eigen::MatrixBase<Derived>& T, const Eigen::VectorXd& w, double p, double q,
                                      std::uint64_t seed = 0x9e37, const NormOptions& opt = {}) {
  return lp_operator_norm(T, w, w, p, q, seed, opt);
}

}  // namespace sml
