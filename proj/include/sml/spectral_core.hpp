#pragma once
#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "sml/errors.hpp"
#include "sml/lp_norms.hpp"
#include "sml/metric_space.hpp"
#include "sml/periodic_convolution.hpp"

namespace sml {

// Symbol of a translation-invariant operator on a periodic grid, in FFT order.
struct CirculantInfo {
  std::vector<int> dims;
  Eigen::VectorXd symbol;
};

struct Spectrum {
  Eigen::VectorXd values;  // nondecreasing, clamped at 0
  Eigen::MatrixXd Q;       // orthonormal eigenvectors of D^{1/2} M D^{-1/2}
  double radius = 0;
};

// Self-adjoint operator on L^2(X, mu), stored as the matrix acting on point values.
class WeightedOperator {
 public:
  WeightedOperator(std::shared_ptr<const MetricMeasureSpace> space, Eigen::MatrixXd matrix, std::string label = "",
                   double m_tag = 2, std::optional<CirculantInfo> circulant = std::nullopt)
      : space_(std::move(space)), state_(std::make_shared<State>()) {
    require(space_ != nullptr, "operator needs a space");
    require(matrix.rows() == space_->size() && matrix.cols() == space_->size(), "matrix shape does not match space");
    state_->matrix = std::move(matrix);
    state_->label = std::move(label);
    state_->m_tag = m_tag;
    state_->circulant = std::move(circulant);
    const Eigen::VectorXd& w = space_->weight();
    // weighted self-adjointness: mu_i M_ij = mu_j M_ji
    const Eigen::MatrixXd& M = state_->matrix;
    const double scale = std::max(1e-300, M.cwiseAbs().maxCoeff() * w.maxCoeff());
    for (Index i = 0; i < M.rows(); ++i)
      for (Index j = i + 1; j < M.cols(); ++j)
        if (std::abs(w(i) * M(i, j) - w(j) * M(j, i)) > 1e-9 * scale)
          throw InvalidArgument("operator is not self-adjoint in the weighted inner product");
  }

  const MetricMeasureSpace& space() const { return *space_; }
  std::shared_ptr<const MetricMeasureSpace> space_ptr() const { return space_; }
  const Eigen::MatrixXd& matrix() const { return state_->matrix; }
  const std::string& label() const { return state_->label; }
  double m_tag() const { return state_->m_tag; }
  Index size() const { return space_->size(); }
  const std::optional<CirculantInfo>& circulant() const { return state_->circulant; }

  const Spectrum& spectrum() const {
    std::call_once(state_->once, [this] { state_->spectrum = compute_spectrum(); });
    return state_->spectrum;
  }
  const Eigen::VectorXd& eigenvalues() const { return spectrum().values; }
  // Weighted-orthonormal eigenvectors D^{-1/2} Q.
  Eigen::MatrixXd eigenvectors() const {
    return space_->weight().cwiseSqrt().cwiseInverse().asDiagonal() * spectrum().Q;
  }

 private:
  struct State {
    Eigen::MatrixXd matrix;
    std::string label;
    double m_tag = 2;
    std::optional<CirculantInfo> circulant;
    std::once_flag once;
    Spectrum spectrum;
  };

  Spectrum compute_spectrum() const {
    const Eigen::VectorXd s = space_->weight().cwiseSqrt();
    Eigen::MatrixXd S = s.asDiagonal() * state_->matrix * s.cwiseInverse().asDiagonal();
    S = 0.5 * (S + S.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success) throw EvaluationError("eigensolver failed");
    Spectrum sp;
    sp.values = es.eigenvalues();
    sp.Q = es.eigenvectors();
    sp.radius = sp.values.cwiseAbs().maxCoeff();
    if (sp.values.minCoeff() < -1e-9 * std::max(sp.radius, 1e-300))
      throw InvalidArgument("operator is not nonnegative (min eigenvalue " + std::to_string(sp.values.minCoeff()) + ")");
    for (Index k = 0; k < sp.values.size(); ++k)
      if (std::abs(sp.values(k)) <= 1e-12 * sp.radius) sp.values(k) = 0.0;
    return sp;
  }

  std::shared_ptr<const MetricMeasureSpace> space_;
  std::shared_ptr<State> state_;
};

// F with optional declared support; evaluates to 0 outside it.
struct MultiplierFunction {
  std::function<double(double)> f;
  double support_lo = -kInf, support_hi = kInf;
  bool even = false;
  std::string smoothness;

  MultiplierFunction() = default;
  template <class Fn, class = std::enable_if_t<std::is_invocable_r_v<double, Fn, double>>>
  MultiplierFunction(Fn fn, double lo = -kInf, double hi = kInf, bool is_even = false, std::string note = "")
      : f(std::move(fn)), support_lo(lo), support_hi(hi), even(is_even), smoothness(std::move(note)) {}

  double operator()(double x) const {
    if (even) x = std::abs(x);
    if (x < support_lo || x > support_hi) return 0.0;
    return f(x);
  }
};

// delta_R F = F(R .)
inline MultiplierFunction rescale(const MultiplierFunction& F, double R) {
  MultiplierFunction G = F;
  G.f = [F, R](double x) { return F(R * x); };
  G.support_lo = F.support_lo / R;
  G.support_hi = F.support_hi / R;
  G.even = false;
  return G;
}

inline double root_of(double lambda, double m) { return lambda <= 0 ? 0.0 : (m == 1 ? lambda : std::pow(lambda, 1.0 / m)); }

// Kernel matrix of sum_k f_k Pi_k, skipping zero coefficients.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> spectral_sum(const WeightedOperator& L,
                                                                   const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& f) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Spectrum& sp = L.spectrum();
  std::vector<Index> idx;
  for (Index k = 0; k < f.size(); ++k)
    if (f(k) != Scalar(0)) idx.push_back(k);
  const Index n = L.size();
  if (idx.empty()) return Mat::Zero(n, n);
  Eigen::MatrixXd Qs(n, Index(idx.size()));
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> fs(Index(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) {
    Qs.col(Index(c)) = sp.Q.col(idx[c]);
    fs(Index(c)) = f(idx[c]);
  }
  const Eigen::VectorXd s = L.space().weight().cwiseSqrt();
  Eigen::MatrixXd left = s.cwiseInverse().asDiagonal() * Qs;
  Eigen::MatrixXd right = s.asDiagonal() * Qs;
  if constexpr (std::is_same_v<Scalar, double>) {
    return (left * fs.asDiagonal()) * right.transpose();
  } else {
    Mat lf = left.cast<Scalar>() * fs.asDiagonal();
    return lf * right.transpose().cast<Scalar>();
  }
}

// F(L^{1/m}) for real- or complex-valued F.
template <class Fn>
auto apply_multiplier(const Fn& F, const WeightedOperator& L, double m = 1) {
  require(m >= 1, "root order must be >= 1");
  using R = std::decay_t<decltype(F(0.0))>;
  using Scalar = std::conditional_t<std::is_same_v<R, std::complex<double>>, std::complex<double>, double>;
  const Eigen::VectorXd& lam = L.eigenvalues();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> f(lam.size());
  for (Index k = 0; k < lam.size(); ++k) {
    const Scalar v = Scalar(F(root_of(lam(k), m)));
    if (!std::isfinite(std::abs(v))) throw EvaluationError("multiplier is not finite at a spectral point");
    f(k) = v;
  }
  return spectral_sum<Scalar>(L, f);
}

inline Eigen::MatrixXd heat_operator(const WeightedOperator& L, double t) {
  require(t >= 0, "time must be nonnegative");
  return apply_multiplier([t](double l) { return std::exp(-t * l); }, L, 1);
}

inline Eigen::MatrixXcd complex_heat_operator(const WeightedOperator& L, std::complex<double> z) {
  require(z.real() > 0, "Re z must be positive");
  return apply_multiplier([z](double l) { return std::exp(-z * l); }, L, 1);
}

// Projector onto eigenvalues with lambda^{1/m} in (a, b].
inline Eigen::MatrixXd band_projector(const WeightedOperator& L, double a, double b, double m = 1) {
  require(a <= b, "band must satisfy a <= b");
  return apply_multiplier([a, b](double l) { return (l > a && l <= b) ? 1.0 : 0.0; }, L, m);
}

inline Index band_rank(const WeightedOperator& L, double a, double b, double m = 1) {
  Index c = 0;
  for (Index k = 0; k < L.size(); ++k) {
    const double r = root_of(L.eigenvalues()(k), m);
    c += (r > a && r <= b);
  }
  return c;
}

inline Eigen::MatrixXcd resolvent(const WeightedOperator& L, std::complex<double> z) {
  const Eigen::VectorXd& lam = L.eigenvalues();
  double dmin = kInf;
  for (Index k = 0; k < lam.size(); ++k) dmin = std::min(dmin, std::abs(lam(k) - z));
  const double rho = std::max(L.spectrum().radius, 1e-300);
  if (dmin < 1e-12 * rho) throw SpectrumHit("z lies on the spectrum");
  return apply_multiplier([z](double l) { return 1.0 / (l - z); }, L, 1);
}

// ||T||_{p->q} between the weighted spaces of an operator's domain.
template <class Derived>
OperatorNormEstimate lp_operator_norm(const Eigen::MatrixBase<Derived>& T, const MetricMeasureSpace& s, double p,
                                      double q, std::uint64_t seed = 0x9e37, const NormOptions& opt = {}) {
  return lp_operator_norm(T, s.weight(), s.weight(), p, q, seed, opt);
}

// Norm of P_A T P_B, computed on the sub-block with restricted weights.
template <class Derived>
OperatorNormEstimate masked_norm(const Eigen::MatrixBase<Derived>& T, const MetricMeasureSpace& s,
                                 const std::vector<Index>& rows, const std::vector<Index>& cols, double p, double q,
                                 std::uint64_t seed = 0x9e37, const NormOptions& opt = {}) {
  using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  OperatorNormEstimate e;
  e.p = p;
  e.q = q;
  if (rows.empty() || cols.empty()) return e;
  Mat sub(Index(rows.size()), Index(cols.size()));
  Eigen::VectorXd wo(Index(rows.size())), wi(Index(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) wo(Index(i)) = s.weight()(rows[i]);
  for (std::size_t j = 0; j < cols.size(); ++j) wi(Index(j)) = s.weight()(cols[j]);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) sub(Index(i), Index(j)) = T(rows[i], cols[j]);
  return lp_operator_norm(sub, wo, wi, p, q, seed, opt);
}

struct DensityEstimate {
  OperatorNormEstimate estimate;
  bool empty_band = false;
  Index rank = 0;
  double eps = 0;
};

// Finite-band proxy for ||dE_{L^{1/m}}(lambda)||_{p->p'}.
inline DensityEstimate spectral_measure_density(const WeightedOperator& L, double lambda, double eps, double p,
                                                double m = 1, std::uint64_t seed = 0x9e37) {
  require(lambda > 0 && eps > 0, "lambda and eps must be positive");
  require(eps < lambda / 4, "eps must be below lambda/4");
  DensityEstimate d;
  d.eps = eps;
  const double pc = conjugate_exponent(p);
  d.estimate.p = p;
  d.estimate.q = pc;
  d.rank = band_rank(L, lambda - eps, lambda + eps, m);
  if (d.rank == 0) {
    d.empty_band = true;
    return d;
  }
  Eigen::MatrixXd P = band_projector(L, lambda - eps, lambda + eps, m);
  d.estimate = lp_operator_norm(P, L.space(), p, pc, seed);
  d.estimate.lower /= 2 * eps;
  d.estimate.upper /= 2 * eps;
  return d;
}

// Distinct values of lambda_k^{1/m} (merged within a relative tolerance).
inline std::vector<double> distinct_roots(const WeightedOperator& L, double m, double rtol = 1e-9) {
  std::vector<double> r;
  const double scale = std::max(root_of(L.spectrum().radius, m), 1e-300);
  for (Index k = 0; k < L.size(); ++k) {
    const double v = root_of(L.eigenvalues()(k), m);
    if (r.empty() || v - r.back() > rtol * scale) r.push_back(v);
  }
  return r;
}

enum class EpsRule { GapAdapted, Proportional };

struct BandChoice {
  double lambda = 0, eps = 0;
  bool gap_resolved = false;
};

// Half the local gap when it is below lambda/4 (lambda snapped to the nearest spectral value), else lambda/8.
inline BandChoice choose_band(const WeightedOperator& L, double lambda, double m, EpsRule rule) {
  BandChoice b{lambda, lambda / 8, false};
  if (rule == EpsRule::Proportional) return b;
  const auto r = distinct_roots(L, m);
  std::size_t k = 0;
  double best = kInf;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (std::abs(r[i] - lambda) < best) best = std::abs(r[i] - lambda), k = i;
  double gap = kInf;
  if (k > 0) gap = std::min(gap, r[k] - r[k - 1]);
  if (k + 1 < r.size()) gap = std::min(gap, r[k + 1] - r[k]);
  if (r[k] > 0 && gap / 2 < r[k] / 4) return {r[k], gap / 2, true};
  return b;
}

// G_L(f)(x) = (sum_j |psi(2^j L^{1/m}) f (x)|^2)^{1/2}
template <class Fn>
Eigen::VectorXd square_function(const WeightedOperator& L, const Eigen::VectorXd& f, const Fn& psi, int j_min,
                                int j_max, double m = 1) {
  require(std::abs(psi(0.0)) == 0.0, "psi(0) must vanish");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(f.size());
  for (int j = j_min; j <= j_max; ++j) {
    const double s = std::ldexp(1.0, j);
    Eigen::MatrixXd P = apply_multiplier([&](double l) { return double(psi(s * l)); }, L, m);
    acc += (P * f).cwiseAbs2();
  }
  return acc.cwiseSqrt();
}

// Weighted L^2 norm and inner product.
inline double weighted_norm(const Eigen::VectorXd& f, const Eigen::VectorXd& w) { return std::sqrt((w.array() * f.array().square()).sum()); }

// Weighted 2->2 operator norm of a kernel matrix.
template <class Derived>
double weighted_two_norm(const Eigen::MatrixBase<Derived>& T, const Eigen::VectorXd& w) {
  using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat A = w.cwiseSqrt().asDiagonal() * T.derived() * w.cwiseSqrt().cwiseInverse().asDiagonal();
  Eigen::BDCSVD<Mat> svd(A);
  return svd.singularValues()(0);
}

// F(L^{1/m}) as a convolution when L carries a periodic-grid symbol (unit weights).
template <class Fn>
CirculantOperator circulant_multiplier(const Fn& F, const WeightedOperator& L, double m = 1) {
  require(L.circulant().has_value(), "operator has no circulant structure");
  const CirculantInfo& ci = *L.circulant();
  Eigen::VectorXcd sym(ci.symbol.size());
  for (Index k = 0; k < sym.size(); ++k) {
    const std::complex<double> v = F(root_of(std::max(0.0, ci.symbol(k)), m));
    if (!std::isfinite(std::abs(v))) throw EvaluationError("multiplier is not finite at a spectral point");
    sym(k) = v;
  }
  return CirculantOperator::from_symbol(ci.dims, sym);
}

}  // namespace sml
