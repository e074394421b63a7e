#pragma once
#include <Eigen/Dense>
#include <vector>

#include "sml/fft.hpp"
#include "sml/lp_norms.hpp"

namespace sml {

// Translation-invariant operator on a periodic grid with unit point weights:
// (K f)(x) = sum_y k(x - y) f(y).
class CirculantOperator {
 public:
  CirculantOperator(std::vector<int> dims, Eigen::VectorXcd kernel) : dims_(std::move(dims)), kernel_(std::move(kernel)) {
    require(product(dims_) == kernel_.size(), "kernel size does not match grid");
    symbol_ = kernel_;
    fftn(symbol_, dims_, false);
  }

  // symbol[k] is the eigenvalue on the character e^{2 pi i k.x / N}.
  static CirculantOperator from_symbol(std::vector<int> dims, const Eigen::VectorXcd& symbol) {
    Eigen::VectorXcd k = symbol;
    fftn(k, dims, true);
    return CirculantOperator(std::move(dims), std::move(k));
  }

  const std::vector<int>& dims() const { return dims_; }
  const Eigen::VectorXcd& kernel() const { return kernel_; }
  const Eigen::VectorXcd& symbol() const { return symbol_; }
  Eigen::Index size() const { return kernel_.size(); }

  cd entry(Eigen::Index x, Eigen::Index y) const {
    auto cx = unravel(x, dims_), cy = unravel(y, dims_);
    for (std::size_t a = 0; a < cx.size(); ++a) cx[a] -= cy[a];
    return kernel_(ravel(cx, dims_));
  }

  Eigen::VectorXcd apply(const Eigen::VectorXcd& f) const {
    Eigen::VectorXcd g = f;
    fftn(g, dims_, false);
    g.array() *= symbol_.array();
    fftn(g, dims_, true);
    return g;
  }

  Eigen::VectorXcd apply_adjoint(const Eigen::VectorXcd& f) const {
    Eigen::VectorXcd g = f;
    fftn(g, dims_, false);
    g.array() *= symbol_.array().conjugate();
    fftn(g, dims_, true);
    return g;
  }

  Eigen::MatrixXcd to_dense() const {
    const Eigen::Index n = size();
    Eigen::MatrixXcd M(n, n);
    for (Eigen::Index y = 0; y < n; ++y) {
      const auto cy = unravel(y, dims_);
      for (Eigen::Index x = 0; x < n; ++x) {
        auto cx = unravel(x, dims_);
        for (std::size_t a = 0; a < cx.size(); ++a) cx[a] -= cy[a];
        M(x, y) = kernel_(ravel(cx, dims_));
      }
    }
    return M;
  }

  // Composition K * D for a diagonal multiplication D (returned as a matvec pair by callers).
  ExactFamily exact_family() const {
    ExactFamily ex;
    ex.one_to_q = [this](double q) { return vec_norm(kernel_, q); };
    ex.p_to_inf = [this](double p) { return vec_norm(kernel_, conjugate_exponent(p)); };
    ex.two_two = [this]() { return double(symbol_.cwiseAbs().maxCoeff()); };
    ex.extra_upper = [this](double p, double q) {
      // Young: ||k * f||_q <= ||k||_r ||f||_p with 1 + 1/q = 1/r + 1/p
      const double ir = 1 + inv_exp(q) - inv_exp(p);
      if (ir < 0 || ir > 1) return kInf;
      return vec_norm(kernel_, from_inv(ir));
    };
    ex.measure_in = ex.measure_out = double(size());
    return ex;
  }

  OperatorNormEstimate norm(double p, double q, std::uint64_t seed = 0x9e37, const NormOptions& opt = {}) const {
    auto A = [this](const Eigen::VectorXcd& x) { return apply(x); };
    auto AH = [this](const Eigen::VectorXcd& x) { return apply_adjoint(x); };
    std::vector<Eigen::VectorXcd> seeds{Eigen::VectorXcd::Unit(size(), 0), Eigen::VectorXcd::Ones(size())};
    return estimate_norm<cd>(A, AH, size(), exact_family(), p, q, seed, opt, seeds);
  }

 private:
  std::vector<int> dims_;
  Eigen::VectorXcd kernel_;
  Eigen::VectorXcd symbol_;
};

// Norm of the composite f -> K (v .* f) for a circulant K and a multiplication by v (unit weights).
inline OperatorNormEstimate circulant_times_diagonal_norm(const CirculantOperator& K, const Eigen::VectorXd& v, double p,
                                                          double q, std::uint64_t seed = 0x9e37,
                                                          const NormOptions& opt = {}) {
  require(v.size() == K.size(), "multiplier size does not match grid");
  const Eigen::Index n = K.size();
  ExactFamily ex;
  // columns: k(. - y) v(y); rows: k(x - .) v(.)
  ex.one_to_q = [&](double qq) { return vec_norm(K.kernel(), qq) * v.cwiseAbs().maxCoeff(); };
  ex.p_to_inf = [&](double pp) {
    const double pc = conjugate_exponent(pp);
    // max_x || k(x - .) v ||_{p'}: evaluate through |k|^{p'} * |v|^{p'} by convolution
    if (std::isinf(pc)) {
      double best = 0;
      for (Eigen::Index y = 0; y < n; ++y)
        if (v(y) != 0) best = std::max(best, std::abs(v(y)) * K.kernel().cwiseAbs().maxCoeff());
      return best;
    }
    Eigen::VectorXcd kp = K.kernel().cwiseAbs().array().pow(pc).cast<cd>();
    CirculantOperator Kp(K.dims(), kp);
    Eigen::VectorXcd vp = v.cwiseAbs().array().pow(pc).cast<cd>();
    Eigen::VectorXcd s = Kp.apply(vp);
    double best = 0;
    for (Eigen::Index x = 0; x < n; ++x) best = std::max(best, std::max(0.0, s(x).real()));
    return std::pow(best, 1.0 / pc);
  };
  ex.measure_in = ex.measure_out = double(n);
  auto A = [&](const Eigen::VectorXcd& x) { return K.apply(x.cwiseProduct(v.cast<cd>())); };
  auto AH = [&](const Eigen::VectorXcd& x) { return Eigen::VectorXcd(K.apply_adjoint(x).cwiseProduct(v.cast<cd>())); };
  Eigen::Index peak;
  v.cwiseAbs().maxCoeff(&peak);
  std::vector<Eigen::VectorXcd> seeds{Eigen::VectorXcd::Unit(n, peak), v.cast<cd>()};
  return estimate_norm<cd>(A, AH, n, ex, p, q, seed, opt, seeds);
}

}  // namespace sml
