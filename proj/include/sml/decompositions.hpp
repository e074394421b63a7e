#pragma once
#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "sml/bumps.hpp"
#include "sml/errors.hpp"
#include "sml/fft.hpp"
#include "sml/function_norms.hpp"

namespace sml {

using RealFn = std::function<double(double)>;

struct DyadicPartition {
  int order = 2;
  int l_min = -30, l_max = 30;

  double phi(double x) const { return partition_phi(x); }
  double phi_l(int l, double x) const { return partition_phi(std::ldexp(x, -l)); }
  double sum(double lambda) const {
    double s = 0;
    for (int l = l_min; l <= l_max; ++l) s += phi_l(l, lambda);
    return s;
  }
  std::vector<int> active(double lambda) const {
    std::vector<int> a;
    for (int l = l_min; l <= l_max; ++l)
      if (phi_l(l, lambda) != 0.0) a.push_back(l);
    return a;
  }
  SampledFunction sampled(Index n = 4096) const {
    return sample_function([](double x) { return cd(partition_phi(x)); }, 0.5, 2.0, n);
  }
};

inline DyadicPartition build_dyadic_partition(int order, int l_min = -30, int l_max = 30) {
  require(order >= 2, "smoothness order must be >= 2");
  require(l_min < l_max, "empty index range");
  DyadicPartition p;
  p.order = order;
  p.l_min = l_min;
  p.l_max = l_max;
  return p;
}

// psi supported in |x| <= 1/8 with unit integral; psi_l = 2^l psi(2^l .); theta_0 = psi_0, theta_l = psi_l - psi_{l-1}.
class MollifierFamily {
 public:
  static constexpr double kRadius = 0.125;

  MollifierFamily() : quad_(24) {
    const double mass = Quadrature(64).integrate([](double u) { return bump_on(u, -kRadius, kRadius); }, -kRadius, kRadius, 4);
    scale_ = 1.0 / mass;
  }

  double psi(double x) const { return scale_ * bump_on(x, -kRadius, kRadius); }
  double psi_l(int l, double x) const { return std::ldexp(1.0, l) * psi(std::ldexp(x, l)); }
  double theta(int l, double x) const { return l == 0 ? psi_l(0, x) : psi_l(l, x) - psi_l(l - 1, x); }

  // (psi_l * h)(x) = int psi(u) h(x - 2^{-l} u) du; breaks are singular points of h.
  double convolve_psi(int l, const RealFn& h, double x, const std::vector<double>& breaks = {}) const {
    const double s = std::ldexp(1.0, -l);
    std::vector<double> ub;
    for (double c : breaks) ub.push_back((x - c) / s);
    return quad_.integrate([&](double u) { return psi(u) * h(x - s * u); }, -kRadius, kRadius, 4, ub);
  }
  double convolve_theta(int l, const RealFn& h, double x, const std::vector<double>& breaks = {}) const {
    if (l == 0) return convolve_psi(0, h, x, breaks);
    return convolve_psi(l, h, x, breaks) - convolve_psi(l - 1, h, x, breaks);
  }

 private:
  Quadrature quad_;
  double scale_ = 1;
};

inline MollifierFamily build_mollifier_family() { return MollifierFamily(); }

struct SmoothingDecomposition {
  std::vector<RealFn> pieces;  // F_l, l = 0..L_max
  std::vector<int> active_j;
  double discarded_mass = 0;   // sup over the range of |F| times the uncovered partition mass
  std::function<double(int j, int l, double x)> component;  // theta_l * (phi F(2^j .)) at x

  double reconstruct(double lambda) const {
    double s = 0;
    for (const auto& p : pieces) s += p(lambda);
    return s;
  }
};

// F_l(lambda) = sum_j [theta_l * (phi F(2^j .))](2^{-j} lambda), j restricted to bands meeting [lo, hi].
inline SmoothingDecomposition smoothing_decomposition(const RealFn& F, const DyadicPartition& partition,
                                                      const MollifierFamily& moll, int L_max, double lo, double hi,
                                                      std::vector<double> F_breaks = {}) {
  require(L_max >= 1, "L_max must be >= 1");
  require(lo > 0 && hi > lo, "spectral range must be a positive interval");
  auto shared = std::make_shared<MollifierFamily>(moll);
  SmoothingDecomposition d;
  const int j0 = int(std::floor(std::log2(lo / kPartitionHi))) - 1;
  const int j1 = int(std::ceil(std::log2(hi / kPartitionLo))) + 1;
  for (int j = j0; j <= j1; ++j) d.active_j.push_back(j);
  auto comp = [F, partition, shared, F_breaks](int j, int l, double x) {
    const double s = std::ldexp(1.0, j);
    if (x <= kPartitionLo - MollifierFamily::kRadius || x >= kPartitionHi + MollifierFamily::kRadius) return 0.0;
    RealFn h = [&](double y) {
      const double ph = partition.phi(y);
      return ph == 0 ? 0.0 : ph * F(s * y);
    };
    std::vector<double> br{kPartitionLo, kPartitionHi};
    for (double c : F_breaks) br.push_back(c / s);
    return shared->convolve_theta(l, h, x, br);
  };
  d.component = comp;
  const auto js = d.active_j;
  for (int l = 0; l <= L_max; ++l)
    d.pieces.push_back([comp, js, l](double lambda) {
      double s = 0;
      for (int j : js) {
        const double x = std::ldexp(lambda, -j);
        if (x > kPartitionLo - MollifierFamily::kRadius && x < kPartitionHi + MollifierFamily::kRadius) s += comp(j, l, x);
      }
      return s;
    });
  // uncovered mass on a log grid of the range
  for (int i = 0; i <= 200; ++i) {
    const double lam = lo * std::pow(hi / lo, i / 200.0);
    double cov = 0;
    for (int j : js) cov += partition.phi_l(j, lam);
    d.discarded_mass = std::max(d.discarded_mass, std::abs(1 - cov) * std::abs(F(lam)));
  }
  return d;
}

// Support predicate: the piece vanishes outside [1/4, 4].
inline bool smoothing_piece_supported(const SmoothingDecomposition& d, int j, int l, int probes = 400) {
  for (int i = 0; i <= probes; ++i) {
    const double a = -4.0 + 4.25 * i / probes;          // [-4, 0.25)
    const double b = 4.0 + 12.0 * i / probes;           // (4, 16]
    if (a < 0.25 && d.component(j, l, a) != 0.0) return false;
    if (i > 0 && d.component(j, l, b) != 0.0) return false;
  }
  return true;
}

// sup over x of |piece (j, l)| on its support, with local refinement around the coarse maximum.
inline double smoothing_piece_sup(const SmoothingDecomposition& d, int j, int l, int coarse = 1500) {
  const double a = kPartitionLo - MollifierFamily::kRadius, b = kPartitionHi + MollifierFamily::kRadius;
  std::vector<std::pair<double, double>> vals;
  for (int i = 0; i <= coarse; ++i) {
    const double x = a + (b - a) * i / coarse;
    vals.push_back({std::abs(d.component(j, l, x)), x});
  }
  std::sort(vals.rbegin(), vals.rend());
  double best = vals.front().first;
  const double step = (b - a) / coarse;
  for (int top = 0; top < 4 && top < int(vals.size()); ++top) {
    const double c = vals[top].second;
    for (int i = -100; i <= 100; ++i) best = std::max(best, std::abs(d.component(j, l, c + step * i / 100.0)));
  }
  return best;
}

// Fourier windows: G(lambda) = F(lambda^{1/m}) e^{lambda}, G^(l) = window_l(D) G, F^(l)(s) = G^(l)(s^m) e^{-s^m}.
// Window index -1 is the low-pass phi_0.
struct FourierWindowDecomposition {
  int m = 1;
  int T_max = 14;
  double x0 = 0, h = 1;
  Index n = 0;
  std::vector<std::shared_ptr<Eigen::VectorXd>> samples;  // G^(l) on the grid, l = -1..T_max
  double reconstruction_error = 0;
  double nyquist = 0;

  static double window(int l, double tau) {
    const double a = std::abs(tau);
    if (l >= 0) return partition_phi(std::ldexp(a, -l));
    if (a <= kPartitionLo) return 1.0;
    double s = 0;
    for (int k = 1; std::ldexp(a, k) < kPartitionHi; ++k) s += partition_phi(std::ldexp(a, k));
    return s;
  }

  double G_piece(int l, double lambda) const {
    const auto& v = *samples[std::size_t(l + 1)];
    const double u = (lambda - x0) / h;
    const Index i = Index(std::floor(u));
    if (i < 0 || i + 1 >= n) return 0.0;
    const double t = u - double(i);
    return (1 - t) * v(i) + t * v(i + 1);
  }
  double piece(int l, double s) const {
    const double lam = std::pow(s, m);
    return G_piece(l, lam) * std::exp(-lam);
  }
  RealFn piece_fn(int l) const {
    auto self = std::make_shared<FourierWindowDecomposition>(*this);
    return [self, l](double s) { return self->piece(l, s); };
  }
  double reconstruct(double s) const {
    double t = 0;
    for (int l = -1; l <= T_max; ++l) t += piece(l, s);
    return t;
  }
  // frequency content of G^(l) outside the window support, relative to its peak
  double leakage(int l) const {
    Eigen::VectorXcd g = samples[std::size_t(l + 1)]->cast<cd>();
    fftn(g, {int(n)}, false);
    const Eigen::VectorXd xi = angular_frequencies(n, h);
    double in = 0, out = 0;
    for (Index k = 0; k < n; ++k) {
      const double a = std::abs(g(k));
      if (window(l, xi(k)) > 0) in = std::max(in, a);
      else out = std::max(out, a);
    }
    return in > 0 ? out / in : (out > 0 ? kInf : 0.0);
  }
};

inline double window_telescope(int K, double tau) {
  double s = FourierWindowDecomposition::window(-1, tau);
  for (int l = 0; l <= K; ++l) s += FourierWindowDecomposition::window(l, tau);
  return s;
}

inline FourierWindowDecomposition fourier_window_decomposition(const RealFn& F, int m, int T_max = 14,
                                                              Index n = Index(1) << 17, double tol = 1e-4,
                                                              int check_points = 1000) {
  require(m >= 1, "m must be >= 1");
  FourierWindowDecomposition d;
  d.m = m;
  d.T_max = T_max;
  const double lo = std::pow(0.25, m), hi = std::pow(4.0, m);
  auto G = [&](double lam) {
    if (lam < lo || lam > hi) return 0.0;
    return F(std::pow(lam, 1.0 / m)) * std::exp(lam);
  };
  // grid covering [0, 4^m] with room on both sides
  const double len = 4 * hi;
  d.n = n;
  d.h = len / double(n);
  d.x0 = -1.5 * hi;
  d.nyquist = M_PI / d.h;
  Eigen::VectorXcd hat(n);
  for (Index i = 0; i < n; ++i) hat(i) = G(d.x0 + double(i) * d.h);
  fftn(hat, {int(n)}, false);
  const Eigen::VectorXd xi = angular_frequencies(n, d.h);
  for (int l = -1; l <= T_max; ++l) {
    Eigen::VectorXcd g(n);
    for (Index k = 0; k < n; ++k) g(k) = hat(k) * FourierWindowDecomposition::window(l, xi(k));
    fftn(g, {int(n)}, true);
    d.samples.push_back(std::make_shared<Eigen::VectorXd>(g.real()));
  }
  double err = 0;
  for (int i = 0; i < check_points; ++i) {
    const double s = 4.0 * i / (check_points - 1);
    err = std::max(err, std::abs(d.reconstruct(s) - F(s)));
  }
  d.reconstruction_error = err;
  if (err > tol) throw ResolutionError("Fourier window reconstruction error " + std::to_string(err));
  return d;
}

// Even bump on [-1/2, 1/2] times an even polynomial, fixed so that xi_hat(0) = 1 and
// xi_hat^{(k)}(0) = 0 for 1 <= k <= K.
class VanishingMomentMollifier {
 public:
  explicit VanishingMomentMollifier(double alpha) : K_(int(std::floor(alpha)) + 2), quad_(64) {
    const int terms = 1 + K_ / 2;
    Eigen::MatrixXd M(terms, terms);
    for (int r = 0; r < terms; ++r)
      for (int c = 0; c < terms; ++c)
        M(r, c) = quad_.integrate([&](double x) { return base(x) * std::pow(x, 2 * (r + c)); }, -0.5, 0.5, 8);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(terms);
    rhs(0) = 1;
    coeffs_ = M.fullPivLu().solve(rhs);
  }

  int order() const { return K_; }
  static double base(double x) { return bump_on(x, -0.5, 0.5); }
  double operator()(double x) const {
    if (x <= -0.5 || x >= 0.5) return 0.0;
    double p = 0, x2 = x * x, xp = 1;
    for (Index i = 0; i < coeffs_.size(); ++i, xp *= x2) p += coeffs_(i) * xp;
    return base(x) * p;
  }
  cd transform(cd z) const {
    double re = quad_.integrate([&](double x) { return ((*this)(x) * std::exp(cd(0, -1) * z * x)).real(); }, -0.5, 0.5, 8);
    double im = quad_.integrate([&](double x) { return ((*this)(x) * std::exp(cd(0, -1) * z * x)).imag(); }, -0.5, 0.5, 8);
    return {re, im};
  }
  // k-th derivative of the transform at 0 by the Cauchy integral on |z| = 1.
  cd transform_derivative(int k, int nodes = 64) const {
    cd acc = 0;
    for (int i = 0; i < nodes; ++i) {
      const double th = 2 * M_PI * i / nodes;
      acc += transform(std::polar(1.0, th)) * std::exp(cd(0, -k * th));
    }
    return std::tgamma(k + 1.0) * acc / double(nodes);
  }

  // (xi_N * H)(x) = int xi(u) H(x - u/N) du
  double convolve(const RealFn& H, int N, double x, const std::vector<double>& breaks = {}) const {
    std::vector<double> ub;
    for (double c : breaks) ub.push_back(N * (x - c));
    return quad_.integrate([&](double u) { return (*this)(u)*H(x - u / N); }, -0.5, 0.5, 2, ub);
  }

 private:
  int K_;
  Quadrature quad_;
  Eigen::VectorXd coeffs_;
};

inline VanishingMomentMollifier build_vanishing_moment_mollifier(double alpha) { return VanishingMomentMollifier(alpha); }

inline RealFn mollify_N(const RealFn& H, const VanishingMomentMollifier& xi, int N, std::vector<double> breaks = {}) {
  require(N >= 1, "N must be positive");
  auto X = std::make_shared<VanishingMomentMollifier>(xi);
  return [H, X, N, breaks](double x) { return X->convolve(H, N, x, breaks); };
}

}  // namespace sml
