#pragma once
#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace sml {

// C-infinity prototype exp(-1/(x(1-x))) on (0,1), zero elsewhere.
inline double prototype_bump(double x) {
  if (x <= 0 || x >= 1) return 0.0;
  return std::exp(-1.0 / (x * (1.0 - x)));
}

// Prototype rescaled to (a, b), peak value 1.
inline double bump_on(double x, double a, double b) {
  return prototype_bump((x - a) / (b - a)) * std::exp(4.0);
}

// Dyadic partition generator phi = b / sum_k b(2^{-k} .) with b supported in (0.55, 1.8).
// phi is 1 on [0.9, 1.1] and sum_l phi(2^{-l} x) = 1 for every x > 0.
inline constexpr double kPartitionLo = 0.55, kPartitionHi = 1.8;

inline double partition_phi(double x) {
  if (x <= kPartitionLo || x >= kPartitionHi) return 0.0;
  const double b = bump_on(x, kPartitionLo, kPartitionHi);
  double den = 0;
  const int k0 = int(std::floor(std::log2(x / kPartitionHi))), k1 = int(std::ceil(std::log2(x / kPartitionLo)));
  for (int k = k0; k <= k1; ++k) den += bump_on(std::ldexp(x, -k), kPartitionLo, kPartitionHi);
  return b / den;
}

// Gauss-Legendre nodes and weights on [-1, 1] (Newton on the three-term recurrence).
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(n), w(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5)), pp = 0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1, p2 = 0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1);
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2 / ((1 - z * z) * pp * pp);
  }
  return {x, w};
}

// Composite Gauss-Legendre rule on [a, b] split at the given breakpoints.
class Quadrature {
 public:
  explicit Quadrature(int order = 32) : gl_(gauss_legendre(order)) {}

  template <class Fn>
  double integrate(const Fn& f, double a, double b, int panels = 1, const std::vector<double>& breaks = {}) const {
    std::vector<double> cuts{a};
    for (double c : breaks)
      if (c > a && c < b) cuts.push_back(c);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    double total = 0;
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
      const double lo = cuts[s], hi = cuts[s + 1];
      const double h = (hi - lo) / panels;
      for (int p = 0; p < panels; ++p) {
        const double c = lo + (p + 0.5) * h, r = 0.5 * h;
        for (std::size_t i = 0; i < gl_.first.size(); ++i) total += gl_.second[i] * r * f(c + r * gl_.first[i]);
      }
    }
    return total;
  }

  const std::pair<std::vector<double>, std::vector<double>>& rule() const { return gl_; }

 private:
  std::pair<std::vector<double>, std::vector<double>> gl_;
};

}  // namespace sml
