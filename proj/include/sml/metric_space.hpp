#pragma once
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "sml/errors.hpp"
#include "sml/random.hpp"

namespace sml {

using Index = Eigen::Index;

// Finite metric measure space (X, d, mu).
class MetricMeasureSpace {
 public:
  static constexpr double kTriangleSlack = 1e-9;

  MetricMeasureSpace(Eigen::MatrixXd dist, Eigen::VectorXd weight, std::string label = "",
                     std::uint64_t check_seed = 0x5eed)
      : dist_(std::move(dist)), weight_(std::move(weight)), label_(std::move(label)) {
    const Index n = weight_.size();
    require(n > 0, "space must have at least one point");
    require(dist_.rows() == n && dist_.cols() == n, "distance matrix shape does not match weights");
    for (Index i = 0; i < n; ++i) {
      if (!(weight_(i) > 0) || !std::isfinite(weight_(i))) throw InvalidArgument("weights must be positive");
      if (dist_(i, i) != 0.0) throw InvalidArgument("distance must vanish on the diagonal");
    }
    const double scale = std::max(1.0, dist_.cwiseAbs().maxCoeff());
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) {
        if (!(dist_(i, j) >= 0) || std::abs(dist_(i, j) - dist_(j, i)) > 1e-12 * scale)
          throw InvalidArgument("distance matrix must be symmetric and nonnegative");
      }
    // random triples, at least 10 N of them
    Rng rng(check_seed);
    const Index triples = std::max<Index>(10 * n, 64);
    for (Index s = 0; s < triples && n > 2; ++s) {
      Index a = Index(uniform_index(rng, n)), b = Index(uniform_index(rng, n)), c = Index(uniform_index(rng, n));
      if (dist_(a, c) > dist_(a, b) + dist_(b, c) + kTriangleSlack * scale)
        throw InvalidArgument("triangle inequality violated");
    }
    diameter_ = dist_.maxCoeff();
    min_positive_ = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j)
        if (dist_(i, j) > 0) min_positive_ = std::min(min_positive_, dist_(i, j));
    if (!std::isfinite(min_positive_)) min_positive_ = 0.0;
  }

  Index size() const { return weight_.size(); }
  const Eigen::MatrixXd& dist() const { return dist_; }
  double dist(Index i, Index j) const { return dist_(i, j); }
  const Eigen::VectorXd& weight() const { return weight_; }
  const std::string& label() const { return label_; }
  double diameter() const { return diameter_; }
  double min_positive_distance() const { return min_positive_; }
  double total_measure() const { return weight_.sum(); }

  std::optional<double> homogeneous_dimension() const { return n_; }
  void set_homogeneous_dimension(double n) { n_ = n; }

 private:
  Eigen::MatrixXd dist_;
  Eigen::VectorXd weight_;
  std::string label_;
  double diameter_ = 0, min_positive_ = 0;
  std::optional<double> n_;
};

struct Ball {
  Index center = 0;
  double radius = 0;
};

// j = 0: B(x, r); j >= 1: B(x, (j+1) r) \ B(x, j r).
struct Annulus {
  Index center = 0;
  double base_radius = 1;
  int shell = 0;
};

struct DoublingFit {
  double n_hat = 0;
  double C_hat = 1;
  std::vector<double> residuals;  // V(x, lr) / (l^n V(x, r))
  std::size_t samples = 0;
};

inline double volume(const MetricMeasureSpace& s, const Ball& b) {
  require(b.radius >= 0, "ball radius must be nonnegative");
  if (b.radius == 0) return 0.0;
  double v = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s.dist(b.center, i) < b.radius) v += s.weight()(i);
  return v;
}

inline bool in_region(const MetricMeasureSpace& s, const Ball& b, Index i) { return s.dist(b.center, i) < b.radius; }

inline bool in_region(const MetricMeasureSpace& s, const Annulus& a, Index i) {
  const double d = s.dist(a.center, i);
  if (a.shell == 0) return d < a.base_radius;
  return d >= a.shell * a.base_radius && d < (a.shell + 1) * a.base_radius;
}

// 0/1 diagonal of P_E.
template <class Region>
Eigen::VectorXd indicator_projection(const MetricMeasureSpace& s, const Region& region) {
  if constexpr (std::is_same_v<Region, Annulus>) require(region.base_radius > 0 && region.shell >= 0, "invalid annulus");
  if constexpr (std::is_same_v<Region, Ball>) require(region.radius >= 0, "invalid ball");
  Eigen::VectorXd mask(s.size());
  for (Index i = 0; i < s.size(); ++i) mask(i) = in_region(s, region, i) ? 1.0 : 0.0;
  return mask;
}

template <class Region>
std::vector<Index> region_indices(const MetricMeasureSpace& s, const Region& region) {
  std::vector<Index> out;
  for (Index i = 0; i < s.size(); ++i)
    if (in_region(s, region, i)) out.push_back(i);
  return out;
}

struct DoublingOptions {
  std::vector<Index> centers;            // empty: all points
  double max_outer_radius = std::numeric_limits<double>::infinity();
};

inline DoublingFit fit_doubling(const MetricMeasureSpace& s, const std::vector<double>& radii,
                                const std::vector<double>& lambdas, const DoublingOptions& opt = {}) {
  require(!radii.empty() && !lambdas.empty(), "doubling grids must be non-empty");
  for (double r : radii) require(r > 0, "radii must be positive");
  for (double l : lambdas) require(l >= 1, "lambda must be >= 1");
  std::vector<Index> centers = opt.centers;
  if (centers.empty())
    for (Index i = 0; i < s.size(); ++i) centers.push_back(i);

  std::vector<double> X, Y;
  std::set<double> distinct;
  for (Index x : centers) {
    // sorted distances make each volume an O(log N) lookup
    std::vector<std::pair<double, double>> dw(s.size());
    for (Index i = 0; i < s.size(); ++i) dw[i] = {s.dist(x, i), s.weight()(i)};
    std::sort(dw.begin(), dw.end());
    std::vector<double> cum(dw.size() + 1, 0.0);
    for (std::size_t i = 0; i < dw.size(); ++i) cum[i + 1] = cum[i] + dw[i].second;
    auto vol = [&](double r) {
      auto it = std::lower_bound(dw.begin(), dw.end(), std::make_pair(r, -1.0),
                                 [](auto& a, auto& b) { return a.first < b.first; });
      return cum[std::size_t(it - dw.begin())];
    };
    for (double r : radii)
      for (double l : lambdas) {
        if (l * r > opt.max_outer_radius) continue;
        const double v1 = vol(r), v2 = vol(l * r);
        distinct.insert(v1);
        distinct.insert(v2);
        X.push_back(std::log(l));
        Y.push_back(std::log(v2) - std::log(v1));
      }
  }
  if (distinct.size() < 3) throw DegenerateSpace("fewer than 3 distinct volume values observed");
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    sxx += X[i] * X[i];
    sxy += X[i] * Y[i];
  }
  DoublingFit fit;
  fit.n_hat = sxx > 0 ? std::max(0.0, sxy / sxx) : 0.0;
  double worst = 0;
  fit.residuals.reserve(X.size());
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double r = Y[i] - fit.n_hat * X[i];
    worst = std::max(worst, r);
    fit.residuals.push_back(std::exp(r));
  }
  fit.C_hat = std::exp(worst);
  fit.samples = X.size();
  return fit;
}

// Log-spaced grid helper.
inline std::vector<double> log_grid(double a, double b, int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = n == 1 ? a : a * std::pow(b / a, double(i) / (n - 1));
  return g;
}

// Greedy maximal rho/10-separated net in index order.
inline std::vector<Index> select_net(const MetricMeasureSpace& s, double rho) {
  require(rho > 0, "rho must be positive");
  const double sep = rho / 10;
  std::vector<Index> net;
  for (Index i = 0; i < s.size(); ++i) {
    bool far = true;
    for (Index j : net)
      if (s.dist(i, j) <= sep) {
        far = false;
        break;
      }
    if (far) net.push_back(i);
  }
  return net;
}

// Max over net points of #{j : d(x_i, x_j) <= radius}.
inline std::size_t net_overlap(const MetricMeasureSpace& s, const std::vector<Index>& net, double radius) {
  std::size_t worst = 0;
  for (Index i : net) {
    std::size_t c = 0;
    for (Index j : net) c += s.dist(i, j) <= radius;
    worst = std::max(worst, c);
  }
  return worst;
}

// Text format: N, then N weights, then N rows of N distances.
inline void write_space(std::ostream& os, const MetricMeasureSpace& s) {
  os.precision(17);
  os << s.size() << "\n";
  for (Index i = 0; i < s.size(); ++i) os << s.weight()(i) << "\n";
  for (Index i = 0; i < s.size(); ++i) {
    for (Index j = 0; j < s.size(); ++j) os << (j ? " " : "") << s.dist(i, j);
    os << "\n";
  }
}

inline MetricMeasureSpace read_space(std::istream& is, std::string label = "") {
  long long n = 0;
  if (!(is >> n) || n <= 0) throw ParseError("bad point count");
  Eigen::VectorXd w(n);
  Eigen::MatrixXd d(n, n);
  for (long long i = 0; i < n; ++i)
    if (!(is >> w(i))) throw ParseError("truncated weights");
  for (long long i = 0; i < n; ++i)
    for (long long j = 0; j < n; ++j)
      if (!(is >> d(i, j))) throw ParseError("truncated distance matrix");
  for (long long i = 0; i < n; ++i)
    for (long long j = i + 1; j < n; ++j) {
      const double s = std::max({std::abs(d(i, j)), std::abs(d(j, i)), 1e-300});
      if (std::abs(d(i, j) - d(j, i)) > 1e-12 * s) throw ParseError("asymmetric distance matrix");
    }
  return MetricMeasureSpace(std::move(d), std::move(w), std::move(label));
}

}  // namespace sml
