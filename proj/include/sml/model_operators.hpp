#pragma once
#include <Eigen/Dense>
#include <array>
#include <complex>
#include <map>
#include <memory>
#include <queue>
#include <regex>
#include <string>
#include <vector>

#include "sml/errors.hpp"
#include "sml/fft.hpp"
#include "sml/metric_space.hpp"
#include "sml/spectral_core.hpp"

namespace sml {

inline constexpr Index kDenseBudget = 4096;

enum class Boundary { Dirichlet, Neumann, Periodic };

inline Boundary parse_boundary(const std::string& s) {
  if (s == "dirichlet") return Boundary::Dirichlet;
  if (s == "neumann") return Boundary::Neumann;
  if (s == "periodic") return Boundary::Periodic;
  throw InvalidArgument("unknown boundary rule '" + s + "'");
}

// Graph (l^1) distance on a grid; periodic axes wrap.
inline Eigen::MatrixXd grid_distance(const std::vector<int>& dims, bool periodic, double spacing = 1.0,
                                     bool euclidean = false) {
  const Index n = product(dims);
  Eigen::MatrixXd D(n, n);
  std::vector<std::vector<int>> coords(n);
  for (Index i = 0; i < n; ++i) coords[i] = unravel(i, dims);
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) {
      double s = 0;
      for (std::size_t a = 0; a < dims.size(); ++a) {
        int d = std::abs(coords[i][a] - coords[j][a]);
        if (periodic) d = std::min(d, dims[a] - d);
        s += euclidean ? double(d) * d : double(d);
      }
      D(i, j) = D(j, i) = (euclidean ? std::sqrt(s) : s) * spacing;
    }
  return D;
}

inline Eigen::VectorXd laplacian_symbol(const std::vector<int>& dims) {
  const Index n = product(dims);
  Eigen::VectorXd s(n);
  for (Index i = 0; i < n; ++i) {
    const auto k = unravel(i, dims);
    double v = 0;
    for (std::size_t a = 0; a < dims.size(); ++a) v += 4 * std::pow(std::sin(M_PI * k[a] / dims[a]), 2);
    s(i) = v;
  }
  return s;
}

inline WeightedOperator build_grid_laplacian(const std::vector<int>& dims, Boundary boundary) {
  require(!dims.empty(), "grid needs at least one axis");
  for (int d : dims) require(d >= 1, "grid sizes must be positive");
  const Index n = product(dims);
  require(n <= kDenseBudget, "grid exceeds the dense eigensolve budget");
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const auto c = unravel(i, dims);
    for (std::size_t a = 0; a < dims.size(); ++a) {
      for (int step : {-1, 1}) {
        auto nb = c;
        nb[a] += step;
        const bool inside = nb[a] >= 0 && nb[a] < dims[a];
        if (boundary == Boundary::Periodic) {
          if (dims[a] == 1) continue;
          M(i, i) += 1;
          M(i, ravel(nb, dims)) -= 1;
        } else if (inside) {
          M(i, i) += 1;
          M(i, ravel(nb, dims)) -= 1;
        } else if (boundary == Boundary::Dirichlet) {
          M(i, i) += 1;  // edge to the zero boundary value
        }
      }
    }
  }
  const bool periodic = boundary == Boundary::Periodic;
  auto space = std::make_shared<MetricMeasureSpace>(grid_distance(dims, periodic), Eigen::VectorXd::Ones(n),
                                                    "grid_laplacian");
  std::optional<CirculantInfo> circ;
  if (periodic) circ = CirculantInfo{dims, laplacian_symbol(dims)};
  std::string label = "grid_laplacian(" + std::to_string(dims.size()) + "d," +
                      (periodic ? "periodic" : boundary == Boundary::Dirichlet ? "dirichlet" : "neumann") + ")";
  return WeightedOperator(space, std::move(M), label, 2, circ);
}

// P(xi) = sum_t coeff_t prod_j xi_j^{pow_tj}
struct SymbolPolynomial {
  struct Term {
    double coeff = 1;
    std::vector<int> powers;
  };
  std::vector<Term> terms;
  int dimension = 1;

  int degree() const {
    int d = 0;
    for (const auto& t : terms) {
      int s = 0;
      for (int p : t.powers) s += p;
      d = std::max(d, s);
    }
    return d;
  }
  double operator()(const std::vector<double>& xi) const {
    double v = 0;
    for (const auto& t : terms) {
      double m = t.coeff;
      for (std::size_t j = 0; j < t.powers.size(); ++j) m *= std::pow(xi[j], t.powers[j]);
      v += m;
    }
    return v;
  }
};

// Parses e.g. "x1^6 + 5*x1^2*x2^4 + x2^6".
inline SymbolPolynomial parse_symbol(const std::string& text, int dimension) {
  SymbolPolynomial P;
  P.dimension = dimension;
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.empty()) throw ParseError("empty symbol");
  std::vector<std::string> terms;
  std::string cur;
  for (char c : s) {
    if (c == '+' && !cur.empty()) {
      terms.push_back(cur);
      cur.clear();
    } else if (c != '+') cur += c;
  }
  if (!cur.empty()) terms.push_back(cur);
  const std::regex var(R"(x(\d+)(\^(\d+))?)");
  for (const auto& t : terms) {
    SymbolPolynomial::Term term;
    term.powers.assign(dimension, 0);
    std::size_t start = 0;
    while (start <= t.size()) {
      const std::size_t star = t.find('*', start);
      const std::string f = t.substr(start, star == std::string::npos ? std::string::npos : star - start);
      std::smatch m;
      if (std::regex_match(f, m, var)) {
        const int j = std::stoi(m[1]) - 1;
        if (j < 0 || j >= dimension) throw ParseError("variable index out of range in '" + t + "'");
        term.powers[j] += m[3].matched ? std::stoi(m[3]) : 1;
      } else {
        try {
          std::size_t used = 0;
          term.coeff *= std::stod(f, &used);
          if (used != f.size()) throw ParseError("bad factor '" + f + "'");
        } catch (const std::logic_error&) {
          throw ParseError("bad factor '" + f + "'");
        }
      }
      if (star == std::string::npos) break;
      start = star + 1;
    }
    P.terms.push_back(term);
  }
  return P;
}

enum class SymbolMode { Sine, Exact };

inline SymbolMode parse_symbol_mode(const std::string& s) {
  if (s == "sine") return SymbolMode::Sine;
  if (s == "exact") return SymbolMode::Exact;
  throw InvalidArgument("unknown symbol mode '" + s + "'");
}

// Frequency vector of lattice index i: 2 sin(pi k/N) (sine proxy) or 2 pi k / period (exact, signed k).
inline std::vector<double> lattice_frequency(Index i, const std::vector<int>& dims, SymbolMode mode, double period) {
  const auto k = unravel(i, dims);
  std::vector<double> xi(dims.size());
  for (std::size_t a = 0; a < dims.size(); ++a)
    xi[a] = mode == SymbolMode::Sine ? 2 * std::sin(M_PI * k[a] / dims[a])
                                     : 2 * M_PI * signed_freq(k[a], dims[a]) / period;
  return xi;
}

inline WeightedOperator build_torus_symbol_operator(const std::vector<int>& dims, const SymbolPolynomial& P,
                                                    SymbolMode mode = SymbolMode::Sine, double period = 0) {
  require(int(dims.size()) == P.dimension, "symbol dimension does not match the torus");
  const Index n = product(dims);
  require(n <= kDenseBudget, "torus exceeds the dense eigensolve budget");
  const double spacing = mode == SymbolMode::Exact ? period / dims[0] : 1.0;
  if (mode == SymbolMode::Exact) require(period > 0, "exact symbol needs a positive period");
  const int m = P.degree();
  Eigen::VectorXd sym(n);
  double min_ratio = kInf;
  for (Index i = 0; i < n; ++i) {
    const auto xi = lattice_frequency(i, dims, mode, period);
    sym(i) = P(xi);
    double r2 = 0;
    for (double v : xi) r2 += v * v;
    if (r2 > 1e-24) min_ratio = std::min(min_ratio, sym(i) / std::pow(std::sqrt(r2), m));
  }
  if (!(min_ratio > 0)) throw EllipticityError("symbol is not elliptic on the frequency lattice");
  CirculantOperator C = CirculantOperator::from_symbol(dims, sym.cast<cd>());
  Eigen::MatrixXd M = C.to_dense().real();
  M = 0.5 * (M + M.transpose()).eval();
  auto space = std::make_shared<MetricMeasureSpace>(grid_distance(dims, true, spacing, true), Eigen::VectorXd::Ones(n),
                                                    "flat_torus");
  return WeightedOperator(space, std::move(M), "torus_symbol", m, CirculantInfo{dims, sym});
}

inline double torus_min_symbol_ratio(const std::vector<int>& dims, const SymbolPolynomial& P, SymbolMode mode,
                                     double period = 0) {
  double min_ratio = kInf;
  for (Index i = 0; i < product(dims); ++i) {
    const auto xi = lattice_frequency(i, dims, mode, period);
    double r2 = 0;
    for (double v : xi) r2 += v * v;
    if (r2 > 1e-24) min_ratio = std::min(min_ratio, P(xi) / std::pow(std::sqrt(r2), P.degree()));
  }
  return min_ratio;
}

// Built-in potentials, scaled to a target discrete L^1 mass.
enum class PotentialKind { Zero, Bump, TwoBump };

inline PotentialKind parse_potential(const std::string& s) {
  if (s == "zero") return PotentialKind::Zero;
  if (s == "bump") return PotentialKind::Bump;
  if (s == "two_bump") return PotentialKind::TwoBump;
  throw InvalidArgument("unknown potential '" + s + "'");
}

inline Eigen::VectorXd make_potential(int N, PotentialKind kind, double mass = 10.0, double sigma = 1.5) {
  const std::vector<int> dims{N, N, N};
  const Index n = product(dims);
  Eigen::VectorXd V = Eigen::VectorXd::Zero(n);
  if (kind == PotentialKind::Zero) return V;
  std::vector<std::array<double, 3>> centres;
  if (kind == PotentialKind::Bump) centres.push_back({N / 2.0, N / 2.0, N / 2.0});
  else {
    centres.push_back({N / 4.0, N / 2.0, N / 2.0});
    centres.push_back({3 * N / 4.0, N / 2.0, N / 2.0});
  }
  for (Index i = 0; i < n; ++i) {
    const auto c = unravel(i, dims);
    for (const auto& ctr : centres) {
      double r2 = 0;
      for (int a = 0; a < 3; ++a) {
        double d = std::abs(c[a] - ctr[a]);
        d = std::min(d, N - d);
        r2 += d * d;
      }
      V(i) += std::exp(-r2 / (2 * sigma * sigma));
    }
  }
  return V * (mass / V.sum());
}

enum class BilaplacianSymbol { FiniteDifference, Spectral };

inline BilaplacianSymbol parse_bilaplacian_symbol(const std::string& s) {
  if (s == "finite_difference") return BilaplacianSymbol::FiniteDifference;
  if (s == "spectral") return BilaplacianSymbol::Spectral;
  throw InvalidArgument("unknown bilaplacian symbol '" + s + "'");
}

// Symbol of the free operator on the periodic N^3 grid with unit spacing.
inline Eigen::VectorXd bilaplacian_symbol(int N, BilaplacianSymbol mode) {
  const std::vector<int> dims{N, N, N};
  const Index n = product(dims);
  Eigen::VectorXd s(n);
  for (Index i = 0; i < n; ++i) {
    const auto k = unravel(i, dims);
    double v = 0;
    for (int a = 0; a < 3; ++a) {
      if (mode == BilaplacianSymbol::FiniteDifference) v += 4 * std::pow(std::sin(M_PI * k[a] / N), 2);
      else v += std::pow(2 * M_PI * signed_freq(k[a], N) / N, 2);
    }
    s(i) = v * v;
  }
  return s;
}

inline WeightedOperator build_bilaplacian_potential(int N, const Eigen::VectorXd& V,
                                                    BilaplacianSymbol mode = BilaplacianSymbol::FiniteDifference) {
  const std::vector<int> dims{N, N, N};
  const Index n = product(dims);
  require(n <= kDenseBudget, "grid exceeds the dense eigensolve budget");
  require(V.size() == n, "potential size does not match the grid");
  if (V.size() && V.minCoeff() < 0) throw NegativePotential("potential must be nonnegative");
  const Eigen::VectorXd sym = bilaplacian_symbol(N, mode);
  Eigen::MatrixXd M;
  if (mode == BilaplacianSymbol::FiniteDifference) {
    const WeightedOperator lap = build_grid_laplacian(dims, Boundary::Periodic);
    M = lap.matrix() * lap.matrix();
  } else {
    M = CirculantOperator::from_symbol(dims, sym.cast<cd>()).to_dense().real();
    M = 0.5 * (M + M.transpose()).eval();
  }
  M.diagonal() += V;
  auto space = std::make_shared<MetricMeasureSpace>(grid_distance(dims, true, 1.0, true), Eigen::VectorXd::Ones(n),
                                                    "torus3");
  std::optional<CirculantInfo> circ;
  if (V.cwiseAbs().maxCoeff() == 0) circ = CirculantInfo{dims, sym};
  return WeightedOperator(space, std::move(M), "bilaplacian_potential", 4, circ);
}

// Free resolvent (H_0 - z)^{-1} on the periodic grid as a convolution.
inline CirculantOperator free_resolvent(int N, cd z, BilaplacianSymbol mode) {
  const Eigen::VectorXd s = bilaplacian_symbol(N, mode);
  Eigen::VectorXcd r(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    const cd d = s(i) - z;
    if (std::abs(d) < 1e-300) throw SpectrumHit("z lies on the spectrum");
    r(i) = 1.0 / d;
  }
  return CirculantOperator::from_symbol({N, N, N}, r);
}

// Kernel of (Delta^2 - mu^4)^{-1} on R^3: (e^{i mu r} - e^{-mu r}) / (8 pi mu^2 r).
inline cd biharmonic_green_kernel(cd mu, double r, bool enforce_sector = false) {
  require(std::abs(mu) > 0, "mu must be nonzero");
  require(r > 0, "|x| must be positive");
  if (enforce_sector) require(mu.imag() > 0 && mu.imag() < mu.real() / 10, "mu outside the sector 0 < eps < lambda/10");
  const cd I(0, 1);
  const cd w = mu * r;
  cd ratio;  // (e^{iw} - e^{-w}) / w
  if (std::abs(w) < 1e-3) {
    const cd w2 = w * w;
    ratio = (1.0 + I) - w + (1.0 - I) * w2 / 6.0 + (1.0 + I) * w2 * w2 / 120.0;
  } else {
    ratio = (std::exp(I * w) - std::exp(-w)) / w;
  }
  return ratio / (8 * M_PI * mu);
}

// Image sum over the N-periodic lattice, |n|_inf <= images.
inline cd periodized_green_kernel(cd mu, const std::array<double, 3>& x, double N, int images = 12) {
  cd acc = 0;
  for (int a = -images; a <= images; ++a)
    for (int b = -images; b <= images; ++b)
      for (int c = -images; c <= images; ++c) {
        const double dx = x[0] + a * N, dy = x[1] + b * N, dz = x[2] + c * N;
        const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
        if (r == 0) acc += (1.0 + cd(0, 1)) / (8 * M_PI * mu);
        else acc += biharmonic_green_kernel(mu, r);
      }
  return acc;
}

enum class GasketMetric { Resistance, Geodesic };

inline GasketMetric parse_gasket_metric(const std::string& s) {
  if (s == "resistance") return GasketMetric::Resistance;
  if (s == "geodesic") return GasketMetric::Geodesic;
  throw InvalidArgument("unknown gasket metric '" + s + "'");
}

inline Index gasket_vertex_count(int level) { return (Index(std::pow(3, level + 1)) + 3) / 2; }

struct GasketGraph {
  int level = 0;
  Index n = 0;
  std::vector<std::array<Index, 3>> cells;
  Eigen::MatrixXd adjacency;
  Eigen::VectorXd measure;
};

inline GasketGraph gasket_graph(int level) {
  require(level >= 0 && level <= 7, "gasket level must lie in 0..7");
  using P = std::array<long long, 2>;
  // skewed integer coordinates: corners (0,0), (2^{k+1},0), (2^k,2^k)
  std::vector<std::array<P, 3>> tris{{P{0, 0}, P{2LL << level, 0}, P{1LL << level, 1LL << level}}};
  for (int l = 0; l < level; ++l) {
    std::vector<std::array<P, 3>> next;
    next.reserve(tris.size() * 3);
    for (const auto& t : tris) {
      auto mid = [](const P& a, const P& b) { return P{(a[0] + b[0]) / 2, (a[1] + b[1]) / 2}; };
      const P ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({ab, t[1], bc});
      next.push_back({ca, bc, t[2]});
    }
    tris.swap(next);
  }
  std::map<P, Index> id;
  GasketGraph g;
  g.level = level;
  for (const auto& t : tris) {
    std::array<Index, 3> c{};
    for (int v = 0; v < 3; ++v) {
      auto it = id.find(t[v]);
      if (it == id.end()) it = id.emplace(t[v], Index(id.size())).first;
      c[v] = it->second;
    }
    g.cells.push_back(c);
  }
  g.n = Index(id.size());
  g.adjacency = Eigen::MatrixXd::Zero(g.n, g.n);
  g.measure = Eigen::VectorXd::Zero(g.n);
  const double share = std::pow(3.0, -level) / 3.0;
  for (const auto& c : g.cells)
    for (int a = 0; a < 3; ++a) {
      g.measure(c[a]) += share;
      for (int b = 0; b < 3; ++b)
        if (a != b) g.adjacency(c[a], c[b]) = 1;
    }
  return g;
}

inline Eigen::MatrixXd resistance_metric(const Eigen::MatrixXd& energy) {
  const Index n = energy.rows();
  Eigen::MatrixXd J = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  Eigen::MatrixXd Q = (energy + J).ldlt().solve(Eigen::MatrixXd::Identity(n, n)) - J;
  Eigen::MatrixXd R(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) R(i, j) = i == j ? 0.0 : std::max(0.0, Q(i, i) + Q(j, j) - 2 * Q(i, j));
  return 0.5 * (R + R.transpose());
}

inline Eigen::MatrixXd hop_metric(const Eigen::MatrixXd& adjacency, double unit) {
  const Index n = adjacency.rows();
  std::vector<std::vector<Index>> nb(n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (adjacency(i, j) != 0) nb[i].push_back(j);
  Eigen::MatrixXd D = Eigen::MatrixXd::Constant(n, n, -1);
  for (Index s = 0; s < n; ++s) {
    std::queue<Index> q;
    q.push(s);
    D(s, s) = 0;
    while (!q.empty()) {
      const Index u = q.front();
      q.pop();
      for (Index v : nb[u])
        if (D(s, v) < 0) {
          D(s, v) = D(s, u) + 1;
          q.push(v);
        }
    }
  }
  return D * unit;
}

// L = M^{-1} E with E = (5/3)^k (graph Laplacian): 3/2 5^k times the discrete Laplacian at interior vertices.
inline WeightedOperator build_sierpinski_gasket(int level, GasketMetric metric = GasketMetric::Resistance) {
  GasketGraph g = gasket_graph(level);
  if (g.n != gasket_vertex_count(level)) throw EvaluationError("gasket vertex count mismatch");
  Eigen::MatrixXd G = -g.adjacency;
  G.diagonal() = g.adjacency.rowwise().sum();
  const Eigen::MatrixXd E = std::pow(5.0 / 3.0, level) * G;
  Eigen::MatrixXd D = metric == GasketMetric::Resistance ? resistance_metric(E) : hop_metric(g.adjacency, std::ldexp(1.0, -level));
  auto space = std::make_shared<MetricMeasureSpace>(std::move(D), g.measure,
                                                    std::string("gasket_") + (metric == GasketMetric::Resistance ? "resistance" : "geodesic"));
  Eigen::MatrixXd M = g.measure.cwiseInverse().asDiagonal() * E;
  return WeightedOperator(space, std::move(M), "sierpinski_gasket(level " + std::to_string(level) + ")",
                          std::log(5.0) / (std::log(5.0) - std::log(3.0)));
}

// Seeded random operator L = W^{-1} A with A symmetric PSD, points on a line, weights in [0.5, 2].
inline WeightedOperator random_weighted_operator(Index n, std::uint64_t seed) {
  require(n >= 2 && n <= kDenseBudget, "size out of range");
  Rng rng = make_rng(seed, 0x0be7);
  std::vector<double> x(n);
  for (auto& v : x) v = uniform01(rng);
  std::sort(x.begin(), x.end());
  Eigen::MatrixXd D(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) D(i, j) = std::abs(x[i] - x[j]);
  Eigen::VectorXd w(n);
  for (Index i = 0; i < n; ++i) w(i) = uniform(rng, 0.5, 2.0);
  Eigen::MatrixXd B(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) B(i, j) = normal(rng);
  const Eigen::MatrixXd A = B.transpose() * B / double(n);
  auto space = std::make_shared<MetricMeasureSpace>(std::move(D), w, "random_line");
  return WeightedOperator(space, w.cwiseInverse().asDiagonal() * A, "random_weighted", 2);
}

// Description of a bundled model, parsed from config.
struct ModelSpec {
  std::string family = "grid_laplacian";
  std::vector<int> sizes{64};
  std::string boundary = "periodic";
  std::string symbol = "x1^2";
  std::string symbol_mode = "sine";
  double period = 0;
  std::string potential = "zero";
  double potential_mass = 10;
  double potential_sigma = 1.5;
  std::string bilaplacian_symbol = "finite_difference";
  int level = 4;
  std::string metric = "resistance";
  std::uint64_t seed = 0;
};

inline WeightedOperator build_model(const ModelSpec& s) {
  if (s.family == "path_laplacian") {
    require(s.sizes.size() == 1, "path_laplacian takes one size");
    return build_grid_laplacian(s.sizes, parse_boundary(s.boundary));
  }
  if (s.family == "grid_laplacian") return build_grid_laplacian(s.sizes, parse_boundary(s.boundary));
  if (s.family == "torus_symbol")
    return build_torus_symbol_operator(s.sizes, parse_symbol(s.symbol, int(s.sizes.size())), parse_symbol_mode(s.symbol_mode),
                                       s.period);
  if (s.family == "bilaplacian_potential") {
    require(s.sizes.size() == 1, "bilaplacian_potential takes one size per axis");
    const int N = s.sizes[0];
    return build_bilaplacian_potential(N, make_potential(N, parse_potential(s.potential), s.potential_mass, s.potential_sigma),
                                       parse_bilaplacian_symbol(s.bilaplacian_symbol));
  }
  if (s.family == "sierpinski_gasket") return build_sierpinski_gasket(s.level, parse_gasket_metric(s.metric));
  throw InvalidArgument("unknown model family '" + s.family + "'");
}

}  // namespace sml
