#pragma once
#include <Eigen/Dense>
#include <complex>
#include <unsupported/Eigen/FFT>
#include <vector>

namespace sml {

using cd = std::complex<double>;
using Index = Eigen::Index;

// In-place n-dimensional DFT over a row-major array. Forward: sum f(x) e^{-2 pi i k.x/N}.
// Inverse includes the 1/prod(N) factor.
inline void fftn(Eigen::VectorXcd& data, const std::vector<int>& dims, bool inverse) {
  Eigen::FFT<double> fft;
  const Eigen::Index total = data.size();
  Eigen::Index stride = total;
  std::vector<cd> in, out;
  for (std::size_t a = 0; a < dims.size(); ++a) {
    const int n = dims[a];
    stride /= n;
    if (n == 1) continue;
    in.resize(n);
    out.resize(n);
    const Eigen::Index block = stride * n;
    for (Eigen::Index base = 0; base < total; base += block)
      for (Eigen::Index off = 0; off < stride; ++off) {
        for (int i = 0; i < n; ++i) in[i] = data(base + off + i * stride);
        if (inverse) fft.inv(out, in);
        else fft.fwd(out, in);
        for (int i = 0; i < n; ++i) data(base + off + i * stride) = out[i];
      }
  }
}

inline Eigen::VectorXcd fft1(const Eigen::VectorXcd& v, bool inverse = false) {
  Eigen::VectorXcd w = v;
  fftn(w, {int(v.size())}, inverse);
  return w;
}

// Signed frequency index for position k of an n-point transform.
inline int signed_freq(int k, int n) { return k <= n / 2 ? k : k - n; }

// Row-major coordinates of a linear index.
inline std::vector<int> unravel(Eigen::Index idx, const std::vector<int>& dims) {
  std::vector<int> c(dims.size());
  for (int a = int(dims.size()) - 1; a >= 0; --a) {
    c[a] = int(idx % dims[a]);
    idx /= dims[a];
  }
  return c;
}

inline Eigen::Index ravel(const std::vector<int>& c, const std::vector<int>& dims) {
  Eigen::Index idx = 0;
  for (std::size_t a = 0; a < dims.size(); ++a) idx = idx * dims[a] + ((c[a] % dims[a]) + dims[a]) % dims[a];
  return idx;
}

inline Eigen::Index product(const std::vector<int>& dims) {
  Eigen::Index n = 1;
  for (int d : dims) n *= d;
  return n;
}

}  // namespace sml
