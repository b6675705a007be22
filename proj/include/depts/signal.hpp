#pragma once

// Spectral and alignment kernels used by period initialization.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

namespace depts {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct CosineAtom {
  Scalar amplitude = 0;
  Scalar frequency = 0;  // cycles per step
  Scalar phase = 0;      // radians
};

/// Base level plus atoms; value(n) = base + sum_k A_k cos(2 pi F_k n + P_k).
template <typename Scalar>
struct CosineSpectrum {
  Scalar base = 0;
  std::vector<CosineAtom<Scalar>> atoms;
};

namespace detail {

inline std::size_t largest_prime_factor(std::size_t n) {
  std::size_t largest = 1;
  for (std::size_t p = 2; p * p <= n; ++p) {
    while (n % p == 0) {
      largest = p;
      n /= p;
    }
  }
  return n > 1 ? n : largest;
}

// Chirp-z evaluation of a length-n DFT through power-of-two FFTs of length
// m >= 2n - 1. The chirp exponent j^2 is reduced mod 2n before scaling.
template <typename Scalar>
std::vector<std::complex<Scalar>> bluestein_dft(const std::vector<std::complex<Scalar>>& x) {
  using C = std::complex<Scalar>;
  const std::size_t n = x.size();
  std::size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;

  std::vector<C> chirp(n);
  const auto two_n = static_cast<unsigned long long>(2 * n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto jj = (static_cast<unsigned long long>(j) * j) % two_n;
    const Scalar angle = std::numbers::pi_v<Scalar> * static_cast<Scalar>(jj) / static_cast<Scalar>(n);
    chirp[j] = C(std::cos(angle), std::sin(angle));
  }

  std::vector<C> a(m, C(0)), b(m, C(0));
  for (std::size_t j = 0; j < n; ++j) a[j] = x[j] * std::conj(chirp[j]);
  b[0] = chirp[0];
  for (std::size_t j = 1; j < n; ++j) b[j] = b[m - j] = chirp[j];

  Eigen::FFT<Scalar> fft;
  std::vector<C> fa, fb, conv;
  fft.fwd(fa, a);
  fft.fwd(fb, b);
  for (std::size_t j = 0; j < m; ++j) fa[j] *= fb[j];
  fft.inv(conv, fa);

  std::vector<C> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = conv[k] * std::conj(chirp[k]);
  return out;
}

template <typename Scalar>
std::vector<std::complex<Scalar>> dft(const std::vector<std::complex<Scalar>>& x) {
  if (largest_prime_factor(x.size()) > 64) return bluestein_dft(x);
  Eigen::FFT<Scalar> fft;
  std::vector<std::complex<Scalar>> out;
  fft.fwd(out, x);
  return out;
}

template <typename Scalar>
void require_finite(const Vec<Scalar>& x, const char* what) {
  if (x.size() == 0) throw std::invalid_argument(std::string(what) + ": empty input");
  if (!x.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite input");
}

}  // namespace detail

/// Unnormalized DCT-II: C_k = sum_n x_n cos(pi k (2n + 1) / (2N)).
///
/// Short inputs use the direct sum. Longer ones use the even/odd reordering
/// v = [x_0, x_2, ..., x_3, x_1], V = DFT(v), C_k = Re(V_k exp(-i pi k / 2N)).
template <typename Derived>
Vec<typename Derived::Scalar> dct2(const Eigen::MatrixBase<Derived>& input) {
  using Scalar = typename Derived::Scalar;
  const Vec<Scalar> x = input;
  detail::require_finite(x, "dct2");
  const Eigen::Index n = x.size();
  const Scalar pi = std::numbers::pi_v<Scalar>;
  Vec<Scalar> out(n);

  if (n < 16) {
    for (Eigen::Index k = 0; k < n; ++k) {
      Scalar acc = 0;
      for (Eigen::Index j = 0; j < n; ++j) {
        acc += x[j] * std::cos(pi * static_cast<Scalar>(k * (2 * j + 1)) / static_cast<Scalar>(2 * n));
      }
      out[k] = acc;
    }
    return out;
  }

  std::vector<std::complex<Scalar>> v(n);
  for (Eigen::Index j = 0; 2 * j < n; ++j) v[j] = x[2 * j];
  for (Eigen::Index j = 0; 2 * j + 1 < n; ++j) v[n - 1 - j] = x[2 * j + 1];
  const auto spectrum = detail::dft(v);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Scalar angle = -pi * static_cast<Scalar>(k) / static_cast<Scalar>(2 * n);
    out[k] = (spectrum[k] * std::complex<Scalar>(std::cos(angle), std::sin(angle))).real();
  }
  return out;
}

/// Unnormalized DST-II S_k = sum_n x_n sin(pi k (2n + 1) / (2N)) for k = 0..N-1,
/// computed as the DCT-II of (-1)^n x_n read backwards: S_k = C'_{N-k}.
template <typename Derived>
Vec<typename Derived::Scalar> dst2(const Eigen::MatrixBase<Derived>& input) {
  using Scalar = typename Derived::Scalar;
  Vec<Scalar> alternated = input;
  for (Eigen::Index j = 1; j < alternated.size(); j += 2) alternated[j] = -alternated[j];
  const Vec<Scalar> c = dct2(alternated);
  const Eigen::Index n = c.size();
  Vec<Scalar> out(n);
  out[0] = 0;
  for (Eigen::Index k = 1; k < n; ++k) out[k] = c[n - k];
  return out;
}

/// Maps DCT-II coefficients of a length-n signal onto cosine atoms.
///
/// Basis k is cos(2 pi (k / 2n) j + pi k / 2n), so F_k = k / 2n and
/// P_k = pi k / 2n; a negative coefficient flips the phase by pi. The full set
/// (k = 1..n-1) reconstructs the signal exactly.
template <typename Derived>
CosineSpectrum<typename Derived::Scalar> coeffs_to_atoms(const Eigen::MatrixBase<Derived>& coeffs) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = coeffs.size();
  if (n == 0) throw std::invalid_argument("coeffs_to_atoms: empty coefficients");
  const Scalar pi = std::numbers::pi_v<Scalar>;
  CosineSpectrum<Scalar> out;
  out.base = coeffs[0] / static_cast<Scalar>(n);
  out.atoms.reserve(n - 1);
  for (Eigen::Index k = 1; k < n; ++k) {
    const Scalar c = coeffs[k];
    CosineAtom<Scalar> atom;
    atom.amplitude = std::abs(Scalar(2) * c / static_cast<Scalar>(n));
    atom.frequency = static_cast<Scalar>(k) / static_cast<Scalar>(2 * n);
    atom.phase = pi * static_cast<Scalar>(k) / static_cast<Scalar>(2 * n) + (c < 0 ? pi : Scalar(0));
    out.atoms.push_back(atom);
  }
  return out;
}

/// Phase-aware atoms on the integer-cycle grid F = m / n, m = 1..(n-1)/2.
///
/// Pairs the DCT-II and DST-II at even bins k = 2m, where both bases are
/// orthogonal and have energy n/2: a tone A cos(2 pi F j + P) on that grid
/// gives back exactly (A, F, P). Base level is the DC bin.
template <typename Derived>
CosineSpectrum<typename Derived::Scalar> quadrature_atoms(const Eigen::MatrixBase<Derived>& input) {
  using Scalar = typename Derived::Scalar;
  const Vec<Scalar> x = input;
  const Vec<Scalar> c = dct2(x);
  const Vec<Scalar> s = dst2(x);
  const Eigen::Index n = x.size();
  const Scalar pi = std::numbers::pi_v<Scalar>;
  CosineSpectrum<Scalar> out;
  out.base = c[0] / static_cast<Scalar>(n);
  for (Eigen::Index k = 2; k < n; k += 2) {
    const std::complex<Scalar> w(c[k], -s[k]);
    CosineAtom<Scalar> atom;
    atom.amplitude = Scalar(2) * std::abs(w) / static_cast<Scalar>(n);
    atom.frequency = static_cast<Scalar>(k) / static_cast<Scalar>(2 * n);
    atom.phase = pi * static_cast<Scalar>(k) / static_cast<Scalar>(2 * n) + std::arg(w);
    out.atoms.push_back(atom);
  }
  return out;
}

/// Dynamic time warping with |a_i - b_j| local cost, unconstrained window and
/// no path-length normalization. O(m n) time, O(n) memory.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar dtw(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  const Eigen::Index m = a.size(), n = b.size();
  if (m == 0 || n == 0) throw std::invalid_argument("dtw: empty sequence");

  std::vector<Scalar> prev(n), cur(n);
  prev[0] = std::abs(a[0] - b[0]);
  for (Eigen::Index j = 1; j < n; ++j) prev[j] = prev[j - 1] + std::abs(a[0] - b[j]);
  for (Eigen::Index i = 1; i < m; ++i) {
    cur[0] = prev[0] + std::abs(a[i] - b[0]);
    for (Eigen::Index j = 1; j < n; ++j) {
      const Scalar best = std::min({prev[j], cur[j - 1], prev[j - 1]});
      cur[j] = best + std::abs(a[i] - b[j]);
    }
    std::swap(prev, cur);
  }
  return prev[n - 1];
}

}  // namespace depts
