#pragma once

// Oracles used by the test suite only. Deliberately naive implementations
// (direct summation, cofactor expansion, adaptive quadrature) kept separate
// from the library so expected values are derived through independent code.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

// Cofactor-expansion determinant, any order (meant for d <= 4).
inline Complex det_cofactor(const CMatrix& a) {
  const auto d = a.rows();
  if (d == 1) return a(0, 0);
  Complex acc(0.0, 0.0);
  double sign = 1.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    CMatrix minor(d - 1, d - 1);
    for (Eigen::Index r = 1; r < d; ++r) {
      Eigen::Index cc = 0;
      for (Eigen::Index c = 0; c < d; ++c) {
        if (c == j) continue;
        minor(r - 1, cc++) = a(r, c);
      }
    }
    acc += sign * a(0, j) * det_cofactor(minor);
    sign = -sign;
  }
  return acc;
}

// Direct-summation Fourier coefficients with the t = 1..n phase convention:
// out(j) = n^{-1/2} sum_{t=1}^{n} z(t) exp(-i t omega_j), omega_j = 2 pi j / n.
inline CMatrix naive_dft(const RMatrix& z) {
  const auto n = z.rows();
  const auto d = z.cols();
  CMatrix out(n, d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    const double omega = 2.0 * M_PI * static_cast<double>(j) / static_cast<double>(n);
    for (Eigen::Index c = 0; c < d; ++c) {
      Complex acc(0.0, 0.0);
      for (Eigen::Index t = 1; t <= n; ++t)
        acc += z(t - 1, c) * std::exp(Complex(0.0, -omega * static_cast<double>(t)));
      out(j, c) = scale * acc;
    }
  }
  return out;
}

// Adaptive Simpson quadrature.
namespace detail {
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}
inline double adaptive(const std::function<double(double)>& f, double a, double b,
                       double fa, double fm, double fb, double whole, double tol,
                       int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(f, a, m, fa, flm, fm);
  const double right = simpson(f, m, b, fm, frm, fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  return detail::adaptive(f, a, b, fa, fm, fb, detail::simpson(f, a, b, fa, fm, fb),
                          tol, 60);
}

// E1 by quadrature: integrate exp(-t)/t on [x, cutoff], panel tolerances
// scaled by the integrand so relative precision survives into the tail.
inline double e1_quadrature(double x) {
  const double cutoff = std::max(50.0, x + 50.0);
  double acc = 0.0;
  double lo = x;
  while (lo < cutoff) {
    const double hi = std::min(cutoff, lo * 8.0 + 1e-6);
    const double tol = 1e-13 * std::exp(-lo);
    acc += integrate([](double t) { return std::exp(-t) / t; }, lo, hi, tol);
    lo = hi;
  }
  return acc;
}

// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
inline double ks_statistic(std::vector<double> samples,
                           const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double stat = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    stat = std::max(stat, std::abs(f - static_cast<double>(i) / n));
    stat = std::max(stat, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return stat;
}

// Random Hermitian positive-definite matrix with spread eigenvalues.
inline CMatrix random_hpd(int d, std::mt19937_64& rng, double jitter = 0.05) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CMatrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = Complex(normal(rng), normal(rng));
  CMatrix a = m * m.adjoint() + jitter * CMatrix::Identity(d, d);
  return 0.5 * (a + a.adjoint());
}

inline CMatrix random_hermitian(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CMatrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = Complex(normal(rng), normal(rng));
  return 0.5 * (m + m.adjoint());
}

}  // namespace oracle
