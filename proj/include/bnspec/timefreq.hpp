#pragma once

// Discrete Fourier machinery on the Fourier frequency grid
// omega_j = 2 pi j / n. Coefficients use the unitary scaling n^{-1/2} and the
// t = 1..n phase convention, so for real input the coefficients satisfy
// Z(n-j) = conj(Z(j)) and Parseval holds exactly.

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <vector>

#include "bnspec/hpd.hpp"
#include "bnspec/numeric.hpp"

namespace bnspec {

struct FrequencyGrid {
  int n = 0;

  explicit FrequencyGrid(int n_in = 0) : n(n_in) {
    if (n < 2) throw contract_error("FrequencyGrid: need n >= 2");
  }
  // Half grid j = 0..floor(n/2); all remaining frequencies are conjugate mirrors.
  int half_size() const { return n / 2 + 1; }
  // Interior (non-boundary) indices are 1..interior_count().
  int interior_count() const { return (n + 1) / 2 - 1; }
  bool is_boundary(int j) const { return j == 0 || (n % 2 == 0 && j == n / 2); }
  double omega(int j) const { return 2.0 * M_PI * static_cast<double>(j) / n; }
  std::vector<double> omegas() const {
    std::vector<double> out(half_size());
    for (int j = 0; j < half_size(); ++j) out[j] = omega(j);
    return out;
  }
};

struct FourierCoefficients {
  CMatrix coeffs;  // n x d
  FrequencyGrid grid;
};

inline void validate_series(const RMatrix& z) {
  if (z.rows() < 2 || z.cols() < 1)
    throw contract_error("time series: need n >= 2 and d >= 1");
  if (!z.allFinite()) throw contract_error("time series: non-finite values");
}

inline FourierCoefficients dft(const RMatrix& z) {
  validate_series(z);
  const int n = static_cast<int>(z.rows());
  const int d = static_cast<int>(z.cols());
  FourierCoefficients out{CMatrix(n, d), FrequencyGrid(n)};
  Eigen::FFT<double> fft;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  CVector in(n), raw(n);
  for (int c = 0; c < d; ++c) {
    for (int t = 0; t < n; ++t) in[t] = Complex(z(t, c), 0.0);
    fft.fwd(raw, in);
    for (int j = 0; j < n; ++j) {
      const double w = out.grid.omega(j);
      out.coeffs(j, c) = scale * std::exp(Complex(0.0, -w)) * raw[j];
    }
  }
  return out;
}

// Inverts dft exactly (complex output; real input comes back with
// negligible imaginary dust).
inline CMatrix inverse_dft(const FourierCoefficients& c) {
  const int n = c.grid.n;
  const int d = static_cast<int>(c.coeffs.cols());
  if (c.coeffs.rows() != n) throw contract_error("inverse_dft: size mismatch");
  CMatrix out(n, d);
  Eigen::FFT<double> fft;
  const double scale = std::sqrt(static_cast<double>(n));
  CVector spec(n), back(n);
  for (int col = 0; col < d; ++col) {
    for (int j = 0; j < n; ++j) {
      const double w = c.grid.omega(j);
      spec[j] = scale * std::exp(Complex(0.0, w)) * c.coeffs(j, col);
    }
    fft.inv(back, spec);
    out.col(col) = back;
  }
  return out;
}

inline CMatrix periodogram(const FourierCoefficients& c, int j) {
  if (j < 0 || j >= c.grid.n) throw contract_error("periodogram: index out of range");
  const CVector zj = c.coeffs.row(j).transpose();
  CMatrix out = (zj * zj.adjoint()) / (2.0 * M_PI);
  return out;
}

inline CMatrix periodogram(const RMatrix& z, int j) { return periodogram(dft(z), j); }

// Applies one d x d block per frequency in the spectral domain and returns the
// real series F^* diag(M_j) F z. Blocks are given on the half grid and
// extended by conjugate symmetry; boundary blocks must be real.
inline RMatrix blocked_transform(const RMatrix& z, const std::vector<CMatrix>& blocks) {
  FourierCoefficients c = dft(z);
  const int n = c.grid.n;
  const int d = static_cast<int>(z.cols());
  const int half = c.grid.half_size();
  if (static_cast<int>(blocks.size()) != half)
    throw contract_error("blocked_transform: need one block per half-grid frequency");
  for (int j = 0; j < half; ++j) {
    if (blocks[j].rows() != d || blocks[j].cols() != d)
      throw contract_error("blocked_transform: block dimension mismatch");
    if (c.grid.is_boundary(j) &&
        blocks[j].imag().cwiseAbs().maxCoeff() > numeric_policy().boundary_imag_tol)
      throw contract_error("blocked_transform: boundary block must be real");
  }
  CMatrix spec(n, d);
  for (int j = 0; j < half; ++j)
    spec.row(j) = (blocks[j] * c.coeffs.row(j).transpose()).transpose();
  for (int j = half; j < n; ++j) spec.row(j) = spec.row(n - j).conjugate();
  FourierCoefficients modified{std::move(spec), c.grid};
  CMatrix back = inverse_dft(modified);
  const double imag_mass = back.imag().cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, z.norm());
  if (imag_mass > numeric_policy().real_output_rel_tol * scale)
    throw numeric_error("blocked_transform: output failed to be real");
  return back.real();
}

}  // namespace bnspec
