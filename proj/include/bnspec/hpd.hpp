#pragma once

// Dense Hermitian positive-definite matrix operations used throughout the
// spectral machinery: eigendecomposition, matrix square roots, log
// determinants, and the real H-map that flattens a Hermitian matrix into
// real components for summarization.

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "bnspec/numeric.hpp"

namespace bnspec {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

// A = vectors * diag(values) * vectors^*, values ascending, vectors unitary.
struct EigenSystem {
  RVector values;
  CMatrix vectors;
};

inline double hermitian_deviation(const CMatrix& a) {
  double scale = std::max(1.0, a.norm());
  return (a - a.adjoint()).norm() / scale;
}

inline CMatrix symmetrized(const CMatrix& a) {
  if (a.rows() != a.cols()) throw contract_error("hpd: matrix must be square");
  if (hermitian_deviation(a) > numeric_policy().hermitian_rel_tol)
    throw contract_error("hpd: input is not Hermitian within tolerance");
  return 0.5 * (a + a.adjoint());
}

namespace detail {

// Closed-form 2x2 Hermitian eigensystem; the off-diagonal branch picks the
// better-conditioned null-vector formula. Falls back to axis vectors when
// the matrix is numerically diagonal.
inline void hermitian_eigen_2x2(const CMatrix& a, EigenSystem& out) {
  const double alpha = a(0, 0).real();
  const double gamma = a(1, 1).real();
  const Complex b = a(0, 1);
  const double habs = std::abs(b);
  const double mean = 0.5 * (alpha + gamma);
  const double half_gap = 0.5 * (alpha - gamma);
  const double disc = std::hypot(half_gap, habs);
  out.values.resize(2);
  out.values[0] = mean - disc;
  out.values[1] = mean + disc;
  out.vectors.resize(2, 2);
  const double scale = std::abs(alpha) + std::abs(gamma) + 2.0 * habs;
  if (habs <= 1e-300 || habs <= 1e-16 * scale) {
    if (alpha <= gamma) {
      out.vectors.setIdentity();
    } else {
      out.vectors << Complex(0, 0), Complex(1, 0), Complex(1, 0), Complex(0, 0);
    }
    return;
  }
  const double lam = out.values[1];
  Complex v0 = b, v1 = Complex(lam - alpha, 0.0);
  const Complex w0 = Complex(lam - gamma, 0.0), w1 = std::conj(b);
  if (std::norm(w0) + std::norm(w1) > std::norm(v0) + std::norm(v1)) {
    v0 = w0;
    v1 = w1;
  }
  const double nrm = std::sqrt(std::norm(v0) + std::norm(v1));
  v0 /= nrm;
  v1 /= nrm;
  out.vectors(0, 1) = v0;
  out.vectors(1, 1) = v1;
  out.vectors(0, 0) = -std::conj(v1);
  out.vectors(1, 0) = std::conj(v0);
}

}  // namespace detail

inline void hermitian_eigen(const CMatrix& a, EigenSystem& out) {
  CMatrix h = symmetrized(a);
  const auto d = h.rows();
  if (d == 1) {
    out.values.resize(1);
    out.values[0] = h(0, 0).real();
    out.vectors = CMatrix::Identity(1, 1);
    return;
  }
  if (d == 2) {
    detail::hermitian_eigen_2x2(h, out);
    return;
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
  if (solver.info() != Eigen::Success)
    throw numeric_error("hermitian_eigen: eigensolver failed to converge");
  out.values = solver.eigenvalues();
  out.vectors = solver.eigenvectors();
}

inline EigenSystem hermitian_eigen(const CMatrix& a) {
  EigenSystem sys;
  hermitian_eigen(a, sys);
  return sys;
}

namespace detail {

inline void require_strictly_pd(const EigenSystem& sys, const char* who) {
  const double max_eig = sys.values[sys.values.size() - 1];
  const double min_eig = sys.values[0];
  const double floor = static_cast<double>(sys.values.size()) *
                       numeric_policy().strict_pd_ratio * std::abs(max_eig);
  if (!(max_eig > 0.0) || !(min_eig > floor))
    throw singularity_error(std::string(who) + ": matrix is not strictly positive definite",
                            min_eig);
}

inline CMatrix eigen_power(const EigenSystem& sys, double exponent) {
  RVector powered = sys.values.array().pow(exponent);
  CMatrix m = sys.vectors * powered.asDiagonal() * sys.vectors.adjoint();
  return 0.5 * (m + m.adjoint());
}

}  // namespace detail

inline CMatrix hpd_sqrt(const CMatrix& a) {
  EigenSystem sys = hermitian_eigen(a);
  detail::require_strictly_pd(sys, "hpd_sqrt");
  return detail::eigen_power(sys, 0.5);
}

inline CMatrix hpd_inv_sqrt(const CMatrix& a) {
  EigenSystem sys = hermitian_eigen(a);
  detail::require_strictly_pd(sys, "hpd_inv_sqrt");
  return detail::eigen_power(sys, -0.5);
}

inline double hpd_logdet(const CMatrix& a) {
  EigenSystem sys = hermitian_eigen(a);
  detail::require_strictly_pd(sys, "hpd_logdet");
  return sys.values.array().log().sum();
}

// H-map: real components of a Hermitian matrix packed into a real matrix.
// Above-diagonal entries carry real parts, below-diagonal entries carry the
// imaginary parts of the mirrored above-diagonal entries, diagonal is kept.
inline RMatrix realify(const CMatrix& a) {
  if (a.rows() != a.cols()) throw contract_error("realify: matrix must be square");
  const auto d = a.rows();
  RMatrix out(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    out(i, i) = a(i, i).real();
    for (Eigen::Index j = i + 1; j < d; ++j) {
      out(i, j) = a(i, j).real();
      out(j, i) = a(i, j).imag();
    }
  }
  return out;
}

inline CMatrix derealify(const RMatrix& m) {
  if (m.rows() != m.cols()) throw contract_error("derealify: matrix must be square");
  const auto d = m.rows();
  CMatrix out(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    out(i, i) = Complex(m(i, i), 0.0);
    for (Eigen::Index j = i + 1; j < d; ++j) {
      out(i, j) = Complex(m(i, j), m(j, i));
      out(j, i) = std::conj(out(i, j));
    }
  }
  return out;
}

}  // namespace bnspec
