#pragma once

// Vector autoregressive working model: least-squares fitting, the conditional
// Gaussian likelihood given the first w observations, the induced spectral
// density, order selection, and simulators for the reference processes.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "bnspec/hpd.hpp"
#include "bnspec/numeric.hpp"
#include "bnspec/timefreq.hpp"

namespace bnspec {

struct VarParams {
  RMatrix coeffs;  // d x (p*d), horizontally stacked [B_1 ... B_p]
  RMatrix sigma;   // d x d innovation covariance, SPD

  int dim() const { return static_cast<int>(sigma.rows()); }
  int order() const {
    return dim() == 0 ? 0 : static_cast<int>(coeffs.cols()) / dim();
  }
  RMatrix lag(int j) const {  // j = 1..p
    const int d = dim();
    return coeffs.block(0, (j - 1) * d, d, d);
  }
};

// Coefficient vector layout: rows of the VAR equation are the outer index,
// then lag, then column, i.e. beta = (B_{1,1,.}, B_{2,1,.}, ..., B_{p,1,.},
// B_{1,2,.}, ..., B_{p,d,.}).
inline RVector stack_beta(const RMatrix& coeffs, int d) {
  const int p = static_cast<int>(coeffs.cols()) / d;
  RVector beta(p * d * d);
  int idx = 0;
  for (int m = 0; m < d; ++m)
    for (int j = 0; j < p; ++j)
      for (int c = 0; c < d; ++c) beta[idx++] = coeffs(m, j * d + c);
  return beta;
}

inline RMatrix unstack_beta(const RVector& beta, int d) {
  const int p = static_cast<int>(beta.size()) / (d * d);
  RMatrix coeffs(d, p * d);
  int idx = 0;
  for (int m = 0; m < d; ++m)
    for (int j = 0; j < p; ++j)
      for (int c = 0; c < d; ++c) coeffs(m, j * d + c) = beta[idx++];
  return coeffs;
}

inline RMatrix companion_matrix(const VarParams& params) {
  const int d = params.dim();
  const int p = params.order();
  if (p < 1) throw contract_error("companion_matrix: order must be >= 1");
  RMatrix a = RMatrix::Zero(p * d, p * d);
  a.topRows(d) = params.coeffs;
  if (p > 1) a.block(d, 0, (p - 1) * d, (p - 1) * d).setIdentity();
  return a;
}

inline double companion_spectral_radius(const VarParams& params) {
  if (params.order() == 0) return 0.0;
  Eigen::EigenSolver<RMatrix> solver(companion_matrix(params));
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

inline RMatrix simulate_var(const VarParams& params, int n, std::uint64_t seed,
                            int burn_in = 1000) {
  const int d = params.dim();
  const int p = params.order();
  if (n < 2) throw contract_error("simulate_var: need n >= 2");
  if (p >= 1 && companion_spectral_radius(params) >= 1.0)
    throw stationarity_error("simulate_var: companion spectral radius >= 1");
  Eigen::LLT<RMatrix> llt(params.sigma);
  if (llt.info() != Eigen::Success)
    throw singularity_error("simulate_var: sigma is not positive definite", 0.0);
  const RMatrix chol = llt.matrixL();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int total = n + burn_in;
  RMatrix z = RMatrix::Zero(total, d);
  RVector eps(d);
  for (int t = 0; t < total; ++t) {
    for (int i = 0; i < d; ++i) eps[i] = normal(rng);
    RVector next = chol * eps;
    for (int j = 1; j <= p && t - j >= 0; ++j)
      next += params.lag(j) * z.row(t - j).transpose();
    z.row(t) = next.transpose();
  }
  return z.bottomRows(n);
}

inline RMatrix simulate_vma(const RMatrix& theta, const RMatrix& sigma, int n,
                            std::uint64_t seed) {
  const int d = static_cast<int>(sigma.rows());
  if (n < 2) throw contract_error("simulate_vma: need n >= 2");
  Eigen::LLT<RMatrix> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw singularity_error("simulate_vma: sigma is not positive definite", 0.0);
  const RMatrix chol = llt.matrixL();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RMatrix eps(n + 1, d);
  for (int t = 0; t <= n; ++t)
    for (int i = 0; i < d; ++i) eps(t, i) = normal(rng);
  eps = (chol * eps.transpose()).transpose();
  RMatrix z(n, d);
  for (int t = 0; t < n; ++t)
    z.row(t) = eps.row(t + 1) + (theta * eps.row(t).transpose()).transpose();
  return z;
}

namespace detail {

// Least-squares VAR fit conditioning on the first w observations: regression
// rows are t = w+1..n, regressors are lags 1..p, Sigma uses divisor n - w.
inline VarParams ols_window(const RMatrix& z, int p, int w) {
  const int n = static_cast<int>(z.rows());
  const int d = static_cast<int>(z.cols());
  if (p < 0 || w < p) throw contract_error("ols_window: need w >= p >= 0");
  const int rows = n - w;
  if (rows <= p * d) throw contract_error("ols_window: series too short for this order");
  VarParams out;
  if (p == 0) {
    out.coeffs = RMatrix::Zero(d, 0);
    const RMatrix tail = z.bottomRows(rows);
    out.sigma = tail.transpose() * tail / static_cast<double>(rows);
    return out;
  }
  RMatrix x(rows, p * d), y(rows, d);
  for (int t = w; t < n; ++t) {
    y.row(t - w) = z.row(t);
    for (int j = 1; j <= p; ++j) x.block(t - w, (j - 1) * d, 1, d) = z.row(t - j);
  }
  Eigen::ColPivHouseholderQR<RMatrix> qr(x);
  if (qr.rank() < p * d)
    throw rank_error("ols_window: rank-deficient lag design matrix");
  RMatrix bhat = qr.solve(y);  // (p*d) x d
  out.coeffs = bhat.transpose();
  const RMatrix resid = y - x * bhat;
  out.sigma = resid.transpose() * resid / static_cast<double>(rows);
  out.sigma = 0.5 * (out.sigma + out.sigma.transpose());
  return out;
}

}  // namespace detail

inline VarParams fit_ols(const RMatrix& z, int p) {
  validate_series(z);
  if (p < 1) throw contract_error("fit_ols: order must be >= 1");
  return detail::ols_window(z, p, p);
}

// Gaussian log likelihood of z conditional on its first w observations under
// the VAR; each term is the N(sum_j B_j z_{t-j}, Sigma) density of z_t.
inline double conditional_gaussian_loglik(const RMatrix& z, const VarParams& params,
                                          int w) {
  const int n = static_cast<int>(z.rows());
  const int d = static_cast<int>(z.cols());
  const int p = params.order();
  if (params.dim() != d) throw contract_error("conditional_gaussian_loglik: dim mismatch");
  if (w < p) throw contract_error("conditional_gaussian_loglik: need w >= order");
  if (w >= n) throw contract_error("conditional_gaussian_loglik: nothing to evaluate");
  Eigen::LLT<RMatrix> llt(params.sigma);
  if (llt.info() != Eigen::Success)
    throw singularity_error("conditional_gaussian_loglik: sigma not positive definite",
                            0.0);
  const RMatrix chol = llt.matrixL();
  double logdet = 0.0;
  for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(chol(i, i));
  const int rows = n - w;
  double quad = 0.0;
  RVector resid(d);
  for (int t = w; t < n; ++t) {
    resid = z.row(t).transpose();
    for (int j = 1; j <= p; ++j) resid -= params.lag(j) * z.row(t - j).transpose();
    quad += llt.matrixL().solve(resid).squaredNorm();
  }
  return -0.5 * rows * (d * std::log(2.0 * M_PI) + logdet) - 0.5 * quad;
}

// f(omega) = (2 pi)^{-1} A^{-1}(e^{-i omega}) Sigma A^{-*}(e^{-i omega}),
// A(u) = I - sum_j B_j u^j.
inline CMatrix var_spectral_density(const VarParams& params, double omega) {
  const int d = params.dim();
  const int p = params.order();
  CMatrix a = CMatrix::Identity(d, d);
  for (int j = 1; j <= p; ++j)
    a -= params.lag(j).cast<Complex>() *
         std::exp(Complex(0.0, -omega * static_cast<double>(j)));
  Eigen::PartialPivLU<CMatrix> lu(a);
  CMatrix ainv = lu.inverse();
  const double cond = a.norm() * ainv.norm();
  if (!ainv.allFinite() || cond > numeric_policy().transfer_cond_limit)
    throw numeric_error("var_spectral_density: transfer matrix numerically singular");
  CMatrix f = ainv * params.sigma.cast<Complex>() * ainv.adjoint() / (2.0 * M_PI);
  return 0.5 * (f + f.adjoint());
}

struct ElbowTable {
  std::vector<int> order;
  std::vector<double> neg_max_loglik;
  std::vector<double> aic;
};

// Orders 0..p_max scored on the common conditioning window w = p_max so the
// maximized likelihoods are nested (monotone in p).
inline ElbowTable elbow_table(const RMatrix& z, int p_max) {
  validate_series(z);
  const int n = static_cast<int>(z.rows());
  const int d = static_cast<int>(z.cols());
  if (p_max < 1) throw contract_error("elbow_table: p_max must be >= 1");
  if (n - p_max <= p_max * d)
    throw contract_error("elbow_table: p_max exceeds the identifiability bound");
  ElbowTable table;
  for (int p = 0; p <= p_max; ++p) {
    VarParams fit = detail::ols_window(z, p, p_max);
    const double loglik = conditional_gaussian_loglik(z, fit, p_max);
    table.order.push_back(p);
    table.neg_max_loglik.push_back(-loglik);
    table.aic.push_back(-2.0 * loglik + 2.0 * static_cast<double>(p) * d * d);
  }
  return table;
}

inline int aic_order(const ElbowTable& table) {
  int best = 0;
  for (std::size_t i = 1; i < table.aic.size(); ++i)
    if (table.aic[i] < table.aic[best]) best = static_cast<int>(i);
  return table.order[best];
}

}  // namespace bnspec
