#pragma once

// Prior machinery for the Hermitian-matrix Bernstein mixture: a truncated
// Gamma-type completely random measure on [0, pi] x {unit-trace Hpd matrices}
// whose normalized mixture against Bernstein polynomial densities forms the
// random spectral correction factor.

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "bnspec/hpd.hpp"
#include "bnspec/numeric.hpp"

namespace bnspec {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Radial Levy intensity rho(dr) = c_alpha * exp(-beta0 * r) / r dr on (0, inf).
struct LevyConfig {
  double c_alpha = 1.0;
  double beta0 = 1e-4;

  static LevyConfig defaults(int d) { return LevyConfig{1.0, 1e-4 * d}; }
};

struct BernsteinConfig {
  int k_max = 300;
  bool truncated = true;  // compress the basis domain to [tau_l, tau_r]
  double tau_l = 0.1;
  double tau_r = 0.9;
  double k_decay = 0.01;  // p(k) proportional to exp(-k_decay * k * log k)
};

struct Atom {
  double radial = 0.0;    // r > 0, strictly decreasing across the set
  double location = 0.0;  // x in [0, pi]
  RVector angles;         // d^2 - 1 hyperspherical angles
};

struct AtomSet {
  int dim = 1;
  std::vector<Atom> atoms;

  int size() const { return static_cast<int>(atoms.size()); }
};

// E1(x) = int_x^inf exp(-t)/t dt: alternating series below 1, modified-Lentz
// continued fraction above.
inline double exp_integral_e1(double x) {
  if (!(x > 0.0)) throw contract_error("exp_integral_e1: need x > 0");
  constexpr double euler_gamma = 0.57721566490153286060;
  if (x <= 1.0) {
    double sum = 0.0, term = 1.0;
    for (int k = 1; k < 64; ++k) {
      term *= -x / k;
      const double add = -term / k;
      sum += add;
      if (std::abs(add) < 1e-17 * (std::abs(sum) + 1.0)) break;
    }
    return -euler_gamma - std::log(x) + sum;
  }
  constexpr double tiny = 1e-300;
  double b = x + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 200; ++i) {
    const double a = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const double del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return h * std::exp(-x);
}

// Solves c_alpha * E1(beta0 * r) = w for r; bisection in log r, which is
// globally safe because the left side is strictly decreasing.
inline double inverse_levy(double w, const LevyConfig& cfg) {
  if (!(w > 0.0)) throw contract_error("inverse_levy: need w > 0");
  if (!(cfg.c_alpha > 0.0 && cfg.beta0 > 0.0))
    throw contract_error("inverse_levy: invalid Levy configuration");
  auto excess = [&](double log_r) {
    return cfg.c_alpha * exp_integral_e1(cfg.beta0 * std::exp(log_r)) - w;
  };
  double lo = std::log(1.0 / cfg.beta0);
  double hi = lo;
  while (excess(lo) < 0.0) lo -= 4.0;
  while (excess(hi) > 0.0) hi += 4.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (excess(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-15 * (1.0 + std::abs(lo))) break;
  }
  const double r = std::exp(0.5 * (lo + hi));
  const double resid = cfg.c_alpha * exp_integral_e1(cfg.beta0 * r) - w;
  if (std::abs(resid) > 1e-9 * std::max(w, 1.0))
    throw numeric_error("inverse_levy: root refinement failed");
  return r;
}

// Hyperspherical angles -> unit vector in R^{d^2} -> lower-triangular complex
// T (real diagonal first, below-diagonal entries from consecutive pairs,
// column-major) -> U = T T^*, a unit-trace Hpd matrix.
inline CMatrix spherical_from_angles(const RVector& angles, int d) {
  const int m = d * d - 1;
  if (static_cast<int>(angles.size()) != m)
    throw contract_error("spherical_from_angles: need d^2 - 1 angles");
  RVector e(m + 1);
  double sines = 1.0;
  for (int i = 0; i < m; ++i) {
    e[i] = sines * std::cos(angles[i]);
    sines *= std::sin(angles[i]);
  }
  e[m] = sines;
  CMatrix t = CMatrix::Zero(d, d);
  for (int i = 0; i < d; ++i) t(i, i) = Complex(e[i], 0.0);
  int idx = d;
  for (int c = 0; c < d; ++c)
    for (int r = c + 1; r < d; ++r) {
      t(r, c) = Complex(e[idx], e[idx + 1]);
      idx += 2;
    }
  CMatrix u = t * t.adjoint();
  return 0.5 * (u + u.adjoint());
}

inline bool angles_in_range(const RVector& angles) {
  const int m = static_cast<int>(angles.size());
  for (int i = 0; i < m; ++i) {
    if (i + 1 < m) {
      if (angles[i] < 0.0 || angles[i] > M_PI) return false;
    } else {
      if (angles[i] < 0.0 || angles[i] >= 2.0 * M_PI) return false;
    }
  }
  return true;
}

// Draws the L largest atoms of the process: radial parts through the inverse
// Levy map of a unit-rate Poisson sequence, locations and angles uniform.
inline AtomSet sample_atoms_series(int count, int d, const LevyConfig& cfg,
                                   std::mt19937_64& rng) {
  if (count < 1) throw contract_error("sample_atoms_series: need count >= 1");
  if (d < 1) throw contract_error("sample_atoms_series: need d >= 1");
  std::exponential_distribution<double> exp1(1.0);
  std::uniform_real_distribution<double> unif01(0.0, 1.0);
  AtomSet out;
  out.dim = d;
  out.atoms.resize(count);
  const int m = d * d - 1;
  double w = 0.0;
  for (int l = 0; l < count; ++l) {
    w += exp1(rng);
    Atom& a = out.atoms[l];
    a.radial = inverse_levy(w, cfg);
    a.location = M_PI * unif01(rng);
    a.angles.resize(m);
    for (int i = 0; i < m; ++i)
      a.angles[i] = (i + 1 < m ? M_PI : 2.0 * M_PI) * unif01(rng);
  }
  return out;
}

// Log density of the truncated series representation: the Levy factor per
// atom, the tail correction at the smallest radial part, and the uniform
// location/angle densities. Returns -inf for out-of-support configurations,
// which the sampler treats as a rejection.
inline double log_prior_atoms(const AtomSet& set, const LevyConfig& cfg) {
  const int count = set.size();
  if (count < 1) throw contract_error("log_prior_atoms: empty atom set");
  const int m = set.dim * set.dim - 1;
  double value = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (const Atom& a : set.atoms) {
    if (!(a.radial > 0.0) || a.radial >= prev) return kNegInf;
    if (a.location < 0.0 || a.location > M_PI) return kNegInf;
    if (static_cast<int>(a.angles.size()) != m) return kNegInf;
    if (!angles_in_range(a.angles)) return kNegInf;
    prev = a.radial;
    value += std::log(cfg.c_alpha) - cfg.beta0 * a.radial - std::log(a.radial);
    value -= std::log(M_PI);  // uniform location
    if (m > 0) value -= (m - 1) * std::log(M_PI) + std::log(2.0 * M_PI);
  }
  value -= cfg.c_alpha * exp_integral_e1(cfg.beta0 * set.atoms.back().radial);
  return value;
}

// Normalized log prior over the Bernstein degree, p(k) oc exp(-c k log k).
inline std::vector<double> k_log_prior_table(const BernsteinConfig& cfg) {
  if (cfg.k_max < 1) throw contract_error("k prior: k_max must be >= 1");
  std::vector<double> logw(cfg.k_max);
  double mx = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= cfg.k_max; ++k) {
    logw[k - 1] = -cfg.k_decay * k * std::log(static_cast<double>(k));
    mx = std::max(mx, logw[k - 1]);
  }
  double z = 0.0;
  for (double v : logw) z += std::exp(v - mx);
  const double log_z = mx + std::log(z);
  for (double& v : logw) v -= log_z;
  return logw;
}

inline double log_prior_k(int k, const BernsteinConfig& cfg) {
  if (k < 1 || k > cfg.k_max) return kNegInf;
  return k_log_prior_table(cfg)[k - 1];
}

// Bernstein basis member j of degree k evaluated at x in [0, 1]: the
// Beta(j, k - j + 1) density, optionally with the argument compressed into
// [tau_l, tau_r] so the basis stays positive at the interval ends.
inline double bernstein_basis(double x, int j, int k, const BernsteinConfig& cfg) {
  if (j < 1 || j > k || k > cfg.k_max)
    throw contract_error("bernstein_basis: need 1 <= j <= k <= k_max");
  if (x < 0.0 || x > 1.0) throw contract_error("bernstein_basis: need x in [0,1]");
  const double y = cfg.truncated ? cfg.tau_l + (cfg.tau_r - cfg.tau_l) * x : x;
  const double a = static_cast<double>(j);
  const double b = static_cast<double>(k - j + 1);
  if (y <= 0.0) return j == 1 ? b : 0.0;
  if (y >= 1.0) return j == k ? a : 0.0;
  const double log_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  return std::exp(log_norm + (a - 1.0) * std::log(y) + (b - 1.0) * std::log1p(-y));
}

// Bin index (1-based) of a location under the equidistant partition
// (0, pi/k], (pi/k, 2 pi/k], ..., with 0 assigned to the first bin.
inline int location_bin(double x, int k) {
  if (x <= 0.0) return 1;
  const int j = static_cast<int>(std::ceil(x * k / M_PI));
  return std::min(std::max(j, 1), k);
}

// Q(omega) = sum_j Phi(I_{j,k}) b(omega / pi | j, k - j + 1), the Hpd
// Bernstein mixture of the binned atom masses.
inline CMatrix eval_Q(const AtomSet& set, int k, double omega,
                      const BernsteinConfig& cfg) {
  if (k < 1 || k > cfg.k_max) throw contract_error("eval_Q: k out of range");
  if (omega < 0.0 || omega > M_PI + 1e-12)
    throw contract_error("eval_Q: omega outside [0, pi]");
  const int d = set.dim;
  const double x = std::min(omega / M_PI, 1.0);
  CMatrix q = CMatrix::Zero(d, d);
  for (const Atom& a : set.atoms) {
    const int bin = location_bin(a.location, k);
    const double basis = bernstein_basis(x, bin, k, cfg);
    if (basis == 0.0) continue;
    q += (a.radial * basis) * spherical_from_angles(a.angles, d);
  }
  return 0.5 * (q + q.adjoint());
}

}  // namespace bnspec
