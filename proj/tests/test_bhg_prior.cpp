#include <catch2/catch_amalgamated.hpp>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/expint.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "bnspec/bhg_prior.hpp"
#include "support/oracles.hpp"

using bnspec::AtomSet;
using bnspec::BernsteinConfig;
using bnspec::CMatrix;
using bnspec::LevyConfig;
using bnspec::RVector;

namespace {

double chi_square_pvalue(const std::vector<double>& observed,
                         const std::vector<double>& expected) {
  double stat = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] <= 0.0) continue;
    stat += std::pow(observed[i] - expected[i], 2) / expected[i];
    ++cells;
  }
  boost::math::chi_squared dist(cells - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace

TEST_CASE("exp_integral_e1 pinned values and quadrature oracle", "[bhg]") {
  REQUIRE(bnspec::exp_integral_e1(1.0) == Catch::Approx(0.2193839).margin(5e-7));
  REQUIRE(bnspec::exp_integral_e1(0.001) == Catch::Approx(6.3315394).margin(5e-7));
  for (double x : {0.001, 0.01, 0.2, 0.5, 0.999, 1.0, 1.001, 2.0, 5.0, 12.0, 30.0}) {
    const double got = bnspec::exp_integral_e1(x);
    REQUIRE(got == Catch::Approx(oracle::e1_quadrature(x)).epsilon(1e-9));
    REQUIRE(got == Catch::Approx(boost::math::expint(1, x)).epsilon(1e-12));
  }
  REQUIRE_THROWS_AS(bnspec::exp_integral_e1(0.0), bnspec::contract_error);
  REQUIRE_THROWS_AS(bnspec::exp_integral_e1(-1.0), bnspec::contract_error);
}

TEST_CASE("inverse_levy solves the tail-mass equation", "[bhg]") {
  std::vector<LevyConfig> cfgs = {{1.0, 1.0}, {1.0, 2e-4}, {2.5, 0.7}};
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> unif(-3.0, 1.5);
  for (const auto& cfg : cfgs) {
    double prev = std::numeric_limits<double>::infinity();
    for (double lw : {-3.0, -1.0, 0.0, 1.0, 2.0, 3.0}) {
      const double w = std::exp(lw);
      const double r = bnspec::inverse_levy(w, cfg);
      REQUIRE(std::abs(cfg.c_alpha * bnspec::exp_integral_e1(cfg.beta0 * r) - w) <=
              1e-9 * std::max(w, 1.0));
      REQUIRE(r < prev);  // decreasing in w
      prev = r;
    }
    for (int rep = 0; rep < 50; ++rep) {
      const double w = std::exp(unif(rng));
      const double r = bnspec::inverse_levy(w, cfg);
      REQUIRE(std::abs(cfg.c_alpha * bnspec::exp_integral_e1(cfg.beta0 * r) - w) <=
              1e-9 * std::max(w, 1.0));
    }
  }
  // Tie to the quadrature oracle: feed w = E1(r0) and expect r0 back.
  for (double r0 : {0.25, 1.0, 4.0}) {
    const double w = oracle::e1_quadrature(r0);
    REQUIRE(bnspec::inverse_levy(w, {1.0, 1.0}) == Catch::Approx(r0).epsilon(1e-8));
  }
  REQUIRE_THROWS_AS(bnspec::inverse_levy(0.0, {1.0, 1.0}), bnspec::contract_error);
}

TEST_CASE("spherical_from_angles produces unit-trace Hpd matrices", "[bhg]") {
  // d = 1: no angles, U = [1].
  CMatrix u1 = bnspec::spherical_from_angles(RVector(0), 1);
  REQUIRE(std::abs(u1(0, 0) - bnspec::Complex(1.0, 0.0)) < 1e-15);

  // First angle zero collapses onto the first axis.
  RVector axis(3);
  axis << 0.0, 0.7, 1.3;
  CMatrix u = bnspec::spherical_from_angles(axis, 2);
  CMatrix e11 = CMatrix::Zero(2, 2);
  e11(0, 0) = 1.0;
  REQUIRE((u - e11).norm() < 1e-14);

  // (pi/4, 0, anything) gives T = I / sqrt(2), U = I / 2.
  RVector half(3);
  half << M_PI / 4.0, 0.0, 2.2;
  u = bnspec::spherical_from_angles(half, 2);
  REQUIRE((u - 0.5 * CMatrix::Identity(2, 2)).norm() < 1e-14);

  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> unif01(0.0, 1.0);
  for (int d : {1, 2, 3}) {
    const int m = d * d - 1;
    for (int rep = 0; rep < 60; ++rep) {
      RVector angles(m);
      for (int i = 0; i < m; ++i)
        angles[i] = (i + 1 < m ? M_PI : 2.0 * M_PI) * unif01(rng);
      CMatrix uu = bnspec::spherical_from_angles(angles, d);
      REQUIRE(uu.trace().real() == Catch::Approx(1.0).epsilon(1e-12));
      REQUIRE(bnspec::hermitian_deviation(uu) < 1e-13);
      auto sys = bnspec::hermitian_eigen(uu);
      REQUIRE(sys.values.minCoeff() > -1e-14);
    }
  }
  REQUIRE_THROWS_AS(bnspec::spherical_from_angles(RVector(2), 2),
                    bnspec::contract_error);
}

TEST_CASE("sampled atoms are ordered, in range, and law-correct", "[bhg][mc]") {
  const LevyConfig unit{1.0, 1.0};
  std::mt19937_64 rng(20260822);
  const int draws = 100000;
  std::vector<double> radial;
  std::vector<double> locations;
  radial.reserve(draws);
  locations.reserve(draws);
  for (int i = 0; i < draws; ++i) {
    AtomSet set = bnspec::sample_atoms_series(1, 1, unit, rng);
    radial.push_back(set.atoms[0].radial);
    locations.push_back(set.atoms[0].location);
  }

  // Ordering/range checks on a multi-atom multivariate draw.
  AtomSet multi = bnspec::sample_atoms_series(20, 2, LevyConfig::defaults(2), rng);
  for (int l = 0; l < 20; ++l) {
    const auto& a = multi.atoms[l];
    REQUIRE(a.radial > 0.0);
    if (l > 0) REQUIRE(a.radial < multi.atoms[l - 1].radial);
    REQUIRE(a.location >= 0.0);
    REQUIRE(a.location <= M_PI);
    REQUIRE(bnspec::angles_in_range(a.angles));
  }

  // Largest-atom law: P(r <= t) = exp(-E1(t)). The CDF is evaluated with the
  // quadrature oracle (log-grid interpolation) to stay independent of the
  // library's E1.
  const double rmin = *std::min_element(radial.begin(), radial.end());
  const double rmax = *std::max_element(radial.begin(), radial.end());
  const int grid_size = 4096;
  std::vector<double> grid_u(grid_size), grid_e1(grid_size);
  const double u_lo = std::log(rmin) - 0.01, u_hi = std::log(rmax) + 0.01;
  for (int i = 0; i < grid_size; ++i) {
    grid_u[i] = u_lo + (u_hi - u_lo) * i / (grid_size - 1);
    grid_e1[i] = oracle::e1_quadrature(std::exp(grid_u[i]));
  }
  auto cdf = [&](double t) {
    const double u = std::log(t);
    auto it = std::upper_bound(grid_u.begin(), grid_u.end(), u);
    std::size_t hi = std::min<std::size_t>(grid_u.size() - 1,
                                           std::max<std::ptrdiff_t>(1, it - grid_u.begin()));
    const std::size_t lo = hi - 1;
    const double frac = (u - grid_u[lo]) / (grid_u[hi] - grid_u[lo]);
    const double e1 = grid_e1[lo] + frac * (grid_e1[hi] - grid_e1[lo]);
    return std::exp(-e1);
  };
  REQUIRE(oracle::ks_statistic(radial, cdf) < 0.01);

  // Locations are uniform on (0, pi).
  const int bins = 20;
  std::vector<double> observed(bins, 0.0), expected(bins, draws / double(bins));
  for (double x : locations) {
    int b = std::min(bins - 1, static_cast<int>(x / M_PI * bins));
    observed[b] += 1.0;
  }
  REQUIRE(chi_square_pvalue(observed, expected) > 0.001);
}

TEST_CASE("log_prior_atoms pinned value and support boundaries", "[bhg]") {
  const LevyConfig unit{1.0, 1.0};
  AtomSet set;
  set.dim = 1;
  set.atoms.resize(1);
  set.atoms[0].radial = 1.0;
  set.atoms[0].location = 1.0;
  set.atoms[0].angles = RVector(0);
  const double expect = -1.0 - oracle::e1_quadrature(1.0) - std::log(M_PI);
  REQUIRE(bnspec::log_prior_atoms(set, unit) == Catch::Approx(expect).margin(1e-9));
  REQUIRE(bnspec::log_prior_atoms(set, unit) == Catch::Approx(-2.364114).margin(1e-5));

  std::mt19937_64 rng(47);
  AtomSet good = bnspec::sample_atoms_series(5, 2, LevyConfig::defaults(2), rng);
  REQUIRE(std::isfinite(bnspec::log_prior_atoms(good, LevyConfig::defaults(2))));

  AtomSet bad = good;
  std::swap(bad.atoms[1].radial, bad.atoms[2].radial);  // ordering violation
  REQUIRE(bnspec::log_prior_atoms(bad, LevyConfig::defaults(2)) == bnspec::kNegInf);
  bad = good;
  bad.atoms[0].radial = -1.0;
  REQUIRE(bnspec::log_prior_atoms(bad, LevyConfig::defaults(2)) == bnspec::kNegInf);
  bad = good;
  bad.atoms[3].location = M_PI + 0.1;
  REQUIRE(bnspec::log_prior_atoms(bad, LevyConfig::defaults(2)) == bnspec::kNegInf);
  bad = good;
  bad.atoms[2].angles[0] = -0.2;
  REQUIRE(bnspec::log_prior_atoms(bad, LevyConfig::defaults(2)) == bnspec::kNegInf);
}

TEST_CASE("k prior is normalized with the pinned ratios", "[bhg]") {
  BernsteinConfig cfg;
  auto table = bnspec::k_log_prior_table(cfg);
  REQUIRE(table.size() == 300);
  double total = 0.0;
  for (double v : table) total += std::exp(v);
  REQUIRE(total == Catch::Approx(1.0).epsilon(1e-12));

  const double ratio = std::exp(table[0] - table[1]);
  REQUIRE(ratio == Catch::Approx(std::exp(0.01 * 2.0 * std::log(2.0))).epsilon(1e-12));
  REQUIRE(ratio == Catch::Approx(1.013963).margin(1e-4));
  const double spread = table[299] - table[0];
  REQUIRE(spread ==
          Catch::Approx(-0.01 * 300.0 * std::log(300.0)).epsilon(1e-12));
  REQUIRE(spread == Catch::Approx(-17.1117).margin(1e-3));
  REQUIRE(bnspec::log_prior_k(0, cfg) == bnspec::kNegInf);
  REQUIRE(bnspec::log_prior_k(301, cfg) == bnspec::kNegInf);
}

TEST_CASE("bernstein basis partitions unity and matches the Beta density",
          "[bhg]") {
  BernsteinConfig plain;
  plain.truncated = false;
  for (int k : {1, 3, 10, 40}) {
    for (double x : {0.0, 0.013, 0.25, 0.5, 0.77, 1.0}) {
      double sum = 0.0;
      for (int j = 1; j <= k; ++j) sum += bnspec::bernstein_basis(x, j, k, plain);
      REQUIRE(sum / k == Catch::Approx(1.0).epsilon(1e-10));
    }
  }
  REQUIRE(bnspec::bernstein_basis(0.33, 1, 1, plain) == Catch::Approx(1.0));

  // Untruncated end-point behavior: only the edge members survive.
  REQUIRE(bnspec::bernstein_basis(0.0, 1, 7, plain) == Catch::Approx(7.0));
  REQUIRE(bnspec::bernstein_basis(0.0, 2, 7, plain) == 0.0);
  REQUIRE(bnspec::bernstein_basis(1.0, 7, 7, plain) == Catch::Approx(7.0));
  REQUIRE(bnspec::bernstein_basis(1.0, 3, 7, plain) == 0.0);

  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> unif01(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const int k = 1 + static_cast<int>(unif01(rng) * 200);
    const int j = 1 + static_cast<int>(unif01(rng) * k);
    const double x = unif01(rng);
    boost::math::beta_distribution<double> dist(j, k - j + 1);
    REQUIRE(bnspec::bernstein_basis(x, j, k, plain) ==
            Catch::Approx(boost::math::pdf(dist, x)).epsilon(1e-12).margin(1e-300));
  }

  // Truncated mode is strictly positive at both interval ends.
  BernsteinConfig trunc;
  for (int k : {1, 5, 60, 300}) {
    for (int j : {1, (k + 1) / 2, k}) {
      REQUIRE(bnspec::bernstein_basis(0.0, j, k, trunc) > 0.0);
      REQUIRE(bnspec::bernstein_basis(1.0, j, k, trunc) > 0.0);
    }
  }
}

TEST_CASE("eval_Q mixes binned atom masses", "[bhg]") {
  BernsteinConfig plain;
  plain.truncated = false;

  // Single atom, degree 1: Q is flat at r * U.
  std::mt19937_64 rng(59);
  AtomSet one = bnspec::sample_atoms_series(1, 2, LevyConfig{1.0, 1.0}, rng);
  CMatrix u = bnspec::spherical_from_angles(one.atoms[0].angles, 2);
  for (double w : {0.0, 0.9, 2.2, M_PI}) {
    CMatrix q = bnspec::eval_Q(one, 1, w, plain);
    REQUIRE((q - one.atoms[0].radial * u).norm() < 1e-12 * q.norm());
  }

  // Q depends on locations only through bin membership.
  AtomSet set = bnspec::sample_atoms_series(6, 2, LevyConfig::defaults(2), rng);
  const int k = 5;
  const double width = M_PI / k;
  set.atoms[2].location = 2.3 * width;  // inside bin 3
  CMatrix before = bnspec::eval_Q(set, k, 1.1, plain);
  set.atoms[2].location = 2.7 * width;  // still bin 3
  CMatrix same = bnspec::eval_Q(set, k, 1.1, plain);
  REQUIRE((before - same).norm() < 1e-14 * before.norm());
  set.atoms[2].location = 3.2 * width;  // bin 4
  CMatrix moved = bnspec::eval_Q(set, k, 1.1, plain);
  REQUIRE((before - moved).norm() > 1e-8 * before.norm());

  // Location zero is assigned to the first bin.
  REQUIRE(bnspec::location_bin(0.0, 7) == 1);
  REQUIRE(bnspec::location_bin(1e-12, 7) == 1);
  REQUIRE(bnspec::location_bin(M_PI, 7) == 7);

  // Hpd structure and linearity in the radial parts.
  for (int kk : {1, 4, 20}) {
    CMatrix q = bnspec::eval_Q(set, kk, 0.7, plain);
    REQUIRE(bnspec::hermitian_deviation(q) < 1e-13);
    auto sys = bnspec::hermitian_eigen(q);
    REQUIRE(sys.values.minCoeff() > -1e-12 * q.trace().real());
  }
  AtomSet doubled = set;
  for (auto& a : doubled.atoms) a.radial *= 2.0;
  CMatrix q1 = bnspec::eval_Q(set, 4, 0.7, plain);
  CMatrix q2 = bnspec::eval_Q(doubled, 4, 0.7, plain);
  REQUIRE((q2 - 2.0 * q1).norm() < 1e-12 * q2.norm());
}
