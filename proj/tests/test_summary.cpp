#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "bnspec/summary.hpp"
#include "bnspec/timefreq.hpp"
#include "bnspec/var_model.hpp"
#include "support/oracles.hpp"

using namespace bnspec;

namespace {

PosteriorDraws empty_draws(int d, int M, const std::vector<double>& omegas) {
  PosteriorDraws draws;
  draws.d = d;
  draws.M = M;
  draws.omegas = omegas;
  draws.spectra.assign(static_cast<std::size_t>(M) * omegas.size(),
                       CMatrix::Zero(d, d));
  return draws;
}

PosteriorDraws scalar_draws(const std::vector<double>& values, int half = 1) {
  std::vector<double> omegas(half);
  for (int g = 0; g < half; ++g) omegas[g] = g * M_PI / std::max(1, half - 1);
  PosteriorDraws draws = empty_draws(1, static_cast<int>(values.size()), omegas);
  for (std::size_t m = 0; m < values.size(); ++m)
    for (int g = 0; g < half; ++g)
      draws.spectra[m * half + g](0, 0) = values[m];
  return draws;
}

PosteriorDraws random_hermitian_draws(int d, int half, int M, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> omegas(half);
  for (int g = 0; g < half; ++g) omegas[g] = g * M_PI / (half - 1);
  PosteriorDraws draws = empty_draws(d, M, omegas);
  for (int m = 0; m < M; ++m)
    for (int g = 0; g < half; ++g)
      draws.spectra[m * half + g] = oracle::random_hpd(d, rng, 0.3);
  return draws;
}

}  // namespace

TEST_CASE("pointwise median reduces to componentwise medians") {
  PosteriorDraws single = scalar_draws({7.25});
  const auto med1 = pointwise_median(single);
  REQUIRE(med1.size() == 1);
  CHECK(med1[0](0, 0).real() == 7.25);

  PosteriorDraws odd = scalar_draws({3.0, 1.0, 2.0});
  CHECK(pointwise_median(odd)[0](0, 0).real() == 2.0);

  PosteriorDraws even = scalar_draws({4.0, 1.0, 3.0, 2.0});
  CHECK(pointwise_median(even)[0](0, 0).real() == 2.5);

  PosteriorDraws herm = random_hermitian_draws(3, 4, 11, 71);
  for (const CMatrix& f : pointwise_median(herm)) {
    CHECK((f - f.adjoint()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("pointwise median is equivariant under component relabeling") {
  PosteriorDraws draws = random_hermitian_draws(3, 5, 9, 72);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(3);
  perm.indices() << 2, 0, 1;

  PosteriorDraws relabeled = draws;
  for (CMatrix& f : relabeled.spectra) f = perm.transpose() * f * perm;

  const auto direct = pointwise_median(relabeled);
  const auto mapped = pointwise_median(draws);
  for (std::size_t g = 0; g < direct.size(); ++g) {
    const CMatrix expected = perm.transpose() * mapped[g] * perm;
    CHECK((direct[g] - expected).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("uniform region reproduces the order statistic oracle") {
  // Ten scalar draws 1..10: median 5.5, MAD 2.5, sup deviations
  // {0.2, 0.6, 1.0, 1.4, 1.8} each twice, 9th order statistic 1.8.
  std::vector<double> values;
  for (int v = 1; v <= 10; ++v) values.push_back(v);
  PosteriorDraws draws = scalar_draws(values);

  const UniformRegion region = uniform_region(draws, 0.9);
  CHECK(region.center[0](0, 0) == Catch::Approx(5.5).margin(1e-15));
  CHECK(region.sigma[0](0, 0) == Catch::Approx(2.5).margin(1e-15));
  CHECK(region.xi == Catch::Approx(1.8).margin(1e-15));
  CHECK(region.lower[0](0, 0) == Catch::Approx(1.0).margin(1e-12));
  CHECK(region.upper[0](0, 0) == Catch::Approx(10.0).margin(1e-12));

  // At least a 0.9 fraction of draws lies inside by construction.
  int inside = 0;
  for (double v : values)
    if (v >= region.lower[0](0, 0) && v <= region.upper[0](0, 0)) ++inside;
  CHECK(inside >= 9);

  // A second frequency with doubled deviations rescales componentwise, so the
  // normalized sup statistics and xi are unchanged.
  PosteriorDraws two = scalar_draws(values, 2);
  for (std::size_t m = 0; m < values.size(); ++m)
    two.spectra[m * 2 + 1](0, 0) = 5.5 + 2.0 * (values[m] - 5.5);
  const UniformRegion wide = uniform_region(two, 0.9);
  CHECK(wide.xi == Catch::Approx(1.8).margin(1e-15));
  CHECK(wide.sigma[1](0, 0) == Catch::Approx(5.0).margin(1e-15));

  // Alternating draws at center +/- c sigma give xi = 1 exactly.
  std::vector<double> alternating;
  for (int m = 0; m < 10; ++m) alternating.push_back(m % 2 == 0 ? 4.0 : 6.0);
  const UniformRegion alt = uniform_region(scalar_draws(alternating), 0.9);
  CHECK(alt.center[0](0, 0) == Catch::Approx(5.0).margin(1e-15));
  CHECK(alt.sigma[0](0, 0) == Catch::Approx(1.0).margin(1e-15));
  CHECK(alt.xi == Catch::Approx(1.0).margin(1e-15));

  // Identical draws collapse to a zero-width region on the floored scale.
  const UniformRegion flat = uniform_region(scalar_draws(std::vector<double>(12, 3.0)), 0.9);
  CHECK(flat.xi == 0.0);
  CHECK(flat.lower[0](0, 0) == Catch::Approx(3.0).margin(1e-15));
  CHECK(flat.upper[0](0, 0) == Catch::Approx(3.0).margin(1e-15));
}

TEST_CASE("uniform bands widen with the level") {
  PosteriorDraws draws = random_hermitian_draws(2, 6, 50, 73);
  const UniformRegion narrow = uniform_region(draws, 0.9);
  const UniformRegion wide = uniform_region(draws, 0.95);
  CHECK(wide.xi >= narrow.xi);
  for (std::size_t g = 0; g < narrow.lower.size(); ++g) {
    CHECK((wide.lower[g].array() <= narrow.lower[g].array() + 1e-15).all());
    CHECK((wide.upper[g].array() >= narrow.upper[g].array() - 1e-15).all());
    CHECK((narrow.lower[g].array() <= realify(pointwise_median(draws)[g]).array()).all());
    CHECK((narrow.upper[g].array() >= realify(pointwise_median(draws)[g]).array()).all());
  }
}

TEST_CASE("pointwise bands are order statistics") {
  std::vector<double> values;
  for (int v = 1; v <= 10; ++v) values.push_back(v);
  PosteriorDraws draws = scalar_draws(values);

  const PointwiseBands band90 = pointwise_band(draws, 0.9);
  CHECK(band90.lower[0](0, 0) == 1.0);
  CHECK(band90.upper[0](0, 0) == 10.0);

  const PointwiseBands band80 = pointwise_band(draws, 0.8);
  CHECK(band80.lower[0](0, 0) == 1.0);
  CHECK(band80.upper[0](0, 0) == 9.0);

  const PointwiseBands band50 = pointwise_band(draws, 0.5);
  CHECK(band50.lower[0](0, 0) == 3.0);
  CHECK(band50.upper[0](0, 0) == 8.0);
}

TEST_CASE("squared coherency matches its closed forms") {
  CMatrix diag = CMatrix::Zero(2, 2);
  diag(0, 0) = 2.0;
  diag(1, 1) = 3.0;
  CHECK(squared_coherency(diag, 0, 1) == 0.0);

  CMatrix f(2, 2);
  f << Complex(1.0, 0.0), Complex(0.6, 0.0), Complex(0.6, 0.0), Complex(1.0, 0.0);
  CHECK(squared_coherency(f, 0, 1) == Catch::Approx(0.36).margin(1e-15));

  std::mt19937_64 rng(9);
  CVector v(3);
  for (int i = 0; i < 3; ++i) {
    std::normal_distribution<double> gauss;
    v[i] = Complex(gauss(rng) + 0.5, gauss(rng));
  }
  CMatrix rank1 = v * v.adjoint();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) CHECK(squared_coherency(rank1, i, j) == Catch::Approx(1.0).margin(1e-12));

  // Componentwise scale invariance under f -> D f D* with positive diagonal D.
  const CMatrix g = oracle::random_hpd(3, rng);
  CMatrix scaled = g;
  const double scales[3] = {0.2, 5.0, 11.0};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) scaled(i, j) = g(i, j) * scales[i] * scales[j];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j)
        CHECK(squared_coherency(scaled, i, j) ==
              Catch::Approx(squared_coherency(g, i, j)).margin(1e-13));

  // Tiny overshoot clamps to one; a genuine violation is reported unclamped.
  CMatrix shaved = rank1;
  shaved(0, 0) *= 1.0 - 1e-14;
  CHECK(squared_coherency(shaved, 0, 1) <= 1.0);
  CMatrix broken(2, 2);
  broken << Complex(1.0, 0.0), Complex(2.0, 0.0), Complex(2.0, 0.0), Complex(1.0, 0.0);
  CHECK(squared_coherency(broken, 0, 1) == Catch::Approx(4.0).margin(1e-15));

  CMatrix zero = CMatrix::Zero(2, 2);
  zero(0, 0) = 1.0;
  CHECK_THROWS_AS(squared_coherency(zero, 0, 1), contract_error);
  CHECK_THROWS_AS(squared_coherency(f, 0, 0), contract_error);
}

TEST_CASE("spectral error norms integrate the frobenius gap") {
  const FrequencyGrid grid(64);
  const std::vector<double> omegas = grid.omegas();
  const int d = 2;

  std::vector<CMatrix> truth(omegas.size()), same(omegas.size()), offset(omegas.size());
  std::mt19937_64 rng(11);
  for (std::size_t g = 0; g < omegas.size(); ++g) {
    truth[g] = oracle::random_hpd(d, rng);
    same[g] = truth[g];
    offset[g] = truth[g] + 0.25 * CMatrix::Identity(d, d);
  }

  const auto zero = l1_l2_error(same, truth, omegas);
  CHECK(zero.first == 0.0);
  CHECK(zero.second == 0.0);

  // Constant gap 0.25 * I has Frobenius norm 0.25 sqrt(d) everywhere, and the
  // even-length grid spans [0, pi] exactly.
  const auto flat = l1_l2_error(offset, truth, omegas);
  CHECK(flat.first == Catch::Approx(0.25 * std::sqrt(2.0)).margin(1e-12));
  CHECK(flat.second == Catch::Approx(0.25 * std::sqrt(2.0)).margin(1e-12));

  // Smooth gap: trapezoid sums on the working grid against adaptive
  // quadrature of the underlying curve.
  VarParams a, b;
  a.coeffs.resize(2, 2);
  a.coeffs << 0.5, 0.1, -0.2, 0.3;
  a.sigma = RMatrix::Identity(2, 2);
  b.coeffs.resize(2, 2);
  b.coeffs << -0.1, 0.0, 0.0, 0.4;
  b.sigma.resize(2, 2);
  b.sigma << 1.5, 0.3, 0.3, 0.8;

  std::vector<CMatrix> fa(omegas.size()), fb(omegas.size());
  for (std::size_t g = 0; g < omegas.size(); ++g) {
    fa[g] = var_spectral_density(a, omegas[g]);
    fb[g] = var_spectral_density(b, omegas[g]);
  }
  const auto smooth = l1_l2_error(fa, fb, omegas);
  const double oracle1 =
      oracle::integrate(
          [&](double w) {
            return (var_spectral_density(a, w) - var_spectral_density(b, w)).norm();
          },
          0.0, M_PI) /
      M_PI;
  const double oracle2 = std::sqrt(
      oracle::integrate(
          [&](double w) {
            const double gap =
                (var_spectral_density(a, w) - var_spectral_density(b, w)).norm();
            return gap * gap;
          },
          0.0, M_PI) /
      M_PI);
  CHECK(smooth.first == Catch::Approx(oracle1).epsilon(0.01));
  CHECK(smooth.second == Catch::Approx(oracle2).epsilon(0.01));

  CHECK_THROWS_AS(l1_l2_error(fa, truth, std::vector<double>(3, 0.0)), contract_error);
}

TEST_CASE("coverage flags and widths follow the uniform region") {
  PosteriorDraws draws = random_hermitian_draws(2, 5, 40, 74);
  const UniformRegion region = uniform_region(draws, 0.9);

  const std::vector<CMatrix> median = pointwise_median(draws);
  CHECK(coverage_and_width(region, median).covered);
  CHECK(coverage_and_width(draws, median).covered);

  std::vector<CMatrix> shifted = median;
  shifted[2](0, 0) = region.upper[2](0, 0) + 1.0;
  CHECK_FALSE(coverage_and_width(region, shifted).covered);

  const CoverageReport report = coverage_and_width(region, median);
  CHECK(report.xi == region.xi);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      std::vector<double> sig;
      for (const RMatrix& s : region.sigma) sig.push_back(s(i, j));
      std::sort(sig.begin(), sig.end());
      CHECK(report.widths(i, j) == Catch::Approx(2.0 * region.xi * sig[2]).margin(1e-14));
    }
}

TEST_CASE("uniform region coverage is calibrated") {
  // Draws and a synthetic truth sampled exchangeably around the same center:
  // the truth should land inside the level-0.9 region with probability
  // ceil(0.9 M) / (M + 1), here 180 / 201.
  std::mt19937_64 rng(75);
  std::normal_distribution<double> gauss;
  const int reps = 500, M = 200, G = 3;
  std::vector<double> omegas = {0.0, M_PI / 2.0, M_PI};
  int covered = 0;
  for (int rep = 0; rep < reps; ++rep) {
    PosteriorDraws draws = empty_draws(1, M, omegas);
    for (int m = 0; m < M; ++m)
      for (int g = 0; g < G; ++g)
        draws.spectra[m * G + g](0, 0) = 2.0 + g + 0.3 * gauss(rng);
    std::vector<CMatrix> truth(G, CMatrix::Zero(1, 1));
    for (int g = 0; g < G; ++g) truth[g](0, 0) = 2.0 + g + 0.3 * gauss(rng);
    if (coverage_and_width(draws, truth, 0.9).covered) ++covered;
  }
  const double fraction = static_cast<double>(covered) / reps;
  CHECK(fraction == Catch::Approx(0.9).margin(0.03));
}

TEST_CASE("summarize bundles the pieces consistently") {
  PosteriorDraws draws = random_hermitian_draws(2, 6, 30, 76);
  const SummaryBundle bundle = summarize(draws, 0.9);

  CHECK(bundle.level == 0.9);
  CHECK(bundle.omegas == draws.omegas);
  REQUIRE(bundle.median.size() == draws.omegas.size());
  REQUIRE(bundle.coherency.size() == 1);
  CHECK(bundle.coherency[0].i == 0);
  CHECK(bundle.coherency[0].j == 1);

  const auto median = pointwise_median(draws);
  const UniformRegion region = uniform_region(draws, 0.9);
  CHECK(bundle.uniform.xi == region.xi);
  for (std::size_t g = 0; g < median.size(); ++g) {
    CHECK((bundle.median[g] - median[g]).cwiseAbs().maxCoeff() == 0.0);
    const RMatrix rmed = realify(median[g]);
    CHECK((bundle.pointwise.lower[g].array() <= rmed.array()).all());
    CHECK((bundle.pointwise.upper[g].array() >= rmed.array()).all());
    for (double c : {bundle.coherency[0].lower[g], bundle.coherency[0].median[g],
                     bundle.coherency[0].upper[g]}) {
      CHECK(c >= 0.0);
      CHECK(c <= 1.0);
    }
    CHECK(bundle.coherency[0].lower[g] <= bundle.coherency[0].median[g]);
    CHECK(bundle.coherency[0].median[g] <= bundle.coherency[0].upper[g]);
  }
}

TEST_CASE("summary preconditions are enforced") {
  PosteriorDraws none = empty_draws(1, 5, {0.0, M_PI});
  none.spectra.clear();
  CHECK_THROWS_AS(pointwise_median(none), contract_error);

  PosteriorDraws few = scalar_draws({1.0, 2.0, 3.0});
  CHECK_THROWS_AS(uniform_region(few, 0.9), contract_error);
  CHECK_THROWS_AS(pointwise_band(few, 1.5), contract_error);

  PosteriorDraws zero;
  CHECK_THROWS_AS(pointwise_median(zero), contract_error);
}
