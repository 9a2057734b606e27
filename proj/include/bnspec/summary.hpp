#pragma once

// Posterior summaries over stored spectral draws: pointwise medians,
// pointwise and uniform credible bands on the realified components, squared
// coherency, integrated error norms, and coverage bookkeeping.

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "bnspec/hpd.hpp"
#include "bnspec/numeric.hpp"
#include "bnspec/sampler.hpp"

namespace bnspec {

namespace detail {

inline double median_inplace(std::vector<double>& v) {
  const std::size_t m = v.size();
  const std::size_t mid = m / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  if (m % 2 == 1) return v[mid];
  const double upper = v[mid];
  const double lower = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lower + upper);
}

// q-quantile as the ceil(q m)-th order statistic (1-based), clamped to the
// sample range.
inline double order_stat_inplace(std::vector<double>& v, double q) {
  const auto m = static_cast<double>(v.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * m));
  rank = std::min(std::max<std::size_t>(rank, 1), v.size());
  std::nth_element(v.begin(), v.begin() + (rank - 1), v.end());
  return v[rank - 1];
}

inline void require_stored_spectra(const PosteriorDraws& draws, int min_m,
                                   const char* where) {
  if (draws.M < min_m)
    throw contract_error(std::string(where) + ": needs at least " +
                         std::to_string(min_m) + " draws");
  if (draws.spectra.size() !=
      static_cast<std::size_t>(draws.M) * static_cast<std::size_t>(draws.half()))
    throw contract_error(std::string(where) + ": draws carry no stored spectra");
}

// Realified draw values for one frequency, one matrix component per column.
inline RMatrix realified_table(const PosteriorDraws& draws, int g) {
  const int d = draws.d;
  RMatrix table(draws.M, d * d);
  for (int m = 0; m < draws.M; ++m) {
    const RMatrix r = realify(draws.spectrum(m, g));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) table(m, i * d + j) = r(i, j);
  }
  return table;
}

inline RMatrix column_medians(const RMatrix& table, int d) {
  RMatrix med(d, d);
  std::vector<double> buf(static_cast<std::size_t>(table.rows()));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      Eigen::Map<RVector>(buf.data(), table.rows()) = table.col(i * d + j);
      med(i, j) = median_inplace(buf);
    }
  return med;
}

}  // namespace detail

// Componentwise median of the realified draws, mapped back to Hermitian form.
inline std::vector<CMatrix> pointwise_median(const PosteriorDraws& draws) {
  detail::require_stored_spectra(draws, 1, "pointwise_median");
  std::vector<CMatrix> out(static_cast<std::size_t>(draws.half()));
  for (int g = 0; g < draws.half(); ++g) {
    const RMatrix table = detail::realified_table(draws, g);
    out[g] = derealify(detail::column_medians(table, draws.d));
  }
  return out;
}

struct PointwiseBands {
  std::vector<RMatrix> lower, upper;  // realified band edges per frequency
};

inline PointwiseBands pointwise_band(const PosteriorDraws& draws,
                                     double level = 0.9) {
  detail::require_stored_spectra(draws, 1, "pointwise_band");
  if (!(level > 0.0 && level < 1.0))
    throw contract_error("pointwise_band: level must lie in (0, 1)");
  const int d = draws.d;
  PointwiseBands bands;
  bands.lower.resize(draws.half());
  bands.upper.resize(draws.half());
  std::vector<double> buf(static_cast<std::size_t>(draws.M));
  for (int g = 0; g < draws.half(); ++g) {
    const RMatrix table = detail::realified_table(draws, g);
    bands.lower[g].resize(d, d);
    bands.upper[g].resize(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        Eigen::Map<RVector>(buf.data(), draws.M) = table.col(i * d + j);
        bands.lower[g](i, j) = detail::order_stat_inplace(buf, 0.5 * (1.0 - level));
        Eigen::Map<RVector>(buf.data(), draws.M) = table.col(i * d + j);
        bands.upper[g](i, j) = detail::order_stat_inplace(buf, 0.5 * (1.0 + level));
      }
  }
  return bands;
}

// Uniform credible region: a single multiplier xi applied to the componentwise
// median absolute deviation so that a `level` fraction of draws lies inside
// the band everywhere at once.
struct UniformRegion {
  double xi = 0.0;
  std::vector<RMatrix> center;  // realified pointwise median
  std::vector<RMatrix> sigma;   // componentwise MAD, floored
  std::vector<RMatrix> lower, upper;
};

inline UniformRegion uniform_region(const PosteriorDraws& draws,
                                    double level = 0.9) {
  detail::require_stored_spectra(draws, 10, "uniform_region");
  if (!(level > 0.0 && level < 1.0))
    throw contract_error("uniform_region: level must lie in (0, 1)");
  const int d = draws.d, G = draws.half();
  const double floor = numeric_policy().mad_floor;

  UniformRegion region;
  region.center.resize(G);
  region.sigma.resize(G);
  std::vector<double> buf(static_cast<std::size_t>(draws.M));
  for (int g = 0; g < G; ++g) {
    const RMatrix table = detail::realified_table(draws, g);
    region.center[g] = detail::column_medians(table, d);
    region.sigma[g].resize(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        Eigen::Map<RVector>(buf.data(), draws.M) =
            (table.col(i * d + j).array() - region.center[g](i, j)).abs();
        region.sigma[g](i, j) = std::max(detail::median_inplace(buf), floor);
      }
  }

  std::vector<double> sup(static_cast<std::size_t>(draws.M), 0.0);
  for (int m = 0; m < draws.M; ++m)
    for (int g = 0; g < G; ++g) {
      const RMatrix r = realify(draws.spectrum(m, g));
      const double dev =
          ((r - region.center[g]).cwiseAbs().cwiseQuotient(region.sigma[g]))
              .maxCoeff();
      sup[m] = std::max(sup[m], dev);
    }
  region.xi = detail::order_stat_inplace(sup, level);

  region.lower.resize(G);
  region.upper.resize(G);
  for (int g = 0; g < G; ++g) {
    region.lower[g] = region.center[g] - region.xi * region.sigma[g];
    region.upper[g] = region.center[g] + region.xi * region.sigma[g];
  }
  return region;
}

// |f_ij|^2 / (f_ii f_jj); tiny Cauchy-Schwarz overshoot from rounding is
// clamped, anything larger is returned as computed.
inline double squared_coherency(const CMatrix& f, int i, int j) {
  if (f.rows() != f.cols()) throw contract_error("squared_coherency: square matrix");
  if (i < 0 || j < 0 || i >= f.rows() || j >= f.cols() || i == j)
    throw contract_error("squared_coherency: need two distinct valid indices");
  const double fii = f(i, i).real(), fjj = f(j, j).real();
  if (!(fii > 0.0) || !(fjj > 0.0))
    throw contract_error("squared_coherency: diagonal entries must be positive");
  const double value = std::norm(f(i, j)) / (fii * fjj);
  if (value > 1.0 && value <= 1.0 + 1e-12) return 1.0;
  if (value < 0.0 && value >= -1e-12) return 0.0;
  return value;
}

// L1/L2 Frobenius errors, trapezoid quadrature over the grid, normalized by pi.
inline std::pair<double, double> l1_l2_error(const std::vector<CMatrix>& estimate,
                                             const std::vector<CMatrix>& truth,
                                             const std::vector<double>& omegas) {
  const std::size_t G = omegas.size();
  if (estimate.size() != G || truth.size() != G)
    throw contract_error("l1_l2_error: estimate, truth, and grid sizes differ");
  if (G < 2) throw contract_error("l1_l2_error: need at least two frequencies");
  double l1 = 0.0, l2 = 0.0;
  for (std::size_t g = 0; g < G; ++g) {
    if (estimate[g].rows() != truth[g].rows() ||
        estimate[g].cols() != truth[g].cols())
      throw contract_error("l1_l2_error: matrix dimensions differ");
    const double hi = omegas[g + 1 < G ? g + 1 : g];
    const double lo = omegas[g > 0 ? g - 1 : g];
    const double w = 0.5 * (hi - lo);
    const double gap = (estimate[g] - truth[g]).norm();
    l1 += w * gap;
    l2 += w * gap * gap;
  }
  return {l1 / M_PI, std::sqrt(l2 / M_PI)};
}

// Band width per realified component: 2 xi times the median over frequencies
// of the component's deviation scale.
inline RMatrix region_widths(const UniformRegion& region) {
  const std::size_t G = region.sigma.size();
  const auto d = region.sigma.empty() ? 0 : region.sigma.front().rows();
  RMatrix widths(d, d);
  std::vector<double> buf(G);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      for (std::size_t g = 0; g < G; ++g) buf[g] = region.sigma[g](i, j);
      widths(i, j) = 2.0 * region.xi * detail::median_inplace(buf);
    }
  return widths;
}

struct CoverageReport {
  bool covered = false;
  double xi = 0.0;
  RMatrix widths;  // realified layout: 2 xi * median over frequencies of sigma
};

inline CoverageReport coverage_and_width(const UniformRegion& region,
                                         const std::vector<CMatrix>& truth) {
  const std::size_t G = region.center.size();
  if (truth.size() != G)
    throw contract_error("coverage_and_width: truth grid size differs");

  CoverageReport report;
  report.xi = region.xi;
  report.covered = true;
  for (std::size_t g = 0; g < G; ++g) {
    const RMatrix r = realify(truth[g]);
    if ((r.array() < region.lower[g].array()).any() ||
        (r.array() > region.upper[g].array()).any())
      report.covered = false;
  }
  report.widths = region_widths(region);
  return report;
}

inline CoverageReport coverage_and_width(const PosteriorDraws& draws,
                                         const std::vector<CMatrix>& truth,
                                         double level = 0.9) {
  return coverage_and_width(uniform_region(draws, level), truth);
}

struct CoherencyBand {
  int i = 0, j = 0;
  std::vector<double> median, lower, upper;
};

inline CoherencyBand coherency_band(const PosteriorDraws& draws, int i, int j,
                                    double level = 0.9) {
  detail::require_stored_spectra(draws, 1, "coherency_band");
  CoherencyBand band;
  band.i = i;
  band.j = j;
  const int G = draws.half();
  band.median.resize(G);
  band.lower.resize(G);
  band.upper.resize(G);
  std::vector<double> buf(static_cast<std::size_t>(draws.M));
  std::vector<double> tmp;
  for (int g = 0; g < G; ++g) {
    for (int m = 0; m < draws.M; ++m)
      buf[m] = squared_coherency(draws.spectrum(m, g), i, j);
    tmp = buf;
    band.median[g] = detail::median_inplace(tmp);
    tmp = buf;
    band.lower[g] = detail::order_stat_inplace(tmp, 0.5 * (1.0 - level));
    tmp = buf;
    band.upper[g] = detail::order_stat_inplace(tmp, 0.5 * (1.0 + level));
  }
  return band;
}

struct SummaryBundle {
  double level = 0.9;
  std::vector<double> omegas;
  std::vector<CMatrix> median;
  PointwiseBands pointwise;
  UniformRegion uniform;
  std::vector<CoherencyBand> coherency;  // all pairs i < j; empty for d = 1
};

inline SummaryBundle summarize(const PosteriorDraws& draws, double level = 0.9) {
  SummaryBundle bundle;
  bundle.level = level;
  bundle.omegas = draws.omegas;
  bundle.median = pointwise_median(draws);
  bundle.pointwise = pointwise_band(draws, level);
  bundle.uniform = uniform_region(draws, level);
  for (int i = 0; i < draws.d; ++i)
    for (int j = i + 1; j < draws.d; ++j)
      bundle.coherency.push_back(coherency_band(draws, i, j, level));
  return bundle;
}

}  // namespace bnspec
