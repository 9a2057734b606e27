#pragma once

// Spectral model and likelihoods. The model density is
// f(omega) = f_pa^{1/2}(omega) Q(omega) f_pa^{1/2}(omega), a nonparametric
// Hpd correction of the working VAR spectral density. The corrected
// likelihood rescales the data by the per-frequency blocks
// C^{-1}(omega_j) = f_pa^{1/2} f^{-1/2}, evaluates the conditional Gaussian
// working likelihood on the rescaled series, and adjusts by the determinant
// of the correction; when Q is the identity it reduces exactly to the
// working likelihood.

#include <cmath>
#include <vector>

#include "bnspec/bhg_prior.hpp"
#include "bnspec/hpd.hpp"
#include "bnspec/numeric.hpp"
#include "bnspec/timefreq.hpp"
#include "bnspec/var_model.hpp"

namespace bnspec {

struct SpectralModel {
  VarParams working;
  AtomSet atoms;
  int k = 1;
  BernsteinConfig bernstein;
};

namespace detail {

// Eigensystem of an already-symmetrized Hermitian matrix, skipping the
// public-entry deviation check (hot path).
inline void eigen_symmetric_unchecked(const CMatrix& h, EigenSystem& out) {
  const auto d = h.rows();
  if (d == 1) {
    out.values.resize(1);
    out.values[0] = h(0, 0).real();
    out.vectors = CMatrix::Identity(1, 1);
    return;
  }
  if (d == 2) {
    hermitian_eigen_2x2(h, out);
    return;
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
  if (solver.info() != Eigen::Success)
    throw numeric_error("eigen_symmetric: eigensolver failed to converge");
  out.values = solver.eigenvalues();
  out.vectors = solver.eigenvectors();
}

inline bool degenerate(const EigenSystem& sys) {
  const double tr = sys.values.sum();
  return !sys.values.allFinite() || !(tr > 0.0) ||
         sys.values[0] < numeric_policy().degenerate_ratio * tr;
}

}  // namespace detail

// Model spectral density on the half grid; boundary frequencies are real
// symmetric by construction.
inline std::vector<CMatrix> model_spectral_density(const SpectralModel& m,
                                                   const FrequencyGrid& grid) {
  const int half = grid.half_size();
  std::vector<CMatrix> out(half);
  for (int g = 0; g < half; ++g) {
    const double w = grid.omega(g);
    CMatrix fpa = var_spectral_density(m.working, w);
    if (grid.is_boundary(g)) fpa = fpa.real().cast<Complex>();
    const CMatrix s = hpd_sqrt(fpa);
    CMatrix f = s * eval_Q(m.atoms, m.k, w, m.bernstein) * s;
    f = 0.5 * (f + f.adjoint());
    if (grid.is_boundary(g)) f = f.real().cast<Complex>();
    out[g] = f;
  }
  return out;
}

// Sum over interior frequencies of the complex-Gaussian log density of the
// Fourier coefficients with per-frequency covariance 2 pi f(omega_j).
// Degenerate f is reported as -inf (a rejection, not an error).
inline double whittle_loglik(const FourierCoefficients& coeffs,
                             const std::vector<CMatrix>& f_interior) {
  const int n_interior = coeffs.grid.interior_count();
  const int d = static_cast<int>(coeffs.coeffs.cols());
  if (static_cast<int>(f_interior.size()) != n_interior)
    throw contract_error("whittle_loglik: need one density per interior frequency");
  double total = 0.0;
  EigenSystem sys;
  for (int j = 1; j <= n_interior; ++j) {
    const CMatrix& f = f_interior[j - 1];
    if (f.rows() != d || f.cols() != d)
      throw contract_error("whittle_loglik: density dimension mismatch");
    hermitian_eigen(f, sys);
    if (detail::degenerate(sys)) return kNegInf;
    const CVector zj = coeffs.coeffs.row(j).transpose();
    const CVector rotated = sys.vectors.adjoint() * zj;
    double quad = 0.0, logdet = 0.0;
    for (int i = 0; i < d; ++i) {
      quad += std::norm(rotated[i]) / sys.values[i];
      logdet += std::log(sys.values[i]);
    }
    total += -d * std::log(M_PI) - d * std::log(2.0 * M_PI) - logdet -
             quad / (2.0 * M_PI);
  }
  return total;
}

// Corrected-likelihood evaluator with cached data transform, working-model
// spectral roots, and Bernstein basis tables. One instance per chain.
class CorrectedLikelihood {
 public:
  CorrectedLikelihood(const RMatrix& z, const BernsteinConfig& cfg)
      : z_(z), cfg_(cfg), grid_(static_cast<int>(z.rows())) {
    validate_series(z);
    n_ = static_cast<int>(z.rows());
    d_ = static_cast<int>(z.cols());
    half_ = grid_.half_size();
    coeffs_ = dft(z).coeffs;
    basis_by_k_.resize(cfg_.k_max + 1);
    phase_.resize(n_);
    for (int j = 0; j < n_; ++j)
      phase_[j] = std::exp(Complex(0.0, grid_.omega(j)));
    spa_.assign(half_, CMatrix(d_, d_));
    logdet_pa_.assign(half_, 0.0);
    q_.assign(half_, CMatrix(d_, d_));
    cinv_.assign(half_, CMatrix(d_, d_));
    spec_.resize(n_, d_);
    x_.resize(n_, d_);
    tmp_a_.resize(d_, d_);
    tmp_b_.resize(d_, d_);
    colbuf_in_.resize(n_);
    colbuf_out_.resize(n_);
    u_scratch_.assign(1, CMatrix(d_, d_));
  }

  const FrequencyGrid& grid() const { return grid_; }
  int dim() const { return d_; }
  int length() const { return n_; }
  const RMatrix& data() const { return z_; }
  const BernsteinConfig& bernstein() const { return cfg_; }
  const VarParams& working() const { return working_; }

  // Fixes the working model; recomputes the parametric square roots.
  void set_working(const VarParams& params) {
    if (params.dim() != d_) throw contract_error("set_working: dimension mismatch");
    working_ = params;
    llt_.compute(params.sigma);
    if (llt_.info() != Eigen::Success)
      throw singularity_error("set_working: sigma not positive definite", 0.0);
    logdet_sigma_ = 0.0;
    for (int i = 0; i < d_; ++i)
      logdet_sigma_ += 2.0 * std::log(llt_.matrixL()(i, i));
    EigenSystem sys;
    for (int g = 0; g < half_; ++g) {
      CMatrix fpa = var_spectral_density(params, grid_.omega(g));
      if (grid_.is_boundary(g)) fpa = fpa.real().cast<Complex>();
      hermitian_eigen(fpa, sys);
      if (detail::degenerate(sys))
        throw singularity_error("set_working: degenerate working spectral density",
                                sys.values[0]);
      RVector root = sys.values.array().sqrt();
      spa_[g].noalias() =
          sys.vectors * root.cast<Complex>().asDiagonal() * sys.vectors.adjoint();
      spa_[g] = 0.5 * (spa_[g] + spa_[g].adjoint());
      if (grid_.is_boundary(g)) spa_[g] = spa_[g].real().cast<Complex>();
      logdet_pa_[g] = sys.values.array().log().sum();
    }
    have_working_ = true;
  }

  // Corrected log likelihood for prepared atoms (radial parts, locations and
  // unit-trace matrices elementwise aligned) under Bernstein degree k.
  double eval(const std::vector<double>& radial, const std::vector<double>& location,
              const std::vector<CMatrix>& u, int k) {
    require_working();
    if (k < 1 || k > cfg_.k_max) return kNegInf;
    const RMatrix& basis = basis_table(k);
    const std::size_t count = radial.size();
    if (location.size() != count || u.size() != count)
      throw contract_error("eval: atom arrays misaligned");

    for (int g = 0; g < half_; ++g) q_[g].setZero();
    for (std::size_t l = 0; l < count; ++l) {
      const int bin = location_bin(location[l], k);
      const double r = radial[l];
      for (int g = 0; g < half_; ++g) {
        const double weight = r * basis(g, bin - 1);
        if (weight != 0.0) q_[g] += weight * u[l];
      }
    }

    double detsum = 0.0;
    for (int g = 0; g < half_; ++g) {
      tmp_a_.noalias() = spa_[g] * q_[g];
      tmp_b_.noalias() = tmp_a_ * spa_[g];
      tmp_a_ = 0.5 * (tmp_b_ + tmp_b_.adjoint());
      if (grid_.is_boundary(g)) tmp_a_ = tmp_a_.real().cast<Complex>();
      detail::eigen_symmetric_unchecked(tmp_a_, eig_);
      if (detail::degenerate(eig_)) return kNegInf;
      double logdet_f = 0.0;
      for (int i = 0; i < d_; ++i) logdet_f += std::log(eig_.values[i]);
      const double weight = grid_.is_boundary(g) ? 1.0 : 2.0;
      detsum += weight * (logdet_f - logdet_pa_[g]);
      RVector invroot = eig_.values.array().rsqrt();
      tmp_b_.noalias() = eig_.vectors * invroot.cast<Complex>().asDiagonal() *
                         eig_.vectors.adjoint();
      cinv_[g].noalias() = spa_[g] * tmp_b_;
      if (grid_.is_boundary(g)) cinv_[g] = cinv_[g].real().cast<Complex>();
    }

    apply_blocks();
    return -0.5 * detsum + gaussian_loglik();
  }

  double eval(const AtomSet& atoms, int k) {
    prepare_scratch(atoms);
    return eval(radial_scratch_, location_scratch_, u_scratch_, k);
  }

  // Model spectral density on the half grid for the current working model.
  void spectra(const std::vector<double>& radial, const std::vector<double>& location,
               const std::vector<CMatrix>& u, int k, std::vector<CMatrix>& out) {
    require_working();
    const RMatrix& basis = basis_table(k);
    out.assign(half_, CMatrix::Zero(d_, d_));
    for (std::size_t l = 0; l < radial.size(); ++l) {
      const int bin = location_bin(location[l], k);
      for (int g = 0; g < half_; ++g) {
        const double weight = radial[l] * basis(g, bin - 1);
        if (weight != 0.0) out[g] += weight * u[l];
      }
    }
    for (int g = 0; g < half_; ++g) {
      tmp_a_.noalias() = spa_[g] * out[g];
      out[g].noalias() = tmp_a_ * spa_[g];
      out[g] = 0.5 * (out[g] + out[g].adjoint());
      if (grid_.is_boundary(g)) out[g] = out[g].real().cast<Complex>();
    }
  }

  // Working-likelihood value of the untransformed data (the Q = I case).
  double working_loglik() {
    require_working();
    return conditional_gaussian_loglik(z_, working_, working_.order());
  }

 private:
  void require_working() const {
    if (!have_working_) throw contract_error("CorrectedLikelihood: working model unset");
  }

  void prepare_scratch(const AtomSet& atoms) {
    if (atoms.dim != d_) throw contract_error("eval: atom dimension mismatch");
    const std::size_t count = atoms.atoms.size();
    radial_scratch_.resize(count);
    location_scratch_.resize(count);
    u_scratch_.resize(count);
    for (std::size_t l = 0; l < count; ++l) {
      radial_scratch_[l] = atoms.atoms[l].radial;
      location_scratch_[l] = atoms.atoms[l].location;
      u_scratch_[l] = spherical_from_angles(atoms.atoms[l].angles, d_);
    }
  }

  const RMatrix& basis_table(int k) {
    RMatrix& table = basis_by_k_[k];
    if (table.size() == 0) {
      table.resize(half_, k);
      for (int g = 0; g < half_; ++g) {
        const double x = std::min(grid_.omega(g) / M_PI, 1.0);
        for (int j = 1; j <= k; ++j) table(g, j - 1) = bernstein_basis(x, j, k, cfg_);
      }
    }
    return table;
  }

  void apply_blocks() {
    for (int g = 0; g < half_; ++g)
      spec_.row(g) = (cinv_[g] * coeffs_.row(g).transpose()).transpose();
    for (int j = half_; j < n_; ++j) spec_.row(j) = spec_.row(n_ - j).conjugate();
    const double scale = std::sqrt(static_cast<double>(n_));
    double imag_mass = 0.0;
    for (int c = 0; c < d_; ++c) {
      for (int j = 0; j < n_; ++j) colbuf_in_[j] = scale * phase_[j] * spec_(j, c);
      fft_.inv(colbuf_out_, colbuf_in_);
      for (int t = 0; t < n_; ++t) {
        x_(t, c) = colbuf_out_[t].real();
        imag_mass = std::max(imag_mass, std::abs(colbuf_out_[t].imag()));
      }
    }
    if (imag_mass > numeric_policy().real_output_rel_tol * std::max(1.0, z_.norm()))
      throw numeric_error("corrected likelihood: rescaled series failed to be real");
  }

  double gaussian_loglik() {
    const int p = working_.order();
    const int rows = n_ - p;
    double quad = 0.0;
    RVector resid(d_);
    for (int t = p; t < n_; ++t) {
      resid = x_.row(t).transpose();
      for (int j = 1; j <= p; ++j)
        resid.noalias() -= working_.lag(j) * x_.row(t - j).transpose();
      quad += llt_.matrixL().solve(resid).squaredNorm();
    }
    return -0.5 * rows * (d_ * std::log(2.0 * M_PI) + logdet_sigma_) - 0.5 * quad;
  }

  RMatrix z_;
  BernsteinConfig cfg_;
  FrequencyGrid grid_;
  int n_ = 0, d_ = 0, half_ = 0;
  CMatrix coeffs_;
  std::vector<Complex> phase_;
  std::vector<RMatrix> basis_by_k_;

  VarParams working_;
  bool have_working_ = false;
  Eigen::LLT<RMatrix> llt_;
  double logdet_sigma_ = 0.0;
  std::vector<CMatrix> spa_;
  std::vector<double> logdet_pa_;

  Eigen::FFT<double> fft_;
  std::vector<CMatrix> q_, cinv_;
  CMatrix spec_;
  RMatrix x_;
  CMatrix tmp_a_, tmp_b_;
  EigenSystem eig_;
  CVector colbuf_in_, colbuf_out_;
  std::vector<double> radial_scratch_, location_scratch_;
  std::vector<CMatrix> u_scratch_;
};

inline double corrected_loglik(const RMatrix& z, const SpectralModel& m) {
  CorrectedLikelihood evaluator(z, m.bernstein);
  evaluator.set_working(m.working);
  return evaluator.eval(m.atoms, m.k);
}

}  // namespace bnspec
