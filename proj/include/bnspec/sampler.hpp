#pragma once

// Metropolis-within-Gibbs sampler over (k, radial parts, locations, angles,
// VAR coefficient blocks) for the corrected and Whittle posteriors, plus the
// conjugate Gaussian sampler for the parametric VAR baseline. One chain is
// strictly sequential; concurrency lives at the replication level.

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "bnspec/bhg_prior.hpp"
#include "bnspec/likelihood.hpp"
#include "bnspec/numeric.hpp"
#include "bnspec/var_model.hpp"

namespace bnspec {

enum class Procedure { vnpc, vnp, var };

inline const char* procedure_name(Procedure p) {
  switch (p) {
    case Procedure::vnpc: return "vnpc";
    case Procedure::vnp: return "vnp";
    case Procedure::var: return "var";
  }
  return "?";
}

struct McmcConfig {
  long iterations = 80000;
  long burn_in = 30000;
  int thin = 5;
  int L = 0;  // 0: max(20, ceil(n^{1/3}))
  int k_max = 300;
  std::uint64_t seed = 1;
  Procedure procedure = Procedure::vnpc;
  int order = 1;  // working order (vnpc) or baseline order (var); vnp forces 0
  std::optional<LevyConfig> levy;  // unset: LevyConfig::defaults(d)
  BernsteinConfig bernstein;       // its k_max field is overridden by k_max above
  bool prior_only = false;
  bool store_spectra = true;
  int adapt_batch = 50;
  double adapt_target = 0.44;
  int init_attempts = 100;
};

// Post-burn-in acceptance fractions per move type; -1 when a move type never
// ran (e.g. beta for an order-zero working model).
struct AcceptanceRates {
  double k = -1.0;
  double radial = -1.0;
  double location = -1.0;
  double angle = -1.0;
  double beta = -1.0;
};

struct ChainDiagnostics {
  double max_cache_drift = 0.0;
  long numeric_rejections = 0;
  std::vector<double> radial_scales;  // frozen post-burn-in proposal scales
  std::vector<double> angle_scales;
  std::vector<double> beta_scales;
};

struct PosteriorDraws {
  Procedure procedure = Procedure::vnpc;
  int n = 0, d = 0, order = 0, M = 0;
  std::vector<double> omegas;
  std::vector<CMatrix> spectra;  // M x half, draw-major; empty if not stored
  std::vector<int> k_draws;
  RMatrix beta_draws;      // M x (order * d^2)
  RMatrix radial_draws;    // M x L
  RMatrix location_draws;  // M x L
  std::vector<double> log_posterior;
  AcceptanceRates acceptance;
  ChainDiagnostics diagnostics;

  int half() const { return static_cast<int>(omegas.size()); }
  const CMatrix& spectrum(int m, int g) const { return spectra[m * half() + g]; }
};

namespace detail {

inline double reflect_into(double x, double lo, double hi) {
  const double span = hi - lo;
  double y = std::fmod(x - lo, 2.0 * span);
  if (y < 0.0) y += 2.0 * span;
  return lo + (y <= span ? y : 2.0 * span - y);
}

inline double wrap_into(double x, double hi) {
  double y = std::fmod(x, hi);
  return y < 0.0 ? y + hi : y;
}

}  // namespace detail

// Uniform jump on {-3,...,-1,1,...,3} reflected into [1, k_max]; reflection
// about the half-integer boundaries keeps the proposal symmetric.
inline int propose_k(int k, int k_max, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 5);
  const int u = pick(rng);
  int next = k + (u < 3 ? u - 3 : u - 2);
  while (next < 1 || next > k_max) {
    if (next < 1) next = 1 - next;
    if (next > k_max) next = 2 * k_max + 1 - next;
  }
  return next;
}

inline double propose_radial(double r, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  return r * std::exp(scale * gauss(rng));
}

// Location random-walk half-width for the l-th atom (1-based): pi l / (l + 2 sqrt n).
inline double location_step_width(int l, int n) {
  return M_PI * l / (l + 2.0 * std::sqrt(static_cast<double>(n)));
}

inline double propose_location(double x, int l, int n, std::mt19937_64& rng) {
  const double delta = location_step_width(l, n);
  std::uniform_real_distribution<double> step(-delta, delta);
  return detail::reflect_into(x + step(rng), 0.0, M_PI);
}

// Componentwise uniform walk: reflected on the [0, pi] coordinates, wrapped
// on the final [0, 2 pi) coordinate.
inline RVector propose_angles(const RVector& phi, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> step(-scale, scale);
  const int m = static_cast<int>(phi.size());
  RVector out(m);
  for (int i = 0; i < m; ++i) {
    const double moved = phi[i] + step(rng);
    out[i] = i + 1 < m ? detail::reflect_into(moved, 0.0, M_PI)
                       : detail::wrap_into(moved, 2.0 * M_PI);
  }
  return out;
}

inline RVector propose_beta_block(const RVector& block, double scale,
                                  std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  RVector out(block.size());
  for (int i = 0; i < block.size(); ++i) out[i] = block[i] + scale * gauss(rng);
  return out;
}

// Exact Gaussian conditional posterior of the stacked VAR coefficients under
// the fixed-ridge prior and innovation covariance fixed at the OLS estimate.
struct ConjugatePosterior {
  RVector mean;
  RMatrix precision;
  RMatrix sigma;
};

inline ConjugatePosterior var_conjugate_posterior(const RMatrix& z, int p,
                                                  double ridge) {
  if (p < 1) throw contract_error("var_conjugate_posterior: need p >= 1");
  const VarParams fit = fit_ols(z, p);
  const int n = static_cast<int>(z.rows());
  const int d = static_cast<int>(z.cols());
  const int q = p * d;
  Eigen::LLT<RMatrix> sig(fit.sigma);
  const RMatrix sigma_inv = sig.solve(RMatrix::Identity(d, d));
  RMatrix gram = RMatrix::Zero(q, q);
  RVector b = RVector::Zero(d * q);
  RVector phi(q);
  for (int t = p; t < n; ++t) {
    for (int j = 1; j <= p; ++j)
      phi.segment((j - 1) * d, d) = z.row(t - j).transpose();
    const RVector s = sigma_inv * z.row(t).transpose();
    gram.noalias() += phi * phi.transpose();
    for (int m = 0; m < d; ++m) b.segment(m * q, q) += s[m] * phi;
  }
  ConjugatePosterior out;
  out.sigma = fit.sigma;
  out.precision = ridge * RMatrix::Identity(d * q, d * q) +
                  Eigen::kroneckerProduct(sigma_inv, gram);
  out.mean = Eigen::LLT<RMatrix>(out.precision).solve(b);
  return out;
}

inline PosteriorDraws run_var_baseline(const RMatrix& z, int p, const McmcConfig& cfg) {
  validate_series(z);
  if (cfg.burn_in < 0 || cfg.burn_in >= cfg.iterations || cfg.thin < 1)
    throw contract_error("run_var_baseline: need 0 <= burn_in < iterations, thin >= 1");
  const auto post =
      var_conjugate_posterior(z, p, numeric_policy().beta_prior_ridge);
  const int n = static_cast<int>(z.rows());
  const int d = static_cast<int>(z.cols());
  const int dim = static_cast<int>(post.mean.size());
  Eigen::LLT<RMatrix> llt(post.precision);
  if (llt.info() != Eigen::Success)
    throw singularity_error("run_var_baseline: posterior precision not PD", 0.0);
  double logdet_prec = 0.0;
  for (int i = 0; i < dim; ++i) logdet_prec += 2.0 * std::log(llt.matrixL()(i, i));
  const double lognorm = 0.5 * logdet_prec - 0.5 * dim * std::log(2.0 * M_PI);

  PosteriorDraws draws;
  draws.procedure = Procedure::var;
  draws.n = n;
  draws.d = d;
  draws.order = p;
  draws.M = static_cast<int>((cfg.iterations - cfg.burn_in) / cfg.thin);
  if (draws.M < 1) throw contract_error("run_var_baseline: no retained draws");
  const FrequencyGrid grid(n);
  draws.omegas = grid.omegas();
  draws.k_draws.assign(draws.M, 0);
  draws.beta_draws.resize(draws.M, dim);
  draws.radial_draws.resize(draws.M, 0);
  draws.location_draws.resize(draws.M, 0);
  draws.log_posterior.resize(draws.M);
  if (cfg.store_spectra) draws.spectra.reserve(draws.M * grid.half_size());
  draws.acceptance.beta = 1.0;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  RVector xi(dim);
  for (int m = 0; m < draws.M; ++m) {
    for (int i = 0; i < dim; ++i) xi[i] = gauss(rng);
    const RVector beta = post.mean + llt.matrixU().solve(xi);
    draws.beta_draws.row(m) = beta.transpose();
    draws.log_posterior[m] = lognorm - 0.5 * xi.squaredNorm();
    if (cfg.store_spectra) {
      const VarParams params{unstack_beta(beta, d), post.sigma};
      for (int g = 0; g < grid.half_size(); ++g) {
        CMatrix f = var_spectral_density(params, grid.omega(g));
        if (grid.is_boundary(g)) f = f.real().cast<Complex>();
        draws.spectra.push_back(std::move(f));
      }
    }
  }
  return draws;
}

namespace detail {

class GibbsChain {
 public:
  GibbsChain(const RMatrix& z, const McmcConfig& cfg) : z_(z), cfg_(cfg) {
    validate_series(z);
    n_ = static_cast<int>(z.rows());
    d_ = static_cast<int>(z.cols());
    if (cfg_.iterations < 1 || cfg_.burn_in < 0 || cfg_.burn_in >= cfg_.iterations)
      throw contract_error("run_chain: need 0 <= burn_in < iterations");
    if (cfg_.thin < 1) throw contract_error("run_chain: need thin >= 1");
    if (cfg_.k_max < 1) throw contract_error("run_chain: need k_max >= 1");
    if (cfg_.order < 0) throw contract_error("run_chain: need order >= 0");
    order_ = cfg_.procedure == Procedure::vnp ? 0 : cfg_.order;
    L_ = cfg_.L > 0 ? cfg_.L
                    : std::max(20, static_cast<int>(std::ceil(
                                       std::cbrt(static_cast<double>(n_)) - 1e-9)));
    bern_ = cfg_.bernstein;
    bern_.k_max = cfg_.k_max;
    levy_ = cfg_.levy.value_or(LevyConfig::defaults(d_));
    store_spectra_ = cfg_.store_spectra && !cfg_.prior_only;
    rng_.seed(cfg_.seed);
  }

  PosteriorDraws run() {
    init_state();
    const int M = static_cast<int>((cfg_.iterations - cfg_.burn_in) / cfg_.thin);
    if (M < 1) throw contract_error("run_chain: no retained draws");
    PosteriorDraws draws;
    draws.procedure = cfg_.procedure;
    draws.n = n_;
    draws.d = d_;
    draws.order = order_;
    draws.M = M;
    draws.omegas = FrequencyGrid(n_).omegas();
    draws.k_draws.reserve(M);
    draws.log_posterior.reserve(M);
    draws.beta_draws.resize(M, order_ * d_ * d_);
    draws.radial_draws.resize(M, L_);
    draws.location_draws.resize(M, L_);
    if (store_spectra_) draws.spectra.reserve(static_cast<std::size_t>(M) * half());

    long batch = 0;
    int retained = 0;
    const long check_every = numeric_policy().cache_check_interval;
    for (long iter = 0; iter < cfg_.iterations; ++iter) {
      const bool burning = iter < cfg_.burn_in;
      sweep(burning);
      if (burning && (iter + 1) % cfg_.adapt_batch == 0) adapt(++batch);
      if (!burning && (iter - cfg_.burn_in + 1) % cfg_.thin == 0 && retained < M) {
        retain(draws, retained);
        ++retained;
      }
      if ((iter + 1) % check_every == 0) coherence_check();
    }

    draws.acceptance = rates();
    draws.diagnostics.max_cache_drift = max_drift_;
    draws.diagnostics.numeric_rejections = numeric_rejections_;
    draws.diagnostics.radial_scales = radial_scale_;
    draws.diagnostics.angle_scales = angle_scale_;
    draws.diagnostics.beta_scales = beta_scale_;
    return draws;
  }

 private:
  int half() const { return n_ / 2 + 1; }

  double atom_loglik() {
    if (cfg_.prior_only) return 0.0;
    try {
      return eval_->eval(radial_, location_, u_, k_);
    } catch (const numeric_error&) {
      ++numeric_rejections_;
      return kNegInf;
    }
  }

  void init_state() {
    if (order_ >= 1) {
      working_ = fit_ols(z_, order_);
    } else {
      working_.coeffs.resize(d_, 0);
      working_.sigma = detail::ols_window(z_, 0, 0).sigma;
    }
    if (!cfg_.prior_only) {
      eval_.emplace(z_, bern_);
      eval_->set_working(working_);
    }
    logprior_beta_ = beta_log_prior(working_.coeffs);
    k_ = std::min(10, cfg_.k_max);
    logprior_k_ = log_prior_k(k_, bern_);

    radial_.resize(L_);
    location_.resize(L_);
    u_.resize(L_);
    for (int attempt = 0; attempt < cfg_.init_attempts; ++attempt) {
      atoms_ = sample_atoms_series(L_, d_, levy_, rng_);
      sync_mirrors();
      logprior_atoms_ = log_prior_atoms(atoms_, levy_);
      if (logprior_atoms_ == kNegInf) continue;
      loglik_ = atom_loglik();
      if (std::isfinite(loglik_)) {
        init_scales();
        return;
      }
    }
    throw numeric_error("run_chain: no finite initial posterior after re-initialization");
  }

  void sync_mirrors() {
    for (int l = 0; l < L_; ++l) {
      radial_[l] = atoms_.atoms[l].radial;
      location_[l] = atoms_.atoms[l].location;
      u_[l] = spherical_from_angles(atoms_.atoms[l].angles, d_);
    }
  }

  void init_scales() {
    radial_scale_.assign(L_, 0.5);
    angle_scale_.assign(d_ > 1 ? L_ : 0, 0.5);
    beta_scale_.assign(order_, 1.0 / std::sqrt(static_cast<double>(n_)));
    radial_batch_.assign(L_, 0);
    angle_batch_.assign(angle_scale_.size(), 0);
    beta_batch_.assign(order_, 0);
  }

  double beta_log_prior(const RMatrix& coeffs) const {
    if (coeffs.size() == 0) return 0.0;
    return -0.5 * numeric_policy().beta_prior_ridge * coeffs.squaredNorm();
  }

  bool accept(double log_alpha) {
    if (log_alpha == kNegInf) return false;
    if (log_alpha >= 0.0) return true;
    return std::log(unif_(rng_)) < log_alpha;
  }

  void sweep(bool burning) {
    move_k(burning);
    for (int l = 0; l < L_; ++l) move_radial(l, burning);
    for (int l = 0; l < L_; ++l) move_location(l, burning);
    if (d_ > 1)
      for (int l = 0; l < L_; ++l) move_angles(l, burning);
    for (int j = 1; j <= order_ && !cfg_.prior_only; ++j) move_beta(j, burning);
  }

  void move_k(bool burning) {
    const int k_new = propose_k(k_, cfg_.k_max, rng_);
    const double lp_k = log_prior_k(k_new, bern_);
    double log_alpha = kNegInf, ll = 0.0;
    if (lp_k != kNegInf) {
      const int k_saved = k_;
      k_ = k_new;
      ll = atom_loglik();
      k_ = k_saved;
      log_alpha = (ll + lp_k) - (loglik_ + logprior_k_);
    }
    if (accept(log_alpha)) {
      k_ = k_new;
      loglik_ = ll;
      logprior_k_ = lp_k;
      if (!burning) ++k_stats_.acc;
    }
    if (!burning) ++k_stats_.prop;
  }

  void move_radial(int l, bool burning) {
    const double r_old = radial_[l];
    const double r_new = propose_radial(r_old, radial_scale_[l], rng_);
    atoms_.atoms[l].radial = r_new;
    radial_[l] = r_new;
    const double lp = log_prior_atoms(atoms_, levy_);
    double log_alpha = kNegInf, ll = 0.0;
    if (lp != kNegInf) {
      ll = atom_loglik();
      log_alpha = (ll + lp) - (loglik_ + logprior_atoms_) + std::log(r_new / r_old);
    }
    if (accept(log_alpha)) {
      loglik_ = ll;
      logprior_atoms_ = lp;
      if (burning) ++radial_batch_[l];
      if (!burning) ++radial_stats_.acc;
    } else {
      atoms_.atoms[l].radial = r_old;
      radial_[l] = r_old;
    }
    if (!burning) ++radial_stats_.prop;
  }

  void move_location(int l, bool burning) {
    const double x_old = location_[l];
    const double x_new = propose_location(x_old, l + 1, n_, rng_);
    atoms_.atoms[l].location = x_new;
    location_[l] = x_new;
    const double lp = log_prior_atoms(atoms_, levy_);
    double log_alpha = kNegInf, ll = 0.0;
    if (lp != kNegInf) {
      ll = atom_loglik();
      log_alpha = (ll + lp) - (loglik_ + logprior_atoms_);
    }
    if (accept(log_alpha)) {
      loglik_ = ll;
      logprior_atoms_ = lp;
      if (!burning) ++location_stats_.acc;
    } else {
      atoms_.atoms[l].location = x_old;
      location_[l] = x_old;
    }
    if (!burning) ++location_stats_.prop;
  }

  void move_angles(int l, bool burning) {
    const RVector phi_old = atoms_.atoms[l].angles;
    const RVector phi_new = propose_angles(phi_old, angle_scale_[l], rng_);
    atoms_.atoms[l].angles = phi_new;
    const CMatrix u_old = u_[l];
    u_[l] = spherical_from_angles(phi_new, d_);
    const double lp = log_prior_atoms(atoms_, levy_);
    double log_alpha = kNegInf, ll = 0.0;
    if (lp != kNegInf) {
      ll = atom_loglik();
      log_alpha = (ll + lp) - (loglik_ + logprior_atoms_);
    }
    if (accept(log_alpha)) {
      loglik_ = ll;
      logprior_atoms_ = lp;
      if (burning) ++angle_batch_[l];
      if (!burning) ++angle_stats_.acc;
    } else {
      atoms_.atoms[l].angles = phi_old;
      u_[l] = u_old;
    }
    if (!burning) ++angle_stats_.prop;
  }

  void move_beta(int j, bool burning) {
    const int block = d_ * d_;
    RVector current(block);
    for (int r = 0; r < d_; ++r)
      for (int c = 0; c < d_; ++c)
        current[r * d_ + c] = working_.coeffs(r, (j - 1) * d_ + c);
    const RVector proposed = propose_beta_block(current, beta_scale_[j - 1], rng_);
    VarParams trial = working_;
    for (int r = 0; r < d_; ++r)
      for (int c = 0; c < d_; ++c)
        trial.coeffs(r, (j - 1) * d_ + c) = proposed[r * d_ + c];
    const double lp = beta_log_prior(trial.coeffs);
    double log_alpha = kNegInf, ll = 0.0;
    bool usable = true;
    try {
      eval_->set_working(trial);
      ll = eval_->eval(radial_, location_, u_, k_);
    } catch (const numeric_error&) {
      usable = false;
    }
    if (usable) log_alpha = (ll + lp) - (loglik_ + logprior_beta_);
    else ++numeric_rejections_;
    if (usable && accept(log_alpha)) {
      working_ = trial;
      loglik_ = ll;
      logprior_beta_ = lp;
      if (burning) ++beta_batch_[j - 1];
      if (!burning) ++beta_stats_.acc;
    } else {
      eval_->set_working(working_);
    }
    if (!burning) ++beta_stats_.prop;
  }

  void adapt(long batch) {
    const double step = 1.0 / std::sqrt(static_cast<double>(batch));
    auto tune = [&](std::vector<double>& scales, std::vector<int>& counts) {
      for (std::size_t b = 0; b < scales.size(); ++b) {
        const double rate = static_cast<double>(counts[b]) / cfg_.adapt_batch;
        double log_scale = std::log(scales[b]) + step * (rate - cfg_.adapt_target);
        log_scale = std::min(std::max(log_scale, std::log(1e-4)), std::log(1e4));
        scales[b] = std::exp(log_scale);
        counts[b] = 0;
      }
    };
    tune(radial_scale_, radial_batch_);
    tune(angle_scale_, angle_batch_);
    tune(beta_scale_, beta_batch_);
  }

  void retain(PosteriorDraws& draws, int slot) {
    draws.k_draws.push_back(k_);
    draws.log_posterior.push_back(loglik_ + logprior_atoms_ + logprior_k_ +
                                  logprior_beta_);
    for (int l = 0; l < L_; ++l) {
      draws.radial_draws(slot, l) = radial_[l];
      draws.location_draws(slot, l) = location_[l];
    }
    if (order_ >= 1)
      draws.beta_draws.row(slot) = stack_beta(working_.coeffs, d_).transpose();
    if (store_spectra_) {
      eval_->spectra(radial_, location_, u_, k_, spectra_buf_);
      for (auto& f : spectra_buf_) draws.spectra.push_back(f);
    }
  }

  // Recompute the cached posterior terms from the primary state and record
  // the worst drift seen.
  void coherence_check() {
    const double lp_atoms = log_prior_atoms(atoms_, levy_);
    const double lp_k = log_prior_k(k_, bern_);
    const double lp_beta = beta_log_prior(working_.coeffs);
    double ll = 0.0;
    if (!cfg_.prior_only) {
      eval_->set_working(working_);
      ll = eval_->eval(atoms_, k_);
    }
    double drift = std::abs(lp_atoms - logprior_atoms_);
    drift = std::max(drift, std::abs(lp_k - logprior_k_));
    drift = std::max(drift, std::abs(lp_beta - logprior_beta_));
    drift = std::max(drift, std::abs(ll - loglik_));
    max_drift_ = std::max(max_drift_, drift);
    logprior_atoms_ = lp_atoms;
    logprior_k_ = lp_k;
    logprior_beta_ = lp_beta;
    loglik_ = ll;
    sync_mirrors();
  }

  struct MoveStats {
    long prop = 0, acc = 0;
    double rate() const {
      return prop == 0 ? -1.0 : static_cast<double>(acc) / static_cast<double>(prop);
    }
  };

  AcceptanceRates rates() const {
    AcceptanceRates out;
    out.k = k_stats_.rate();
    out.radial = radial_stats_.rate();
    out.location = location_stats_.rate();
    out.angle = angle_stats_.rate();
    out.beta = beta_stats_.rate();
    return out;
  }

  RMatrix z_;
  McmcConfig cfg_;
  int n_ = 0, d_ = 0, L_ = 0, order_ = 0;
  BernsteinConfig bern_;
  LevyConfig levy_;
  bool store_spectra_ = true;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};

  std::optional<CorrectedLikelihood> eval_;
  VarParams working_;
  AtomSet atoms_;
  std::vector<double> radial_, location_;
  std::vector<CMatrix> u_;
  int k_ = 1;
  double loglik_ = 0.0, logprior_atoms_ = 0.0, logprior_k_ = 0.0, logprior_beta_ = 0.0;

  std::vector<double> radial_scale_, angle_scale_, beta_scale_;
  std::vector<int> radial_batch_, angle_batch_, beta_batch_;
  MoveStats k_stats_, radial_stats_, location_stats_, angle_stats_, beta_stats_;
  double max_drift_ = 0.0;
  long numeric_rejections_ = 0;
  std::vector<CMatrix> spectra_buf_;
};

}  // namespace detail

inline PosteriorDraws run_chain(const RMatrix& z, const McmcConfig& cfg) {
  if (cfg.procedure == Procedure::var) {
    if (cfg.order < 1) throw contract_error("run_chain: var baseline needs order >= 1");
    return run_var_baseline(z, cfg.order, cfg);
  }
  return detail::GibbsChain(z, cfg).run();
}

}  // namespace bnspec
