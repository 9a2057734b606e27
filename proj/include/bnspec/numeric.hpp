#pragma once

#include <stdexcept>
#include <string>

namespace bnspec {

// Central tolerance record. Every hard-coded numeric guard in the library
// reads from here so that the thresholds are documented in one place.
struct NumericPolicy {
  double hermitian_rel_tol = 1e-10;    // symmetrization guard on Hermitian input
  double strict_pd_ratio = 1e-14;      // min_eig > dim * ratio * max_eig for sqrt/inv
  double degenerate_ratio = 1e-12;     // min_eig < ratio * trace flags a degenerate f
  double boundary_imag_tol = 1e-12;    // boundary transform blocks must be real
  double real_output_rel_tol = 1e-9;   // residual imaginary mass after inverse transform
  double conj_sym_rel_tol = 1e-10;     // conjugate-symmetry check on coefficients
  double mad_floor = 1e-12;            // lower bound for the MAD scale in bands
  double transfer_cond_limit = 1e12;   // condition limit for the VAR transfer matrix
  double beta_prior_ridge = 1e-8;      // Gaussian prior precision on VAR coefficients
  int cache_check_interval = 1000;     // sweeps between cached-posterior coherence checks
  double cache_drift_tol = 1e-8;       // allowed cached-vs-fresh posterior drift
};

inline NumericPolicy& numeric_policy() {
  static NumericPolicy policy;
  return policy;
}

// Precondition breaches: the caller handed in something the contract forbids.
struct contract_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Invalid run-level configuration (CLI / config file level).
struct validation_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failures detected at run time.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct singularity_error : numeric_error {
  singularity_error(const std::string& what, double min_eig)
      : numeric_error(what + " (min eigenvalue " + std::to_string(min_eig) + ")"),
        min_eigenvalue(min_eig) {}
  double min_eigenvalue;
};

struct stationarity_error : numeric_error {
  using numeric_error::numeric_error;
};

struct rank_error : numeric_error {
  using numeric_error::numeric_error;
};

}  // namespace bnspec
