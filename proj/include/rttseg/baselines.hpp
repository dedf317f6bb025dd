#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "rttseg/hmm.hpp"
#include "rttseg/mixture.hpp"
#include "rttseg/random.hpp"
#include "rttseg/series.hpp"

namespace rttseg {

enum class BaselineKind { kGmm, kHmm };

/// Outcome of one parametric fit.
struct FitReport {
  BaselineKind kind = BaselineKind::kGmm;
  std::size_t k = 0;
  double log_likelihood = 0.0;
  std::size_t n_params = 0;
  std::size_t n_obs = 0;
  double bic = 0.0;
  std::size_t iterations_used = 0;
  bool converged = false;
  GaussianMixture mixture;  // kGmm
  HmmModel hmm;             // kHmm, one Gaussian per state
  /// Log-likelihood before each M-step.
  std::vector<double> trace;
};

/// 3k - 1: k means, k variances, k - 1 free weights.
std::size_t gmm_param_count(std::size_t k);
/// k(k - 1) transitions + (k - 1) initial + 2k emission parameters.
std::size_t hmm_param_count(std::size_t k);
/// -2 log L + n_params ln(n_obs).
double bic_value(double log_likelihood, std::size_t n_params, std::size_t n_obs);

struct EmOptions {
  std::size_t max_iters = 500;
  double tol = 1e-6;  // relative change of the log-likelihood
};

/// EM for a k-component Gaussian mixture with k-means++ seeding. A component
/// that collapses onto fewer than two points triggers a fresh seeding, up to
/// three times; after that the fit is reported unconverged.
FitReport gmm_em_fit(std::span<const double> data, std::size_t k, const EmOptions& options,
                     Rng& rng);

/// Baum-Welch for a k-state HMM with Gaussian emissions; missing steps carry
/// no emission factor. The reported likelihood is forward_log_likelihood.
FitReport hmm_baum_welch_fit(const RegularSeries& series, std::size_t k,
                             const EmOptions& options, Rng& rng);

using FitFn = std::function<FitReport(std::size_t k, Rng& rng)>;

/// Fits every k with `restarts` independent seeds, keeps the best likelihood
/// per k and returns the smallest BIC (ties go to the smaller k). Errors are
/// rethrown only when every k failed.
FitReport select_k_by_bic(const FitFn& fit, std::span<const std::size_t> k_range, Rng& rng,
                          std::size_t restarts = 3);

/// Most probable component per present observation; missing steps get
/// std::nullopt.
std::vector<std::optional<std::size_t>> gmm_labels(const GaussianMixture& mixture,
                                                   const RegularSeries& series);

}  // namespace rttseg
