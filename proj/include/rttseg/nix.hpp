#pragma once

#include <span>

#include "rttseg/random.hpp"

namespace rttseg {

/// Normal-Inverse-chi^2 hyperparameters for a Gaussian with unknown mean and
/// variance: sigma^2 ~ Scaled-Inv-chi^2(nu0, sigma0_sq), mu | sigma^2 ~
/// N(mu0, sigma^2 / kappa0).
struct NixParams {
  double mu0 = 0.0;
  double kappa0 = 0.01;
  double nu0 = 2.0;
  double sigma0_sq = 1.0;

  bool valid() const noexcept;
  bool operator==(const NixParams&) const = default;
};

struct GaussParams {
  double mu = 0.0;
  double sigma_sq = 1.0;

  bool operator==(const GaussParams&) const = default;
};

/// Sufficient statistics of a set of observations, accumulated relative to a
/// fixed reference point so that long add/remove sequences stay accurate.
struct SuffStats {
  double count = 0.0;
  double sum = 0.0;     // sum of (y - ref)
  double sum_sq = 0.0;  // sum of (y - ref)^2

  void add(double centered) noexcept {
    count += 1.0;
    sum += centered;
    sum_sq += centered * centered;
  }
  void remove(double centered) noexcept {
    count -= 1.0;
    sum -= centered;
    sum_sq -= centered * centered;
  }
};

/// Conjugate update from statistics centred on prior.mu0.
NixParams nix_posterior_from_stats(const NixParams& prior, const SuffStats& centered);

/// Exact conjugate posterior after observing `data`. Empty data returns the
/// prior unchanged.
NixParams nix_posterior(const NixParams& prior, std::span<const double> data);

/// Location-scale Student-t parameters of the posterior predictive, with the
/// log normalising constant precomputed so repeated evaluation is cheap.
struct StudentT {
  double loc = 0.0;
  double scale_sq = 1.0;
  double dof = 1.0;
  double log_norm = 0.0;

  static StudentT predictive_of(const NixParams& params);
  double logpdf(double y) const noexcept;
};

/// log of the NIX-marginalised Gaussian density at y (a Student-t).
double nix_posterior_predictive_logpdf(const NixParams& params, double y);

/// log p(data) with (mu, sigma^2) integrated against the NIX prior, given
/// statistics centred on prior.mu0.
double nix_log_marginal(const NixParams& prior, const SuffStats& centered);

/// Draws sigma^2 from its scaled inverse chi^2 marginal, then mu | sigma^2.
GaussParams sample_nix(const NixParams& params, Rng& rng);

/// Posterior-mean point estimate (E[mu], E[sigma^2]); falls back to the scale
/// parameter when nu <= 2 leaves E[sigma^2] undefined.
GaussParams nix_point_estimate(const NixParams& params);

/// Parameters reported for a fitted cluster: the posterior mean of mu and the
/// prior-regularised within-cluster variance (nu0 sigma0_sq + SS) / (nu0 + n).
/// Unlike E[sigma^2], the variance leaves out the term that grows with the
/// distance between the cluster mean and mu0. Empty stats give
/// nix_point_estimate(prior).
GaussParams cluster_estimate(const NixParams& prior, const SuffStats& centered);

/// Weakly informative, scale-adaptive prior: mu0 = median, sigma0_sq = MAD^2,
/// kappa0 = 0.01, nu0 = 2. Throws EmptyData on an empty span.
NixParams default_prior(std::span<const double> data);

/// Same location and counts as default_prior, but sigma0_sq comes from the
/// step-to-step noise of a time-ordered sequence: (1.4826 median|diff| / sqrt 2)^2,
/// falling back to mean(diff^2) / 2 and then to default_prior's scale.
NixParams noise_scale_prior(std::span<const double> ordered);

}  // namespace rttseg
