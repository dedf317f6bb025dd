#include "rttseg/nix.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "rttseg/errors.hpp"
#include "rttseg/numeric.hpp"

namespace rttseg {

namespace {

double median_of(std::vector<double> values) {
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

}  // namespace

bool NixParams::valid() const noexcept {
  return std::isfinite(mu0) && std::isfinite(kappa0) && std::isfinite(nu0) &&
         std::isfinite(sigma0_sq) && kappa0 > 0.0 && nu0 > 0.0 && sigma0_sq > 0.0;
}

NixParams nix_posterior_from_stats(const NixParams& prior, const SuffStats& centered) {
  if (centered.count <= 0.0) return prior;
  const double n = centered.count;
  const double mean = centered.sum / n;
  const double scatter = std::max(0.0, centered.sum_sq - centered.sum * mean);
  NixParams post;
  post.kappa0 = prior.kappa0 + n;
  post.nu0 = prior.nu0 + n;
  post.mu0 = prior.mu0 + n * mean / post.kappa0;
  const double weighted =
      prior.nu0 * prior.sigma0_sq + scatter + prior.kappa0 * n / post.kappa0 * mean * mean;
  post.sigma0_sq = std::max(weighted / post.nu0, kVarianceFloor);
  return post;
}

NixParams nix_posterior(const NixParams& prior, std::span<const double> data) {
  if (data.empty()) return prior;
  // Two passes: exact centring keeps the scatter free of cancellation.
  double shifted_sum = 0.0;
  for (double y : data) shifted_sum += y - prior.mu0;
  const double n = static_cast<double>(data.size());
  const double shifted_mean = shifted_sum / n;
  double scatter = 0.0;
  for (double y : data) {
    const double d = y - prior.mu0 - shifted_mean;
    scatter += d * d;
  }
  SuffStats stats;
  stats.count = n;
  stats.sum = shifted_sum;
  stats.sum_sq = scatter + shifted_sum * shifted_mean;
  return nix_posterior_from_stats(prior, stats);
}

StudentT StudentT::predictive_of(const NixParams& p) {
  StudentT t;
  t.loc = p.mu0;
  t.dof = p.nu0;
  t.scale_sq = p.sigma0_sq * (1.0 + p.kappa0) / p.kappa0;
  t.log_norm = std::lgamma(0.5 * (t.dof + 1.0)) - std::lgamma(0.5 * t.dof) -
               0.5 * std::log(t.dof * std::numbers::pi * t.scale_sq);
  return t;
}

double StudentT::logpdf(double y) const noexcept {
  const double d = y - loc;
  return log_norm - 0.5 * (dof + 1.0) * std::log1p(d * d / (dof * scale_sq));
}

double nix_posterior_predictive_logpdf(const NixParams& params, double y) {
  return StudentT::predictive_of(params).logpdf(y);
}

double nix_log_marginal(const NixParams& prior, const SuffStats& centered) {
  if (centered.count <= 0.0) return 0.0;
  const NixParams post = nix_posterior_from_stats(prior, centered);
  return std::lgamma(0.5 * post.nu0) - std::lgamma(0.5 * prior.nu0) +
         0.5 * std::log(prior.kappa0 / post.kappa0) +
         0.5 * prior.nu0 * std::log(prior.nu0 * prior.sigma0_sq) -
         0.5 * post.nu0 * std::log(post.nu0 * post.sigma0_sq) -
         0.5 * centered.count * std::log(std::numbers::pi);
}

GaussParams sample_nix(const NixParams& params, Rng& rng) {
  // chi^2_nu = Gamma(nu / 2, 2)
  const double chi2 = rng.gamma(0.5 * params.nu0, 2.0);
  GaussParams g;
  g.sigma_sq = std::max(params.nu0 * params.sigma0_sq / chi2, kVarianceFloor);
  g.mu = rng.normal(params.mu0, std::sqrt(g.sigma_sq / params.kappa0));
  return g;
}

GaussParams nix_point_estimate(const NixParams& params) {
  GaussParams g;
  g.mu = params.mu0;
  g.sigma_sq = params.nu0 > 2.0 ? params.nu0 * params.sigma0_sq / (params.nu0 - 2.0)
                                : params.sigma0_sq;
  g.sigma_sq = std::max(g.sigma_sq, kVarianceFloor);
  return g;
}

GaussParams cluster_estimate(const NixParams& prior, const SuffStats& centered) {
  if (centered.count <= 0.0) return nix_point_estimate(prior);
  const double n = centered.count;
  const double mean = centered.sum / n;
  const double within = std::max(0.0, centered.sum_sq - n * mean * mean);
  GaussParams g;
  g.mu = prior.mu0 + n * mean / (prior.kappa0 + n);
  g.sigma_sq = std::max((prior.nu0 * prior.sigma0_sq + within) / (prior.nu0 + n), kVarianceFloor);
  return g;
}

NixParams default_prior(std::span<const double> data) {
  if (data.empty()) throw EmptyData("default_prior: no observations");
  std::vector<double> values(data.begin(), data.end());
  const double med = median_of(values);
  for (double& v : values) v = std::abs(v - med);
  double scale_sq = std::pow(median_of(values), 2);
  if (scale_sq < kVarianceFloor) {
    // More than half the points coincide; use the plain variance instead.
    double mean = 0.0;
    for (double y : data) mean += y;
    mean /= static_cast<double>(data.size());
    double var = 0.0;
    for (double y : data) var += (y - mean) * (y - mean);
    scale_sq = var / static_cast<double>(data.size());
  }
  NixParams p;
  p.mu0 = med;
  p.kappa0 = 0.01;
  p.nu0 = 2.0;
  p.sigma0_sq = std::max(scale_sq, kVarianceFloor);
  return p;
}

NixParams noise_scale_prior(std::span<const double> ordered) {
  NixParams p = default_prior(ordered);
  if (ordered.size() < 2) return p;
  std::vector<double> diffs;
  diffs.reserve(ordered.size() - 1);
  double mean_sq = 0.0;
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    const double d = ordered[i] - ordered[i - 1];
    diffs.push_back(std::abs(d));
    mean_sq += d * d;
  }
  mean_sq /= static_cast<double>(diffs.size());
  const double robust = 1.4826 * median_of(diffs) / std::sqrt(2.0);
  double scale_sq = robust * robust;
  if (scale_sq < kVarianceFloor) scale_sq = mean_sq / 2.0;
  if (scale_sq >= kVarianceFloor) p.sigma0_sq = scale_sq;
  return p;
}

}  // namespace rttseg
