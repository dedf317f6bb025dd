#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rttseg/mixture.hpp"
#include "rttseg/nix.hpp"
#include "rttseg/random.hpp"

namespace rttseg {

/// Clusters of a Dirichlet-process Gaussian mixture with the component
/// parameters integrated out under a NIX base measure.
///
/// Holds per-cluster sufficient statistics plus a cached Student-t predictive
/// for each cluster, so evaluating the Polya-urn conditional of a point costs
/// one log1p per cluster. Cluster ids are dense in [0, size()).
class ClusterSet {
 public:
  ClusterSet(NixParams prior, double alpha);

  std::size_t size() const noexcept { return stats_.size(); }
  double total() const noexcept { return total_; }
  double count(std::size_t c) const noexcept { return stats_[c].count; }
  const SuffStats& stats(std::size_t c) const noexcept { return stats_[c]; }
  const NixParams& prior() const noexcept { return prior_; }
  double alpha() const noexcept { return alpha_; }

  /// Adds y to cluster c; c == size() opens a new cluster.
  void add(double y, std::size_t c);

  /// Removes y from cluster c. If c becomes empty the last cluster is moved
  /// into slot c and its former id is returned so the caller can relabel.
  std::optional<std::size_t> remove(double y, std::size_t c);

  /// Unnormalised log weights of the collapsed conditional for y: entry c is
  /// log(n_c) + log p(y | cluster c), the final entry log(alpha) + log I(y).
  void assignment_log_weights(double y, std::vector<double>& out) const;

  /// log p(y | current members), i.e. the urn-weighted mixture of the
  /// cluster predictives and the bare-prior predictive.
  double log_predictive(double y) const;

  /// log P(partition | alpha) + sum of cluster marginal likelihoods.
  double log_joint() const;

  /// Posterior-mean component estimates, weights n_c / n.
  GaussianMixture to_mixture() const;

  /// Rebuilds all statistics from scratch.
  void rebuild(std::span<const double> data, std::span<const std::size_t> labels);

 private:
  void refresh(std::size_t c);

  NixParams prior_;
  double alpha_;
  double log_alpha_;
  StudentT base_;
  double total_ = 0.0;
  std::vector<SuffStats> stats_;
  std::vector<StudentT> predictive_;
};

/// Gibbs state of a standalone DP mixture.
struct DpmmState {
  std::vector<std::size_t> assignments;
  ClusterSet clusters;

  /// Every observation in a single cluster.
  static DpmmState initial(std::span<const double> data, NixParams prior, double alpha_dp);

  /// Observations inserted one at a time, each drawn from the urn conditional
  /// given those already placed.
  static DpmmState sequential(std::span<const double> data, NixParams prior, double alpha_dp,
                              Rng& rng);
};

/// Throws InconsistentState unless `state` matches a recount over `data`
/// (ids dense, no empty cluster, sums equal within 1e-9 relative).
void check_consistency(const DpmmState& state, std::span<const double> data);

/// One collapsed Gibbs pass over every observation in index order.
DpmmState dpmm_gibbs_sweep(DpmmState state, std::span<const double> data, Rng& rng);
void dpmm_gibbs_sweep_inplace(DpmmState& state, std::span<const double> data, Rng& rng);

struct DpmmModel {
  GaussianMixture mixture;  // sorted by descending weight
  double alpha_dp = 1.0;
};

struct DpmmFit {
  DpmmModel model;
  std::vector<std::size_t> labels;  // component index into model.mixture per observation
  double log_posterior = 0.0;
};

DpmmModel dpmm_fit(std::span<const double> data, double alpha_dp, const NixParams& prior,
                   std::size_t sweeps, std::size_t burn_in, Rng& rng);
DpmmFit dpmm_fit_labeled(std::span<const double> data, double alpha_dp, const NixParams& prior,
                         std::size_t sweeps, std::size_t burn_in, Rng& rng);

double dpmm_logpdf(const DpmmModel& model, double y);

}  // namespace rttseg
