#include "rttseg/dpmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rttseg/errors.hpp"
#include "rttseg/numeric.hpp"

namespace rttseg {

ClusterSet::ClusterSet(NixParams prior, double alpha)
    : prior_(prior),
      alpha_(alpha),
      log_alpha_(std::log(alpha)),
      base_(StudentT::predictive_of(prior)) {
  if (!prior.valid()) throw InvalidArgument("ClusterSet: invalid NIX prior");
  if (!(alpha > 0.0)) throw InvalidArgument("ClusterSet: alpha must be positive");
}

void ClusterSet::refresh(std::size_t c) {
  predictive_[c] = StudentT::predictive_of(nix_posterior_from_stats(prior_, stats_[c]));
}

void ClusterSet::add(double y, std::size_t c) {
  if (c == stats_.size()) {
    stats_.emplace_back();
    predictive_.emplace_back();
  }
  stats_[c].add(y - prior_.mu0);
  total_ += 1.0;
  refresh(c);
}

std::optional<std::size_t> ClusterSet::remove(double y, std::size_t c) {
  stats_[c].remove(y - prior_.mu0);
  total_ -= 1.0;
  if (stats_[c].count > 0.5) {
    refresh(c);
    return std::nullopt;
  }
  const std::size_t last = stats_.size() - 1;
  std::optional<std::size_t> moved;
  if (c != last) {
    stats_[c] = stats_[last];
    predictive_[c] = predictive_[last];
    moved = last;
  }
  stats_.pop_back();
  predictive_.pop_back();
  return moved;
}

void ClusterSet::assignment_log_weights(double y, std::vector<double>& out) const {
  out.resize(stats_.size() + 1);
  for (std::size_t c = 0; c < stats_.size(); ++c) {
    out[c] = std::log(stats_[c].count) + predictive_[c].logpdf(y);
  }
  out.back() = log_alpha_ + base_.logpdf(y);
}

double ClusterSet::log_predictive(double y) const {
  double acc = log_alpha_ + base_.logpdf(y);
  for (std::size_t c = 0; c < stats_.size(); ++c) {
    acc = log_add(acc, std::log(stats_[c].count) + predictive_[c].logpdf(y));
  }
  return acc - std::log(total_ + alpha_);
}

double ClusterSet::log_joint() const {
  if (stats_.empty()) return 0.0;
  double lp = std::lgamma(alpha_) - std::lgamma(alpha_ + total_) +
              static_cast<double>(stats_.size()) * log_alpha_;
  for (const auto& s : stats_) lp += std::lgamma(s.count) + nix_log_marginal(prior_, s);
  return lp;
}

GaussianMixture ClusterSet::to_mixture() const {
  GaussianMixture m;
  for (const auto& s : stats_) {
    m.components.push_back({s.count / total_, cluster_estimate(prior_, s)});
  }
  m.normalize();
  return m;
}

void ClusterSet::rebuild(std::span<const double> data, std::span<const std::size_t> labels) {
  const std::size_t k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  stats_.assign(k, SuffStats{});
  predictive_.assign(k, StudentT{});
  total_ = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    stats_[labels[i]].add(data[i] - prior_.mu0);
    total_ += 1.0;
  }
  for (std::size_t c = 0; c < k; ++c) refresh(c);
}

DpmmState DpmmState::initial(std::span<const double> data, NixParams prior, double alpha_dp) {
  DpmmState state{std::vector<std::size_t>(data.size(), 0), ClusterSet(prior, alpha_dp)};
  state.clusters.rebuild(data, state.assignments);
  return state;
}

DpmmState DpmmState::sequential(std::span<const double> data, NixParams prior, double alpha_dp,
                                Rng& rng) {
  DpmmState state{{}, ClusterSet(prior, alpha_dp)};
  state.assignments.reserve(data.size());
  std::vector<double> log_w;
  for (double y : data) {
    state.clusters.assignment_log_weights(y, log_w);
    const std::size_t c = rng.categorical_log(log_w);
    state.clusters.add(y, c);
    state.assignments.push_back(c);
  }
  return state;
}

void check_consistency(const DpmmState& state, std::span<const double> data) {
  if (state.assignments.size() != data.size()) {
    throw InconsistentState("assignment count differs from data length");
  }
  const auto& cs = state.clusters;
  std::vector<SuffStats> recount(cs.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t c = state.assignments[i];
    if (c >= cs.size()) throw InconsistentState("cluster id out of range");
    recount[c].add(data[i] - cs.prior().mu0);
  }
  auto close = [](double a, double b) {
    return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
  };
  for (std::size_t c = 0; c < cs.size(); ++c) {
    const auto& s = cs.stats(c);
    if (recount[c].count < 1.0) throw InconsistentState("empty cluster");
    if (recount[c].count != s.count || !close(recount[c].sum, s.sum) ||
        !close(recount[c].sum_sq, s.sum_sq)) {
      throw InconsistentState("cluster statistics differ from recount");
    }
  }
}

void dpmm_gibbs_sweep_inplace(DpmmState& state, std::span<const double> data, Rng& rng) {
  check_consistency(state, data);
  auto& labels = state.assignments;
  std::vector<double> log_w;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (auto moved = state.clusters.remove(data[i], labels[i])) {
      const std::size_t into = labels[i];
      for (auto& l : labels) {
        if (l == *moved) l = into;
      }
    }
    state.clusters.assignment_log_weights(data[i], log_w);
    labels[i] = rng.categorical_log(log_w);
    state.clusters.add(data[i], labels[i]);
  }
}

DpmmState dpmm_gibbs_sweep(DpmmState state, std::span<const double> data, Rng& rng) {
  dpmm_gibbs_sweep_inplace(state, data, rng);
  return state;
}

DpmmFit dpmm_fit_labeled(std::span<const double> data, double alpha_dp, const NixParams& prior,
                         std::size_t sweeps, std::size_t burn_in, Rng& rng) {
  if (data.empty()) throw EmptyData("dpmm_fit: no observations");
  if (sweeps <= burn_in) throw InvalidArgument("dpmm_fit: sweeps must exceed burn_in");

  DpmmState state = DpmmState::sequential(data, prior, alpha_dp, rng);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_labels;
  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    dpmm_gibbs_sweep_inplace(state, data, rng);
    if (sweep < burn_in) continue;
    const double lp = state.clusters.log_joint();
    if (lp > best) {
      best = lp;
      best_labels = state.assignments;
    }
  }

  ClusterSet snapshot(prior, alpha_dp);
  snapshot.rebuild(data, best_labels);
  // Order components by size so labels line up with the sorted mixture.
  std::vector<std::size_t> order(snapshot.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return snapshot.count(a) > snapshot.count(b); });
  std::vector<std::size_t> rank(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;

  DpmmFit fit;
  fit.model.alpha_dp = alpha_dp;
  fit.log_posterior = best;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& s = snapshot.stats(order[r]);
    fit.model.mixture.components.push_back(
        {s.count / snapshot.total(), cluster_estimate(prior, s)});
  }
  fit.labels.reserve(best_labels.size());
  for (std::size_t l : best_labels) fit.labels.push_back(rank[l]);
  return fit;
}

DpmmModel dpmm_fit(std::span<const double> data, double alpha_dp, const NixParams& prior,
                   std::size_t sweeps, std::size_t burn_in, Rng& rng) {
  return dpmm_fit_labeled(data, alpha_dp, prior, sweeps, burn_in, rng).model;
}

double dpmm_logpdf(const DpmmModel& model, double y) { return model.mixture.logpdf(y); }

}  // namespace rttseg
