#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rttseg/hdphmm.hpp"
#include "rttseg/random.hpp"

namespace rttseg {

struct LikelihoodPair {
  std::string series_id;
  double observed_loglik = 0.0;
  double simulated_loglik = 0.0;
  std::size_t length = 0;
};

/// For each result: simulate a series of the same length from its model,
/// blank the steps that are missing in the observed series, and evaluate
/// both with forward_log_likelihood. Result i draws from
/// derive_seed(base, i) where base comes from `rng`, so the output does not
/// depend on `threads`.
std::vector<LikelihoodPair> likelihood_pairs(std::span<const SegmentationResult> results, Rng& rng,
                                             std::size_t threads = 1);

/// Sorted observed log-likelihoods against sorted simulated ones.
/// Throws TooFew on fewer than two pairs.
std::vector<std::pair<double, double>> qq_points(std::span<const LikelihoodPair> pairs);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::span<const double> a, std::span<const double> b);

/// Asymptotic critical value c(level) sqrt((n + m) / (n m)) with
/// c(level) = sqrt(-ln(level / 2) / 2).
double ks_critical_value(std::size_t n, std::size_t m, double level = 0.01);

/// CSV with header `observed,simulated`, one row per pair in input order.
void write_pairs_csv(std::ostream& out, std::span<const LikelihoodPair> pairs);

}  // namespace rttseg
