#pragma once

#include <vector>

#include "rttseg/nix.hpp"
#include "rttseg/random.hpp"

namespace rttseg {

struct MixtureComponent {
  double weight = 1.0;
  GaussParams params;
};

/// Finite Gaussian mixture; the emission form shared by the DPMM, the GMM
/// baseline and every HMM state.
struct GaussianMixture {
  std::vector<MixtureComponent> components;

  /// log sum_k w_k N(y; mu_k, sigma_k^2), evaluated with log-sum-exp.
  double logpdf(double y) const;
  double mean() const;
  double variance() const;
  double sample(Rng& rng) const;

  /// Sorts by descending weight and rescales weights to sum to one.
  void normalize();

  static GaussianMixture single(GaussParams params);
};

}  // namespace rttseg
