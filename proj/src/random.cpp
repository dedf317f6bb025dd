#include "rttseg/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rttseg/errors.hpp"
#include "rttseg/numeric.hpp"

namespace rttseg {

double Rng::uniform() {
  for (;;) {
    const double u = std::generate_canonical<double, 53>(engine_);
    if (u > 0.0 && u < 1.0) return u;
  }
}

double Rng::normal(double mean, double stddev) {
  std::normal_distribution<double> dist(mean, stddev);
  return dist(engine_);
}

double Rng::gamma(double shape, double scale) {
  std::gamma_distribution<double> dist(shape, scale);
  return dist(engine_);
}

double Rng::log_gamma(double shape) {
  // Gamma(a) = Gamma(a + 1) * U^(1/a) keeps small shapes out of underflow.
  if (shape < 1.0) {
    const double boosted = gamma(shape + 1.0);
    return std::log(boosted) + std::log(uniform()) / shape;
  }
  return std::log(gamma(shape));
}

double Rng::beta(double a, double b) {
  const double la = log_gamma(a);
  const double lb = log_gamma(b);
  const double m = std::max(la, lb);
  return std::exp(la - m) / (std::exp(la - m) + std::exp(lb - m));
}

bool Rng::bernoulli(double p) { return uniform() < p; }

std::uint64_t Rng::binomial(std::uint64_t n, double p) {
  if (n == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::binomial_distribution<std::uint64_t> dist(n, p);
  return dist(engine_);
}

std::size_t Rng::uniform_index(std::size_t n) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

std::size_t Rng::categorical_log(std::span<const double> log_weights) {
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  double total = 0.0;
  for (double lw : log_weights) total += std::exp(lw - top);
  double target = uniform() * total;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    target -= std::exp(log_weights[i] - top);
    if (target <= 0.0) return i;
  }
  // Rounding can leave a sliver; fall back to the last non-negligible entry.
  for (std::size_t i = log_weights.size(); i-- > 0;) {
    if (std::isfinite(log_weights[i])) return i;
  }
  return log_weights.size() - 1;
}

std::size_t Rng::categorical(std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double target = uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    target -= weights[i];
    if (target <= 0.0) return i;
  }
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return weights.size() - 1;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base ^ (stream * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<double> sample_gem(double alpha, std::size_t n, Rng& rng) {
  if (!(alpha > 0.0) || n == 0) {
    throw InvalidArgument("sample_gem: alpha must be > 0 and n >= 1");
  }
  std::vector<double> weights(n);
  double log_remaining = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    // eta ~ Beta(1, alpha) by inversion: log(1 - eta) = log(U) / alpha.
    const double log_keep = std::log(rng.uniform()) / alpha;
    const double eta = -std::expm1(log_keep);
    weights[k] = std::exp(log_remaining) * eta;
    log_remaining += log_keep;
  }
  return weights;
}

std::vector<double> sample_dirichlet(std::span<const double> concentration, Rng& rng) {
  if (concentration.size() < 2) {
    throw DimensionError("sample_dirichlet: need at least two entries");
  }
  std::vector<double> logs(concentration.size());
  for (std::size_t i = 0; i < concentration.size(); ++i) {
    if (!(concentration[i] > 0.0) || !std::isfinite(concentration[i])) {
      throw InvalidArgument("sample_dirichlet: concentration entries must be positive");
    }
    logs[i] = rng.log_gamma(concentration[i]);
  }
  const double norm = log_sum_exp(logs);
  std::vector<double> out(logs.size());
  for (std::size_t i = 0; i < logs.size(); ++i) out[i] = std::exp(logs[i] - norm);
  return out;
}

}  // namespace rttseg
