#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace rttseg {

/// Seeded random source shared by every sampler in the library.
///
/// Identical seed and identical call sequence give identical draws. An Rng is
/// single-owner; concurrent work should use independent instances obtained
/// from derive_seed().
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal(double mean = 0.0, double stddev = 1.0);
  /// Gamma(shape, scale) with E = shape * scale.
  double gamma(double shape, double scale = 1.0);
  /// log of a Gamma(shape, 1) variate; stays finite for very small shapes.
  double log_gamma(double shape);
  double beta(double a, double b);
  bool bernoulli(double p);
  std::uint64_t binomial(std::uint64_t n, double p);
  std::size_t uniform_index(std::size_t n);

  /// Draws an index with probability proportional to exp(log_weights[i]).
  std::size_t categorical_log(std::span<const double> log_weights);
  /// Draws an index with probability proportional to weights[i] >= 0.
  std::size_t categorical(std::span<const double> weights);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// SplitMix64 finaliser of (base, stream); used for per-series and
/// per-request seeds so that results do not depend on scheduling order.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Stable 64-bit FNV-1a hash, used to turn series ids into seed streams.
std::uint64_t stable_hash(std::string_view text);

/// First `n` stick-breaking weights of GEM(alpha).
std::vector<double> sample_gem(double alpha, std::size_t n, Rng& rng);

/// Draw from Dirichlet(concentration). Throws DimensionError on fewer than
/// two entries and InvalidArgument on a non-positive entry.
std::vector<double> sample_dirichlet(std::span<const double> concentration, Rng& rng);

}  // namespace rttseg
