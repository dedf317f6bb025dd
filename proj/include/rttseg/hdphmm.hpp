#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rttseg/dpmm.hpp"
#include "rttseg/hmm.hpp"
#include "rttseg/nix.hpp"
#include "rttseg/random.hpp"
#include "rttseg/series.hpp"

namespace rttseg {

/// Which form of the collapsed transition factor drives the z_t update.
///
/// kCompact: the outgoing factor gets the sticky mass only when
///   z_{t-1} == k == z_{t+1}, and a new state is weighted by
///   alpha^2 beta_rem beta_{z_{t+1}} / (alpha + kappa)^2.
/// kExact: the fully marginalised direct-assignment conditional, with
///   kappa delta(k, z_{t+1}) + delta(z_{t-1}, k) delta(k, z_{t+1}) in the
///   outgoing numerator and the new-state weight
///   alpha^2 beta_rem beta_{z_{t+1}} / ((alpha + kappa)(alpha + kappa + n_{z_{t-1}.})).
enum class StateConditional { kCompact, kExact };

/// Gamma(shape, rate) priors on gamma and on alpha + kappa, and a Beta prior
/// on rho = kappa / (alpha + kappa).
struct Hyperprior {
  double gamma_shape = 1.0;
  double gamma_rate = 1.0;
  double alpha_kappa_shape = 1.0;
  double alpha_kappa_rate = 1.0;
  double rho_a = 10.0;
  double rho_b = 1.0;
};

struct HdpHmmConfig {
  double alpha = 1.0;
  double gamma = 1.0;
  double kappa = 10.0;
  /// Emission base measure; std::nullopt means noise_scale_prior() of the
  /// present values in time order.
  std::optional<NixParams> emission_prior;
  double emission_alpha = 1.0;
  std::size_t sweeps = 500;
  std::size_t burn_in = 200;
  std::uint64_t seed = 0;
  std::optional<Hyperprior> hyperprior;
  StateConditional conditional = StateConditional::kCompact;
  /// Metropolis-Hastings proposals per sweep that promote an emission cluster
  /// to a state of its own or fold a single-cluster state into another one.
  /// 0 leaves the plain single-site Gibbs sampler.
  std::size_t state_moves = 1;

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

/// Transition counts n_{jk} with cached row sums n_{j.}; grows and shrinks
/// with the state space.
class TransitionCounts {
 public:
  explicit TransitionCounts(std::size_t k = 0) : n_(k, std::vector<double>(k, 0.0)), rows_(k, 0.0) {}

  std::size_t size() const noexcept { return rows_.size(); }
  double operator()(std::size_t j, std::size_t k) const noexcept { return n_[j][k]; }
  double row_sum(std::size_t j) const noexcept { return rows_[j]; }

  void increment(std::size_t j, std::size_t k) noexcept {
    n_[j][k] += 1.0;
    rows_[j] += 1.0;
  }
  void decrement(std::size_t j, std::size_t k) noexcept {
    n_[j][k] -= 1.0;
    rows_[j] -= 1.0;
  }
  void add_state();
  /// Moves the last state into slot k and drops the last row and column.
  void remove_state(std::size_t k);

  static TransitionCounts recount(std::span<const std::size_t> z, std::size_t k);
  bool operator==(const TransitionCounts&) const = default;

 private:
  std::vector<std::vector<double>> n_;
  std::vector<double> rows_;
};

/// Unnormalised prior weights for z_t over the K existing states plus a new
/// one (last entry). `counts` must exclude the transitions touching step t;
/// `beta` holds K + 1 entries. A missing neighbour (t = 0 or t = T - 1) drops
/// the corresponding factor, and at t = 0 the incoming factor is beta itself.
std::vector<double> transition_weights(std::optional<std::size_t> prev,
                                       std::optional<std::size_t> next,
                                       const TransitionCounts& counts,
                                       std::span<const double> beta, double alpha, double kappa,
                                       StateConditional form);

/// Auxiliary table counts behind the beta update.
struct TableCounts {
  std::vector<double> column_totals;  // corrected m-bar_{.k}, including the initial step
  double tables = 0.0;                // sum of m_{jk} before the sticky override
  double overrides = 0.0;             // sum of override counts w_j
};

/// Mutable state of the direct-assignment Gibbs sampler for one series.
struct SamplerState {
  static constexpr std::size_t kNoCluster = std::numeric_limits<std::size_t>::max();

  StateSequence z;
  std::vector<std::size_t> cluster;  // emission cluster per step; kNoCluster when missing
  std::vector<double> beta;          // K + 1, last entry is the unallocated remainder
  TransitionCounts counts;
  std::vector<std::size_t> occupancy;
  std::vector<ClusterSet> emissions;
  double alpha = 1.0;
  double gamma = 1.0;
  double kappa = 0.0;

  std::size_t num_states() const noexcept { return occupancy.size(); }
};

/// Direct-assignment Gibbs sampler for the sticky HDP-HMM with DP Gaussian
/// mixture emissions.
class HdpHmmSampler {
 public:
  /// Starts with every step in a single state and every present value in a
  /// single emission cluster.
  HdpHmmSampler(const RegularSeries& series, const HdpHmmConfig& config, NixParams prior);

  /// Redraws every emission cluster by sequential urn insertion in time order,
  /// state by state.
  void seed_clusters(Rng& rng);

  /// Resamples z_t (and its emission cluster) from its full conditional and
  /// returns the new state id; may open a new state.
  std::size_t sample_state_at(std::size_t t, Rng& rng);

  /// Redraws (beta_1..beta_K, beta_rem) from its Dirichlet conditional given
  /// auxiliary table counts.
  void sample_beta(Rng& rng);
  TableCounts sample_tables(Rng& rng) const;

  /// One pass of Polya-urn updates of the emission clusters inside each state.
  void sample_emission_clusters(Rng& rng);

  /// Auxiliary-variable updates of gamma, alpha + kappa and rho.
  void sample_hyperparameters(const TableCounts& tables, Rng& rng);

  /// One split-or-merge proposal between states and emission clusters,
  /// accepted by the Metropolis-Hastings rule on the joint posterior. Returns
  /// whether the state changed.
  bool propose_state_move(Rng& rng);

  /// z pass, emission pass, state moves, beta, then hyperparameters.
  void sweep(Rng& rng);

  /// log p(z, emission partition, y | beta, alpha, kappa, lambda).
  double joint_log_posterior() const;

  /// Applies new_id = permutation[old_id] to every state-indexed quantity.
  void relabel(std::span<const std::size_t> permutation);

  /// Throws InconsistentState when counts, occupancy or emission statistics
  /// disagree with a recount from z, or beta leaves the simplex.
  void check_invariants() const;

  const SamplerState& state() const noexcept { return state_; }
  SamplerState& mutable_state() noexcept { return state_; }
  const NixParams& prior() const noexcept { return prior_; }
  std::size_t length() const noexcept { return values_.size(); }

 private:
  void remove_step(std::size_t t);
  void assign_step(std::size_t t, std::size_t k, Rng& rng);
  void drop_state(std::size_t k);
  std::size_t open_state(Rng& rng);
  void relabel_cluster(std::size_t state, std::size_t from, std::size_t to);
  void rebuild(SamplerState& s) const;
  static double joint_log_posterior_of(const SamplerState& s);

  std::vector<std::optional<double>> values_;
  HdpHmmConfig config_;
  NixParams prior_;
  StudentT base_;
  SamplerState state_;
  std::vector<double> scratch_;
};

struct SweepDiagnostic {
  std::size_t num_states = 0;
  double log_posterior = 0.0;
};

struct SegmentationResult {
  std::string series_id;
  RegularSeries series;
  StateSequence states;
  HmmModel model;
  double log_likelihood = 0.0;
  std::vector<SweepDiagnostic> diagnostics;
  /// Config actually used, with the emission prior resolved.
  HdpHmmConfig config;
  std::vector<std::size_t> components_per_state;
};

/// Runs the sampler, keeps the highest joint-posterior snapshot after burn-in
/// and turns it into a finite HMM whose states are ordered by occupancy.
/// Throws AllMissing when no value is present and TooShort when fewer than
/// two are.
SegmentationResult fit(const RegularSeries& series, const HdpHmmConfig& config);

}  // namespace rttseg
