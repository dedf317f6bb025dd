#include "rttseg/hdphmm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rttseg/errors.hpp"
#include "rttseg/numeric.hpp"

namespace rttseg {

namespace {

constexpr std::size_t kNoState = std::numeric_limits<std::size_t>::max();

double beta_remainder(std::span<const double> beta) { return beta.back(); }

}  // namespace

void HdpHmmConfig::validate() const {
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  if (!(kappa >= 0.0)) throw InvalidArgument("kappa must be non-negative");
  if (!(emission_alpha > 0.0)) throw InvalidArgument("emission_alpha must be positive");
  if (sweeps <= burn_in) throw InvalidArgument("sweeps must exceed burn_in");
  if (emission_prior && !emission_prior->valid()) throw InvalidArgument("invalid emission prior");
}

void TransitionCounts::add_state() {
  for (auto& row : n_) row.push_back(0.0);
  n_.emplace_back(rows_.size() + 1, 0.0);
  rows_.push_back(0.0);
}

void TransitionCounts::remove_state(std::size_t k) {
  const std::size_t last = rows_.size() - 1;
  if (k != last) {
    n_[k] = n_[last];
    rows_[k] = rows_[last];
    for (auto& row : n_) row[k] = row[last];
  }
  n_.pop_back();
  rows_.pop_back();
  for (auto& row : n_) row.pop_back();
}

TransitionCounts TransitionCounts::recount(std::span<const std::size_t> z, std::size_t k) {
  TransitionCounts c(k);
  for (std::size_t t = 1; t < z.size(); ++t) c.increment(z[t - 1], z[t]);
  return c;
}

std::vector<double> transition_weights(std::optional<std::size_t> prev,
                                       std::optional<std::size_t> next,
                                       const TransitionCounts& counts,
                                       std::span<const double> beta, double alpha, double kappa,
                                       StateConditional form) {
  const std::size_t k_states = counts.size();
  std::vector<double> w(k_states + 1);
  const double ak = alpha + kappa;
  for (std::size_t k = 0; k < k_states; ++k) {
    const bool from_self = prev && *prev == k;
    double in = beta[k];
    if (prev) {
      in = (alpha * beta[k] + counts(*prev, k) + (from_self ? kappa : 0.0)) /
           (ak + counts.row_sum(*prev));
    }
    double out = 1.0;
    if (next) {
      const bool to_next = *next == k;
      double sticky = 0.0;
      if (form == StateConditional::kCompact) {
        sticky = from_self && to_next ? kappa : 0.0;
      } else {
        sticky = (to_next ? kappa : 0.0) + (from_self && to_next ? 1.0 : 0.0);
      }
      out = (alpha * beta[*next] + counts(k, *next) + sticky) /
            (ak + counts.row_sum(k) + (from_self ? 1.0 : 0.0));
    }
    w[k] = in * out;
  }
  const double rem = beta_remainder(beta);
  double in = rem;
  if (prev) {
    in = form == StateConditional::kCompact ? alpha * rem / ak
                                            : alpha * rem / (ak + counts.row_sum(*prev));
  }
  const double out = next ? alpha * beta[*next] / ak : 1.0;
  w[k_states] = in * out;
  return w;
}

HdpHmmSampler::HdpHmmSampler(const RegularSeries& series, const HdpHmmConfig& config,
                             NixParams prior)
    : values_(series.values),
      config_(config),
      prior_(prior),
      base_(StudentT::predictive_of(prior)) {
  config_.validate();
  if (values_.empty()) throw TooShort("series is empty");
  const std::size_t n = values_.size();
  state_.alpha = config.alpha;
  state_.gamma = config.gamma;
  state_.kappa = config.kappa;
  state_.z.assign(n, 0);
  state_.cluster.assign(n, SamplerState::kNoCluster);
  state_.beta = {0.5, 0.5};
  state_.counts = TransitionCounts::recount(state_.z, 1);
  state_.occupancy = {n};
  state_.emissions.emplace_back(prior_, config_.emission_alpha);
  for (std::size_t t = 0; t < n; ++t) {
    if (values_[t]) {
      state_.cluster[t] = 0;
      state_.emissions[0].add(*values_[t], 0);
    }
  }
}

void HdpHmmSampler::seed_clusters(Rng& rng) {
  auto& s = state_;
  for (auto& em : s.emissions) em = ClusterSet(prior_, config_.emission_alpha);
  for (std::size_t t = 0; t < values_.size(); ++t) {
    if (!values_[t]) continue;
    auto& em = s.emissions[s.z[t]];
    em.assignment_log_weights(*values_[t], scratch_);
    s.cluster[t] = rng.categorical_log(scratch_);
    em.add(*values_[t], s.cluster[t]);
  }
}

void HdpHmmSampler::relabel_cluster(std::size_t state, std::size_t from, std::size_t to) {
  for (std::size_t t = 0; t < values_.size(); ++t) {
    if (state_.z[t] == state && state_.cluster[t] == from) state_.cluster[t] = to;
  }
}

void HdpHmmSampler::drop_state(std::size_t k) {
  auto& s = state_;
  const std::size_t last = s.num_states() - 1;
  s.beta.back() += s.beta[k];
  if (k != last) {
    s.beta[k] = s.beta[last];
    s.emissions[k] = std::move(s.emissions[last]);
    s.occupancy[k] = s.occupancy[last];
    for (auto& zt : s.z) {
      if (zt == last) zt = k;
    }
  }
  s.counts.remove_state(k);
  s.beta.erase(s.beta.begin() + static_cast<std::ptrdiff_t>(last));
  s.emissions.pop_back();
  s.occupancy.pop_back();
}

std::size_t HdpHmmSampler::open_state(Rng& rng) {
  auto& s = state_;
  const double b = rng.beta(1.0, s.gamma);
  const double rem = s.beta.back();
  s.beta.back() = b * rem;
  s.beta.push_back((1.0 - b) * rem);
  s.counts.add_state();
  s.occupancy.push_back(0);
  s.emissions.emplace_back(prior_, config_.emission_alpha);
  return s.num_states() - 1;
}

void HdpHmmSampler::remove_step(std::size_t t) {
  auto& s = state_;
  const std::size_t k = s.z[t];
  if (values_[t]) {
    if (auto moved = s.emissions[k].remove(*values_[t], s.cluster[t])) {
      relabel_cluster(k, *moved, s.cluster[t]);
    }
    s.cluster[t] = SamplerState::kNoCluster;
  }
  if (t > 0) s.counts.decrement(s.z[t - 1], k);
  if (t + 1 < values_.size()) s.counts.decrement(k, s.z[t + 1]);
  s.z[t] = kNoState;
  if (--s.occupancy[k] == 0) drop_state(k);
}

void HdpHmmSampler::assign_step(std::size_t t, std::size_t k, Rng& rng) {
  auto& s = state_;
  s.z[t] = k;
  if (t > 0) s.counts.increment(s.z[t - 1], k);
  if (t + 1 < values_.size()) s.counts.increment(k, s.z[t + 1]);
  ++s.occupancy[k];
  if (values_[t]) {
    s.emissions[k].assignment_log_weights(*values_[t], scratch_);
    const std::size_t c = rng.categorical_log(scratch_);
    s.emissions[k].add(*values_[t], c);
    s.cluster[t] = c;
  }
}

std::size_t HdpHmmSampler::sample_state_at(std::size_t t, Rng& rng) {
  remove_step(t);
  auto& s = state_;
  const std::optional<std::size_t> prev = t > 0 ? std::optional(s.z[t - 1]) : std::nullopt;
  const std::optional<std::size_t> next =
      t + 1 < values_.size() ? std::optional(s.z[t + 1]) : std::nullopt;
  std::vector<double> log_w =
      transition_weights(prev, next, s.counts, s.beta, s.alpha, s.kappa, config_.conditional);
  const std::size_t k_states = s.num_states();
  for (std::size_t k = 0; k <= k_states; ++k) {
    log_w[k] = std::log(log_w[k]);
    if (values_[t]) {
      log_w[k] += k < k_states ? s.emissions[k].log_predictive(*values_[t])
                               : base_.logpdf(*values_[t]);
    }
  }
  std::size_t k = rng.categorical_log(log_w);
  if (k == k_states) k = open_state(rng);
  assign_step(t, k, rng);
  return k;
}

TableCounts HdpHmmSampler::sample_tables(Rng& rng) const {
  const auto& s = state_;
  const std::size_t k_states = s.num_states();
  TableCounts out;
  out.column_totals.assign(k_states, 0.0);
  const double rho = s.kappa / (s.alpha + s.kappa);
  for (std::size_t j = 0; j < k_states; ++j) {
    for (std::size_t k = 0; k < k_states; ++k) {
      const double n = s.counts(j, k);
      if (n <= 0.0) continue;
      const double conc = s.alpha * s.beta[k] + (j == k ? s.kappa : 0.0);
      double m = 0.0;
      for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
        if (rng.bernoulli(conc / (static_cast<double>(i) + conc))) m += 1.0;
      }
      out.tables += m;
      if (j == k && m > 0.0 && rho > 0.0) {
        const double w = static_cast<double>(rng.binomial(
            static_cast<std::uint64_t>(m), rho / (rho + s.beta[j] * (1.0 - rho))));
        out.overrides += w;
        m -= w;
      }
      out.column_totals[k] += m;
    }
  }
  // The first step is a direct draw from beta: one table of its own.
  if (!s.z.empty() && k_states > 0) out.column_totals[s.z.front()] += 1.0;
  return out;
}

void HdpHmmSampler::sample_beta(Rng& rng) {
  if (state_.num_states() == 0) {
    state_.beta = {1.0};
    return;
  }
  const TableCounts tables = sample_tables(rng);
  std::vector<double> conc(tables.column_totals);
  for (double& c : conc) c = std::max(c, 1e-10);
  conc.push_back(state_.gamma);
  state_.beta = sample_dirichlet(conc, rng);
}

void HdpHmmSampler::sample_hyperparameters(const TableCounts& tables, Rng& rng) {
  if (!config_.hyperprior) return;
  const Hyperprior& hp = *config_.hyperprior;
  auto& s = state_;
  const std::size_t k_states = s.num_states();

  // alpha + kappa
  double ak = s.alpha + s.kappa;
  double sum_log_r = 0.0;
  double sum_s = 0.0;
  for (std::size_t j = 0; j < k_states; ++j) {
    const double n = s.counts.row_sum(j);
    if (n <= 0.0) continue;
    sum_log_r += std::log(rng.beta(ak + 1.0, n));
    if (rng.bernoulli(n / (n + ak))) sum_s += 1.0;
  }
  ak = rng.gamma(std::max(hp.alpha_kappa_shape + tables.tables - sum_s, 1e-10),
                 1.0 / (hp.alpha_kappa_rate - sum_log_r));

  // rho = kappa / (alpha + kappa)
  const double rho = rng.beta(hp.rho_a + tables.overrides,
                              hp.rho_b + std::max(tables.tables - tables.overrides, 0.0));
  s.kappa = rho * ak;
  s.alpha = std::max((1.0 - rho) * ak, 1e-10);

  // gamma
  double m_bar = 0.0;
  for (double c : tables.column_totals) m_bar += c;
  if (m_bar > 0.0) {
    const double eta = rng.beta(s.gamma + 1.0, m_bar);
    const double rate = hp.gamma_rate - std::log(eta);
    const double k = static_cast<double>(k_states);
    const double odds = (hp.gamma_shape + k - 1.0) / (m_bar * rate);
    const double shape = rng.bernoulli(odds / (1.0 + odds)) ? hp.gamma_shape + k
                                                            : hp.gamma_shape + k - 1.0;
    s.gamma = rng.gamma(std::max(shape, 1e-10), 1.0 / rate);
  }
}

void HdpHmmSampler::sample_emission_clusters(Rng& rng) {
  auto& s = state_;
  for (std::size_t t = 0; t < values_.size(); ++t) {
    if (!values_[t]) continue;
    const double y = *values_[t];
    auto& em = s.emissions[s.z[t]];
    if (auto moved = em.remove(y, s.cluster[t])) relabel_cluster(s.z[t], *moved, s.cluster[t]);
    em.assignment_log_weights(y, scratch_);
    s.cluster[t] = rng.categorical_log(scratch_);
    em.add(y, s.cluster[t]);
  }
}

void HdpHmmSampler::sweep(Rng& rng) {
  for (std::size_t t = 0; t < values_.size(); ++t) sample_state_at(t, rng);
  sample_emission_clusters(rng);
  for (std::size_t i = 0; i < config_.state_moves; ++i) propose_state_move(rng);
  if (config_.hyperprior) {
    const TableCounts tables = sample_tables(rng);
    std::vector<double> conc(tables.column_totals);
    for (double& c : conc) c = std::max(c, 1e-10);
    conc.push_back(state_.gamma);
    state_.beta = sample_dirichlet(conc, rng);
    sample_hyperparameters(tables, rng);
  } else {
    sample_beta(rng);
  }
}

double HdpHmmSampler::joint_log_posterior_of(const SamplerState& s) {
  const std::size_t k_states = s.num_states();
  if (k_states == 0) return 0.0;
  double lp = std::log(s.beta[s.z.front()]);
  const double ak = s.alpha + s.kappa;
  for (std::size_t j = 0; j < k_states; ++j) {
    const double row = s.counts.row_sum(j);
    if (row <= 0.0) continue;
    lp += std::lgamma(ak) - std::lgamma(ak + row);
    for (std::size_t k = 0; k < k_states; ++k) {
      const double n = s.counts(j, k);
      if (n <= 0.0) continue;
      const double conc = s.alpha * s.beta[k] + (j == k ? s.kappa : 0.0);
      lp += std::lgamma(conc + n) - std::lgamma(conc);
    }
  }
  for (const auto& em : s.emissions) lp += em.log_joint();
  return lp;
}

double HdpHmmSampler::joint_log_posterior() const { return joint_log_posterior_of(state_); }

void HdpHmmSampler::rebuild(SamplerState& s) const {
  const std::size_t k_states = s.beta.size() - 1;
  s.occupancy.assign(k_states, 0);
  for (std::size_t zt : s.z) ++s.occupancy[zt];
  s.counts = TransitionCounts::recount(s.z, k_states);

  std::vector<std::vector<std::size_t>> remap(k_states);
  std::vector<std::size_t> next_id(k_states, 0);
  std::vector<std::vector<double>> data(k_states);
  std::vector<std::vector<std::size_t>> labels(k_states);
  for (std::size_t t = 0; t < values_.size(); ++t) {
    if (!values_[t]) continue;
    const std::size_t k = s.z[t];
    auto& r = remap[k];
    if (s.cluster[t] >= r.size()) r.resize(s.cluster[t] + 1, SamplerState::kNoCluster);
    if (r[s.cluster[t]] == SamplerState::kNoCluster) r[s.cluster[t]] = next_id[k]++;
    s.cluster[t] = r[s.cluster[t]];
    data[k].push_back(*values_[t]);
    labels[k].push_back(s.cluster[t]);
  }
  s.emissions.assign(k_states, ClusterSet(prior_, config_.emission_alpha));
  for (std::size_t k = 0; k < k_states; ++k) s.emissions[k].rebuild(data[k], labels[k]);
}

namespace {

std::size_t split_candidates(const SamplerState& s) {
  std::size_t n = 0;
  for (const auto& em : s.emissions) {
    if (em.size() >= 2) n += em.size();
  }
  return n;
}

std::size_t merge_candidates(const SamplerState& s) {
  std::size_t singles = 0;
  for (const auto& em : s.emissions) {
    if (em.size() == 1) ++singles;
  }
  return s.num_states() > 1 ? singles * (s.num_states() - 1) : 0;
}

}  // namespace

bool HdpHmmSampler::propose_state_move(Rng& rng) {
  const SamplerState& cur = state_;
  const std::size_t k_states = cur.num_states();
  const bool split = rng.bernoulli(0.5);
  const std::size_t forward = split ? split_candidates(cur) : merge_candidates(cur);
  if (forward == 0) return false;

  SamplerState prop = cur;
  std::size_t pick = rng.uniform_index(forward);
  if (split) {
    std::size_t from = 0;
    while (cur.emissions[from].size() < 2 || pick >= cur.emissions[from].size()) {
      if (cur.emissions[from].size() >= 2) pick -= cur.emissions[from].size();
      ++from;
    }
    const std::size_t moved = pick;
    for (std::size_t t = 0; t < values_.size(); ++t) {
      if (prop.z[t] == from && prop.cluster[t] == moved) {
        prop.z[t] = k_states;
        prop.cluster[t] = 0;
      }
    }
    const double b = rng.beta(1.0, prop.gamma);
    const double rem = prop.beta.back();
    prop.beta.back() = b * rem;
    prop.beta.push_back((1.0 - b) * rem);
  } else {
    std::size_t single = pick / (k_states - 1);
    std::size_t into = pick % (k_states - 1);
    std::size_t from = 0;
    for (;; ++from) {
      if (cur.emissions[from].size() != 1) continue;
      if (single == 0) break;
      --single;
    }
    if (into >= from) ++into;
    const std::size_t fresh = cur.emissions[into].size();
    const std::size_t last = k_states - 1;
    for (std::size_t t = 0; t < values_.size(); ++t) {
      if (prop.z[t] == from) {
        prop.z[t] = into;
        if (values_[t]) prop.cluster[t] = fresh;
      }
    }
    prop.beta.back() += prop.beta[from];
    if (from != last) {
      prop.beta[from] = prop.beta[last];
      for (auto& zt : prop.z) {
        if (zt == last) zt = from;
      }
    }
    prop.beta.erase(prop.beta.begin() + static_cast<std::ptrdiff_t>(last));
  }
  rebuild(prop);

  const std::size_t reverse = split ? merge_candidates(prop) : split_candidates(prop);
  const double log_accept = joint_log_posterior_of(prop) - joint_log_posterior_of(cur) +
                            std::log(static_cast<double>(forward)) -
                            std::log(static_cast<double>(reverse));
  if (log_accept < 0.0 && std::log(rng.uniform()) >= log_accept) return false;
  state_ = std::move(prop);
  return true;
}

void HdpHmmSampler::relabel(std::span<const std::size_t> permutation) {
  auto& s = state_;
  const std::size_t k_states = s.num_states();
  if (permutation.size() != k_states) throw DimensionError("permutation size differs from K");
  std::vector<double> beta(k_states + 1);
  std::vector<std::size_t> occupancy(k_states);
  std::vector<ClusterSet> emissions(s.emissions);
  for (std::size_t k = 0; k < k_states; ++k) {
    beta[permutation[k]] = s.beta[k];
    occupancy[permutation[k]] = s.occupancy[k];
    emissions[permutation[k]] = s.emissions[k];
  }
  beta.back() = s.beta.back();
  for (auto& zt : s.z) zt = permutation[zt];
  s.beta = std::move(beta);
  s.occupancy = std::move(occupancy);
  s.emissions = std::move(emissions);
  s.counts = TransitionCounts::recount(s.z, k_states);
}

void HdpHmmSampler::check_invariants() const {
  const auto& s = state_;
  const std::size_t k_states = s.num_states();
  if (s.beta.size() != k_states + 1 || s.emissions.size() != k_states ||
      s.counts.size() != k_states) {
    throw InconsistentState("state-indexed containers disagree on K");
  }
  const double beta_sum = std::accumulate(s.beta.begin(), s.beta.end(), 0.0);
  if (std::abs(beta_sum - 1.0) > 1e-9) throw InconsistentState("beta left the simplex");
  std::vector<std::size_t> occ(k_states, 0);
  for (std::size_t zt : s.z) {
    if (zt >= k_states) throw InconsistentState("state id out of range");
    ++occ[zt];
  }
  if (occ != s.occupancy) throw InconsistentState("occupancy differs from recount");
  for (std::size_t o : occ) {
    if (o == 0) throw InconsistentState("empty state");
  }
  if (!(TransitionCounts::recount(s.z, k_states) == s.counts)) {
    throw InconsistentState("transition counts differ from recount");
  }
  for (std::size_t k = 0; k < k_states; ++k) {
    std::vector<double> data;
    std::vector<std::size_t> labels;
    for (std::size_t t = 0; t < values_.size(); ++t) {
      if (s.z[t] != k || !values_[t]) continue;
      data.push_back(*values_[t]);
      labels.push_back(s.cluster[t]);
    }
    DpmmState dp{labels, s.emissions[k]};
    check_consistency(dp, data);
  }
}

namespace {

struct Snapshot {
  StateSequence z;
  std::vector<std::size_t> cluster;
  std::vector<double> beta;
  double alpha = 0.0;
  double kappa = 0.0;
  double gamma = 0.0;
};

SegmentationResult finalize(const RegularSeries& series, const Snapshot& snap,
                            const NixParams& prior, const HdpHmmConfig& config) {
  const std::size_t n = series.size();
  const std::size_t k_states = snap.beta.size() - 1;

  std::vector<std::size_t> occupancy(k_states, 0);
  for (std::size_t zt : snap.z) ++occupancy[zt];
  std::vector<std::size_t> order(k_states);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return occupancy[a] > occupancy[b]; });
  std::vector<std::size_t> rank(k_states);
  for (std::size_t r = 0; r < k_states; ++r) rank[order[r]] = r;

  SegmentationResult result;
  result.series = series;
  result.config = config;
  result.config.emission_prior = prior;
  result.config.alpha = snap.alpha;
  result.config.kappa = snap.kappa;
  result.config.gamma = snap.gamma;
  result.states.resize(n);
  for (std::size_t t = 0; t < n; ++t) result.states[t] = rank[snap.z[t]];

  HmmModel& model = result.model;
  model.beta.resize(k_states + 1);
  for (std::size_t k = 0; k < k_states; ++k) model.beta[rank[k]] = snap.beta[k];
  model.beta.back() = snap.beta.back();

  const TransitionCounts counts = TransitionCounts::recount(result.states, k_states);
  model.transition = Matrix(k_states, k_states);
  for (std::size_t i = 0; i < k_states; ++i) {
    double total = 0.0;
    for (std::size_t k = 0; k < k_states; ++k) {
      const double v = snap.alpha * model.beta[k] + counts(i, k) + (i == k ? snap.kappa : 0.0);
      model.transition(i, k) = v;
      total += v;
    }
    for (std::size_t k = 0; k < k_states; ++k) model.transition(i, k) /= total;
  }

  model.initial.resize(k_states);
  for (std::size_t k = 0; k < k_states; ++k) {
    model.initial[rank[k]] = static_cast<double>(occupancy[k]) / static_cast<double>(n);
  }

  model.emissions.resize(k_states);
  result.components_per_state.assign(k_states, 0);
  for (std::size_t k = 0; k < k_states; ++k) {
    std::vector<double> data;
    std::vector<std::size_t> labels;
    for (std::size_t t = 0; t < n; ++t) {
      if (result.states[t] != k || !series.values[t]) continue;
      data.push_back(*series.values[t]);
      labels.push_back(snap.cluster[t]);
    }
    if (data.empty()) {
      model.emissions[k] = GaussianMixture::single(nix_point_estimate(prior));
      result.components_per_state[k] = 1;
      continue;
    }
    // Cluster ids in the snapshot are dense per state; compact defensively.
    std::vector<std::size_t> remap(*std::max_element(labels.begin(), labels.end()) + 1,
                                   SamplerState::kNoCluster);
    std::size_t next_id = 0;
    for (auto& l : labels) {
      if (remap[l] == SamplerState::kNoCluster) remap[l] = next_id++;
      l = remap[l];
    }
    ClusterSet clusters(prior, config.emission_alpha);
    clusters.rebuild(data, labels);
    model.emissions[k] = clusters.to_mixture();
    result.components_per_state[k] = clusters.size();
  }
  model.refresh_summaries();
  model.validate();
  result.log_likelihood = forward_log_likelihood(model, series);
  return result;
}

}  // namespace

SegmentationResult fit(const RegularSeries& series, const HdpHmmConfig& config) {
  config.validate();
  const auto present = series.present_values();
  if (present.empty()) throw AllMissing("series has no present values");
  if (present.size() < 2) throw TooShort("series needs at least two present values");
  const NixParams prior =
      config.emission_prior ? *config.emission_prior : noise_scale_prior(present);

  Rng rng(config.seed);
  HdpHmmSampler sampler(series, config, prior);
  sampler.seed_clusters(rng);
  sampler.sample_beta(rng);

  std::vector<SweepDiagnostic> diagnostics;
  diagnostics.reserve(config.sweeps);
  Snapshot best;
  double best_lp = -std::numeric_limits<double>::infinity();
  for (std::size_t sweep = 0; sweep < config.sweeps; ++sweep) {
    sampler.sweep(rng);
    const double lp = sampler.joint_log_posterior();
    diagnostics.push_back({sampler.state().num_states(), lp});
    if (sweep >= config.burn_in && lp > best_lp) {
      const auto& s = sampler.state();
      best_lp = lp;
      best = Snapshot{s.z, s.cluster, s.beta, s.alpha, s.kappa, s.gamma};
    }
  }

  SegmentationResult result = finalize(series, best, prior, config);
  result.diagnostics = std::move(diagnostics);
  return result;
}

}  // namespace rttseg
