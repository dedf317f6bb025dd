#include "rttseg/hmm.hpp"

#include <cmath>
#include <limits>

#include "rttseg/errors.hpp"
#include "rttseg/numeric.hpp"

namespace rttseg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

Matrix log_transition(const HmmModel& model) {
  const std::size_t k = model.num_states();
  Matrix out(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) out(i, j) = safe_log(model.transition(i, j));
  }
  return out;
}

// log emission density of every state at step t (zeros when missing).
void emission_logs(const HmmModel& model, const std::optional<double>& y, std::vector<double>& out) {
  out.assign(model.num_states(), 0.0);
  if (!y) return;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = model.emissions[k].logpdf(*y);
}

}  // namespace

void HmmModel::refresh_summaries() {
  per_state.resize(num_states());
  for (std::size_t k = 0; k < num_states(); ++k) {
    per_state[k].mean_ms = emissions[k].mean();
    per_state[k].std_ms = std::sqrt(emissions[k].variance());
    const double p = transition(k, k);
    per_state[k].expected_duration =
        p >= 1.0 ? std::numeric_limits<double>::infinity() : expected_duration(p);
  }
}

void HmmModel::validate() const {
  const std::size_t k = num_states();
  if (k == 0) throw InvalidArgument("HMM has no states");
  if (transition.rows() != k || transition.cols() != k || initial.size() != k) {
    throw InvalidArgument("HMM parameter shapes disagree");
  }
  for (std::size_t i = 0; i < k; ++i) {
    double sum = 0.0;
    for (double p : transition.row(i)) sum += p;
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("transition row does not sum to 1");
  }
}

double forward_log_likelihood(const HmmModel& model, const RegularSeries& series) {
  // Missing steps contribute a factor of one, so nothing observed means log 1.
  if (series.present_count() == 0) return 0.0;
  const std::size_t k = model.num_states();
  const Matrix log_a = log_transition(model);
  std::vector<double> alpha(k), next(k), em, terms(k);
  emission_logs(model, series.values[0], em);
  for (std::size_t s = 0; s < k; ++s) alpha[s] = safe_log(model.initial[s]) + em[s];
  for (std::size_t t = 1; t < series.size(); ++t) {
    emission_logs(model, series.values[t], em);
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < k; ++i) terms[i] = alpha[i] + log_a(i, j);
      next[j] = log_sum_exp(terms) + em[j];
    }
    alpha.swap(next);
  }
  return log_sum_exp(alpha);
}

StateSequence viterbi(const HmmModel& model, const RegularSeries& series) {
  const std::size_t k = model.num_states();
  const std::size_t n = series.size();
  const Matrix log_a = log_transition(model);
  std::vector<double> delta(k), next(k), em;
  std::vector<std::size_t> back(n * k, 0);
  emission_logs(model, series.values[0], em);
  for (std::size_t s = 0; s < k; ++s) delta[s] = safe_log(model.initial[s]) + em[s];
  for (std::size_t t = 1; t < n; ++t) {
    emission_logs(model, series.values[t], em);
    for (std::size_t j = 0; j < k; ++j) {
      double best = kNegInf;
      std::size_t arg = 0;
      for (std::size_t i = 0; i < k; ++i) {
        const double v = delta[i] + log_a(i, j);
        if (v > best) {
          best = v;
          arg = i;
        }
      }
      next[j] = best + em[j];
      back[t * k + j] = arg;
    }
    delta.swap(next);
  }
  StateSequence path(n, 0);
  double best = kNegInf;
  for (std::size_t s = 0; s < k; ++s) {
    if (delta[s] > best) {
      best = delta[s];
      path[n - 1] = s;
    }
  }
  for (std::size_t t = n - 1; t > 0; --t) path[t - 1] = back[t * k + path[t]];
  return path;
}

double path_log_prob(const HmmModel& model, const RegularSeries& series,
                     const StateSequence& states) {
  if (states.size() != series.size()) throw LengthMismatch("path and series lengths differ");
  double lp = safe_log(model.initial[states[0]]);
  for (std::size_t t = 0; t < states.size(); ++t) {
    if (t > 0) lp += safe_log(model.transition(states[t - 1], states[t]));
    if (series.values[t]) lp += model.emissions[states[t]].logpdf(*series.values[t]);
  }
  return lp;
}

Simulation simulate(const HmmModel& model, std::size_t length, Rng& rng, std::int64_t start_time,
                    std::int64_t interval) {
  if (length == 0) throw InvalidArgument("simulate: length must be >= 1");
  Simulation sim;
  sim.series.start_time = start_time;
  sim.series.interval = interval;
  sim.series.values.reserve(length);
  sim.states.reserve(length);
  std::size_t state = rng.categorical(model.initial);
  for (std::size_t t = 0; t < length; ++t) {
    if (t > 0) state = rng.categorical(model.transition.row(state));
    sim.states.push_back(state);
    sim.series.values.emplace_back(model.emissions[state].sample(rng));
  }
  return sim;
}

double expected_duration(double p_self) {
  if (!(p_self >= 0.0) || !(p_self < 1.0)) {
    throw DomainError("expected_duration: self-transition probability must lie in [0, 1)");
  }
  return 1.0 / (1.0 - p_self);
}

HmmModel make_gaussian_hmm(const Matrix& transition, std::vector<double> initial,
                           const std::vector<GaussParams>& emissions) {
  HmmModel m;
  m.transition = transition;
  m.initial = std::move(initial);
  for (const auto& g : emissions) m.emissions.push_back(GaussianMixture::single(g));
  m.validate();
  m.refresh_summaries();
  return m;
}

}  // namespace rttseg
