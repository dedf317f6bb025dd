#include "rttseg/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "rttseg/errors.hpp"
#include "rttseg/numeric.hpp"

namespace rttseg {

namespace {

constexpr std::size_t kSeedingAttempts = 4;  // first try plus three restarts

double sample_variance(std::span<const double> data) {
  double mean = 0.0;
  for (double y : data) mean += y;
  mean /= static_cast<double>(data.size());
  double var = 0.0;
  for (double y : data) var += (y - mean) * (y - mean);
  return std::max(var / static_cast<double>(data.size()), kVarianceFloor);
}

std::vector<double> kmeans_pp_centres(std::span<const double> data, std::size_t k, Rng& rng) {
  std::vector<double> centres{data[rng.uniform_index(data.size())]};
  std::vector<double> dist(data.size());
  while (centres.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (double c : centres) best = std::min(best, (data[i] - c) * (data[i] - c));
      dist[i] = best;
      total += best;
    }
    centres.push_back(total > 0.0 ? data[rng.categorical(dist)]
                                  : data[rng.uniform_index(data.size())]);
  }
  std::sort(centres.begin(), centres.end());
  return centres;
}

bool converged_step(double prev, double cur, double tol) {
  return std::abs(cur - prev) <= tol * std::max(1.0, std::abs(prev));
}

// One EM run from a k-means++ seeding; throws DegenerateComponent.
FitReport gmm_attempt(std::span<const double> data, std::size_t k, const EmOptions& options,
                      Rng& rng, bool tolerate_degenerate) {
  const std::size_t n = data.size();
  const double var0 = sample_variance(data);
  std::vector<double> mu = kmeans_pp_centres(data, k, rng);
  std::vector<double> var(k, var0);
  std::vector<double> w(k, 1.0 / static_cast<double>(k));
  std::vector<double> resp(n * k);
  std::vector<double> terms(k);

  FitReport report;
  report.kind = BaselineKind::kGmm;
  report.k = k;
  report.n_obs = n;
  report.n_params = gmm_param_count(k);
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < k; ++c) terms[c] = std::log(w[c]) + normal_logpdf(data[i], mu[c], var[c]);
      const double norm = log_sum_exp(terms);
      ll += norm;
      for (std::size_t c = 0; c < k; ++c) resp[i * k + c] = std::exp(terms[c] - norm);
    }
    report.trace.push_back(ll);
    report.iterations_used = iter + 1;
    if (iter > 0 && converged_step(prev, ll, options.tol)) {
      report.converged = true;
      break;
    }
    prev = ll;
    for (std::size_t c = 0; c < k; ++c) {
      double nk = 0.0;
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        nk += resp[i * k + c];
        sum += resp[i * k + c] * data[i];
      }
      if (nk < 2.0 && k > 1 && !tolerate_degenerate) {
        throw DegenerateComponent("component collapsed onto fewer than two points");
      }
      if (nk <= 0.0) continue;
      const double m = sum / nk;
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) ss += resp[i * k + c] * (data[i] - m) * (data[i] - m);
      mu[c] = m;
      var[c] = std::max(ss / nk, kVarianceFloor);
      w[c] = nk / static_cast<double>(n);
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    report.mixture.components.push_back({w[c], GaussParams{mu[c], var[c]}});
  }
  report.mixture.normalize();
  report.log_likelihood = report.trace.back();
  report.bic = bic_value(report.log_likelihood, report.n_params, n);
  return report;
}

struct ForwardBackward {
  std::vector<double> gamma;  // T x K
  std::vector<double> xi_sum; // K x K, summed over t
  double log_likelihood = 0.0;
};

ForwardBackward forward_backward(const HmmModel& model, const RegularSeries& series) {
  const std::size_t k = model.num_states();
  const std::size_t n = series.size();
  // Emission densities shifted per step by their maximum, which is added back
  // to the likelihood; missing steps keep a factor of 1.
  std::vector<double> em(n * k, 1.0);
  std::vector<double> shift(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    if (!series.values[t]) continue;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < k; ++s) {
      em[t * k + s] = model.emissions[s].logpdf(*series.values[t]);
      top = std::max(top, em[t * k + s]);
    }
    for (std::size_t s = 0; s < k; ++s) em[t * k + s] = std::exp(em[t * k + s] - top);
    shift[t] = top;
  }

  std::vector<double> alpha(n * k), beta(n * k), scale(n);
  for (std::size_t s = 0; s < k; ++s) alpha[s] = model.initial[s] * em[s];
  for (std::size_t t = 0; t < n; ++t) {
    if (t > 0) {
      for (std::size_t j = 0; j < k; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < k; ++i) acc += alpha[(t - 1) * k + i] * model.transition(i, j);
        alpha[t * k + j] = acc * em[t * k + j];
      }
    }
    double c = 0.0;
    for (std::size_t s = 0; s < k; ++s) c += alpha[t * k + s];
    scale[t] = c;
    for (std::size_t s = 0; s < k; ++s) alpha[t * k + s] /= c;
  }
  for (std::size_t s = 0; s < k; ++s) beta[(n - 1) * k + s] = 1.0;
  for (std::size_t t = n - 1; t > 0; --t) {
    for (std::size_t i = 0; i < k; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        acc += model.transition(i, j) * em[t * k + j] * beta[t * k + j];
      }
      beta[(t - 1) * k + i] = acc / scale[t];
    }
  }

  ForwardBackward out;
  out.gamma.resize(n * k);
  out.xi_sum.assign(k * k, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    out.log_likelihood += std::log(scale[t]) + shift[t];
    for (std::size_t s = 0; s < k; ++s) out.gamma[t * k + s] = alpha[t * k + s] * beta[t * k + s];
  }
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        out.xi_sum[i * k + j] += alpha[(t - 1) * k + i] * model.transition(i, j) *
                                 em[t * k + j] * beta[t * k + j] / scale[t];
      }
    }
  }
  return out;
}

FitReport hmm_attempt(const RegularSeries& series, std::span<const double> present, std::size_t k,
                      const EmOptions& options, Rng& rng, bool tolerate_degenerate) {
  const std::size_t n = series.size();
  const double var0 = sample_variance(present);
  const std::vector<double> centres = kmeans_pp_centres(present, k, rng);

  HmmModel model;
  model.transition = Matrix(k, k, k > 1 ? 0.1 / static_cast<double>(k - 1) : 1.0);
  for (std::size_t s = 0; s < k; ++s) {
    if (k > 1) model.transition(s, s) = 0.9;
    model.emissions.push_back(GaussianMixture::single({centres[s], var0}));
  }
  model.initial.assign(k, 1.0 / static_cast<double>(k));

  FitReport report;
  report.kind = BaselineKind::kHmm;
  report.k = k;
  report.n_obs = present.size();
  report.n_params = hmm_param_count(k);
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
    const ForwardBackward fb = forward_backward(model, series);
    report.trace.push_back(fb.log_likelihood);
    report.iterations_used = iter + 1;
    if (iter > 0 && converged_step(prev, fb.log_likelihood, options.tol)) {
      report.converged = true;
      break;
    }
    prev = fb.log_likelihood;

    for (std::size_t s = 0; s < k; ++s) model.initial[s] = fb.gamma[s];
    for (std::size_t i = 0; i < k; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < k; ++j) row += fb.xi_sum[i * k + j];
      if (row <= 0.0) continue;
      for (std::size_t j = 0; j < k; ++j) model.transition(i, j) = fb.xi_sum[i * k + j] / row;
    }
    for (std::size_t s = 0; s < k; ++s) {
      double mass = 0.0;
      double sum = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        if (!series.values[t]) continue;
        mass += fb.gamma[t * k + s];
        sum += fb.gamma[t * k + s] * *series.values[t];
      }
      if (mass < 2.0 && k > 1 && !tolerate_degenerate) {
        throw DegenerateComponent("state collapsed onto fewer than two observations");
      }
      if (mass <= 0.0) continue;
      const double m = sum / mass;
      double ss = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        if (!series.values[t]) continue;
        const double d = *series.values[t] - m;
        ss += fb.gamma[t * k + s] * d * d;
      }
      model.emissions[s] = GaussianMixture::single({m, std::max(ss / mass, kVarianceFloor)});
    }
  }
  model.refresh_summaries();
  report.log_likelihood = forward_log_likelihood(model, series);
  report.bic = bic_value(report.log_likelihood, report.n_params, report.n_obs);
  report.hmm = std::move(model);
  return report;
}

template <typename Attempt>
FitReport with_restarts(Attempt attempt) {
  for (std::size_t i = 0; i + 1 < kSeedingAttempts; ++i) {
    try {
      return attempt(false);
    } catch (const DegenerateComponent&) {
    }
  }
  FitReport report = attempt(true);
  report.converged = false;
  return report;
}

}  // namespace

std::size_t gmm_param_count(std::size_t k) { return 3 * k - 1; }

std::size_t hmm_param_count(std::size_t k) { return k * (k - 1) + (k - 1) + 2 * k; }

double bic_value(double log_likelihood, std::size_t n_params, std::size_t n_obs) {
  return -2.0 * log_likelihood + static_cast<double>(n_params) * std::log(static_cast<double>(n_obs));
}

FitReport gmm_em_fit(std::span<const double> data, std::size_t k, const EmOptions& options,
                     Rng& rng) {
  if (k == 0) throw InvalidArgument("k must be at least 1");
  if (data.size() < k) throw InvalidArgument("fewer observations than components");
  return with_restarts(
      [&](bool tolerate) { return gmm_attempt(data, k, options, rng, tolerate); });
}

FitReport hmm_baum_welch_fit(const RegularSeries& series, std::size_t k,
                             const EmOptions& options, Rng& rng) {
  if (k == 0) throw InvalidArgument("k must be at least 1");
  const std::vector<double> present = series.present_values();
  if (present.size() < 2) throw TooShort("need at least two present values");
  if (present.size() < k) throw InvalidArgument("fewer observations than states");
  return with_restarts(
      [&](bool tolerate) { return hmm_attempt(series, present, k, options, rng, tolerate); });
}

FitReport select_k_by_bic(const FitFn& fit, std::span<const std::size_t> k_range, Rng& rng,
                          std::size_t restarts) {
  if (k_range.empty()) throw InvalidArgument("empty k range");
  const std::uint64_t base = rng.engine()();
  std::optional<FitReport> best;
  std::exception_ptr last_error;
  for (std::size_t k : k_range) {
    std::optional<FitReport> best_k;
    for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
      Rng sub(derive_seed(base, k * 1000 + r));
      try {
        FitReport rep = fit(k, sub);
        if (!best_k || rep.log_likelihood > best_k->log_likelihood) best_k = std::move(rep);
      } catch (const std::exception&) {
        last_error = std::current_exception();
      }
    }
    if (!best_k) continue;
    if (!best || best_k->bic < best->bic || (best_k->bic == best->bic && best_k->k < best->k)) {
      best = std::move(best_k);
    }
  }
  if (!best) std::rethrow_exception(last_error);
  return *best;
}

std::vector<std::optional<std::size_t>> gmm_labels(const GaussianMixture& mixture,
                                                   const RegularSeries& series) {
  std::vector<std::optional<std::size_t>> out(series.size());
  for (std::size_t t = 0; t < series.size(); ++t) {
    if (!series.values[t]) continue;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < mixture.components.size(); ++c) {
      const auto& comp = mixture.components[c];
      const double v = std::log(comp.weight) +
                       normal_logpdf(*series.values[t], comp.params.mu, comp.params.sigma_sq);
      if (v > best) {
        best = v;
        out[t] = c;
      }
    }
  }
  return out;
}

}  // namespace rttseg
