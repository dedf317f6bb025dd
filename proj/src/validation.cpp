#include "rttseg/validation.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <thread>

#include "rttseg/errors.hpp"

namespace rttseg {

namespace {

LikelihoodPair evaluate(const SegmentationResult& result, std::uint64_t seed) {
  Rng rng(seed);
  const RegularSeries& observed = result.series;
  Simulation sim = simulate(result.model, observed.size(), rng, observed.start_time,
                            observed.interval);
  for (std::size_t t = 0; t < observed.size(); ++t) {
    if (!observed.values[t]) sim.series.values[t].reset();
  }
  return {result.series_id, forward_log_likelihood(result.model, observed),
          forward_log_likelihood(result.model, sim.series), observed.size()};
}

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<LikelihoodPair> likelihood_pairs(std::span<const SegmentationResult> results, Rng& rng,
                                             std::size_t threads) {
  const std::uint64_t base = rng.engine()();
  std::vector<LikelihoodPair> out(results.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < results.size(); i = next++) {
      out[i] = evaluate(results[i], derive_seed(base, i));
    }
  };
  const std::size_t n = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(results.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return out;
}

std::vector<std::pair<double, double>> qq_points(std::span<const LikelihoodPair> pairs) {
  if (pairs.size() < 2) throw TooFew("need at least two pairs");
  std::vector<double> obs;
  std::vector<double> sim;
  for (const auto& p : pairs) {
    obs.push_back(p.observed_loglik);
    sim.push_back(p.simulated_loglik);
  }
  std::sort(obs.begin(), obs.end());
  std::sort(sim.begin(), sim.end());
  std::vector<std::pair<double, double>> out;
  out.reserve(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) out.emplace_back(obs[i], sim[i]);
  return out;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw TooFew("both samples must be non-empty");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return d;
}

double ks_critical_value(std::size_t n, std::size_t m, double level) {
  const double c = std::sqrt(-std::log(level / 2.0) / 2.0);
  const double dn = static_cast<double>(n);
  const double dm = static_cast<double>(m);
  return c * std::sqrt((dn + dm) / (dn * dm));
}

void write_pairs_csv(std::ostream& out, std::span<const LikelihoodPair> pairs) {
  out << "observed,simulated\n";
  for (const auto& p : pairs) out << shortest(p.observed_loglik) << ',' << shortest(p.simulated_loglik) << '\n';
}

}  // namespace rttseg
