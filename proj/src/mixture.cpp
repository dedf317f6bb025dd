#include "rttseg/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rttseg/numeric.hpp"

namespace rttseg {

double GaussianMixture::logpdf(double y) const {
  if (components.size() == 1) {
    const auto& c = components.front();
    return std::log(c.weight) + normal_logpdf(y, c.params.mu, c.params.sigma_sq);
  }
  double acc = -std::numeric_limits<double>::infinity();
  for (const auto& c : components) {
    acc = log_add(acc, std::log(c.weight) + normal_logpdf(y, c.params.mu, c.params.sigma_sq));
  }
  return acc;
}

double GaussianMixture::mean() const {
  double m = 0.0;
  for (const auto& c : components) m += c.weight * c.params.mu;
  return m;
}

double GaussianMixture::variance() const {
  const double m = mean();
  double v = 0.0;
  for (const auto& c : components) {
    const double d = c.params.mu - m;
    v += c.weight * (c.params.sigma_sq + d * d);
  }
  return v;
}

double GaussianMixture::sample(Rng& rng) const {
  std::size_t k = 0;
  if (components.size() > 1) {
    std::vector<double> w(components.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = components[i].weight;
    k = rng.categorical(w);
  }
  const auto& p = components[k].params;
  return rng.normal(p.mu, std::sqrt(p.sigma_sq));
}

void GaussianMixture::normalize() {
  double total = 0.0;
  for (const auto& c : components) total += c.weight;
  for (auto& c : components) c.weight /= total;
  std::stable_sort(components.begin(), components.end(),
                   [](const auto& a, const auto& b) { return a.weight > b.weight; });
}

GaussianMixture GaussianMixture::single(GaussParams params) {
  GaussianMixture m;
  m.components.push_back({1.0, params});
  return m;
}

}  // namespace rttseg
