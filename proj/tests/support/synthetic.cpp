#include "synthetic.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <numeric>
#include <sstream>

namespace testkit {

namespace fs = std::filesystem;

HmmModel three_state_model() {
  rttseg::Matrix pi(3, 3, 0.01);
  for (std::size_t i = 0; i < 3; ++i) pi(i, i) = 0.98;
  return rttseg::make_gaussian_hmm(pi, {1.0 / 3, 1.0 / 3, 1.0 / 3},
                                   {{10.0, 4.0}, {50.0, 4.0}, {100.0, 4.0}});
}

rttseg::Simulation three_state_series(std::uint64_t seed, std::size_t length) {
  Rng rng(seed);
  return rttseg::simulate(three_state_model(), length, rng);
}

RegularSeries constant_series(double value, std::size_t length, double jitter, Rng& rng) {
  RegularSeries s;
  for (std::size_t t = 0; t < length; ++t) s.values.push_back(value + rng.normal(0.0, jitter));
  return s;
}

RegularSeries two_level_series(double low, double high, std::size_t block, std::size_t length,
                               double sigma, Rng& rng) {
  RegularSeries s;
  for (std::size_t t = 0; t < length; ++t) {
    const double level = (t / block) % 2 ? high : low;
    s.values.push_back(level + rng.normal(0.0, sigma));
  }
  return s;
}

std::vector<double> gmm_sample(const std::vector<double>& means, double sigma, std::size_t n, Rng& rng) {
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(rng.normal(means[rng.uniform_index(means.size())], sigma));
  return out;
}

std::size_t segment_count(const StateSequence& states) {
  if (states.empty()) return 0;
  std::size_t n = 1;
  for (std::size_t t = 1; t < states.size(); ++t) n += states[t] != states[t - 1];
  return n;
}

double matched_accuracy(const StateSequence& truth, const StateSequence& predicted) {
  const std::size_t kt = *std::max_element(truth.begin(), truth.end()) + 1;
  const std::size_t kp = *std::max_element(predicted.begin(), predicted.end()) + 1;
  const std::size_t k = std::max(kt, kp);
  std::vector<std::vector<std::size_t>> confusion(k, std::vector<std::size_t>(k, 0));
  for (std::size_t t = 0; t < truth.size(); ++t) ++confusion[predicted[t]][truth[t]];
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t hits = 0;
    for (std::size_t p = 0; p < k; ++p) hits += confusion[p][perm[p]];
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(truth.size());
}

RegularSeries event_series(std::int64_t start_time, std::size_t length, std::size_t shift_index,
                           double shift, Rng& rng) {
  RegularSeries s;
  s.start_time = start_time;
  s.interval = 240;
  const double base = 20.0 + 60.0 * rng.uniform();
  const double sigma = 1.0 + 2.0 * rng.uniform();
  // One background change per series, away from the injected one.
  std::size_t other = rng.uniform_index(length - 20) + 10;
  while (other + 10 > shift_index && other < shift_index + 10) other = rng.uniform_index(length - 20) + 10;
  const double other_jump = (rng.bernoulli(0.5) ? 1.0 : -1.0) * (8.0 + 8.0 * rng.uniform());
  for (std::size_t t = 0; t < length; ++t) {
    double level = base;
    if (t >= other) level += other_jump;
    if (t >= shift_index) level += shift;
    s.values.push_back(level + rng.normal(0.0, sigma));
  }
  return s;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  path_ = fs::temp_directory_path() /
          ("rttseg-" + tag + "-" + std::to_string(stamp) + "-" + std::to_string(counter++));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_series_fixture(const fs::path& root, const std::string& msm, const std::string& prb,
                          const RegularSeries& series) {
  const auto ticks = rttseg::to_ticks(series);
  rttseg::write_fixture(root, msm, prb, ticks);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace testkit
