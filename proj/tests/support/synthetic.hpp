#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rttseg/hmm.hpp"
#include "rttseg/random.hpp"
#include "rttseg/series.hpp"

namespace testkit {

using rttseg::HmmModel;
using rttseg::RegularSeries;
using rttseg::Rng;
using rttseg::StateSequence;

/// Three Gaussian states at 10/50/100 ms, sigma 2 ms, self-transition 0.98,
/// the rest split evenly.
HmmModel three_state_model();

rttseg::Simulation three_state_series(std::uint64_t seed, std::size_t length = 2000);

/// value + N(0, jitter^2) at every step.
RegularSeries constant_series(double value, std::size_t length, double jitter, Rng& rng);

/// Alternates between `low` and `high` every `block` steps, plus N(0, sigma^2).
RegularSeries two_level_series(double low, double high, std::size_t block, std::size_t length,
                               double sigma, Rng& rng);

/// Equal-weight draws from N(means[i], sigma^2).
std::vector<double> gmm_sample(const std::vector<double>& means, double sigma, std::size_t n, Rng& rng);

/// Number of maximal runs of equal labels.
std::size_t segment_count(const StateSequence& states);

/// Best agreement between two labelings over one-to-one label maps.
double matched_accuracy(const StateSequence& truth, const StateSequence& predicted);

/// Series on a shared time grid whose level shifts by `shift` ms at
/// `shift_index` and which otherwise carries background changes at random
/// times. Background level changes are drawn per series.
RegularSeries event_series(std::int64_t start_time, std::size_t length, std::size_t shift_index,
                           double shift, Rng& rng);

/// Temporary directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Writes `series` as a fixture file under root/msm/prb.jsonl.
void write_series_fixture(const std::filesystem::path& root, const std::string& msm,
                          const std::string& prb, const RegularSeries& series);

std::string read_file(const std::filesystem::path& path);

}  // namespace testkit
