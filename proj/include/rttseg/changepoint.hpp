#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rttseg/hmm.hpp"
#include "rttseg/series.hpp"

namespace rttseg {

struct ChangePointSet {
  std::string series_id;
  std::vector<std::int64_t> change_times;  // first tick of each new segment
};

/// A change at every t >= 1 with states[t] != states[t - 1].
/// Throws LengthMismatch when the lengths differ.
ChangePointSet extract_changepoints(const StateSequence& states, const RegularSeries& series,
                                    std::string series_id = {});

struct TruthLabel {
  std::int64_t time = 0;
  double magnitude = 0.0;
};

struct CpdMetrics {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;
  double matched_magnitude = 0.0;
  double total_magnitude = 0.0;
  double precision = 1.0;
  double recall = 1.0;
  double weighted_recall = 1.0;

  /// Recomputes the ratios from the counts and magnitudes.
  void finish();
};

/// Greedy one-to-one matching in time order: each predicted change takes the
/// nearest unmatched true change within +-tolerance seconds (the earlier one
/// on a tie).
CpdMetrics score(const ChangePointSet& predicted, std::span<const TruthLabel> truth,
                 std::int64_t tolerance);

/// Sums counts and magnitudes over series and recomputes the ratios.
CpdMetrics combine(std::span<const CpdMetrics> parts);

/// Absolute difference of the medians of the present values on either side
/// of each change, each side running to the neighbouring change.
std::vector<TruthLabel> label_magnitudes(const RegularSeries& series,
                                         std::span<const std::int64_t> change_times);

struct ChangeFrequency {
  std::int64_t bucket_start = 0;
  std::int64_t bucket_width = 360;
  std::vector<std::size_t> counts;
};

/// counts[i] = number of change times in [start + i w, start + (i + 1) w);
/// changes outside [start, stop) are ignored. Throws EmptyWindow when
/// start >= stop and InvalidArgument when width <= 0.
ChangeFrequency change_frequency(std::span<const ChangePointSet> sets, std::int64_t start,
                                 std::int64_t stop, std::int64_t width = 360);

}  // namespace rttseg
