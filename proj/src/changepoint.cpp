#include "rttseg/changepoint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rttseg/errors.hpp"

namespace rttseg {

namespace {

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  return 0.5 * (upper + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

}  // namespace

ChangePointSet extract_changepoints(const StateSequence& states, const RegularSeries& series,
                                    std::string series_id) {
  if (states.size() != series.size()) throw LengthMismatch("state and series lengths differ");
  ChangePointSet out{std::move(series_id), {}};
  for (std::size_t t = 1; t < states.size(); ++t) {
    if (states[t] != states[t - 1]) out.change_times.push_back(series.time_at(t));
  }
  return out;
}

void CpdMetrics::finish() {
  const auto tp = static_cast<double>(true_positive);
  precision = true_positive + false_positive == 0
                  ? 1.0
                  : tp / static_cast<double>(true_positive + false_positive);
  recall = true_positive + false_negative == 0
               ? 1.0
               : tp / static_cast<double>(true_positive + false_negative);
  weighted_recall = total_magnitude > 0.0 ? matched_magnitude / total_magnitude : recall;
}

CpdMetrics score(const ChangePointSet& predicted, std::span<const TruthLabel> truth,
                 std::int64_t tolerance) {
  if (tolerance < 0) throw InvalidArgument("tolerance must be non-negative");
  std::vector<TruthLabel> labels(truth.begin(), truth.end());
  std::stable_sort(labels.begin(), labels.end(),
                   [](const TruthLabel& a, const TruthLabel& b) { return a.time < b.time; });
  std::vector<std::int64_t> pred = predicted.change_times;
  std::sort(pred.begin(), pred.end());

  std::vector<bool> matched(labels.size(), false);
  CpdMetrics m;
  for (std::int64_t p : pred) {
    std::size_t best = labels.size();
    std::int64_t best_gap = std::numeric_limits<std::int64_t>::max();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (matched[i]) continue;
      const std::int64_t gap = std::abs(labels[i].time - p);
      if (gap <= tolerance && gap < best_gap) {
        best = i;
        best_gap = gap;
      }
    }
    if (best == labels.size()) {
      ++m.false_positive;
      continue;
    }
    matched[best] = true;
    ++m.true_positive;
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    m.total_magnitude += std::abs(labels[i].magnitude);
    if (matched[i]) {
      m.matched_magnitude += std::abs(labels[i].magnitude);
    } else {
      ++m.false_negative;
    }
  }
  m.finish();
  return m;
}

CpdMetrics combine(std::span<const CpdMetrics> parts) {
  CpdMetrics total;
  for (const auto& p : parts) {
    total.true_positive += p.true_positive;
    total.false_positive += p.false_positive;
    total.false_negative += p.false_negative;
    total.matched_magnitude += p.matched_magnitude;
    total.total_magnitude += p.total_magnitude;
  }
  total.finish();
  return total;
}

std::vector<TruthLabel> label_magnitudes(const RegularSeries& series,
                                         std::span<const std::int64_t> change_times) {
  std::vector<std::int64_t> times(change_times.begin(), change_times.end());
  std::sort(times.begin(), times.end());
  auto index_of = [&](std::int64_t time) {
    const std::int64_t i = (time - series.start_time) / series.interval;
    return static_cast<std::size_t>(std::clamp<std::int64_t>(i, 0, static_cast<std::int64_t>(series.size())));
  };
  auto segment_median = [&](std::size_t from, std::size_t to) {
    std::vector<double> v;
    for (std::size_t t = from; t < to; ++t) {
      if (series.values[t]) v.push_back(*series.values[t]);
    }
    return v.empty() ? std::numeric_limits<double>::quiet_NaN() : median_of(std::move(v));
  };
  std::vector<TruthLabel> out;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const std::size_t at = index_of(times[i]);
    const std::size_t from = i == 0 ? 0 : index_of(times[i - 1]);
    const std::size_t to = i + 1 == times.size() ? series.size() : index_of(times[i + 1]);
    const double before = segment_median(from, at);
    const double after = segment_median(at, to);
    const double mag = std::isnan(before) || std::isnan(after) ? 0.0 : std::abs(after - before);
    out.push_back({times[i], mag});
  }
  return out;
}

ChangeFrequency change_frequency(std::span<const ChangePointSet> sets, std::int64_t start,
                                 std::int64_t stop, std::int64_t width) {
  if (start >= stop) throw EmptyWindow("window start must precede stop");
  if (width <= 0) throw InvalidArgument("bucket width must be positive");
  ChangeFrequency f;
  f.bucket_start = start;
  f.bucket_width = width;
  f.counts.assign(static_cast<std::size_t>((stop - start + width - 1) / width), 0);
  for (const auto& set : sets) {
    for (std::int64_t t : set.change_times) {
      if (t < start || t >= stop) continue;
      ++f.counts[static_cast<std::size_t>((t - start) / width)];
    }
  }
  return f;
}

}  // namespace rttseg
