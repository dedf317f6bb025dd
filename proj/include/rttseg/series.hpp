#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rttseg {

/// One probing round: up to a few pings, any of which may have failed.
struct RawTick {
  std::int64_t timestamp = 0;
  std::vector<double> rtt_values;
};

/// Evenly spaced RTT observations; std::nullopt marks a missing slot.
struct RegularSeries {
  std::int64_t start_time = 0;
  std::int64_t interval = 240;
  std::vector<std::optional<double>> values;

  std::size_t size() const noexcept { return values.size(); }
  std::int64_t time_at(std::size_t index) const noexcept {
    return start_time + static_cast<std::int64_t>(index) * interval;
  }
  std::vector<double> present_values() const;
  std::size_t present_count() const noexcept;

  bool operator==(const RegularSeries&) const = default;
};

/// Builds the series on the half-open grid [start, stop) with T =
/// ceil((stop - start) / interval) slots. Each slot keeps the minimum RTT of
/// all ticks that fall in it; empty slots are missing.
RegularSeries regularize(std::span<const RawTick> ticks, std::int64_t start, std::int64_t stop,
                         std::int64_t interval);

/// Inverse of regularize for already-regular data: one tick per present slot.
std::vector<RawTick> to_ticks(const RegularSeries& series);

enum class SeriesFormat { kCsv, kJsonl };

/// Guesses the format from the extension (.csv / .jsonl / .json).
SeriesFormat format_from_path(const std::filesystem::path& path);

/// Reads a series file. Rows must lie on a common grid; when `interval` is not
/// given it is the gcd of the timestamp offsets (240 s for a single row).
RegularSeries read_series(const std::filesystem::path& path, SeriesFormat format,
                          std::optional<std::int64_t> interval = std::nullopt);
RegularSeries parse_series(std::string_view text, SeriesFormat format,
                           std::optional<std::int64_t> interval = std::nullopt);

void write_series(const std::filesystem::path& path, const RegularSeries& series,
                  SeriesFormat format);
std::string format_series(const RegularSeries& series, SeriesFormat format);

/// Source of raw measurement ticks for a (measurement, probe) pair.
/// Implementations must be safe to call from several threads at once.
class MeasurementClient {
 public:
  virtual ~MeasurementClient() = default;

  /// Ticks with timestamp in [start, stop), in any order. Throws NotFound for
  /// an unknown pair and TransportError when the backing store fails.
  virtual std::vector<RawTick> fetch(std::string_view msm_id, std::string_view prb_id,
                                     std::int64_t start, std::int64_t stop) const = 0;
};

/// Offline client reading `<root>/<msm_id>/<prb_id>.jsonl`. Each line is
/// {"t": <epoch s>, "rtt": <number | null | [numbers]>}.
class FixtureClient final : public MeasurementClient {
 public:
  explicit FixtureClient(std::filesystem::path root) : root_(std::move(root)) {}

  std::vector<RawTick> fetch(std::string_view msm_id, std::string_view prb_id,
                             std::int64_t start, std::int64_t stop) const override;

  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::filesystem::path root_;
};

std::vector<RawTick> fetch_measurement(const MeasurementClient& client, std::string_view msm_id,
                                       std::string_view prb_id, std::int64_t start,
                                       std::int64_t stop);

/// Writes ticks in the fixture layout understood by FixtureClient.
void write_fixture(const std::filesystem::path& root, std::string_view msm_id,
                   std::string_view prb_id, std::span<const RawTick> ticks);

}  // namespace rttseg
