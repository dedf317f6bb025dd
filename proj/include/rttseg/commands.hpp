#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rttseg/hdphmm.hpp"
#include "rttseg/service.hpp"

namespace rttseg {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitInternal = 3 };

/// Bad flag combination detected after parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs `body`, reports any exception on `err` and maps it to an exit code.
int guarded(const std::function<int()>& body, std::ostream& err);

/// Calls fn(i) for i in [0, n) on `threads` workers. Exceptions are captured
/// per index and returned in index order.
std::vector<std::exception_ptr> parallel_for(std::size_t n, std::size_t threads,
                                             const std::function<void(std::size_t)>& fn);

struct SegmentOptions {
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path out_dir;
  std::optional<std::int64_t> interval;
  HdpHmmConfig config;  // config.seed is the base seed
  std::size_t threads = 1;
};

/// One `<stem>.json` result per input. Each series is fitted with
/// derive_seed(base, stable_hash(stem)), so outputs do not depend on the
/// input order or thread count.
int run_segment(const SegmentOptions& options, std::ostream& out, std::ostream& err);

struct ScoreOptions {
  std::filesystem::path pred_dir;
  std::filesystem::path truth;
  double tolerance_ticks = 2.0;
  std::optional<std::filesystem::path> out;
};

/// Truth is either a directory of `<series_id>.csv` files with header
/// `time,magnitude`, a single `time,magnitude` file (one prediction only) or
/// a single `series,time,magnitude` file. A blank magnitude is filled from
/// the medians of the series on either side.
int run_score(const ScoreOptions& options, std::ostream& out, std::ostream& err);

struct AggregateOptions {
  std::vector<std::filesystem::path> results;
  std::int64_t bucket = 360;
  std::optional<std::int64_t> start;
  std::optional<std::int64_t> stop;
  std::optional<std::filesystem::path> out;
};

/// CSV `bucket_start,count`. The window defaults to the union of the series
/// spans.
int run_aggregate(const AggregateOptions& options, std::ostream& out, std::ostream& err);

struct CompareOptions {
  std::filesystem::path series;
  std::vector<std::string> models{"gmm", "hmm", "dpmm", "hdphmm"};
  std::optional<std::int64_t> interval;
  std::size_t k_max = 12;
  HdpHmmConfig config;
  std::optional<std::filesystem::path> out;
};

int run_compare(const CompareOptions& options, std::ostream& out, std::ostream& err);

struct ValidateOptions {
  std::vector<std::filesystem::path> results;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  double level = 0.01;
  std::optional<std::filesystem::path> csv;
};

/// Prints a JSON summary with the KS statistic and writes the
/// `observed,simulated` pairs to `csv` when given.
int run_validate(const ValidateOptions& options, std::ostream& out, std::ostream& err);

struct ServeOptions {
  std::filesystem::path fixtures;
  ServiceConfig service;
};

int run_serve(const ServeOptions& options, std::ostream& out, std::ostream& err);

}  // namespace rttseg
