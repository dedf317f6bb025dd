#pragma once

#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rttseg/hdphmm.hpp"
#include "rttseg/series.hpp"

namespace httplib {
class Server;
}

namespace rttseg {

/// Parses `YYYY-MM-DD` (midnight) or `YYYY-MM-DDTHH:MM`, both UTC, into epoch
/// seconds. Returns std::nullopt on anything else.
std::optional<std::int64_t> parse_api_time(std::string_view text);

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::int64_t interval = 240;
  /// Sampler settings for /trends; the seed is derived per request.
  HdpHmmConfig sampler;
  std::uint64_t seed_salt = 0;
  std::size_t cache_capacity = 128;
  double budget_seconds = 10.0;
  std::size_t max_slots = 100000;
};

struct HttpReply {
  int status = 200;
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
};

/// The three trends endpoints over a measurement client. Segmentations are
/// cached by (msm, prb, start, stop) in an LRU cache; concurrent requests for
/// the same key share one fit.
class TrendsService {
 public:
  TrendsService(std::shared_ptr<const MeasurementClient> client, ServiceConfig config);

  HttpReply ticks(std::string_view msm_id, std::string_view prb_id,
                  std::optional<std::string_view> start, std::optional<std::string_view> stop);
  HttpReply trends(std::string_view msm_id, std::string_view prb_id,
                   std::optional<std::string_view> start, std::optional<std::string_view> stop);
  HttpReply summary(std::string_view msm_id, std::string_view prb_id,
                    std::optional<std::string_view> start, std::optional<std::string_view> stop);

  /// Registers the /api/v1 routes on `server`.
  void mount(httplib::Server& server);

  /// Number of fits launched so far; repeated or coalesced requests do not
  /// add to it.
  std::size_t fits_started() const;

  const ServiceConfig& config() const noexcept { return config_; }

 private:
  using ResultPtr = std::shared_ptr<const SegmentationResult>;
  struct Pending;

  HttpReply segmented(std::string_view msm_id, std::string_view prb_id,
                      std::optional<std::string_view> start, std::optional<std::string_view> stop,
                      bool summary_only);
  std::shared_ptr<Pending> lookup_or_start(const std::string& key, const RegularSeries& series);

  std::shared_ptr<const MeasurementClient> client_;
  ServiceConfig config_;
  mutable std::mutex mutex_;
  std::list<std::string> lru_;
  std::unordered_map<std::string, std::pair<std::shared_ptr<Pending>, std::list<std::string>::iterator>>
      cache_;
  std::size_t fits_started_ = 0;
};

/// Serves `service` until the process is stopped. Returns false when the
/// address cannot be bound.
bool run_server(TrendsService& service);

}  // namespace rttseg
