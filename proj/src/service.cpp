#include "rttseg/service.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <future>
#include <thread>
#include <variant>

#include <httplib.h>

#include "rttseg/changepoint.hpp"
#include "rttseg/errors.hpp"
#include "rttseg/json_io.hpp"

namespace rttseg {

namespace {

bool parse_int(std::string_view text, int& out) {
  if (text.empty()) return false;
  for (char c : text) {
    if (c < '0' || c > '9') return false;
  }
  auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

HttpReply json_reply(int status, const Json& body) { return {status, body.dump(), {}}; }

HttpReply error_reply(int status, const std::string& message) {
  return json_reply(status, {{"status", status}, {"error", message}});
}

Json ticks_json(const RegularSeries& series) {
  Json ticks = Json::array();
  for (std::size_t t = 0; t < series.size(); ++t) {
    const auto& v = series.values[t];
    ticks.push_back({{"t", series.time_at(t)}, {"rtt", v ? Json(*v) : Json(nullptr)}});
  }
  return ticks;
}

}  // namespace

std::optional<std::int64_t> parse_api_time(std::string_view text) {
  if (text.size() != 10 && text.size() != 16) return std::nullopt;
  if (text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0;
  int mo = 0;
  int d = 0;
  int h = 0;
  int mi = 0;
  if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), mo) ||
      !parse_int(text.substr(8, 2), d)) {
    return std::nullopt;
  }
  if (text.size() == 16) {
    if (text[10] != 'T' || text[13] != ':') return std::nullopt;
    if (!parse_int(text.substr(11, 2), h) || !parse_int(text.substr(14, 2), mi)) return std::nullopt;
    if (h > 23 || mi > 59) return std::nullopt;
  }
  const std::chrono::year_month_day date{std::chrono::year(y), std::chrono::month(static_cast<unsigned>(mo)),
                                         std::chrono::day(static_cast<unsigned>(d))};
  if (!date.ok()) return std::nullopt;
  const auto days = std::chrono::sys_days(date).time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + h * 3600 + mi * 60;
}

struct TrendsService::Pending {
  std::shared_future<ResultPtr> result;
};

TrendsService::TrendsService(std::shared_ptr<const MeasurementClient> client, ServiceConfig config)
    : client_(std::move(client)), config_(std::move(config)) {
  if (!client_) throw InvalidArgument("service needs a measurement client");
  if (config_.interval <= 0) throw InvalidArgument("interval must be positive");
  if (config_.cache_capacity == 0) throw InvalidArgument("cache capacity must be positive");
  config_.sampler.validate();
}

namespace {

// Parses and checks the query window, or returns the error reply to send.
std::variant<HttpReply, std::pair<std::int64_t, std::int64_t>> resolve_window(
    std::optional<std::string_view> start, std::optional<std::string_view> stop,
    const ServiceConfig& config) {
  if (!start || !stop) return error_reply(400, "start and stop are required");
  const auto t0 = parse_api_time(*start);
  const auto t1 = parse_api_time(*stop);
  if (!t0 || !t1) return error_reply(400, "times must look like YYYY-MM-DD or YYYY-MM-DDTHH:MM");
  if (*t0 >= *t1) return error_reply(400, "start must precede stop");
  if (static_cast<std::size_t>((*t1 - *t0) / config.interval) > config.max_slots) {
    return error_reply(400, "window too long");
  }
  return std::pair{*t0, *t1};
}

std::variant<HttpReply, RegularSeries> load_series(const MeasurementClient& client,
                                                   std::string_view msm_id,
                                                   std::string_view prb_id, std::int64_t start,
                                                   std::int64_t stop, std::int64_t interval) {
  try {
    const auto ticks = fetch_measurement(client, msm_id, prb_id, start, stop);
    return regularize(ticks, start, stop, interval);
  } catch (const NotFound& e) {
    return error_reply(404, e.what());
  } catch (const TransportError& e) {
    return error_reply(502, e.what());
  } catch (const Error& e) {
    return error_reply(500, e.what());
  }
}

}  // namespace

HttpReply TrendsService::ticks(std::string_view msm_id, std::string_view prb_id,
                               std::optional<std::string_view> start,
                               std::optional<std::string_view> stop) {
  auto window = resolve_window(start, stop, config_);
  if (auto* err = std::get_if<HttpReply>(&window)) return *err;
  const auto [t0, t1] = std::get<1>(window);
  auto loaded = load_series(*client_, msm_id, prb_id, t0, t1, config_.interval);
  if (auto* err = std::get_if<HttpReply>(&loaded)) return *err;
  const RegularSeries& series = std::get<RegularSeries>(loaded);
  return json_reply(200, {{"msm_id", std::string(msm_id)},
                          {"prb_id", std::string(prb_id)},
                          {"start", t0},
                          {"stop", t1},
                          {"interval", series.interval},
                          {"ticks", ticks_json(series)}});
}

std::shared_ptr<TrendsService::Pending> TrendsService::lookup_or_start(const std::string& key,
                                                                       const RegularSeries& series) {
  std::lock_guard lock(mutex_);
  if (auto it = cache_.find(key); it != cache_.end()) {
    lru_.splice(lru_.begin(), lru_, it->second.second);
    return it->second.first;
  }
  auto promise = std::make_shared<std::promise<ResultPtr>>();
  auto pending = std::make_shared<Pending>(Pending{promise->get_future().share()});
  lru_.push_front(key);
  cache_.emplace(key, std::pair{pending, lru_.begin()});
  while (cache_.size() > config_.cache_capacity) {
    cache_.erase(lru_.back());
    lru_.pop_back();
  }
  ++fits_started_;

  HdpHmmConfig cfg = config_.sampler;
  cfg.seed = derive_seed(config_.seed_salt, stable_hash(key));
  // The worker owns copies of everything it touches so it may outlive the
  // request, and the service, after a budget timeout.
  std::thread([promise, series, cfg] {
    try {
      promise->set_value(std::make_shared<const SegmentationResult>(fit(series, cfg)));
    } catch (...) {
      promise->set_exception(std::current_exception());
    }
  }).detach();
  return pending;
}

HttpReply TrendsService::segmented(std::string_view msm_id, std::string_view prb_id,
                                   std::optional<std::string_view> start,
                                   std::optional<std::string_view> stop, bool summary_only) {
  auto window = resolve_window(start, stop, config_);
  if (auto* err = std::get_if<HttpReply>(&window)) return *err;
  const auto [t0, t1] = std::get<1>(window);
  auto loaded = load_series(*client_, msm_id, prb_id, t0, t1, config_.interval);
  if (auto* err = std::get_if<HttpReply>(&loaded)) return *err;
  const RegularSeries& series = std::get<RegularSeries>(loaded);
  const std::size_t present = series.present_count();
  if (present == 0) return error_reply(422, "no RTT value in the window");
  if (present < 2) return error_reply(422, "need at least two RTT values to segment");

  const std::string key = std::string(msm_id) + '/' + std::string(prb_id) + '/' +
                          std::to_string(t0) + '/' + std::to_string(t1);
  const auto pending = lookup_or_start(key, series);
  const auto budget = std::chrono::duration<double>(config_.budget_seconds);
  if (pending->result.wait_for(budget) != std::future_status::ready) {
    HttpReply reply = error_reply(503, "segmentation still running, retry later");
    const auto retry = static_cast<long>(std::ceil(std::max(1.0, config_.budget_seconds / 2.0)));
    reply.headers.emplace_back("Retry-After", std::to_string(retry));
    return reply;
  }
  ResultPtr result;
  try {
    result = pending->result.get();
  } catch (const Error& e) {
    return error_reply(422, e.what());
  }

  Json summary = {{"msm_id", std::string(msm_id)},
                  {"prb_id", std::string(prb_id)},
                  {"start", t0},
                  {"stop", t1},
                  {"interval", series.interval},
                  {"num_states", result->model.num_states()},
                  {"states", state_table(*result)},
                  {"change_times", extract_changepoints(result->states, result->series).change_times},
                  {"log_likelihood", result->log_likelihood}};
  if (summary_only) return json_reply(200, summary);
  return json_reply(200, {{"msm_id", std::string(msm_id)},
                          {"prb_id", std::string(prb_id)},
                          {"start", t0},
                          {"stop", t1},
                          {"interval", series.interval},
                          {"ticks", ticks_json(series)},
                          {"states", result->states},
                          {"summary", summary}});
}

HttpReply TrendsService::trends(std::string_view msm_id, std::string_view prb_id,
                                std::optional<std::string_view> start,
                                std::optional<std::string_view> stop) {
  return segmented(msm_id, prb_id, start, stop, false);
}

HttpReply TrendsService::summary(std::string_view msm_id, std::string_view prb_id,
                                 std::optional<std::string_view> start,
                                 std::optional<std::string_view> stop) {
  return segmented(msm_id, prb_id, start, stop, true);
}

std::size_t TrendsService::fits_started() const {
  std::lock_guard lock(mutex_);
  return fits_started_;
}

namespace {

std::optional<std::string_view> param(const httplib::Request& req, const char* name) {
  auto it = req.params.find(name);
  if (it == req.params.end()) return std::nullopt;
  return std::string_view(it->second);
}

void send(httplib::Response& res, const HttpReply& reply) {
  res.status = reply.status;
  for (const auto& [k, v] : reply.headers) res.set_header(k, v);
  res.set_content(reply.body, "application/json");
}

}  // namespace

void TrendsService::mount(httplib::Server& server) {
  server.Get(R"(/api/v1/ticks/([^/]+)/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, ticks(req.matches[1].str(), req.matches[2].str(), param(req, "start"), param(req, "stop")));
  });
  server.Get(R"(/api/v1/trends/([^/]+)/([^/]+)/summary)",
             [this](const httplib::Request& req, httplib::Response& res) {
               send(res, summary(req.matches[1].str(), req.matches[2].str(), param(req, "start"),
                                 param(req, "stop")));
             });
  server.Get(R"(/api/v1/trends/([^/]+)/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, trends(req.matches[1].str(), req.matches[2].str(), param(req, "start"), param(req, "stop")));
  });
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) send(res, error_reply(res.status, "no such resource"));
  });
}

bool run_server(TrendsService& service) {
  httplib::Server server;
  service.mount(server);
  return server.listen(service.config().host, service.config().port);
}

}  // namespace rttseg
