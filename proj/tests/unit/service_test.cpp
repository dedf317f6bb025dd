#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "rttseg/hmm.hpp"
#include "rttseg/json_io.hpp"
#include "rttseg/random.hpp"
#include "rttseg/series.hpp"
#include "rttseg/service.hpp"
#include "schema_check.hpp"
#include "service_harness.hpp"

using namespace rttseg;
using testkit::ServiceFixtures;
using testkit::ServiceHarness;

namespace {

class ServiceTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { harness_ = new ServiceHarness(); }
  static void TearDownTestSuite() {
    delete harness_;
    harness_ = nullptr;
  }

  static testkit::HttpResult get(const std::string& endpoint, const std::string& prb,
                                 const std::string& query = ServiceHarness::window()) {
    return harness_->get("/api/v1/" + endpoint + "/" + ServiceFixtures::kMsm + "/" + prb + query);
  }

  static Json body(const testkit::HttpResult& r) { return Json::parse(r.body); }

  static void expect_valid(const testkit::HttpResult& r, const std::string& schema) {
    const auto problems = testkit::schema_violations(body(r), testkit::shipped_schema(schema));
    EXPECT_TRUE(problems.empty()) << schema << ": " << (problems.empty() ? "" : problems.front());
  }

  static void expect_error(const testkit::HttpResult& r, int status) {
    EXPECT_EQ(r.status, status) << r.body;
    expect_valid(r, "error");
    EXPECT_EQ(body(r)["status"], status);
  }

  static ServiceHarness* harness_;
};

ServiceHarness* ServiceTest::harness_ = nullptr;

}  // namespace

TEST(ParseApiTime, AcceptedAndRejectedForms) {
  EXPECT_EQ(parse_api_time("2024-01-01"), 1'704'067'200);
  EXPECT_EQ(parse_api_time("2024-01-01T12:30"), 1'704'067'200 + 12 * 3600 + 30 * 60);
  EXPECT_EQ(parse_api_time("1970-01-01"), 0);
  EXPECT_EQ(parse_api_time("2024-03-01"), 1'709'251'200);
  EXPECT_FALSE(parse_api_time("2024-1-01").has_value());
  EXPECT_FALSE(parse_api_time("2024-02-30").has_value());
  EXPECT_FALSE(parse_api_time("2024-01-01T25:00").has_value());
  EXPECT_FALSE(parse_api_time("yesterday").has_value());
  EXPECT_FALSE(parse_api_time("").has_value());
}

TEST_F(ServiceTest, TicksAreSchemaValidWithExplicitNull) {
  const auto r = get("ticks", "two_level");
  ASSERT_EQ(r.status, 200) << r.body;
  expect_valid(r, "ticks");
  const Json j = body(r);
  ASSERT_EQ(j["ticks"].size(), ServiceFixtures::kSlots);
  EXPECT_TRUE(j["ticks"][ServiceFixtures::kGap]["rtt"].is_null());
  EXPECT_EQ(j["ticks"][ServiceFixtures::kGap]["t"],
            ServiceFixtures::kDayStart + static_cast<std::int64_t>(ServiceFixtures::kGap) * 240);
  EXPECT_EQ(j["interval"], 240);
}

TEST_F(ServiceTest, TrendsAndSummaryAreSchemaValid) {
  for (const char* prb : {"two_level", "constant"}) {
    const auto t = get("trends", prb);
    ASSERT_EQ(t.status, 200) << t.body;
    expect_valid(t, "trends");
    const auto s = get("trends", std::string(prb) + "/summary");
    ASSERT_EQ(s.status, 200) << s.body;
    expect_valid(s, "summary");
  }
}

TEST_F(ServiceTest, TrendsTicksEqualTicksEndpoint) {
  const Json ticks = body(get("ticks", "two_level"));
  const Json trends = body(get("trends", "two_level"));
  EXPECT_EQ(trends["ticks"], ticks["ticks"]);
  EXPECT_EQ(trends["states"].size(), trends["ticks"].size());
}

TEST_F(ServiceTest, RepeatedTrendsRequestIsByteIdenticalAndCached) {
  const auto first = get("trends", "constant", "?start=2024-01-01T01:00&stop=2024-01-01T09:00");
  const std::size_t fits = harness_->service().fits_started();
  const auto second = get("trends", "constant", "?start=2024-01-01T01:00&stop=2024-01-01T09:00");
  ASSERT_EQ(first.status, 200);
  EXPECT_EQ(first.body, second.body);
  EXPECT_EQ(harness_->service().fits_started(), fits);
  // The summary of the same window reuses the fit.
  EXPECT_EQ(get("trends", "constant/summary", "?start=2024-01-01T01:00&stop=2024-01-01T09:00").status, 200);
  EXPECT_EQ(harness_->service().fits_started(), fits);
}

TEST_F(ServiceTest, TwoLevelFixtureRecoversLevelsAndSteps) {
  const Json s = body(get("trends", "two_level/summary"));
  ASSERT_EQ(s["num_states"], 2);
  std::vector<double> means{s["states"][0]["mean_ms"].get<double>(), s["states"][1]["mean_ms"].get<double>()};
  std::sort(means.begin(), means.end());
  EXPECT_NEAR(means[0], ServiceFixtures::kLow, 1.0);
  EXPECT_NEAR(means[1], ServiceFixtures::kHigh, 1.0);

  const Json t = body(get("trends", "two_level"));
  std::vector<std::size_t> changes;
  for (std::size_t i = 1; i < t["states"].size(); ++i) {
    if (t["states"][i] != t["states"][i - 1]) changes.push_back(i);
  }
  ASSERT_EQ(changes.size(), 2u);
  EXPECT_LE(std::abs(static_cast<long>(changes[0]) - static_cast<long>(ServiceFixtures::kStepUp)), 2);
  EXPECT_LE(std::abs(static_cast<long>(changes[1]) - static_cast<long>(ServiceFixtures::kStepDown)), 2);
  ASSERT_EQ(s["change_times"].size(), 2u);
  EXPECT_EQ(s["change_times"][0], ServiceFixtures::kDayStart + static_cast<std::int64_t>(changes[0]) * 240);
}

TEST_F(ServiceTest, ConstantFixtureHasOneState) {
  const Json s = body(get("trends", "constant/summary"));
  EXPECT_EQ(s["num_states"], 1);
  ASSERT_EQ(s["states"].size(), 1u);
  EXPECT_DOUBLE_EQ(s["states"][0]["occupancy_fraction"].get<double>(), 1.0);
  EXPECT_TRUE(s["change_times"].empty());
}

TEST_F(ServiceTest, ErrorCodes) {
  expect_error(get("ticks", "two_level", "?start=2024-01-01&stop=2024-01-01"), 400);
  expect_error(get("ticks", "two_level", "?start=2024-01-02&stop=2024-01-01"), 400);
  expect_error(get("trends", "two_level", "?start=tomorrow&stop=2024-01-01"), 400);
  expect_error(get("trends", "two_level", "?start=2024-01-01"), 400);
  expect_error(get("ticks", "no_such_probe"), 404);
  expect_error(harness_->get("/api/v1/ticks/9999/two_level" + ServiceHarness::window()), 404);
  expect_error(get("trends", "no_such_probe/summary"), 404);
  expect_error(get("trends", "single"), 422);
  expect_error(get("trends", "single", "?start=2024-02-01&stop=2024-02-02"), 422);
  expect_error(harness_->get("/api/v1/nothing/here"), 404);
}

TEST(ServiceDirect, DurationsArePassthroughOfFittedDiagonal) {
  testkit::TempDir dir("svc_direct");
  ServiceFixtures::write(dir.path());
  const ServiceConfig config = ServiceHarness::default_config();
  auto client = std::make_shared<FixtureClient>(dir.path());
  TrendsService svc(client, config);
  const HttpReply reply = svc.summary(ServiceFixtures::kMsm, "two_level", "2024-01-01", "2024-01-01T12:00");
  ASSERT_EQ(reply.status, 200);
  const Json s = Json::parse(reply.body);

  // Refit with the request-derived seed and read the diagonal directly.
  const std::int64_t t0 = ServiceFixtures::kDayStart;
  const std::int64_t t1 = t0 + 12 * 3600;
  const auto ticks = fetch_measurement(*client, ServiceFixtures::kMsm, "two_level", t0, t1);
  const RegularSeries series = regularize(ticks, t0, t1, 240);
  HdpHmmConfig cfg = config.sampler;
  cfg.seed = derive_seed(config.seed_salt, stable_hash(std::string(ServiceFixtures::kMsm) + "/two_level/" +
                                                       std::to_string(t0) + "/" + std::to_string(t1)));
  const SegmentationResult r = fit(series, cfg);
  ASSERT_EQ(s["num_states"].get<std::size_t>(), r.model.num_states());
  for (std::size_t i = 0; i < r.model.num_states(); ++i) {
    const double pii = r.model.transition(i, i);
    const Json& d = s["states"][i]["expected_duration_steps"];
    if (pii >= 1.0) {
      EXPECT_TRUE(d.is_null());
    } else {
      EXPECT_DOUBLE_EQ(d.get<double>(), 1.0 / (1.0 - pii));
    }
  }

  const HttpReply trends = svc.trends(ServiceFixtures::kMsm, "two_level", "2024-01-01", "2024-01-01T12:00");
  EXPECT_EQ(Json::parse(trends.body)["summary"], s);
  EXPECT_EQ(svc.fits_started(), 1u);
}

TEST(ServiceBudget, SlowFitAnswers503WithRetryHint) {
  ServiceConfig config = ServiceHarness::default_config();
  config.sampler.sweeps = 5000;
  config.sampler.burn_in = 10;
  config.budget_seconds = 0.01;
  testkit::TempDir dir("svc_budget");
  ServiceFixtures::write(dir.path());
  auto svc = std::make_unique<TrendsService>(std::make_shared<FixtureClient>(dir.path()), config);
  const HttpReply reply = svc->trends(ServiceFixtures::kMsm, "two_level", "2024-01-01", "2024-01-01T12:00");
  EXPECT_EQ(reply.status, 503);
  bool hinted = false;
  for (const auto& [k, v] : reply.headers) hinted |= k == "Retry-After" && v == "1";
  EXPECT_TRUE(hinted);
  const auto problems = testkit::schema_violations(Json::parse(reply.body), testkit::shipped_schema("error"));
  EXPECT_TRUE(problems.empty());
}
