#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rttseg/changepoint.hpp"
#include "rttseg/json_io.hpp"
#include "synthetic.hpp"

using namespace rttseg;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun rttseg_cli(const std::string& args, const testkit::TempDir& dir) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string("'") + RTTSEG_CLI + "' " + args + " >'" + out.string() + "' 2>'" +
                          err.string() + "'";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = testkit::read_file(out);
  r.err = testkit::read_file(err);
  return r;
}

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

// Piecewise levels with occasional upward spikes on top of Gaussian noise.
RegularSeries spiky_levels(std::uint64_t seed, std::size_t length) {
  Rng rng(seed);
  RegularSeries s;
  s.start_time = 1'700'000'160;
  const double levels[3] = {12.0, 30.0, 21.0};
  for (std::size_t t = 0; t < length; ++t) {
    double v = levels[(t / 100) % 3] + rng.normal(0.0, 1.5);
    if (rng.bernoulli(0.05)) v += 10.0 + std::abs(rng.normal(0.0, 5.0));
    s.values.push_back(v);
  }
  return s;
}

const char* kQuick = " --sweeps 120 --burn-in 40";

}  // namespace

TEST(CliSegment, ConstantSeriesHasOneState) {
  testkit::TempDir dir("cli_const");
  Rng rng(1);
  write_series(dir / "flat.csv", testkit::constant_series(40.0, 200, 0.2, rng), SeriesFormat::kCsv);
  const CliRun r = rttseg_cli("segment " + quoted(dir / "flat.csv") + " --out " + quoted(dir / "res"), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(testkit::read_file(dir / "res" / "flat.json"));
  EXPECT_EQ(j["num_states"], 1);
  EXPECT_TRUE(j.contains("config"));
  EXPECT_EQ(j["config"]["sweeps"], HdpHmmConfig{}.sweeps);
}

TEST(CliSegment, ThreadCountDoesNotChangeOutputs) {
  testkit::TempDir dir("cli_threads");
  std::string inputs;
  for (int i = 0; i < 5; ++i) {
    Rng rng(10 + i);
    const fs::path p = dir / ("s" + std::to_string(i) + (i % 2 ? ".csv" : ".jsonl"));
    write_series(p, testkit::two_level_series(10, 30 + i, 40, 200, 1.0, rng),
                 i % 2 ? SeriesFormat::kCsv : SeriesFormat::kJsonl);
    inputs += quoted(p) + " ";
  }
  ASSERT_EQ(rttseg_cli("segment " + inputs + "--threads 1 --seed 7" + kQuick + " --out " + quoted(dir / "one"), dir).code, 0);
  ASSERT_EQ(rttseg_cli("segment " + inputs + "--threads 4 --seed 7" + kQuick + " --out " + quoted(dir / "four"), dir).code, 0);
  for (int i = 0; i < 5; ++i) {
    const std::string name = "s" + std::to_string(i) + ".json";
    EXPECT_EQ(testkit::read_file(dir / "one" / name), testkit::read_file(dir / "four" / name)) << name;
  }
}

TEST(CliSegment, ThreeStateFileRecoversThreeStates) {
  testkit::TempDir dir("cli_three");
  write_series(dir / "three.csv", testkit::three_state_series(3).series, SeriesFormat::kCsv);
  const CliRun r = rttseg_cli("segment " + quoted(dir / "three.csv") + " --out " + quoted(dir / "res"), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_result(dir / "res" / "three.json").model.num_states(), 3u);
}

TEST(CliSegment, BadInputIsDataErrorAndOthersAreStillWritten) {
  testkit::TempDir dir("cli_bad");
  Rng rng(2);
  write_series(dir / "good.csv", testkit::constant_series(5.0, 50, 0.1, rng), SeriesFormat::kCsv);
  write_text(dir / "broken.csv", "timestamp,rtt\n0,1.0\nabc,2.0\n");
  const CliRun r = rttseg_cli("segment " + quoted(dir / "good.csv") + " " + quoted(dir / "broken.csv") + " " +
                               quoted(dir / "absent.csv") + kQuick + " --out " + quoted(dir / "res"),
                           dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(fs::exists(dir / "res" / "good.json"));
  EXPECT_NE(r.err.find("broken"), std::string::npos);
}

TEST(CliExitCodes, UsageErrors) {
  testkit::TempDir dir("cli_usage");
  EXPECT_EQ(rttseg_cli("", dir).code, 1);
  EXPECT_EQ(rttseg_cli("segment", dir).code, 1);
  EXPECT_EQ(rttseg_cli("frobnicate", dir).code, 1);
  EXPECT_EQ(rttseg_cli("segment x.csv --out o --sweeps 10 --burn-in 10", dir).code, 1);
  EXPECT_EQ(rttseg_cli("segment x.csv --out o --conditional sideways", dir).code, 1);
  EXPECT_EQ(rttseg_cli("--version", dir).code, 0);
}

TEST(CliScore, HandWorkedCaseAtFileLevel) {
  testkit::TempDir dir("cli_score");
  SegmentationResult r;
  r.series_id = "probe";
  r.series.start_time = 0;
  r.series.interval = 10;
  r.series.values.assign(100, 1.0);
  r.states.assign(100, 0);
  for (std::size_t t = 10; t < 50; ++t) r.states[t] = 1;
  Matrix pi(2, 2, 0.5);
  r.model = make_gaussian_hmm(pi, {0.5, 0.5}, {{1.0, 1.0}, {2.0, 1.0}});
  r.model.refresh_summaries();
  fs::create_directories(dir / "pred");
  write_result(dir / "pred" / "probe.json", r);
  // Predicted changes at 100 and 500.
  write_text(dir / "truth.csv", "time,magnitude\n110,2\n900,8\n");
  const CliRun run = rttseg_cli("score --pred " + quoted(dir / "pred") + " --truth " + quoted(dir / "truth.csv") +
                                 " --tolerance 6",
                             dir);
  ASSERT_EQ(run.code, 0) << run.err;
  const Json j = Json::parse(run.out);
  EXPECT_EQ(j["aggregate"]["true_positive"], 1);
  EXPECT_EQ(j["aggregate"]["false_positive"], 1);
  EXPECT_EQ(j["aggregate"]["false_negative"], 1);
  EXPECT_DOUBLE_EQ(j["aggregate"]["precision"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(j["aggregate"]["recall"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(j["aggregate"]["weighted_recall"].get<double>(), 0.2);
  EXPECT_EQ(j["series"][0]["series_id"], "probe");

  write_text(dir / "exact.csv", "time,magnitude\n100,5\n500,1\n");
  const Json exact = Json::parse(rttseg_cli("score --pred " + quoted(dir / "pred") + " --truth " +
                                                quoted(dir / "exact.csv") + " --tolerance 0",
                                            dir)
                                     .out);
  EXPECT_DOUBLE_EQ(exact["aggregate"]["precision"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(exact["aggregate"]["weighted_recall"].get<double>(), 1.0);

  EXPECT_EQ(rttseg_cli("score --pred " + quoted(dir / "pred") + " --truth " + quoted(dir / "missing.csv"), dir).code,
            2);
}

TEST(CliScore, SegmentThenScoreMatchesInProcessMetrics) {
  testkit::TempDir dir("cli_roundtrip");
  fs::create_directories(dir / "truth");
  std::string inputs;
  std::vector<std::vector<TruthLabel>> truths;
  for (int i = 0; i < 3; ++i) {
    const auto sim = testkit::three_state_series(40 + i, 600);
    const std::string id = "gen" + std::to_string(i);
    write_series(dir / (id + ".csv"), sim.series, SeriesFormat::kCsv);
    inputs += quoted(dir / (id + ".csv")) + " ";
    std::ostringstream truth;
    truth << "time,magnitude\n";
    const auto cps = extract_changepoints(sim.states, sim.series).change_times;
    for (auto t : cps) truth << t << ",\n";
    write_text(dir / "truth" / (id + ".csv"), truth.str());
    truths.push_back(label_magnitudes(sim.series, cps));
  }
  ASSERT_EQ(rttseg_cli("segment " + inputs + "--out " + quoted(dir / "pred") + kQuick, dir).code, 0);
  const CliRun run = rttseg_cli("score --pred " + quoted(dir / "pred") + " --truth " + quoted(dir / "truth"), dir);
  ASSERT_EQ(run.code, 0) << run.err;
  const Json j = Json::parse(run.out);

  std::vector<CpdMetrics> parts;
  for (int i = 0; i < 3; ++i) {
    const auto r = read_result(dir / "pred" / ("gen" + std::to_string(i) + ".json"));
    parts.push_back(score(extract_changepoints(r.states, r.series), truths[i], 2 * 240));
  }
  const CpdMetrics all = combine(parts);
  EXPECT_EQ(j["aggregate"]["true_positive"], all.true_positive);
  EXPECT_EQ(j["aggregate"]["false_positive"], all.false_positive);
  EXPECT_DOUBLE_EQ(j["aggregate"]["precision"].get<double>(), all.precision);
  EXPECT_DOUBLE_EQ(j["aggregate"]["recall"].get<double>(), all.recall);
  EXPECT_DOUBLE_EQ(j["aggregate"]["weighted_recall"].get<double>(), all.weighted_recall);
}

TEST(CliAggregate, CountsPerBucket) {
  testkit::TempDir dir("cli_agg");
  auto make = [&](const std::string& id, std::vector<std::size_t> states) {
    SegmentationResult r;
    r.series_id = id;
    r.series.start_time = 0;
    r.series.interval = 240;
    r.series.values.assign(states.size(), 1.0);
    r.states = std::move(states);
    Matrix pi(2, 2, 0.5);
    r.model = make_gaussian_hmm(pi, {0.5, 0.5}, {{1.0, 1.0}, {2.0, 1.0}});
    r.model.refresh_summaries();
    write_result(dir / (id + ".json"), r);
  };
  make("a", {0, 1, 1, 0, 0, 0});  // changes at 240 and 720
  make("b", {0, 0, 1, 1, 1, 1});  // change at 480
  const CliRun r = rttseg_cli("aggregate " + quoted(dir / "a.json") + " " + quoted(dir / "b.json") + " --bucket 360",
                           dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "bucket_start,count\n0,1\n360,1\n720,1\n1080,0\n");
  EXPECT_EQ(rttseg_cli("aggregate " + quoted(dir / "a.json") + " --start 10 --stop 10", dir).code, 2);
}

TEST(CliCompare, ConstantSeriesIsOneStateForEveryModel) {
  testkit::TempDir dir("cli_cmp_const");
  Rng rng(3);
  write_series(dir / "flat.csv", testkit::constant_series(25.0, 300, 0.3, rng), SeriesFormat::kCsv);
  const CliRun r = rttseg_cli("compare " + quoted(dir / "flat.csv") + " --k-max 5", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  ASSERT_EQ(j["models"].size(), 4u);
  for (const auto& m : j["models"]) EXPECT_EQ(m["num_states"], 1) << m["model"];
}

TEST(CliCompare, ModelSubsetAndUnknownName) {
  testkit::TempDir dir("cli_cmp_subset");
  Rng rng(4);
  write_series(dir / "s.csv", testkit::two_level_series(10, 20, 50, 200, 1.0, rng), SeriesFormat::kCsv);
  const CliRun r = rttseg_cli("compare " + quoted(dir / "s.csv") + " --models gmm", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  ASSERT_EQ(j["models"].size(), 1u);
  EXPECT_EQ(j["models"][0]["model"], "gmm");
  EXPECT_TRUE(j["models"][0].contains("bic"));
  EXPECT_EQ(rttseg_cli("compare " + quoted(dir / "s.csv") + " --models gmm,lstm", dir).code, 1);
}

TEST(CliCompare, StickyModelSegmentsNoMoreThanBicHmm) {
  testkit::TempDir dir("cli_cmp_order");
  std::vector<std::size_t> sticky;
  std::vector<std::size_t> hmm;
  for (int seed = 0; seed < 20; ++seed) {
    const fs::path p = dir / ("s" + std::to_string(seed) + ".csv");
    write_series(p, spiky_levels(500 + seed, 600), SeriesFormat::kCsv);
    const CliRun r = rttseg_cli("compare " + quoted(p) + " --models hmm,hdphmm --k-max 6 --seed " + std::to_string(seed) +
                                 " --sweeps 300 --burn-in 100",
                             dir);
    ASSERT_EQ(r.code, 0) << r.err;
    const Json j = Json::parse(r.out);
    for (const auto& m : j["models"]) {
      (m["model"] == "hmm" ? hmm : sticky).push_back(m["num_segments"].get<std::size_t>());
    }
  }
  std::sort(sticky.begin(), sticky.end());
  std::sort(hmm.begin(), hmm.end());
  EXPECT_LE(sticky[10], hmm[10]) << "median sticky " << sticky[10] << " vs hmm " << hmm[10];
}

TEST(CliValidate, ReportsKsSummaryAndCsv) {
  testkit::TempDir dir("cli_validate");
  std::string inputs;
  for (int i = 0; i < 4; ++i) {
    Rng rng(60 + i);
    const fs::path p = dir / ("v" + std::to_string(i) + ".csv");
    write_series(p, testkit::two_level_series(10, 25, 30, 150, 1.0, rng), SeriesFormat::kCsv);
    inputs += quoted(p) + " ";
  }
  ASSERT_EQ(rttseg_cli("segment " + inputs + "--out " + quoted(dir / "res") + kQuick, dir).code, 0);
  std::string results;
  for (int i = 0; i < 4; ++i) results += quoted(dir / "res" / ("v" + std::to_string(i) + ".json")) + " ";
  const CliRun a = rttseg_cli("validate " + results + "--seed 3 --csv " + quoted(dir / "pairs.csv"), dir);
  ASSERT_EQ(a.code, 0) << a.err;
  const Json j = Json::parse(a.out);
  EXPECT_EQ(j["pairs"], 4);
  EXPECT_TRUE(j["ks_statistic"].is_number());
  EXPECT_EQ(j["consistent"].get<bool>(), j["ks_statistic"].get<double>() < j["critical_value"].get<double>());
  const std::string csv = testkit::read_file(dir / "pairs.csv");
  EXPECT_EQ(csv.rfind("observed,simulated\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  const CliRun b = rttseg_cli("validate " + results + "--seed 3 --threads 3", dir);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(rttseg_cli("validate " + quoted(dir / "res" / "v0.json"), dir).code, 1);
}
