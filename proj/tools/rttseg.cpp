#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rttseg/commands.hpp"

namespace {

using rttseg::HdpHmmConfig;

struct SamplerFlags {
  HdpHmmConfig config;
  std::string conditional = "compact";
  bool hyperprior = false;
};

void add_sampler_flags(CLI::App& app, SamplerFlags& f) {
  app.add_option("--sweeps", f.config.sweeps, "Gibbs sweeps")->capture_default_str();
  app.add_option("--burn-in", f.config.burn_in, "Sweeps discarded before the MAP search")
      ->capture_default_str();
  app.add_option("--seed", f.config.seed, "Base random seed")->capture_default_str();
  app.add_option("--kappa", f.config.kappa, "Self-transition bias")->capture_default_str();
  app.add_option("--alpha", f.config.alpha, "Transition concentration")->capture_default_str();
  app.add_option("--gamma", f.config.gamma, "Top-level concentration")->capture_default_str();
  app.add_option("--emission-alpha", f.config.emission_alpha, "Emission mixture concentration")
      ->capture_default_str();
  app.add_option("--state-moves", f.config.state_moves, "Split/merge proposals per sweep")
      ->capture_default_str();
  app.add_option("--conditional", f.conditional, "State update form")
      ->check(CLI::IsMember({"compact", "exact"}))
      ->capture_default_str();
  app.add_flag("--hyperprior", f.hyperprior, "Resample alpha, kappa and gamma");
}

HdpHmmConfig resolve(const SamplerFlags& f) {
  HdpHmmConfig c = f.config;
  c.conditional = f.conditional == "exact" ? rttseg::StateConditional::kExact
                                           : rttseg::StateConditional::kCompact;
  if (f.hyperprior) c.hyperprior = rttseg::Hyperprior{};
  if (c.burn_in >= c.sweeps) throw rttseg::UsageError("--sweeps must exceed --burn-in");
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RTT time series segmentation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "rttseg 1.0.0");

  SamplerFlags seg_flags;
  rttseg::SegmentOptions seg;
  auto* segment = app.add_subcommand("segment", "Segment series files into per-series JSON results");
  segment->add_option("inputs", seg.inputs, "Series files (.csv or .jsonl)")->required();
  segment->add_option("--out", seg.out_dir, "Output directory")->required();
  segment->add_option("--interval", seg.interval, "Tick interval in seconds");
  segment->add_option("--threads", seg.threads, "Worker threads")->capture_default_str();
  add_sampler_flags(*segment, seg_flags);

  rttseg::ScoreOptions score;
  auto* score_cmd = app.add_subcommand("score", "Score predicted change points against labels");
  score_cmd->add_option("--pred", score.pred_dir, "Directory of segment results")->required();
  score_cmd->add_option("--truth", score.truth, "Truth CSV file or directory")->required();
  score_cmd->add_option("--tolerance", score.tolerance_ticks, "Matching tolerance in ticks")
      ->capture_default_str();
  score_cmd->add_option("--out", score.out, "Write metrics JSON here instead of stdout");

  rttseg::AggregateOptions agg;
  auto* aggregate = app.add_subcommand("aggregate", "Count change points per time bucket");
  aggregate->add_option("results", agg.results, "Segment result files")->required();
  aggregate->add_option("--bucket", agg.bucket, "Bucket width in seconds")->capture_default_str();
  aggregate->add_option("--start", agg.start, "Window start, epoch seconds");
  aggregate->add_option("--stop", agg.stop, "Window stop, epoch seconds");
  aggregate->add_option("--out", agg.out, "Write CSV here instead of stdout");

  SamplerFlags cmp_flags;
  rttseg::CompareOptions cmp;
  auto* compare = app.add_subcommand("compare", "Fit the baseline models and the sticky HDP-HMM on one series");
  compare->add_option("series", cmp.series, "Series file")->required();
  compare->add_option("--models", cmp.models, "Comma separated subset of gmm,hmm,dpmm,hdphmm")
      ->delimiter(',');
  compare->add_option("--interval", cmp.interval, "Tick interval in seconds");
  compare->add_option("--k-max", cmp.k_max, "Largest K tried by the BIC baselines")->capture_default_str();
  compare->add_option("--out", cmp.out, "Write JSON here instead of stdout");
  add_sampler_flags(*compare, cmp_flags);

  rttseg::ValidateOptions val;
  auto* validate = app.add_subcommand("validate", "Compare observed and simulated log-likelihoods");
  validate->add_option("results", val.results, "Segment result files")->required();
  validate->add_option("--seed", val.seed, "Simulation seed")->capture_default_str();
  validate->add_option("--threads", val.threads, "Worker threads")->capture_default_str();
  validate->add_option("--level", val.level, "KS significance level")->capture_default_str();
  validate->add_option("--csv", val.csv, "Write observed,simulated pairs here");

  SamplerFlags srv_flags;
  rttseg::ServeOptions srv;
  srv_flags.config.sweeps = srv.service.sampler.sweeps;
  auto* serve = app.add_subcommand("serve", "Run the trends HTTP service over fixture files");
  serve->add_option("--fixtures", srv.fixtures, "Fixture root <msm>/<prb>.jsonl")
      ->envname("RTTSEG_FIXTURES")
      ->required();
  serve->add_option("--host", srv.service.host, "Listen address")->envname("RTTSEG_HOST")->capture_default_str();
  serve->add_option("--port", srv.service.port, "Listen port")->envname("RTTSEG_PORT")->capture_default_str();
  serve->add_option("--interval", srv.service.interval, "Tick interval in seconds")
      ->envname("RTTSEG_INTERVAL")
      ->capture_default_str();
  serve->add_option("--seed-salt", srv.service.seed_salt, "Salt mixed into per-request seeds")
      ->envname("RTTSEG_SEED_SALT")
      ->capture_default_str();
  serve->add_option("--cache", srv.service.cache_capacity, "Cached segmentations")->capture_default_str();
  serve->add_option("--budget", srv.service.budget_seconds, "Seconds to wait for a fit before 503")
      ->capture_default_str();
  add_sampler_flags(*serve, srv_flags);
  serve->get_option("--sweeps")->envname("RTTSEG_SWEEPS");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? rttseg::kExitOk : rttseg::kExitUsage;
  }

  return rttseg::guarded(
      [&]() -> int {
        if (*segment) {
          if (seg.threads < 1) throw rttseg::UsageError("--threads must be at least 1");
          seg.config = resolve(seg_flags);
          return rttseg::run_segment(seg, std::cout, std::cerr);
        }
        if (*score_cmd) return rttseg::run_score(score, std::cout, std::cerr);
        if (*aggregate) return rttseg::run_aggregate(agg, std::cout, std::cerr);
        if (*compare) {
          cmp.config = resolve(cmp_flags);
          return rttseg::run_compare(cmp, std::cout, std::cerr);
        }
        if (*validate) {
          if (val.threads < 1) throw rttseg::UsageError("--threads must be at least 1");
          return rttseg::run_validate(val, std::cout, std::cerr);
        }
        srv.service.sampler = resolve(srv_flags);
        return rttseg::run_serve(srv, std::cout, std::cerr);
      },
      std::cerr);
}
