#include "rttseg/commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "rttseg/baselines.hpp"
#include "rttseg/changepoint.hpp"
#include "rttseg/dpmm.hpp"
#include "rttseg/errors.hpp"
#include "rttseg/json_io.hpp"
#include "rttseg/validation.hpp"

namespace rttseg {

namespace fs = std::filesystem;

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

std::vector<std::exception_ptr> parallel_for(std::size_t n, std::size_t threads,
                                             const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t count = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < count; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return errors;
}

namespace {

// Rethrows the first captured error after reporting all of them.
void report_errors(const std::vector<std::exception_ptr>& errors,
                   const std::vector<std::string>& names, std::ostream& err) {
  std::exception_ptr first;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    if (!first) first = errors[i];
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      err << names[i] << ": " << e.what() << '\n';
    }
  }
  if (first) std::rethrow_exception(first);
}

void emit(const std::string& text, const std::optional<fs::path>& path, std::ostream& out) {
  if (!path) {
    out << text;
    return;
  }
  std::ofstream file(*path);
  if (!file) throw TransportError("cannot write " + path->string());
  file << text;
}

std::vector<fs::path> json_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw NotFound("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  for (auto& c : out) {
    c.erase(0, c.find_first_not_of(" \t\r"));
    c.erase(c.find_last_not_of(" \t\r") + 1);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& text, std::size_t line, const char* what) {
  T v{};
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ParseError(line, std::string("bad ") + what + " '" + text + "'");
  }
  return v;
}

struct TruthRow {
  std::int64_t time = 0;
  std::optional<double> magnitude;
};

using TruthTable = std::map<std::string, std::vector<TruthRow>>;

// Reads a truth CSV. With `fixed_id` the file has no series column.
void read_truth_file(const fs::path& path, const std::optional<std::string>& fixed_id,
                     TruthTable& table) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open truth file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path.string() + ": empty truth file");
  const auto header = split_csv(line);
  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto time_col = column("time");
  const auto mag_col = column("magnitude");
  const auto series_col = column("series");
  if (!time_col || !mag_col) throw SchemaError(path.string() + ": header needs time,magnitude");
  if (!fixed_id && !series_col) throw SchemaError(path.string() + ": header needs a series column");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv(line);
    const std::size_t need = std::max({*time_col, *mag_col, series_col.value_or(0)}) + 1;
    if (cells.size() < need) throw ParseError(lineno, "too few fields");
    TruthRow row;
    row.time = parse_number<std::int64_t>(cells[*time_col], lineno, "time");
    if (!cells[*mag_col].empty()) row.magnitude = parse_number<double>(cells[*mag_col], lineno, "magnitude");
    table[fixed_id ? *fixed_id : cells[*series_col]].push_back(row);
  }
}

std::vector<TruthLabel> resolve_truth(const std::vector<TruthRow>& rows, const RegularSeries& series) {
  std::vector<std::int64_t> times;
  for (const auto& r : rows) times.push_back(r.time);
  const auto derived = label_magnitudes(series, times);
  std::map<std::int64_t, double> by_time;
  for (const auto& d : derived) by_time[d.time] = d.magnitude;
  std::vector<TruthLabel> out;
  for (const auto& r : rows) out.push_back({r.time, r.magnitude ? *r.magnitude : by_time[r.time]});
  return out;
}

Json metrics_json(const CpdMetrics& m) {
  return {{"true_positive", m.true_positive},   {"false_positive", m.false_positive},
          {"false_negative", m.false_negative}, {"precision", m.precision},
          {"recall", m.recall},                 {"weighted_recall", m.weighted_recall}};
}

std::size_t count_segments(const std::vector<std::optional<std::size_t>>& labels) {
  std::size_t n = 0;
  std::optional<std::size_t> prev;
  for (const auto& l : labels) {
    if (!l) continue;
    if (!prev || *prev != *l) ++n;
    prev = l;
  }
  return n;
}

Json labels_json(const std::vector<std::optional<std::size_t>>& labels) {
  Json out = Json::array();
  for (const auto& l : labels) out.push_back(l ? Json(*l) : Json(nullptr));
  return out;
}

}  // namespace

int run_segment(const SegmentOptions& options, std::ostream& out, std::ostream& err) {
  if (options.inputs.empty()) throw UsageError("no input series");
  if (options.threads == 0) throw UsageError("threads must be at least 1");
  options.config.validate();
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto& p : options.inputs) {
    ids.push_back(p.stem().string());
    if (!seen.insert(ids.back()).second) throw UsageError("duplicate series id " + ids.back());
  }
  fs::create_directories(options.out_dir);

  const auto errors = parallel_for(options.inputs.size(), options.threads, [&](std::size_t i) {
    const RegularSeries series =
        read_series(options.inputs[i], format_from_path(options.inputs[i]), options.interval);
    HdpHmmConfig cfg = options.config;
    cfg.seed = derive_seed(options.config.seed, stable_hash(ids[i]));
    SegmentationResult result = fit(series, cfg);
    result.series_id = ids[i];
    write_result(options.out_dir / (ids[i] + ".json"), result);
  });
  std::size_t written = 0;
  for (const auto& e : errors) written += e ? 0 : 1;
  out << "segmented " << written << " of " << ids.size() << " series into " << options.out_dir.string()
      << '\n';
  report_errors(errors, ids, err);
  return kExitOk;
}

int run_score(const ScoreOptions& options, std::ostream& out, std::ostream& /*err*/) {
  if (options.tolerance_ticks < 0.0) throw UsageError("tolerance must be non-negative");
  std::vector<SegmentationResult> results;
  for (const auto& p : json_files(options.pred_dir)) results.push_back(read_result(p));
  if (results.empty()) throw NotFound("no result documents in " + options.pred_dir.string());

  TruthTable truth;
  if (fs::is_directory(options.truth)) {
    for (const auto& r : results) {
      read_truth_file(options.truth / (r.series_id + ".csv"), r.series_id, truth);
    }
  } else {
    std::ifstream probe(options.truth);
    if (!probe) throw NotFound("cannot open truth file " + options.truth.string());
    std::string header;
    std::getline(probe, header);
    const auto cols = split_csv(header);
    const bool has_series = std::find(cols.begin(), cols.end(), "series") != cols.end();
    if (!has_series && results.size() != 1) {
      throw UsageError("a time,magnitude truth file needs exactly one prediction");
    }
    read_truth_file(options.truth, has_series ? std::nullopt : std::optional(results[0].series_id),
                    truth);
  }

  std::vector<CpdMetrics> parts;
  Json per_series = Json::array();
  for (const auto& r : results) {
    const auto labels = resolve_truth(truth[r.series_id], r.series);
    const auto tolerance = static_cast<std::int64_t>(std::llround(options.tolerance_ticks *
                                                                  static_cast<double>(r.series.interval)));
    const CpdMetrics m = score(extract_changepoints(r.states, r.series, r.series_id), labels, tolerance);
    parts.push_back(m);
    Json entry = metrics_json(m);
    entry["series_id"] = r.series_id;
    per_series.push_back(entry);
  }
  const Json doc = {{"tolerance_ticks", options.tolerance_ticks},
                    {"aggregate", metrics_json(combine(parts))},
                    {"series", per_series}};
  emit(doc.dump(2) + "\n", options.out, out);
  return kExitOk;
}

int run_aggregate(const AggregateOptions& options, std::ostream& out, std::ostream& /*err*/) {
  if (options.results.empty()) throw UsageError("no result files");
  if (options.bucket <= 0) throw UsageError("bucket width must be positive");
  std::vector<ChangePointSet> sets;
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = std::numeric_limits<std::int64_t>::min();
  for (const auto& p : options.results) {
    const SegmentationResult r = read_result(p);
    sets.push_back(extract_changepoints(r.states, r.series, r.series_id));
    lo = std::min(lo, r.series.start_time);
    hi = std::max(hi, r.series.time_at(r.series.size()));
  }
  const ChangeFrequency f =
      change_frequency(sets, options.start.value_or(lo), options.stop.value_or(hi), options.bucket);
  std::ostringstream csv;
  csv << "bucket_start,count\n";
  for (std::size_t i = 0; i < f.counts.size(); ++i) {
    csv << f.bucket_start + static_cast<std::int64_t>(i) * f.bucket_width << ',' << f.counts[i] << '\n';
  }
  emit(csv.str(), options.out, out);
  return kExitOk;
}

int run_compare(const CompareOptions& options, std::ostream& out, std::ostream& /*err*/) {
  static const std::set<std::string> known{"gmm", "hmm", "dpmm", "hdphmm"};
  if (options.models.empty()) throw UsageError("model list is empty");
  for (const auto& m : options.models) {
    if (!known.count(m)) throw UsageError("unknown model '" + m + "' (expected gmm, hmm, dpmm, hdphmm)");
  }
  if (options.k_max == 0) throw UsageError("k-max must be at least 1");
  options.config.validate();

  const RegularSeries series =
      read_series(options.series, format_from_path(options.series), options.interval);
  const std::vector<double> present = series.present_values();
  if (present.size() < 2) throw TooShort("need at least two present values");
  std::vector<std::size_t> ks;
  for (std::size_t k = 1; k <= std::min(options.k_max, present.size()); ++k) ks.push_back(k);

  Json models = Json::array();
  for (const auto& name : options.models) {
    Rng rng(derive_seed(options.config.seed, stable_hash(name)));
    Json entry = {{"model", name}};
    std::vector<std::optional<std::size_t>> labels(series.size());
    if (name == "gmm") {
      const FitReport rep = select_k_by_bic(
          [&](std::size_t k, Rng& r) { return gmm_em_fit(present, k, {}, r); }, ks, rng);
      labels = gmm_labels(rep.mixture, series);
      entry["num_states"] = rep.k;
      entry["log_likelihood"] = rep.log_likelihood;
      entry["bic"] = rep.bic;
    } else if (name == "hmm") {
      const FitReport rep = select_k_by_bic(
          [&](std::size_t k, Rng& r) { return hmm_baum_welch_fit(series, k, {}, r); }, ks, rng);
      const StateSequence path = viterbi(rep.hmm, series);
      for (std::size_t t = 0; t < series.size(); ++t) {
        if (series.values[t]) labels[t] = path[t];
      }
      entry["num_states"] = rep.k;
      entry["log_likelihood"] = rep.log_likelihood;
      entry["bic"] = rep.bic;
    } else if (name == "dpmm") {
      const DpmmFit dp = dpmm_fit_labeled(present, options.config.emission_alpha, default_prior(present),
                                          options.config.sweeps, options.config.burn_in, rng);
      double ll = 0.0;
      for (double y : present) ll += dpmm_logpdf(dp.model, y);
      std::size_t i = 0;
      for (std::size_t t = 0; t < series.size(); ++t) {
        if (series.values[t]) labels[t] = dp.labels[i++];
      }
      entry["num_states"] = dp.model.mixture.components.size();
      entry["log_likelihood"] = ll;
    } else {
      HdpHmmConfig cfg = options.config;
      cfg.seed = rng.engine()();
      const SegmentationResult r = fit(series, cfg);
      for (std::size_t t = 0; t < series.size(); ++t) {
        if (series.values[t]) labels[t] = r.states[t];
      }
      entry["num_states"] = r.model.num_states();
      entry["log_likelihood"] = r.log_likelihood;
    }
    entry["num_segments"] = count_segments(labels);
    entry["states"] = labels_json(labels);
    models.push_back(entry);
  }
  const Json doc = {{"series_id", options.series.stem().string()},
                    {"length", series.size()},
                    {"present", present.size()},
                    {"models", models}};
  emit(doc.dump(2) + "\n", options.out, out);
  return kExitOk;
}

int run_validate(const ValidateOptions& options, std::ostream& out, std::ostream& /*err*/) {
  if (options.results.size() < 2) throw UsageError("validation needs at least two result files");
  if (!(options.level > 0.0 && options.level < 1.0)) throw UsageError("level must lie in (0, 1)");
  std::vector<SegmentationResult> results;
  for (const auto& p : options.results) results.push_back(read_result(p));
  Rng rng(options.seed);
  const auto pairs = likelihood_pairs(results, rng, options.threads);
  std::vector<double> obs;
  std::vector<double> sim;
  for (const auto& p : pairs) {
    obs.push_back(p.observed_loglik);
    sim.push_back(p.simulated_loglik);
  }
  const double d = ks_statistic(obs, sim);
  const double crit = ks_critical_value(obs.size(), sim.size(), options.level);
  if (options.csv) {
    std::ofstream file(*options.csv);
    if (!file) throw TransportError("cannot write " + options.csv->string());
    write_pairs_csv(file, pairs);
  }
  const Json doc = {{"pairs", pairs.size()},
                    {"ks_statistic", d},
                    {"critical_value", crit},
                    {"level", options.level},
                    {"consistent", d < crit}};
  out << doc.dump(2) << '\n';
  return kExitOk;
}

int run_serve(const ServeOptions& options, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(options.fixtures)) {
    throw NotFound("fixture root is not a directory: " + options.fixtures.string());
  }
  TrendsService service(std::make_shared<FixtureClient>(options.fixtures), options.service);
  out << "listening on http://" << options.service.host << ':' << options.service.port << "/api/v1\n"
      << std::flush;
  if (!run_server(service)) {
    err << "cannot listen on " << options.service.host << ':' << options.service.port << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace rttseg
