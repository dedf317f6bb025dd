#include "rttseg/series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "rttseg/errors.hpp"

namespace rttseg {

namespace {

using Json = nlohmann::json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

void check_rtt(double v, std::size_t line) {
  if (!std::isfinite(v) || v < 0.0) throw ParseError(line, "rtt must be finite and >= 0");
}

struct Row {
  std::size_t line;
  std::int64_t t;
  std::optional<double> rtt;
};

RegularSeries assemble(const std::vector<Row>& rows, std::optional<std::int64_t> interval) {
  if (rows.empty()) throw SchemaError("series file has no data rows");
  std::int64_t start = rows.front().t;
  for (const auto& r : rows) start = std::min(start, r.t);
  std::int64_t step = 0;
  if (interval) {
    if (*interval <= 0) throw InvalidArgument("interval must be positive");
    step = *interval;
  } else {
    for (const auto& r : rows) step = std::gcd(step, r.t - start);
    if (step == 0) step = 240;
  }
  std::int64_t last = start;
  for (const auto& r : rows) last = std::max(last, r.t);

  RegularSeries series;
  series.start_time = start;
  series.interval = step;
  series.values.assign(static_cast<std::size_t>((last - start) / step + 1), std::nullopt);
  for (const auto& r : rows) {
    if ((r.t - start) % step != 0) {
      throw ParseError(r.line, "timestamp " + std::to_string(r.t) + " is off the " +
                                   std::to_string(step) + " s grid");
    }
    auto& slot = series.values[static_cast<std::size_t>((r.t - start) / step)];
    if (r.rtt && (!slot || *r.rtt < *slot)) slot = r.rtt;
  }
  return series;
}

std::vector<Row> parse_csv_rows(std::string_view text) {
  std::vector<Row> rows;
  std::size_t line_no = 0;
  std::size_t t_col = 0;
  std::size_t rtt_col = 0;
  bool have_header = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (!have_header) {
      auto find = [&](std::string_view name) -> std::size_t {
        auto it = std::find(fields.begin(), fields.end(), name);
        if (it == fields.end()) {
          throw SchemaError("csv header lacks column '" + std::string(name) + "'");
        }
        return static_cast<std::size_t>(it - fields.begin());
      };
      t_col = find("timestamp");
      rtt_col = find("rtt");
      have_header = true;
      continue;
    }
    if (fields.size() <= std::max(t_col, rtt_col)) throw ParseError(line_no, "too few fields");
    const auto t = parse_int(fields[t_col]);
    if (!t || *t < 0) throw ParseError(line_no, "bad timestamp '" + std::string(fields[t_col]) + "'");
    Row row{line_no, *t, std::nullopt};
    if (!fields[rtt_col].empty()) {
      const auto v = parse_double(fields[rtt_col]);
      if (!v) throw ParseError(line_no, "bad rtt '" + std::string(fields[rtt_col]) + "'");
      check_rtt(*v, line_no);
      row.rtt = *v;
    }
    rows.push_back(row);
  }
  if (!have_header) throw SchemaError("csv input is empty");
  return rows;
}

template <typename LineFn>
void for_each_json_line(std::string_view text, LineFn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    Json obj;
    try {
      obj = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ParseError(line_no, e.what());
    }
    if (!obj.is_object()) throw ParseError(line_no, "expected a JSON object");
    if (!obj.contains("t")) throw SchemaError("line " + std::to_string(line_no) + ": missing key 't'");
    if (!obj.contains("rtt")) throw SchemaError("line " + std::to_string(line_no) + ": missing key 'rtt'");
    if (!obj["t"].is_number_integer() || obj["t"].get<std::int64_t>() < 0) {
      throw ParseError(line_no, "'t' must be a non-negative integer");
    }
    fn(line_no, obj);
  }
}

std::vector<Row> parse_jsonl_rows(std::string_view text) {
  std::vector<Row> rows;
  for_each_json_line(text, [&](std::size_t line_no, const Json& obj) {
    Row row{line_no, obj["t"].get<std::int64_t>(), std::nullopt};
    const Json& rtt = obj["rtt"];
    if (rtt.is_number()) {
      row.rtt = rtt.get<double>();
      check_rtt(*row.rtt, line_no);
    } else if (!rtt.is_null()) {
      throw ParseError(line_no, "'rtt' must be a number or null");
    }
    rows.push_back(row);
  });
  return rows;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

bool valid_id(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

}  // namespace

std::vector<double> RegularSeries::present_values() const {
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& v : values) {
    if (v) out.push_back(*v);
  }
  return out;
}

std::size_t RegularSeries::present_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](const auto& v) { return v.has_value(); }));
}

RegularSeries regularize(std::span<const RawTick> ticks, std::int64_t start, std::int64_t stop,
                         std::int64_t interval) {
  if (start >= stop) throw EmptyWindow("regularize: start must be before stop");
  if (interval <= 0) throw InvalidArgument("regularize: interval must be positive");
  RegularSeries series;
  series.start_time = start;
  series.interval = interval;
  series.values.assign(static_cast<std::size_t>((stop - start + interval - 1) / interval),
                       std::nullopt);
  for (const auto& tick : ticks) {
    if (tick.timestamp < 0) throw InvalidTick("tick timestamp is negative");
    for (double v : tick.rtt_values) {
      if (!std::isfinite(v) || v < 0.0) throw InvalidTick("rtt value must be finite and >= 0");
    }
    if (tick.timestamp < start || tick.timestamp >= stop) continue;
    auto& slot = series.values[static_cast<std::size_t>((tick.timestamp - start) / interval)];
    for (double v : tick.rtt_values) {
      if (!slot || v < *slot) slot = v;
    }
  }
  return series;
}

std::vector<RawTick> to_ticks(const RegularSeries& series) {
  std::vector<RawTick> ticks;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series.values[i]) ticks.push_back({series.time_at(i), {*series.values[i]}});
  }
  return ticks;
}

SeriesFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return SeriesFormat::kCsv;
  if (ext == ".jsonl" || ext == ".json") return SeriesFormat::kJsonl;
  throw InvalidArgument("cannot infer series format from '" + path.string() + "'");
}

RegularSeries parse_series(std::string_view text, SeriesFormat format,
                           std::optional<std::int64_t> interval) {
  auto rows = format == SeriesFormat::kCsv ? parse_csv_rows(text) : parse_jsonl_rows(text);
  return assemble(rows, interval);
}

RegularSeries read_series(const std::filesystem::path& path, SeriesFormat format,
                          std::optional<std::int64_t> interval) {
  return parse_series(read_file(path), format, interval);
}

std::string format_series(const RegularSeries& series, SeriesFormat format) {
  std::string out;
  if (format == SeriesFormat::kCsv) {
    out += "timestamp,rtt\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
      out += std::to_string(series.time_at(i));
      out += ',';
      if (series.values[i]) out += format_double(*series.values[i]);
      out += '\n';
    }
  } else {
    for (std::size_t i = 0; i < series.size(); ++i) {
      out += "{\"t\":" + std::to_string(series.time_at(i)) + ",\"rtt\":";
      out += series.values[i] ? format_double(*series.values[i]) : "null";
      out += "}\n";
    }
  }
  return out;
}

void write_series(const std::filesystem::path& path, const RegularSeries& series,
                  SeriesFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << format_series(series, format);
}

std::vector<RawTick> FixtureClient::fetch(std::string_view msm_id, std::string_view prb_id,
                                          std::int64_t start, std::int64_t stop) const {
  if (!valid_id(msm_id) || !valid_id(prb_id)) {
    throw NotFound("unknown measurement " + std::string(msm_id) + "/" + std::string(prb_id));
  }
  const auto path = root_ / std::string(msm_id) / (std::string(prb_id) + ".jsonl");
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw NotFound("unknown measurement " + std::string(msm_id) + "/" + std::string(prb_id));
  }
  std::string text;
  try {
    text = read_file(path);
  } catch (const NotFound& e) {
    throw TransportError(e.what());
  }
  std::vector<RawTick> ticks;
  if (stop <= start) return ticks;
  for_each_json_line(text, [&](std::size_t line_no, const Json& obj) {
    RawTick tick{obj["t"].get<std::int64_t>(), {}};
    if (tick.timestamp < start || tick.timestamp >= stop) return;
    const Json& rtt = obj["rtt"];
    if (rtt.is_number()) {
      tick.rtt_values.push_back(rtt.get<double>());
    } else if (rtt.is_array()) {
      for (const auto& v : rtt) {
        if (!v.is_number()) throw ParseError(line_no, "'rtt' array must hold numbers");
        tick.rtt_values.push_back(v.get<double>());
      }
    } else if (!rtt.is_null()) {
      throw ParseError(line_no, "'rtt' must be a number, an array or null");
    }
    ticks.push_back(std::move(tick));
  });
  return ticks;
}

std::vector<RawTick> fetch_measurement(const MeasurementClient& client, std::string_view msm_id,
                                       std::string_view prb_id, std::int64_t start,
                                       std::int64_t stop) {
  return client.fetch(msm_id, prb_id, start, stop);
}

void write_fixture(const std::filesystem::path& root, std::string_view msm_id,
                   std::string_view prb_id, std::span<const RawTick> ticks) {
  const auto dir = root / std::string(msm_id);
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / (std::string(prb_id) + ".jsonl"), std::ios::binary);
  for (const auto& tick : ticks) {
    Json obj;
    obj["t"] = tick.timestamp;
    obj["rtt"] = tick.rtt_values;
    out << obj.dump() << '\n';
  }
}

}  // namespace rttseg
