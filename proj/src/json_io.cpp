#include "rttseg/json_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "rttseg/changepoint.hpp"
#include "rttseg/errors.hpp"

namespace rttseg {

namespace {

constexpr const char* kResultFormat = "rttseg.segmentation/1";

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json prior_to_json(const NixParams& p) {
  return {{"mu0", p.mu0}, {"kappa0", p.kappa0}, {"nu0", p.nu0}, {"sigma0_sq", p.sigma0_sq}};
}

NixParams prior_from_json(const Json& j) {
  NixParams p;
  p.mu0 = j.at("mu0").get<double>();
  p.kappa0 = j.at("kappa0").get<double>();
  p.nu0 = j.at("nu0").get<double>();
  p.sigma0_sq = j.at("sigma0_sq").get<double>();
  return p;
}

Json mixture_to_json(const GaussianMixture& m) {
  Json out = Json::array();
  for (const auto& c : m.components) {
    out.push_back({{"weight", c.weight}, {"mu", c.params.mu}, {"sigma_sq", c.params.sigma_sq}});
  }
  return out;
}

GaussianMixture mixture_from_json(const Json& j) {
  GaussianMixture m;
  for (const auto& c : j) {
    m.components.push_back(
        {c.at("weight").get<double>(),
         GaussParams{c.at("mu").get<double>(), c.at("sigma_sq").get<double>()}});
  }
  return m;
}

template <typename F>
auto schema_guard(F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw SchemaError(e.what());
  }
}

}  // namespace

Json config_to_json(const HdpHmmConfig& c) {
  Json j = {{"alpha", c.alpha},
            {"gamma", c.gamma},
            {"kappa", c.kappa},
            {"emission_alpha", c.emission_alpha},
            {"sweeps", c.sweeps},
            {"burn_in", c.burn_in},
            {"seed", c.seed},
            {"state_moves", c.state_moves},
            {"conditional", c.conditional == StateConditional::kCompact ? "compact" : "exact"}};
  j["emission_prior"] = c.emission_prior ? prior_to_json(*c.emission_prior) : Json(nullptr);
  if (c.hyperprior) {
    const auto& h = *c.hyperprior;
    j["hyperprior"] = {{"gamma_shape", h.gamma_shape},
                       {"gamma_rate", h.gamma_rate},
                       {"alpha_kappa_shape", h.alpha_kappa_shape},
                       {"alpha_kappa_rate", h.alpha_kappa_rate},
                       {"rho_a", h.rho_a},
                       {"rho_b", h.rho_b}};
  } else {
    j["hyperprior"] = nullptr;
  }
  return j;
}

HdpHmmConfig config_from_json(const Json& j) {
  return schema_guard([&] {
    HdpHmmConfig c;
    c.alpha = j.value("alpha", c.alpha);
    c.gamma = j.value("gamma", c.gamma);
    c.kappa = j.value("kappa", c.kappa);
    c.emission_alpha = j.value("emission_alpha", c.emission_alpha);
    c.sweeps = j.value("sweeps", c.sweeps);
    c.burn_in = j.value("burn_in", c.burn_in);
    c.seed = j.value("seed", c.seed);
    c.state_moves = j.value("state_moves", c.state_moves);
    const std::string form = j.value("conditional", std::string("compact"));
    if (form != "compact" && form != "exact") throw SchemaError("unknown conditional: " + form);
    c.conditional = form == "compact" ? StateConditional::kCompact : StateConditional::kExact;
    if (j.contains("emission_prior") && !j["emission_prior"].is_null()) {
      c.emission_prior = prior_from_json(j["emission_prior"]);
    }
    if (j.contains("hyperprior") && !j["hyperprior"].is_null()) {
      const Json& h = j["hyperprior"];
      Hyperprior hp;
      hp.gamma_shape = h.value("gamma_shape", hp.gamma_shape);
      hp.gamma_rate = h.value("gamma_rate", hp.gamma_rate);
      hp.alpha_kappa_shape = h.value("alpha_kappa_shape", hp.alpha_kappa_shape);
      hp.alpha_kappa_rate = h.value("alpha_kappa_rate", hp.alpha_kappa_rate);
      hp.rho_a = h.value("rho_a", hp.rho_a);
      hp.rho_b = h.value("rho_b", hp.rho_b);
      c.hyperprior = hp;
    }
    return c;
  });
}

Json state_table(const SegmentationResult& result) {
  const std::size_t k = result.model.num_states();
  std::vector<std::size_t> occupancy(k, 0);
  for (std::size_t z : result.states) ++occupancy[z];
  Json out = Json::array();
  for (std::size_t s = 0; s < k; ++s) {
    const StateSummary& summary = result.model.per_state[s];
    out.push_back({{"id", s},
                   {"mean_ms", summary.mean_ms},
                   {"std_ms", summary.std_ms},
                   {"expected_duration_steps", finite_or_null(summary.expected_duration)},
                   {"occupancy_fraction",
                    static_cast<double>(occupancy[s]) / static_cast<double>(result.states.size())},
                   {"components", s < result.components_per_state.size()
                                      ? result.components_per_state[s]
                                      : result.model.emissions[s].components.size()}});
  }
  return out;
}

Json result_to_json(const SegmentationResult& r) {
  Json values = Json::array();
  for (const auto& v : r.series.values) values.push_back(v ? Json(*v) : Json(nullptr));

  Json transition = Json::array();
  for (std::size_t i = 0; i < r.model.transition.rows(); ++i) {
    const auto row = r.model.transition.row(i);
    transition.push_back(std::vector<double>(row.begin(), row.end()));
  }
  Json emissions = Json::array();
  for (const auto& m : r.model.emissions) emissions.push_back(mixture_to_json(m));

  std::vector<std::size_t> diag_k;
  std::vector<double> diag_lp;
  for (const auto& d : r.diagnostics) {
    diag_k.push_back(d.num_states);
    diag_lp.push_back(d.log_posterior);
  }

  return {{"format", kResultFormat},
          {"series_id", r.series_id},
          {"start_time", r.series.start_time},
          {"interval", r.series.interval},
          {"length", r.series.size()},
          {"values", values},
          {"num_states", r.model.num_states()},
          {"states", state_table(r)},
          {"state_sequence", r.states},
          {"change_times", extract_changepoints(r.states, r.series).change_times},
          {"log_likelihood", r.log_likelihood},
          {"model",
           {{"transition", transition},
            {"initial", r.model.initial},
            {"beta", r.model.beta},
            {"emissions", emissions}}},
          {"config", config_to_json(r.config)},
          {"diagnostics", {{"num_states", diag_k}, {"log_posterior", diag_lp}}}};
}

SegmentationResult result_from_json(const Json& j) {
  return schema_guard([&] {
    if (j.value("format", std::string()) != kResultFormat) {
      throw SchemaError("not a segmentation result document");
    }
    SegmentationResult r;
    r.series_id = j.at("series_id").get<std::string>();
    r.series.start_time = j.at("start_time").get<std::int64_t>();
    r.series.interval = j.at("interval").get<std::int64_t>();
    for (const auto& v : j.at("values")) {
      r.series.values.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
    }
    r.states = j.at("state_sequence").get<StateSequence>();
    r.log_likelihood = j.at("log_likelihood").get<double>();

    const Json& m = j.at("model");
    const auto rows = m.at("transition").get<std::vector<std::vector<double>>>();
    r.model.transition = Matrix(rows.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) throw SchemaError("transition matrix is not square");
      for (std::size_t k = 0; k < rows.size(); ++k) r.model.transition(i, k) = rows[i][k];
    }
    r.model.initial = m.at("initial").get<std::vector<double>>();
    r.model.beta = m.at("beta").get<std::vector<double>>();
    for (const auto& e : m.at("emissions")) r.model.emissions.push_back(mixture_from_json(e));
    for (const auto& s : j.at("states")) r.components_per_state.push_back(s.at("components").get<std::size_t>());

    if (r.states.size() != r.series.size()) throw SchemaError("state sequence length differs from values");
    for (std::size_t z : r.states) {
      if (z >= r.model.num_states()) throw SchemaError("state id out of range");
    }
    try {
      r.model.validate();
    } catch (const InvalidArgument& e) {
      throw SchemaError(e.what());
    }
    r.model.refresh_summaries();

    if (j.contains("config")) r.config = config_from_json(j["config"]);
    if (j.contains("diagnostics")) {
      const auto ks = j["diagnostics"].at("num_states").get<std::vector<std::size_t>>();
      const auto lps = j["diagnostics"].at("log_posterior").get<std::vector<double>>();
      for (std::size_t i = 0; i < std::min(ks.size(), lps.size()); ++i) r.diagnostics.push_back({ks[i], lps[i]});
    }
    return r;
  });
}

SegmentationResult read_result(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(1, path.string() + ": " + e.what());
  }
  return result_from_json(j);
}

void write_result(const std::filesystem::path& path, const SegmentationResult& result) {
  std::ofstream out(path);
  if (!out) throw TransportError("cannot write " + path.string());
  out << result_to_json(result).dump(2) << '\n';
}

}  // namespace rttseg
