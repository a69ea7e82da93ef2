#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <numeric>
#include <set>

#include "ecbm/errors.hpp"
#include "ecbm/harness.hpp"

namespace ecbm {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

json config_json(const ScenarioConfig& c, bool with_output) {
  json j = {
      {"seed", c.seed},
      {"n", c.n},
      {"d_i", c.d_i},
      {"k", c.k},
      {"d_o", c.d_o},
      {"test_fraction", c.test_fraction},
      {"model", c.model},
      {"hidden", c.hidden},
      {"link", std::string(to_string(c.link))},
      {"label_loss", std::string(to_string(c.label_loss))},
      {"label_bias", c.label_bias},
      {"noise",
       {{"level", std::string(to_string(c.noise.level))}, {"fraction", c.noise.fraction}, {"portion", c.noise.portion}}},
      {"backend", std::string(to_string(c.backend))},
      {"h_tilde", std::string(to_string(c.h_tilde))},
      {"ridge_alpha", c.ridge_alpha},
      {"curvature_site", c.site == CurvatureSite::Target ? "target" : "anchor"},
      {"concept_curvature", c.concept_curvature ? std::string(to_string(*c.concept_curvature)) : "auto"},
      {"ekfac_damping", c.ekfac_damping_fraction},
      {"training",
       {{"max_iters", c.training.max_iters},
        {"step_size", c.training.step_size},
        {"grad_tol", c.training.grad_tol},
        {"l2_reg", c.training.l2_reg},
        {"line_search", c.training.line_search}}},
      {"repetitions", c.repetitions},
      {"rounds", c.rounds},
      {"round_fraction", c.round_fraction},
      {"importance",
       {{"metric", std::string(to_string(c.importance_metric))}, {"top", c.top_t}, {"bottom", c.bottom_t}}},
  };
  if (with_output) j["output"] = c.output;
  return j;
}

json metrics_json(const Metrics& m) { return {{"f1", m.f1}, {"accuracy", m.accuracy}}; }

}  // namespace

void validate(const ScenarioConfig& c) {
  if (c.n == 0 || c.d_i == 0 || c.k == 0 || c.d_o < 2) throw ConfigError("dimensions must be positive (d_o >= 2)");
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  if (c.model != "linear" && c.model != "mlp") throw ConfigError("model must be linear or mlp");
  if (c.model == "mlp" && c.hidden.empty()) throw ConfigError("mlp model needs at least one hidden layer");
  for (auto h : c.hidden)
    if (h == 0) throw ConfigError("hidden widths must be positive");
  if (!(c.noise.fraction >= 0.0 && c.noise.fraction <= 0.5)) throw ConfigError("noise fraction must lie in [0, 0.5]");
  if (!(c.noise.portion >= 0.0 && c.noise.portion <= 1.0)) throw ConfigError("noise portion must lie in [0, 1]");
  if (!(c.ekfac_damping_fraction >= 0.0)) throw ConfigError("ekfac_damping must be non-negative");
  if (!(c.ridge_alpha > 0.0)) throw ConfigError("ridge_alpha must be positive");
  if (c.repetitions == 0) throw ConfigError("repetitions must be positive");
  if (!(c.round_fraction >= 0.0 && c.round_fraction <= 0.5)) throw ConfigError("round_fraction must lie in [0, 0.5]");
  validate(c.training);
}

ScenarioConfig scenario_from_json(std::string_view text) {
  ScenarioConfig c;
  try {
    const auto j = json::parse(text);
    reject_unknown(j,
                   {"seed", "n", "d_i", "k", "d_o", "test_fraction", "model", "hidden", "link", "label_loss",
                    "label_bias", "noise", "backend", "h_tilde", "ridge_alpha", "curvature_site", "concept_curvature",
                    "ekfac_damping", "training",
                    "repetitions", "rounds", "round_fraction", "importance", "output"},
                   "config");
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("seed", c.seed);
    get("n", c.n);
    get("d_i", c.d_i);
    get("k", c.k);
    get("d_o", c.d_o);
    get("test_fraction", c.test_fraction);
    get("model", c.model);
    get("hidden", c.hidden);
    if (j.contains("link")) c.link = parse_concept_link(j.at("link").get<std::string>());
    if (j.contains("label_loss")) c.label_loss = parse_label_loss(j.at("label_loss").get<std::string>());
    get("label_bias", c.label_bias);
    if (j.contains("noise")) {
      const auto& nz = j.at("noise");
      reject_unknown(nz, {"level", "fraction", "portion"}, "noise");
      if (nz.contains("level")) c.noise.level = parse_edit_level(nz.at("level").get<std::string>());
      if (nz.contains("fraction")) c.noise.fraction = nz.at("fraction").get<double>();
      if (nz.contains("portion")) c.noise.portion = nz.at("portion").get<double>();
    }
    if (j.contains("backend")) c.backend = parse_backend(j.at("backend").get<std::string>());
    if (j.contains("h_tilde")) c.h_tilde = parse_h_tilde(j.at("h_tilde").get<std::string>());
    get("ridge_alpha", c.ridge_alpha);
    if (j.contains("curvature_site")) {
      const auto s = j.at("curvature_site").get<std::string>();
      if (s == "target") {
        c.site = CurvatureSite::Target;
      } else if (s == "anchor") {
        c.site = CurvatureSite::Anchor;
      } else {
        throw ConfigError("curvature_site must be target or anchor");
      }
    }
    if (j.contains("concept_curvature")) {
      const auto s = j.at("concept_curvature").get<std::string>();
      if (s == "auto") {
        c.concept_curvature.reset();
      } else {
        c.concept_curvature = parse_curvature_mode(s);
      }
    }
    get("ekfac_damping", c.ekfac_damping_fraction);
    if (j.contains("training")) {
      const auto& t = j.at("training");
      reject_unknown(t, {"max_iters", "step_size", "grad_tol", "l2_reg", "line_search"}, "training");
      if (t.contains("max_iters")) c.training.max_iters = t.at("max_iters").get<std::size_t>();
      if (t.contains("step_size")) c.training.step_size = t.at("step_size").get<double>();
      if (t.contains("grad_tol")) c.training.grad_tol = t.at("grad_tol").get<double>();
      if (t.contains("l2_reg")) c.training.l2_reg = t.at("l2_reg").get<double>();
      if (t.contains("line_search")) c.training.line_search = t.at("line_search").get<bool>();
    }
    get("repetitions", c.repetitions);
    get("rounds", c.rounds);
    get("round_fraction", c.round_fraction);
    if (j.contains("importance")) {
      const auto& im = j.at("importance");
      reject_unknown(im, {"metric", "top", "bottom"}, "importance");
      if (im.contains("metric")) c.importance_metric = parse_importance_metric(im.at("metric").get<std::string>());
      if (im.contains("top")) c.top_t = im.at("top").get<std::size_t>();
      if (im.contains("bottom")) c.bottom_t = im.at("bottom").get<std::size_t>();
    }
    get("output", c.output);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (c.model == "linear") c.hidden.clear();
  validate(c);
  return c;
}

std::string scenario_to_json(const ScenarioConfig& c) { return config_json(c, true).dump(2) + "\n"; }

std::uint64_t scenario_hash(const ScenarioConfig& c) {
  const auto text = config_json(c, false).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string record_to_json_line(const RunRecord& r, bool timings) {
  json j;
  j["kind"] = r.kind;
  j["scenario_hash"] = hash_hex(scenario_hash(r.config));
  j["config"] = config_json(r.config, false);
  j["failures"] = r.failures;
  if (!r.repetitions.empty()) {
    json reps = json::array();
    std::vector<double> f_orig, f_noisy, f_edit, f_retrain;
    for (const auto& rep : r.repetitions) {
      json o = {{"seed", rep.seed},
                {"original", metrics_json(rep.original)},
                {"noisy", metrics_json(rep.noisy)},
                {"edited", metrics_json(rep.edited)},
                {"retrained", metrics_json(rep.retrained)},
                {"agreement", rep.agreement},
                {"concept_relative", rep.concept_relative},
                {"label_relative", rep.label_relative}};
      if (timings) o["wall_seconds"] = {{"edit", rep.edit_seconds}, {"retrain", rep.retrain_seconds}};
      reps.push_back(o);
      f_orig.push_back(rep.original.f1);
      f_noisy.push_back(rep.noisy.f1);
      f_edit.push_back(rep.edited.f1);
      f_retrain.push_back(rep.retrained.f1);
    }
    j["repetitions"] = reps;
    auto stat = [](const std::vector<double>& v) { return json{{"mean", mean(v)}, {"sd", sample_sd(v)}}; };
    j["summary_f1"] = {{"original", stat(f_orig)},
                       {"noisy", stat(f_noisy)},
                       {"edited", stat(f_edit)},
                       {"retrained", stat(f_retrain)}};
  }
  if (!r.periodic.empty()) {
    json per = json::array();
    for (const auto& p : r.periodic) {
      json rounds = json::array();
      for (const auto& rr : p.rounds) {
        json o = {{"round", rr.round},
                  {"edited", metrics_json(rr.edited)},
                  {"retrained", metrics_json(rr.retrained)},
                  {"f1_gap", std::abs(rr.edited.f1 - rr.retrained.f1)}};
        if (timings) o["wall_seconds"] = {{"edit", rr.edit_seconds}, {"retrain", rr.retrain_seconds}};
        rounds.push_back(o);
      }
      per.push_back({{"seed", p.seed}, {"rounds", rounds}});
    }
    j["periodic"] = per;
  }
  if (!r.importance.empty()) {
    json imp = json::array();
    for (const auto& im : r.importance) {
      json ranking = json::array();
      for (const auto& s : im.ranking) ranking.push_back({{"concept", s.concept_id}, {"score", s.score}});
      imp.push_back({{"seed", im.seed},
                     {"ranking", ranking},
                     {"top", im.top},
                     {"bottom", im.bottom},
                     {"original", metrics_json(im.original)},
                     {"top_edited", metrics_json(im.top_edited)},
                     {"top_retrained", metrics_json(im.top_retrained)},
                     {"bottom_edited", metrics_json(im.bottom_edited)},
                     {"bottom_retrained", metrics_json(im.bottom_retrained)}});
    }
    j["importance"] = imp;
  }
  return j.dump() + "\n";
}

}  // namespace ecbm
