#include <cmath>
#include <json.hpp>
#include <set>
#include <utility>

#include "ecbm/editor.hpp"
#include "ecbm/errors.hpp"

namespace ecbm {

using nlohmann::json;

EditLevel level_of(const EditRequest& r) { return static_cast<EditLevel>(r.index()); }

std::string_view to_string(EditLevel l) {
  switch (l) {
    case EditLevel::ConceptLabel:
      return "concept_label";
    case EditLevel::Concept:
      return "concept";
    case EditLevel::Data:
      return "data";
  }
  return "";
}

EditLevel parse_edit_level(std::string_view s) {
  if (s == "concept_label") return EditLevel::ConceptLabel;
  if (s == "concept") return EditLevel::Concept;
  if (s == "data") return EditLevel::Data;
  throw ConfigError("unknown edit level: " + std::string(s));
}

bool is_empty(const EditRequest& r) {
  return std::visit(
      [](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ConceptLabelEdit>) return x.cells.empty();
        if constexpr (std::is_same_v<T, ConceptRemoval>) return x.concepts.empty();
        if constexpr (std::is_same_v<T, DataRemoval>) return x.rows.empty();
      },
      r);
}

void validate(const EditRequest& r, const Dataset& d, ConceptLink link) {
  if (const auto* e = std::get_if<ConceptLabelEdit>(&r)) {
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& c : e->cells) {
      if (c.row >= d.size() || c.concept_id >= d.num_concepts()) throw DimensionError("edited cell out of range");
      if (!seen.insert({c.row, c.concept_id}).second) throw DimensionError("duplicate edited cell");
      if (!std::isfinite(c.value)) throw ConfigError("edited concept value must be finite");
      if (link == ConceptLink::SigmoidBce && (c.value < 0.0 || c.value > 1.0))
        throw ConfigError("edited concept value must lie in [0, 1] for the sigmoid-bce link");
    }
  } else if (const auto* m = std::get_if<ConceptRemoval>(&r)) {
    const auto idx = normalize_indices(m->concepts, d.num_concepts(), "concept");
    if (idx.size() != m->concepts.size()) throw DimensionError("duplicate concept index");
    if (idx.size() >= d.num_concepts()) throw DimensionError("cannot remove every concept");
  } else {
    const auto& rows = std::get<DataRemoval>(r).rows;
    const auto idx = normalize_indices(rows, d.size(), "row");
    if (idx.size() != rows.size()) throw DimensionError("duplicate row index");
    if (idx.size() >= d.size()) throw DimensionError("cannot remove every row");
  }
}

Dataset apply_request(const Dataset& d, const EditRequest& r) {
  if (const auto* e = std::get_if<ConceptLabelEdit>(&r)) {
    Dataset out = d;
    for (const auto& c : e->cells) {
      if (c.row >= d.size() || c.concept_id >= d.num_concepts()) throw DimensionError("edited cell out of range");
      out.concepts(static_cast<Eigen::Index>(c.row), static_cast<Eigen::Index>(c.concept_id)) = c.value;
    }
    return out;
  }
  if (const auto* m = std::get_if<ConceptRemoval>(&r)) return drop_concepts(d, m->concepts);
  return drop_rows(d, std::get<DataRemoval>(r).rows);
}

std::string request_to_json(const EditRequest& r) {
  json j;
  j["level"] = std::string(to_string(level_of(r)));
  if (const auto* e = std::get_if<ConceptLabelEdit>(&r)) {
    json pairs = json::array();
    for (const auto& c : e->cells) pairs.push_back(json::array({c.row, c.concept_id, c.value}));
    j["pairs"] = pairs;
  } else if (const auto* m = std::get_if<ConceptRemoval>(&r)) {
    j["concepts"] = m->concepts;
  } else {
    j["rows"] = std::get<DataRemoval>(r).rows;
  }
  return j.dump() + "\n";
}

EditRequest request_from_json(std::string_view text) {
  try {
    const auto j = json::parse(text);
    switch (parse_edit_level(j.at("level").get<std::string>())) {
      case EditLevel::ConceptLabel: {
        ConceptLabelEdit e;
        for (const auto& p : j.at("pairs")) {
          if (!p.is_array() || p.size() != 3) throw ConfigError("each pair must be [row, concept, value]");
          e.cells.push_back({p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>(), p.at(2).get<double>()});
        }
        return e;
      }
      case EditLevel::Concept:
        return ConceptRemoval{j.at("concepts").get<IndexList>()};
      case EditLevel::Data:
        return DataRemoval{j.at("rows").get<IndexList>()};
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed edit request: ") + e.what());
  }
  throw ConfigError("malformed edit request");
}

std::string_view to_string(Backend b) { return b == Backend::Exact ? "exact" : "ekfac"; }

Backend parse_backend(std::string_view s) {
  if (s == "exact") return Backend::Exact;
  if (s == "ekfac") return Backend::Ekfac;
  throw ConfigError("unknown backend: " + std::string(s));
}

std::string_view to_string(HTildeMode m) {
  switch (m) {
    case HTildeMode::Recompute:
      return "recompute";
    case HTildeMode::Householder:
      return "householder";
    case HTildeMode::Ridge:
      return "ridge";
  }
  return "";
}

HTildeMode parse_h_tilde(std::string_view s) {
  if (s == "recompute") return HTildeMode::Recompute;
  if (s == "householder") return HTildeMode::Householder;
  if (s == "ridge") return HTildeMode::Ridge;
  throw ConfigError("unknown h-tilde mode: " + std::string(s));
}

std::string_view to_string(ImportanceMetric m) { return m == ImportanceMetric::ParamNorm ? "param-norm" : "f1-delta"; }

ImportanceMetric parse_importance_metric(std::string_view s) {
  if (s == "param-norm") return ImportanceMetric::ParamNorm;
  if (s == "f1-delta") return ImportanceMetric::F1Delta;
  throw ConfigError("unknown importance metric: " + std::string(s));
}

}  // namespace ecbm
