#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "ecbm/curvature.hpp"
#include "ecbm/model.hpp"

namespace ecbm {

enum class EditLevel { ConceptLabel, Concept, Data };

struct ConceptLabelEdit {
  struct Cell {
    std::size_t row = 0;
    std::size_t concept_id = 0;
    double value = 0.0;
  };
  std::vector<Cell> cells;
};

struct ConceptRemoval {
  IndexList concepts;
};

struct DataRemoval {
  IndexList rows;
};

using EditRequest = std::variant<ConceptLabelEdit, ConceptRemoval, DataRemoval>;

EditLevel level_of(const EditRequest& r);
std::string_view to_string(EditLevel l);
EditLevel parse_edit_level(std::string_view s);
bool is_empty(const EditRequest& r);
// Range, duplicate and value checks against a dataset. Throws DimensionError / ConfigError.
void validate(const EditRequest& r, const Dataset& d, ConceptLink link);
// The dataset the edited model should match: corrected cells, dropped concepts or dropped rows.
Dataset apply_request(const Dataset& d, const EditRequest& r);

std::string request_to_json(const EditRequest& r);
EditRequest request_from_json(std::string_view text);

enum class Backend { Exact, Ekfac };
enum class HTildeMode { Recompute, Householder, Ridge };
// Target expands around the objective after the edit; Anchor reuses the original objective.
enum class CurvatureSite { Target, Anchor };

std::string_view to_string(Backend b);
Backend parse_backend(std::string_view s);
std::string_view to_string(HTildeMode m);
HTildeMode parse_h_tilde(std::string_view s);

struct EditOptions {
  Backend backend = Backend::Exact;
  // Defaults to hessian for a linear concept predictor and gauss-newton otherwise.
  std::optional<CurvatureMode> concept_mode;
  CurvatureMode label_mode = CurvatureMode::Hessian;
  bool ekfac_label_stage = false;
  double l2_reg = 1e-2;  // must equal the training regularizer
  double ekfac_damping_fraction = 0.01;
  HTildeMode h_tilde = HTildeMode::Recompute;
  double ridge_alpha = 1e-8;
  CurvatureSite site = CurvatureSite::Target;
};

struct EditReport {
  EditLevel level = EditLevel::ConceptLabel;
  bool noop = false;
  double concept_update_norm = 0.0;
  double label_update_norm = 0.0;
  double concept_seconds = 0.0;
  double label_seconds = 0.0;
  Vector label_a;  // data level: influence of the removed label terms
  Vector label_b;  // data level: correction for the shifted concept predictor
  IndexList removed_concepts;
};

struct EditResult {
  Cbm model;
  EditReport report;
};

EditResult apply_edit(const Cbm& m, const Dataset& d, const EditRequest& r, const EditOptions& opt);

enum class ImportanceMetric { ParamNorm, F1Delta };
std::string_view to_string(ImportanceMetric m);
ImportanceMetric parse_importance_metric(std::string_view s);

struct ConceptScore {
  std::size_t concept_id = 0;
  double score = 0.0;
};

// Scores every concept by a single-concept removal edit; sorted by descending score,
// ties broken by concept index. ParamNorm measures the update of the surviving
// parameters; F1Delta evaluates on `eval` (the training data when null).
std::vector<ConceptScore> concept_importance(const Cbm& m, const Dataset& d, const EditOptions& opt,
                                             ImportanceMetric metric, const Dataset* eval = nullptr);

}  // namespace ecbm
