#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <optional>

#include "ecbm/editor.hpp"
#include "ecbm/errors.hpp"
#include "ecbm/harness.hpp"
#include "ecbm/io.hpp"
#include "ecbm/oracle.hpp"

namespace fs = std::filesystem;
using namespace ecbm;

namespace {

constexpr int kOk = 0;
constexpr int kInvalidConfig = 2;
constexpr int kNumerical = 3;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string backend;
  std::string h_tilde;
  std::string model;
  std::string out;
};

ScenarioConfig load_config(const Globals& g) {
  ScenarioConfig c = g.config.empty() ? ScenarioConfig{} : scenario_from_json(read_text_file(g.config));
  if (g.seed) c.seed = *g.seed;
  if (!g.backend.empty()) c.backend = parse_backend(g.backend);
  if (!g.h_tilde.empty()) c.h_tilde = parse_h_tilde(g.h_tilde);
  if (!g.model.empty()) {
    c.model = g.model;
    if (c.model == "linear") c.hidden.clear();
    if (c.model == "mlp" && c.hidden.empty()) c.hidden = {16};
  }
  validate(c);
  return c;
}

fs::path test_path_for(const fs::path& train) {
  auto p = train;
  p.replace_extension();
  p += ".test.csv";
  return p;
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text_file(out, text);
  }
}

// Appends the deterministic report line; wall-times go to a sidecar file.
void emit_record(const std::string& out, const RunRecord& rec) {
  if (out.empty()) {
    std::cout << record_to_json_line(rec, false);
    return;
  }
  append_text_file(out, record_to_json_line(rec, false));
  append_text_file(out + ".timings.jsonl", record_to_json_line(rec, true));
}

nlohmann::json edit_report_json(const EditReport& r) {
  nlohmann::json j = {{"level", std::string(to_string(r.level))},
                      {"noop", r.noop},
                      {"concept_update_norm", r.concept_update_norm},
                      {"label_update_norm", r.label_update_norm},
                      {"removed_concepts", r.removed_concepts}};
  if (r.level == EditLevel::Data && !r.noop) {
    j["label_a_norm"] = r.label_a.norm();
    j["label_b_norm"] = r.label_b.norm();
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-form editing of concept bottleneck models"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Scenario config JSON")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Override the scenario seed");
  app.add_option("--backend", g.backend, "exact | ekfac")->check(CLI::IsMember({"exact", "ekfac"}));
  app.add_option("--h-tilde", g.h_tilde, "recompute | householder | ridge")
      ->check(CLI::IsMember({"recompute", "householder", "ridge"}));
  app.add_option("--model", g.model, "linear | mlp")->check(CLI::IsMember({"linear", "mlp"}));
  app.add_option("--out", g.out, "Output path");

  std::string data, checkpoint, request, model_a, model_b, test, eval, metric = "f1-delta";
  std::size_t rounds = 0, top = 0, bottom = 0;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset (train CSV at --out, test CSV beside it)");
  auto* train = app.add_subcommand("train", "Train a model on a CSV dataset");
  train->add_option("--data", data, "Training CSV")->required()->check(CLI::ExistingFile);
  auto* edit = app.add_subcommand("edit", "Apply a closed-form edit to a checkpoint");
  edit->add_option("--data", data, "Training CSV the checkpoint was fit on")->required()->check(CLI::ExistingFile);
  edit->add_option("--checkpoint", checkpoint, "Model checkpoint JSON")->required()->check(CLI::ExistingFile);
  edit->add_option("--request", request, "Edit request JSON")->required()->check(CLI::ExistingFile);
  auto* retrain = app.add_subcommand("retrain", "Retrain from scratch on the edited data");
  retrain->add_option("--data", data, "Training CSV")->required()->check(CLI::ExistingFile);
  retrain->add_option("--request", request, "Edit request JSON")->required()->check(CLI::ExistingFile);
  auto* cmp = app.add_subcommand("compare", "Compare two checkpoints on a test CSV");
  cmp->add_option("--a", model_a, "First checkpoint")->required()->check(CLI::ExistingFile);
  cmp->add_option("--b", model_b, "Reference checkpoint")->required()->check(CLI::ExistingFile);
  cmp->add_option("--test", test, "Test CSV")->required()->check(CLI::ExistingFile);
  auto* bench = app.add_subcommand("bench", "Edit versus retrain over seeded repetitions");
  auto* periodic = app.add_subcommand("periodic", "Sequential edits versus cumulative retraining");
  periodic->add_option("--rounds", rounds, "Number of rounds (default from config)");
  auto* rank = app.add_subcommand("rank-concepts", "Concept importance ranking");
  rank->add_option("--data", data, "Training CSV (with --checkpoint ranks a given model)")->check(CLI::ExistingFile);
  rank->add_option("--checkpoint", checkpoint, "Model checkpoint JSON")->check(CLI::ExistingFile);
  rank->add_option("--eval", eval, "Evaluation CSV for f1-delta")->check(CLI::ExistingFile);
  rank->add_option("--metric", metric, "param-norm | f1-delta")->check(CLI::IsMember({"param-norm", "f1-delta"}));
  rank->add_option("--top", top, "Top set size for the perturbation run (default from config)");
  rank->add_option("--bottom", bottom, "Bottom set size for the perturbation run (default from config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalidConfig;
  }

  try {
    const auto cfg = load_config(g);
    const auto spec = cbm_spec(cfg);
    const auto tc = train_config(cfg, cfg.seed);
    if (synth->parsed()) {
      const fs::path out = g.out.empty() ? fs::path("synth.csv") : fs::path(g.out);
      const auto d = synth_dataset(cfg, cfg.seed);
      save_dataset(d.train, out);
      save_dataset(d.test, test_path_for(out));
    } else if (train->parsed()) {
      const auto d = load_dataset(data);
      emit(g.out, checkpoint_to_json(train_cbm(d, spec, tc).model));
    } else if (edit->parsed()) {
      const auto d = load_dataset(data);
      const auto m = load_checkpoint(checkpoint);
      const auto req = request_from_json(read_text_file(request));
      const auto res = apply_edit(m, d, req, edit_options(cfg));
      emit(g.out, checkpoint_to_json(res.model));
      std::cerr << edit_report_json(res.report).dump() << "\n";
    } else if (retrain->parsed()) {
      const auto d = load_dataset(data);
      const auto req = request_from_json(read_text_file(request));
      emit(g.out, checkpoint_to_json(retrain_after_edit(d, req, spec, tc).model));
    } else if (cmp->parsed()) {
      emit(g.out, report_to_json(compare(load_checkpoint(model_a), load_checkpoint(model_b), load_dataset(test))));
    } else if (bench->parsed()) {
      emit_record(g.out.empty() ? cfg.output : g.out, run_edit_vs_retrain(cfg));
    } else if (periodic->parsed()) {
      emit_record(g.out.empty() ? cfg.output : g.out, run_periodic(cfg, rounds > 0 ? rounds : cfg.rounds));
    } else if (rank->parsed()) {
      if (!checkpoint.empty() || !data.empty()) {
        if (checkpoint.empty() || data.empty()) throw ConfigError("rank-concepts needs both --data and --checkpoint");
        const auto d = load_dataset(data);
        std::optional<Dataset> ev;
        if (!eval.empty()) ev = load_dataset(eval);
        const auto scores = concept_importance(load_checkpoint(checkpoint), d, edit_options(cfg),
                                               parse_importance_metric(metric), ev ? &*ev : nullptr);
        nlohmann::json j = nlohmann::json::array();
        for (const auto& s : scores) j.push_back({{"concept", s.concept_id}, {"score", s.score}});
        emit(g.out, j.dump(2) + "\n");
      } else {
        emit_record(g.out.empty() ? cfg.output : g.out,
                    run_importance(cfg, top > 0 ? top : cfg.top_t, bottom > 0 ? bottom : cfg.bottom_t));
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const StaleOperatorError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  }
  return kOk;
}
