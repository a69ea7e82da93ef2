#include <doctest.h>

#include <json.hpp>
#include <set>

#include "ecbm/errors.hpp"
#include "ecbm/harness.hpp"
#include "support/fixtures.hpp"

using namespace ecbm;

namespace {

ScenarioConfig small_linear() {
  ScenarioConfig c;
  c.n = 80;
  c.d_i = 4;
  c.k = 4;
  c.d_o = 3;
  c.model = "linear";
  c.hidden.clear();
  c.repetitions = 2;
  c.training.l2_reg = 0.1;
  return c;
}

}  // namespace

TEST_CASE("synthetic data is deterministic per seed") {
  ScenarioConfig c;
  const auto a = synth_dataset(c, 4);
  const auto b = synth_dataset(c, 4);
  const auto other = synth_dataset(c, 5);
  CHECK(a.train.inputs == b.train.inputs);
  CHECK(a.test.labels == b.test.labels);
  CHECK(a.train.inputs != other.train.inputs);
  CHECK(a.train.size() == 240);
  CHECK(a.test.size() == 60);
  CHECK(a.train.num_concepts() == c.k);
  CHECK(a.train.num_classes == c.d_o);
  CHECK((a.train.concepts.array() * (1.0 - a.train.concepts.array())).isZero());
  const std::set<int> classes(a.train.labels.begin(), a.train.labels.end());
  CHECK(classes.size() == c.d_o);
}

TEST_CASE("noise injection counts and corrections") {
  ScenarioConfig c;
  const auto clean = synth_dataset(c, 1).train;
  const auto n = clean.size();
  const auto k = clean.num_concepts();

  SUBCASE("data") {
    const auto noisy = inject_noise(clean, {EditLevel::Data, 0.1, 0.5}, 3);
    const auto& rows = std::get<DataRemoval>(noisy.correction).rows;
    CHECK(rows.size() == 24);
    const std::set<std::size_t> bad(rows.begin(), rows.end());
    CHECK(bad.size() == rows.size());
    for (std::size_t i = 0; i < n; ++i) CHECK((noisy.data.labels[i] != clean.labels[i]) == (bad.count(i) == 1));
    const auto fixed = apply_request(noisy.data, noisy.correction);
    CHECK(fixed.labels == drop_rows(clean, rows).labels);
  }
  SUBCASE("concept labels") {
    const auto noisy = inject_noise(clean, {EditLevel::ConceptLabel, 0.1, 0.5}, 3);
    const auto& cells = std::get<ConceptLabelEdit>(noisy.correction).cells;
    CHECK(cells.size() == static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n * k))));
    CHECK((noisy.data.concepts - clean.concepts).cwiseAbs().sum() == doctest::Approx(static_cast<double>(cells.size())));
    CHECK(apply_request(noisy.data, noisy.correction).concepts == clean.concepts);
  }
  SUBCASE("concepts") {
    const auto noisy = inject_noise(clean, {EditLevel::Concept, 0.1, 0.5}, 3);
    const auto& gone = std::get<ConceptRemoval>(noisy.correction).concepts;
    CHECK(gone.size() == 1);
    const double flipped = (noisy.data.concepts - clean.concepts).cwiseAbs().sum();
    CHECK(flipped == doctest::Approx(static_cast<double>(n / 2)));
    CHECK(apply_request(noisy.data, noisy.correction).concepts == drop_concepts(clean, gone).concepts);
  }
  SUBCASE("zero fraction is a no-op") {
    const auto noisy = inject_noise(clean, {EditLevel::Data, 0.0, 0.5}, 3);
    CHECK(is_empty(noisy.correction));
    CHECK(noisy.data.labels == clean.labels);
  }
  CHECK_THROWS_AS(inject_noise(clean, {EditLevel::Data, 0.7, 0.5}, 3), ConfigError);
}

TEST_CASE("scenario configs are strict and hash canonically") {
  ScenarioConfig c;
  const auto text = scenario_to_json(c);
  const auto back = scenario_from_json(text);
  CHECK(scenario_to_json(back) == text);
  CHECK(scenario_hash(back) == scenario_hash(c));
  CHECK(nlohmann::json::parse(text).at("concept_curvature") == "ggn");

  auto with_out = c;
  with_out.output = "elsewhere.jsonl";
  CHECK(scenario_hash(with_out) == scenario_hash(c));
  auto reseeded = c;
  reseeded.seed = 9;
  CHECK(scenario_hash(reseeded) != scenario_hash(c));
  CHECK(hash_hex(0x1234).size() == 16);

  CHECK_THROWS_AS(scenario_from_json(R"({"sed": 1})"), ConfigError);
  CHECK_THROWS_AS(scenario_from_json(R"({"noise": {"level": "data", "frac": 0.1}})"), ConfigError);
  CHECK_THROWS_AS(scenario_from_json(R"({"n": "many"})"), ConfigError);
  CHECK_THROWS_AS(scenario_from_json(R"({"backend": "gpu"})"), ConfigError);
  CHECK_THROWS_AS(scenario_from_json(R"({"model": "mlp", "hidden": []})"), ConfigError);
  CHECK_THROWS_AS(scenario_from_json(R"({"ekfac_damping": -1})"), ConfigError);
  CHECK_FALSE(scenario_from_json(R"({"concept_curvature": "auto"})").concept_curvature.has_value());
  CHECK(scenario_from_json(R"({"concept_curvature": "gauss-newton"})").concept_curvature == CurvatureMode::GaussNewton);
  const auto opts = edit_options(scenario_from_json(R"({"backend": "ekfac", "training": {"l2_reg": 0.3}})"));
  CHECK(opts.backend == Backend::Ekfac);
  CHECK(opts.l2_reg == 0.3);
}

TEST_CASE("bench records one repetition per seed and is reproducible") {
  auto c = small_linear();
  const auto a = run_edit_vs_retrain(c);
  const auto b = run_edit_vs_retrain(c);
  CHECK(a.failures.empty());
  REQUIRE(a.repetitions.size() == 2);
  CHECK(a.repetitions[1].seed == c.seed + 1);
  CHECK(record_to_json_line(a, false) == record_to_json_line(b, false));
  const auto line = record_to_json_line(a, true);
  CHECK(line.back() == '\n');
  CHECK(line.find("wall_seconds") != std::string::npos);
  CHECK(record_to_json_line(a, false).find("wall_seconds") == std::string::npos);
  for (const auto& r : a.repetitions) {
    CHECK(r.agreement >= 0.0);
    CHECK(r.agreement <= 1.0);
    CHECK(r.edited.f1 > 0.0);
  }
}

TEST_CASE("periodic editing handles zero and one round") {
  auto c = small_linear();
  c.repetitions = 1;
  const auto none = run_periodic(c, 0);
  REQUIRE(none.periodic.size() == 1);
  CHECK(none.periodic[0].rounds.empty());
  c.round_fraction = 0.05;
  const auto one = run_periodic(c, 1);
  REQUIRE(one.periodic.size() == 1);
  REQUIRE(one.periodic[0].rounds.size() == 1);
  CHECK(one.periodic[0].rounds[0].round == 1);
  CHECK(one.config.rounds == 1);
  CHECK_THROWS_AS(run_periodic(c, 50), ConfigError);
}

TEST_CASE("importance runs rank every concept") {
  auto c = small_linear();
  c.repetitions = 1;
  const auto rec = run_importance(c, 1, 1);
  REQUIRE(rec.importance.size() == 1);
  const auto& im = rec.importance[0];
  CHECK(im.ranking.size() == c.k);
  CHECK(im.top.size() == 1);
  CHECK(im.top[0] == im.ranking.front().concept_id);
  CHECK(im.bottom[0] == im.ranking.back().concept_id);
  CHECK_THROWS_AS(run_importance(c, 3, 2), ConfigError);
}

TEST_CASE("summary statistics") {
  CHECK(mean({1.0, 2.0, 6.0}) == doctest::Approx(3.0));
  CHECK(sample_sd({1.0, 2.0, 6.0}) == doctest::Approx(std::sqrt(7.0)));
  CHECK(sample_sd({4.0}) == 0.0);
}
