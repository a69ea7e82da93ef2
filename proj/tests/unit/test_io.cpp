#include <doctest.h>

#include <filesystem>

#include "ecbm/errors.hpp"
#include "ecbm/io.hpp"
#include "support/fixtures.hpp"

using namespace ecbm;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("ecbm_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("csv round-trip is bit-exact") {
  auto d = ecbm::testing::random_dataset(25, 3, 4, 3, 2, false);
  d.inputs(0, 0) = 1e-300;
  d.inputs(1, 1) = -0.1;
  d.inputs(2, 2) = 123456789.123456789;
  const auto text = dataset_to_csv(d);
  const auto back = dataset_from_csv(text, d.num_classes);
  CHECK(back.inputs == d.inputs);
  CHECK(back.concepts == d.concepts);
  CHECK(back.labels == d.labels);
  CHECK(dataset_to_csv(back) == text);
  CHECK(text.rfind("x0,x1,x2,c0,c1,c2,c3,y\n", 0) == 0);
}

TEST_CASE("csv parsing rejects malformed input") {
  CHECK_THROWS_AS(dataset_from_csv(""), ConfigError);
  CHECK_THROWS_AS(dataset_from_csv("x0,c0,y\n1.0,abc,0\n"), ConfigError);
  CHECK_THROWS_AS(dataset_from_csv("x0,c0,y\n1.0,0\n"), ConfigError);
  CHECK_THROWS_AS(dataset_from_csv("x0,c0,y\n1.0,0,-1\n"), ConfigError);
  const auto d = dataset_from_csv("x0,c0,y\n1.5,1,0\n2.5,0,1\n");
  CHECK(d.num_classes == 2);
  CHECK(d.concept_names == std::vector<std::string>{"c0"});
}

TEST_CASE("dataset files keep class count and concept names") {
  const auto dir = scratch_dir("dataset");
  auto d = ecbm::testing::random_dataset(8, 2, 3, 4, 5);
  d.concept_names = {"wing", "beak", "tail"};
  save_dataset(d, dir / "d.csv");
  CHECK(fs::exists(sidecar_path(dir / "d.csv")));
  const auto back = load_dataset(dir / "d.csv");
  CHECK(back.num_classes == 4);
  CHECK(back.concept_names == d.concept_names);
  CHECK(back.inputs == d.inputs);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  std::mt19937_64 rng(3);
  for (bool bias : {true, false}) {
    const CbmSpec spec{{5, 4}, ConceptLink::Mse, LabelLoss::Mse, bias};
    Cbm m{init_concept_predictor(3, 6, spec, 1), init_label_predictor(6, 3, spec, 2)};
    m.g.set_parameters(ecbm::testing::random_vector(m.g.layout().size, rng, 1.0 / 3.0));
    m.f.set_parameters(ecbm::testing::random_vector(m.f.layout().size, rng, 1e-7));
    const auto text = checkpoint_to_json(m);
    const auto back = checkpoint_from_json(text);
    CHECK(back.g.parameters() == m.g.parameters());
    CHECK(back.f.parameters() == m.f.parameters());
    CHECK(back.f.has_bias == bias);
    CHECK(back.g.link == ConceptLink::Mse);
    CHECK(back.f.loss == LabelLoss::Mse);
    CHECK(back.g.layers[0].activation == Activation::Tanh);
    CHECK(checkpoint_to_json(back) == text);
  }
}

TEST_CASE("checkpoint parsing rejects inconsistent models") {
  CHECK_THROWS_AS(checkpoint_from_json("{"), ConfigError);
  CHECK_THROWS_AS(checkpoint_from_json(R"({"layers":[],"link":"sigmoid-bce","label":{"w":[[1]],"b":null,"loss":"mse"}})"),
                  ConfigError);
  const char* mismatch =
      R"({"layers":[{"w":[[1,2]],"b":[0],"act":"identity"}],"link":"sigmoid-bce",)"
      R"("label":{"w":[[1,2],[3,4]],"b":[0,0],"loss":"softmax-ce"}})";
  CHECK_THROWS_AS(checkpoint_from_json(mismatch), ConfigError);
}

TEST_CASE("missing files raise config errors") {
  CHECK_THROWS_AS(read_text_file("/nonexistent/ecbm/file.json"), ConfigError);
  CHECK_THROWS_AS(load_dataset("/nonexistent/ecbm/data.csv"), ConfigError);
}

TEST_CASE("format_double is shortest round-trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
