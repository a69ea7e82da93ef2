#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "ecbm/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    auto p = fs::temp_directory_path() / "ecbm_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(ECBM_CLI_PATH) + " " + args + " >" + (work_dir() / "stdout.txt").string() +
                          " 2>" + (work_dir() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string path(const std::string& name) { return (work_dir() / name).string(); }

void write(const std::string& name, const std::string& text) { ecbm::write_text_file(work_dir() / name, text); }

const char* kSmall =
    R"({"n": 80, "d_i": 4, "k": 4, "d_o": 3, "model": "linear", "hidden": [], "repetitions": 2,
        "training": {"l2_reg": 0.1}})";

}  // namespace

TEST_CASE("train, edit and compare succeed end to end") {
  write("small.json", kSmall);
  const auto cfg = "--config " + path("small.json");
  REQUIRE(run(cfg + " synth --out " + path("d.csv")) == 0);
  CHECK(fs::exists(path("d.test.csv")));
  CHECK(fs::exists(path("d.csv.meta.json")));
  REQUIRE(run(cfg + " train --data " + path("d.csv") + " --out " + path("m.json")) == 0);
  write("req.json", R"({"level": "data", "rows": [0, 3, 7]})");
  REQUIRE(run(cfg + " edit --data " + path("d.csv") + " --checkpoint " + path("m.json") + " --request " +
              path("req.json") + " --out " + path("e.json")) == 0);
  CHECK(ecbm::read_text_file(work_dir() / "stderr.txt").find("\"level\":\"data\"") != std::string::npos);
  REQUIRE(run(cfg + " retrain --data " + path("d.csv") + " --request " + path("req.json") + " --out " +
              path("r.json")) == 0);
  REQUIRE(run(cfg + " compare --a " + path("e.json") + " --b " + path("r.json") + " --test " + path("d.test.csv") +
              " --out " + path("cmp.json")) == 0);
  CHECK(ecbm::read_text_file(work_dir() / "cmp.json").find("agreement") != std::string::npos);
  CHECK(run(cfg + " rank-concepts --data " + path("d.csv") + " --checkpoint " + path("m.json") +
            " --metric param-norm --out " + path("rank.json")) == 0);
}

TEST_CASE("bench reports are byte-identical across runs") {
  write("small.json", kSmall);
  const auto cfg = "--config " + path("small.json");
  REQUIRE(run(cfg + " bench --out " + path("a.jsonl")) == 0);
  REQUIRE(run(cfg + " bench --out " + path("b.jsonl")) == 0);
  const auto a = ecbm::read_text_file(work_dir() / "a.jsonl");
  CHECK(!a.empty());
  CHECK(a == ecbm::read_text_file(work_dir() / "b.jsonl"));
  CHECK(fs::exists(path("a.jsonl.timings.jsonl")));
  CHECK(run(cfg + " periodic --rounds 1 --out " + path("p.jsonl")) == 0);
}

TEST_CASE("configuration problems exit with code 2") {
  write("bad.json", R"({"n": 80, "bogus": 1})");
  CHECK(run("--config " + path("bad.json") + " bench") == 2);
  CHECK(run("") == 2);
  CHECK(run("train --data " + path("missing.csv")) == 2);
  CHECK(run("bench --backend gpu") == 2);
  write("small.json", kSmall);
  write("req_bad.json", R"({"level": "data", "rows": [100000]})");
  CHECK(run("--config " + path("small.json") + " retrain --data " + path("d.csv") + " --request " +
            path("req_bad.json")) == 2);
}

TEST_CASE("numerical failures exit with code 3") {
  write("diverge.json",
        R"({"n": 80, "d_i": 4, "k": 4, "d_o": 3, "model": "linear", "hidden": [],
            "training": {"line_search": false, "step_size": 1000000.0}})");
  REQUIRE(run("--config " + path("diverge.json") + " synth --out " + path("v.csv")) == 0);
  CHECK(run("--config " + path("diverge.json") + " train --data " + path("v.csv")) == 3);
}
