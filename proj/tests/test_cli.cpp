#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& work() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "kbq_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int kbq_run(const std::string& args) {
  const std::string cmd = std::string(KBQ_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small benchmark shared by the cases below.
const fs::path& data() {
  static const fs::path d = [] {
    const auto out = work() / "data";
    REQUIRE(kbq_run("synth --out " + out.string() + " --dialogs 30 --seed 3") == 0);
    return out;
  }();
  return d;
}

std::string data_args() {
  const auto d = data();
  return "--kb " + (d / "kb.json").string() + " --train " + (d / "train.json").string() + " --val " +
         (d / "val.json").string();
}

}  // namespace

TEST_CASE("synth is reproducible and writes a manifest") {
  const auto a = work() / "s1", b = work() / "s2";
  REQUIRE(kbq_run("synth --out " + a.string() + " --dialogs 12 --seed 5") == 0);
  REQUIRE(kbq_run("synth --out " + b.string() + " --dialogs 12 --seed 5") == 0);
  for (const char* f : {"kb.json", "train.json", "val.json", "test.json"}) CHECK(slurp(a / f) == slurp(b / f));
  CHECK(fs::exists(a / "run_manifest.json"));
  const auto m = nlohmann::json::parse(slurp(a / "run_manifest.json"));
  CHECK(m["subcommand"] == "synth");
  CHECK(m["seed"] == 5);
}

TEST_CASE("usage errors exit 2") {
  CHECK(kbq_run("") == 2);
  CHECK(kbq_run("frobnicate") == 2);
  CHECK(kbq_run("train --out " + (work() / "u").string() + " " + data_args() + " --estimator ppo") == 2);
  CHECK(kbq_run("train --out " + (work() / "u").string() + " " + data_args() + " --alpha-h 3") == 2);
  CHECK(kbq_run("explore --out " + (work() / "u").string() + " --kb " + (data() / "kb.json").string() +
                " --corpus " + (data() / "train.json").string() + " --max-clauses 0") == 2);
}

TEST_CASE("missing or malformed data exits 4") {
  CHECK(kbq_run("train --out " + (work() / "m").string() + " --kb /nonexistent.json --train /nonexistent.json") ==
        4);
  const auto bad = work() / "bad.json";
  std::ofstream(bad) << "{ not json";
  CHECK(kbq_run("train --out " + (work() / "m").string() + " --kb " + bad.string() + " --train " +
                (data() / "train.json").string()) == 4);
}

TEST_CASE("train, eval and the template hash check") {
  const auto r1 = work() / "t1", r2 = work() / "t2";
  const std::string common = data_args() + " --epochs 2 --seed 4 --estimator mbmapo";
  REQUIRE(kbq_run("train --out " + r1.string() + " " + common) == 0);
  REQUIRE(kbq_run("train --out " + r2.string() + " " + common + " --jobs 2") == 0);
  CHECK(slurp(r1 / "metrics.csv") == slurp(r2 / "metrics.csv"));
  CHECK(slurp(r1 / "metrics.csv").rfind("epoch,split,metric,value\n", 0) == 0);
  CHECK(fs::exists(r1 / "report.json"));
  CHECK(fs::exists(r1 / "run_manifest.json"));

  const std::string eval = "eval --kb " + (data() / "kb.json").string() + " --corpus " +
                           (data() / "test.json").string() + " --policy " + (r1 / "policy.json").string();
  const auto e1 = work() / "e1", e2 = work() / "e2";
  REQUIRE(kbq_run(eval + " --out " + e1.string() + " --format json") == 0);
  REQUIRE(kbq_run(eval + " --out " + e2.string() + " --format csv") == 0);
  CHECK(nlohmann::json::parse(slurp(e1 / "report.json")).is_object());
  CHECK(slurp(e2 / "report.csv").rfind("epoch,split,metric,value\n", 0) == 0);
  CHECK(fs::exists(e2 / "run_manifest.json"));
  CHECK(kbq_run(eval + " --out " + e1.string() + " --format xml") == 2);

  // a checkpoint trained with other feature settings is rejected
  const auto r3 = work() / "t3";
  REQUIRE(kbq_run("train --out " + r3.string() + " " + data_args() + " --epochs 1 --hash-bits 10") == 0);
  auto doc = nlohmann::json::parse(slurp(r3 / "policy.json"));
  doc["template_hash"] = "0000000000000001";
  std::ofstream(work() / "tampered.json") << doc.dump();
  CHECK(kbq_run("eval --out " + (work() / "e3").string() + " --kb " + (data() / "kb.json").string() +
                " --corpus " + (data() / "test.json").string() + " --policy " +
                (work() / "tampered.json").string()) == 3);
}

TEST_CASE("config file with flag override") {
  const auto cfg = work() / "cfg.json";
  std::ofstream(cfg) << R"({"estimator": "reinforce", "epochs": 1, "lr": 0.2})";
  const auto out = work() / "c1";
  REQUIRE(kbq_run("train --config " + cfg.string() + " --out " + out.string() + " " + data_args() +
                  " --estimator sl") == 0);
  const auto m = nlohmann::json::parse(slurp(out / "run_manifest.json"));
  CHECK(m["config"]["estimator"] == "sl");
  CHECK(m["config"]["lr"] == 0.2);
}

TEST_CASE("explore respects the clause bound") {
  const auto out = work() / "x";
  REQUIRE(kbq_run("explore --out " + out.string() + " --kb " + (data() / "kb.json").string() + " --corpus " +
                  (data() / "train.json").string() + " --max-clauses 2") == 0);
  const auto doc = nlohmann::json::parse(slurp(out / "explore.json"));
  std::size_t entries = 0;
  for (const auto& d : doc["dialogs"]) {
    for (const auto& e : d["entries"]) {
      CHECK(e["clauses"].get<int>() <= 2);
      CHECK(e["reward"].get<double>() > 0.0);
      ++entries;
    }
  }
  CHECK(entries > 0);
  CHECK(fs::exists(out / "run_manifest.json"));
}

TEST_CASE("label-positions writes a labelled copy") {
  const auto out = work() / "l";
  REQUIRE(kbq_run("label-positions --out " + out.string() + " --kb " + (data() / "kb.json").string() +
                  " --corpus " + (data() / "train.json").string()) == 0);
  CHECK(fs::exists(out / "train.json"));
  CHECK(fs::exists(out / "run_manifest.json"));
}
