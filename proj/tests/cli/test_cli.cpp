// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "config.hpp"
#include "plots.hpp"
#include "run_dir.hpp"
#include "stages.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/fs.hpp"
#include "kcgen/util/log.hpp"
#include "kcgen/util/text.hpp"

using namespace kcgen;
using namespace kcgen::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("kcgen-cli-" + tag + "-" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

std::vector<std::string> tiny_overrides(const fs::path& data) {
  return {"data.problems=\"" + (data / "problems.tsv").string() + "\"",
          "data.submissions=\"" + (data / "submissions.tsv").string() + "\"",
          "model.backbone.d_model=16",
          "model.backbone.n_layers=1",
          "model.backbone.n_heads=2",
          "model.backbone.d_ff=32",
          "model.state_dim=8",
          "model.vocab_size=300",
          "model.max_new_tokens=8",
          "train.epochs=2",
          "train.batch_size=4",
          "kc.n_clusters=10",
          "kc.ontology_levels=[10, 5]",
          "embed.dimension=64",
          "curves.min_students=2",
          "curves.min_observations=5"};
}

}  // namespace

TEST_CASE("config defaults, overrides and digest") {
  log().set_level(spdlog::level::warn);
  const Settings a = load_settings(std::nullopt, {}, fs::path("/tmp/a"));
  const Settings b = load_settings(std::nullopt, {}, fs::path("/tmp/b"));
  CHECK(a.digest == b.digest);
  CHECK(a.run_dir == fs::path("/tmp/a"));
  CHECK(a.train.lambda == 0.5);
  CHECK(a.llm.provider == "mock");
  const Settings c = load_settings(std::nullopt, {"train.lambda=0.25"}, std::nullopt);
  CHECK(c.train.lambda == 0.25);
  CHECK(c.digest != a.digest);
  const Settings d = load_settings(std::nullopt, {"llm.model=gpt-4o-mini"}, std::nullopt);
  CHECK(d.resolved["llm"]["model"] == "gpt-4o-mini");
}

TEST_CASE("config validation names the field") {
  CHECK(message_of([] { load_settings(std::nullopt, {"train.lamda=0.5"}, std::nullopt); }).find("train.lamda") !=
        std::string::npos);
  CHECK_THROWS_AS(load_settings(std::nullopt, {"train.lambda=1.5"}, std::nullopt), ValidationError);
  CHECK(message_of([] { load_settings(std::nullopt, {"train.lambda=1.5"}, std::nullopt); }).find("train.lambda") !=
        std::string::npos);
  CHECK(message_of([] { load_settings(std::nullopt, {"train.epochs=\"many\""}, std::nullopt); })
            .find("train.epochs") != std::string::npos);
  CHECK_THROWS_AS(load_settings(std::nullopt, {"llm.provider=carrier-pigeon"}, std::nullopt), ValidationError);
  CHECK_THROWS_AS(load_settings(fs::path("/nonexistent/kcgen.jsonc"), {}, std::nullopt), Error);
}

TEST_CASE("config file paths resolve against the file") {
  TempDir dir("cfg");
  fs::create_directories(dir.path / "conf");
  std::ofstream(dir.path / "conf/run.jsonc") << "// comment\n{ \"data\": { \"problems\": \"../p.tsv\" },\n"
                                                "  \"run\": { \"dir\": \"out\" } }\n";
  const Settings s = load_settings(dir.path / "conf/run.jsonc", {}, std::nullopt);
  CHECK(fs::weakly_canonical(s.problems) == fs::weakly_canonical(dir.path / "p.tsv"));
  CHECK(fs::weakly_canonical(s.run_dir) == fs::weakly_canonical(dir.path / "conf/out"));
}

TEST_CASE("run lock") {
  TempDir dir("lock");
  {
    RunLock lock(dir.path);
    CHECK(fs::exists(dir.path / ".lock"));
    CHECK_THROWS_AS(RunLock(dir.path), PrerequisiteError);
  }
  CHECK_FALSE(fs::exists(dir.path / ".lock"));
  // A pid that cannot be alive.
  std::ofstream(dir.path / ".lock") << "999999999\n";
  CHECK_NOTHROW(RunLock(dir.path));
}

TEST_CASE("stages: prerequisites, invalidation and plot data") {
  log().set_level(spdlog::level::warn);
  TempDir dir("stages");
  write_synthetic(dir.path / "data", 10, 8, 3);
  const Settings s = load_settings(std::nullopt, tiny_overrides(dir.path / "data"), dir.path / "run");

  const std::string early = message_of([&] { run_stage("gen-kcs", s); });
  CHECK(early.find("ingest") != std::string::npos);
  CHECK_THROWS_AS(run_stage("gen-kcs", s), PrerequisiteError);
  CHECK(PrerequisiteError("x").exit_code() == 3);

  for (const auto& stage : {"ingest", "gen-kcs", "cluster", "label", "qmatrix", "ontology", "train"}) {
    INFO(stage);
    REQUIRE_NOTHROW(run_stage(stage, s));
  }
  {
    const Manifest m(s);
    CHECK(m.completed("train"));
    CHECK(m.doc()["stages"]["qmatrix"]["info"]["kcs"] == 10);
    CHECK_NOTHROW(m.require("qmatrix"));
  }

  emit_plot_data(s, "loss-curves");
  const auto rows = read_file(s.run_dir / "plots/loss-curves-split-0.tsv");
  const auto lines = text::split(rows, '\n');
  REQUIRE(lines.size() >= 3);
  CHECK(lines[0] == "epoch\tphase\tl_codegen\tl_corrpred\tl_kc\ttotal\tlambda");
  int checked = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = text::split(lines[i], '\t');
    REQUIRE(f.size() == 7);
    const double cg = std::stod(f[2]), cp = std::stod(f[3]), kc = std::stod(f[4]), total = std::stod(f[5]),
                 lambda = std::stod(f[6]);
    CHECK(lambda == 0.5);
    CHECK(std::abs(total - (lambda * (cg + cp) + (1 - lambda) * kc)) <= 1e-6 * std::max(1.0, total));
    ++checked;
  }
  CHECK(checked >= 2);

  // A changed artifact blocks downstream stages until its stage is rerun.
  {
    std::ofstream(s.run_dir / "kc/q_matrix.tsv", std::ios::app) << "\n";
    const std::string msg = message_of([&] { run_stage("train", s); });
    CHECK(msg.find("qmatrix") != std::string::npos);
  }
  run_stage("qmatrix", s);
  {
    const Manifest m(s);
    CHECK(m.completed("qmatrix"));
    CHECK_FALSE(m.completed("train"));
    CHECK_NOTHROW(m.require("ingest"));
  }
}
