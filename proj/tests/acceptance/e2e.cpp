// SPDX-License-Identifier: Apache-2.0
#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <nlohmann/json.hpp>

#include "harness.hpp"
#include "kcgen/util/digest.hpp"
#include "kcgen/util/fs.hpp"
#include "kcgen/util/text.hpp"

using namespace kcgen;
namespace fs = std::filesystem;

namespace {

struct Invocation {
  int status = -1;
  std::string output;
};

Invocation cli(const fs::path& run_dir, const std::string& args) {
  const fs::path log = run_dir.string() + ".log";
  const std::string cmd = std::string("cd '") + KCGEN_SOURCE_DIR + "' && '" + KCGEN_CLI_PATH + "' --run-dir '" +
                          run_dir.string() + "' " + args + " > '" + log.string() + "' 2>&1";
  const int raw = std::system(cmd.c_str());
  Invocation inv;
  inv.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  inv.output = fs::exists(log) ? read_file(log) : "";
  return inv;
}

const std::vector<std::string> kStages = {"ingest", "gen-kcs", "cluster",  "label", "qmatrix",
                                          "train",  "evaluate", "curves", "report"};

accept::Register c12(12, "end-to-end golden run", 900, [](accept::Outcome& out) {
  const fs::path base = fs::temp_directory_path() / ("kcgen-accept-12-" + std::to_string(::getpid()));
  fs::remove_all(base);
  fs::create_directories(base);
  const fs::path run = base / "run";

  const auto early = cli(base / "early", "gen-kcs");
  out.check(early.status == 3 && early.output.find("ingest") != std::string::npos,
            "gen-kcs before ingest exits 3 naming ingest");

  bool ok = true;
  for (const auto& stage : kStages) {
    const std::string extra = stage == "train" ? "--set train.epochs=5 " : "";
    const auto inv = cli(run, extra + stage);
    if (inv.status != 0) {
      out.check(false, stage + " exited " + std::to_string(inv.status) + ": " +
                           inv.output.substr(inv.output.size() > 400 ? inv.output.size() - 400 : 0));
      ok = false;
      break;
    }
  }
  if (!ok) return;
  out.check(true, "all 9 stages exit 0");

  const auto manifest = nlohmann::json::parse(read_file(run / "manifest.json"));
  bool stages_done = true;
  for (const auto& s : kStages) stages_done = stages_done && manifest["stages"].contains(s);
  out.check(stages_done, "manifest records every stage");
  bool digests = true;
  for (const auto& [rel, digest] : manifest["artifacts"].items()) {
    digests = digests && fs::exists(run / rel) && sha256_hex(read_file(run / rel)) == digest.get<std::string>();
  }
  out.check(manifest["artifacts"].size() >= 8 && digests,
            std::to_string(manifest["artifacts"].size()) + " artifacts, all digests match their files");
  const auto log_lines = text::split(read_file(run / "model/split-0/train_log.tsv"), '\n');
  out.note("train_log.tsv has " + std::to_string(log_lines.size()) + " lines");

  // Same config, fresh directory: the offline stages reproduce byte for byte.
  const fs::path run2 = base / "run2";
  bool same = true;
  for (const auto& stage : {"ingest", "gen-kcs", "cluster", "label", "qmatrix"}) {
    same = same && cli(run2, stage).status == 0;
  }
  const auto m2 = nlohmann::json::parse(read_file(run2 / "manifest.json"));
  for (const auto& stage : {"ingest", "gen-kcs", "cluster", "label", "qmatrix"}) {
    same = same && m2["stages"][stage]["outputs"] == manifest["stages"][stage]["outputs"];
  }
  out.check(same && m2["run_id"] == manifest["run_id"], "KC stage digests and run id reproduce in a second run");
  fs::remove_all(base);
});

}  // namespace
