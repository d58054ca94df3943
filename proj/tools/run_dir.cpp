// SPDX-License-Identifier: Apache-2.0
#include "run_dir.hpp"

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <ctime>
#include <map>
#include <set>

#include "kcgen/util/digest.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/fs.hpp"
#include "kcgen/util/log.hpp"

namespace kcgen::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

bool try_create(const fs::path& p) {
  const int fd = ::open(p.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) return false;
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
  return true;
}

}  // namespace

RunLock::RunLock(const fs::path& run_dir) : path_(run_dir / ".lock") {
  fs::create_directories(run_dir);
  if (try_create(path_)) return;
  long pid = 0;
  try {
    pid = std::stol(read_file(path_));
  } catch (const std::exception&) {
  }
  if (pid > 0 && (::kill(static_cast<pid_t>(pid), 0) == 0 || errno == EPERM)) {
    throw PrerequisiteError("run directory " + run_dir.string() + " is locked by process " + std::to_string(pid) +
                            "; wait for it to finish");
  }
  log().warn("removing stale lock {}", path_.string());
  fs::remove(path_);
  if (!try_create(path_)) throw PrerequisiteError("could not lock run directory " + run_dir.string());
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

const std::vector<std::string>& prerequisites(const std::string& stage) {
  static const std::map<std::string, std::vector<std::string>> deps = {
      {"ingest", {}},
      {"gen-kcs", {"ingest"}},
      {"cluster", {"gen-kcs"}},
      {"label", {"cluster"}},
      {"qmatrix", {"label"}},
      {"ontology", {"label"}},
      {"train", {"qmatrix"}},
      {"evaluate", {"train"}},
      {"curves", {"train"}},
      {"report", {"evaluate", "curves"}},
  };
  const auto it = deps.find(stage);
  if (it == deps.end()) throw ValidationError("unknown stage " + stage);
  return it->second;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string file_digest(const fs::path& path) { return sha256_hex(read_file(path)); }

Manifest::Manifest(const Settings& s) : dir_(s.run_dir) {
  if (fs::exists(path())) {
    try {
      doc_ = json::parse(read_file(path()));
    } catch (const json::parse_error& e) {
      throw ParseError(path().string() + ": " + e.what());
    }
  }
  if (!doc_.is_object()) doc_ = json::object();
  if (!doc_.contains("run_id")) doc_["run_id"] = s.digest.substr(0, 16);
  doc_["config_digest"] = s.digest;
  doc_["seeds"] = {{"run", s.seed},
                   {"kc", s.kc.seed},
                   {"model", s.model.seed},
                   {"train", s.train.seed},
                   {"mock_provider", s.llm.mock.seed}};
  doc_["provider"] = {{"name", s.llm.provider}, {"model", s.llm.client.model_id}};
  doc_["embedder"] = {{"kind", s.embed.kind}, {"dimension", s.embed.dimension}};
  if (!doc_.contains("stages")) doc_["stages"] = json::object();
  if (!doc_.contains("artifacts")) doc_["artifacts"] = json::object();
}

bool Manifest::completed(const std::string& stage) const { return doc_["stages"].contains(stage); }

void Manifest::require(const std::string& stage) const {
  if (!completed(stage)) {
    throw PrerequisiteError("stage `" + stage + "` has not completed in " + dir_.string() + "; run `kcgen " + stage +
                            "` first");
  }
  for (const auto& [rel, digest] : doc_["stages"][stage]["outputs"].items()) {
    const fs::path p = dir_ / rel;
    if (!fs::exists(p) || file_digest(p) != digest.get<std::string>()) {
      throw PrerequisiteError("artifact " + rel + " of stage `" + stage + "` is missing or changed; re-run `kcgen " +
                              stage + "`");
    }
  }
}

void Manifest::begin(const std::string& stage) {
  for (const auto& p : prerequisites(stage)) require(p);
  started_at_ = utc_now();
}

void Manifest::complete(const std::string& stage, const std::vector<fs::path>& outputs, json info) {
  // Downstream entries are stale once this stage is re-run.
  std::set<std::string> stale;
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& [name, _] : doc_["stages"].items()) {
      if (stale.count(name)) continue;
      for (const auto& p : prerequisites(name)) {
        if (p == stage || stale.count(p)) {
          stale.insert(name);
          grew = true;
          break;
        }
      }
    }
  }
  stale.insert(stage);
  for (const auto& name : stale) {
    if (name != stage) log().info("stage `{}` is now out of date", name);
    doc_["stages"].erase(name);
  }
  if (doc_.contains("plots")) {
    std::vector<std::string> drop;
    for (const auto& [kind, e] : doc_["plots"].items()) {
      if (stale.count(e["source_stage"].get<std::string>())) drop.push_back(kind);
    }
    for (const auto& k : drop) doc_["plots"].erase(k);
  }

  json entry;
  entry["config_digest"] = doc_["config_digest"];
  entry["started_at"] = started_at_;
  entry["finished_at"] = utc_now();
  json inputs = json::object();
  for (const auto& p : prerequisites(stage)) {
    for (const auto& [rel, d] : doc_["stages"][p]["outputs"].items()) inputs[rel] = d;
  }
  entry["inputs"] = std::move(inputs);
  json outs = json::object();
  for (const auto& o : outputs) outs[o.generic_string()] = file_digest(dir_ / o);
  entry["outputs"] = std::move(outs);
  entry["info"] = std::move(info);
  doc_["stages"][stage] = std::move(entry);
  refresh_artifacts();
  save();
}

void Manifest::record_plot(const std::string& kind, const std::string& source_stage,
                           const std::vector<fs::path>& outputs) {
  json outs = json::object();
  for (const auto& o : outputs) outs[o.generic_string()] = file_digest(dir_ / o);
  doc_["plots"][kind] = {{"source_stage", source_stage}, {"finished_at", utc_now()}, {"outputs", std::move(outs)}};
  refresh_artifacts();
  save();
}

void Manifest::refresh_artifacts() {
  json artifacts = json::object();
  for (const auto& [name, e] : doc_["stages"].items()) {
    for (const auto& [rel, d] : e["outputs"].items()) artifacts[rel] = d;
  }
  if (doc_.contains("plots")) {
    for (const auto& [kind, e] : doc_["plots"].items()) {
      for (const auto& [rel, d] : e["outputs"].items()) artifacts[rel] = d;
    }
  }
  doc_["artifacts"] = std::move(artifacts);
}

void Manifest::save() const { atomic_write(path(), doc_.dump(2) + "\n"); }

}  // namespace kcgen::cli
