// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "config.hpp"

namespace kcgen::cli {

/// Exclusive lock on a run directory; a lock left by a dead process is taken over.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& run_dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
};

/// Stage prerequisites; every stage's direct upstream stages.
const std::vector<std::string>& prerequisites(const std::string& stage);

class Manifest {
 public:
  Manifest(const Settings& settings);

  /// PrerequisiteError naming the stage to run first when `stage` has not
  /// completed or one of its artifacts is missing or changed.
  void require(const std::string& stage) const;
  bool completed(const std::string& stage) const;

  void begin(const std::string& stage);
  /// Records outputs (paths relative to the run directory) with digests, the
  /// digests of the prerequisite artifacts it consumed, and drops entries of
  /// every downstream stage. Saves the manifest atomically.
  void complete(const std::string& stage, const std::vector<std::filesystem::path>& outputs,
                nlohmann::ordered_json info = nlohmann::ordered_json::object());

  /// Plot data files derived from a completed stage's artifacts.
  void record_plot(const std::string& kind, const std::string& source_stage,
                   const std::vector<std::filesystem::path>& outputs);

  const nlohmann::ordered_json& doc() const { return doc_; }
  std::filesystem::path path() const { return dir_ / "manifest.json"; }

 private:
  void save() const;
  void refresh_artifacts();

  std::filesystem::path dir_;
  nlohmann::ordered_json doc_;
  std::string started_at_;
};

std::string utc_now();
std::string file_digest(const std::filesystem::path& path);

}  // namespace kcgen::cli
