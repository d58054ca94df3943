// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "config.hpp"
#include "kcgen/embed/embedding.hpp"
#include "run_dir.hpp"

namespace kcgen::cli {

const std::vector<std::string>& stage_names();

/// Runs one pipeline stage under the run-directory lock.
void run_stage(const std::string& stage, const Settings& settings);

std::shared_ptr<llm::LlmClient> make_client(const Settings& s);
std::shared_ptr<embed::Embedder> make_embedder(const Settings& s);

/// Sequences used for knowledge tracing: first submissions (per config),
/// restricted to problems present in the Q-matrix.
std::vector<data::StudentSequence> kt_sequences(const data::Dataset& ds, const kc::QMatrix& q, const Settings& s);

std::vector<data::DatasetSplit> read_splits(const std::filesystem::path& path);

std::filesystem::path split_dir(const std::string& base, int split_index);

}  // namespace kcgen::cli
