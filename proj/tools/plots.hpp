// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "config.hpp"

namespace kcgen::cli {

/// kind: learning-curves, loss-curves or mastery-heatmap. Files go under
/// <run>/plots and are recorded in the manifest.
void emit_plot_data(const Settings& settings, const std::string& kind);

/// Writes problems.tsv and submissions.tsv of a simulated course to `out`.
void write_synthetic(const std::filesystem::path& out, int students, int problems, std::uint64_t seed);

}  // namespace kcgen::cli
