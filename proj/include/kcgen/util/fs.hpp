// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace kcgen {

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over the target, so
/// concurrent readers see either the old or the new content.
void atomic_write(const std::filesystem::path& path, std::string_view content);

}  // namespace kcgen
