// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>

namespace kcgen::assets {

/// Every file under assets/, keyed by path relative to assets/
/// (e.g. "prompts/kc_generation.user.txt").
const std::map<std::string, std::string, std::less<>>& all();

/// Throws kcgen::Error if the asset is unknown.
const std::string& get(std::string_view relative_path);

}  // namespace kcgen::assets
