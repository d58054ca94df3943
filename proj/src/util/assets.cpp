// SPDX-License-Identifier: Apache-2.0
#include "kcgen/util/assets.hpp"

#include "kcgen/util/error.hpp"

namespace kcgen::assets {

const std::string& get(std::string_view relative_path) {
  const auto& table = all();
  auto it = table.find(relative_path);
  if (it == table.end()) {
    throw Error("unknown asset: " + std::string(relative_path));
  }
  return it->second;
}

}  // namespace kcgen::assets
