// SPDX-License-Identifier: Apache-2.0
#include "kcgen/util/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

namespace kcgen {

spdlog::logger& log() {
  static std::shared_ptr<spdlog::logger> logger = [] {
    auto l = spdlog::stderr_color_mt("kcgen");
    l->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    return l;
  }();
  return *logger;
}

}  // namespace kcgen
