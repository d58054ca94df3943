// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>

#include <spdlog/spdlog.h>

namespace kcgen {

/// Shared library logger ("kcgen"), writing to stderr.
spdlog::logger& log();

}  // namespace kcgen
