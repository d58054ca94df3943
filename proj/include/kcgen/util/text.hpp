// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace kcgen::text {

std::string trim(std::string_view s);

/// Trim, collapse internal whitespace runs to a single space, lowercase.
/// Used wherever KC names must be matched across LLM outputs.
std::string normalize_name(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Backslash escaping for single-line tab-separated fields: \\ \t \n \r.
std::string escape_field(std::string_view s);
std::string unescape_field(std::string_view s);

bool contains(std::string_view haystack, std::string_view needle);

}  // namespace kcgen::text
