// SPDX-License-Identifier: Apache-2.0
// Runs every acceptance criterion (or those given as arguments) and prints one
// PASS/FAIL line each. Exit status is the number of failures.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <set>

#include "harness.hpp"
#include "kcgen/util/log.hpp"

namespace accept {

std::vector<Criterion>& registry() {
  static std::vector<Criterion> r;
  return r;
}

std::string fmt(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

}  // namespace accept

int main(int argc, char** argv) {
  kcgen::log().set_level(spdlog::level::warn);
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  auto criteria = accept::registry();
  std::sort(criteria.begin(), criteria.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  int failures = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    accept::Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(out);
    } catch (const std::exception& e) {
      out.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.check(secs <= c.budget_seconds, "runtime " + accept::fmt(secs, 3) + " s <= " + accept::fmt(c.budget_seconds) + " s");
    if (!out.pass) ++failures;
    std::printf("%s %02d %s: %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), out.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
