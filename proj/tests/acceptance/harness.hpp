// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace accept {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  /// Records a named check; the first failure is what gets reported first.
  void check(bool ok, const std::string& what) {
    if (!ok) {
      if (!pass) detail << "; ";
      else detail.str(""), detail.clear();
      detail << "FAILED " << what;
      pass = false;
    } else if (pass) {
      if (detail.tellp() > 0) detail << "; ";
      detail << what;
    }
  }
  void note(const std::string& s) {
    if (pass) {
      if (detail.tellp() > 0) detail << "; ";
      detail << s;
    }
  }
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<void(Outcome&)> run;
};

std::vector<Criterion>& registry();

struct Register {
  Register(int id, std::string name, double budget, std::function<void(Outcome&)> fn) {
    registry().push_back({id, std::move(name), budget, std::move(fn)});
  }
};

std::string fmt(double v, int precision = 4);

}  // namespace accept
