// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kcgen/core/dataset.hpp"

namespace kcgen::data::synth {

/// Parameters of the simulated course. Students practise Java skills; the
/// probability of a mistake on a skill decays as a power of the number of
/// prior attempts at it. A submission is correct iff no contained skill errs,
/// and the code is assembled from per-skill snippets (buggy ones where the
/// student erred).
struct CourseConfig {
  int n_students = 246;
  int n_problems = 50;
  std::uint64_t seed = 1;
  int min_skills_per_problem = 2;
  int max_skills_per_problem = 4;
  double skip_probability = 0.1;
  double swap_probability = 0.2;
  double resubmit_probability = 0.5;
  double practice_exponent = 0.5;
  /// Offset added to the logit of the first-attempt error probability.
  double error_offset = -0.6;
};

/// Ground truth kept alongside a generated dataset for tests.
struct CourseTruth {
  /// skill names per problem (by problem order)
  std::vector<std::vector<std::string>> problem_skills;
  /// per submission (same order as the dataset), the skills the student erred on
  std::vector<std::vector<std::string>> erred_skills;
};

Dataset generate_course(const CourseConfig& config, CourseTruth* truth = nullptr);

/// Number of distinct snippet skills in the generator's catalogue.
std::size_t skill_catalogue_size();

/// Small fully deterministic dataset for overfitting checks: `n_students`
/// students in a handful of skill profiles over `n_problems` problems. The
/// first problem is a warm-up everyone solves, written in a profile-specific
/// style; afterwards correctness is the conjunction of the profile's skills.
struct ToyDataset {
  Dataset dataset;
  std::vector<std::string> kc_names;
  /// problem -> KC column indices (rows parallel to dataset.problems)
  std::vector<std::vector<int>> problem_kcs;
};

ToyDataset generate_toy(int n_students = 20, int n_problems = 10);

}  // namespace kcgen::data::synth
