// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kcgen::data {

struct Problem {
  std::string problem_id;
  std::string statement;
  /// Stored verbatim; conversion to natural language happens in the KC pipeline.
  std::vector<std::string> human_kc_tags;

  friend bool operator==(const Problem&, const Problem&) = default;
};

struct Submission {
  std::string student_id;
  std::string problem_id;
  std::int64_t order_index = 0;
  std::string code;
  bool correct = false;
  /// Wall-clock time as given in the log; metadata only, never used for ordering
  /// once order_index is known.
  std::optional<std::string> timestamp;

  friend bool operator==(const Submission&, const Submission&) = default;
};

/// One student's submissions in chronological order.
struct StudentSequence {
  std::string student_id;
  std::vector<Submission> responses;

  friend bool operator==(const StudentSequence&, const StudentSequence&) = default;
};

/// Immutable after load; safe to share between readers.
struct Dataset {
  std::vector<Problem> problems;
  std::vector<StudentSequence> sequences;

  const Problem& problem(const std::string& problem_id) const;
  const Problem* find_problem(const std::string& problem_id) const;
  std::size_t submission_count() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct DatasetSplit {
  int split_index = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;

  friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

/// Reads the problems file and the interaction log (both tab-separated with a
/// header row; see docs in README). Submissions are grouped per student and
/// sorted by order_index; when the log has no order_index column the order is
/// derived from the timestamp column.
///
/// Throws ParseError (naming file and line) on malformed records and
/// IntegrityError when a submission references an unknown problem.
Dataset load_dataset(const std::filesystem::path& problems_path,
                     const std::filesystem::path& log_path);

void save_dataset(const Dataset& dataset, const std::filesystem::path& problems_path,
                  const std::filesystem::path& log_path);

/// Keeps only the earliest submission of each (student, problem) pair and
/// drops students whose sequences end up empty.
std::vector<StudentSequence> filter_first_submissions(const std::vector<StudentSequence>& sequences);

/// Repeated random subsampling: n_splits independent partitions of the
/// student population into train/validation/test.
std::vector<DatasetSplit> make_splits(const std::vector<StudentSequence>& sequences, int n_splits,
                                      SplitRatios ratios, std::uint64_t seed);

/// Largest-remainder partition sizes for n students. Each part is within one
/// of ratio*n, except that every part is raised to at least one student.
std::array<std::size_t, 3> split_sizes(std::size_t n, SplitRatios ratios);

/// Sequences of the listed students, in the order the ids are given.
std::vector<StudentSequence> select_students(const std::vector<StudentSequence>& sequences,
                                             const std::vector<std::string>& student_ids);

}  // namespace kcgen::data
