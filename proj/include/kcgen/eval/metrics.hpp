// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kcgen::eval {

/// Rank-based AUC. Tied scores count one half. Throws UndefinedMetricError
/// when only one class is present.
double auc(std::span<const double> scores, std::span<const int> labels);

struct Classification {
  double f1 = 0;
  double accuracy = 0;
};

/// Label 1 is the positive class; a score >= threshold predicts 1.
Classification f1_and_accuracy(std::span<const double> scores, std::span<const int> labels,
                               double threshold = 0.5);

struct MetricReport {
  int split_index = -1;  // -1 for an aggregate
  std::size_t n_examples = 0;
  double auc = 0;
  double f1 = 0;
  double accuracy = 0;
  std::optional<double> codebleu;
  // Only set on aggregates over more than one split.
  std::optional<double> auc_std, f1_std, accuracy_std, codebleu_std;
};

/// Mean and sample standard deviation across splits.
MetricReport aggregate(std::span<const MetricReport> per_split);

struct PairedTest {
  double mean_difference = 0;
  double t_statistic = 0;
  double p_value = 1;  // two-sided
  std::size_t n = 0;
};

/// Paired t-test on per-split metric values a[i] vs b[i].
PairedTest paired_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace kcgen::eval
