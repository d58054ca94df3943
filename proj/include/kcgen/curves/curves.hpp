// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kcgen/core/dataset.hpp"
#include "kcgen/kc/pipeline.hpp"
#include "kcgen/kt/model.hpp"
#include "kcgen/llm/client.hpp"

namespace kcgen::curves {

/// Identifies one submission within a student's log.
struct SubmissionKey {
  std::string student_id;
  std::int64_t order_index = 0;

  auto operator<=>(const SubmissionKey&) const = default;
};

/// KC label -> 1 when the submission contains an error on that KC.
using KcErrors = std::map<std::string, int>;

/// Returns all zeros for correct submissions without calling the LLM. For
/// incorrect ones, asks the error-labeling prompt; nullopt (with a warning) when
/// the response still fails to parse after the client's re-prompt.
std::optional<KcErrors> label_kc_errors(llm::LlmClient& client, const data::Problem& problem,
                                        const std::vector<std::string>& associated_kcs,
                                        const data::Submission& submission, const std::string& language = "Java");

struct ErrorLabelSet {
  std::map<SubmissionKey, KcErrors> labels;
  std::vector<SubmissionKey> dropped;
};

/// Labels every submission whose problem is in the Q-matrix.
ErrorLabelSet label_all_errors(llm::LlmClient& client, const data::Dataset& dataset,
                               const std::vector<data::StudentSequence>& sequences, const kc::QMatrix& q,
                               const std::string& language = "Java", int concurrency = 1);

void write_error_labels(const std::filesystem::path& path, const ErrorLabelSet& set);
ErrorLabelSet read_error_labels(const std::filesystem::path& path);

struct KcObservation {
  std::string student_id;
  std::string kc;
  int attempt_index = 1;
  int error = 0;
  int prior_successes = 0;
  int prior_failures = 0;
  std::string problem_id;
  std::int64_t order_index = 0;
};

/// Submissions without labels (dropped, or outside the label set) are skipped
/// and do not count as attempts.
std::vector<KcObservation> build_observations(const std::vector<data::StudentSequence>& sequences,
                                              const kc::QMatrix& q, const ErrorLabelSet& labels);

struct CurvePoint {
  int attempt = 0;
  double error_rate = 0.0;
  int n_students = 0;
  std::optional<double> predicted;
};

struct LearningCurve {
  std::string kc;
  std::vector<CurvePoint> points;
};

/// Points with fewer than min_students are left out.
LearningCurve empirical_curve(const std::vector<KcObservation>& observations, const std::string& kc,
                              int min_students = 1);

using MasteryTable = std::map<SubmissionKey, std::vector<double>>;

/// Mastery before each submission, keyed by submission, in Q-matrix column order.
MasteryTable mastery_table(kt::KtModel& model, const std::vector<data::StudentSequence>& sequences);

/// Fills `predicted` on each point of the curve with the mean of (1 - m^kc) over
/// the observations at that attempt.
void attach_predicted(LearningCurve& curve, const std::vector<KcObservation>& observations,
                      const MasteryTable& mastery, const std::vector<std::string>& kc_columns);

/// Squared Pearson correlation between empirical and predicted rates, points
/// weighted by student count. nullopt with fewer than two points or no variance.
std::optional<double> weighted_curve_r2(const LearningCurve& curve);

struct PfaConfig {
  double l2 = 1e-4;
  int min_observations = 10;
  int min_students = 5;
  int max_iterations = 100;
  double tolerance = 1e-10;
};

struct PfaFit {
  std::string kc;
  double beta = 0.0;
  double gamma = 0.0;
  double rho = 0.0;
  std::optional<double> r_squared;
  int n_observations = 0;
  bool converged = false;

  double p_correct(int successes, int failures) const;
};

/// Penalized logistic regression P(correct) = sigmoid(beta + gamma*s + rho*f)
/// by Newton's method. Throws DomainError below config.min_observations.
PfaFit fit_pfa(const std::vector<KcObservation>& observations, const std::string& kc, const PfaConfig& config = {});

/// Observation-weighted mean of r_squared over converged fits with a defined R².
double weighted_r2(const std::vector<PfaFit>& fits);

enum class Trend { decreasing, increasing, none };
std::string to_string(Trend t);

struct TrendTest {
  double s = 0.0;
  double variance = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  Trend trend = Trend::none;
};

/// Mann-Kendall test with the tie-corrected variance and continuity correction.
TrendTest mann_kendall(const std::vector<double>& values, double alpha = 0.05);

std::vector<std::string> kcs_with_observations(const std::vector<KcObservation>& observations);

void write_curve(const std::filesystem::path& path, const LearningCurve& curve);
void write_pfa_summary(const std::filesystem::path& path, const std::vector<PfaFit>& fits);

/// Synthetic observation generators for calibration checks.
std::vector<KcObservation> simulate_pfa(double beta, double gamma, double rho, int n_observations,
                                        int attempts_per_student, std::uint64_t seed);
std::vector<KcObservation> simulate_power_law(int n_students, int n_attempts, double scale, double exponent,
                                              std::uint64_t seed);

}  // namespace kcgen::curves
