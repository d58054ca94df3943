// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kcgen/kt/model.hpp"

namespace kcgen::kt {

/// Adam with decoupled weight decay.
class AdamW {
 public:
  AdamW(double lr, double weight_decay = 0.01, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), wd_(weight_decay), b1_(beta1), b2_(beta2), eps_(eps) {}
  void step(std::span<Parameter* const> params);

 private:
  struct Moments {
    Matrix m, v;
  };
  double lr_, wd_, b1_, b2_, eps_;
  long t_ = 0;
  std::map<Parameter*, Moments> state_;
};

class RmsProp {
 public:
  explicit RmsProp(double lr, double alpha = 0.99, double eps = 1e-8) : lr_(lr), alpha_(alpha), eps_(eps) {}
  void step(std::span<Parameter* const> params);

 private:
  double lr_, alpha_, eps_;
  std::map<Parameter*, Matrix> square_;
};

struct TrainingConfig {
  double lambda = 0.5;
  double lr_backbone = 1e-3;
  double lr_tracker = 1e-3;
  /// Mastery head and correctness head.
  double lr_heads = 1e-2;
  double weight_decay = 0.01;
  /// Global gradient-norm clip; 0 disables.
  double clip_norm = 1.0;
  int batch_size = 32;
  int epochs = 12;
  std::uint64_t seed = 1;
  /// Epochs without validation AUC improvement before stopping; 0 disables.
  int patience = 0;
  bool keep_all_checkpoints = false;

  /// Learning rates used with an 8B backbone (backbone 1e-5, tracker 5e-4,
  /// heads 1e-4).
  static TrainingConfig large_backbone_preset();
  /// Throws ValidationError on out-of-range fields.
  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  LossBreakdown train;
  std::optional<LossBreakdown> validation;
  std::optional<double> validation_auc;
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  int best_epoch = 0;
};

/// Loss terms of a batch, averaged over submissions and combined with lambda.
struct BatchLoss {
  Var l_codegen, l_corrpred, l_kc, total;
  std::size_t n_submissions = 0;
  std::vector<double> a_hat;
  std::vector<double> y_hat;
  std::vector<int> labels;
};

BatchLoss batch_loss(KtModel& model, Binder& b, std::span<const data::StudentSequence* const> batch, double lambda);

struct BatchValues {
  LossBreakdown loss;
  std::size_t n_submissions = 0;
  std::vector<double> a_hat;
  std::vector<double> y_hat;
  std::vector<int> labels;
};

/// Same objective as batch_loss, evaluated one submission at a time so only
/// one backbone graph is alive at once. With gradients, they are accumulated
/// into the parameters: each backbone tape yields dL/dm for its mastery row,
/// which then seeds a single backward pass through the tracker.
BatchValues run_batch(KtModel& model, std::span<const data::StudentSequence* const> batch, double lambda,
                      bool with_gradients);

struct TrainOptions {
  /// Per-epoch checkpoints and the best model go here when set.
  std::optional<std::filesystem::path> checkpoint_dir;
  /// The offending batch is described here when a loss turns non-finite.
  std::optional<std::filesystem::path> diagnostics_dir;
  std::function<void(const EpochLog&)> on_epoch;
  /// Checked after each epoch; returning true ends training.
  std::function<bool(const EpochLog&)> should_stop;
};

/// Minibatch training of all components; each component group has its own
/// optimizer. With validation data the parameters of the epoch with the best
/// validation AUC are restored at the end. Throws NumericalError on a
/// non-finite loss after writing a diagnostic dump.
TrainResult train(KtModel& model, const std::vector<data::StudentSequence>& train_set,
                  const std::vector<data::StudentSequence>& validation_set, const TrainingConfig& config,
                  const TrainOptions& options = {});

/// One line per epoch: epoch, the four training losses, then the validation
/// losses and AUC (empty when absent).
void write_train_log(const std::filesystem::path& path, const TrainResult& result);

// ---------------------------------------------------------------- outputs

std::vector<Prediction> predict_all(KtModel& model, const std::vector<data::StudentSequence>& sequences,
                                    bool generate_code);

/// Tab-separated: student_id, problem_id, timestep, label, a_hat, y_hat,
/// generated_code, true_code.
void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& predictions);
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

/// Tab-separated: student_id, timestep, kc_label, mastery.
void write_mastery_report(const std::filesystem::path& path, const std::vector<Prediction>& predictions,
                          const std::vector<std::string>& kc_labels);

// ---------------------------------------------------------------- baselines

enum class BaselineKind { random, majority };
BaselineKind parse_baseline(std::string_view s);

struct Query {
  std::string problem_id;
  int label = 0;
};

/// random: 0.5 for every query, or seeded uniform draws when `uniform_draws`.
/// majority: the per-problem majority label among training responses (ties
/// count as incorrect), with the global majority for unseen problems.
std::vector<double> baseline_predict(BaselineKind kind, const std::vector<data::StudentSequence>& train_set,
                                     const std::vector<Query>& queries, std::uint64_t seed = 1,
                                     bool uniform_draws = true);

std::vector<Query> queries_of(const std::vector<data::StudentSequence>& sequences);

}  // namespace kcgen::kt
