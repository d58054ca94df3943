// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kcgen/core/dataset.hpp"
#include "kcgen/embed/embedding.hpp"
#include "kcgen/kc/pipeline.hpp"
#include "kcgen/kt/backbone.hpp"

namespace kcgen::kt {

inline constexpr double kBceEps = 1e-7;

// ---------------------------------------------------------------- pieces

/// LSTM over (problem embedding, code embedding) inputs; gate order i, f, g, o.
class LstmTracker {
 public:
  LstmTracker() = default;
  LstmTracker(int input_dim, int state_dim, bool trainable_h0, std::uint64_t seed);

  struct State {
    Var h;
    Var c;
  };

  State initial(Binder& b);
  /// Throws DomainError when the inputs do not add up to input_dim().
  State step(Binder& b, const State& prev, Var problem_embedding, Var code_embedding);

  int input_dim() const { return input_dim_; }
  int state_dim() const { return state_dim_; }
  bool trainable_h0() const { return trainable_h0_; }
  std::vector<Parameter*> parameters();

  Parameter w, u, bias, h0, c0;

 private:
  int input_dim_ = 0;
  int state_dim_ = 0;
  bool trainable_h0_ = false;
};

/// m = sigmoid(h W_m + b_m).
struct MasteryHead {
  Parameter w, b;
  MasteryHead() = default;
  MasteryHead(int state_dim, int k, std::uint64_t seed);
  Var forward(Binder& binder, Var h);
};

/// a_hat = sigmoid(r W_p) with r the mean of prompt hidden states.
struct CorrectnessHead {
  Parameter w;
  CorrectnessHead() = default;
  CorrectnessHead(int d_model, std::uint64_t seed);
  Var forward(Binder& binder, Var prompt_hidden);
};

Var compute_mastery(Binder& b, MasteryHead& head, Var h);

/// m * emb_true + (1 - m) * emb_false for a 1x1 mastery value.
Var soften_mastery(Var m, Var emb_true, Var emb_false);

/// Mean of m over the columns flagged in q_row. Throws DomainError when no
/// column is flagged or the lengths differ.
double aggregate_kc_mastery(std::span<const double> m, std::span<const int> q_row);
Var aggregate_kc_mastery(Var m, std::span<const int> q_row);

/// -[a log p + (1 - a) log(1 - p)] with p clamped to [eps, 1 - eps].
double binary_cross_entropy(double a, double p, double eps = kBceEps);
inline double correctness_loss(double a, double a_hat) { return binary_cross_entropy(a, a_hat); }
inline double kc_loss(double a, double y_hat) { return binary_cross_entropy(a, y_hat); }

/// Sum over targets of -log distributions(i, targets[i]); rows are
/// probability distributions. Throws DomainError for empty targets.
double code_generation_loss(const Matrix& distributions, std::span<const int> targets);
/// Same from logits on a tape; entries with target < 0 are skipped.
Var code_generation_loss(Var logits, std::span<const int> targets);

struct LossBreakdown {
  double l_codegen = 0.0;
  double l_corrpred = 0.0;
  double l_kc = 0.0;
  double total = 0.0;
};

/// Throws DomainError unless lambda is in [0, 1].
LossBreakdown total_loss(double l_codegen, double l_corrpred, double l_kc, double lambda);

// ---------------------------------------------------------------- prompt

/// Token layout of a knowledge-guided prompt: "question: <p>. KC 1: <w1>. The
/// student's mastery level on <w1> is:<s1>. ..." followed by the code marker.
/// Soft-token slots hold -1 in `ids`.
struct PromptPlan {
  std::vector<int> ids;
  std::vector<int> soft_positions;
  std::vector<std::string> kc_names;
};

/// Throws IntegrityError when no KC is given.
PromptPlan plan_prompt(const Tokenizer& tokenizer, const std::string& statement,
                       const std::vector<std::string>& kc_names);

/// Embedding rows of the plan with each slot replaced by its soft token.
/// Throws DomainError when the soft tokens do not match the slots.
Var assemble_prompt(Binder& b, Backbone& backbone, const PromptPlan& plan, const std::vector<Var>& soft_tokens);

// ---------------------------------------------------------------- model

struct ModelConfig {
  TransformerConfig backbone;
  std::size_t vocab_size = 2000;
  int state_dim = 512;
  bool trainable_h0 = false;
  int max_new_tokens = 256;
  std::uint64_t seed = 1;
};

/// Everything one submission contributes to the objective.
struct StepTerms {
  Var a_hat;
  Var y_hat;
  Var l_codegen;
  Var mastery;
  double label = 0.0;
  bool truncated = false;
};

struct Prediction {
  std::string student_id;
  std::string problem_id;
  int timestep = 0;
  int label = 0;
  double a_hat = 0.0;
  double y_hat = 0.0;
  std::string generated_code;
  std::string true_code;
  std::vector<double> mastery;
};

class KtModel {
 public:
  /// Builds the tokenizer from problem statements, code, KC labels and the
  /// prompt template, then initializes every component from config.seed.
  KtModel(const data::Dataset& corpus, kc::QMatrix q, ModelConfig config, std::shared_ptr<embed::Embedder> embedder);

  const ModelConfig& config() const { return config_; }
  const kc::QMatrix& q_matrix() const { return q_; }
  Backbone& backbone() { return *backbone_; }
  const Backbone& backbone() const { return *backbone_; }
  LstmTracker& tracker() { return tracker_; }
  MasteryHead& mastery_head() { return mastery_; }
  CorrectnessHead& correctness_head() { return correct_; }
  embed::Embedder& embedder() { return *embedder_; }
  int true_token() const { return true_id_; }
  int false_token() const { return false_id_; }
  int kc_count() const { return static_cast<int>(q_.kcs.size()); }

  void register_problems(const std::vector<data::Problem>& problems);
  const data::Problem& problem(const std::string& id) const;

  std::vector<Parameter*> backbone_parameters() { return backbone_->parameters(); }
  std::vector<Parameter*> tracker_parameters() { return tracker_.parameters(); }
  std::vector<Parameter*> head_parameters() { return {&mastery_.w, &mastery_.b, &correct_.w}; }
  std::vector<Parameter*> parameters();

  /// Q-matrix row (0/1 per KC column) of a problem; IntegrityError if absent.
  std::vector<int> q_row(const std::string& problem_id) const;
  const PromptPlan& prompt_plan(const std::string& problem_id);

  /// Teacher-forced pass over one student sequence; the tracker state starts
  /// from h_0 and each step is predicted from the state before it.
  /// Tracker half of forward_sequence: the mastery row before each step.
  std::vector<Var> sequence_masteries(Binder& b, const data::StudentSequence& seq);
  /// Backbone half for submission t given its mastery row. The mastery may
  /// live on a different tape (it is only read through soft tokens and y_hat).
  StepTerms submission_terms(Binder& b, const data::StudentSequence& seq, std::size_t t, Var mastery);
  std::vector<StepTerms> forward_sequence(Binder& b, const data::StudentSequence& seq);

  /// Walks a sequence and predicts every step from the true history.
  std::vector<Prediction> predict_sequence(const data::StudentSequence& seq, bool generate_code);

  /// Prediction for `next_problem` after `history`.
  Prediction predict_student(const std::vector<data::Submission>& history, const std::string& next_problem,
                             bool generate_code = true);

  void save(const std::filesystem::path& dir) const;
  static std::unique_ptr<KtModel> load(const std::filesystem::path& dir, std::shared_ptr<embed::Embedder> embedder);

  /// Code token ids followed by the end marker, truncated so that the prompt
  /// and code fit the context window.
  std::vector<int> code_targets(const PromptPlan& plan, const std::string& code, bool* truncated) const;

 private:
  KtModel(Tokenizer tokenizer, kc::QMatrix q, ModelConfig config, std::shared_ptr<embed::Embedder> embedder);

  Matrix problem_embedding(const std::string& problem_id) const;
  const std::vector<double>& code_embedding(const std::string& code);

  struct PlainState {
    Eigen::RowVectorXd h, c;
  };
  PlainState initial_state() const;
  PlainState advance(const PlainState& s, const std::string& problem_id, const std::string& code);
  Prediction predict_from_state(const PlainState& s, const std::string& problem_id, bool generate_code);

  ModelConfig config_;
  kc::QMatrix q_;
  std::shared_ptr<embed::Embedder> embedder_;
  std::unique_ptr<TinyTransformer> backbone_;
  LstmTracker tracker_;
  MasteryHead mastery_;
  CorrectnessHead correct_;
  int true_id_ = 0;
  int false_id_ = 0;
  std::map<std::string, data::Problem> problems_;
  std::map<std::string, PromptPlan> plans_;
  std::map<std::string, std::vector<double>> code_cache_;
  mutable std::mutex cache_mu_;
  std::set<std::string> truncation_warned_;
};

}  // namespace kcgen::kt
