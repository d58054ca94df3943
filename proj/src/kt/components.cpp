// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "kcgen/kt/model.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/rng.hpp"

namespace kcgen::kt {

namespace {

Parameter random_param(std::string name, int rows, int cols, double std, Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal(0.0, std);
  return Parameter(std::move(name), std::move(m));
}

}  // namespace

LstmTracker::LstmTracker(int input_dim, int state_dim, bool trainable_h0, std::uint64_t seed)
    : input_dim_(input_dim), state_dim_(state_dim), trainable_h0_(trainable_h0) {
  if (input_dim < 1 || state_dim < 1) throw ValidationError("LSTM dimensions must be positive");
  Rng rng(seed, 0x157);
  w = random_param("tracker.w", input_dim, 4 * state_dim, 1.0 / std::sqrt(input_dim), rng);
  u = random_param("tracker.u", state_dim, 4 * state_dim, 1.0 / std::sqrt(state_dim), rng);
  Matrix bv = Matrix::Zero(1, 4 * state_dim);
  bv.block(0, state_dim, 1, state_dim).setOnes();
  bias = Parameter("tracker.b", bv);
  h0 = Parameter("tracker.h0", Matrix::Zero(1, state_dim));
  c0 = Parameter("tracker.c0", Matrix::Zero(1, state_dim));
}

LstmTracker::State LstmTracker::initial(Binder& b) {
  if (trainable_h0_) return {b(h0), b(c0)};
  return {b.tape().constant(Matrix::Zero(1, state_dim_)), b.tape().constant(Matrix::Zero(1, state_dim_))};
}

LstmTracker::State LstmTracker::step(Binder& b, const State& prev, Var problem_embedding, Var code_embedding) {
  if (problem_embedding.rows() != 1 || code_embedding.rows() != 1 ||
      problem_embedding.cols() + code_embedding.cols() != input_dim_) {
    throw DomainError("tracker input is " + std::to_string(problem_embedding.cols()) + " + " +
                      std::to_string(code_embedding.cols()) + " wide, expected " + std::to_string(input_dim_));
  }
  if (prev.h.cols() != state_dim_ || prev.c.cols() != state_dim_) throw DomainError("tracker state width mismatch");
  const Var parts[] = {problem_embedding, code_embedding};
  Var x = ad::concat_cols(parts);
  Var gates = ad::add_row(ad::add(ad::matmul(x, b(w)), ad::matmul(prev.h, b(u))), b(bias));
  const int d = state_dim_;
  Var i = ad::sigmoid(ad::slice_cols(gates, 0, d));
  Var f = ad::sigmoid(ad::slice_cols(gates, d, d));
  Var g = ad::tanh(ad::slice_cols(gates, 2 * d, d));
  Var o = ad::sigmoid(ad::slice_cols(gates, 3 * d, d));
  Var c = ad::add(ad::mul(f, prev.c), ad::mul(i, g));
  return {ad::mul(o, ad::tanh(c)), c};
}

std::vector<Parameter*> LstmTracker::parameters() {
  std::vector<Parameter*> out{&w, &u, &bias};
  if (trainable_h0_) out.insert(out.end(), {&h0, &c0});
  return out;
}

MasteryHead::MasteryHead(int state_dim, int k, std::uint64_t seed) {
  if (k < 1) throw ValidationError("mastery head needs at least one KC");
  Rng rng(seed, 0x3a5);
  w = random_param("mastery.w", state_dim, k, 1.0 / std::sqrt(state_dim), rng);
  b = Parameter("mastery.b", Matrix::Zero(1, k));
}

Var MasteryHead::forward(Binder& binder, Var h) { return ad::sigmoid(ad::add_row(ad::matmul(h, binder(w)), binder(b))); }

CorrectnessHead::CorrectnessHead(int d_model, std::uint64_t seed) {
  Rng rng(seed, 0x9c1);
  w = random_param("correctness.w", d_model, 1, 1.0 / std::sqrt(d_model), rng);
}

Var CorrectnessHead::forward(Binder& binder, Var prompt_hidden) {
  return ad::sigmoid(ad::matmul(ad::mean_rows(prompt_hidden), binder(w)));
}

Var compute_mastery(Binder& b, MasteryHead& head, Var h) { return head.forward(b, h); }

Var soften_mastery(Var m, Var emb_true, Var emb_false) { return ad::lerp(m, emb_true, emb_false); }

double aggregate_kc_mastery(std::span<const double> m, std::span<const int> q_row) {
  if (m.size() != q_row.size()) throw DomainError("mastery and Q-matrix row differ in length");
  double s = 0.0;
  int n = 0;
  for (std::size_t j = 0; j < m.size(); ++j) {
    if (q_row[j]) {
      s += m[j];
      ++n;
    }
  }
  if (n == 0) throw DomainError("problem has no associated KC");
  return s / n;
}

Var aggregate_kc_mastery(Var m, std::span<const int> q_row) {
  if (std::none_of(q_row.begin(), q_row.end(), [](int v) { return v != 0; })) {
    throw DomainError("problem has no associated KC");
  }
  return ad::masked_mean(m, q_row);
}

double binary_cross_entropy(double a, double p, double eps) {
  const double pc = std::clamp(p, eps, 1.0 - eps);
  return -(a * std::log(pc) + (1.0 - a) * std::log(1.0 - pc));
}

double code_generation_loss(const Matrix& distributions, std::span<const int> targets) {
  if (targets.empty()) throw DomainError("code generation loss needs at least one token");
  if (static_cast<std::size_t>(distributions.rows()) != targets.size()) {
    throw DomainError("one distribution per code token is required");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < 0 || targets[i] >= distributions.cols()) throw DomainError("code token outside the vocabulary");
    s -= std::log(distributions(static_cast<Eigen::Index>(i), targets[i]));
  }
  return s;
}

Var code_generation_loss(Var logits, std::span<const int> targets) {
  if (std::none_of(targets.begin(), targets.end(), [](int t) { return t >= 0; })) {
    throw DomainError("code generation loss needs at least one token");
  }
  return ad::cross_entropy_sum(logits, targets);
}

LossBreakdown total_loss(double l_codegen, double l_corrpred, double l_kc, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("lambda must lie in [0, 1]");
  return {l_codegen, l_corrpred, l_kc, lambda * (l_codegen + l_corrpred) + (1.0 - lambda) * l_kc};
}

PromptPlan plan_prompt(const Tokenizer& tokenizer, const std::string& statement,
                       const std::vector<std::string>& kc_names) {
  if (kc_names.empty()) throw IntegrityError("a prompt needs at least one KC");
  PromptPlan plan;
  plan.kc_names = kc_names;
  const auto append = [&](const std::string& text) {
    const auto ids = tokenizer.encode(text);
    plan.ids.insert(plan.ids.end(), ids.begin(), ids.end());
  };
  append("question: " + statement + ".");
  for (std::size_t i = 0; i < kc_names.size(); ++i) {
    const std::string& w = kc_names[i];
    append(" KC " + std::to_string(i + 1) + ": " + w + ". The student's mastery level on " + w + " is:");
    plan.soft_positions.push_back(static_cast<int>(plan.ids.size()));
    plan.ids.push_back(-1);
    append(".");
  }
  plan.ids.push_back(Tokenizer::kCode);
  return plan;
}

Var assemble_prompt(Binder& b, Backbone& backbone, const PromptPlan& plan, const std::vector<Var>& soft_tokens) {
  if (soft_tokens.size() != plan.soft_positions.size() || plan.kc_names.size() != plan.soft_positions.size()) {
    throw DomainError("soft tokens do not match the prompt's KC slots");
  }
  std::vector<Var> parts;
  std::size_t slot = 0;
  std::size_t i = 0;
  while (i < plan.ids.size()) {
    if (plan.ids[i] < 0) {
      const Var& s = soft_tokens[slot++];
      if (s.rows() != 1 || s.cols() != backbone.d_model()) throw DomainError("soft token width differs from d_model");
      parts.push_back(s);
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < plan.ids.size() && plan.ids[j] >= 0) ++j;
    parts.push_back(backbone.embed(b, std::span<const int>(plan.ids.data() + i, j - i)));
    i = j;
  }
  return parts.size() == 1 ? parts.front() : ad::concat_rows(parts);
}

}  // namespace kcgen::kt
