// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "kcgen/autodiff/tape.hpp"
#include "kcgen/kt/tokenizer.hpp"

namespace kcgen::kt {

using ad::Matrix;
using ad::Parameter;
using ad::Tape;
using ad::Var;

/// Places each Parameter on a tape once, however many times it is used.
class Binder {
 public:
  explicit Binder(Tape& tape) : tape_(tape) {}
  Var operator()(Parameter& p);
  Tape& tape() { return tape_; }

 private:
  Tape& tape_;
  std::unordered_map<Parameter*, Var> bound_;
};

struct BackboneOutput {
  /// Last-layer hidden states, one row per position.
  Var hidden;
  /// Next-token logits, one row per position.
  Var logits;
};

/// Incremental inference over one sequence; rows are fed one at a time.
class DecodeSession {
 public:
  virtual ~DecodeSession() = default;
  /// Consumes one input embedding row; returns (hidden row, logits row).
  virtual std::pair<Eigen::RowVectorXd, Eigen::RowVectorXd> step(const Eigen::RowVectorXd& input) = 0;
  virtual int length() const = 0;
};

/// Causal language model the knowledge tracer is built around.
class Backbone {
 public:
  virtual ~Backbone() = default;
  virtual const Tokenizer& tokenizer() const = 0;
  virtual int d_model() const = 0;
  virtual int max_len() const = 0;
  virtual std::string kind() const = 0;

  /// Token embedding rows (T x d_model) on the tape.
  virtual Var embed(Binder& b, std::span<const int> ids) = 0;
  /// Token embedding rows without recording.
  virtual Matrix embedding_values(std::span<const int> ids) const = 0;
  /// Runs the stack over input embeddings (T x d_model), causally.
  virtual BackboneOutput forward(Binder& b, Var inputs) = 0;
  virtual std::unique_ptr<DecodeSession> start_session() const = 0;

  virtual std::vector<Parameter*> parameters() = 0;
};

struct TransformerConfig {
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  int d_ff = 128;
  int max_len = 512;
  double init_std = 0.02;
};

/// Pre-LayerNorm decoder-only transformer with learned positions, GELU
/// feed-forward layers and an untied output projection.
class TinyTransformer final : public Backbone {
 public:
  TinyTransformer(Tokenizer tokenizer, TransformerConfig config, std::uint64_t seed);

  const Tokenizer& tokenizer() const override { return tokenizer_; }
  int d_model() const override { return config_.d_model; }
  int max_len() const override { return config_.max_len; }
  std::string kind() const override { return "tiny-transformer"; }
  const TransformerConfig& config() const { return config_; }

  Var embed(Binder& b, std::span<const int> ids) override;
  Matrix embedding_values(std::span<const int> ids) const override;
  BackboneOutput forward(Binder& b, Var inputs) override;
  std::unique_ptr<DecodeSession> start_session() const override;
  std::vector<Parameter*> parameters() override;

  struct Layer {
    Parameter ln1_g, ln1_b, wq, wk, wv, wo, ln2_g, ln2_b, w1, b1, w2, b2;
  };
  const std::vector<Layer>& layers() const { return layers_; }
  const Parameter& token_embedding() const { return tok_; }
  const Parameter& position_embedding() const { return pos_; }
  const Parameter& final_gamma() const { return lnf_g_; }
  const Parameter& final_beta() const { return lnf_b_; }
  const Parameter& output_projection() const { return head_; }

 private:
  Tokenizer tokenizer_;
  TransformerConfig config_;
  Parameter tok_, pos_;
  std::vector<Layer> layers_;
  Parameter lnf_g_, lnf_b_, head_;
};

}  // namespace kcgen::kt
