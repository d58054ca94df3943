// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <string>

#include "kcgen/kt/backbone.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/rng.hpp"

namespace kcgen::kt {

Var Binder::operator()(Parameter& p) {
  auto it = bound_.find(&p);
  if (it != bound_.end()) return it->second;
  Var v = tape_.param(p);
  bound_.emplace(&p, v);
  return v;
}

namespace {

constexpr double kLnEps = 1e-5;

Parameter normal_param(std::string name, int rows, int cols, double std, Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal(0.0, std);
  return Parameter(std::move(name), std::move(m));
}

Parameter filled(std::string name, int rows, int cols, double value) {
  return Parameter(std::move(name), Matrix::Constant(rows, cols, value));
}

Eigen::RowVectorXd layer_norm(const Eigen::RowVectorXd& x, const Parameter& g, const Parameter& b) {
  const double mu = x.mean();
  const double var = (x.array() - mu).square().mean();
  const double inv = 1.0 / std::sqrt(var + kLnEps);
  Eigen::RowVectorXd y = (x.array() - mu) * inv;
  return (y.array() * g.value.row(0).array()).matrix() + b.value.row(0);
}

double gelu(double x) {
  constexpr double c = 0.7978845608028654;
  return 0.5 * x * (1.0 + std::tanh(c * (x + 0.044715 * x * x * x)));
}

class TransformerSession final : public DecodeSession {
 public:
  explicit TransformerSession(const TinyTransformer& m) : m_(m) {
    const auto& cfg = m.config();
    keys_.assign(m.layers().size(), Matrix(cfg.max_len, cfg.d_model));
    values_.assign(m.layers().size(), Matrix(cfg.max_len, cfg.d_model));
  }

  std::pair<Eigen::RowVectorXd, Eigen::RowVectorXd> step(const Eigen::RowVectorXd& input) override {
    const auto& cfg = m_.config();
    if (t_ >= cfg.max_len) throw DomainError("sequence exceeds the context window of " + std::to_string(cfg.max_len));
    Eigen::RowVectorXd x = input + m_.position_embedding().value.row(t_);
    const int dh = cfg.d_model / cfg.n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    for (std::size_t l = 0; l < m_.layers().size(); ++l) {
      const auto& L = m_.layers()[l];
      const Eigen::RowVectorXd a = layer_norm(x, L.ln1_g, L.ln1_b);
      const Eigen::RowVectorXd q = a * L.wq.value;
      keys_[l].row(t_) = a * L.wk.value;
      values_[l].row(t_) = a * L.wv.value;
      Eigen::RowVectorXd o(cfg.d_model);
      for (int h = 0; h < cfg.n_heads; ++h) {
        const auto K = keys_[l].block(0, h * dh, t_ + 1, dh);
        const auto V = values_[l].block(0, h * dh, t_ + 1, dh);
        Eigen::RowVectorXd s = (q.segment(h * dh, dh) * K.transpose()) * scale;
        const double mx = s.maxCoeff();
        s = (s.array() - mx).exp();
        s /= s.sum();
        o.segment(h * dh, dh) = s * V;
      }
      x += o * L.wo.value;
      const Eigen::RowVectorXd b = layer_norm(x, L.ln2_g, L.ln2_b);
      Eigen::RowVectorXd f = b * L.w1.value + L.b1.value.row(0);
      f = f.unaryExpr([](double v) { return gelu(v); });
      x += f * L.w2.value + L.b2.value.row(0);
    }
    ++t_;
    Eigen::RowVectorXd hidden = layer_norm(x, m_.final_gamma(), m_.final_beta());
    Eigen::RowVectorXd logits = hidden * m_.output_projection().value;
    return {std::move(hidden), std::move(logits)};
  }

  int length() const override { return t_; }

 private:
  const TinyTransformer& m_;
  std::vector<Matrix> keys_, values_;
  int t_ = 0;
};

}  // namespace

TinyTransformer::TinyTransformer(Tokenizer tokenizer, TransformerConfig config, std::uint64_t seed)
    : tokenizer_(std::move(tokenizer)), config_(config) {
  if (config_.d_model <= 0 || config_.n_heads <= 0 || config_.d_model % config_.n_heads != 0) {
    throw ValidationError("d_model must be a positive multiple of n_heads");
  }
  if (config_.n_layers < 1 || config_.d_ff < 1 || config_.max_len < 2) {
    throw ValidationError("transformer needs n_layers >= 1, d_ff >= 1, max_len >= 2");
  }
  Rng rng(seed, 0x7b);
  const int v = static_cast<int>(tokenizer_.size());
  const int d = config_.d_model;
  const double s = config_.init_std;
  tok_ = normal_param("backbone.tok", v, d, s, rng);
  pos_ = normal_param("backbone.pos", config_.max_len, d, s, rng);
  for (int l = 0; l < config_.n_layers; ++l) {
    const std::string p = "backbone.layer" + std::to_string(l) + ".";
    layers_.push_back({filled(p + "ln1_g", 1, d, 1.0), filled(p + "ln1_b", 1, d, 0.0),
                       normal_param(p + "wq", d, d, s, rng), normal_param(p + "wk", d, d, s, rng),
                       normal_param(p + "wv", d, d, s, rng), normal_param(p + "wo", d, d, s, rng),
                       filled(p + "ln2_g", 1, d, 1.0), filled(p + "ln2_b", 1, d, 0.0),
                       normal_param(p + "w1", d, config_.d_ff, s, rng), filled(p + "b1", 1, config_.d_ff, 0.0),
                       normal_param(p + "w2", config_.d_ff, d, s, rng), filled(p + "b2", 1, d, 0.0)});
  }
  lnf_g_ = filled("backbone.lnf_g", 1, d, 1.0);
  lnf_b_ = filled("backbone.lnf_b", 1, d, 0.0);
  head_ = normal_param("backbone.head", d, v, s, rng);
}

Var TinyTransformer::embed(Binder& b, std::span<const int> ids) { return ad::gather_rows(b(tok_), ids); }

Matrix TinyTransformer::embedding_values(std::span<const int> ids) const {
  Matrix out(static_cast<Eigen::Index>(ids.size()), config_.d_model);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tok_.value.rows()) throw DomainError("token id out of range");
    out.row(static_cast<Eigen::Index>(i)) = tok_.value.row(ids[i]);
  }
  return out;
}

BackboneOutput TinyTransformer::forward(Binder& b, Var inputs) {
  const Eigen::Index T = inputs.rows();
  if (inputs.cols() != config_.d_model) throw DomainError("backbone input width differs from d_model");
  if (T < 1) throw DomainError("backbone input is empty");
  if (T > config_.max_len) {
    throw DomainError("sequence of " + std::to_string(T) + " exceeds the context window of " +
                      std::to_string(config_.max_len));
  }
  const int dh = config_.d_model / config_.n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Var x = ad::add(inputs, ad::slice_rows(b(pos_), 0, T));
  for (auto& L : layers_) {
    Var a = ad::layer_norm_rows(x, b(L.ln1_g), b(L.ln1_b), kLnEps);
    Var q = ad::matmul(a, b(L.wq));
    Var k = ad::matmul(a, b(L.wk));
    Var v = ad::matmul(a, b(L.wv));
    std::vector<Var> heads;
    for (int h = 0; h < config_.n_heads; ++h) {
      Var qh = ad::slice_cols(q, h * dh, dh);
      Var kh = ad::slice_cols(k, h * dh, dh);
      Var vh = ad::slice_cols(v, h * dh, dh);
      Var att = ad::softmax_rows(ad::scale(ad::matmul(qh, ad::transpose(kh)), scale), /*causal=*/true);
      heads.push_back(ad::matmul(att, vh));
    }
    Var o = config_.n_heads == 1 ? heads.front() : ad::concat_cols(heads);
    x = ad::add(x, ad::matmul(o, b(L.wo)));
    Var c = ad::layer_norm_rows(x, b(L.ln2_g), b(L.ln2_b), kLnEps);
    Var f = ad::gelu(ad::add_row(ad::matmul(c, b(L.w1)), b(L.b1)));
    x = ad::add(x, ad::add_row(ad::matmul(f, b(L.w2)), b(L.b2)));
  }
  Var hidden = ad::layer_norm_rows(x, b(lnf_g_), b(lnf_b_), kLnEps);
  return {hidden, ad::matmul(hidden, b(head_))};
}

std::unique_ptr<DecodeSession> TinyTransformer::start_session() const {
  return std::make_unique<TransformerSession>(*this);
}

std::vector<Parameter*> TinyTransformer::parameters() {
  std::vector<Parameter*> out{&tok_, &pos_};
  for (auto& L : layers_) {
    for (Parameter* p : {&L.ln1_g, &L.ln1_b, &L.wq, &L.wk, &L.wv, &L.wo, &L.ln2_g, &L.ln2_b, &L.w1, &L.b1, &L.w2,
                         &L.b2}) {
      out.push_back(p);
    }
  }
  out.insert(out.end(), {&lnf_g_, &lnf_b_, &head_});
  return out;
}

}  // namespace kcgen::kt
