// SPDX-License-Identifier: Apache-2.0
#include "kcgen/autodiff/tape.hpp"

#include <algorithm>
#include <cmath>

#include "kcgen/util/error.hpp"

namespace kcgen::ad {

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::input(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(Parameter& p) {
  Node n;
  n.value = p.value;
  n.requires_grad = record_;
  n.param = &p;
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::push(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (const auto& v : inputs) {
      if (v.tape() != this) throw DomainError("autodiff: mixing vars from different tapes");
      n.requires_grad = n.requires_grad || nodes_[static_cast<std::size_t>(v.id())].requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Matrix* Tape::grad_slot(int id) {
  auto& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.requires_grad) return nullptr;
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return &n.grad;
}

void Tape::backward(Var out) {
  if (out.rows() != 1 || out.cols() != 1) {
    throw DomainError("backward() without seed requires a 1x1 output");
  }
  backward(out, Matrix::Ones(1, 1));
}

void Tape::backward(Var out, const Matrix& seed) {
  if (!record_) throw DomainError("backward() on a non-recording tape");
  auto& root = nodes_[static_cast<std::size_t>(out.id())];
  if (!root.requires_grad) return;
  root.grad = seed;
  for (int i = out.id(); i >= 0; --i) {
    auto& n = nodes_[static_cast<std::size_t>(i)];
    if (n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param) n.param->grad += n.grad;
  }
}

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DomainError(std::string("autodiff ") + op + ": shape mismatch " + std::to_string(a.rows()) +
                      "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                      std::to_string(b.cols()));
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) {
    throw DomainError("autodiff matmul: inner dimensions " + std::to_string(a.cols()) + " vs " +
                      std::to_string(b.rows()));
  }
  const int ia = a.id(), ib = b.id();
  return a.tape()->push(a.value() * b.value(), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (auto* ga = t.grad_slot(ia)) ga->noalias() += g * t.value(ib).transpose();
    if (auto* gb = t.grad_slot(ib)) gb->noalias() += t.value(ia).transpose() * g;
  });
}

Var transpose(Var a) {
  const int ia = a.id();
  return a.tape()->push(a.value().transpose(), {a}, [ia](Tape& t, int self) {
    if (auto* ga = t.grad_slot(ia)) *ga += t.grad(self).transpose();
  });
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  const int ia = a.id(), ib = b.id();
  return a.tape()->push(a.value() + b.value(), {a, b}, [ia, ib](Tape& t, int self) {
    if (auto* ga = t.grad_slot(ia)) *ga += t.grad(self);
    if (auto* gb = t.grad_slot(ib)) *gb += t.grad(self);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  const int ia = a.id(), ib = b.id();
  return a.tape()->push(a.value() - b.value(), {a, b}, [ia, ib](Tape& t, int self) {
    if (auto* ga = t.grad_slot(ia)) *ga += t.grad(self);
    if (auto* gb = t.grad_slot(ib)) *gb -= t.grad(self);
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  const int ia = a.id(), ib = b.id();
  return a.tape()->push(a.value().cwiseProduct(b.value()), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (auto* ga = t.grad_slot(ia)) *ga += g.cwiseProduct(t.value(ib));
    if (auto* gb = t.grad_slot(ib)) *gb += g.cwiseProduct(t.value(ia));
  });
}

Var scale(Var a, double s) {
  const int ia = a.id();
  return a.tape()->push(a.value() * s, {a}, [ia, s](Tape& t, int self) {
    if (auto* ga = t.grad_slot(ia)) *ga += t.grad(self) * s;
  });
}

Var add_scalar(Var a, double c) {
  const int ia = a.id();
  return a.tape()->push(a.value().array() + c, {a}, [ia](Tape& t, int self) {
    if (auto* ga = t.grad_slot(ia)) *ga += t.grad(self);
  });
}

Var add_row(Var a, Var row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw DomainError("autodiff add_row: bad row shape");
  const int ia = a.id(), ir = row.id();
  Matrix v = a.value();
  v.rowwise() += row.value().row(0);
  return a.tape()->push(std::move(v), {a, row}, [ia, ir](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (auto* ga = t.grad_slot(ia)) *ga += g;
    if (auto* gr = t.grad_slot(ir)) *gr += g.colwise().sum();
  });
}

Var sigmoid(Var a) {
  const int ia = a.id();
  Matrix y = a.value().unaryExpr([](double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  });
  return a.tape()->push(std::move(y), {a}, [ia](Tape& t, int self) {
    if (auto* ga = t.grad_slot(ia)) {
      const Matrix& y = t.value(self);
      *ga += t.grad(self).cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix()));
    }
  });
}

Var tanh(Var a) {
  const int ia = a.id();
  Matrix y = a.value().array().tanh().matrix();
  return a.tape()->push(std::move(y), {a}, [ia](Tape& t, int self) {
    if (auto* ga = t.grad_slot(ia)) {
      const Matrix& y = t.value(self);
      *ga += (t.grad(self).array() * (1.0 - y.array().square())).matrix();
    }
  });
}

Var gelu(Var a) {
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double k = 0.044715;
  const int ia = a.id();
  Matrix y = a.value().unaryExpr([](double x) { return 0.5 * x * (1.0 + std::tanh(c * (x + k * x * x * x))); });
  return a.tape()->push(std::move(y), {a}, [ia](Tape& t, int self) {
    if (auto* ga = t.grad_slot(ia)) {
      Matrix d = t.value(ia).unaryExpr([](double x) {
        const double th = std::tanh(c * (x + k * x * x * x));
        return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * c * (1.0 + 3.0 * k * x * x);
      });
      *ga += t.grad(self).cwiseProduct(d);
    }
  });
}

Var softmax_rows(Var a, bool causal) {
  const int ia = a.id();
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::Index limit = causal ? std::min<Eigen::Index>(i + 1, x.cols()) : x.cols();
    double mx = x.row(i).head(limit).maxCoeff();
    double z = 0;
    for (Eigen::Index j = 0; j < limit; ++j) {
      y(i, j) = std::exp(x(i, j) - mx);
      z += y(i, j);
    }
    for (Eigen::Index j = 0; j < limit; ++j) y(i, j) /= z;
    for (Eigen::Index j = limit; j < x.cols(); ++j) y(i, j) = 0.0;
  }
  return a.tape()->push(std::move(y), {a}, [ia](Tape& t, int self) {
    if (auto* ga = t.grad_slot(ia)) {
      const Matrix& y = t.value(self);
      const Matrix& g = t.grad(self);
      Eigen::VectorXd dots = (g.cwiseProduct(y)).rowwise().sum();
      *ga += (y.array() * (g.colwise() - dots).array()).matrix();
    }
  });
}

Var layer_norm_rows(Var x, Var gamma, Var beta, double eps) {
  const Eigen::Index n = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != n || beta.rows() != 1 || beta.cols() != n) {
    throw DomainError("autodiff layer_norm_rows: bad gamma/beta shape");
  }
  const Matrix& xv = x.value();
  Matrix xhat(xv.rows(), n);
  Eigen::VectorXd inv(xv.rows());
  for (Eigen::Index i = 0; i < xv.rows(); ++i) {
    const double mu = xv.row(i).mean();
    const double var = (xv.row(i).array() - mu).square().mean();
    inv(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = (xv.row(i).array() - mu) * inv(i);
  }
  Matrix y = xhat;
  y.array().rowwise() *= gamma.value().row(0).array();
  y.rowwise() += beta.value().row(0);
  const int ix = x.id(), ig = gamma.id(), ib = beta.id();
  return x.tape()->push(std::move(y), {x, gamma, beta},
                        [ix, ig, ib, xhat = std::move(xhat), inv = std::move(inv)](Tape& t, int self) {
                          const Matrix& g = t.grad(self);
                          if (auto* gg = t.grad_slot(ig)) *gg += g.cwiseProduct(xhat).colwise().sum();
                          if (auto* gb = t.grad_slot(ib)) *gb += g.colwise().sum();
                          if (auto* gx = t.grad_slot(ix)) {
                            Matrix dxhat = g;
                            dxhat.array().rowwise() *= t.value(ig).row(0).array();
                            const double nn = static_cast<double>(xhat.cols());
                            for (Eigen::Index i = 0; i < g.rows(); ++i) {
                              const double s1 = dxhat.row(i).sum();
                              const double s2 = dxhat.row(i).dot(xhat.row(i));
                              gx->row(i) += (inv(i) / nn) *
                                            (nn * dxhat.row(i).array() - s1 - xhat.row(i).array() * s2).matrix();
                            }
                          }
                        });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) throw DomainError("autodiff slice_rows: out of range");
  const int ia = a.id();
  return a.tape()->push(a.value().middleRows(start, count), {a}, [ia, start, count](Tape& t, int self) {
    if (auto* ga = t.grad_slot(ia)) ga->middleRows(start, count) += t.grad(self);
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw DomainError("autodiff slice_cols: out of range");
  const int ia = a.id();
  return a.tape()->push(a.value().middleCols(start, count), {a}, [ia, start, count](Tape& t, int self) {
    if (auto* ga = t.grad_slot(ia)) ga->middleCols(start, count) += t.grad(self);
  });
}

namespace {

// Ops with a variable number of inputs register their dependencies through a
// zero-input push and capture the ids; requires_grad is computed here.
Var push_variadic(Tape* tape, Matrix value, const std::vector<int>& ids, Tape::Backward bw) {
  bool any = false;
  for (int id : ids) any = any || tape->requires_grad(id);
  if (!any || !tape->recording()) return tape->push(std::move(value), {}, nullptr);
  // Route through a dummy dependency on the first grad-requiring input so push()
  // marks the node as differentiable.
  for (int id : ids) {
    if (tape->requires_grad(id)) return tape->push(std::move(value), {Var(tape, id)}, std::move(bw));
  }
  return tape->push(std::move(value), {}, nullptr);
}

}  // namespace

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw DomainError("autodiff concat_rows: no inputs");
  Tape* tape = parts[0].tape();
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  std::vector<int> ids;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw DomainError("autodiff concat_rows: column mismatch");
    rows += p.rows();
    ids.push_back(p.id());
  }
  Matrix v(rows, cols);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    v.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return push_variadic(tape, std::move(v), ids, [ids](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Eigen::Index r = 0;
    for (int id : ids) {
      const Eigen::Index n = t.value(id).rows();
      if (auto* gi = t.grad_slot(id)) *gi += g.middleRows(r, n);
      r += n;
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DomainError("autodiff concat_cols: no inputs");
  Tape* tape = parts[0].tape();
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  std::vector<int> ids;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw DomainError("autodiff concat_cols: row mismatch");
    cols += p.cols();
    ids.push_back(p.id());
  }
  Matrix v(rows, cols);
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    v.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return push_variadic(tape, std::move(v), ids, [ids](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    Eigen::Index c = 0;
    for (int id : ids) {
      const Eigen::Index n = t.value(id).cols();
      if (auto* gi = t.grad_slot(id)) *gi += g.middleCols(c, n);
      c += n;
    }
  });
}

Var mean_rows(Var a) {
  if (a.rows() == 0) throw DomainError("autodiff mean_rows: empty input");
  const int ia = a.id();
  return a.tape()->push(a.value().colwise().mean(), {a}, [ia](Tape& t, int self) {
    if (auto* ga = t.grad_slot(ia)) {
      const double n = static_cast<double>(ga->rows());
      ga->rowwise() += t.grad(self).row(0) / n;
    }
  });
}

Var masked_mean(Var row, std::span<const int> mask) {
  if (row.rows() != 1 || static_cast<std::size_t>(row.cols()) != mask.size()) {
    throw DomainError("autodiff masked_mean: mask length mismatch");
  }
  std::vector<Eigen::Index> idx;
  for (std::size_t j = 0; j < mask.size(); ++j) {
    if (mask[j]) idx.push_back(static_cast<Eigen::Index>(j));
  }
  if (idx.empty()) throw DomainError("masked_mean: mask selects no entries");
  double s = 0;
  for (auto j : idx) s += row.value()(0, j);
  const double n = static_cast<double>(idx.size());
  Matrix v(1, 1);
  v(0, 0) = s / n;
  const int ir = row.id();
  return row.tape()->push(std::move(v), {row}, [ir, idx, n](Tape& t, int self) {
    if (auto* gr = t.grad_slot(ir)) {
      const double g = t.grad(self)(0, 0) / n;
      for (auto j : idx) (*gr)(0, j) += g;
    }
  });
}

Var sum_all(Var a) {
  const int ia = a.id();
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  return a.tape()->push(std::move(v), {a}, [ia](Tape& t, int self) {
    if (auto* ga = t.grad_slot(ia)) ga->array() += t.grad(self)(0, 0);
  });
}

Var gather_rows(Var table, std::span<const int> ids) {
  Matrix v(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows()) throw DomainError("autodiff gather_rows: index out of range");
    v.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
  }
  const int it = table.id();
  std::vector<int> idv(ids.begin(), ids.end());
  return table.tape()->push(std::move(v), {table}, [it, idv = std::move(idv)](Tape& t, int self) {
    if (auto* gt = t.grad_slot(it)) {
      const Matrix& g = t.grad(self);
      for (std::size_t i = 0; i < idv.size(); ++i) gt->row(idv[i]) += g.row(static_cast<Eigen::Index>(i));
    }
  });
}

Var cross_entropy_sum(Var logits, std::span<const int> targets) {
  if (static_cast<std::size_t>(logits.rows()) != targets.size()) {
    throw DomainError("autodiff cross_entropy_sum: target count mismatch");
  }
  const Matrix& x = logits.value();
  Matrix probs = Matrix::Zero(x.rows(), x.cols());
  double loss = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int tgt = targets[static_cast<std::size_t>(i)];
    if (tgt < 0) continue;
    if (tgt >= x.cols()) throw DomainError("autodiff cross_entropy_sum: target out of range");
    const double mx = x.row(i).maxCoeff();
    const double lse = mx + std::log((x.row(i).array() - mx).exp().sum());
    loss += lse - x(i, tgt);
    probs.row(i) = (x.row(i).array() - lse).exp().matrix();
    probs(i, tgt) -= 1.0;
  }
  Matrix v(1, 1);
  v(0, 0) = loss;
  const int il = logits.id();
  return logits.tape()->push(std::move(v), {logits}, [il, probs = std::move(probs)](Tape& t, int self) {
    if (auto* gl = t.grad_slot(il)) *gl += probs * t.grad(self)(0, 0);
  });
}

Var binary_cross_entropy(Var p, double target, double eps) {
  if (p.rows() != 1 || p.cols() != 1) throw DomainError("binary_cross_entropy expects a 1x1 probability");
  const double raw = p.scalar();
  const double pc = std::clamp(raw, eps, 1.0 - eps);
  Matrix v(1, 1);
  v(0, 0) = -(target * std::log(pc) + (1.0 - target) * std::log(1.0 - pc));
  const bool clamped = raw <= eps || raw >= 1.0 - eps;
  const int ip = p.id();
  return p.tape()->push(std::move(v), {p}, [ip, pc, target, clamped](Tape& t, int self) {
    auto* gp = t.grad_slot(ip);
    if (gp && !clamped) {
      (*gp)(0, 0) += t.grad(self)(0, 0) * (-target / pc + (1.0 - target) / (1.0 - pc));
    }
  });
}

Var lerp(Var m, Var a, Var b) {
  if (m.rows() != 1 || m.cols() != 1) throw DomainError("lerp expects a 1x1 weight");
  require_same_shape(a, b, "lerp");
  const double w = m.scalar();
  const int im = m.id(), ia = a.id(), ib = b.id();
  Matrix v = w * a.value() + (1.0 - w) * b.value();
  return push_variadic(a.tape(), std::move(v), {im, ia, ib}, [im, ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    const double w = t.value(im)(0, 0);
    if (auto* gm = t.grad_slot(im)) (*gm)(0, 0) += g.cwiseProduct(t.value(ia) - t.value(ib)).sum();
    if (auto* ga = t.grad_slot(ia)) *ga += w * g;
    if (auto* gb = t.grad_slot(ib)) *gb += (1.0 - w) * g;
  });
}

Var scale_by(Var a, Var s) {
  if (s.rows() != 1 || s.cols() != 1) throw DomainError("scale_by expects a 1x1 factor");
  const int ia = a.id(), is = s.id();
  return a.tape()->push(a.value() * s.scalar(), {a, s}, [ia, is](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (auto* ga = t.grad_slot(ia)) *ga += g * t.value(is)(0, 0);
    if (auto* gs = t.grad_slot(is)) (*gs)(0, 0) += g.cwiseProduct(t.value(ia)).sum();
  });
}

}  // namespace kcgen::ad
