// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <functional>

#include "kcgen/autodiff/tape.hpp"
#include "kcgen/util/rng.hpp"

using namespace kcgen;
using ad::Matrix;

namespace {

Matrix random_matrix(Rng& rng, int r, int c, double scale = 1.0) {
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.normal() * scale;
  return m;
}

// Compares the tape gradient of f w.r.t. one parameter against central differences.
double max_rel_error(ad::Parameter& p, const std::function<ad::Var(ad::Tape&)>& f) {
  p.zero_grad();
  {
    ad::Tape t;
    auto out = f(t);
    t.backward(out);
  }
  const Matrix analytic = p.grad;
  double worst = 0;
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < p.value.size(); ++i) {
    const double orig = p.value.data()[i];
    p.value.data()[i] = orig + h;
    double up, down;
    {
      ad::Tape t(false);
      up = f(t).scalar();
    }
    p.value.data()[i] = orig - h;
    {
      ad::Tape t(false);
      down = f(t).scalar();
    }
    p.value.data()[i] = orig;
    const double numeric = (up - down) / (2 * h);
    const double a = analytic.data()[i];
    const double err = std::fabs(a - numeric) / std::max(1.0, std::fabs(numeric));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace

TEST_CASE("autodiff elementwise and matrix ops match finite differences") {
  Rng rng(7);
  ad::Parameter a("a", random_matrix(rng, 3, 4));
  ad::Parameter b("b", random_matrix(rng, 4, 2));
  ad::Parameter row("row", random_matrix(rng, 1, 2));
  Matrix w = random_matrix(rng, 3, 2);

  auto f = [&](ad::Tape& t) {
    auto y = ad::matmul(t.param(a), t.param(b));
    y = ad::add_row(y, t.param(row));
    auto z = ad::mul(ad::gelu(y), ad::sigmoid(ad::tanh(y)));
    return ad::sum_all(ad::mul(z, t.constant(w)));
  };
  CHECK(max_rel_error(a, f) < 1e-6);
  CHECK(max_rel_error(b, f) < 1e-6);
  CHECK(max_rel_error(row, f) < 1e-6);
}

TEST_CASE("autodiff softmax, layer norm and cross entropy") {
  Rng rng(11);
  ad::Parameter x("x", random_matrix(rng, 4, 5));
  ad::Parameter g("g", random_matrix(rng, 1, 5));
  ad::Parameter be("be", random_matrix(rng, 1, 5));
  std::vector<int> targets{1, -1, 4, 0};
  Matrix w = random_matrix(rng, 4, 4);

  auto f = [&](ad::Tape& t) {
    auto h = ad::layer_norm_rows(t.param(x), t.param(g), t.param(be), 1e-5);
    auto att = ad::softmax_rows(ad::matmul(h, ad::transpose(h)), true);
    auto mixed = ad::matmul(ad::mul(att, t.constant(w)), h);
    return ad::cross_entropy_sum(mixed, targets);
  };
  CHECK(max_rel_error(x, f) < 1e-5);
  CHECK(max_rel_error(g, f) < 1e-5);
  CHECK(max_rel_error(be, f) < 1e-5);
}

TEST_CASE("causal softmax zeroes the future") {
  ad::Tape t;
  Matrix x = Matrix::Random(3, 3);
  auto y = ad::softmax_rows(t.constant(x), true).value();
  CHECK(y(0, 1) == 0.0);
  CHECK(y(0, 2) == 0.0);
  CHECK(y(1, 2) == 0.0);
  CHECK(y(0, 0) == doctest::Approx(1.0));
  CHECK(y.row(2).sum() == doctest::Approx(1.0));
}

TEST_CASE("autodiff slicing, concat, gather, lerp, masked mean, bce") {
  Rng rng(3);
  ad::Parameter table("table", random_matrix(rng, 6, 3));
  ad::Parameter m("m", Matrix::Constant(1, 1, 0.3));
  ad::Parameter s("s", Matrix::Constant(1, 1, 0.7));
  std::vector<int> ids{2, 0, 2, 5};
  std::vector<int> mask{1, 0, 1, 1, 1};

  auto f = [&](ad::Tape& t) {
    auto rows = ad::gather_rows(t.param(table), ids);
    auto top = ad::slice_rows(rows, 0, 2);
    auto bottom = ad::slice_rows(rows, 2, 2);
    auto mixed = ad::lerp(t.param(m), top, bottom);
    std::vector<ad::Var> parts{mixed, ad::slice_cols(bottom, 1, 2), ad::scale_by(top, t.param(s))};
    auto wide = ad::concat_cols(std::vector<ad::Var>{ad::concat_rows(std::vector<ad::Var>{parts[0], parts[2]}),
                                                     ad::concat_rows(std::vector<ad::Var>{parts[1], parts[1]})});
    auto pooled = ad::mean_rows(wide);
    auto r = ad::masked_mean(pooled, mask);
    auto p = ad::sigmoid(r);
    return ad::add(ad::binary_cross_entropy(p, 1.0, 1e-7), ad::scale(ad::add_scalar(r, 2.0), 0.5));
  };
  CHECK(max_rel_error(table, f) < 1e-6);
  CHECK(max_rel_error(m, f) < 1e-6);
  CHECK(max_rel_error(s, f) < 1e-6);
}

TEST_CASE("bce gradient is zero in the clamped region") {
  ad::Tape t;
  auto p = t.input(Matrix::Constant(1, 1, 1.0));
  auto loss = ad::binary_cross_entropy(p, 0.0, 1e-7);
  CHECK(std::isfinite(loss.scalar()));
  CHECK(loss.scalar() == doctest::Approx(-std::log(1e-7)));
  t.backward(loss);
  CHECK(p.grad()(0, 0) == 0.0);
}

TEST_CASE("non-recording tape keeps values only") {
  ad::Parameter a("a", Matrix::Ones(2, 2));
  ad::Tape t(false);
  auto y = ad::sum_all(ad::matmul(t.param(a), t.param(a)));
  CHECK(y.scalar() == 8.0);
  CHECK_THROWS(t.backward(y));
}
