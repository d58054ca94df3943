// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "kcgen/eval/codebleu.hpp"
#include "kcgen/eval/metrics.hpp"
#include "kcgen/eval/syntax.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/rng.hpp"

using namespace kcgen;
using namespace kcgen::eval;

namespace {

double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      den += 1;
      num += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  return num / den;
}

}  // namespace

TEST_CASE("auc trivial cases") {
  std::vector<double> s{0.1, 0.2, 0.8, 0.9};
  std::vector<int> y{0, 0, 1, 1};
  CHECK(auc(s, y) == 1.0);
  std::vector<double> flat(4, 0.3);
  CHECK(auc(flat, y) == 0.5);
  std::vector<int> one{1, 1, 1, 1};
  CHECK_THROWS_AS(auc(s, one), UndefinedMetricError);
}

TEST_CASE("auc matches pairwise oracle, is rank invariant and permutation invariant") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(50);
    std::vector<int> y(50);
    for (int i = 0; i < 50; ++i) {
      s[i] = std::round(rng.uniform() * 20) / 20;  // coarse grid forces ties
      y[i] = rng.bernoulli(0.4) ? 1 : 0;
    }
    y[0] = 1;
    y[1] = 0;
    const double a = auc(s, y);
    CHECK(std::fabs(a - pairwise_auc(s, y)) < 1e-12);
    std::vector<double> t(s.size());
    std::transform(s.begin(), s.end(), t.begin(), [](double v) { return std::exp(3 * v) - 7; });
    CHECK(std::fabs(auc(t, y) - a) < 1e-12);
    std::vector<std::size_t> perm(50);
    for (std::size_t i = 0; i < 50; ++i) perm[i] = i;
    rng.shuffle(perm);
    std::vector<double> ps(50);
    std::vector<int> py(50);
    for (std::size_t i = 0; i < 50; ++i) {
      ps[i] = s[perm[i]];
      py[i] = y[perm[i]];
    }
    CHECK(std::fabs(auc(ps, py) - a) < 1e-12);
  }
}

TEST_CASE("f1 and accuracy") {
  std::vector<double> s{0.9, 0.1, 0.7};
  std::vector<int> y{1, 0, 1};
  auto c = f1_and_accuracy(s, y);
  CHECK(c.f1 == 1.0);
  CHECK(c.accuracy == 1.0);
  std::vector<double> low{0.1, 0.1, 0.1};
  CHECK(f1_and_accuracy(low, y).f1 == 0.0);

  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> sc(30);
    std::vector<int> lab(30);
    int tp = 0, fp = 0, fn = 0, tn = 0;
    for (int i = 0; i < 30; ++i) {
      sc[i] = rng.uniform();
      lab[i] = rng.bernoulli(0.5);
      const bool p = sc[i] >= 0.5;
      if (p && lab[i]) ++tp;
      if (p && !lab[i]) ++fp;
      if (!p && lab[i]) ++fn;
      if (!p && !lab[i]) ++tn;
    }
    const double prec = tp + fp ? double(tp) / (tp + fp) : 0;
    const double rec = tp + fn ? double(tp) / (tp + fn) : 0;
    const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0;
    auto r = f1_and_accuracy(sc, lab);
    CHECK(std::fabs(r.f1 - f1) < 1e-12);
    CHECK(r.accuracy == double(tp + tn) / 30);
  }
}

TEST_CASE("aggregate and paired t-test") {
  std::vector<MetricReport> rs(3);
  for (int i = 0; i < 3; ++i) {
    rs[i].split_index = i;
    rs[i].auc = 0.6 + 0.1 * i;
    rs[i].f1 = 0.5;
    rs[i].accuracy = 0.5;
    rs[i].n_examples = 10;
  }
  auto agg = aggregate(rs);
  CHECK(agg.auc == doctest::Approx(0.7));
  REQUIRE(agg.auc_std);
  CHECK(*agg.auc_std == doctest::Approx(0.1));
  CHECK(agg.n_examples == 30);
  CHECK(!agg.codebleu);
  auto single = aggregate(std::span<const MetricReport>(rs.data(), 1));
  CHECK(!single.auc_std);

  // t = mean(d) / (sd(d)/sqrt(n)) with d = {1,2,3}: 2 / (1/sqrt 3); p from t(2).
  std::vector<double> a{2, 3, 4}, b{1, 1, 1};
  auto t = paired_t_test(a, b);
  CHECK(t.t_statistic == doctest::Approx(2 * std::sqrt(3.0)));
  // Two-sided p for t(2) at 3.4641: 1 - t/sqrt(t^2+2) closed form.
  const double tt = 2 * std::sqrt(3.0);
  CHECK(t.p_value == doctest::Approx(1 - tt / std::sqrt(tt * tt + 2)).epsilon(1e-9));
}

TEST_CASE("java parser accepts typical submissions") {
  const char* codes[] = {
      "public int caughtSpeeding(int speed, boolean isBirthday) {\n"
      "  int bonus = isBirthday ? 5 : 0;\n"
      "  if (speed <= 60 + bonus) return 0;\n"
      "  else if (speed <= 80 + bonus) { return 1; }\n"
      "  return 2;\n}\n",
      "public class A { private int[] xs = new int[3]; static int f(String s) { for (char c : s.toCharArray()) {"
      " if (c == 'a') return 1; } return 0; } }",
      "int total = 0;\nfor (int i = 0, j = 10; i < j; i++, j--) total += i * j;\nwhile (total > 3) total /= 2;",
      "public boolean f(List<Map<String, Integer>> xs) { try { return xs.get(0).isEmpty(); } catch (Exception e) {"
      " return false; } finally { x = (int) y; } }",
      "void g() { switch (x) { case 1: y++; break; default: y--; } do { x--; } while (x > 0); "
      "Runnable r = () -> System.out.println(\"hi\"); int[][] m = {{1, 2}, {3}}; label: for (;;) break label; }",
  };
  for (const char* c : codes) {
    CAPTURE(c);
    CHECK_NOTHROW(parse(c, Language::java));
  }
  CHECK_THROWS_AS(parse("public int f( { return ; ", Language::java), ParseError);
  CHECK_THROWS_AS(parse("if (x > ) y = 1;", Language::java), ParseError);
}

TEST_CASE("python parser accepts typical submissions") {
  const char* code =
      "import math\n"
      "from collections import Counter as C\n"
      "\n"
      "def f(xs, k=2, *args, **kw):\n"
      "    # comment\n"
      "    total = 0\n"
      "    for i, x in enumerate(xs):\n"
      "        if x % k == 0 and not x in kw:\n"
      "            total += x ** 2\n"
      "        elif x < 0:\n"
      "            continue\n"
      "        else:\n"
      "            total -= 1\n"
      "    ys = [y * 2 for y in xs if y > 0]\n"
      "    d = {a: b for a, b in zip(xs, ys)}\n"
      "    s = xs[1:3] + xs[::2]\n"
      "    try:\n"
      "        v = d[0]\n"
      "    except KeyError as e:\n"
      "        v = None\n"
      "    return total if total > 0 else -total\n"
      "\n"
      "class A(object):\n"
      "    def __init__(self):\n"
      "        self.x = lambda q: q + 1\n";
  CHECK_NOTHROW(parse(code, Language::python));
  CHECK_THROWS_AS(parse("def f(:\n  return\n", Language::python), ParseError);
  CHECK_THROWS_AS(parse("if x:\nreturn 1\n", Language::python), ParseError);
}

TEST_CASE("dataflow edges are rename invariant") {
  auto a = extract_dataflow(parse("int f(int a) { int b = a + 1; b += a; return b; }", Language::java));
  auto b = extract_dataflow(parse("int f(int q) { int z = q + 1; z += q; return z; }", Language::java));
  CHECK(a == b);
  CHECK(!a.empty());
  // int a (param), b computedFrom a, comesFrom a, b computedFrom {a,b}, ...
  CHECK(a[0] == DataflowEdge{"var_0", "computedFrom", {}});
  CHECK(a[2] == DataflowEdge{"var_1", "computedFrom", {"var_0"}});
}

TEST_CASE("codebleu identity, range and ordering") {
  const std::string ref =
      "public int sumArray(int[] nums) {\n  int total = 0;\n  for (int i = 0; i < nums.length; i++) {\n"
      "    total += nums[i];\n  }\n  return total;\n}\n";
  auto id = codebleu_detail(ref, ref, Language::java);
  CHECK(id.score == 1.0);
  CHECK(id.syntax.value() == 1.0);
  CHECK(id.dataflow.value() == 1.0);

  const std::string renamed =
      "public int sumArray(int[] values) {\n  int acc = 0;\n  for (int k = 0; k < values.length; k++) {\n"
      "    acc += values[k];\n  }\n  return acc;\n}\n";
  const std::string shuffled = "} ; total [ nums ) i return ( int { += for total ] = 0 i < ; int nums.length";
  const double r = codebleu(renamed, ref, Language::java);
  const double s = codebleu(shuffled, ref, Language::java);
  CHECK(r > s);
  CHECK(r < 1.0);
  auto disjoint = codebleu_detail("@@ ?? qq zz ww", ref, Language::java);
  CHECK(!disjoint.candidate_parsed);
  CHECK(disjoint.score < 0.1);
  CHECK(disjoint.score >= 0.0);

  const std::string py = "def f(xs):\n    t = 0\n    for x in xs:\n        t += x\n    return t\n";
  CHECK(codebleu(py, py, Language::python) == 1.0);
  CHECK_THROWS_AS(codebleu(py, py, Language::python, CodeBleuConfig{{0.5, 0.5, 0.5, 0.5}}), DomainError);
}

TEST_CASE("bleu with short reference skips unavailable orders") {
  std::vector<std::string> a{"return", "x", ";"};
  CHECK(bleu(a, a) == 1.0);
  std::vector<std::string> empty;
  CHECK(bleu(empty, a) == 0.0);
}
