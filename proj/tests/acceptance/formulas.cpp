// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <map>

#include "harness.hpp"
#include "kcgen/core/synthetic.hpp"
#include "kcgen/embed/embedding.hpp"
#include "kcgen/eval/codebleu.hpp"
#include "kcgen/eval/metrics.hpp"
#include "kcgen/kt/train.hpp"
#include "kcgen/util/rng.hpp"

using namespace kcgen;
using kt::Tape;
using kt::Var;

namespace {

double rel_err(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

// ---------------------------------------------------------------- oracles

double o_mean_flagged(const std::vector<double>& m, const std::vector<int>& q) {
  double s = 0;
  int n = 0;
  for (std::size_t j = 0; j < m.size(); ++j) {
    if (q[j] != 0) {
      s += m[j];
      n += 1;
    }
  }
  return s / n;
}

double o_bce(double a, double p) { return a == 1.0 ? -std::log(p) : -std::log(1.0 - p); }

double o_cosine(const std::vector<double>& u, const std::vector<double>& v) {
  long double uv = 0, uu = 0, vv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += static_cast<long double>(u[i]) * v[i];
    uu += static_cast<long double>(u[i]) * u[i];
    vv += static_cast<long double>(v[i]) * v[i];
  }
  return static_cast<double>(uv / std::sqrt(uu * vv));
}

// Probability that a random positive outranks a random negative.
double o_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0;
  long pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      ++pairs;
    }
  }
  return wins / static_cast<double>(pairs);
}

std::pair<double, double> o_f1_acc(const std::vector<double>& s, const std::vector<int>& y, double thr) {
  int tp = 0, fp = 0, fn = 0, hit = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const int pred = s[i] >= thr ? 1 : 0;
    tp += pred == 1 && y[i] == 1;
    fp += pred == 1 && y[i] == 0;
    fn += pred == 0 && y[i] == 1;
    hit += pred == y[i];
  }
  const double f1 = tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
  return {f1, static_cast<double>(hit) / static_cast<double>(s.size())};
}

accept::Register c1(1, "exact-formula oracles", 60, [](accept::Outcome& out) {
  Rng rng(20241);
  const int cases = 200;
  double e_agg = 0, e_agg_tape = 0, e_bce = 0, e_total = 0, e_cos = 0, e_auc = 0, e_f1 = 0, e_acc = 0;
  for (int c = 0; c < cases; ++c) {
    const int k = 1 + static_cast<int>(rng.below(12));
    std::vector<double> m(static_cast<std::size_t>(k));
    std::vector<int> q(static_cast<std::size_t>(k));
    for (auto& v : m) v = rng.uniform(1e-3, 1 - 1e-3);
    for (auto& v : q) v = rng.bernoulli(0.4);
    q[rng.below(static_cast<std::uint64_t>(k))] = 1;
    e_agg = std::max(e_agg, rel_err(kt::aggregate_kc_mastery(m, q), o_mean_flagged(m, q)));
    Tape tape(false);
    kt::Matrix row(1, k);
    for (int j = 0; j < k; ++j) row(0, j) = m[static_cast<std::size_t>(j)];
    e_agg_tape = std::max(e_agg_tape, rel_err(kt::aggregate_kc_mastery(tape.constant(row), q).scalar(),
                                              o_mean_flagged(m, q)));

    const double a = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const double p = rng.uniform(1e-4, 1 - 1e-4);
    e_bce = std::max(e_bce, rel_err(kt::correctness_loss(a, p), o_bce(a, p)));
    e_bce = std::max(e_bce, rel_err(kt::kc_loss(a, p), o_bce(a, p)));
    e_bce = std::max(e_bce, rel_err(ad::binary_cross_entropy(tape.constant(kt::Matrix::Constant(1, 1, p)), a,
                                                              kt::kBceEps).scalar(),
                                    o_bce(a, p)));

    const double cg = rng.uniform(0, 50), cp = rng.uniform(0, 2), kc = rng.uniform(0, 2), lambda = rng.uniform();
    const auto tl = kt::total_loss(cg, cp, kc, lambda);
    e_total = std::max(e_total, rel_err(tl.total, lambda * cg + lambda * cp + (1 - lambda) * kc));

    const std::size_t dim = 1 + rng.below(64);
    std::vector<double> u(dim), v(dim);
    for (auto& x : u) x = rng.normal();
    for (auto& x : v) x = rng.normal();
    e_cos = std::max(e_cos, std::abs(embed::cosine_similarity(u, v) - o_cosine(u, v)));

    const std::size_t n = 4 + rng.below(60);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse scores so ties occur.
      s[i] = std::round(rng.uniform() * 10) / 10;
      y[i] = rng.bernoulli(0.5);
    }
    y[0] = 1;
    y[1] = 0;
    e_auc = std::max(e_auc, std::abs(eval::auc(s, y) - o_auc(s, y)));
    const double thr = rng.uniform(0.2, 0.8);
    const auto got = eval::f1_and_accuracy(s, y, thr);
    const auto want = o_f1_acc(s, y, thr);
    e_f1 = std::max(e_f1, std::abs(got.f1 - want.first));
    e_acc = std::max(e_acc, std::abs(got.accuracy - want.second));
  }
  out.note(std::to_string(cases) + " cases each");
  out.check(e_agg <= 1e-12 && e_agg_tape <= 1e-12, "aggregate_kc_mastery err " + accept::fmt(std::max(e_agg, e_agg_tape), 2) + " <= 1e-12");
  out.check(e_bce <= 1e-12, "BCE err " + accept::fmt(e_bce, 2) + " <= 1e-12");
  out.check(e_total <= 1e-12, "total_loss err " + accept::fmt(e_total, 2) + " <= 1e-12");
  out.check(e_cos <= 1e-12, "cosine err " + accept::fmt(e_cos, 2) + " <= 1e-12");
  out.check(e_auc <= 1e-12, "AUC err " + accept::fmt(e_auc, 2) + " <= 1e-12");
  out.check(e_f1 <= 1e-12 && e_acc <= 1e-12, "F1/accuracy err " + accept::fmt(std::max(e_f1, e_acc), 2) + " <= 1e-12");
});

// ---------------------------------------------------------------- soft tokens

accept::Register c2(2, "soft tokens", 60, [](accept::Outcome& out) {
  Rng rng(77);
  bool exact = true;
  double worst_fd = 0, worst_tape = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 4 + static_cast<int>(rng.below(60));
    kt::Matrix et(1, d), ef(1, d);
    for (int j = 0; j < d; ++j) {
      et(0, j) = rng.normal();
      ef(0, j) = rng.normal();
    }
    auto soft = [&](double m) {
      Tape t(false);
      return kt::Matrix(kt::soften_mastery(t.constant(kt::Matrix::Constant(1, 1, m)), t.constant(et), t.constant(ef)).value());
    };
    exact = exact && soft(1.0) == et && soft(0.0) == ef && soft(0.5) == kt::Matrix(0.5 * (et + ef));
    const double m0 = rng.uniform(0.05, 0.95), h = 1e-5;
    const kt::Matrix fd = (soft(m0 + h) - soft(m0 - h)) / (2 * h);
    const kt::Matrix want = et - ef;
    worst_fd = std::max(worst_fd, (fd - want).cwiseAbs().maxCoeff());
    for (int j = 0; j < d; j += 7) {
      Tape t;
      const Var m = t.input(kt::Matrix::Constant(1, 1, m0));
      t.backward(ad::slice_cols(kt::soften_mastery(m, t.constant(et), t.constant(ef)), j, 1));
      worst_tape = std::max(worst_tape, std::abs(m.grad()(0, 0) - want(0, j)));
    }
  }
  out.check(exact, "m in {0, 0.5, 1} identities exact");
  out.check(worst_fd <= 1e-6, "central-difference ds/dm err " + accept::fmt(worst_fd, 2) + " <= 1e-6");
  out.check(worst_tape <= 1e-6, "tape ds/dm err " + accept::fmt(worst_tape, 2) + " <= 1e-6");
});

// ---------------------------------------------------------------- monotone yhat

accept::Register c4(4, "monotone interpretability", 60, [](accept::Outcome& out) {
  Rng rng(404);
  int strict = 0, unchanged = 0, violations = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = 1 + rng.below(10);
    std::vector<double> m(k);
    std::vector<int> q(k);
    for (auto& v : m) v = rng.uniform(0.0, 0.95);
    for (auto& v : q) v = rng.bernoulli(0.5);
    q[rng.below(k)] = 1;
    const double base = kt::aggregate_kc_mastery(m, q);
    for (std::size_t j = 0; j < k; ++j) {
      auto up = m;
      up[j] = rng.uniform(m[j] + 1e-9, 1.0);
      const double y = kt::aggregate_kc_mastery(up, q);
      if (q[j]) {
        (y > base ? strict : violations) += 1;
      } else {
        (y == base ? unchanged : violations) += 1;
      }
    }
  }
  out.check(violations == 0, std::to_string(strict) + " strict increases, " + std::to_string(unchanged) +
                                 " exact no-ops, " + std::to_string(violations) + " violations");
});

// ---------------------------------------------------------------- baselines

accept::Register c6(6, "baseline sanity", 60, [](accept::Outcome& out) {
  const data::synth::CourseConfig cc{.n_students = 200, .n_problems = 30, .seed = 11};
  const auto seqs = data::filter_first_submissions(data::synth::generate_course(cc).sequences);
  const std::vector<data::StudentSequence> tr(seqs.begin(), seqs.begin() + 150), te(seqs.begin() + 150, seqs.end());

  // Balanced test queries: equal numbers of correct and incorrect.
  std::vector<kt::Query> pos, neg;
  for (const auto& q : kt::queries_of(te)) (q.label ? pos : neg).push_back(q);
  const std::size_t n = std::min(pos.size(), neg.size());
  std::vector<kt::Query> balanced;
  for (std::size_t i = 0; i < n; ++i) {
    balanced.push_back(pos[i]);
    balanced.push_back(neg[i]);
  }
  std::vector<int> labels;
  for (const auto& q : balanced) labels.push_back(q.label);
  const auto rnd = kt::baseline_predict(kt::BaselineKind::random, tr, balanced, 1, true);
  const double rauc = eval::auc(rnd, labels);
  out.check(std::abs(rauc - 0.5) <= 0.05, "random AUC " + accept::fmt(rauc) + " = 0.5 +- 0.05 on " +
                                               std::to_string(balanced.size()) + " balanced queries");
  const auto half = kt::baseline_predict(kt::BaselineKind::random, tr, balanced, 1, false);
  out.check(eval::auc(half, labels) == 0.5, "constant 0.5 AUC exactly 0.5");

  // Brute-force per-problem majority with ties to incorrect.
  const auto all = kt::queries_of(te);
  std::vector<int> all_labels;
  for (const auto& q : all) all_labels.push_back(q.label);
  std::map<std::string, std::vector<int>> seen;
  for (const auto& s : tr)
    for (const auto& r : s.responses) seen[r.problem_id].push_back(r.correct ? 1 : 0);
  std::vector<double> oracle;
  for (const auto& q : all) {
    const auto& v = seen.at(q.problem_id);
    const long ones = std::count(v.begin(), v.end(), 1);
    oracle.push_back(2 * ones > static_cast<long>(v.size()) ? 1.0 : 0.0);
  }
  const auto maj = kt::baseline_predict(kt::BaselineKind::majority, tr, all);
  out.check(maj == oracle, "majority predictions equal the oracle on " + std::to_string(all.size()) + " queries");
  const double acc = eval::f1_and_accuracy(maj, all_labels).accuracy;
  const double oacc = o_f1_acc(oracle, all_labels, 0.5).second;
  out.check(acc == oacc, "majority accuracy " + accept::fmt(acc) + " equals oracle exactly");
});

// ---------------------------------------------------------------- CodeBLEU

accept::Register c11(11, "CodeBLEU", 60, [](accept::Outcome& out) {
  struct Case {
    std::string reference, renamed, shuffled;
  };
  const std::vector<Case> cases = {
      {"int sum = 0;\nfor (int i = 0; i < n; i++) {\n  sum += a[i];\n}\nreturn sum;",
       "int total = 0;\nfor (int k = 0; k < n; k++) {\n  total += a[k];\n}\nreturn total;",
       "return ; ] i [ a += sum { ) ++ i ; n < i ; 0 = i int ( for ; 0 = sum int }"},
      {"if (x > max) {\n  max = x;\n}\nreturn max;", "if (v > best) {\n  best = v;\n}\nreturn best;",
       "max ; return } ; x = max { ) max > x ( if"},
      {"String r = \"\";\nfor (char c : s.toCharArray()) {\n  r = c + r;\n}\nreturn r;",
       "String out = \"\";\nfor (char ch : s.toCharArray()) {\n  out = ch + out;\n}\nreturn out;",
       "r return ; } r + c = r { ) ( toCharArray . s : c char ( for ; \"\" = r String"},
  };
  bool identity = true, ordered = true;
  double worst_disjoint = 0;
  for (const auto& c : cases) {
    identity = identity && eval::codebleu(c.reference, c.reference, eval::Language::java) == 1.0;
    const double ren = eval::codebleu(c.renamed, c.reference, eval::Language::java);
    const double shu = eval::codebleu(c.shuffled, c.reference, eval::Language::java);
    ordered = ordered && ren > shu;
    worst_disjoint = std::max(worst_disjoint, eval::codebleu("@@ ## $$ ~~ ))) (((", c.reference, eval::Language::java));
    out.note("renamed " + accept::fmt(ren, 3) + " > shuffled " + accept::fmt(shu, 3));
  }
  out.check(identity, "identity scores exactly 1.0");
  out.check(worst_disjoint < 0.1, "unparseable disjoint candidate " + accept::fmt(worst_disjoint, 3) + " < 0.1");
  out.check(ordered, "renamed outscores shuffled on every reference");
});

}  // namespace
