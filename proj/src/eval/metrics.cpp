// SPDX-License-Identifier: Apache-2.0
#include "kcgen/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "kcgen/util/error.hpp"

namespace kcgen::eval {

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DomainError("auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Midranks over tie groups.
  double rank_sum_pos = 0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      const int y = labels[order[k]];
      if (y != 0 && y != 1) throw DomainError("auc: labels must be 0 or 1");
      if (y == 1) {
        rank_sum_pos += mid;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw UndefinedMetricError("auc: labels contain a single class");
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1) / 2.0) / (np * nn);
}

Classification f1_and_accuracy(std::span<const double> scores, std::span<const int> labels, double threshold) {
  if (scores.size() != labels.size()) throw DomainError("f1_and_accuracy: length mismatch");
  if (scores.empty()) throw UndefinedMetricError("f1_and_accuracy: no examples");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    const bool y = labels[i] == 1;
    if (pred && y) ++tp;
    else if (pred && !y) ++fp;
    else if (!pred && y) ++fn;
    else ++tn;
  }
  Classification c;
  c.accuracy = static_cast<double>(tp + tn) / static_cast<double>(scores.size());
  const std::size_t denom = 2 * tp + fp + fn;
  c.f1 = denom == 0 || tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  return c;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0};
}

}  // namespace

MetricReport aggregate(std::span<const MetricReport> per_split) {
  if (per_split.empty()) throw DomainError("aggregate: no reports");
  std::vector<double> a, f, acc, cb;
  MetricReport out;
  for (const auto& r : per_split) {
    a.push_back(r.auc);
    f.push_back(r.f1);
    acc.push_back(r.accuracy);
    if (r.codebleu) cb.push_back(*r.codebleu);
    out.n_examples += r.n_examples;
  }
  const bool multi = per_split.size() > 1;
  auto [am, as] = mean_std(a);
  auto [fm, fs] = mean_std(f);
  auto [cm, cs] = mean_std(acc);
  out.auc = am;
  out.f1 = fm;
  out.accuracy = cm;
  if (multi) {
    out.auc_std = as;
    out.f1_std = fs;
    out.accuracy_std = cs;
  }
  if (cb.size() == per_split.size()) {
    auto [bm, bs] = mean_std(cb);
    out.codebleu = bm;
    if (multi) out.codebleu_std = bs;
  }
  return out;
}

PairedTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("paired_t_test: length mismatch");
  if (a.size() < 2) throw UndefinedMetricError("paired_t_test: need at least two pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  auto [m, s] = mean_std(d);
  PairedTest t;
  t.n = d.size();
  t.mean_difference = m;
  if (s == 0) {
    t.t_statistic = m == 0 ? 0.0 : std::copysign(INFINITY, m);
    t.p_value = m == 0 ? 1.0 : 0.0;
    return t;
  }
  t.t_statistic = m / (s / std::sqrt(static_cast<double>(d.size())));
  boost::math::students_t dist(static_cast<double>(d.size() - 1));
  t.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t.t_statistic)));
  return t;
}

}  // namespace kcgen::eval
