// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <set>

#include "kcgen/curves/curves.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/fs.hpp"
#include "kcgen/util/text.hpp"

namespace kcgen::curves {

std::vector<KcObservation> build_observations(const std::vector<data::StudentSequence>& sequences,
                                              const kc::QMatrix& q, const ErrorLabelSet& labels) {
  std::vector<KcObservation> out;
  for (const auto& seq : sequences) {
    std::map<std::string, std::pair<int, int>> counts;  // successes, failures
    for (const auto& s : seq.responses) {
      const auto cols = q.kcs_of(s.problem_id);
      if (cols.empty()) continue;
      const auto it = labels.labels.find({seq.student_id, s.order_index});
      if (it == labels.labels.end()) continue;
      for (int c : cols) {
        const std::string& kc = q.kcs[static_cast<std::size_t>(c)];
        const auto e = it->second.find(kc);
        if (e == it->second.end()) {
          throw IntegrityError("labels for " + seq.student_id + " on " + s.problem_id + " lack KC \"" + kc + "\"");
        }
        auto& [succ, fail] = counts[kc];
        out.push_back({seq.student_id, kc, succ + fail + 1, e->second, succ, fail, s.problem_id, s.order_index});
        (e->second ? fail : succ) += 1;
      }
    }
  }
  return out;
}

LearningCurve empirical_curve(const std::vector<KcObservation>& observations, const std::string& kc,
                              int min_students) {
  std::map<int, std::pair<int, int>> by_attempt;  // errors, n
  for (const auto& o : observations) {
    if (o.kc != kc) continue;
    auto& [err, n] = by_attempt[o.attempt_index];
    err += o.error;
    n += 1;
  }
  LearningCurve curve{kc, {}};
  for (const auto& [t, en] : by_attempt) {
    if (en.second < min_students) continue;
    curve.points.push_back({t, static_cast<double>(en.first) / en.second, en.second, std::nullopt});
  }
  return curve;
}

MasteryTable mastery_table(kt::KtModel& model, const std::vector<data::StudentSequence>& sequences) {
  MasteryTable table;
  for (const auto& seq : sequences) {
    const auto preds = model.predict_sequence(seq, false);
    for (std::size_t i = 0; i < preds.size(); ++i) {
      table[{seq.student_id, seq.responses[i].order_index}] = preds[i].mastery;
    }
  }
  return table;
}

void attach_predicted(LearningCurve& curve, const std::vector<KcObservation>& observations,
                      const MasteryTable& mastery, const std::vector<std::string>& kc_columns) {
  std::size_t col = kc_columns.size();
  for (std::size_t i = 0; i < kc_columns.size(); ++i) {
    if (kc_columns[i] == curve.kc) col = i;
  }
  if (col == kc_columns.size()) throw DomainError("KC \"" + curve.kc + "\" is not a mastery column");
  std::map<int, std::pair<double, int>> sums;
  for (const auto& o : observations) {
    if (o.kc != curve.kc) continue;
    const auto it = mastery.find({o.student_id, o.order_index});
    if (it == mastery.end()) throw IntegrityError("no mastery for " + o.student_id + " at " + o.problem_id);
    auto& [s, n] = sums[o.attempt_index];
    s += 1.0 - it->second.at(col);
    n += 1;
  }
  for (auto& p : curve.points) {
    const auto it = sums.find(p.attempt);
    if (it != sums.end()) p.predicted = it->second.first / it->second.second;
  }
}

std::optional<double> weighted_curve_r2(const LearningCurve& curve) {
  double w = 0, mx = 0, my = 0;
  int used = 0;
  for (const auto& p : curve.points) {
    if (!p.predicted) continue;
    w += p.n_students;
    mx += p.n_students * p.error_rate;
    my += p.n_students * *p.predicted;
    ++used;
  }
  if (used < 2) return std::nullopt;
  mx /= w;
  my /= w;
  double sxy = 0, sxx = 0, syy = 0;
  for (const auto& p : curve.points) {
    if (!p.predicted) continue;
    const double dx = p.error_rate - mx, dy = *p.predicted - my;
    sxy += p.n_students * dx * dy;
    sxx += p.n_students * dx * dx;
    syy += p.n_students * dy * dy;
  }
  if (sxx <= 1e-300 || syy <= 1e-300) return std::nullopt;
  return sxy * sxy / (sxx * syy);
}

std::vector<std::string> kcs_with_observations(const std::vector<KcObservation>& observations) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& o : observations) {
    if (seen.insert(o.kc).second) out.push_back(o.kc);
  }
  return out;
}

namespace {
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}
}  // namespace

void write_curve(const std::filesystem::path& path, const LearningCurve& curve) {
  std::string out = "attempt\tempirical\tn\tpredicted\n";
  for (const auto& p : curve.points) {
    out += std::to_string(p.attempt) + "\t" + num(p.error_rate) + "\t" + std::to_string(p.n_students) + "\t" +
           (p.predicted ? num(*p.predicted) : "") + "\n";
  }
  atomic_write(path, out);
}

void write_pfa_summary(const std::filesystem::path& path, const std::vector<PfaFit>& fits) {
  std::string out = "kc\tbeta\tgamma\trho\tr_squared\tn\tconverged\n";
  for (const auto& f : fits) {
    out += text::escape_field(f.kc) + "\t" + num(f.beta) + "\t" + num(f.gamma) + "\t" + num(f.rho) + "\t" +
           (f.r_squared ? num(*f.r_squared) : "") + "\t" + std::to_string(f.n_observations) + "\t" +
           (f.converged ? "1" : "0") + "\n";
  }
  atomic_write(path, out);
}

}  // namespace kcgen::curves
