// SPDX-License-Identifier: Apache-2.0
#include <numeric>

#include "harness.hpp"
#include "kcgen/core/synthetic.hpp"
#include "kcgen/eval/codebleu.hpp"
#include "kcgen/eval/metrics.hpp"
#include "kcgen/kt/train.hpp"

using namespace kcgen;

namespace {

kc::QMatrix toy_q(const data::synth::ToyDataset& toy) {
  kc::QMatrix q;
  std::vector<int> used(toy.kc_names.size(), 0);
  for (const auto& ks : toy.problem_kcs)
    for (int k : ks) used[static_cast<std::size_t>(k)] = 1;
  std::vector<int> column(toy.kc_names.size(), -1);
  for (std::size_t k = 0; k < toy.kc_names.size(); ++k) {
    if (!used[k]) continue;
    column[k] = static_cast<int>(q.kcs.size());
    q.kcs.push_back(toy.kc_names[k]);
  }
  for (std::size_t p = 0; p < toy.dataset.problems.size(); ++p) {
    q.problems.push_back(toy.dataset.problems[p].problem_id);
    std::vector<std::uint8_t> row(q.kcs.size(), 0);
    for (int k : toy.problem_kcs[p]) row[static_cast<std::size_t>(column[static_cast<std::size_t>(k)])] = 1;
    q.incidence.push_back(row);
  }
  return q;
}

struct Scores {
  double auc = 0, y_auc = 0, codebleu = 0;
};

Scores score(kt::KtModel& model, const std::vector<data::StudentSequence>& seqs) {
  const auto preds = kt::predict_all(model, seqs, true);
  std::vector<double> a, y;
  std::vector<int> labels;
  double cb = 0;
  for (const auto& p : preds) {
    a.push_back(p.a_hat);
    y.push_back(p.y_hat);
    labels.push_back(p.label);
    cb += eval::codebleu(p.generated_code, p.true_code, eval::Language::java);
  }
  return {eval::auc(a, labels), eval::auc(y, labels), cb / static_cast<double>(preds.size())};
}

struct Run {
  Scores scores;
  int epochs = 0;
  bool converged = false;
};

Run overfit(const data::synth::ToyDataset& toy, double lambda) {
  kt::ModelConfig mc;
  mc.backbone = {32, 1, 2, 64, 160, 0.02};
  mc.state_dim = 32;
  mc.vocab_size = 400;
  mc.max_new_tokens = 40;
  kt::KtModel model(toy.dataset, toy_q(toy), mc, std::make_shared<embed::HashingEmbedder>(64));
  kt::TrainingConfig tc;
  tc.lambda = lambda;
  tc.batch_size = 4;
  tc.epochs = 200;
  tc.lr_backbone = 3e-3;
  tc.lr_tracker = 3e-3;
  tc.lr_heads = 1e-2;
  tc.weight_decay = 0.0;
  Run run;
  kt::TrainOptions opts;
  opts.should_stop = [&](const kt::EpochLog& log) {
    run.epochs = log.epoch + 1;
    if ((log.epoch + 1) % 10 != 0) return false;
    run.scores = score(model, toy.dataset.sequences);
    run.converged = run.scores.auc >= 0.95 && run.scores.codebleu >= 0.9;
    return run.converged;
  };
  kt::train(model, toy.dataset.sequences, {}, tc, opts);
  if (run.epochs % 10 != 0) run.scores = score(model, toy.dataset.sequences);
  return run;
}

accept::Register reg(5, "tiny overfit", 600, [](accept::Outcome& out) {
  const auto toy = data::synth::generate_toy(20, 10);
  for (const double lambda : {1.0, 0.5}) {
    const Run r = overfit(toy, lambda);
    const std::string tag = "lambda " + accept::fmt(lambda, 2) + ": ";
    out.check(r.scores.auc >= 0.95, tag + "train AUC " + accept::fmt(r.scores.auc) + " >= 0.95");
    out.check(r.scores.codebleu >= 0.9, tag + "train CodeBLEU " + accept::fmt(r.scores.codebleu) + " >= 0.9");
    out.note(tag + "epochs " + std::to_string(r.epochs));
    if (lambda == 0.5) out.check(r.scores.y_auc >= 0.85, tag + "yhat AUC " + accept::fmt(r.scores.y_auc) + " >= 0.85");
  }
});

}  // namespace
