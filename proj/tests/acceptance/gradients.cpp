// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "harness.hpp"
#include "kcgen/core/synthetic.hpp"
#include "kcgen/kt/train.hpp"
#include "kcgen/util/rng.hpp"

using namespace kcgen;

namespace {

kc::QMatrix toy_q(const data::synth::ToyDataset& toy) {
  kc::QMatrix q;
  std::vector<int> column(toy.kc_names.size(), -1);
  for (const auto& ks : toy.problem_kcs)
    for (int k : ks) column[static_cast<std::size_t>(k)] = 0;
  for (std::size_t k = 0; k < toy.kc_names.size(); ++k) {
    if (column[k] < 0) continue;
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

accept::Register c3(3, "gradient flow", 300, [](accept::Outcome& out) {
  const auto toy = data::synth::generate_toy(3, 4);
  kt::ModelConfig mc;
  mc.backbone = {32, 2, 2, 64, 160, 0.2};
  mc.state_dim = 8;
  mc.vocab_size = 400;
  mc.max_new_tokens = 40;
  kt::KtModel model(toy.dataset, toy_q(toy), mc, std::make_shared<embed::HashingEmbedder>(32));
  std::vector<const data::StudentSequence*> batch;
  for (const auto& s : toy.dataset.sequences) batch.push_back(&s);
  const double lambda = 0.5;

  // Analytic gradients from both the single-graph objective and the
  // per-submission training path.
  for (auto* p : model.parameters()) p->zero_grad();
  {
    kt::Tape tape;
    kt::Binder b(tape);
    tape.backward(kt::batch_loss(model, b, batch, lambda).total);
  }
  std::vector<kt::Matrix> single;
  for (auto* p : model.parameters()) single.push_back(p->grad);
  for (auto* p : model.parameters()) p->zero_grad();
  kt::run_batch(model, batch, lambda, true);

  auto objective = [&] { return kt::run_batch(model, batch, lambda, false).loss.total; };
  struct Group {
    std::string name;
    std::vector<kt::Parameter*> params;
  };
  const std::vector<Group> groups = {{"W_m", {&model.mastery_head().w}},
                                     {"b_m", {&model.mastery_head().b}},
                                     {"W_p", {&model.correctness_head().w}},
                                     {"tracker", model.tracker_parameters()}};
  Rng rng(303);
  const double h = 1e-5;
  for (const auto& g : groups) {
    double worst = 0, worst_routes = 0;
    int compared = 0;
    for (auto* p : g.params) {
      if (p->grad.cwiseAbs().maxCoeff() == 0.0) continue;
      for (int trial = 0; trial < 6; ++trial) {
        Eigen::Index i = 0, j = 0;
        if (trial == 0) {
          p->grad.cwiseAbs().maxCoeff(&i, &j);
        } else {
          i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(p->value.rows())));
          j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(p->value.cols())));
        }
        const double v0 = p->value(i, j);
        p->value(i, j) = v0 + h;
        const double up = objective();
        p->value(i, j) = v0 - h;
        const double down = objective();
        p->value(i, j) = v0;
        const double fd = (up - down) / (2 * h);
        const double an = p->grad(i, j);
        worst = std::max(worst, std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-4}));
        ++compared;
      }
    }
    const auto all = model.parameters();
    for (std::size_t k = 0; k < all.size(); ++k) {
      if (std::find(g.params.begin(), g.params.end(), all[k]) == g.params.end()) continue;
      const double scale = std::max(1e-12, single[k].cwiseAbs().maxCoeff());
      worst_routes = std::max(worst_routes, (all[k]->grad - single[k]).cwiseAbs().maxCoeff() / scale);
    }
    out.check(compared >= 4 && worst <= 1e-3, g.name + ": " + std::to_string(compared) +
                                                  " entries vs central differences, rel err " +
                                                  accept::fmt(worst, 2) + " <= 1e-3");
    out.check(worst_routes <= 1e-9, g.name + ": lean and single-graph gradients agree (" +
                                        accept::fmt(worst_routes, 2) + ")");
  }
});

}  // namespace
