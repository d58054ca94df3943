// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "harness.hpp"
#include "kcgen/curves/curves.hpp"

using namespace kcgen;

namespace {

accept::Register c10(10, "PFA recovery and power-law trend", 120, [](accept::Outcome& out) {
  struct Truth {
    double beta, gamma, rho;
  };
  const std::vector<Truth> truths = {{0.0, 0.3, -0.1}, {-0.5, 0.25, 0.05}, {0.4, 0.1, -0.2}};
  std::uint64_t seed = 100;
  for (const auto& t : truths) {
    const auto obs = curves::simulate_pfa(t.beta, t.gamma, t.rho, 2000, 10, seed++);
    const auto fit = curves::fit_pfa(obs, "kc");
    const double err = std::max({std::abs(fit.beta - t.beta), std::abs(fit.gamma - t.gamma), std::abs(fit.rho - t.rho)});
    out.check(fit.converged && fit.n_observations == 2000 && err <= 0.1,
              "(" + accept::fmt(t.beta, 2) + ", " + accept::fmt(t.gamma, 2) + ", " + accept::fmt(t.rho, 2) +
                  ") recovered within " + accept::fmt(err, 2) + " <= 0.1");
  }

  // One cohort of 200 students practising three KCs, error rate scale * t^-0.5.
  std::vector<curves::PfaFit> fits;
  const std::vector<double> scales = {0.8, 0.6, 0.45};
  for (std::size_t k = 0; k < scales.size(); ++k) {
    auto obs = curves::simulate_power_law(200, 10, scales[k], 0.5, 500 + k);
    const std::string kc = "kc" + std::to_string(k);
    for (auto& o : obs) o.kc = kc;
    const auto curve = curves::empirical_curve(obs, kc, 5);
    std::vector<double> rates;
    for (const auto& p : curve.points) rates.push_back(p.error_rate);
    const auto mk = curves::mann_kendall(rates);
    out.check(mk.trend == curves::Trend::decreasing,
              kc + " decreasing trend detected (p " + accept::fmt(mk.p_value, 2) + ")");
    fits.push_back(curves::fit_pfa(obs, kc));
  }
  const double r2 = curves::weighted_r2(fits);
  out.check(r2 >= 0.5, "weighted R2 " + accept::fmt(r2, 3) + " >= 0.5");
});

}  // namespace
