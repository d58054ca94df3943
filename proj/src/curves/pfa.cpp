// SPDX-License-Identifier: Apache-2.0
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "kcgen/curves/curves.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/rng.hpp"

namespace kcgen::curves {

namespace {

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

double PfaFit::p_correct(int successes, int failures) const {
  return sigmoid(beta + gamma * successes + rho * failures);
}

PfaFit fit_pfa(const std::vector<KcObservation>& observations, const std::string& kc, const PfaConfig& config) {
  std::vector<const KcObservation*> obs;
  for (const auto& o : observations) {
    if (o.kc == kc) obs.push_back(&o);
  }
  const int n = static_cast<int>(obs.size());
  if (n < config.min_observations) {
    throw DomainError("KC \"" + kc + "\" has " + std::to_string(n) + " observations; PFA needs " +
                      std::to_string(config.min_observations));
  }
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = obs[static_cast<std::size_t>(i)]->prior_successes;
    x(i, 2) = obs[static_cast<std::size_t>(i)]->prior_failures;
    y(i) = 1.0 - obs[static_cast<std::size_t>(i)]->error;
  }
  const auto objective = [&](const Eigen::Vector3d& th) {
    const Eigen::VectorXd z = x * th;
    double v = 0.5 * config.l2 * th.squaredNorm();
    for (int i = 0; i < n; ++i) v += softplus(z(i)) - y(i) * z(i);
    return v;
  };

  Eigen::Vector3d theta = Eigen::Vector3d::Zero();
  double f = objective(theta);
  bool converged = false;
  for (int it = 0; it < config.max_iterations && !converged; ++it) {
    const Eigen::VectorXd z = x * theta;
    Eigen::VectorXd p(n), w(n);
    for (int i = 0; i < n; ++i) {
      p(i) = sigmoid(z(i));
      w(i) = p(i) * (1.0 - p(i));
    }
    const Eigen::Vector3d grad = x.transpose() * (p - y) + config.l2 * theta;
    const Eigen::Matrix3d hess = x.transpose() * w.asDiagonal() * x + config.l2 * Eigen::Matrix3d::Identity();
    const Eigen::Vector3d step = hess.ldlt().solve(grad);
    double t = 1.0;
    Eigen::Vector3d next = theta - step;
    double fn = objective(next);
    while (fn > f && t > 1e-10) {
      t *= 0.5;
      next = theta - t * step;
      fn = objective(next);
    }
    const double moved = (next - theta).cwiseAbs().maxCoeff();
    theta = next;
    f = fn;
    if (!std::isfinite(f)) break;
    converged = moved < config.tolerance * (1.0 + theta.cwiseAbs().maxCoeff()) ||
                grad.cwiseAbs().maxCoeff() < config.tolerance;
  }

  PfaFit fit;
  fit.kc = kc;
  fit.beta = theta(0);
  fit.gamma = theta(1);
  fit.rho = theta(2);
  fit.n_observations = n;
  fit.converged = converged && theta.allFinite();

  LearningCurve curve = empirical_curve(observations, kc, config.min_students);
  std::map<int, std::pair<double, int>> implied;
  for (const auto* o : obs) {
    auto& [s, c] = implied[o->attempt_index];
    s += 1.0 - fit.p_correct(o->prior_successes, o->prior_failures);
    c += 1;
  }
  for (auto& pt : curve.points) pt.predicted = implied[pt.attempt].first / implied[pt.attempt].second;
  fit.r_squared = weighted_curve_r2(curve);
  return fit;
}

double weighted_r2(const std::vector<PfaFit>& fits) {
  double num = 0, den = 0;
  for (const auto& f : fits) {
    if (!f.converged || !f.r_squared) continue;
    num += f.n_observations * *f.r_squared;
    den += f.n_observations;
  }
  if (den == 0) throw DomainError("weighted R² needs at least one converged fit with a defined R²");
  return num / den;
}

std::string to_string(Trend t) {
  switch (t) {
    case Trend::decreasing:
      return "decreasing";
    case Trend::increasing:
      return "increasing";
    case Trend::none:
      break;
  }
  return "none";
}

TrendTest mann_kendall(const std::vector<double>& values, double alpha) {
  TrendTest r;
  const std::size_t n = values.size();
  if (n < 3) return r;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      r.s += (values[j] > values[i]) - (values[j] < values[i]);
    }
  }
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  double ties = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    ties += t * (t - 1) * (2 * t + 5);
    i = j;
  }
  const double dn = static_cast<double>(n);
  r.variance = (dn * (dn - 1) * (2 * dn + 5) - ties) / 18.0;
  if (r.variance <= 0) return r;
  if (r.s > 0) r.z = (r.s - 1) / std::sqrt(r.variance);
  if (r.s < 0) r.z = (r.s + 1) / std::sqrt(r.variance);
  r.p_value = std::erfc(std::abs(r.z) / std::sqrt(2.0));
  if (r.p_value < alpha) r.trend = r.s < 0 ? Trend::decreasing : Trend::increasing;
  return r;
}

std::vector<KcObservation> simulate_pfa(double beta, double gamma, double rho, int n_observations,
                                        int attempts_per_student, std::uint64_t seed) {
  Rng rng(seed, 0x9fa);
  std::vector<KcObservation> out;
  for (int s = 0; static_cast<int>(out.size()) < n_observations; ++s) {
    int succ = 0, fail = 0;
    for (int t = 0; t < attempts_per_student && static_cast<int>(out.size()) < n_observations; ++t) {
      const bool correct = rng.bernoulli(sigmoid(beta + gamma * succ + rho * fail));
      out.push_back({"s" + std::to_string(s), "kc", succ + fail + 1, correct ? 0 : 1, succ, fail, "p" + std::to_string(t),
                     t});
      (correct ? succ : fail) += 1;
    }
  }
  return out;
}

std::vector<KcObservation> simulate_power_law(int n_students, int n_attempts, double scale, double exponent,
                                              std::uint64_t seed) {
  Rng rng(seed, 0x90e);
  std::vector<KcObservation> out;
  for (int s = 0; s < n_students; ++s) {
    int succ = 0, fail = 0;
    for (int t = 1; t <= n_attempts; ++t) {
      const double p_error = std::min(1.0, scale * std::pow(static_cast<double>(t), -exponent));
      const int error = rng.bernoulli(p_error) ? 1 : 0;
      out.push_back({"s" + std::to_string(s), "kc", t, error, succ, fail, "p" + std::to_string(t), t});
      (error ? fail : succ) += 1;
    }
  }
  return out;
}

}  // namespace kcgen::curves
