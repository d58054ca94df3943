// SPDX-License-Identifier: Apache-2.0
#include "kcgen/kc/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "kcgen/embed/embedding.hpp"
#include "kcgen/util/error.hpp"
#include "kcgen/util/rng.hpp"

namespace kcgen::kc {

std::vector<std::vector<int>> Dendrogram::cut(int k) const {
  if (k < 1 || k > n_points) {
    throw DomainError("cluster count " + std::to_string(k) + " outside [1, " + std::to_string(n_points) + "]");
  }
  std::vector<int> parent(static_cast<std::size_t>(n_points));
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int i = 0; i < n_points - k; ++i) {
    const Merge& m = merges[static_cast<std::size_t>(i)];
    const int a = find(m.left);
    const int b = find(m.right);
    parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::vector<int>> groups;
  std::vector<int> slot(static_cast<std::size_t>(n_points), -1);
  for (int i = 0; i < n_points; ++i) {
    const int r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<int>(groups.size());
      groups.emplace_back();
    }
    groups[slot[r]].push_back(i);
  }
  return groups;
}

Dendrogram average_linkage_cosine(const std::vector<std::vector<double>>& points) {
  const int n = static_cast<int>(points.size());
  Dendrogram out;
  out.n_points = n;
  if (n == 0) return out;

  // sums[a][b]: total pairwise distance between active clusters a and b.
  std::vector<std::vector<double>> sums(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      sums[i][j] = sums[j][i] = 1.0 - embed::cosine_similarity(points[i], points[j]);
    }
  }
  std::vector<int> size(n, 1);
  std::vector<bool> active(n, true);

  for (int step = 0; step + 1 < n; ++step) {
    int best_a = -1;
    int best_b = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < n; ++a) {
      if (!active[a]) continue;
      for (int b = a + 1; b < n; ++b) {
        if (!active[b]) continue;
        const double d = sums[a][b] / (static_cast<double>(size[a]) * size[b]);
        if (d < best - kTieTolerance) {
          best = d;
          best_a = a;
          best_b = b;
        }
      }
    }
    for (int c = 0; c < n; ++c) {
      if (!active[c] || c == best_a || c == best_b) continue;
      sums[best_a][c] = sums[c][best_a] = sums[best_a][c] + sums[best_b][c];
    }
    size[best_a] += size[best_b];
    active[best_b] = false;
    out.merges.push_back({best_a, best_b, best, size[best_a]});
  }
  return out;
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DomainError("dimension mismatch in squared_distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

namespace {

int nearest(const std::vector<double>& p, const std::vector<std::vector<double>>& centroids, double* dist) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (dist) *dist = best_d;
  return best;
}

KMeansResult lloyd(const std::vector<std::vector<double>>& points, int k, Rng& rng, int max_iterations) {
  const std::size_t n = points.size();
  const std::size_t dim = points.front().size();
  KMeansResult r;
  r.centroids.push_back(points[rng.below(n)]);
  std::vector<double> d2(n);
  while (static_cast<int>(r.centroids.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest(points[i], r.centroids, &d2[i]);
      total += d2[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        u -= d2[i];
        if (u < 0.0 && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);
    }
    r.centroids.push_back(points[pick]);
  }

  r.assignment.assign(n, -1);
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
      const int c = nearest(points[i], r.centroids, &dist[i]);
      if (c != r.assignment[i]) {
        r.assignment[i] = c;
        changed = true;
      }
    }
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<int> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const int c = r.assignment[i];
      ++counts[c];
      for (std::size_t j = 0; j < dim; ++j) sums[c][j] += points[i][j];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        const auto far = std::max_element(dist.begin(), dist.end()) - dist.begin();
        r.centroids[c] = points[far];
        dist[far] = 0.0;
        r.assignment[far] = c;
        changed = true;
        continue;
      }
      for (std::size_t j = 0; j < dim; ++j) r.centroids[c][j] = sums[c][j] / counts[c];
    }
    if (!changed) break;
  }
  r.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) r.inertia += squared_distance(points[i], r.centroids[r.assignment[i]]);
  return r;
}

}  // namespace

KMeansResult kmeans(const std::vector<std::vector<double>>& points, int k, std::uint64_t seed, int restarts,
                    int max_iterations) {
  if (points.empty()) throw DomainError("kmeans needs at least one point");
  if (k < 1 || k > static_cast<int>(points.size())) {
    throw DomainError("kmeans cluster count " + std::to_string(k) + " outside [1, " +
                      std::to_string(points.size()) + "]");
  }
  Rng rng(seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, restarts); ++r) {
    KMeansResult cand = lloyd(points, k, rng, max_iterations);
    if (cand.inertia < best.inertia - kTieTolerance) best = std::move(cand);
  }
  return best;
}

}  // namespace kcgen::kc
