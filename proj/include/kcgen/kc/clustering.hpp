// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

namespace kcgen::kc {

/// One agglomeration step. Clusters are named by their lowest member index,
/// so left < right always holds.
struct Merge {
  int left = 0;
  int right = 0;
  double distance = 0.0;
  int size = 0;

  friend bool operator==(const Merge&, const Merge&) = default;
};

/// Distances closer than this are treated as equal when choosing a merge.
inline constexpr double kTieTolerance = 1e-12;

struct Dendrogram {
  int n_points = 0;
  std::vector<Merge> merges;

  /// Partition obtained by applying the first n_points - k merges. Clusters
  /// are ordered by lowest member, members ascending. Throws DomainError
  /// unless 1 <= k <= n_points.
  std::vector<std::vector<int>> cut(int k) const;
};

/// Average-linkage agglomerative clustering under cosine distance
/// (1 - cosine similarity). Among equally close pairs the one with the
/// lexicographically smallest (left, right) is merged first.
Dendrogram average_linkage_cosine(const std::vector<std::vector<double>>& points);

struct KMeansResult {
  std::vector<int> assignment;
  std::vector<std::vector<double>> centroids;
  double inertia = 0.0;
};

/// Lloyd iterations from k-means++ seeding; the restart with the lowest
/// within-cluster sum of squares wins. Empty clusters are reseeded with the
/// point farthest from its centroid.
KMeansResult kmeans(const std::vector<std::vector<double>>& points, int k, std::uint64_t seed,
                    int restarts = 8, int max_iterations = 100);

double squared_distance(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace kcgen::kc
