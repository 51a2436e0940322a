#pragma once

#include <cstdint>
#include <vector>

#include "turtle/types.hpp"

namespace turtle {

enum class InitScheme { kGraph, kLhs, kKmeans };

struct InitConfig {
  InitScheme scheme = InitScheme::kGraph;
  int k = 25;          // kNN neighbours (graph) or initial cluster count (lhs/kmeans)
  int n_starts = 10;
  double omega0 = 0.7;
  uint64_t seed = 0;
};

// Lloyd's algorithm with k-means++ seeding; a run that empties a cluster is
// restarted. Returns assignments of the best-WCSS run.
std::vector<int> kmeans(const Mat& X, int k, uint64_t seed, int n_restarts = 10);

Model graph_init(const Mat& X, const InitConfig& cfg);
Model lhs_init(const Mat& X, const InitConfig& cfg);
Model kmeans_init(const Mat& X, const InitConfig& cfg);

// Dispatch on cfg.scheme.
Model initialize(const Mat& X, const InitConfig& cfg);

} // namespace turtle
