#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "turtle/types.hpp"

namespace turtle {

// Undirected weighted graph, no self loops; adjacency lists sorted by index.
struct SparseGraph {
  int n = 0;
  std::vector<std::vector<std::pair<int, double>>> adj;

  std::size_t num_edges() const;
};

// Euclidean kNN, symmetrized by union; distance ties broken by smaller index.
SparseGraph knn_graph(const Mat& X, int k);

double modularity(const SparseGraph& g, const std::vector<int>& labels);

// Two-phase greedy modularity optimization; node sweep order is
// seed-shuffled per level. Returns top-level community labels, compacted.
// level_modularity, when given, records Q after each level.
std::vector<int> louvain(const SparseGraph& g, uint64_t seed,
                         std::vector<double>* level_modularity = nullptr);

} // namespace turtle
