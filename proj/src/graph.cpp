#include "turtle/graph.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "turtle/rng.hpp"

namespace turtle {

std::size_t SparseGraph::num_edges() const {
  std::size_t deg = 0;
  for (const auto& row : adj) deg += row.size();
  return deg / 2;
}

SparseGraph knn_graph(const Mat& X, int k) {
  const int n = static_cast<int>(X.rows());
  if (k < 1 || k >= n) throw std::invalid_argument("knn_graph: need 1 <= k < N");

  std::vector<std::vector<int>> nearest(n);
#pragma omp parallel for schedule(dynamic, 32)
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> cand;
    cand.reserve(n - 1);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      cand.emplace_back((X.row(i) - X.row(j)).squaredNorm(), j);
    }
    std::nth_element(cand.begin(), cand.begin() + (k - 1), cand.end());
    std::sort(cand.begin(), cand.begin() + k);
    nearest[i].resize(k);
    for (int t = 0; t < k; ++t) nearest[i][t] = cand[t].second;
  }

  SparseGraph g;
  g.n = n;
  g.adj.resize(n);
  std::vector<std::pair<int, int>> edges;
  edges.reserve(static_cast<std::size_t>(n) * k);
  for (int i = 0; i < n; ++i)
    for (int j : nearest[i]) edges.emplace_back(std::min(i, j), std::max(i, j));
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  for (auto [i, j] : edges) {
    g.adj[i].emplace_back(j, 1.0);
    g.adj[j].emplace_back(i, 1.0);
  }
  for (auto& row : g.adj) std::sort(row.begin(), row.end());
  return g;
}

namespace {

// Working graph for the aggregation phase: self weight holds the internal
// weight of a collapsed community (counted twice in the degree).
struct LevelGraph {
  std::vector<std::vector<std::pair<int, double>>> adj;
  std::vector<double> selfw;
  double m2 = 0.0; // total degree = 2 * total edge weight

  int size() const { return static_cast<int>(adj.size()); }
  double degree(int i) const {
    double d = 2.0 * selfw[i];
    for (auto [j, w] : adj[i]) d += w;
    return d;
  }
};

double level_modularity(const LevelGraph& g, const std::vector<int>& comm) {
  int nc = *std::max_element(comm.begin(), comm.end()) + 1;
  std::vector<double> sum_in(nc, 0.0), sum_tot(nc, 0.0);
  for (int i = 0; i < g.size(); ++i) {
    sum_tot[comm[i]] += g.degree(i);
    sum_in[comm[i]] += 2.0 * g.selfw[i];
    for (auto [j, w] : g.adj[i])
      if (comm[j] == comm[i]) sum_in[comm[i]] += w;
  }
  double q = 0.0;
  for (int c = 0; c < nc; ++c)
    q += sum_in[c] / g.m2 - (sum_tot[c] / g.m2) * (sum_tot[c] / g.m2);
  return q;
}

// One level of greedy local moves. Returns true if anything moved.
bool local_moves(const LevelGraph& g, std::vector<int>& comm, Rng& rng) {
  const int n = g.size();
  std::vector<double> sum_tot(n, 0.0);
  std::vector<double> deg(n);
  for (int i = 0; i < n; ++i) {
    deg[i] = g.degree(i);
    sum_tot[comm[i]] += deg[i];
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  bool moved_any = false;
  bool moved_pass = true;
  int pass = 0;
  while (moved_pass && pass++ < 64) {
    moved_pass = false;
    for (int idx = 0; idx < n; ++idx) {
      const int i = order[idx];
      const int old_c = comm[i];
      std::unordered_map<int, double> links; // weight from i into each community
      links[old_c] += 0.0;
      for (auto [j, w] : g.adj[i]) links[comm[j]] += w;

      sum_tot[old_c] -= deg[i];
      double best_gain = links[old_c] - sum_tot[old_c] * deg[i] / g.m2;
      int best_c = old_c;
      for (const auto& [c, kin] : links) {
        if (c == old_c) continue;
        double gain = kin - sum_tot[c] * deg[i] / g.m2;
        // strict improvement, ties to the smaller id: order-independent
        if (gain > best_gain || (gain == best_gain && best_c != old_c && c < best_c)) {
          best_gain = gain;
          best_c = c;
        }
      }
      sum_tot[best_c] += deg[i];
      if (best_c != old_c) {
        comm[i] = best_c;
        moved_pass = true;
        moved_any = true;
      }
    }
  }
  return moved_any;
}

void compact(std::vector<int>& labels) {
  std::unordered_map<int, int> remap;
  int next = 0;
  for (int& l : labels) {
    auto [it, inserted] = remap.emplace(l, next);
    if (inserted) ++next;
    l = it->second;
  }
}

LevelGraph aggregate(const LevelGraph& g, const std::vector<int>& comm, int nc) {
  LevelGraph out;
  out.adj.resize(nc);
  out.selfw.assign(nc, 0.0);
  out.m2 = g.m2;
  std::vector<std::unordered_map<int, double>> acc(nc);
  for (int i = 0; i < g.size(); ++i) {
    out.selfw[comm[i]] += g.selfw[i];
    for (auto [j, w] : g.adj[i]) {
      if (comm[j] == comm[i]) {
        if (j > i) out.selfw[comm[i]] += w;
      } else {
        acc[comm[i]][comm[j]] += w;
      }
    }
  }
  for (int c = 0; c < nc; ++c) {
    out.adj[c].assign(acc[c].begin(), acc[c].end());
    std::sort(out.adj[c].begin(), out.adj[c].end());
  }
  return out;
}

} // namespace

double modularity(const SparseGraph& g, const std::vector<int>& labels) {
  LevelGraph lg;
  lg.adj = g.adj;
  lg.selfw.assign(g.n, 0.0);
  for (int i = 0; i < g.n; ++i)
    for (auto [j, w] : g.adj[i]) lg.m2 += w;
  return level_modularity(lg, labels);
}

std::vector<int> louvain(const SparseGraph& g, uint64_t seed,
                         std::vector<double>* level_mod) {
  if (g.n == 0) throw std::invalid_argument("louvain: empty graph");
  LevelGraph lg;
  lg.adj = g.adj;
  lg.selfw.assign(g.n, 0.0);
  for (int i = 0; i < g.n; ++i)
    for (auto [j, w] : g.adj[i]) lg.m2 += w;
  if (lg.m2 == 0.0) { // edgeless: every node is its own community
    std::vector<int> singletons(g.n);
    std::iota(singletons.begin(), singletons.end(), 0);
    return singletons;
  }

  Rng rng(seed, 0x10u);
  std::vector<int> labels(g.n);
  std::iota(labels.begin(), labels.end(), 0);

  for (int level = 0; level < 64; ++level) {
    std::vector<int> comm(lg.size());
    std::iota(comm.begin(), comm.end(), 0);
    bool moved = local_moves(lg, comm, rng);
    compact(comm);
    for (int i = 0; i < g.n; ++i) labels[i] = comm[labels[i]];
    if (level_mod) level_mod->push_back(level_modularity(lg, comm));
    int nc = *std::max_element(comm.begin(), comm.end()) + 1;
    if (!moved || nc == lg.size()) break;
    lg = aggregate(lg, comm, nc);
  }
  compact(labels);
  return labels;
}

} // namespace turtle
