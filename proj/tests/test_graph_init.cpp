#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "test_util.hpp"
#include "turtle/data.hpp"
#include "turtle/graph.hpp"
#include "turtle/init.hpp"
#include "turtle/objective.hpp"
#include "turtle/rng.hpp"

using namespace turtle;

namespace {

Mat blobs3(Rng& rng, int per_blob, double sep = 12.0, double sd = 0.5) {
  Mat X(3 * per_blob, 2);
  double cx[3] = {0.0, sep, sep / 2};
  double cy[3] = {0.0, 0.0, sep};
  for (int b = 0; b < 3; ++b)
    for (int i = 0; i < per_blob; ++i) {
      X(b * per_blob + i, 0) = cx[b] + sd * rng.normal();
      X(b * per_blob + i, 1) = cy[b] + sd * rng.normal();
    }
  return X;
}

bool has_edge(const SparseGraph& g, int i, int j) {
  for (auto [n, w] : g.adj[i])
    if (n == j) return true;
  return false;
}

} // namespace

TEST_CASE("knn on three collinear points") {
  Mat X(3, 1);
  X << 0.0, 1.0, 2.0;
  SparseGraph g = knn_graph(X, 1);
  CHECK(has_edge(g, 0, 1));
  CHECK(has_edge(g, 1, 0));
  CHECK(has_edge(g, 1, 2));
  CHECK_FALSE(has_edge(g, 0, 2));
}

TEST_CASE("knn with duplicate points excludes self") {
  Mat X(4, 2);
  X << 0, 0, 0, 0, 0, 0, 5, 5;
  SparseGraph g = knn_graph(X, 2);
  for (int i = 0; i < 4; ++i) {
    CHECK_FALSE(has_edge(g, i, i));
    CHECK(g.adj[i].size() >= 2);
  }
  // ties among duplicates break toward the smaller index
  CHECK(has_edge(g, 3, 0));
  CHECK(has_edge(g, 3, 1));
}

TEST_CASE("knn equals the brute-force neighbour computation") {
  Rng rng(40);
  Mat X = test::random_data(rng, 200, 3);
  const int k = 15;
  SparseGraph g = knn_graph(X, k);

  // independent O(N^2) full-sort oracle with the same symmetrization
  std::set<std::pair<int, int>> expected;
  for (int i = 0; i < 200; ++i) {
    std::vector<std::pair<double, int>> d;
    for (int j = 0; j < 200; ++j)
      if (j != i) d.emplace_back((X.row(i) - X.row(j)).squaredNorm(), j);
    std::sort(d.begin(), d.end());
    for (int t = 0; t < k; ++t)
      expected.insert({std::min(i, d[t].second), std::max(i, d[t].second)});
  }
  CHECK(g.num_edges() == expected.size());
  for (auto [i, j] : expected) CHECK(has_edge(g, i, j));
  for (int i = 0; i < 200; ++i) CHECK(g.adj[i].size() >= k);

  CHECK_THROWS_AS(knn_graph(X, 200), std::invalid_argument);
}

TEST_CASE("louvain separates disconnected cliques") {
  SparseGraph g;
  g.n = 10;
  g.adj.resize(10);
  auto add = [&](int i, int j) {
    g.adj[i].emplace_back(j, 1.0);
    g.adj[j].emplace_back(i, 1.0);
  };
  for (int base : {0, 5})
    for (int i = 0; i < 5; ++i)
      for (int j = i + 1; j < 5; ++j) add(base + i, base + j);

  std::vector<int> labels = louvain(g, 7);
  std::set<int> first(labels.begin(), labels.begin() + 5);
  std::set<int> second(labels.begin() + 5, labels.end());
  CHECK(first.size() == 1);
  CHECK(second.size() == 1);
  CHECK(*first.begin() != *second.begin());
}

TEST_CASE("louvain on a complete graph yields one community") {
  SparseGraph g;
  g.n = 6;
  g.adj.resize(6);
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j) {
      g.adj[i].emplace_back(j, 1.0);
      g.adj[j].emplace_back(i, 1.0);
    }
  std::vector<int> labels = louvain(g, 3);
  CHECK(*std::max_element(labels.begin(), labels.end()) == 0);
}

TEST_CASE("louvain modularity is non-decreasing across levels") {
  Rng rng(41);
  SparseGraph g;
  g.n = 30;
  g.adj.resize(30);
  std::set<std::pair<int, int>> edges;
  for (int i = 0; i < 30; ++i)
    for (int j = i + 1; j < 30; ++j)
      if (rng.uniform01() < 0.15) edges.insert({i, j});
  for (auto [i, j] : edges) {
    g.adj[i].emplace_back(j, 1.0);
    g.adj[j].emplace_back(i, 1.0);
  }

  std::vector<double> level_q;
  std::vector<int> labels = louvain(g, 5, &level_q);
  for (std::size_t l = 1; l < level_q.size(); ++l)
    CHECK(level_q[l] >= level_q[l - 1] - 1e-9);

  std::vector<int> singletons(30);
  std::iota(singletons.begin(), singletons.end(), 0);
  CHECK(modularity(g, labels) >= modularity(g, singletons) - 1e-9);
  CHECK(modularity(g, labels) == doctest::Approx(level_q.back()).epsilon(1e-9));
  CHECK_THROWS_AS(louvain(SparseGraph{}, 0), std::invalid_argument);
}

TEST_CASE("graph_init recovers well-separated blobs") {
  Rng rng(42);
  Mat X = blobs3(rng, 60);
  InitConfig cfg;
  cfg.k = 15;
  cfg.seed = 9;
  Model m = graph_init(X, cfg);
  CHECK(m.order() == 3);
  for (const auto& c : m.clusters) {
    double best = 1e18;
    for (int b = 0; b < 3; ++b) {
      Vec center(2);
      center << (b == 0 ? 0.0 : b == 1 ? 12.0 : 6.0), (b == 2 ? 12.0 : 0.0);
      best = std::min(best, (c.gaussian.mu - center).norm());
    }
    CHECK(best < 0.5);
  }
}

TEST_CASE("initial models satisfy the parameter invariants") {
  Rng rng(43);
  Mat X = blobs3(rng, 40);
  for (InitScheme scheme : {InitScheme::kGraph, InitScheme::kLhs, InitScheme::kKmeans}) {
    InitConfig cfg;
    cfg.scheme = scheme;
    cfg.k = scheme == InitScheme::kGraph ? 10 : 5;
    cfg.n_starts = 4;
    cfg.seed = 11;
    Model m = initialize(X, cfg);
    for (const auto& c : m.clusters) {
      for (int r = 0; r < m.dim; ++r) {
        CHECK(c.gaussian.L(r, r) >= kDiagFloor);
        for (int col = r + 1; col < m.dim; ++col) CHECK(c.gaussian.L(r, col) == 0.0);
      }
      for (int d = 0; d < m.dim; ++d) {
        CHECK(c.uniform.b[d] - c.uniform.a[d] > 0.0);
        CHECK(c.gaussian.mu[d] > c.uniform.a[d]);
        CHECK(c.gaussian.mu[d] < c.uniform.b[d]);
      }
      CHECK(c.omega == 0.7);
    }
    CHECK(m.proportions()[0] == doctest::Approx(1.0 / m.order()).epsilon(1e-12));
  }
}

TEST_CASE("single-start graph init uses the pure community covariance") {
  Rng rng(44);
  Mat X = blobs3(rng, 35);
  InitConfig cfg;
  cfg.k = 20; // blob-sized neighbourhoods: one community per blob
  cfg.n_starts = 1; // alpha = 1
  cfg.seed = 21;
  Model m = graph_init(X, cfg);
  REQUIRE(m.order() == 3);
  // each cluster's covariance equals the sample covariance of its MAP members
  Mat P = posterior(X, m);
  for (int k = 0; k < 3; ++k) {
    std::vector<int> members;
    for (int i = 0; i < X.rows(); ++i) {
      int arg = 0;
      P.row(i).maxCoeff(&arg);
      if (arg == k) members.push_back(i);
    }
    REQUIRE(members.size() >= 2);
    Vec mu = Vec::Zero(2);
    for (int i : members) mu += X.row(i).transpose();
    mu /= members.size();
    Mat cov = Mat::Zero(2, 2);
    for (int i : members) {
      Vec d = X.row(i).transpose() - mu;
      cov += d * d.transpose();
    }
    cov /= members.size() - 1;
    Mat model_cov = m.clusters[k].gaussian.covariance();
    CHECK((model_cov - cov).lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_CASE("lhs nodes are stratified per axis") {
  Rng rng(45);
  Mat X = test::random_data(rng, 80, 2, 2.0);
  InitConfig cfg;
  cfg.scheme = InitScheme::kLhs;
  cfg.k = 4;
  cfg.n_starts = 1;
  cfg.seed = 31;
  Model m = lhs_init(X, cfg);
  REQUIRE(m.order() == 4);
  for (int d = 0; d < 2; ++d) {
    double lo = X.col(d).minCoeff(), hi = X.col(d).maxCoeff();
    std::set<int> strata;
    for (const auto& c : m.clusters) {
      double t = (c.gaussian.mu[d] - lo) / (hi - lo);
      strata.insert(std::min(3, static_cast<int>(t * 4)));
    }
    CHECK(strata.size() == 4);
  }
}

TEST_CASE("kmeans init on blobs") {
  Rng rng(46);
  Mat X = blobs3(rng, 50);
  InitConfig cfg;
  cfg.scheme = InitScheme::kKmeans;
  cfg.k = 3;
  cfg.n_starts = 2;
  cfg.seed = 41;
  Model m = kmeans_init(X, cfg);
  REQUIRE(m.order() == 3);
  for (const auto& c : m.clusters) {
    double best = 1e18;
    for (int b = 0; b < 3; ++b) {
      Vec center(2);
      center << (b == 0 ? 0.0 : b == 1 ? 12.0 : 6.0), (b == 2 ? 12.0 : 0.0);
      best = std::min(best, (c.gaussian.mu - center).norm());
    }
    CHECK(best < 0.5);
  }

  cfg.k = 1;
  Model single = kmeans_init(X, cfg);
  CHECK(single.order() == 1);
  CHECK((single.clusters[0].gaussian.mu - X.colwise().mean().transpose()).norm() < 1e-10);
}

TEST_CASE("initialization is deterministic per seed") {
  Rng rng(47);
  Mat X = blobs3(rng, 40);
  for (InitScheme scheme : {InitScheme::kGraph, InitScheme::kLhs, InitScheme::kKmeans}) {
    InitConfig cfg;
    cfg.scheme = scheme;
    cfg.k = scheme == InitScheme::kGraph ? 12 : 6;
    cfg.n_starts = 3;
    cfg.seed = 77;
    Model a = initialize(X, cfg);
    Model b = initialize(X, cfg);
    REQUIRE(a.order() == b.order());
    CHECK((pack(a) - pack(b)).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("gu6 replica: graph initialization typically lands in [9,15] clusters") {
  int in_range = 0;
  const int trials = 6;
  for (int t = 0; t < trials; ++t) {
    LabeledDataset ds = gen_gu6(500 + t);
    Standardizer st = fit_standardizer(ds.X);
    Mat X = st.apply(ds.X);
    SparseGraph g = knn_graph(X, 25);
    std::vector<int> comm = louvain(g, 900 + t);
    int k = *std::max_element(comm.begin(), comm.end()) + 1;
    if (k >= 9 && k <= 15) ++in_range;
  }
  CHECK(in_range >= trials / 2 + 1);
}
