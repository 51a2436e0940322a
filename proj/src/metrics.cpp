#include "turtle/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "turtle/rng.hpp"

namespace turtle {

namespace {

std::vector<int> compact_labels(const std::vector<int>& labels, int* k_out) {
  std::unordered_map<int, int> remap;
  std::vector<int> out(labels.size());
  int next = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = remap.emplace(labels[i], next);
    if (inserted) ++next;
    out[i] = it->second;
  }
  *k_out = next;
  return out;
}

} // namespace

double silhouette(const Mat& X, const std::vector<int>& labels, int subsample,
                  uint64_t seed) {
  const int N = static_cast<int>(X.rows());
  if (static_cast<int>(labels.size()) != N)
    throw std::invalid_argument("silhouette: label length mismatch");
  int K = 0;
  for (int l : labels) {
    if (l < 0) throw std::invalid_argument("silhouette: negative label");
    K = std::max(K, l + 1);
  }
  std::vector<int> count(K, 0);
  for (int l : labels) count[l]++;
  int nonempty = 0;
  for (int c : count) nonempty += c > 0;
  if (nonempty < 2) throw std::invalid_argument("silhouette: need at least two clusters");

  std::vector<int> points(N);
  std::iota(points.begin(), points.end(), 0);
  if (subsample > 0 && subsample < N) {
    Rng rng(seed, 0x51u);
    for (int i = 0; i < subsample; ++i)
      std::swap(points[i], points[i + rng.uniform_int(N - i)]);
    points.resize(subsample);
    std::sort(points.begin(), points.end());
  }

  const int M = static_cast<int>(points.size());
  std::vector<double> s(M, 0.0);
#pragma omp parallel for schedule(dynamic, 16)
  for (int t = 0; t < M; ++t) {
    const int i = points[t];
    if (count[labels[i]] == 1) continue;
    std::vector<double> dist_sum(K, 0.0);
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      dist_sum[labels[j]] += (X.row(i) - X.row(j)).norm();
    }
    double a = dist_sum[labels[i]] / (count[labels[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
      if (k == labels[i] || count[k] == 0) continue;
      b = std::min(b, dist_sum[k] / count[k]);
    }
    double mx = std::max(a, b);
    s[t] = mx > 0.0 ? (b - a) / mx : 0.0;
  }
  double total = 0.0;
  for (double v : s) total += v;
  return total / M;
}

double silhouette_or_neg_inf(const Mat& X, const std::vector<int>& labels,
                             int subsample, uint64_t seed) {
  int k = 0;
  std::vector<int> compacted = compact_labels(labels, &k);
  if (k < 2) return -std::numeric_limits<double>::infinity();
  return silhouette(X, compacted, subsample, seed);
}

double ari(const std::vector<int>& labels_a, const std::vector<int>& labels_b) {
  if (labels_a.size() != labels_b.size())
    throw std::invalid_argument("ari: length mismatch");
  const auto n = static_cast<long long>(labels_a.size());
  if (n < 2) return 1.0;
  int ka = 0, kb = 0;
  std::vector<int> a = compact_labels(labels_a, &ka);
  std::vector<int> b = compact_labels(labels_b, &kb);

  std::unordered_map<long long, long long> cont;
  std::vector<long long> row(ka, 0), col(kb, 0);
  for (long long i = 0; i < n; ++i) {
    cont[static_cast<long long>(a[i]) * kb + b[i]]++;
    row[a[i]]++;
    col[b[i]]++;
  }
  auto comb2 = [](long long m) { return 0.5 * static_cast<double>(m) * (m - 1); };
  double sum_ij = 0.0;
  for (const auto& [key, c] : cont) sum_ij += comb2(c);
  double sum_a = 0.0, sum_b = 0.0;
  for (long long r : row) sum_a += comb2(r);
  for (long long c : col) sum_b += comb2(c);
  double total = comb2(n);
  double expected = sum_a * sum_b / total;
  double maximum = 0.5 * (sum_a + sum_b);
  if (std::abs(maximum - expected) < 1e-12) return 1.0; // both partitions trivial
  return (sum_ij - expected) / (maximum - expected);
}

} // namespace turtle
