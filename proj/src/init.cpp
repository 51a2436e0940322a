#include "turtle/init.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "turtle/graph.hpp"
#include "turtle/metrics.hpp"
#include "turtle/objective.hpp"
#include "turtle/rng.hpp"

namespace turtle {

namespace {

Mat sample_covariance(const Mat& X, const std::vector<int>& rows) {
  const int D = static_cast<int>(X.cols());
  Vec mu = Vec::Zero(D);
  for (int i : rows) mu += X.row(i).transpose();
  mu /= static_cast<double>(rows.size());
  Mat cov = Mat::Zero(D, D);
  for (int i : rows) {
    Vec d = X.row(i).transpose() - mu;
    cov += d * d.transpose();
  }
  return cov / static_cast<double>(rows.size() - 1);
}

Mat full_covariance(const Mat& X) {
  std::vector<int> all(X.rows());
  std::iota(all.begin(), all.end(), 0);
  return sample_covariance(X, all);
}

// Cholesky factor of the precision, with an escalating ridge on the
// covariance if it is numerically singular.
Mat precision_cholesky(Mat cov) {
  const int D = static_cast<int>(cov.rows());
  double ridge = 1e-10 * std::max(cov.trace() / D, 1e-12);
  for (int attempt = 0; attempt < 60; ++attempt) {
    Eigen::LLT<Mat> llt(cov);
    if (llt.info() == Eigen::Success) {
      Mat eye = Mat::Identity(D, D);
      Mat cov_inv = llt.solve(eye);
      Eigen::LLT<Mat> llt2(cov_inv);
      if (llt2.info() == Eigen::Success) {
        Mat L = llt2.matrixL();
        for (int d = 0; d < D; ++d) L(d, d) = std::max(L(d, d), kDiagFloor);
        return L;
      }
    }
    cov.diagonal().array() += ridge;
    ridge *= 10.0;
  }
  throw std::runtime_error("precision_cholesky: covariance not repairable");
}

struct DataStats {
  Vec min, max, range, sd;
};

DataStats data_stats(const Mat& X) {
  DataStats s;
  s.min = X.colwise().minCoeff().transpose();
  s.max = X.colwise().maxCoeff().transpose();
  s.range = (s.max - s.min).cwiseMax(1e-9);
  const int N = static_cast<int>(X.rows());
  Vec mu = X.colwise().mean().transpose();
  s.sd = ((X.rowwise() - mu.transpose()).array().square().colwise().sum() /
          std::max(1, N - 1)).sqrt().transpose();
  return s;
}

// Algorithm-1 style model from cluster means + member lists. Box widths are
// drawn around each cluster's spread, placed so the mean sits inside with a
// 10% margin and the box stays within the feasible region.
Model build_model(const Mat& X, const std::vector<Vec>& mus,
                  const std::vector<std::vector<int>>& members, double alpha,
                  double omega0, const DataStats& st, const Mat& cov_global, Rng& rng) {
  const int D = static_cast<int>(X.cols());
  const int K = static_cast<int>(mus.size());
  Model m;
  m.dim = D;
  m.clusters.resize(K);
  for (int j = 0; j < K; ++j) {
    ClusterParams& c = m.clusters[j];
    c.pi = std::log(1.0 / K);
    c.omega = omega0;
    c.gaussian.mu = mus[j];

    Mat cov;
    if (members[j].size() >= 2) {
      cov = (1.0 - alpha) * cov_global + alpha * sample_covariance(X, members[j]);
    } else {
      cov = cov_global;
    }
    c.gaussian.L = precision_cholesky(cov);

    Vec sdj(D);
    if (members[j].size() >= 2) {
      Mat cj = sample_covariance(X, members[j]);
      sdj = cj.diagonal().array().max(0.0).sqrt();
    } else {
      sdj = st.sd;
    }
    c.uniform.a.resize(D);
    c.uniform.b.resize(D);
    for (int d = 0; d < D; ++d) {
      double wfloor = 1e-6 * st.range[d];
      double w = std::clamp(rng.uniform(0.5, 1.5) * std::max(sdj[d], wfloor),
                            wfloor, 1.2 * st.range[d]);
      double lo = st.min[d] - 0.1 * st.range[d];
      double hi = st.max[d] + 0.1 * st.range[d];
      double c_lo = std::max(mus[j][d] - 0.4 * w, lo + 0.5 * w);
      double c_hi = std::min(mus[j][d] + 0.4 * w, hi - 0.5 * w);
      double center = c_lo <= c_hi ? rng.uniform(c_lo, c_hi)
                                   : std::clamp(mus[j][d], lo + 0.5 * w, hi - 0.5 * w);
      c.uniform.a[d] = center - 0.5 * w;
      c.uniform.b[d] = center + 0.5 * w;
    }
  }
  return m;
}

std::vector<std::vector<int>> group_members(const std::vector<int>& labels, int K) {
  std::vector<std::vector<int>> members(K);
  for (int i = 0; i < static_cast<int>(labels.size()); ++i)
    members[labels[i]].push_back(i);
  return members;
}

std::vector<Vec> group_means(const Mat& X, const std::vector<std::vector<int>>& members,
                             const std::vector<Vec>* fallback = nullptr) {
  std::vector<Vec> mus(members.size());
  for (std::size_t j = 0; j < members.size(); ++j) {
    if (members[j].empty()) {
      mus[j] = fallback ? (*fallback)[j] : Vec(X.colwise().mean().transpose());
      continue;
    }
    Vec mu = Vec::Zero(X.cols());
    for (int i : members[j]) mu += X.row(i).transpose();
    mus[j] = mu / static_cast<double>(members[j].size());
  }
  return mus;
}

// Chooses the best of n_starts by the ASW of the MAP labels.
template <typename MakeStart>
Model best_of_starts(const Mat& X, const InitConfig& cfg, MakeStart&& make_start) {
  Model best;
  double best_asw = -std::numeric_limits<double>::infinity();
  bool have = false;
  for (int s = 1; s <= cfg.n_starts; ++s) {
    Model m = make_start(s);
    Mat P = posterior(X, m);
    std::vector<int> labels(P.rows());
    for (int i = 0; i < P.rows(); ++i) {
      int arg = 0;
      P.row(i).maxCoeff(&arg);
      labels[i] = arg;
    }
    double asw = silhouette_or_neg_inf(X, labels);
    if (!have || asw > best_asw) {
      best = std::move(m);
      best_asw = asw;
      have = true;
    }
  }
  return best;
}

} // namespace

std::vector<int> kmeans(const Mat& X, int k, uint64_t seed, int n_restarts) {
  const int N = static_cast<int>(X.rows());
  const int D = static_cast<int>(X.cols());
  if (k < 1 || k > N) throw std::invalid_argument("kmeans: need 1 <= k <= N");

  std::vector<int> best_assign;
  double best_wcss = std::numeric_limits<double>::infinity();
  int done = 0;
  for (int attempt = 0; attempt < 4 * n_restarts && done < n_restarts; ++attempt) {
    Rng rng(seed, 0x7000u + attempt);
    // k-means++ seeding
    std::vector<Vec> centers;
    centers.push_back(X.row(rng.uniform_int(N)).transpose());
    Vec d2 = Vec::Constant(N, std::numeric_limits<double>::infinity());
    while (static_cast<int>(centers.size()) < k) {
      for (int i = 0; i < N; ++i)
        d2[i] = std::min(d2[i], (X.row(i).transpose() - centers.back()).squaredNorm());
      double total = d2.sum();
      int chosen = rng.uniform_int(N);
      if (total > 0.0) {
        double u = rng.uniform01() * total, acc = 0.0;
        for (int i = 0; i < N; ++i) {
          acc += d2[i];
          if (u <= acc) { chosen = i; break; }
        }
      }
      centers.push_back(X.row(chosen).transpose());
    }

    std::vector<int> assign(N, -1);
    bool empty_cluster = false;
    for (int it = 0; it < 100; ++it) {
      bool changed = false;
      std::vector<int> count(k, 0);
      for (int i = 0; i < N; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (int c = 0; c < k; ++c) {
          double d = (X.row(i).transpose() - centers[c]).squaredNorm();
          if (d < best) { best = d; arg = c; }
        }
        if (arg != assign[i]) changed = true;
        assign[i] = arg;
        count[arg]++;
      }
      for (int c = 0; c < k; ++c)
        if (count[c] == 0) empty_cluster = true;
      if (empty_cluster || !changed) break;
      for (int c = 0; c < k; ++c) centers[c].setZero(D);
      for (int i = 0; i < N; ++i) centers[assign[i]] += X.row(i).transpose();
      for (int c = 0; c < k; ++c) centers[c] /= count[c];
    }
    if (empty_cluster) continue; // restart that run
    ++done;
    double wcss = 0.0;
    for (int i = 0; i < N; ++i)
      wcss += (X.row(i).transpose() - centers[assign[i]]).squaredNorm();
    if (wcss < best_wcss) {
      best_wcss = wcss;
      best_assign = assign;
    }
  }
  if (best_assign.empty()) throw std::runtime_error("kmeans: all restarts emptied a cluster");
  return best_assign;
}

Model graph_init(const Mat& X, const InitConfig& cfg) {
  DataStats st = data_stats(X);
  Mat cov_global = full_covariance(X);
  SparseGraph g = knn_graph(X, cfg.k);
  return best_of_starts(X, cfg, [&](int s) {
    std::vector<int> comm = louvain(g, splitmix64(cfg.seed) ^ static_cast<uint64_t>(s));
    int K = *std::max_element(comm.begin(), comm.end()) + 1;
    auto members = group_members(comm, K);
    auto mus = group_means(X, members);
    double alpha = static_cast<double>(s) / cfg.n_starts;
    Rng rng(cfg.seed, 0x8000u + s);
    return build_model(X, mus, members, alpha, cfg.omega0, st, cov_global, rng);
  });
}

Model kmeans_init(const Mat& X, const InitConfig& cfg) {
  DataStats st = data_stats(X);
  Mat cov_global = full_covariance(X);
  return best_of_starts(X, cfg, [&](int s) {
    std::vector<int> assign =
        kmeans(X, cfg.k, splitmix64(cfg.seed) ^ static_cast<uint64_t>(0x9000 + s));
    auto members = group_members(assign, cfg.k);
    auto mus = group_means(X, members);
    double alpha = static_cast<double>(s) / cfg.n_starts;
    Rng rng(cfg.seed, 0xa000u + s);
    return build_model(X, mus, members, alpha, cfg.omega0, st, cov_global, rng);
  });
}

Model lhs_init(const Mat& X, const InitConfig& cfg) {
  const int N = static_cast<int>(X.rows());
  const int D = static_cast<int>(X.cols());
  DataStats st = data_stats(X);
  Mat cov_global = full_covariance(X);
  return best_of_starts(X, cfg, [&](int s) {
    Rng rng(cfg.seed, 0xb000u + s);
    // one stratified draw per dimension, then permute the strata
    std::vector<Vec> nodes(cfg.k, Vec::Zero(D));
    for (int d = 0; d < D; ++d) {
      std::vector<int> perm(cfg.k);
      std::iota(perm.begin(), perm.end(), 0);
      rng.shuffle(perm);
      for (int j = 0; j < cfg.k; ++j) {
        double stratum = (perm[j] + rng.uniform01()) / cfg.k;
        nodes[j][d] = st.min[d] + stratum * (st.max[d] - st.min[d]);
      }
    }
    std::vector<int> assign(N);
    for (int i = 0; i < N; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < cfg.k; ++j) {
        double dist = (X.row(i).transpose() - nodes[j]).squaredNorm();
        if (dist < best) { best = dist; assign[i] = j; }
      }
    }
    auto members = group_members(assign, cfg.k);
    return build_model(X, nodes, members, static_cast<double>(s) / cfg.n_starts,
                       cfg.omega0, st, cov_global, rng);
  });
}

Model initialize(const Mat& X, const InitConfig& cfg) {
  if (cfg.k < 1 || cfg.n_starts < 1)
    throw std::invalid_argument("initialize: k and n_starts must be positive");
  switch (cfg.scheme) {
    case InitScheme::kGraph: return graph_init(X, cfg);
    case InitScheme::kLhs: return lhs_init(X, cfg);
    case InitScheme::kKmeans: return kmeans_init(X, cfg);
  }
  throw std::invalid_argument("initialize: unknown scheme");
}

} // namespace turtle
