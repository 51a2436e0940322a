#include "turtle/gmm.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "turtle/rng.hpp"

namespace turtle {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

struct CompCache {
  Mat chol;       // LLT factor of the covariance
  double logdet;  // log det(covariance)
};

bool cache_components(const GmmFit& f, std::vector<CompCache>& cc) {
  const int K = f.order();
  cc.resize(K);
  for (int k = 0; k < K; ++k) {
    Eigen::LLT<Mat> llt(f.covariances[k]);
    if (llt.info() != Eigen::Success) return false;
    cc[k].chol = llt.matrixL();
    cc[k].logdet = 2.0 * cc[k].chol.diagonal().array().log().sum();
  }
  return true;
}

// log-space E step; returns the log-likelihood
double e_step(const Mat& X, const GmmFit& f, const std::vector<CompCache>& cc, Mat& R) {
  const int N = static_cast<int>(X.rows());
  const int D = static_cast<int>(X.cols());
  const int K = f.order();
  R.resize(N, K);
  double ll = 0.0;
  for (int i = 0; i < N; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
      Vec diff = X.row(i).transpose() - f.means[k];
      Vec t = cc[k].chol.triangularView<Eigen::Lower>().solve(diff);
      R(i, k) = std::log(f.weights[k]) - 0.5 * (D * kLog2Pi + cc[k].logdet + t.squaredNorm());
      mx = std::max(mx, R(i, k));
    }
    double sum = 0.0;
    for (int k = 0; k < K; ++k) sum += std::exp(R(i, k) - mx);
    double lse = mx + std::log(sum);
    ll += lse;
    for (int k = 0; k < K; ++k) R(i, k) = std::exp(R(i, k) - lse);
  }
  return ll;
}

void m_step(const Mat& X, const Mat& R, GmmFit& f) {
  const int N = static_cast<int>(X.rows());
  const int D = static_cast<int>(X.cols());
  const int K = f.order();
  for (int k = 0; k < K; ++k) {
    double nk = R.col(k).sum();
    f.weights[k] = nk / N;
    Vec mu = Vec::Zero(D);
    for (int i = 0; i < N; ++i) mu += R(i, k) * X.row(i).transpose();
    mu /= nk;
    Mat cov = Mat::Zero(D, D);
    for (int i = 0; i < N; ++i) {
      Vec d = X.row(i).transpose() - mu;
      cov += R(i, k) * (d * d.transpose());
    }
    cov /= nk;
    cov.diagonal().array() += 1e-6 * cov.trace() / D;
    f.means[k] = mu;
    f.covariances[k] = cov;
  }
}

// k-means++ draw of K distinct rows as initial means
std::vector<int> kmeanspp_rows(const Mat& X, int K, Rng& rng) {
  const int N = static_cast<int>(X.rows());
  std::vector<int> picks;
  picks.push_back(rng.uniform_int(N));
  Vec d2 = Vec::Constant(N, std::numeric_limits<double>::infinity());
  while (static_cast<int>(picks.size()) < K) {
    int last = picks.back();
    for (int i = 0; i < N; ++i)
      d2[i] = std::min(d2[i], (X.row(i) - X.row(last)).squaredNorm());
    double total = d2.sum();
    int chosen;
    if (total <= 0.0) {
      chosen = rng.uniform_int(N);
    } else {
      double u = rng.uniform01() * total, acc = 0.0;
      chosen = N - 1;
      for (int i = 0; i < N; ++i) {
        acc += d2[i];
        if (u <= acc) { chosen = i; break; }
      }
    }
    picks.push_back(chosen);
  }
  return picks;
}

bool init_fit(const Mat& X, int K, Rng& rng, GmmFit& f) {
  const int N = static_cast<int>(X.rows());
  const int D = static_cast<int>(X.cols());
  std::vector<int> seeds = kmeanspp_rows(X, K, rng);
  std::vector<int> assign(N);
  for (int i = 0; i < N; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
      double d = (X.row(i) - X.row(seeds[k])).squaredNorm();
      if (d < best) { best = d; assign[i] = k; }
    }
  }
  std::vector<int> count(K, 0);
  for (int a : assign) count[a]++;
  for (int c : count)
    if (c == 0) return false;

  Vec global_mu = X.colwise().mean().transpose();
  Mat global_cov = Mat::Zero(D, D);
  for (int i = 0; i < N; ++i) {
    Vec d = X.row(i).transpose() - global_mu;
    global_cov += d * d.transpose();
  }
  global_cov /= std::max(1, N - 1);

  f.weights.resize(K);
  f.means.assign(K, Vec::Zero(D));
  f.covariances.assign(K, Mat::Zero(D, D));
  for (int i = 0; i < N; ++i) f.means[assign[i]] += X.row(i).transpose();
  for (int k = 0; k < K; ++k) {
    f.weights[k] = static_cast<double>(count[k]) / N;
    f.means[k] /= count[k];
  }
  for (int i = 0; i < N; ++i) {
    Vec d = X.row(i).transpose() - f.means[assign[i]];
    f.covariances[assign[i]] += d * d.transpose();
  }
  for (int k = 0; k < K; ++k) {
    if (count[k] >= 2 * D) {
      f.covariances[k] /= count[k];
    } else {
      f.covariances[k] = global_cov;
    }
    f.covariances[k].diagonal().array() += 1e-6 * f.covariances[k].trace() / D + 1e-10;
  }
  f.n_params = (K - 1) + K * D + K * D * (D + 1) / 2;
  return true;
}

} // namespace

GmmFit gmm_em(const Mat& X, int K, int n_restarts, uint64_t seed,
              std::vector<double>* loglik_trace) {
  const int N = static_cast<int>(X.rows());
  if (K < 1) throw std::invalid_argument("gmm_em: K must be positive");
  if (N < 1) throw std::invalid_argument("gmm_em: empty data");

  GmmFit best;
  std::vector<double> best_trace;
  double best_ll = -std::numeric_limits<double>::infinity();
  int done = 0;
  for (int attempt = 0; attempt < 4 * n_restarts && done < n_restarts; ++attempt) {
    Rng rng(seed, 0x6000u + attempt);
    GmmFit f;
    if (!init_fit(X, K, rng, f)) continue;
    std::vector<CompCache> cc;
    Mat R;
    std::vector<double> lls;
    double prev = -std::numeric_limits<double>::infinity();
    bool degenerate = false;
    for (int it = 0; it < 500; ++it) {
      if (!cache_components(f, cc)) { degenerate = true; break; }
      double ll = e_step(X, f, cc, R);
      if (!std::isfinite(ll)) { degenerate = true; break; }
      lls.push_back(ll);
      if (it > 0 && std::abs(ll - prev) < 1e-8 * (1.0 + std::abs(ll))) { prev = ll; break; }
      prev = ll;
      m_step(X, R, f);
    }
    if (degenerate) continue;
    ++done;
    f.loglik = prev;
    if (prev > best_ll) {
      best_ll = prev;
      best = f;
      best_trace = lls;
    }
  }
  if (done == 0) throw std::runtime_error("gmm_em: every restart degenerated");
  if (loglik_trace) *loglik_trace = best_trace;
  return best;
}

Mat gmm_posterior(const Mat& X, const GmmFit& fit) {
  std::vector<CompCache> cc;
  if (!cache_components(fit, cc))
    throw std::runtime_error("gmm_posterior: covariance not PD");
  Mat R;
  e_step(X, fit, cc, R);
  return R;
}

double bic(const GmmFit& fit, int N) {
  return 2.0 * fit.loglik - fit.n_params * std::log(static_cast<double>(N));
}

double icl(const GmmFit& fit, const Mat& X) {
  Mat R = gmm_posterior(X, fit);
  double entropy = 0.0;
  for (int i = 0; i < R.rows(); ++i) {
    int arg = 0;
    R.row(i).maxCoeff(&arg);
    entropy += std::log(std::max(R(i, arg), 1e-300));
  }
  return bic(fit, static_cast<int>(X.rows())) + 2.0 * entropy;
}

std::pair<int, GmmFit> select_k(const Mat& X, const std::vector<int>& k_range,
                                Criterion criterion, int n_restarts, uint64_t seed) {
  if (k_range.empty()) throw std::invalid_argument("select_k: empty range");
  int best_k = -1;
  GmmFit best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int K : k_range) {
    GmmFit f = gmm_em(X, K, n_restarts, splitmix64(seed) + K);
    double score = criterion == Criterion::kBic ? bic(f, static_cast<int>(X.rows()))
                                                : icl(f, X);
    if (score > best_score) {
      best_score = score;
      best_k = K;
      best = f;
    }
  }
  return {best_k, best};
}

} // namespace turtle
