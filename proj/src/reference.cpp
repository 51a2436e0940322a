#include "turtle/reference.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "turtle/densities.hpp"
#include "turtle/objective.hpp"

namespace turtle::ref {

Mat posterior(const Mat& X, const Model& m) {
  const int N = static_cast<int>(X.rows());
  const int K = m.order();
  Vec tau = m.proportions();
  Mat P(N, K);
  for (int i = 0; i < N; ++i) {
    Vec x = X.row(i).transpose();
    double denom = 0.0;
    for (int k = 0; k < K; ++k) {
      const ClusterParams& c = m.clusters[k];
      P(i, k) = tau[k] * component_density(x, c.omega, c.gaussian, c.uniform);
      denom += P(i, k);
    }
    if (denom > 0.0) {
      P.row(i) /= denom;
    } else {
      P.row(i).setConstant(1.0 / K);
    }
  }
  return P;
}

double mutual_information(const Mat& P) {
  const int N = static_cast<int>(P.rows());
  const int K = static_cast<int>(P.cols());
  Vec phat = P.colwise().mean();
  double sum = 0.0;
  for (int i = 0; i < N; ++i) {
    for (int k = 0; k < K; ++k) {
      double p = P(i, k);
      if (p > 0.0) sum += p * std::log(p / std::max(phat[k], kProbFloor));
    }
  }
  return sum / N;
}

double objective(const Mat& X, const Model& m, const Hyper& h) {
  double r1 = 0.0, r2 = 0.0;
  Vec tau = m.proportions();
  for (int k = 0; k < m.order(); ++k) {
    r1 -= h.lambda1 * std::log(tau[k]);
    const ClusterParams& c = m.clusters[k];
    Vec mid = 0.5 * (c.uniform.a + c.uniform.b) - c.gaussian.mu;
    Mat prec = c.gaussian.precision();
    r2 += h.lambda2 * mid.dot(prec * mid);
  }
  return ref::mutual_information(ref::posterior(X, m)) - r1 - r2;
}

Vec gradient(const Mat& X, const Model& m, const Hyper& h) {
  const int N = static_cast<int>(X.rows());
  const int D = static_cast<int>(X.cols());
  const int K = m.order();
  Mat P = ref::posterior(X, m);
  Vec phat = P.colwise().mean();
  Vec tau = m.proportions();

  std::vector<Mat> prec(K);
  for (int k = 0; k < K; ++k) prec[k] = m.clusters[k].gaussian.precision();

  Vec dpi = Vec::Zero(K), domega = Vec::Zero(K);
  std::vector<Vec> dmu(K, Vec::Zero(D)), da(K, Vec::Zero(D)), db(K, Vec::Zero(D));
  std::vector<Mat> dL(K, Mat::Zero(D, D));

  for (int i = 0; i < N; ++i) {
    Vec x = X.row(i).transpose();
    double denom = 0.0;
    Vec gdens(K), udens(K);
    for (int k = 0; k < K; ++k) {
      const ClusterParams& c = m.clusters[k];
      gdens[k] = std::exp(gaussian_logpdf(x, c.gaussian));
      udens[k] = uniform_pdf(x, c.uniform);
      denom += tau[k] * (c.omega * gdens[k] + (1.0 - c.omega) * udens[k]);
    }
    double ei = 0.0;
    Vec lr(K);
    for (int k = 0; k < K; ++k) {
      lr[k] = std::log(std::max(P(i, k), kProbFloor)) - std::log(std::max(phat[k], kProbFloor));
      ei += P(i, k) * lr[k];
    }
    for (int k = 0; k < K; ++k) {
      const ClusterParams& c = m.clusters[k];
      const double w = lr[k] - ei;
      const double gshare = tau[k] * c.omega * gdens[k] / denom;
      Vec v = x - c.gaussian.mu;
      dpi[k] += P(i, k) * w;
      domega[k] += tau[k] * (gdens[k] - udens[k]) / denom * w;
      dmu[k] += gshare * w * (prec[k] * v);
      Mat linvT = c.gaussian.L.triangularView<Eigen::Lower>()
                      .solve(Mat::Identity(D, D)).transpose();
      dL[k] += gshare * w * (linvT - v * (v.transpose() * c.gaussian.L));
      if (udens[k] > 0.0) {
        double ushare = tau[k] * (1.0 - c.omega) * udens[k] / denom;
        for (int d = 0; d < D; ++d) {
          double t = ushare * w / (c.uniform.b[d] - c.uniform.a[d]);
          da[k][d] += t;
          db[k][d] -= t;
        }
      }
    }
  }

  Vec grad = Vec::Zero(packed_size(K, D));
  int p = 0;
  for (int k = 0; k < K; ++k) {
    const ClusterParams& c = m.clusters[k];
    Vec mid = 0.5 * (c.uniform.a + c.uniform.b) - c.gaussian.mu;
    Vec pm = prec[k] * mid;
    grad[p++] = dpi[k] / N + h.lambda1 * (1.0 - K * tau[k]);
    grad[p++] = domega[k] / N;
    for (int d = 0; d < D; ++d) grad[p++] = dmu[k][d] / N + 2.0 * h.lambda2 * pm[d];
    Mat dLk = dL[k] / N - 2.0 * h.lambda2 * (mid * (mid.transpose() * c.gaussian.L));
    for (int r = 0; r < D; ++r)
      for (int col = 0; col <= r; ++col) grad[p++] = dLk(r, col);
    for (int d = 0; d < D; ++d)
      grad[p++] = (da[k][d] + db[k][d]) / N - 2.0 * h.lambda2 * pm[d];
    for (int d = 0; d < D; ++d)
      grad[p++] = db[k][d] / N - h.lambda2 * pm[d];
  }
  return grad;
}

double silhouette(const Mat& X, const std::vector<int>& labels) {
  const int N = static_cast<int>(X.rows());
  int K = 0;
  for (int l : labels) K = std::max(K, l + 1);
  if (K < 2) throw std::invalid_argument("silhouette: need at least two clusters");
  std::vector<int> count(K, 0);
  for (int l : labels) count[l]++;

  double total = 0.0;
  for (int i = 0; i < N; ++i) {
    if (count[labels[i]] == 1) continue; // singleton: s(i) = 0
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
    total += mx > 0.0 ? (b - a) / mx : 0.0;
  }
  return total / N;
}

} // namespace turtle::ref
