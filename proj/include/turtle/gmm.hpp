#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "turtle/types.hpp"

namespace turtle {

struct GmmFit {
  Vec weights;                   // simplex K-vector
  std::vector<Vec> means;
  std::vector<Mat> covariances;  // symmetric PD
  double loglik = 0.0;
  int n_params = 0;              // (K-1) + K*D + K*D*(D+1)/2

  int order() const { return static_cast<int>(means.size()); }
};

// Full-covariance EM with k-means++ seeded restarts and a 1e-6*trace/D
// covariance ridge; returns the best-loglik restart.
GmmFit gmm_em(const Mat& X, int K, int n_restarts, uint64_t seed,
              std::vector<double>* loglik_trace = nullptr);

// Posterior responsibilities under the fit.
Mat gmm_posterior(const Mat& X, const GmmFit& fit);

// 2 l(theta) - rho log N; larger is better.
double bic(const GmmFit& fit, int N);
// BIC + 2 sum_i log yhat_{i,MAP(i)}; always <= BIC.
double icl(const GmmFit& fit, const Mat& X);

enum class Criterion { kBic, kIcl };

std::pair<int, GmmFit> select_k(const Mat& X, const std::vector<int>& k_range,
                                Criterion criterion, int n_restarts, uint64_t seed);

} // namespace turtle
