#include "turtle/densities.hpp"

#include <cmath>
#include <stdexcept>

namespace turtle {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
}

Mat GaussianComponent::covariance() const {
  // (L L^T)^-1 via two triangular solves
  const int d = dim();
  Mat eye = Mat::Identity(d, d);
  Mat linv = L.triangularView<Eigen::Lower>().solve(eye);
  return linv.transpose() * linv;
}

Vec Model::logits() const {
  Vec v(order());
  for (int k = 0; k < order(); ++k) v[k] = clusters[k].pi;
  return v;
}

Vec Model::proportions() const { return softmax(logits()); }

Vec softmax(const Vec& logits) {
  if (logits.size() < 1) throw std::invalid_argument("softmax: empty input");
  if (!logits.allFinite()) throw std::invalid_argument("softmax: non-finite input");
  Vec shifted = logits.array() - logits.maxCoeff();
  Vec e = shifted.array().exp();
  return e / e.sum();
}

Vec log_softmax(const Vec& logits) {
  if (logits.size() < 1) throw std::invalid_argument("log_softmax: empty input");
  if (!logits.allFinite()) throw std::invalid_argument("log_softmax: non-finite input");
  double mx = logits.maxCoeff();
  double lse = mx + std::log((logits.array() - mx).exp().sum());
  return logits.array() - lse;
}

double gaussian_logpdf(const Eigen::Ref<const Vec>& x, const GaussianComponent& g) {
  const int d = g.dim();
  if (x.size() != d || g.L.rows() != d || g.L.cols() != d)
    throw std::invalid_argument("gaussian_logpdf: dimension mismatch");
  Vec t = g.L.transpose() * (x - g.mu);
  double logdet = g.L.diagonal().array().log().sum();
  return -0.5 * d * kLog2Pi + logdet - 0.5 * t.squaredNorm();
}

double uniform_pdf(const Eigen::Ref<const Vec>& x, const UniformComponent& u) {
  if (!u.contains(x)) return 0.0;
  return std::exp(-u.log_volume());
}

double component_density(const Eigen::Ref<const Vec>& x, double omega,
                         const GaussianComponent& g, const UniformComponent& u) {
  return omega * std::exp(gaussian_logpdf(x, g)) + (1.0 - omega) * uniform_pdf(x, u);
}

} // namespace turtle
