#pragma once

#include "turtle/types.hpp"

namespace turtle {

// Overflow-safe softmax (max subtraction); output sums to 1.
Vec softmax(const Vec& logits);
Vec log_softmax(const Vec& logits);

// log N(x | mu, (L L^T)^-1) with the log-determinant read off the
// Cholesky diagonal.
double gaussian_logpdf(const Eigen::Ref<const Vec>& x, const GaussianComponent& g);

// 1/volume inside the box, 0 outside.
double uniform_pdf(const Eigen::Ref<const Vec>& x, const UniformComponent& u);

// omega * N + (1 - omega) * U
double component_density(const Eigen::Ref<const Vec>& x, double omega,
                         const GaussianComponent& g, const UniformComponent& u);

} // namespace turtle
