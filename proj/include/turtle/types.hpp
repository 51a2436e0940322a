#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace turtle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Rows of a responsibility matrix are on the probability simplex.
using Responsibilities = Mat;

constexpr double kDiagFloor = 1e-6;   // lower bound on Cholesky diagonals
constexpr double kOmegaLo = 0.01;     // inner mixing weight box
constexpr double kOmegaHi = 0.99;
constexpr double kProbFloor = 1e-300; // floor before taking logs

// Gaussian parameterized by the Cholesky factor of its precision:
// precision = L L^T, covariance = (L L^T)^-1.
struct GaussianComponent {
  Vec mu;
  Mat L; // lower triangular, diag >= kDiagFloor

  int dim() const { return static_cast<int>(mu.size()); }
  Mat precision() const { return L * L.transpose(); }
  Mat covariance() const;
};

// Axis-aligned box with density 1/volume inside and 0 outside.
struct UniformComponent {
  Vec a;
  Vec b; // b - a >= width floor per dimension

  int dim() const { return static_cast<int>(a.size()); }
  bool contains(const Eigen::Ref<const Vec>& x) const {
    return (x.array() >= a.array()).all() && (x.array() <= b.array()).all();
  }
  double log_volume() const { return (b - a).array().log().sum(); }
};

struct ClusterParams {
  double pi = 0.0;     // unconstrained softmax logit
  double omega = 0.7;  // weight of the Gaussian inside the cluster
  GaussianComponent gaussian;
  UniformComponent uniform;
};

struct Model {
  std::vector<ClusterParams> clusters;
  int dim = 0;

  int order() const { return static_cast<int>(clusters.size()); }
  Vec logits() const;
  Vec proportions() const; // softmax of the logits
};

struct Hyper {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

} // namespace turtle
