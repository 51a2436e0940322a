#include <cmath>
#include <limits>
#include <stdexcept>

#include "turtle/data.hpp"
#include "turtle/rng.hpp"

namespace turtle {

namespace {

// Draws from N(mu, S) given the lower Cholesky factor of S.
Vec mvn_draw(Rng& rng, const Vec& mu, const Mat& chol) {
  Vec z(mu.size());
  for (int d = 0; d < mu.size(); ++d) z[d] = rng.normal();
  return mu + chol * z;
}

Mat rot_cov(double angle, double sd_major, double sd_minor) {
  Mat r(2, 2);
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = sd_major * sd_major;
  d(1, 1) = sd_minor * sd_minor;
  return r * d * r.transpose();
}

} // namespace

LabeledDataset gen_gu6(uint64_t seed) {
  // hexagon of six GU components; the uniform burst sits offset from the
  // Gaussian core, radially outward
  constexpr int kN = 1150;
  constexpr double kRadius = 4.5, kSd = 0.5, kHalfWidth = 0.7, kOffset = 1.3;
  constexpr double kOmega = 0.7;

  Rng rng(seed, 0x67d6u);
  LabeledDataset ds;
  ds.name = "gu6";
  ds.X.resize(kN, 2);
  ds.labels.resize(kN);
  Mat centers(6, 2), boxc(6, 2);
  for (int j = 0; j < 6; ++j) {
    double ang = j * M_PI / 3.0;
    centers(j, 0) = kRadius * std::cos(ang);
    centers(j, 1) = kRadius * std::sin(ang);
    boxc.row(j) = centers.row(j) * (1.0 + kOffset / kRadius);
  }
  for (int i = 0; i < kN; ++i) {
    int j = rng.uniform_int(6);
    ds.labels[i] = j;
    if (rng.uniform01() < kOmega) {
      ds.X(i, 0) = centers(j, 0) + kSd * rng.normal();
      ds.X(i, 1) = centers(j, 1) + kSd * rng.normal();
    } else {
      ds.X(i, 0) = boxc(j, 0) + rng.uniform(-kHalfWidth, kHalfWidth);
      ds.X(i, 1) = boxc(j, 1) + rng.uniform(-kHalfWidth, kHalfWidth);
    }
  }
  return ds;
}

LabeledDataset gen_cross(uint64_t seed) {
  // six Gaussians: two pairs of long thin arms crossing at (+-5, 0) plus two
  // round clusters; the intuitive labeling merges each cross
  constexpr int kEach = 100;
  constexpr double kArmSd = 2.2, kMinorSd = 0.28, kRoundSd = 0.6;

  Rng rng(seed, 0xc405u);
  std::vector<Vec> mus;
  std::vector<Mat> chols;
  for (double cx : {-5.0, 5.0}) {
    for (double ang : {M_PI / 4.0, -M_PI / 4.0}) {
      mus.push_back((Vec(2) << cx, 0.0).finished());
      chols.push_back(Mat(Eigen::LLT<Mat>(rot_cov(ang, kArmSd, kMinorSd)).matrixL()));
    }
  }
  for (double cy : {5.5, -5.5}) {
    mus.push_back((Vec(2) << 0.0, cy).finished());
    chols.push_back(kRoundSd * Mat::Identity(2, 2));
  }
  const int intuitive[6] = {0, 0, 1, 1, 2, 3};

  LabeledDataset ds;
  ds.name = "cross";
  ds.X.resize(6 * kEach, 2);
  ds.labels.resize(6 * kEach);
  ds.alt_labels.resize(6 * kEach);
  for (int j = 0; j < 6; ++j) {
    for (int t = 0; t < kEach; ++t) {
      int i = j * kEach + t;
      ds.X.row(i) = mvn_draw(rng, mus[j], chols[j]).transpose();
      ds.labels[i] = intuitive[j];
      ds.alt_labels[i] = j;
    }
  }
  return ds;
}

namespace {

LabeledDataset close_pair_mixture(uint64_t seed, uint64_t stream, int n, double delta,
                                  const std::string& name) {
  constexpr double kSd = 0.8;
  Mat centers(4, 2);
  centers << 0.0, 0.0, delta, 0.0, 7.0, 1.0, 3.0, 5.5;
  const int intuitive[4] = {0, 0, 1, 2}; // the close pair reads as one cluster

  Rng rng(seed, stream);
  LabeledDataset ds;
  ds.name = name;
  ds.X.resize(n, 2);
  ds.labels.resize(n);
  ds.alt_labels.resize(n);
  for (int i = 0; i < n; ++i) {
    int j = rng.uniform_int(4);
    ds.X(i, 0) = centers(j, 0) + kSd * rng.normal();
    ds.X(i, 1) = centers(j, 1) + kSd * rng.normal();
    ds.labels[i] = intuitive[j];
    ds.alt_labels[i] = j;
  }
  return ds;
}

} // namespace

LabeledDataset gen_mixg(uint64_t seed) {
  return close_pair_mixture(seed, 0x316au, 210, 2.3, "mixg");
}

LabeledDataset gen_fig1(uint64_t seed) {
  return close_pair_mixture(seed, 0xf161u, 800, 2.4, "fig1");
}

LabeledDataset gen_outlier(uint64_t seed) {
  // 300 points from three tight Gaussians plus 50 uniform noise points over
  // the input space; noise is labeled by the nearest Gaussian center
  constexpr double kSd = 0.7;
  Mat centers(3, 2);
  centers << 0.0, 0.0, 6.0, 0.0, 3.0, 5.2;
  const double box_lo[2] = {-3.0, -3.0};
  const double box_hi[2] = {9.0, 8.2};

  Rng rng(seed, 0x0071u);
  LabeledDataset ds;
  ds.name = "outlier";
  ds.X.resize(350, 2);
  ds.labels.resize(350);
  ds.alt_labels.resize(350);
  for (int i = 0; i < 300; ++i) {
    int j = i / 100;
    ds.X(i, 0) = centers(j, 0) + kSd * rng.normal();
    ds.X(i, 1) = centers(j, 1) + kSd * rng.normal();
    ds.labels[i] = j;
    ds.alt_labels[i] = j;
  }
  for (int i = 300; i < 350; ++i) {
    ds.X(i, 0) = rng.uniform(box_lo[0], box_hi[0]);
    ds.X(i, 1) = rng.uniform(box_lo[1], box_hi[1]);
    int nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < 3; ++j) {
      double d = (ds.X.row(i) - centers.row(j)).squaredNorm();
      if (d < best) { best = d; nearest = j; }
    }
    ds.labels[i] = nearest;
    ds.alt_labels[i] = 3; // generative noise class
  }
  return ds;
}

LabeledDataset generate(const std::string& family, uint64_t seed) {
  if (family == "gu6") return gen_gu6(seed);
  if (family == "cross") return gen_cross(seed);
  if (family == "mixg") return gen_mixg(seed);
  if (family == "outlier") return gen_outlier(seed);
  if (family == "fig1") return gen_fig1(seed);
  throw std::invalid_argument("unknown simulation family: " + family);
}

} // namespace turtle
