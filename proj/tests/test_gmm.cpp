#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "turtle/gmm.hpp"
#include "turtle/rng.hpp"

using namespace turtle;

namespace {

Mat two_blobs(Rng& rng, int per_blob, double sep = 10.0) {
  Mat X(2 * per_blob, 2);
  for (int i = 0; i < 2 * per_blob; ++i) {
    double cx = i < per_blob ? 0.0 : sep;
    X(i, 0) = cx + 0.5 * rng.normal();
    X(i, 1) = 0.5 * rng.normal();
  }
  return X;
}

} // namespace

TEST_CASE("single-component fit recovers the sample moments") {
  Rng rng(60);
  Mat X = test::random_data(rng, 200, 2);
  GmmFit f = gmm_em(X, 1, 3, 1);
  Vec mu = X.colwise().mean().transpose();
  CHECK((f.means[0] - mu).lpNorm<Eigen::Infinity>() < 1e-9);
  Mat cov = Mat::Zero(2, 2);
  for (int i = 0; i < X.rows(); ++i) {
    Vec d = X.row(i).transpose() - mu;
    cov += d * d.transpose();
  }
  cov /= X.rows();
  CHECK((f.covariances[0] - cov).lpNorm<Eigen::Infinity>() / cov.norm() < 1e-5);
  CHECK(f.n_params == 0 + 2 + 3);
}

TEST_CASE("two separated blobs are recovered") {
  Rng rng(61);
  Mat X = two_blobs(rng, 80);
  GmmFit f = gmm_em(X, 2, 5, 2);
  double d0 = std::min((f.means[0] - Vec::Zero(2)).norm(),
                       (f.means[1] - Vec::Zero(2)).norm());
  Vec c1(2);
  c1 << 10.0, 0.0;
  double d1 = std::min((f.means[0] - c1).norm(), (f.means[1] - c1).norm());
  CHECK(d0 < 0.5);
  CHECK(d1 < 0.5);
  CHECK(std::abs(f.weights.sum() - 1.0) < 1e-9);
}

TEST_CASE("EM log-likelihood is monotone non-decreasing") {
  Rng rng(62);
  Mat X = test::random_data(rng, 150, 3);
  std::vector<double> trace;
  gmm_em(X, 3, 2, 7, &trace);
  REQUIRE(trace.size() >= 2);
  for (std::size_t i = 1; i < trace.size(); ++i)
    CHECK(trace[i] >= trace[i - 1] - 1e-9);
}

TEST_CASE("icl equals bic when posteriors are certain") {
  Rng rng(63);
  Mat X = two_blobs(rng, 60, 50.0);
  GmmFit f = gmm_em(X, 2, 5, 3);
  double b = bic(f, static_cast<int>(X.rows()));
  double i = icl(f, X);
  CHECK(i <= b + 1e-12);
  CHECK(std::abs(i - b) < 1e-6); // fully separated: entropy term vanishes

  GmmFit single = gmm_em(X, 1, 2, 4);
  CHECK(icl(single, X) == doctest::Approx(bic(single, static_cast<int>(X.rows()))));
}

TEST_CASE("icl is never above bic") {
  Rng rng(64);
  Mat X = test::random_data(rng, 120, 2);
  for (int K : {2, 3, 4}) {
    GmmFit f = gmm_em(X, K, 3, K);
    CHECK(icl(f, X) <= bic(f, static_cast<int>(X.rows())) + 1e-12);
  }
}

TEST_CASE("select_k prefers one component on a single blob") {
  Rng rng(65);
  Mat X = test::random_data(rng, 150, 2, 0.5);
  auto [kb, fb] = select_k(X, {1, 2, 3, 4, 5}, Criterion::kBic, 5, 11);
  auto [ki, fi] = select_k(X, {1, 2, 3, 4, 5}, Criterion::kIcl, 5, 11);
  CHECK(kb == 1);
  CHECK(ki == 1);
  CHECK_THROWS_AS(select_k(X, {}, Criterion::kBic, 5, 11), std::invalid_argument);
}

TEST_CASE("select_k is deterministic") {
  Rng rng(66);
  Mat X = two_blobs(rng, 50);
  auto [k1, f1] = select_k(X, {1, 2, 3}, Criterion::kBic, 4, 21);
  auto [k2, f2] = select_k(X, {1, 2, 3}, Criterion::kBic, 4, 21);
  CHECK(k1 == k2);
  CHECK(f1.loglik == f2.loglik);
}
