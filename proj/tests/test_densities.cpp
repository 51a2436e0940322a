#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "turtle/densities.hpp"
#include "turtle/rng.hpp"

using namespace turtle;

TEST_CASE("softmax basics") {
  Vec v(3);
  v << 0, 0, 0;
  Vec s = softmax(v);
  for (int k = 0; k < 3; ++k) CHECK(s[k] == doctest::Approx(1.0 / 3).epsilon(1e-12));

  v << std::log(2.0), 0, 0;
  s = softmax(v);
  CHECK(s[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s[1] == doctest::Approx(0.25).epsilon(1e-12));

  v << 1000, 0, 0; // no overflow with max subtraction
  s = softmax(v);
  CHECK(std::isfinite(s.sum()));
  CHECK(s[0] == doctest::Approx(1.0));
  CHECK(s[1] < 1e-300);
}

TEST_CASE("softmax sums to one and is shift invariant") {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    int k = 1 + rng.uniform_int(20);
    Vec v(k);
    for (int i = 0; i < k; ++i) v[i] = rng.uniform(-30, 30);
    Vec s = softmax(v);
    CHECK(std::abs(s.sum() - 1.0) < 1e-12);
    CHECK((s.array() > 0).all());
    Vec shifted = softmax(Vec(v.array() + rng.uniform(-100, 100)));
    CHECK((s - shifted).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("softmax rejects non-finite input") {
  Vec v(2);
  v << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(softmax(v), std::invalid_argument);
}

TEST_CASE("gaussian_logpdf at the mode") {
  GaussianComponent g;
  g.mu = Vec::Zero(1);
  g.L = Mat::Identity(1, 1);
  Vec x = Vec::Zero(1);
  CHECK(gaussian_logpdf(x, g) == doctest::Approx(-0.5 * std::log(2 * M_PI)).epsilon(1e-12));

  g.mu = Vec::Zero(2);
  g.L = Mat::Identity(2, 2);
  x = Vec::Zero(2);
  CHECK(gaussian_logpdf(x, g) == doctest::Approx(-std::log(2 * M_PI)).epsilon(1e-12));
}

TEST_CASE("gaussian_logpdf agrees with the covariance-form density") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    int d = 1 + rng.uniform_int(5);
    GaussianComponent g = test::random_gaussian(rng, d);
    Vec x(d);
    for (int j = 0; j < d; ++j) x[j] = rng.uniform(-2, 2);

    // independent route: explicit covariance inverse and determinant
    Mat prec = g.L * g.L.transpose();
    Mat cov = prec.inverse();
    Vec diff = x - g.mu;
    double quad = diff.dot(cov.inverse() * diff);
    double expected = -0.5 * (d * std::log(2 * M_PI) + std::log(cov.determinant()) + quad);

    double got = gaussian_logpdf(x, g);
    CHECK(std::abs(got - expected) / std::max(1.0, std::abs(expected)) < 1e-10);
  }
}

TEST_CASE("gaussian_logpdf dimension mismatch") {
  GaussianComponent g;
  g.mu = Vec::Zero(2);
  g.L = Mat::Identity(2, 2);
  CHECK_THROWS_AS(gaussian_logpdf(Vec::Zero(3), g), std::invalid_argument);
}

TEST_CASE("uniform_pdf values") {
  UniformComponent u;
  u.a = Vec::Zero(2);
  u.b.resize(2);
  u.b << 2, 5;
  Vec x(2);
  x << 1, 1;
  CHECK(uniform_pdf(x, u) == doctest::Approx(0.1).epsilon(1e-14));
  x << 3, 1;
  CHECK(uniform_pdf(x, u) == 0.0);
}

TEST_CASE("uniform_pdf equals the per-dimension product") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    int d = 4;
    UniformComponent u;
    u.a.resize(d);
    u.b.resize(d);
    for (int j = 0; j < d; ++j) {
      u.a[j] = rng.uniform(-2, 0);
      u.b[j] = u.a[j] + rng.uniform(0.5, 3.0);
    }
    Vec x(d);
    for (int j = 0; j < d; ++j) x[j] = rng.uniform(-2.5, 3.5);
    double prod = 1.0;
    for (int j = 0; j < d; ++j) {
      prod *= (x[j] >= u.a[j] && x[j] <= u.b[j]) ? 1.0 / (u.b[j] - u.a[j]) : 0.0;
    }
    CHECK(uniform_pdf(x, u) == doctest::Approx(prod).epsilon(1e-12));
  }
}

TEST_CASE("uniform_pdf integrates to one (Monte Carlo)") {
  Rng rng(4);
  UniformComponent u;
  u.a.resize(2);
  u.b.resize(2);
  u.a << -1.0, 0.5;
  u.b << 2.0, 3.5;
  // enclosing box [-2,4]^2, volume 36
  const int n = 1000000;
  double acc = 0.0;
  Vec x(2);
  for (int i = 0; i < n; ++i) {
    x << rng.uniform(-2, 4), rng.uniform(-2, 4);
    acc += uniform_pdf(x, u);
  }
  double integral = 36.0 * acc / n;
  CHECK(std::abs(integral - 1.0) < 1e-2);
}

TEST_CASE("component_density composition") {
  Rng rng(5);
  GaussianComponent g = test::random_gaussian(rng, 2);
  UniformComponent u;
  u.a.resize(2);
  u.b.resize(2);
  u.a << -1, -1;
  u.b << 1, 1;

  Vec x(2);
  x << 0.3, -0.2;
  CHECK(component_density(x, 1.0, g, u) ==
        doctest::Approx(std::exp(gaussian_logpdf(x, g))).epsilon(1e-12));

  Vec far(2);
  far << 500, 500;
  CHECK(component_density(far, 0.5, g, u) == doctest::Approx(0.0).epsilon(1e-12));

  double w = 0.7;
  double expected = w * std::exp(gaussian_logpdf(x, g)) + (1 - w) * uniform_pdf(x, u);
  CHECK(component_density(x, w, g, u) == doctest::Approx(expected).epsilon(1e-12));

  // continuity in omega and nonnegativity
  double prev = component_density(x, 0.01, g, u);
  for (double ww = 0.02; ww <= 0.99; ww += 0.01) {
    double cur = component_density(x, ww, g, u);
    CHECK(cur >= 0.0);
    CHECK(std::abs(cur - prev) < 0.05);
    prev = cur;
  }
}
