// Serial reference vs OpenMP kernels.
#include <benchmark/benchmark.h>

#include "turtle/metrics.hpp"
#include "turtle/objective.hpp"
#include "turtle/reference.hpp"
#include "turtle/rng.hpp"

using namespace turtle;

namespace {

struct Fixture {
  Mat X;
  Model model;
  std::vector<int> labels;
};

Fixture make_fixture(int n, int d, int k) {
  Rng rng(1234);
  Fixture f;
  f.X.resize(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) f.X(i, j) = rng.normal();
  f.model.dim = d;
  f.model.clusters.resize(k);
  f.labels.resize(n);
  for (int c = 0; c < k; ++c) {
    ClusterParams& cl = f.model.clusters[c];
    cl.pi = rng.uniform(-0.5, 0.5);
    cl.omega = 0.7;
    cl.gaussian.mu.resize(d);
    for (int j = 0; j < d; ++j) cl.gaussian.mu[j] = rng.uniform(-1, 1);
    cl.gaussian.L = Mat::Identity(d, d);
    cl.uniform.a = cl.gaussian.mu.array() - 1.5;
    cl.uniform.b = cl.gaussian.mu.array() + 1.5;
  }
  for (int i = 0; i < n; ++i) f.labels[i] = rng.uniform_int(k);
  for (int c = 0; c < k; ++c) f.labels[c] = c;
  return f;
}

const Fixture& big() {
  static Fixture f = make_fixture(20000, 5, 8);
  return f;
}

const Fixture& mid() {
  static Fixture f = make_fixture(3000, 5, 6);
  return f;
}

void BM_gradient_omp(benchmark::State& state) {
  const Fixture& f = big();
  Hyper h{0.1, 0.5};
  for (auto _ : state) {
    Vec g = gradient(f.X, f.model, h);
    benchmark::DoNotOptimize(g);
  }
}
BENCHMARK(BM_gradient_omp)->Unit(benchmark::kMillisecond);

void BM_gradient_serial_ref(benchmark::State& state) {
  const Fixture& f = big();
  Hyper h{0.1, 0.5};
  for (auto _ : state) {
    Vec g = ref::gradient(f.X, f.model, h);
    benchmark::DoNotOptimize(g);
  }
}
BENCHMARK(BM_gradient_serial_ref)->Unit(benchmark::kMillisecond);

void BM_posterior_omp(benchmark::State& state) {
  const Fixture& f = big();
  for (auto _ : state) {
    Mat P = posterior(f.X, f.model);
    benchmark::DoNotOptimize(P);
  }
}
BENCHMARK(BM_posterior_omp)->Unit(benchmark::kMillisecond);

void BM_posterior_serial_ref(benchmark::State& state) {
  const Fixture& f = big();
  for (auto _ : state) {
    Mat P = ref::posterior(f.X, f.model);
    benchmark::DoNotOptimize(P);
  }
}
BENCHMARK(BM_posterior_serial_ref)->Unit(benchmark::kMillisecond);

void BM_silhouette_omp(benchmark::State& state) {
  const Fixture& f = mid();
  for (auto _ : state) {
    double s = silhouette(f.X, f.labels);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_silhouette_omp)->Unit(benchmark::kMillisecond);

void BM_silhouette_serial_ref(benchmark::State& state) {
  const Fixture& f = mid();
  for (auto _ : state) {
    double s = ref::silhouette(f.X, f.labels);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_silhouette_serial_ref)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
