#pragma once

#include "turtle/types.hpp"

// Serial reference implementations of the parallel kernels. These follow the
// direct textbook formulas (plain density arithmetic, no log-space tricks,
// no chunked accumulation) and are kept for testing and benchmarking the
// OpenMP paths against.
namespace turtle::ref {

// Bayes rule evaluated entry by entry.
Mat posterior(const Mat& X, const Model& m);

// (1/N) sum_i sum_k p_ki log(p_ki / phat_k) -- the log-ratio rearrangement
// of the entropy-difference form.
double mutual_information(const Mat& P);

double objective(const Mat& X, const Model& m, const Hyper& h);

// Analytic gradient accumulated in one naive per-point loop.
Vec gradient(const Mat& X, const Model& m, const Hyper& h);

// Plain O(N^2) silhouette, one pass per point.
double silhouette(const Mat& X, const std::vector<int>& labels);

} // namespace turtle::ref
