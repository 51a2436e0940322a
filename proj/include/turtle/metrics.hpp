#pragma once

#include <cstdint>
#include <vector>

#include "turtle/types.hpp"

namespace turtle {

// Average silhouette width with Euclidean distances; singleton clusters get
// s(i) = 0. With subsample > 0, s(i) is computed for a seeded uniform sample
// of points against the full data. Throws std::invalid_argument when fewer
// than two clusters are present.
double silhouette(const Mat& X, const std::vector<int>& labels, int subsample = 0,
                  uint64_t seed = 0);

// silhouette() that compacts labels first and maps the undefined-metric case
// to -inf, the "treat as non-improvement" convention of the fit pipeline.
double silhouette_or_neg_inf(const Mat& X, const std::vector<int>& labels,
                             int subsample = 0, uint64_t seed = 0);

// Hubert-Arabie adjusted Rand index.
double ari(const std::vector<int>& labels_a, const std::vector<int>& labels_b);

} // namespace turtle
