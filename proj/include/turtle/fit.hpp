#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "turtle/init.hpp"
#include "turtle/lbfgsb.hpp"
#include "turtle/types.hpp"

namespace turtle {

struct FitConfig {
  InitConfig init;
  std::vector<double> lambda1_grid{0.0, 0.01, 0.1, 1.0};
  std::vector<double> lambda2_grid{0.0, 0.1, 1.0, 10.0};
  double removal_threshold = -1.0; // auto: max(0.01, 10/N)
  OptimizerConfig optimizer;
  int asw_subsample = -1;          // auto: exact, or 5000 when N > 10000
  uint64_t seed = 0;
};

struct FitEvent {
  enum class Kind { kRemoval, kMerge } kind;
  int k_before = 0;
  int k_after = 0;
  int cluster_a = -1;     // removed cluster / merge candidate
  int cluster_b = -1;     // merge partner
  double asw_before = 0.0; // merges only
  double asw_after = 0.0;
};

using ObjectiveTrace = std::vector<std::pair<std::string, double>>;

struct CellSummary {
  double lambda1 = 0.0, lambda2 = 0.0;
  double asw = 0.0;
  int k = 0;
  bool failed = false;
  std::string error;
};

struct FitResult {
  Model model;
  std::vector<int> labels;
  Responsibilities responsibilities;
  double asw = 0.0;
  double lambda1 = 0.0, lambda2 = 0.0;
  ObjectiveTrace objective_trace;
  std::vector<FitEvent> history;
  std::vector<CellSummary> cells;
};

// Everything re-estimation needs besides the data.
struct SolverOptions {
  OptimizerConfig optimizer;
  int asw_subsample = 0; // 0 = exact
  uint64_t seed = 0;
};

// Optimizer box for a K-cluster model on this data: pi, mu free; L diagonals
// floored; omega boxed; boxes kept near the data.
Bounds model_bounds(const Mat& X, int K);

std::vector<int> map_labels(const Responsibilities& P);

// sum_i p_ik log p_ik over all points (paper form, <= 0).
double cluster_entropy(const Responsibilities& P, int k);

// Cosine similarity of two responsibility columns.
double merge_similarity(const Responsibilities& P, int i, int k);

// Moment-matched merge of clusters i and k; survivor logits are reset to
// log tau so the softmax reproduces the proportions exactly.
Model merge_params(const Model& m, int i, int k);

// Drops MAP-share < threshold clusters one at a time, re-estimating after
// each removal.
Model remove_small_clusters(const Mat& X, Model m, const Hyper& h, double threshold,
                            const SolverOptions& opts,
                            std::vector<FitEvent>* events = nullptr,
                            ObjectiveTrace* trace = nullptr);

// Tries merge candidates in uncertainty order; accepts the first that
// strictly improves ASW and re-estimates. candidate_budget is decremented
// per evaluated candidate.
std::pair<Model, bool> merge_step(const Mat& X, const Model& m, const Hyper& h,
                                  const SolverOptions& opts, int* candidate_budget,
                                  FitEvent* event = nullptr,
                                  ObjectiveTrace* trace = nullptr);

// Full pipeline: initialize, lambda = 0 warm start, grid search with
// removal + merge passes per cell, best cell by ASW. Deterministic per seed.
FitResult fit(const Mat& X, const FitConfig& cfg);

} // namespace turtle
