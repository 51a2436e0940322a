#include "turtle/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "turtle/densities.hpp"
#include "turtle/metrics.hpp"
#include "turtle/objective.hpp"

namespace turtle {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_asw(const Mat& X, const std::vector<int>& labels, const SolverOptions& o) {
  return silhouette_or_neg_inf(X, labels, o.asw_subsample, o.seed);
}

void append_trace(ObjectiveTrace* trace, const std::string& phase, const OptTrace& t) {
  if (!trace) return;
  for (double v : t.objective) trace->emplace_back(phase, v);
}

Model reestimate(const Mat& X, const Model& m, const Hyper& h, const SolverOptions& opts,
                 const std::string& phase, ObjectiveTrace* trace) {
  const int K = m.order(), D = m.dim;
  auto fg = [&](const Vec& v, Vec& g) {
    return objective_and_gradient(X, unpack(v, K, D), h, g);
  };
  MaximizeResult r = maximize(fg, pack(m), model_bounds(X, K), opts.optimizer);
  append_trace(trace, phase, r.trace);
  return unpack(r.x, K, D);
}

std::vector<double> map_shares(const Mat& P) {
  std::vector<int> labels = map_labels(P);
  std::vector<double> share(P.cols(), 0.0);
  for (int l : labels) share[l] += 1.0 / static_cast<double>(P.rows());
  return share;
}

// Uncertainty ranking statistic: mean of p log p over the cluster's MAP
// members (most negative = most uncertain). The raw sum would favor large
// clusters.
std::vector<int> uncertainty_order(const Mat& P) {
  const int K = static_cast<int>(P.cols());
  std::vector<int> labels = map_labels(P);
  std::vector<double> stat(K, 0.0);
  std::vector<int> count(K, 0);
  for (int i = 0; i < P.rows(); ++i) {
    int k = labels[i];
    double p = std::max(P(i, k), kProbFloor);
    stat[k] += p * std::log(p);
    count[k]++;
  }
  for (int k = 0; k < K; ++k)
    stat[k] = count[k] > 0 ? stat[k] / count[k] : 0.0;
  std::vector<int> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return stat[a] < stat[b]; });
  return order;
}

} // namespace

Bounds model_bounds(const Mat& X, int K) {
  const int D = static_cast<int>(X.cols());
  const double inf = std::numeric_limits<double>::infinity();
  Vec dmin = X.colwise().minCoeff().transpose();
  Vec dmax = X.colwise().maxCoeff().transpose();
  Vec range = (dmax - dmin).cwiseMax(1e-9);

  Bounds b;
  b.lower = Vec::Constant(packed_size(K, D), -inf);
  b.upper = Vec::Constant(packed_size(K, D), inf);
  int p = 0;
  for (int k = 0; k < K; ++k) {
    ++p;                       // pi free
    b.lower[p] = kOmegaLo;
    b.upper[p] = kOmegaHi;
    ++p;
    p += D;                    // mu free
    for (int r = 0; r < D; ++r)
      for (int c = 0; c <= r; ++c) {
        if (r == c) b.lower[p] = kDiagFloor;
        ++p;
      }
    for (int d = 0; d < D; ++d) {
      b.lower[p] = dmin[d] - 0.1 * range[d];
      b.upper[p] = dmax[d] + 0.1 * range[d];
      ++p;
    }
    for (int d = 0; d < D; ++d) {
      b.lower[p] = 1e-6 * range[d];
      b.upper[p] = 1.2 * range[d];
      ++p;
    }
  }
  return b;
}

std::vector<int> map_labels(const Responsibilities& P) {
  std::vector<int> labels(P.rows());
  for (int i = 0; i < P.rows(); ++i) {
    // argmax with ties to the lowest index
    int arg = 0;
    double best = P(i, 0);
    for (int k = 1; k < P.cols(); ++k)
      if (P(i, k) > best) { best = P(i, k); arg = k; }
    labels[i] = arg;
  }
  return labels;
}

double cluster_entropy(const Responsibilities& P, int k) {
  double sum = 0.0;
  for (int i = 0; i < P.rows(); ++i) {
    double p = P(i, k);
    if (p > 0.0) sum += p * std::log(p);
  }
  return sum;
}

double merge_similarity(const Responsibilities& P, int i, int k) {
  double ni = P.col(i).norm(), nk = P.col(k).norm();
  if (ni == 0.0 || nk == 0.0) return 0.0;
  return P.col(i).dot(P.col(k)) / (ni * nk);
}

Model merge_params(const Model& m, int i, int k) {
  if (i == k || i < 0 || k < 0 || i >= m.order() || k >= m.order())
    throw std::invalid_argument("merge_params: bad cluster pair");
  const int D = m.dim;
  Vec tau = m.proportions();
  const ClusterParams& ci = m.clusters[i];
  const ClusterParams& ck = m.clusters[k];
  const double ti = tau[i], tk = tau[k], tm = ti + tk;

  ClusterParams merged;
  merged.pi = std::log(tm);
  merged.omega = std::clamp((ti * ci.omega + tk * ck.omega) / tm, kOmegaLo, kOmegaHi);
  Vec mu = (ti * ci.gaussian.mu + tk * ck.gaussian.mu) / tm;
  Mat si = ci.gaussian.covariance();
  Mat sk = ck.gaussian.covariance();
  Mat second = ti * (si + ci.gaussian.mu * ci.gaussian.mu.transpose()) +
               tk * (sk + ck.gaussian.mu * ck.gaussian.mu.transpose());
  Mat cov = second / tm - mu * mu.transpose();
  cov = 0.5 * (cov + cov.transpose());

  merged.gaussian.mu = mu;
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success) {
    cov.diagonal().array() += 1e-8 * cov.trace() / D;
    llt.compute(cov);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("merge_params: merged covariance not PD");
  }
  Mat cov_inv = llt.solve(Mat::Identity(D, D));
  Eigen::LLT<Mat> llt_prec(cov_inv);
  if (llt_prec.info() != Eigen::Success)
    throw std::runtime_error("merge_params: merged precision not PD");
  merged.gaussian.L = llt_prec.matrixL();
  for (int d = 0; d < D; ++d)
    merged.gaussian.L(d, d) = std::max(merged.gaussian.L(d, d), kDiagFloor);

  merged.uniform.a = (ti * ci.uniform.a + tk * ck.uniform.a) / tm;
  merged.uniform.b = (ti * ci.uniform.b + tk * ck.uniform.b) / tm;

  Model out;
  out.dim = D;
  for (int j = 0; j < m.order(); ++j) {
    if (j == k) continue;
    if (j == i) {
      out.clusters.push_back(merged);
    } else {
      ClusterParams c = m.clusters[j];
      c.pi = std::log(tau[j]);
      out.clusters.push_back(c);
    }
  }
  return out;
}

Model remove_small_clusters(const Mat& X, Model m, const Hyper& h, double threshold,
                            const SolverOptions& opts, std::vector<FitEvent>* events,
                            ObjectiveTrace* trace) {
  while (m.order() > 1) {
    Mat P = posterior(X, m);
    std::vector<double> share = map_shares(P);
    int worst = -1;
    double worst_share = threshold;
    for (int k = 0; k < m.order(); ++k) {
      if (share[k] < worst_share) {
        worst_share = share[k];
        worst = k;
      }
    }
    if (worst < 0) break; // every share >= threshold: no re-fit

    Model reduced;
    reduced.dim = m.dim;
    Vec survivors(m.order() - 1);
    int idx = 0;
    for (int k = 0; k < m.order(); ++k) {
      if (k == worst) continue;
      survivors[idx++] = m.clusters[k].pi;
      reduced.clusters.push_back(m.clusters[k]);
    }
    double lse = survivors.maxCoeff() +
                 std::log((survivors.array() - survivors.maxCoeff()).exp().sum());
    for (ClusterParams& c : reduced.clusters) c.pi -= lse;

    if (events)
      events->push_back({FitEvent::Kind::kRemoval, m.order(), reduced.order(), worst,
                         -1, 0.0, 0.0});
    m = reestimate(X, reduced, h, opts, "removal", trace);
  }
  return m;
}

std::pair<Model, bool> merge_step(const Mat& X, const Model& m, const Hyper& h,
                                  const SolverOptions& opts, int* candidate_budget,
                                  FitEvent* event, ObjectiveTrace* trace) {
  const int K = m.order();
  if (K < 2) return {m, false};
  Mat P = posterior(X, m);
  double current_asw = safe_asw(X, map_labels(P), opts);

  for (int cand : uncertainty_order(P)) {
    if (candidate_budget && *candidate_budget <= 0) break;
    // most similar partner by responsibility-column cosine
    int partner = -1;
    double best_sim = -1.0;
    for (int j = 0; j < K; ++j) {
      if (j == cand) continue;
      double s = merge_similarity(P, cand, j);
      if (s > best_sim) { best_sim = s; partner = j; }
    }
    if (partner < 0) continue;
    if (candidate_budget) --(*candidate_budget);

    Model merged = merge_params(m, std::min(cand, partner), std::max(cand, partner));
    std::vector<int> labels = map_labels(posterior(X, merged));
    double merged_asw = safe_asw(X, labels, opts);
    if (merged_asw > current_asw) {
      if (event)
        *event = {FitEvent::Kind::kMerge, K, merged.order(), cand, partner,
                  current_asw, merged_asw};
      Model refit = reestimate(X, merged, h, opts, "merge", trace);
      return {refit, true};
    }
  }
  return {m, false};
}

namespace {

struct CellOutcome {
  Model model;
  std::vector<int> labels;
  Mat P;
  double asw = kNegInf;
  ObjectiveTrace trace;
  std::vector<FitEvent> events;
  bool failed = false;
  std::string error;
};

CellOutcome solve_cell(const Mat& X, const Model& start, const Hyper& h,
                       double threshold, const SolverOptions& opts,
                       const std::string& phase) {
  CellOutcome out;
  try {
    Model m = reestimate(X, start, h, opts, phase + ".optimize", &out.trace);
    m = remove_small_clusters(X, m, h, threshold, opts, &out.events, &out.trace);

    int budget = 50;
    int accepted = 0;
    const int max_merges = std::max(0, m.order() - 1);
    while (m.order() > 1 && accepted < max_merges && budget > 0) {
      FitEvent ev;
      auto [next, ok] = merge_step(X, m, h, opts, &budget, &ev, &out.trace);
      if (!ok) break;
      out.events.push_back(ev);
      m = std::move(next);
      ++accepted;
    }

    out.model = std::move(m);
    out.P = posterior(X, out.model);
    out.labels = map_labels(out.P);
    out.asw = safe_asw(X, out.labels, opts);
  } catch (const std::exception& e) {
    out.failed = true;
    out.error = e.what();
  }
  return out;
}

} // namespace

FitResult fit(const Mat& X, const FitConfig& cfg) {
  const int N = static_cast<int>(X.rows());
  const int D = static_cast<int>(X.cols());
  if (N < 2 * D) throw std::invalid_argument("fit: need N >= 2 D");
  if (!X.allFinite()) throw std::invalid_argument("fit: non-finite data");

  SolverOptions opts;
  opts.optimizer = cfg.optimizer;
  opts.seed = cfg.seed;
  opts.asw_subsample = cfg.asw_subsample >= 0 ? cfg.asw_subsample
                                              : (N > 10000 ? 5000 : 0);
  const double threshold = cfg.removal_threshold > 0.0
                               ? cfg.removal_threshold
                               : std::max(0.01, 10.0 / N);

  InitConfig init_cfg = cfg.init;
  init_cfg.seed = cfg.seed;
  Model init_model = initialize(X, init_cfg);

  FitResult res;
  res.objective_trace.emplace_back("init", objective(X, init_model, Hyper{0.0, 0.0}));

  CellOutcome warm = solve_cell(X, init_model, Hyper{0.0, 0.0}, threshold, opts, "lambda0");
  if (warm.failed)
    throw std::runtime_error("fit: lambda=0 warm start failed: " + warm.error);

  struct GridCell {
    double l1, l2;
  };
  std::vector<GridCell> grid;
  for (double l1 : cfg.lambda1_grid)
    for (double l2 : cfg.lambda2_grid) grid.push_back({l1, l2});

  std::vector<CellOutcome> outcomes(grid.size());
#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < static_cast<int>(grid.size()); ++c) {
    if (grid[c].l1 == 0.0 && grid[c].l2 == 0.0) continue; // reuse the warm start
    std::ostringstream phase;
    phase << "cell(" << grid[c].l1 << "," << grid[c].l2 << ")";
    outcomes[c] = solve_cell(X, warm.model, Hyper{grid[c].l1, grid[c].l2}, threshold,
                             opts, phase.str());
  }

  int best = -1;
  double best_asw = kNegInf;
  res.cells.resize(grid.size());
  for (int c = 0; c < static_cast<int>(grid.size()); ++c) {
    const CellOutcome& oc =
        (grid[c].l1 == 0.0 && grid[c].l2 == 0.0) ? warm : outcomes[c];
    res.cells[c] = {grid[c].l1, grid[c].l2, oc.asw,
                    oc.failed ? 0 : oc.model.order(), oc.failed, oc.error};
    if (oc.failed) continue;
    if (best < 0 || oc.asw > best_asw) {
      best = c;
      best_asw = oc.asw;
    }
  }
  if (best < 0 && grid.empty()) {
    // no grid cells: the warm start is the result
    res.model = warm.model;
    res.labels = warm.labels;
    res.responsibilities = warm.P;
    res.asw = warm.asw;
    res.lambda1 = res.lambda2 = 0.0;
    res.objective_trace.insert(res.objective_trace.end(), warm.trace.begin(),
                               warm.trace.end());
    res.history = warm.events;
    return res;
  }
  if (best < 0) {
    std::string diag;
    for (const CellSummary& cs : res.cells) {
      std::ostringstream os;
      os << " (" << cs.lambda1 << "," << cs.lambda2 << "): " << cs.error << ";";
      diag += os.str();
    }
    throw std::runtime_error("fit: every grid cell failed:" + diag);
  }

  const CellOutcome& win =
      (grid[best].l1 == 0.0 && grid[best].l2 == 0.0) ? warm : outcomes[best];
  res.model = win.model;
  res.labels = win.labels;
  res.responsibilities = win.P;
  res.asw = win.asw;
  res.lambda1 = grid[best].l1;
  res.lambda2 = grid[best].l2;
  res.objective_trace.insert(res.objective_trace.end(), warm.trace.begin(),
                             warm.trace.end());
  res.history = warm.events;
  if (&win != &warm) {
    res.objective_trace.insert(res.objective_trace.end(), win.trace.begin(),
                               win.trace.end());
    res.history.insert(res.history.end(), win.events.begin(), win.events.end());
  }
  return res;
}

} // namespace turtle
