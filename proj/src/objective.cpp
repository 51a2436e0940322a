#include "turtle/objective.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "turtle/densities.hpp"

namespace turtle {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr int kChunk = 256; // fixed reduction granularity, independent of thread count

inline double xlogx(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

struct ClusterCache {
  double log_tau;
  double log_omega;
  double log_1m_omega;
  double neg_log_vol; // log of the uniform density inside the box
  double logdet_L;
};

std::vector<ClusterCache> make_cache(const Model& m) {
  const int K = m.order();
  Vec log_tau = log_softmax(m.logits());
  std::vector<ClusterCache> cc(K);
  for (int k = 0; k < K; ++k) {
    const ClusterParams& c = m.clusters[k];
    cc[k].log_tau = log_tau[k];
    cc[k].log_omega = std::log(c.omega);
    cc[k].log_1m_omega = std::log1p(-c.omega);
    cc[k].neg_log_vol = -c.uniform.log_volume();
    cc[k].logdet_L = c.gaussian.L.diagonal().array().log().sum();
  }
  return cc;
}

// Fills one row of P/Qg/Qu. Returns the row entropy.
inline double point_row(const Model& m, const std::vector<ClusterCache>& cc,
                        const Eigen::Ref<const Vec>& x, int K, int D,
                        double* prow, double* qgrow, double* qurow) {
  double mx = -std::numeric_limits<double>::infinity();
  // log numerators of the Gaussian and uniform shares
  thread_local std::vector<double> lg, lu;
  lg.assign(K, 0.0);
  lu.assign(K, 0.0);
  for (int k = 0; k < K; ++k) {
    const ClusterParams& c = m.clusters[k];
    Vec t = c.gaussian.L.transpose() * (x - c.gaussian.mu);
    double logN = -0.5 * D * kLog2Pi + cc[k].logdet_L - 0.5 * t.squaredNorm();
    lg[k] = cc[k].log_tau + cc[k].log_omega + logN;
    lu[k] = c.uniform.contains(x)
                ? cc[k].log_tau + cc[k].log_1m_omega + cc[k].neg_log_vol
                : -std::numeric_limits<double>::infinity();
    mx = std::max(mx, std::max(lg[k], lu[k]));
  }
  if (!std::isfinite(mx)) {
    // all densities vanished: fall back to the uniform row
    for (int k = 0; k < K; ++k) {
      prow[k] = 1.0 / K;
      qgrow[k] = qurow[k] = 0.0;
    }
    return std::log(static_cast<double>(K));
  }
  double sum = 0.0;
  for (int k = 0; k < K; ++k) {
    double eg = std::exp(lg[k] - mx);
    double eu = std::isfinite(lu[k]) ? std::exp(lu[k] - mx) : 0.0;
    qgrow[k] = eg;
    qurow[k] = eu;
    sum += eg + eu;
  }
  double ent = 0.0;
  for (int k = 0; k < K; ++k) {
    qgrow[k] /= sum;
    qurow[k] /= sum;
    prow[k] = qgrow[k] + qurow[k];
    ent -= xlogx(prow[k]);
  }
  return ent;
}

} // namespace

Responsibilities posterior(const Mat& X, const Model& m) {
  return posterior_decomposed(X, m).P;
}

PosteriorDecomposition posterior_decomposed(const Mat& X, const Model& m) {
  const int N = static_cast<int>(X.rows());
  const int D = static_cast<int>(X.cols());
  const int K = m.order();
  if (N < 1 || D != m.dim) throw std::invalid_argument("posterior: dimension mismatch");

  PosteriorDecomposition out;
  out.P.resize(N, K);
  out.Qg.resize(N, K);
  out.Qu.resize(N, K);
  auto cc = make_cache(m);

  const int nchunks = (N + kChunk - 1) / kChunk;
  Mat chunk_colsum = Mat::Zero(nchunks, K);

#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < nchunks; ++c) {
    const int lo = c * kChunk, hi = std::min(N, lo + kChunk);
    thread_local std::vector<double> prow, qg, qu;
    prow.resize(K);
    qg.resize(K);
    qu.resize(K);
    for (int i = lo; i < hi; ++i) {
      point_row(m, cc, X.row(i).transpose(), K, D, prow.data(), qg.data(), qu.data());
      for (int k = 0; k < K; ++k) {
        out.P(i, k) = prow[k];
        out.Qg(i, k) = qg[k];
        out.Qu(i, k) = qu[k];
        chunk_colsum(c, k) += prow[k];
      }
    }
  }
  out.phat = Vec::Zero(K);
  for (int c = 0; c < nchunks; ++c) out.phat += chunk_colsum.row(c).transpose();
  out.phat /= static_cast<double>(N);
  return out;
}

double mutual_information(const Mat& P) {
  const int N = static_cast<int>(P.rows());
  const int K = static_cast<int>(P.cols());
  Vec phat = P.colwise().mean();
  double h_marginal = 0.0;
  for (int k = 0; k < K; ++k) h_marginal -= xlogx(phat[k]);
  double h_cond = 0.0;
  for (int i = 0; i < N; ++i)
    for (int k = 0; k < K; ++k) h_cond -= xlogx(P(i, k));
  return h_marginal - h_cond / N;
}

double r1_penalty(const Model& m, double lambda1) {
  if (lambda1 == 0.0) return 0.0;
  return -lambda1 * log_softmax(m.logits()).sum();
}

double r2_penalty(const Model& m, double lambda2) {
  if (lambda2 == 0.0) return 0.0;
  double sum = 0.0;
  for (const ClusterParams& c : m.clusters) {
    Vec mid = 0.5 * (c.uniform.a + c.uniform.b) - c.gaussian.mu;
    sum += (c.gaussian.L.transpose() * mid).squaredNorm();
  }
  return lambda2 * sum;
}

int packed_size(int K, int D) { return K * (2 + 3 * D + D * (D + 1) / 2); }

Vec pack(const Model& m) {
  const int K = m.order(), D = m.dim;
  Vec v(packed_size(K, D));
  int p = 0;
  for (const ClusterParams& c : m.clusters) {
    v[p++] = c.pi;
    v[p++] = c.omega;
    for (int d = 0; d < D; ++d) v[p++] = c.gaussian.mu[d];
    for (int r = 0; r < D; ++r)
      for (int col = 0; col <= r; ++col) v[p++] = c.gaussian.L(r, col);
    for (int d = 0; d < D; ++d) v[p++] = c.uniform.a[d];
    for (int d = 0; d < D; ++d) v[p++] = c.uniform.b[d] - c.uniform.a[d];
  }
  return v;
}

Model unpack(const Vec& v, int K, int D) {
  if (v.size() != packed_size(K, D))
    throw std::invalid_argument("unpack: length mismatch");
  Model m;
  m.dim = D;
  m.clusters.resize(K);
  int p = 0;
  for (ClusterParams& c : m.clusters) {
    c.pi = v[p++];
    c.omega = v[p++];
    c.gaussian.mu.resize(D);
    for (int d = 0; d < D; ++d) c.gaussian.mu[d] = v[p++];
    c.gaussian.L = Mat::Zero(D, D);
    for (int r = 0; r < D; ++r)
      for (int col = 0; col <= r; ++col) c.gaussian.L(r, col) = v[p++];
    c.uniform.a.resize(D);
    c.uniform.b.resize(D);
    for (int d = 0; d < D; ++d) c.uniform.a[d] = v[p++];
    for (int d = 0; d < D; ++d) c.uniform.b[d] = c.uniform.a[d] + v[p++];
  }
  return m;
}

double objective(const Mat& X, const Model& m, const Hyper& h) {
  PosteriorDecomposition pd = posterior_decomposed(X, m);
  return mutual_information(pd.P) - r1_penalty(m, h.lambda1) - r2_penalty(m, h.lambda2);
}

Vec gradient(const Mat& X, const Model& m, const Hyper& h) {
  Vec g;
  objective_and_gradient(X, m, h, g);
  return g;
}

double objective_and_gradient(const Mat& X, const Model& m, const Hyper& h, Vec& grad) {
  const int N = static_cast<int>(X.rows());
  const int D = static_cast<int>(X.cols());
  const int K = m.order();
  if (D != m.dim) throw std::invalid_argument("objective_and_gradient: dimension mismatch");

  PosteriorDecomposition pd = posterior_decomposed(X, m);

  Vec log_phat(K);
  for (int k = 0; k < K; ++k) log_phat[k] = std::log(std::max(pd.phat[k], kProbFloor));

  // Sufficient sums for every gradient block:
  //   spw_k  = sum_i p_ki W_ki
  //   sqw_k  = sum_i q_ki W_ki           (q = Gaussian share)
  //   suw_k  = sum_i u_ki W_ki           (u = uniform share, 0 outside the box)
  //   svw_k  = sum_i q_ki W_ki (x_i - mu_k)
  //   smw_k  = sum_i q_ki W_ki (x_i - mu_k)(x_i - mu_k)^T
  // with W_ki = log(p_ki/phat_k) - sum_c p_ci log(p_ci/phat_c).
  const int nchunks = (N + kChunk - 1) / kChunk;
  const int scalars = 3 * K + K * D + K * D * D;
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMat partial = RowMat::Zero(nchunks, scalars);

#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < nchunks; ++c) {
    const int lo = c * kChunk, hi = std::min(N, lo + kChunk);
    double* spw = partial.row(c).data();
    double* sqw = spw + K;
    double* suw = sqw + K;
    double* svw = suw + K;
    double* smw = svw + K * D;
    thread_local std::vector<double> logratio;
    logratio.resize(K);
    for (int i = lo; i < hi; ++i) {
      double ei = 0.0;
      for (int k = 0; k < K; ++k) {
        double p = pd.P(i, k);
        logratio[k] = std::log(std::max(p, kProbFloor)) - log_phat[k];
        ei += p * logratio[k];
      }
      for (int k = 0; k < K; ++k) {
        const double w = logratio[k] - ei;
        const double qw = pd.Qg(i, k) * w;
        spw[k] += pd.P(i, k) * w;
        sqw[k] += qw;
        suw[k] += pd.Qu(i, k) * w;
        double* sv = svw + k * D;
        double* sm = smw + k * D * D;
        for (int r = 0; r < D; ++r) {
          double vr = X(i, r) - m.clusters[k].gaussian.mu[r];
          sv[r] += qw * vr;
          for (int col = 0; col <= r; ++col)
            sm[r * D + col] += qw * vr * (X(i, col) - m.clusters[k].gaussian.mu[col]);
        }
      }
    }
  }
  Vec sums = Vec::Zero(scalars);
  for (int c = 0; c < nchunks; ++c) sums += partial.row(c).transpose();

  Vec tau = m.proportions();
  grad.setZero(packed_size(K, D));
  int p = 0;
  for (int k = 0; k < K; ++k) {
    const ClusterParams& c = m.clusters[k];
    const double spw = sums[k], sqw = sums[K + k], suw = sums[2 * K + k];
    Eigen::Map<const Vec> svw(sums.data() + 3 * K + k * D, D);
    // sm was accumulated row-major with only the lower triangle filled
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        smw_lower(sums.data() + 3 * K + K * D + k * D * D, D, D);
    Mat smw = Mat(smw_lower).selfadjointView<Eigen::Lower>();

    Mat prec = c.gaussian.precision();
    Vec mid = 0.5 * (c.uniform.a + c.uniform.b) - c.gaussian.mu;
    Vec pm = prec * mid;
    Vec width = c.uniform.b - c.uniform.a;

    grad[p++] = spw / N + h.lambda1 * (1.0 - K * tau[k]);
    grad[p++] = (sqw / c.omega - suw / (1.0 - c.omega)) / N;

    Vec dmu = prec * svw / N + 2.0 * h.lambda2 * pm;
    for (int d = 0; d < D; ++d) grad[p++] = dmu[d];

    // dL = (sqw * L^-T - smw * L)/N - 2 lambda2 (mid mid^T) L, lower triangle;
    // the lower-masked L^-T is just diag(1/L_jj).
    Mat dL = (-(smw * c.gaussian.L) / N) - 2.0 * h.lambda2 * (mid * (mid.transpose() * c.gaussian.L));
    dL.diagonal() += (sqw / N) * c.gaussian.L.diagonal().cwiseInverse();
    for (int r = 0; r < D; ++r)
      for (int col = 0; col <= r; ++col) grad[p++] = dL(r, col);

    // Appendix (a,b) blocks, then the chain rule into (a, w = b - a):
    // moving a with w fixed shifts the box, so the MI parts cancel.
    for (int d = 0; d < D; ++d) {
      double dI_b = -suw / (N * width[d]);
      double dI_a = -dI_b;
      grad[p++] = (dI_a + dI_b) - 2.0 * h.lambda2 * pm[d];
    }
    for (int d = 0; d < D; ++d) {
      double dI_b = -suw / (N * width[d]);
      grad[p++] = dI_b - h.lambda2 * pm[d];
    }
  }

  double mi = mutual_information(pd.P);
  return mi - r1_penalty(m, h.lambda1) - r2_penalty(m, h.lambda2);
}

} // namespace turtle
