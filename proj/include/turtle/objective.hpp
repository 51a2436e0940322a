#pragma once

#include "turtle/types.hpp"

namespace turtle {

// Per-point decomposition of the posterior: P = Qg + Qu where
//   Qg(i,k) = tau_k * omega_k * N_k(x_i) / S_i   (Gaussian share)
//   Qu(i,k) = tau_k * (1-omega_k) * U_k(x_i) / S_i (uniform share, 0 outside)
struct PosteriorDecomposition {
  Mat P;
  Mat Qg;
  Mat Qu;
  Vec phat; // column means of P
};

Responsibilities posterior(const Mat& X, const Model& m);
PosteriorDecomposition posterior_decomposed(const Mat& X, const Model& m);

// H(column means) - mean of row entropies, in [0, log K].
double mutual_information(const Mat& P);

double r1_penalty(const Model& m, double lambda1);
double r2_penalty(const Model& m, double lambda2);

// F = MI - R1 - R2
double objective(const Mat& X, const Model& m, const Hyper& h);

// Flat layout per cluster: [pi, omega, mu(D), lower(L) row-major, a(D), w(D)]
// where w = b - a.
int packed_size(int K, int D);
Vec pack(const Model& m);
Model unpack(const Vec& v, int K, int D);

// Analytic gradient of F in the packed coordinates.
Vec gradient(const Mat& X, const Model& m, const Hyper& h);
double objective_and_gradient(const Mat& X, const Model& m, const Hyper& h, Vec& grad);

} // namespace turtle
