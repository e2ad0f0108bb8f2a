#pragma once

#include <vector>

#include "qmimo/types.hpp"

namespace qmimo {

// Quantized robust PCA: recovery of a low-rank matrix X and a sparse
// corruption T from quantized, corrupted observations Z, by the accelerated
// proximal gradient method applied to
//
//   min_{X,T}  g(X, T) + mu * ||X||_* + lambda * ||T||_1
//
// where g = (1/2) * similarity(Z, X + T) and the similarity penalizes only
// the part of X + T that leaves the quantization cell of Z: with
// rho(x) = max(-x, 0) and V = X + T, each real/imaginary part contributes
// rho(part(Z - V) + delta/2)^2 + rho(part(V - Z) + delta/2)^2, i.e. the
// squared distance beyond a deadzone of half-width delta/2 around Z. Any V
// that quantizes back to Z has zero penalty, so consistency (not proximity)
// is what is enforced.
//
// Each iteration extrapolates with the usual accelerated momentum sequence
// zeta_l = (1 + sqrt(4 zeta_{l-1}^2 + 1)) / 2, takes a gradient step of size
// `step` on both blocks (the gradients coincide since g depends on X + T
// only), and applies the proximal maps: singular value thresholding at
// mu*step for X, elementwise per-part soft thresholding at lambda*step for T.
// The per-part gradient is 1-Lipschitz in V, hence at most 2-Lipschitz in the
// stacked (X, T), so any step <= 1/2 converges; 1/4 is the safe default and
// larger steps require the backtracking line search.

struct QrpcaConfig {
  double delta_q = 0.0;     // quantizer cell width (deadzone = delta_q / 2)
  double mu = 0.0;          // nuclear weight; <= 0 selects delta_q * sqrt(max(L, Q))
  double lambda = 0.0;      // l1 weight; <= 0 selects delta_q
  double step = 0.25;       // gradient step size
  int max_iter = 500;       // iteration cap
  double tol = 1e-6;        // relative-change stopping threshold
  bool backtracking = false;  // halve step until sufficient decrease holds

  // Throws std::invalid_argument when delta_q <= 0 (with defaulted weights),
  // max_iter < 1, tol <= 0, step <= 0, or step > 0.25 without backtracking.
  void validate() const;
};

struct QrpcaSolution {
  CMat x_hat;
  CMat t_hat;
  int iterations = 0;    // iterations actually run
  bool converged = false;  // relative change of both blocks fell below tol
  // Objective g + mu*||X||_* + lambda*||T||_1 at the zero initialization
  // (entry 0) and after every iteration.
  std::vector<double> objective_trace;
};

// Hinge rho(x) = max(-x, 0), applied elementwise.
double hinge(double x);
RMat hinge(const RMat& x);

// Quantization-consistency similarity between the observed Z and a candidate
// V: sum of squared per-part excursions beyond the deadzone of half-width
// delta_q/2 around Z. Zero iff V lies inside Z's quantization cells.
double similarity(const CMat& z, const CMat& v, double delta_q);

// Gradient of (1/2)*similarity with respect to V, assembled per part:
// rho(part(Z - V) + delta/2) - rho(part(V - Z) + delta/2) for both the real
// and imaginary planes. Zero inside the deadzone; slope 1 outside.
CMat grad_similarity(const CMat& z, const CMat& v, double delta_q);

// Singular value thresholding: U * max(S - eps, 0) * V^H for the economy SVD
// X = U S V^H. The proximal map of eps * ||.||_*.
CMat svt(const CMat& x, double eps);

// Elementwise soft threshold applied independently to real and imaginary
// parts: sign(x) * max(|x| - eps, 0). The proximal map of eps * ||.||_1 with
// the l1 norm summing both parts.
CMat soft_threshold(const CMat& t, double eps);

// Momentum recursion zeta_l = (1 + sqrt(4 zeta_prev^2 + 1)) / 2.
double momentum_next(double zeta_prev);

// Nuclear norm (sum of singular values).
double nuclear_norm(const CMat& x);

// l1 norm summing absolute real and imaginary parts of every entry; the
// norm whose proximal map is the per-part soft threshold.
double l1_norm_parts(const CMat& x);

// Count of singular values above rel_tol times the largest.
int numerical_rank(const CMat& x, double rel_tol = 1e-9);

// Solves the quantized robust PCA problem on observations z.
// Throws std::runtime_error if an iterate stops being finite.
QrpcaSolution apg_qrpca(const CMat& z, QrpcaConfig cfg);

// Classic robust PCA baseline on unquantized observations y: identical
// iteration with the data term replaced by (1/2) * ||Y - X - T||_F^2.
QrpcaSolution rpca_baseline(const CMat& y, QrpcaConfig cfg);

}  // namespace qmimo
