#pragma once

#include <vector>

#include "qmimo/scene.hpp"
#include "qmimo/types.hpp"

namespace qmimo {

// Sequential least-squares estimation of target positions and velocities
// from the recovered per-pair matrices X^_mn.
//
// Positions: a candidate position theta fixes the integer delay shift on
// every pair and hence the delayed-waveform matrix A_mn(theta). The summed
// residual sum_mn ||X^_mn - P_mn(theta) X^_mn||_F^2, with P the orthogonal
// projector onto the column span of A_mn(theta), is minimized over a finite
// search grid. Multiple targets are extracted greedily: after each pick the
// data are deflated by projecting out the columns found so far.
//
// Velocities: with theta^_p fixed, Xi^_mn = (A^H A)^-1 A^H X^_mn recovers
// the K slow-time rows beta_k * exp(j 2 pi f_k q T_PRI); the Doppler of each
// row is read off a zero-padded DFT peak with quadratic (log-magnitude)
// interpolation, and the velocity solves the linear system
// f^_mn = a_mn^T v with a_mn = (f_m / c) * (u_t^m + u_r^n) in closed form.

struct SearchGrid {
  double x_min = 0.0;
  double y_min = 0.0;
  double step = 10.0;  // [m]
  int nx = 40;
  int ny = 40;

  int size() const { return nx * ny; }
  // Row-major enumeration: y outer (rows), x inner, both ascending.
  Vec2 point(int index) const {
    const int iy = index / nx;
    const int ix = index % nx;
    return Vec2(x_min + ix * step, y_min + iy * step);
  }
  // Throws std::invalid_argument unless step > 0 and nx, ny >= 1.
  void validate() const;
};

struct EstimationResult {
  std::vector<Vec2> positions;   // one per target, extraction order
  std::vector<Vec2> velocities;  // matched to positions
  // Doppler estimates f^_mn per pair (row: pair_index) and target (col).
  RMat doppler;
  // Summed projection residual over the grid for the first extraction
  // stage, row-major; diagnostic for plots.
  RVec residual_map;
  int num_targets = 0;
};

// Residual ||X^ - A (A^H A)^-1 A^H X^||_F^2 for pair (m, n) with one
// delayed-waveform column per candidate position. Throws
// std::invalid_argument when a candidate delay leaves the data window or
// when two candidates share the same integer shift (A loses column rank).
double projection_residual(const CMat& x_hat,
                           const std::vector<Vec2>& candidates,
                           const SceneConfig& scene, int m, int n);

// Greedy grid search for k targets over all pairs. x_hats is indexed by
// scene.pair_index(m, n). Ties resolve to the first row-major grid point.
// residual_map, when non-null, receives the first-stage residual surface.
std::vector<Vec2> estimate_position(const std::vector<CMat>& x_hats,
                                    const SceneConfig& scene,
                                    const SearchGrid& grid, int k,
                                    RVec* residual_map = nullptr);

// Least-squares recovery of the K x Q slow-time matrix for pair (m, n) at
// fixed positions: Xi^ = (A^H A)^-1 A^H X^. Same error conditions as
// projection_residual.
CMat recover_xi(const CMat& x_hat, const std::vector<Vec2>& positions,
                const SceneConfig& scene, int m, int n);

// Magnitudes of the zero-padded (factor zero_pad) slow-time DFT, length
// zero_pad * Q, bin i at frequency i / (length * t_pri) modulo the PRF.
// Throws std::invalid_argument when zero_pad < 1 or the row is shorter
// than two samples.
RVec doppler_spectrum(const CVec& xi_row, int zero_pad = 8);

// Doppler frequency of one recovered slow-time row: peak of the zero-padded
// (factor zero_pad) DFT magnitude refined by quadratic interpolation of the
// log magnitudes of the three bins around the peak. Returns a frequency in
// (-1/(2 t_pri), 1/(2 t_pri)]. Throws std::invalid_argument on an all-zero
// row or zero_pad < 1.
double estimate_doppler(const CVec& xi_row, double t_pri, int zero_pad = 8);

// Closed-form normal-equation solve of f^_mn = a_mn^T v for one target at
// position theta_p, given one Doppler estimate per pair (indexed by
// scene.pair_index). Throws std::runtime_error when the geometry leaves the
// 2x2 normal matrix singular (all direction sums collinear).
Vec2 estimate_velocity(const RVec& dopplers, const Vec2& theta_p,
                       const SceneConfig& scene);

// Full estimation chain: positions, per-pair/target Dopplers, velocities.
EstimationResult estimate_all(const std::vector<CMat>& x_hats,
                              const SceneConfig& scene, const SearchGrid& grid,
                              int k, int zero_pad = 8);

}  // namespace qmimo
