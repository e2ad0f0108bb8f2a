#include "qmimo/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <unsupported/Eigen/FFT>

namespace qmimo {

void SearchGrid::validate() const {
  if (!(step > 0.0)) throw std::invalid_argument("grid: step must be positive");
  if (nx < 1 || ny < 1) throw std::invalid_argument("grid: nx, ny must be >= 1");
}

namespace {

// Integer delay shift of a candidate position on pair (m, n); throws when
// the delayed waveform would leave the data window.
int candidate_shift(const SceneConfig& scene, const Vec2& p, int m, int n) {
  const double tau = bistatic_delay(scene, p, m, n);
  const int shift = static_cast<int>(std::floor(tau / scene.ts()));
  if (tau > scene.tau_max ||
      shift + scene.waveform_len() > scene.data_len()) {
    throw std::invalid_argument(
        "estimator: candidate delay leaves the data window");
  }
  return shift;
}

// Delayed-waveform matrix A for a set of candidate positions on pair (m, n).
CMat build_a(const SceneConfig& scene, const std::vector<Vec2>& candidates,
             int m, int n, bool reject_duplicates) {
  const int l_len = scene.data_len();
  const int n_len = scene.waveform_len();
  const RVec s = make_waveform(scene, m);
  CMat a = CMat::Zero(l_len, static_cast<int>(candidates.size()));
  std::set<int> seen;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const int shift = candidate_shift(scene, candidates[k], m, n);
    if (reject_duplicates && !seen.insert(shift).second) {
      throw std::invalid_argument(
          "estimator: two candidates share an integer delay (rank-deficient)");
    }
    for (int i = 0; i < n_len; ++i) {
      a(shift + i, static_cast<int>(k)) = cxd(s(i), 0.0);
    }
  }
  return a;
}

// Least-squares coefficients (A^H A)^-1 A^H X via Cholesky.
CMat ls_solve(const CMat& a, const CMat& x) {
  const CMat gram = a.adjoint() * a;
  Eigen::LLT<CMat> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("estimator: waveform matrix is rank-deficient");
  }
  return llt.solve(a.adjoint() * x);
}

// Energy captured by a single shifted waveform: ||s^T X[shift..shift+N)||^2
// for every admissible shift. The single-column projector residual is then
// ||X||^2 - energy/N, which lets the grid search score all candidates from
// one table per pair.
RVec shift_energy_table(const CMat& x, const RVec& s) {
  const int n_len = static_cast<int>(s.size());
  const int max_shift = static_cast<int>(x.rows()) - n_len;
  RVec table = RVec::Zero(max_shift + 1);
  for (int shift = 0; shift <= max_shift; ++shift) {
    CVec corr = CVec::Zero(x.cols());
    for (int i = 0; i < n_len; ++i) {
      corr += s(i) * x.row(shift + i).transpose();
    }
    table(shift) = corr.squaredNorm();
  }
  return table;
}

}  // namespace

double projection_residual(const CMat& x_hat,
                           const std::vector<Vec2>& candidates,
                           const SceneConfig& scene, int m, int n) {
  if (candidates.empty()) {
    throw std::invalid_argument("projection_residual: no candidates");
  }
  const CMat a = build_a(scene, candidates, m, n, /*reject_duplicates=*/true);
  const CMat w = ls_solve(a, x_hat);
  return (x_hat - a * w).squaredNorm();
}

std::vector<Vec2> estimate_position(const std::vector<CMat>& x_hats,
                                    const SceneConfig& scene,
                                    const SearchGrid& grid, int k,
                                    RVec* residual_map) {
  grid.validate();
  if (k < 1) throw std::invalid_argument("estimate_position: k must be >= 1");
  const int pairs = scene.num_pairs();
  if (static_cast<int>(x_hats.size()) != pairs) {
    throw std::invalid_argument("estimate_position: one matrix per pair required");
  }
  const int n_len = scene.waveform_len();
  const int cells = grid.size();

  // Integer shifts per (pair, grid point), computed once.
  std::vector<std::vector<int>> shifts(pairs, std::vector<int>(cells));
  for (int m = 0; m < scene.num_tx(); ++m) {
    for (int n = 0; n < scene.num_rx(); ++n) {
      const int pi = scene.pair_index(m, n);
      for (int idx = 0; idx < cells; ++idx) {
        shifts[pi][idx] = candidate_shift(scene, grid.point(idx), m, n);
      }
    }
  }

  std::vector<Vec2> found;
  for (int stage = 0; stage < k; ++stage) {
    // Deflate by the projector of the positions found so far, then score
    // candidates with the single-column residual ||D||^2 - energy/N.
    RVec total = RVec::Zero(cells);
    for (int m = 0; m < scene.num_tx(); ++m) {
      const RVec s = make_waveform(scene, m);
      for (int n = 0; n < scene.num_rx(); ++n) {
        const int pi = scene.pair_index(m, n);
        CMat d = x_hats[pi];
        if (!found.empty()) {
          const CMat a_found =
              build_a(scene, found, m, n, /*reject_duplicates=*/false);
          // Column-pivoted QR tolerates duplicate shifts among the found
          // targets (the projector is still well defined).
          const CMat w = a_found.colPivHouseholderQr().solve(d);
          d -= a_found * w;
        }
        const RVec table = shift_energy_table(d, s);
        const double base = d.squaredNorm();
        for (int idx = 0; idx < cells; ++idx) {
          total(idx) += base - table(shifts[pi][idx]) / n_len;
        }
      }
    }
    int best = 0;
    for (int idx = 1; idx < cells; ++idx) {
      if (total(idx) < total(best)) best = idx;  // strict: first index wins ties
    }
    if (stage == 0 && residual_map != nullptr) *residual_map = total;
    found.push_back(grid.point(best));
  }
  return found;
}

CMat recover_xi(const CMat& x_hat, const std::vector<Vec2>& positions,
                const SceneConfig& scene, int m, int n) {
  if (positions.empty()) {
    throw std::invalid_argument("recover_xi: no positions");
  }
  const CMat a = build_a(scene, positions, m, n, /*reject_duplicates=*/true);
  return ls_solve(a, x_hat);
}

RVec doppler_spectrum(const CVec& xi_row, int zero_pad) {
  if (zero_pad < 1) {
    throw std::invalid_argument("doppler_spectrum: zero_pad must be >= 1");
  }
  const int q = static_cast<int>(xi_row.size());
  if (q < 2) throw std::invalid_argument("doppler_spectrum: row too short");
  const int p = q * zero_pad;
  std::vector<cxd> in(static_cast<std::size_t>(p), cxd(0.0, 0.0));
  for (int i = 0; i < q; ++i) in[static_cast<std::size_t>(i)] = xi_row(i);
  std::vector<cxd> out;
  Eigen::FFT<double> fft;
  fft.fwd(out, in);
  RVec mags(p);
  for (int i = 0; i < p; ++i) mags(i) = std::abs(out[static_cast<std::size_t>(i)]);
  return mags;
}

double estimate_doppler(const CVec& xi_row, double t_pri, int zero_pad) {
  if (!(t_pri > 0.0)) {
    throw std::invalid_argument("estimate_doppler: t_pri must be positive");
  }
  if (xi_row.size() > 0 && xi_row.cwiseAbs().maxCoeff() == 0.0) {
    throw std::invalid_argument("estimate_doppler: all-zero slow-time row");
  }
  const RVec mags = doppler_spectrum(xi_row, zero_pad);
  const int p = static_cast<int>(mags.size());

  int peak = 0;
  double peak_mag = 0.0;
  for (int i = 0; i < p; ++i) {
    if (mags(i) > peak_mag) {
      peak_mag = mags(i);
      peak = i;
    }
  }

  // Quadratic interpolation of log magnitudes around the peak. Wrapped
  // neighbors keep the parabola valid at the spectrum edges.
  const auto mag_at = [&](int i) {
    const int w = ((i % p) + p) % p;
    return std::max(mags(w), peak_mag * 1e-15);
  };
  const double lm = std::log(mag_at(peak - 1));
  const double cm = std::log(mag_at(peak));
  const double rm = std::log(mag_at(peak + 1));
  const double den = lm - 2.0 * cm + rm;
  double delta = 0.0;
  if (std::abs(den) > 1e-12) {
    delta = 0.5 * (lm - rm) / den;
    delta = std::clamp(delta, -0.5, 0.5);
  }

  double f = (peak + delta) / (p * t_pri);
  // Map into the principal interval (-1/(2 t_pri), 1/(2 t_pri)].
  const double fs = 1.0 / t_pri;
  while (f > 0.5 * fs) f -= fs;
  while (f <= -0.5 * fs) f += fs;
  return f;
}

Vec2 estimate_velocity(const RVec& dopplers, const Vec2& theta_p,
                       const SceneConfig& scene) {
  if (dopplers.size() != scene.num_pairs()) {
    throw std::invalid_argument("estimate_velocity: one Doppler per pair required");
  }
  double m00 = 0.0, m01 = 0.0, m11 = 0.0, r0 = 0.0, r1 = 0.0;
  for (int m = 0; m < scene.num_tx(); ++m) {
    for (int n = 0; n < scene.num_rx(); ++n) {
      const Vec2 dt = theta_p - scene.tx_positions[m];
      const Vec2 dr = theta_p - scene.rx_positions[n];
      const double nt = dt.norm();
      const double nr = dr.norm();
      if (nt == 0.0 || nr == 0.0) {
        throw std::runtime_error(
            "estimate_velocity: position coincides with an antenna");
      }
      const Vec2 a = scene.carrier(m) / scene.c * (dt / nt + dr / nr);
      const double f = dopplers(scene.pair_index(m, n));
      m00 += a(0) * a(0);
      m01 += a(0) * a(1);
      m11 += a(1) * a(1);
      r0 += a(0) * f;
      r1 += a(1) * f;
    }
  }
  const double det = m00 * m11 - m01 * m01;
  if (!(std::abs(det) > 1e-12 * std::max(m00 * m11, 1e-300))) {
    throw std::runtime_error(
        "estimate_velocity: degenerate geometry, direction sums collinear");
  }
  return Vec2((m11 * r0 - m01 * r1) / det, (m00 * r1 - m01 * r0) / det);
}

EstimationResult estimate_all(const std::vector<CMat>& x_hats,
                              const SceneConfig& scene, const SearchGrid& grid,
                              int k, int zero_pad) {
  EstimationResult res;
  res.num_targets = k;
  res.positions = estimate_position(x_hats, scene, grid, k, &res.residual_map);
  res.doppler.resize(scene.num_pairs(), k);
  for (int m = 0; m < scene.num_tx(); ++m) {
    for (int n = 0; n < scene.num_rx(); ++n) {
      const int pi = scene.pair_index(m, n);
      const CMat xi = recover_xi(x_hats[pi], res.positions, scene, m, n);
      for (int t = 0; t < k; ++t) {
        res.doppler(pi, t) =
            estimate_doppler(xi.row(t).transpose(), scene.t_pri, zero_pad);
      }
    }
  }
  res.velocities.resize(static_cast<std::size_t>(k));
  for (int t = 0; t < k; ++t) {
    res.velocities[static_cast<std::size_t>(t)] =
        estimate_velocity(res.doppler.col(t), res.positions[static_cast<std::size_t>(t)],
                          scene);
  }
  return res;
}

}  // namespace qmimo
