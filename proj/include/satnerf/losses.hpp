#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "satnerf/geodesy.hpp"
#include "satnerf/rpc.hpp"
#include "satnerf/tape.hpp"

namespace satnerf {

struct LossConfig {
  double beta_min = 0.05;  // must stay above exp(-eta)
  double eta = 3.0;
  double lambda_sc = 0.1 / 3.0;
  double lambda_ds = 1000.0 / 3.0;
  int beta_warmup_epochs = 2;   // plain mse before this epoch
  double ds_fraction = 0.25;    // depth term active in this first fraction
};

struct LossBreakdown {
  double l_rgb = 0, l_sc = 0, l_ds = 0, total = 0;
};

// Sparse surface point tied to a pixel of one training image.
struct DepthPoint {
  PixelCoord pixel;
  int32_t image_index = 0;
  Vec3 point;             // normalized coordinates
  double weight = 1.0;    // (0, 1]
  double reproj_err = 0;  // pixels
};

struct MismatchedBatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace losses {

using ad::Tape;

// mean over rays of |c - c_gt|^2 (squared norm over channels)
template <typename T>
typename Tape<T>::Id rgb_mse(Tape<T>& tape, typename Tape<T>::Id color,
                             typename Tape<T>::Id target);

// mean over rays of |c - c_gt|^2 / (2 b'^2) + (log b' + eta)/2, b' = b + bmin
template <typename T>
typename Tape<T>::Id rgb_uncertainty(Tape<T>& tape, typename Tape<T>::Id color,
                                     typename Tape<T>::Id target,
                                     typename Tape<T>::Id beta_ray, T beta_min,
                                     T eta);

// mean over rays of sum_i (T_i - s_i)^2 + (1 - sum_i T_i alpha_i s_i)
template <typename T>
typename Tape<T>::Id solar(Tape<T>& tape, typename Tape<T>::Id trans,
                           typename Tape<T>::Id weights,
                           typename Tape<T>::Id shading, size_t n_samples);

// mean over rays of w(r) (d(r) - target)^2
template <typename T>
typename Tape<T>::Id depth(Tape<T>& tape, typename Tape<T>::Id rendered_depth,
                           typename Tape<T>::Id target_depth,
                           typename Tape<T>::Id point_weights);

// Schedule predicates: which rgb branch applies and whether the depth term
// is still active.
bool rgb_uses_uncertainty(const LossConfig& cfg, bool use_beta, int64_t epoch);
bool ds_active(const LossConfig& cfg, int64_t iter, int64_t total_iters);

// total = l_rgb + lambda_sc * l_sc + lambda_ds * l_ds (absent terms skipped)
template <typename T>
typename Tape<T>::Id combine(Tape<T>& tape, typename Tape<T>::Id l_rgb,
                             typename Tape<T>::Id l_sc,
                             typename Tape<T>::Id l_ds, T lambda_sc,
                             T lambda_ds);

// w = clamp(1 - err/(max_err + eps), 0.05, 1); monotone non-increasing
std::vector<double> ds_weights(std::span<const double> reproj_errs);

}  // namespace losses
}  // namespace satnerf
