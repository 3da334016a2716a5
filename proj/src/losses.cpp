#include "satnerf/losses.hpp"

#include <algorithm>
#include <cmath>

namespace satnerf::losses {

template <typename T>
typename Tape<T>::Id rgb_mse(Tape<T>& tape, typename Tape<T>::Id color,
                             typename Tape<T>::Id target) {
  const auto diff = tape.sub(color, target);
  return tape.mean(tape.sum_cols(tape.square(diff)));
}

template <typename T>
typename Tape<T>::Id rgb_uncertainty(Tape<T>& tape, typename Tape<T>::Id color,
                                     typename Tape<T>::Id target,
                                     typename Tape<T>::Id beta_ray, T beta_min,
                                     T eta) {
  const auto resid = tape.sum_cols(tape.square(tape.sub(color, target)));
  const auto bprime = tape.scalar_add(beta_ray, beta_min);
  const auto logb = tape.log(bprime);
  // 1/(2 b'^2) = 0.5 exp(-2 log b')
  const auto inv2b2 =
      tape.scalar_mul(tape.exp(tape.scalar_mul(logb, T(-2))), T(0.5));
  const auto data_term = tape.mul(resid, inv2b2);
  const auto reg_term = tape.scalar_mul(tape.scalar_add(logb, eta), T(0.5));
  return tape.mean(tape.add(data_term, reg_term));
}

template <typename T>
typename Tape<T>::Id solar(Tape<T>& tape, typename Tape<T>::Id trans,
                           typename Tape<T>::Id weights,
                           typename Tape<T>::Id shading, size_t n_samples) {
  const auto match = tape.sum_groups(
      tape.square(tape.sub(trans, shading)), n_samples);
  const auto absorbed =
      tape.sum_groups(tape.mul(weights, shading), n_samples);
  ad::Tensor<T> ones(tape.value(absorbed).rows, 1);
  for (auto& x : ones.v) x = T(1);
  const auto residual = tape.sub(tape.constant(std::move(ones)), absorbed);
  return tape.mean(tape.add(match, residual));
}

template <typename T>
typename Tape<T>::Id depth(Tape<T>& tape, typename Tape<T>::Id rendered_depth,
                           typename Tape<T>::Id target_depth,
                           typename Tape<T>::Id point_weights) {
  const auto& d = tape.value(rendered_depth);
  const auto& t = tape.value(target_depth);
  if (d.rows != t.rows)
    throw MismatchedBatch("loss_depth: ray/point count mismatch");
  const auto resid = tape.square(tape.sub(rendered_depth, target_depth));
  return tape.mean(tape.mul(point_weights, resid));
}

bool rgb_uses_uncertainty(const LossConfig& cfg, bool use_beta,
                          int64_t epoch) {
  return use_beta && epoch >= cfg.beta_warmup_epochs;
}

bool ds_active(const LossConfig& cfg, int64_t iter, int64_t total_iters) {
  return iter < static_cast<int64_t>(cfg.ds_fraction *
                                     static_cast<double>(total_iters));
}

template <typename T>
typename Tape<T>::Id combine(Tape<T>& tape, typename Tape<T>::Id l_rgb,
                             typename Tape<T>::Id l_sc,
                             typename Tape<T>::Id l_ds, T lambda_sc,
                             T lambda_ds) {
  auto total = l_rgb;
  if (l_sc >= 0) total = tape.add(total, tape.scalar_mul(l_sc, lambda_sc));
  if (l_ds >= 0) total = tape.add(total, tape.scalar_mul(l_ds, lambda_ds));
  return total;
}

std::vector<double> ds_weights(std::span<const double> reproj_errs) {
  double max_err = 0;
  for (const double e : reproj_errs) max_err = std::max(max_err, e);
  std::vector<double> w(reproj_errs.size());
  for (size_t i = 0; i < w.size(); ++i)
    w[i] = std::clamp(1.0 - reproj_errs[i] / (max_err + 1e-9), 0.05, 1.0);
  return w;
}

#define INSTANTIATE(T)                                                        \
  template Tape<T>::Id rgb_mse<T>(Tape<T>&, Tape<T>::Id, Tape<T>::Id);        \
  template Tape<T>::Id rgb_uncertainty<T>(Tape<T>&, Tape<T>::Id, Tape<T>::Id, \
                                          Tape<T>::Id, T, T);                 \
  template Tape<T>::Id solar<T>(Tape<T>&, Tape<T>::Id, Tape<T>::Id,           \
                                Tape<T>::Id, size_t);                         \
  template Tape<T>::Id depth<T>(Tape<T>&, Tape<T>::Id, Tape<T>::Id,           \
                                Tape<T>::Id);                                 \
  template Tape<T>::Id combine<T>(Tape<T>&, Tape<T>::Id, Tape<T>::Id,         \
                                  Tape<T>::Id, T, T);

INSTANTIATE(float)
INSTANTIATE(double)
#undef INSTANTIATE

}  // namespace satnerf::losses
