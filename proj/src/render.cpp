#include "satnerf/render.hpp"

#include <cmath>

namespace satnerf::render {

void alpha_transmittance(std::span<const double> sigma,
                         std::span<const double> delta,
                         std::span<double> alpha, std::span<double> trans) {
  double t = 1.0;
  for (size_t i = 0; i < sigma.size(); ++i) {
    const double one_minus = std::exp(-sigma[i] * delta[i]);
    alpha[i] = 1.0 - one_minus;
    trans[i] = t;
    t *= one_minus;
  }
}

double composite_scalar(std::span<const double> trans,
                        std::span<const double> alpha,
                        std::span<const double> v) {
  double acc = 0.0;
  for (size_t i = 0; i < v.size(); ++i) acc += trans[i] * alpha[i] * v[i];
  return acc;
}

std::array<double, 3> composite_color(std::span<const double> trans,
                                      std::span<const double> alpha,
                                      std::span<const double> rgb) {
  std::array<double, 3> acc{0, 0, 0};
  for (size_t i = 0; i < trans.size(); ++i) {
    const double w = trans[i] * alpha[i];
    acc[0] += w * rgb[3 * i + 0];
    acc[1] += w * rgb[3 * i + 1];
    acc[2] += w * rgb[3 * i + 2];
  }
  return acc;
}

std::array<double, 3> irradiance(const std::array<double, 3>& albedo, double s,
                                 const std::array<double, 3>& ambient) {
  return {albedo[0] * (s + (1.0 - s) * ambient[0]),
          albedo[1] * (s + (1.0 - s) * ambient[1]),
          albedo[2] * (s + (1.0 - s) * ambient[2])};
}

template <typename T>
RenderIds<T> composite_batch(ad::Tape<T>& tape, const HeadIds<T>& heads,
                             typename ad::Tape<T>::Id delta,
                             typename ad::Tape<T>::Id tvals, size_t n_samples,
                             bool use_shading) {
  using Id = typename ad::Tape<T>::Id;
  const size_t p = tape.value(heads.sigma).rows;

  RenderIds<T> r;

  if (use_shading) {
    // c = albedo * (s + (1-s) * ambient)
    ad::Tensor<T> ones3(p, 3);
    for (auto& x : ones3.v) x = T(1);
    const Id ones = tape.constant(std::move(ones3));
    const Id s3 = tape.mul_colvec(ones, heads.shading);
    ad::Tensor<T> one1(p, 1);
    for (auto& x : one1.v) x = T(1);
    const Id inv_s = tape.sub(tape.constant(std::move(one1)), heads.shading);
    const Id shade = tape.add(s3, tape.mul_colvec(heads.ambient, inv_s));
    r.point_color = tape.mul(heads.albedo, shade);
  } else {
    r.point_color = heads.albedo;
  }

  const Id sd = tape.mul(heads.sigma, delta);
  const Id one_minus_alpha = tape.exp(tape.scalar_mul(sd, T(-1)));
  {
    ad::Tensor<T> one1(p, 1);
    for (auto& x : one1.v) x = T(1);
    r.alpha = tape.sub(tape.constant(std::move(one1)), one_minus_alpha);
  }
  r.trans = tape.cumprod_excl_groups(one_minus_alpha, n_samples);
  r.weights = tape.mul(r.trans, r.alpha);

  r.color = tape.sum_groups(tape.mul_colvec(r.point_color, r.weights),
                            n_samples);
  r.depth = tape.sum_groups(tape.mul(r.weights, tvals), n_samples);
  r.beta = tape.sum_groups(tape.mul(r.weights, heads.beta), n_samples);
  r.weight_sum = tape.sum_groups(r.weights, n_samples);
  r.sun_vis = tape.sum_groups(tape.mul(r.weights, heads.shading), n_samples);
  return r;
}

template <typename T>
RenderedRay render_ray(const NetworkParams<T>& params, const SampledRay& s,
                       const Vec3& omega, int32_t j, bool use_shading) {
  const size_t n = s.t.size();
  ad::Tape<T> tape;
  ad::Tensor<T> x(n, 3), o(n, 3), dl(n, 1), tv(n, 1);
  for (size_t i = 0; i < n; ++i) {
    x.v[3 * i + 0] = static_cast<T>(s.points[i].x);
    x.v[3 * i + 1] = static_cast<T>(s.points[i].y);
    x.v[3 * i + 2] = static_cast<T>(s.points[i].z);
    o.v[3 * i + 0] = static_cast<T>(omega.x);
    o.v[3 * i + 1] = static_cast<T>(omega.y);
    o.v[3 * i + 2] = static_cast<T>(omega.z);
    dl.v[i] = static_cast<T>(s.delta[i]);
    tv.v[i] = static_cast<T>(s.t[i]);
  }
  const auto xid = tape.constant(std::move(x));
  const auto oid = tape.constant(std::move(o));
  const auto did = tape.constant(std::move(dl));
  const auto tid = tape.constant(std::move(tv));
  const auto heads = forward_batch(tape, params, xid, oid,
                                   std::vector<int32_t>(n, j));
  const auto r = composite_batch(tape, heads, did, tid, n, use_shading);

  RenderedRay out;
  for (int c = 0; c < 3; ++c) out.color[c] = tape.value(r.color).v[c];
  out.depth = tape.value(r.depth).v[0];
  out.beta = tape.value(r.beta).v[0];
  out.weight_sum = tape.value(r.weight_sum).v[0];
  out.sun_vis = tape.value(r.sun_vis).v[0];
  out.alpha.assign(tape.value(r.alpha).v.begin(), tape.value(r.alpha).v.end());
  out.trans.assign(tape.value(r.trans).v.begin(), tape.value(r.trans).v.end());
  out.weights.assign(tape.value(r.weights).v.begin(),
                     tape.value(r.weights).v.end());
  return out;
}

template RenderIds<float> composite_batch<float>(ad::Tape<float>&,
                                                 const HeadIds<float>&,
                                                 ad::Tape<float>::Id,
                                                 ad::Tape<float>::Id, size_t,
                                                 bool);
template RenderIds<double> composite_batch<double>(ad::Tape<double>&,
                                                   const HeadIds<double>&,
                                                   ad::Tape<double>::Id,
                                                   ad::Tape<double>::Id,
                                                   size_t, bool);
template RenderedRay render_ray<float>(const NetworkParams<float>&,
                                       const SampledRay&, const Vec3&, int32_t,
                                       bool);
template RenderedRay render_ray<double>(const NetworkParams<double>&,
                                        const SampledRay&, const Vec3&,
                                        int32_t, bool);

}  // namespace satnerf::render
