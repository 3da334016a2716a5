#pragma once

#include <array>
#include <span>
#include <vector>

#include "satnerf/network.hpp"
#include "satnerf/rays.hpp"
#include "satnerf/tape.hpp"

namespace satnerf::render {

// ---------------------------------------------------------------------------
// Plain reference compositing (double). The differentiable graph below must
// agree with these to 1e-12; they also serve the non-gradient eval path.
// ---------------------------------------------------------------------------

// alpha_i = 1 - exp(-sigma_i delta_i); T_i = prod_{j<i} (1 - alpha_j), T_1=1.
void alpha_transmittance(std::span<const double> sigma,
                         std::span<const double> delta,
                         std::span<double> alpha, std::span<double> trans);

// sum_i T_i alpha_i v_i
double composite_scalar(std::span<const double> trans,
                        std::span<const double> alpha,
                        std::span<const double> v);

// componentwise over rgb triples laid out [N][3]
std::array<double, 3> composite_color(std::span<const double> trans,
                                      std::span<const double> alpha,
                                      std::span<const double> rgb);

// c = albedo * (s + (1 - s) * ambient), componentwise
std::array<double, 3> irradiance(const std::array<double, 3>& albedo, double s,
                                 const std::array<double, 3>& ambient);

// ---------------------------------------------------------------------------
// Differentiable compositing over a whole batch. Points are laid out as
// n_samples consecutive rows per ray.
// ---------------------------------------------------------------------------

template <typename T>
struct RenderIds {
  using Id = typename ad::Tape<T>::Id;
  Id point_color;  // [P,3] per-point irradiance
  Id alpha;        // [P,1]
  Id trans;        // [P,1]
  Id weights;      // [P,1] T_i alpha_i
  Id color;        // [R,3]
  Id depth;        // [R,1]
  Id beta;         // [R,1]
  Id weight_sum;   // [R,1]
  Id sun_vis;      // [R,1] integrated shading
};

// delta and tvals are [P,1] constants. use_shading=false renders the raw
// albedo (plain radiance-field configuration).
template <typename T>
RenderIds<T> composite_batch(ad::Tape<T>& tape, const HeadIds<T>& heads,
                             typename ad::Tape<T>::Id delta,
                             typename ad::Tape<T>::Id tvals, size_t n_samples,
                             bool use_shading);

struct RenderedRay {
  std::array<double, 3> color{0, 0, 0};
  double depth = 0;
  double beta = 0;
  double weight_sum = 0;
  double sun_vis = 0;
  std::vector<double> alpha, trans, weights;
};

template <typename T>
RenderedRay render_ray(const NetworkParams<T>& params, const SampledRay& s,
                       const Vec3& omega, int32_t j, bool use_shading = true);

}  // namespace satnerf::render
