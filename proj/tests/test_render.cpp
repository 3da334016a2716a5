#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "satnerf/render.hpp"
#include "satnerf/rng.hpp"

using namespace satnerf;
namespace rd = satnerf::render;

TEST_CASE("alpha and transmittance closed forms") {
  SUBCASE("vacuum") {
    const std::vector<double> sigma(8, 0.0), delta(8, 0.1);
    std::vector<double> alpha(8), trans(8);
    rd::alpha_transmittance(sigma, delta, alpha, trans);
    for (int i = 0; i < 8; ++i) {
      CHECK(alpha[i] == 0.0);
      CHECK(trans[i] == 1.0);
    }
  }
  SUBCASE("sigma*delta = ln 2 halves the light") {
    const std::vector<double> sigma = {1.0};
    const std::vector<double> delta = {std::log(2.0)};
    std::vector<double> alpha(1), trans(1);
    rd::alpha_transmittance(sigma, delta, alpha, trans);
    CHECK(alpha[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(trans[0] == 1.0);
  }
  SUBCASE("cumulative product against the hand oracle") {
    // alpha = 0.5 each: T = 1, 0.5, 0.25
    const std::vector<double> sigma(3, std::log(2.0));
    const std::vector<double> delta(3, 1.0);
    std::vector<double> alpha(3), trans(3);
    rd::alpha_transmittance(sigma, delta, alpha, trans);
    CHECK(trans[0] == doctest::Approx(1.0));
    CHECK(trans[1] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(trans[2] == doctest::Approx(0.25).epsilon(1e-14));
  }
}

TEST_CASE("composites against naive loops") {
  Pcg32 rng(3, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t n = 16;
    std::vector<double> sigma(n), delta(n), rgb(3 * n), v(n);
    for (size_t i = 0; i < n; ++i) {
      sigma[i] = rng.uniform(0, 30);
      delta[i] = rng.uniform(0.01, 0.1);
      v[i] = rng.uniform(0, 1);
      for (int c = 0; c < 3; ++c) rgb[3 * i + c] = rng.uniform(0, 1);
    }
    std::vector<double> alpha(n), trans(n), ra, rt;
    rd::alpha_transmittance(sigma, delta, alpha, trans);
    oracles::ref_alpha_trans(sigma, delta, ra, rt);
    for (size_t i = 0; i < n; ++i) {
      CHECK(std::abs(alpha[i] - ra[i]) < 1e-12);
      CHECK(std::abs(trans[i] - rt[i]) < 1e-12);
    }
    const auto c = rd::composite_color(trans, alpha, rgb);
    for (int ch = 0; ch < 3; ++ch) {
      std::vector<double> chan(n);
      for (size_t i = 0; i < n; ++i) chan[i] = rgb[3 * i + ch];
      CHECK(std::abs(c[ch] - oracles::ref_weighted_sum(rt, ra, chan)) < 1e-12);
    }
    const double d = rd::composite_scalar(trans, alpha, v);
    CHECK(std::abs(d - oracles::ref_weighted_sum(rt, ra, v)) < 1e-12);
  }
}

TEST_CASE("composite special cases") {
  SUBCASE("single opaque red point") {
    const std::vector<double> sigma = {2000.0}, delta = {1.0};
    std::vector<double> alpha(1), trans(1);
    rd::alpha_transmittance(sigma, delta, alpha, trans);
    const std::vector<double> rgb = {1, 0, 0};
    const auto c = rd::composite_color(trans, alpha, rgb);
    CHECK(c[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(c[1] == 0.0);
    CHECK(c[2] == 0.0);
  }
  SUBCASE("vacuum renders black at zero depth") {
    const std::vector<double> trans(4, 1.0), alpha(4, 0.0);
    const std::vector<double> rgb(12, 0.9), t = {0.1, 0.2, 0.3, 0.4};
    const auto c = rd::composite_color(trans, alpha, rgb);
    CHECK(c[0] == 0.0);
    CHECK(rd::composite_scalar(trans, alpha, t) == 0.0);
  }
  SUBCASE("opaque point at t = 0.7") {
    const std::vector<double> trans = {1.0}, alpha = {1.0}, t = {0.7};
    CHECK(rd::composite_scalar(trans, alpha, t) == doctest::Approx(0.7));
  }
  SUBCASE("two half-opaque points average by weight") {
    const std::vector<double> alpha = {0.5, 0.5};
    const std::vector<double> trans = {1.0, 0.5};
    const std::vector<double> t = {0.2, 0.8};
    // weights 0.5 and 0.25
    CHECK(rd::composite_scalar(trans, alpha, t) ==
          doctest::Approx(0.5 * 0.2 + 0.25 * 0.8).epsilon(1e-15));
  }
}

TEST_CASE("irradiance model") {
  SUBCASE("fully lit returns the albedo") {
    const auto c = rd::irradiance({0.7, 0.5, 0.2}, 1.0, {0.1, 0.2, 0.9});
    CHECK(c[0] == 0.7);
    CHECK(c[1] == 0.5);
    CHECK(c[2] == 0.2);
  }
  SUBCASE("full shadow multiplies by the ambient tint") {
    const auto c = rd::irradiance({0.7, 0.5, 0.2}, 0.0, {0.1, 0.2, 0.9});
    CHECK(c[0] == doctest::Approx(0.07));
    CHECK(c[1] == doctest::Approx(0.10));
    CHECK(c[2] == doctest::Approx(0.18));
  }
  SUBCASE("hand-evaluated midpoint") {
    const auto c = rd::irradiance({0.8, 0.6, 0.4}, 0.5, {0.2, 0.2, 0.4});
    CHECK(c[0] == doctest::Approx(0.48).epsilon(1e-15));
    CHECK(c[1] == doctest::Approx(0.36).epsilon(1e-15));
    CHECK(c[2] == doctest::Approx(0.28).epsilon(1e-15));
  }
}

TEST_CASE("transmittance is monotone and weights sum below one") {
  Pcg32 rng(9, 2);
  for (int trial = 0; trial < 1000; ++trial) {
    const size_t n = 32;
    std::vector<double> sigma(n), delta(n);
    for (size_t i = 0; i < n; ++i) {
      sigma[i] = rng.uniform(0, 100);
      delta[i] = rng.uniform(0.001, 0.1);
    }
    std::vector<double> alpha(n), trans(n);
    rd::alpha_transmittance(sigma, delta, alpha, trans);
    double wsum = 0, prod = 1;
    for (size_t i = 0; i < n; ++i) {
      if (i) CHECK(trans[i] <= trans[i - 1]);
      CHECK(alpha[i] >= 0.0);
      CHECK(alpha[i] < 1.0);
      wsum += trans[i] * alpha[i];
      prod *= 1.0 - alpha[i];
    }
    CHECK(wsum <= 1.0 + 1e-12);
    CHECK(std::abs(wsum - (1.0 - prod)) < 1e-12);
  }
}

TEST_CASE("increasing any sigma cannot increase later transmittance") {
  Pcg32 rng(11, 4);
  const size_t n = 16;
  std::vector<double> sigma(n), delta(n);
  for (size_t i = 0; i < n; ++i) {
    sigma[i] = rng.uniform(0, 20);
    delta[i] = rng.uniform(0.01, 0.1);
  }
  std::vector<double> a0(n), t0(n), a1(n), t1(n);
  rd::alpha_transmittance(sigma, delta, a0, t0);
  for (size_t bump = 0; bump < n; ++bump) {
    auto s = sigma;
    s[bump] += 5.0;
    rd::alpha_transmittance(s, delta, a1, t1);
    for (size_t k = bump + 1; k < n; ++k) CHECK(t1[k] <= t0[k] + 1e-15);
  }
}

namespace {

// fabricate per-point heads directly on a tape
template <typename T>
HeadIds<T> fake_heads(ad::Tape<T>& tape, const std::vector<double>& sigma,
                      const std::vector<double>& albedo,
                      const std::vector<double>& shading,
                      const std::vector<double>& ambient,
                      const std::vector<double>& beta) {
  const size_t n = sigma.size();
  ad::Tensor<T> s(n, 1), a(n, 3), sh(n, 1), am(n, 3), b(n, 1);
  for (size_t i = 0; i < n; ++i) {
    s.v[i] = static_cast<T>(sigma[i]);
    sh.v[i] = static_cast<T>(shading[i]);
    b.v[i] = static_cast<T>(beta[i]);
    for (int c = 0; c < 3; ++c) {
      a.v[3 * i + c] = static_cast<T>(albedo[3 * i + c]);
      am.v[3 * i + c] = static_cast<T>(ambient[3 * i + c]);
    }
  }
  HeadIds<T> h;
  h.sigma = tape.leaf(std::move(s), true);
  h.albedo = tape.leaf(std::move(a), true);
  h.shading = tape.leaf(std::move(sh), true);
  h.ambient = tape.leaf(std::move(am), true);
  h.beta = tape.leaf(std::move(b), true);
  h.features = h.sigma;
  return h;
}

}  // namespace

TEST_CASE("constant field: color equals albedo times weight sum") {
  const size_t n = 24;
  std::vector<double> sigma(n, 3.0), albedo(3 * n), shading(n, 1.0),
      ambient(3 * n, 0.5), beta(n, 0.0), delta(n, 0.04), tv(n);
  for (size_t i = 0; i < n; ++i) {
    tv[i] = 0.04 * i;
    albedo[3 * i + 0] = 0.8;
    albedo[3 * i + 1] = 0.3;
    albedo[3 * i + 2] = 0.1;
  }
  ad::Tape<double> tape;
  const auto heads = fake_heads(tape, sigma, albedo, shading, ambient, beta);
  ad::Tensor<double> dl(n, 1), tt(n, 1);
  for (size_t i = 0; i < n; ++i) {
    dl.v[i] = delta[i];
    tt.v[i] = tv[i];
  }
  const auto r = rd::composite_batch(tape, heads, tape.constant(std::move(dl)),
                                     tape.constant(std::move(tt)), n, true);
  const double wsum = tape.value(r.weight_sum).v[0];
  CHECK(tape.value(r.color).v[0] == doctest::Approx(0.8 * wsum).epsilon(1e-12));
  CHECK(tape.value(r.color).v[1] == doctest::Approx(0.3 * wsum).epsilon(1e-12));
  CHECK(tape.value(r.color).v[2] == doctest::Approx(0.1 * wsum).epsilon(1e-12));
}

TEST_CASE("thin dense slab places depth at the slab") {
  const size_t n = 4096;
  std::vector<double> sigma(n, 0.0), delta(n, 1.0 / n), tv(n);
  for (size_t i = 0; i < n; ++i) {
    tv[i] = (i + 0.5) / n;
    if (tv[i] > 0.69975 && tv[i] < 0.70025) sigma[i] = 1e7;
  }
  std::vector<double> alpha(n), trans(n);
  rd::alpha_transmittance(sigma, delta, alpha, trans);
  const double depth = rd::composite_scalar(trans, alpha, tv);
  CHECK(std::abs(depth - 0.7) < 1e-3);
}

TEST_CASE("batched compositing equals the scalar reference path") {
  Pcg32 rng(21, 6);
  const size_t rays = 5, n = 16;
  NetworkConfig cfg;
  cfg.hidden = 16;
  cfg.n_images = 3;
  cfg.seed = 77;
  const auto params = init_params<double>(cfg);

  for (size_t ray = 0; ray < rays; ++ray) {
    SampledRay s;
    s.t.resize(n);
    s.points.resize(n);
    s.delta.resize(n);
    const Vec3 o{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0.9};
    const Vec3 d = normalized({0.1, 0.05, -1.0});
    for (size_t i = 0; i < n; ++i) {
      s.t[i] = 1.8 * i / (n - 1);
      s.points[i] = o + d * s.t[i];
      s.delta[i] = i + 1 < n ? 1.8 / (n - 1) : 1.8 / (n - 1);
    }
    const Vec3 w = normalized({0.3, -0.2, -0.95});
    const auto rr = rd::render_ray(params, s, w, 1, true);

    // same ray through the plain reference pieces
    std::vector<double> sigma(n), delta(n), rgb(3 * n), beta(n), shading(n);
    for (size_t i = 0; i < n; ++i) {
      const auto h = forward_point(params, s.points[i], w, 1);
      sigma[i] = h.sigma;
      beta[i] = h.beta;
      shading[i] = h.shading;
      const auto c = rd::irradiance(h.albedo, h.shading, h.ambient);
      for (int ch = 0; ch < 3; ++ch) rgb[3 * i + ch] = c[ch];
      delta[i] = s.delta[i];
    }
    std::vector<double> alpha(n), trans(n);
    rd::alpha_transmittance(sigma, delta, alpha, trans);
    const auto cref = rd::composite_color(trans, alpha, rgb);
    const double dref = rd::composite_scalar(trans, alpha, s.t);
    const double bref = rd::composite_scalar(trans, alpha, beta);
    for (int ch = 0; ch < 3; ++ch)
      CHECK(std::abs(rr.color[ch] - cref[ch]) < 1e-12);
    CHECK(std::abs(rr.depth - dref) < 1e-12);
    CHECK(std::abs(rr.beta - bref) < 1e-12);
    for (size_t i = 0; i < n; ++i) {
      CHECK(std::abs(rr.alpha[i] - alpha[i]) < 1e-12);
      CHECK(std::abs(rr.trans[i] - trans[i]) < 1e-12);
    }
  }
}

TEST_CASE("rendered color gradient w.r.t. a weight matrix") {
  NetworkConfig cfg;
  cfg.hidden = 8;
  cfg.n_images = 2;
  cfg.seed = 5;
  auto params = init_params<double>(cfg);
  const int widx = params.find("main.2.w");

  const size_t n = 6;
  ad::Tensor<double> x(n, 3), w(n, 3), dl(n, 1), tv(n, 1);
  Pcg32 rng(2, 2);
  for (size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) {
      x.v[3 * i + c] = rng.uniform(-0.5, 0.5);
      w.v[3 * i + c] = c == 2 ? -0.9 : 0.3;
    }
    dl.v[i] = 0.1;
    tv.v[i] = 0.1 * i;
  }

  auto eval = [&]() {
    ad::Tape<double> tape;
    const auto heads = forward_batch(tape, params, tape.constant(x),
                                     tape.constant(w),
                                     std::vector<int32_t>(n, 0));
    const auto r = rd::composite_batch(tape, heads, tape.constant(dl),
                                       tape.constant(tv), n, true);
    return tape.scalar_value(tape.sum(r.color));
  };

  ad::Tape<double> tape;
  ParamBinding<double> binding;
  const auto heads = forward_batch(tape, params, tape.constant(x),
                                   tape.constant(w),
                                   std::vector<int32_t>(n, 0), &binding);
  const auto r = rd::composite_batch(tape, heads, tape.constant(dl),
                                     tape.constant(tv), n, true);
  tape.backward(tape.sum(r.color));
  const auto& g = tape.grad(binding.ids[widx]);
  const double err = oracles::fd_max_rel_err(
      eval, params.tensors[widx].v.data(), g.v.data(),
      params.tensors[widx].size(), 1e-6);
  CHECK(err < 1e-5);
}
