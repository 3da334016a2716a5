#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "satnerf/network.hpp"
#include "satnerf/rng.hpp"

using namespace satnerf;

namespace {

NetworkConfig desk_cfg(uint64_t seed = 7, int n_images = 5) {
  NetworkConfig cfg;
  cfg.hidden = 32;
  cfg.n_images = n_images;
  cfg.seed = seed;
  return cfg;
}

template <typename T>
HeadOutputs<T> eval_one(const NetworkParams<T>& p, Vec3 x, Vec3 w, int32_t j) {
  return forward_point(p, x, w, j);
}

}  // namespace

TEST_CASE("init_params is deterministic per seed") {
  const auto a = init_params<double>(desk_cfg(42));
  const auto b = init_params<double>(desk_cfg(42));
  const auto c = init_params<double>(desk_cfg(43));
  REQUIRE(a.tensors.size() == b.tensors.size());
  bool any_diff = false;
  for (size_t i = 0; i < a.tensors.size(); ++i) {
    REQUIRE(a.tensors[i].size() == b.tensors[i].size());
    for (size_t k = 0; k < a.tensors[i].size(); ++k) {
      CHECK(a.tensors[i].v[k] == b.tensors[i].v[k]);
      any_diff |= a.tensors[i].v[k] != c.tensors[i].v[k];
    }
  }
  CHECK(any_diff);
}

TEST_CASE("siren weight bounds hold by construction") {
  const auto cfg = desk_cfg(11);
  const auto p = init_params<double>(cfg);
  const double bound = std::sqrt(6.0 / cfg.hidden) / cfg.omega0;
  const int idx = p.find("main.3.w");
  REQUIRE(idx >= 0);
  for (const double w : p.tensors[idx].v) CHECK(std::abs(w) <= bound);

  const int first = p.find("main.0.w");
  for (const double w : p.tensors[first].v) CHECK(std::abs(w) <= 1.0 / 3.0);
}

TEST_CASE("first-layer linear output std sits in a healthy band") {
  const auto cfg = desk_cfg(13);
  const auto p = init_params<double>(cfg);
  const auto& w = p.tensors[p.find("main.0.w")];  // [3,h]
  const auto& b = p.tensors[p.find("main.0.b")];  // [1,h]
  Pcg32 rng(5, 9);
  double sum = 0, sumsq = 0;
  size_t count = 0;
  for (int i = 0; i < 10000 / cfg.hidden + 1; ++i) {
    const double x[3] = {rng.uniform(-1, 1), rng.uniform(-1, 1),
                         rng.uniform(-1, 1)};
    for (int o = 0; o < cfg.hidden; ++o) {
      double z = b.v[o];
      for (int k = 0; k < 3; ++k) z += x[k] * w.v[k * cfg.hidden + o];
      sum += z;
      sumsq += z * z;
      ++count;
    }
  }
  const double mean = sum / count;
  const double std = std::sqrt(sumsq / count - mean * mean);
  CHECK(std > 0.3);
  CHECK(std < 1.5);
}

TEST_CASE("head dependency structure is exact") {
  const auto p = init_params<double>(desk_cfg(17));
  const Vec3 x{0.3, -0.2, 0.1};
  const Vec3 w1{0.4, 0.2, -0.89};
  const Vec3 w2{-0.5, 0.1, -0.86};

  const auto base = eval_one(p, x, normalized(w1), 1);

  SUBCASE("changing omega leaves sigma and albedo untouched") {
    const auto moved = eval_one(p, x, normalized(w2), 1);
    CHECK(moved.sigma == base.sigma);
    for (int c = 0; c < 3; ++c) CHECK(moved.albedo[c] == base.albedo[c]);
    CHECK(moved.beta == base.beta);
    CHECK(moved.shading != base.shading);
    bool ambient_moved = false;
    for (int c = 0; c < 3; ++c) ambient_moved |= moved.ambient[c] != base.ambient[c];
    CHECK(ambient_moved);
  }
  SUBCASE("changing the image index can move only beta") {
    const auto moved = eval_one(p, x, normalized(w1), 3);
    CHECK(moved.sigma == base.sigma);
    CHECK(moved.shading == base.shading);
    for (int c = 0; c < 3; ++c) {
      CHECK(moved.albedo[c] == base.albedo[c]);
      CHECK(moved.ambient[c] == base.ambient[c]);
    }
    CHECK(moved.beta != base.beta);
  }
  SUBCASE("ambient ignores position") {
    const auto moved = eval_one(p, Vec3{-0.7, 0.5, 0.0}, normalized(w1), 1);
    for (int c = 0; c < 3; ++c) CHECK(moved.ambient[c] == base.ambient[c]);
  }
}

TEST_CASE("output ranges hold on a large random batch") {
  const auto cfg = desk_cfg(19, 8);
  const auto p = init_params<float>(cfg);
  const size_t n = 65536;
  Pcg32 rng(3, 3);
  ad::Tensor<float> x(n, 3), w(n, 3);
  std::vector<int32_t> j(n);
  for (size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) {
      x.v[3 * i + c] = static_cast<float>(rng.uniform(-1.2, 1.2));
      w.v[3 * i + c] = static_cast<float>(rng.uniform(-1, 1));
    }
    j[i] = static_cast<int32_t>(rng.below(8));
  }
  ad::Tape<float> tape;
  const auto heads = forward_batch(tape, p, tape.constant(std::move(x)),
                                   tape.constant(std::move(w)), j);
  for (const float v : tape.value(heads.sigma).v) CHECK(v >= 0.0f);
  for (const float v : tape.value(heads.beta).v) CHECK(v >= 0.0f);
  for (const float v : tape.value(heads.albedo).v) {
    CHECK(v > 0.0f);
    CHECK(v < 1.0f);
  }
  for (const float v : tape.value(heads.ambient).v) {
    CHECK(v > 0.0f);
    CHECK(v < 1.0f);
  }
  for (const float v : tape.value(heads.shading).v) {
    CHECK(v > 0.0f);
    CHECK(v < 1.0f);
  }
}

TEST_CASE("forward_batch equals the per-point loop bit for bit") {
  const auto p = init_params<double>(desk_cfg(23, 4));
  const size_t n = 64;
  Pcg32 rng(9, 1);
  ad::Tensor<double> x(n, 3), w(n, 3);
  std::vector<int32_t> j(n);
  for (size_t i = 0; i < n; ++i) {
    Vec3 wv{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, -0.2)};
    wv = normalized(wv);
    x.v[3 * i + 0] = rng.uniform(-1, 1);
    x.v[3 * i + 1] = rng.uniform(-1, 1);
    x.v[3 * i + 2] = rng.uniform(-1, 1);
    w.v[3 * i + 0] = wv.x;
    w.v[3 * i + 1] = wv.y;
    w.v[3 * i + 2] = wv.z;
    j[i] = static_cast<int32_t>(rng.below(4));
  }
  ad::Tape<double> tape;
  const auto xid = tape.constant(x);
  const auto wid = tape.constant(w);
  const auto heads = forward_batch(tape, p, xid, wid, j);

  for (size_t i = 0; i < n; ++i) {
    const auto one = forward_point(
        p, Vec3{x.v[3 * i], x.v[3 * i + 1], x.v[3 * i + 2]},
        Vec3{w.v[3 * i], w.v[3 * i + 1], w.v[3 * i + 2]}, j[i]);
    CHECK(tape.value(heads.sigma).v[i] == one.sigma);
    CHECK(tape.value(heads.shading).v[i] == one.shading);
    CHECK(tape.value(heads.beta).v[i] == one.beta);
    for (int c = 0; c < 3; ++c) {
      CHECK(tape.value(heads.albedo).v[3 * i + c] == one.albedo[c]);
      CHECK(tape.value(heads.ambient).v[3 * i + c] == one.ambient[c]);
    }
  }
}

TEST_CASE("out-of-range image index is rejected") {
  const auto p = init_params<double>(desk_cfg(29, 3));
  CHECK_THROWS_AS(forward_point(p, {0, 0, 0}, {0, 0, -1}, 3),
                  IndexOutOfRange);
  CHECK_THROWS_AS(forward_point(p, {0, 0, 0}, {0, 0, -1}, -1),
                  IndexOutOfRange);
}

TEST_CASE("head gradients flow to parameters (spot finite-diff)") {
  NetworkConfig cfg;
  cfg.hidden = 8;
  cfg.n_images = 2;
  cfg.seed = 31;
  auto params = init_params<double>(cfg);
  const int widx = params.find("main.1.w");
  REQUIRE(widx >= 0);

  ad::Tensor<double> x(2, 3), w(2, 3);
  x.v = {0.1, -0.3, 0.5, -0.2, 0.4, 0.0};
  w.v = {0.2, 0.1, -0.97, 0.2, 0.1, -0.97};

  auto eval = [&]() {
    ad::Tape<double> tape;
    const auto heads = forward_batch(tape, params, tape.constant(x),
                                     tape.constant(w), {0, 1});
    const auto loss =
        tape.sum(tape.add(tape.sum_cols(heads.albedo), heads.sigma));
    return tape.scalar_value(loss);
  };

  ad::Tape<double> tape;
  ParamBinding<double> binding;
  const auto heads = forward_batch(tape, params, tape.constant(x),
                                   tape.constant(w), {0, 1}, &binding);
  const auto loss = tape.sum(tape.add(tape.sum_cols(heads.albedo), heads.sigma));
  tape.backward(loss);
  const auto& g = tape.grad(binding.ids[widx]);

  const double err = oracles::fd_max_rel_err(
      eval, params.tensors[widx].v.data(), g.v.data(),
      params.tensors[widx].size(), 1e-6);
  CHECK(err < 1e-5);
}
