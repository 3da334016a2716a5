#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "satnerf/rng.hpp"
#include "satnerf/rpc.hpp"

using namespace satnerf;

namespace {

// Independent term-by-term evaluation in the documented order.
double naive_poly(const std::array<double, 20>& c, double l, double p,
                  double h) {
  const double terms[20] = {1,         l,         p,         h,
                            l * p,     l * h,     p * h,     l * l,
                            p * p,     h * h,     p * l * h, l * l * l,
                            l * p * p, l * h * h, l * l * p, p * p * p,
                            p * h * h, l * l * h, p * p * h, h * h * h};
  double acc = 0;
  for (int i = 0; i < 20; ++i) acc += c[i] * terms[i];
  return acc;
}

RpcModel affine_rpc() {
  RpcModel m;
  m.lat_off = 38.0;
  m.lat_scale = 0.001;
  m.lon_off = -105.0;
  m.lon_scale = 0.001;
  m.alt_off = 500.0;
  m.alt_scale = 50.0;
  m.row_off = 512.0;
  m.row_scale = 512.0;
  m.col_off = 512.0;
  m.col_scale = 512.0;
  m.line_den[0] = m.samp_den[0] = 1.0;
  m.line_num[2] = 1.0;  // row_n = lat_n
  m.samp_num[1] = 1.0;  // col_n = lon_n
  return m;
}

// Camera-like random model: dominant linear terms, small higher-order
// corrections, denominators close to 1 over the validity cube.
RpcModel random_cubic_rpc(uint64_t seed) {
  Pcg32 rng(seed, 3);
  RpcModel m = affine_rpc();
  m.line_num = {};
  m.samp_num = {};
  m.line_num[2] = rng.uniform(0.8, 1.2);   // row ~ lat
  m.samp_num[1] = rng.uniform(0.8, 1.2);   // col ~ lon
  m.line_num[3] = rng.uniform(-0.3, 0.3);  // altitude parallax
  m.samp_num[3] = rng.uniform(-0.3, 0.3);
  for (int i = 0; i < 20; ++i) {
    const double s = i < 4 ? 0.02 : 0.005;
    m.line_num[i] += rng.uniform(-s, s);
    m.samp_num[i] += rng.uniform(-s, s);
    if (i > 0) {
      m.line_den[i] = rng.uniform(-0.005, 0.005);
      m.samp_den[i] = rng.uniform(-0.005, 0.005);
    }
  }
  return m;
}

}  // namespace

TEST_CASE("parse/serialize text round trip is lossless") {
  RpcModel m = random_cubic_rpc(1);
  const std::string blob = serialize_rpc_text(m);
  const RpcModel back = parse_rpc_text(blob);
  for (int i = 0; i < 20; ++i) {
    CHECK(back.line_num[i] == m.line_num[i]);
    CHECK(back.line_den[i] == m.line_den[i]);
    CHECK(back.samp_num[i] == m.samp_num[i]);
    CHECK(back.samp_den[i] == m.samp_den[i]);
  }
  CHECK(back.lat_off == m.lat_off);
  CHECK(back.alt_scale == m.alt_scale);
  CHECK(back.row_off == m.row_off);
}

TEST_CASE("golden example files parse and agree") {
  const auto read = [](const char* p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const RpcModel t = parse_rpc_text(read("../../docs/rpc_example.txt"));
  const RpcModel j = parse_rpc_json(read("../../docs/rpc_example.json"));
  CHECK(t.row_off == j.row_off);
  CHECK(t.lat_scale == j.lat_scale);
  for (int i = 0; i < 20; ++i) {
    CHECK(t.line_num[i] == j.line_num[i]);
    CHECK(t.samp_num[i] == j.samp_num[i]);
  }
  CHECK(t.has_inverse);
  // affine: projection then localization closes
  const auto g = rpc_localize(t, {10.0, 20.0}, t.alt_off + 3.0);
  const auto px = rpc_project(t, g);
  CHECK(std::abs(px.row - 10.0) < 1e-8);
  CHECK(std::abs(px.col - 20.0) < 1e-8);
}

TEST_CASE("parse/serialize json round trip is lossless") {
  RpcModel m = random_cubic_rpc(2);
  const RpcModel back = parse_rpc_json(serialize_rpc_json(m));
  for (int i = 0; i < 20; ++i) {
    CHECK(back.line_num[i] == m.line_num[i]);
    CHECK(back.samp_den[i] == m.samp_den[i]);
  }
  CHECK(back.col_scale == m.col_scale);
}

TEST_CASE("parse rejects malformed input") {
  const RpcModel m = affine_rpc();
  std::string blob = serialize_rpc_text(m);

  SUBCASE("missing ALT_SCALE") {
    std::string cut;
    for (size_t pos = 0; pos < blob.size();) {
      const size_t nl = blob.find('\n', pos);
      const std::string line = blob.substr(pos, nl - pos);
      if (line.rfind("ALT_SCALE", 0) != 0) cut += line + "\n";
      pos = nl + 1;
    }
    CHECK_THROWS_AS(parse_rpc_text(cut), MissingField);
  }
  SUBCASE("19 numerator coefficients") {
    std::string cut;
    for (size_t pos = 0; pos < blob.size();) {
      const size_t nl = blob.find('\n', pos);
      const std::string line = blob.substr(pos, nl - pos);
      if (line.rfind("LINE_NUM_COEFF_20", 0) != 0) cut += line + "\n";
      pos = nl + 1;
    }
    CHECK_THROWS_AS(parse_rpc_text(cut), BadCoefficientCount);
  }
  SUBCASE("21st coefficient") {
    CHECK_THROWS_AS(parse_rpc_text(blob + "LINE_NUM_COEFF_21: 1.0\n"),
                    BadCoefficientCount);
  }
  SUBCASE("duplicate coefficient") {
    CHECK_THROWS_AS(parse_rpc_text(blob + "LINE_NUM_COEFF_3: 1.0\n"),
                    BadCoefficientCount);
  }
  SUBCASE("bad number") {
    CHECK_THROWS_AS(parse_rpc_text(blob + "LAT_OFF: pineapple\n"),
                    MalformedNumber);
  }
}

TEST_CASE("affine projection behaves linearly") {
  const RpcModel m = affine_rpc();
  const auto center = rpc_project(m, {m.lat_off, m.lon_off, m.alt_off});
  CHECK(center.row == doctest::Approx(m.row_off).epsilon(1e-14));
  CHECK(center.col == doctest::Approx(m.col_off).epsilon(1e-14));

  const auto stepped =
      rpc_project(m, {m.lat_off + m.lat_scale, m.lon_off, m.alt_off});
  CHECK(std::abs(stepped.row - (m.row_off + m.row_scale)) < 1e-8);
  CHECK(std::abs(stepped.col - m.col_off) < 1e-8);
}

TEST_CASE("projection matches the term-by-term oracle") {
  const RpcModel m = random_cubic_rpc(5);
  Pcg32 rng(6, 6);
  for (int i = 0; i < 300; ++i) {
    const GeodeticPoint g{m.lat_off + rng.uniform(-1, 1) * m.lat_scale,
                          m.lon_off + rng.uniform(-1, 1) * m.lon_scale,
                          m.alt_off + rng.uniform(-1, 1) * m.alt_scale};
    // the oracle normalizes the same way and then evaluates term by term
    const double l = (g.lon_deg - m.lon_off) / m.lon_scale;
    const double p = (g.lat_deg - m.lat_off) / m.lat_scale;
    const double h = (g.alt_m - m.alt_off) / m.alt_scale;
    const auto px = rpc_project(m, g);
    const double row_n = naive_poly(m.line_num, l, p, h) /
                         naive_poly(m.line_den, l, p, h);
    const double col_n = naive_poly(m.samp_num, l, p, h) /
                         naive_poly(m.samp_den, l, p, h);
    CHECK(std::abs((px.row - m.row_off) / m.row_scale - row_n) < 1e-10);
    CHECK(std::abs((px.col - m.col_off) / m.col_scale - col_n) < 1e-10);
  }
}

TEST_CASE("pure-polynomial projection has vanishing 4th differences") {
  RpcModel m = random_cubic_rpc(7);
  m.line_den = {};
  m.samp_den = {};
  m.line_den[0] = m.samp_den[0] = 1.0;
  const double h = 0.25;
  auto project_n = [&](double l, double p, double a) {
    const GeodeticPoint g{m.lat_off + p * m.lat_scale,
                          m.lon_off + l * m.lon_scale,
                          m.alt_off + a * m.alt_scale};
    return (rpc_project(m, g).row - m.row_off) / m.row_scale;
  };
  for (int axis = 0; axis < 3; ++axis) {
    auto f = [&](double t) {
      double c[3] = {0.1, -0.2, 0.05};
      c[axis] = t;
      return project_n(c[0], c[1], c[2]);
    };
    const double d4 =
        f(-2 * h) - 4 * f(-h) + 6 * f(0) - 4 * f(h) + f(2 * h);
    CHECK(std::abs(d4) < 1e-9);
  }
}

TEST_CASE("affine localization is exact") {
  const RpcModel m = affine_rpc();
  const PixelCoord px{300.25, 720.5};
  const auto g = rpc_localize(m, px, 520.0);
  const auto back = rpc_project(m, g);
  CHECK(std::abs(back.row - px.row) < 1e-8);
  CHECK(std::abs(back.col - px.col) < 1e-8);
  // closed form for the affine model
  CHECK(g.lat_deg ==
        doctest::Approx(m.lat_off + (px.row - m.row_off) / m.row_scale * m.lat_scale)
            .epsilon(1e-12));
  CHECK(g.lon_deg ==
        doctest::Approx(m.lon_off + (px.col - m.col_off) / m.col_scale * m.lon_scale)
            .epsilon(1e-12));
}

TEST_CASE("project/localize round trip under 1e-6 px") {
  const RpcModel m = random_cubic_rpc(11);
  Pcg32 rng(12, 8);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    // stay inside the validity domain: draw ground coords, project, localize
    const double l = rng.uniform(-0.8, 0.8), p = rng.uniform(-0.8, 0.8),
                 h = rng.uniform(-0.8, 0.8);
    const GeodeticPoint g{m.lat_off + p * m.lat_scale,
                          m.lon_off + l * m.lon_scale,
                          m.alt_off + h * m.alt_scale};
    const auto px = rpc_project(m, g);
    const auto back = rpc_localize(m, px, g.alt_m);
    const auto px2 = rpc_project(m, back);
    worst = std::max({worst, std::abs(px2.row - px.row),
                      std::abs(px2.col - px.col)});
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("inverse coefficients seed the localization") {
  // affine model admits an exact affine inverse
  RpcModel m = affine_rpc();
  m.has_inverse = true;
  m.inv_lat_den[0] = m.inv_lon_den[0] = 1.0;
  m.inv_lat_num[2] = 1.0;  // lat_n = row_n
  m.inv_lon_num[1] = 1.0;  // lon_n = col_n
  const PixelCoord px{100.5, 900.0};
  const auto g = rpc_localize(m, px, 480.0);
  const auto back = rpc_project(m, g);
  CHECK(std::abs(back.row - px.row) < 1e-8);
  CHECK(std::abs(back.col - px.col) < 1e-8);
}
