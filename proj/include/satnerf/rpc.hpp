#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>

#include "satnerf/geodesy.hpp"

namespace satnerf {

struct PixelCoord {
  double row = 0;
  double col = 0;
};

// Rational polynomial camera. Polynomials use the RPC00B 20-term ordering on
// normalized coordinates L = lon_n, P = lat_n, H = alt_n:
//
//   c1                c2  L             c3  P             c4  H
//   c5  L*P           c6  L*H           c7  P*H           c8  L*L
//   c9  P*P           c10 H*H           c11 P*L*H         c12 L*L*L
//   c13 L*P*P         c14 L*H*H         c15 L*L*P         c16 P*P*P
//   c17 P*H*H         c18 L*L*H         c19 P*P*H         c20 H*H*H
//
// row = row_off + row_scale * line_num(L,P,H) / line_den(L,P,H), same for col
// with the samp pair. Inverse coefficients, when present, map normalized
// (C, R, H) = (col_n, row_n, alt_n) back to lat/lon with the same term order
// (L := C, P := R) and are used as the localization starting point.
struct RpcModel {
  std::array<double, 20> line_num{}, line_den{}, samp_num{}, samp_den{};
  double lat_off = 0, lat_scale = 1;
  double lon_off = 0, lon_scale = 1;
  double alt_off = 0, alt_scale = 1;
  double row_off = 0, row_scale = 1;
  double col_off = 0, col_scale = 1;

  bool has_inverse = false;
  std::array<double, 20> inv_lat_num{}, inv_lat_den{}, inv_lon_num{},
      inv_lon_den{};
};

struct RpcParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingField : RpcParseError {
  explicit MissingField(const std::string& name)
      : RpcParseError("missing field: " + name) {}
};
struct MalformedNumber : RpcParseError {
  explicit MalformedNumber(int line, const std::string& what)
      : RpcParseError("line " + std::to_string(line) + ": " + what) {}
};
struct BadCoefficientCount : RpcParseError {
  using RpcParseError::RpcParseError;
};
struct DenominatorNearZero : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Evaluates the 20-term cubic in the exact RPC00B order above.
double rpc_poly_eval(const std::array<double, 20>& c, double l, double p,
                     double h);

// Text format: one uppercase `KEY: value` per line (LINE_OFF, LINE_SCALE,
// SAMP_OFF, SAMP_SCALE, LAT_OFF, LAT_SCALE, LON_OFF, LON_SCALE, ALT_OFF,
// ALT_SCALE, LINE_NUM_COEFF_1..20, LINE_DEN_COEFF_1..20, SAMP_NUM_COEFF_1..20,
// SAMP_DEN_COEFF_1..20, optional LAT_NUM/LAT_DEN/LON_NUM/LON_DEN_COEFF_1..20).
RpcModel parse_rpc_text(const std::string& blob);
std::string serialize_rpc_text(const RpcModel& m);

// JSON mirror: identical keys, coefficient groups as 20-element arrays
// (e.g. "LINE_NUM_COEFF": [...]).
RpcModel parse_rpc_json(const std::string& json_blob);
std::string serialize_rpc_json(const RpcModel& m);

PixelCoord rpc_project(const RpcModel& m, const GeodeticPoint& g);

// Newton iteration on the two normalized ground coordinates at fixed
// altitude; finite-difference Jacobian, tol 1e-10 normalized px, 20 iters.
GeodeticPoint rpc_localize(const RpcModel& m, const PixelCoord& p,
                           double alt_m);

}  // namespace satnerf
