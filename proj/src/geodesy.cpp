#include "satnerf/geodesy.hpp"

#include <algorithm>
#include <cmath>

namespace satnerf {

namespace {
constexpr double kDeg2Rad = M_PI / 180.0;
constexpr double kRad2Deg = 180.0 / M_PI;
}  // namespace

EcefPoint geodetic_to_ecef(const GeodeticPoint& g) {
  const double lat = g.lat_deg * kDeg2Rad;
  const double lon = g.lon_deg * kDeg2Rad;
  const double sl = std::sin(lat), cl = std::cos(lat);
  const double n = kWgs84A / std::sqrt(1.0 - kWgs84E2 * sl * sl);
  return {(n + g.alt_m) * cl * std::cos(lon),
          (n + g.alt_m) * cl * std::sin(lon),
          (n * (1.0 - kWgs84E2) + g.alt_m) * sl};
}

GeodeticPoint ecef_to_geodetic(const EcefPoint& e) {
  const double p = std::hypot(e.x, e.y);
  if (p < 1e-9) {
    // Pole: longitude is degenerate, defined as 0.
    const double lat = e.z >= 0 ? 90.0 : -90.0;
    return {lat, 0.0, std::abs(e.z) - kWgs84B};
  }
  const double lon = std::atan2(e.y, e.x);
  double lat = std::atan2(e.z, p * (1.0 - kWgs84E2));

  // altitude from whichever trigonometric branch is well conditioned
  const auto altitude = [&](double phi, double n) {
    const double c = std::cos(phi), s = std::sin(phi);
    return std::abs(c) > std::abs(s) ? p / c - n
                                     : e.z / s - n * (1.0 - kWgs84E2);
  };

  for (int it = 0; it < 50; ++it) {
    const double sl = std::sin(lat);
    const double n = kWgs84A / std::sqrt(1.0 - kWgs84E2 * sl * sl);
    const double alt = altitude(lat, n);
    const double next = std::atan2(e.z, p * (1.0 - kWgs84E2 * n / (n + alt)));
    if (std::abs(next - lat) < 1e-12) {
      lat = next;
      const double sl2 = std::sin(lat);
      const double n2 = kWgs84A / std::sqrt(1.0 - kWgs84E2 * sl2 * sl2);
      return {lat * kRad2Deg, lon * kRad2Deg, altitude(lat, n2)};
    }
    lat = next;
  }
  throw NonConvergence("ecef_to_geodetic: latitude iteration did not settle");
}

SceneNormalization fit_normalization(std::span<const EcefPoint> points,
                                     double h_min, double h_max) {
  if (points.size() < 2)
    throw DegenerateExtent("fit_normalization: need at least 2 points");
  Vec3 lo{points[0].x, points[0].y, points[0].z};
  Vec3 hi = lo;
  for (const auto& p : points) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    lo.z = std::min(lo.z, p.z);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
    hi.z = std::max(hi.z, p.z);
  }
  SceneNormalization n;
  n.offset = (lo + hi) * 0.5;
  const double half =
      std::max({(hi.x - lo.x) * 0.5, (hi.y - lo.y) * 0.5, (hi.z - lo.z) * 0.5});
  const double s = std::max(half, 1.0);
  n.scale = {s, s, s};
  n.h_min = h_min;
  n.h_max = h_max;
  return n;
}

}  // namespace satnerf
