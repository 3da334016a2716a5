#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

namespace satnerf {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
};

inline double dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z,
          a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(const Vec3& a) { return a / norm(a); }

struct GeodeticPoint {
  double lat_deg = 0;  // [-90, 90]
  double lon_deg = 0;  // (-180, 180]
  double alt_m = 0;
};

struct EcefPoint {
  double x = 0, y = 0, z = 0;
  Vec3 vec() const { return {x, y, z}; }
};

// WGS84 ellipsoid.
inline constexpr double kWgs84A = 6378137.0;
inline constexpr double kWgs84F = 1.0 / 298.257223563;
inline constexpr double kWgs84B = kWgs84A * (1.0 - kWgs84F);
inline constexpr double kWgs84E2 = kWgs84F * (2.0 - kWgs84F);

struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateExtent : std::runtime_error {
  using std::runtime_error::runtime_error;
};

EcefPoint geodetic_to_ecef(const GeodeticPoint& g);

// Iterative latitude refinement; throws NonConvergence after 50 iterations.
GeodeticPoint ecef_to_geodetic(const EcefPoint& e);

// Maps the working volume into [-1,1]^3: per-axis offset, one isotropic
// scale (max half-extent over the axes) so directions are preserved.
struct SceneNormalization {
  Vec3 offset;
  Vec3 scale;  // all components equal by construction, floored at 1 m
  double h_min = 0;
  double h_max = 0;

  Vec3 normalize(const EcefPoint& p) const {
    return {(p.x - offset.x) / scale.x, (p.y - offset.y) / scale.y,
            (p.z - offset.z) / scale.z};
  }
  EcefPoint denormalize(const Vec3& q) const {
    return {q.x * scale.x + offset.x, q.y * scale.y + offset.y,
            q.z * scale.z + offset.z};
  }
};

SceneNormalization fit_normalization(std::span<const EcefPoint> points,
                                     double h_min, double h_max);

}  // namespace satnerf
