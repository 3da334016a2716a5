#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "satnerf/geodesy.hpp"
#include "satnerf/rng.hpp"
#include "satnerf/rpc.hpp"

namespace satnerf {

struct SunBelowHorizon : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Local east-north-up frame anchored at the footprint center, plus the scene
// normalization. Normalization is isotropic, so unit directions are the same
// in ECEF and in normalized coordinates.
struct SceneFrame {
  GeodeticPoint center;
  Vec3 east, north, up;  // ECEF unit vectors
  double east_half_m = 0, north_half_m = 0;  // footprint half extents
  SceneNormalization norm;

  Vec3 enu_to_ecef_dir(const Vec3& v) const {
    return east * v.x + north * v.y + up * v.z;
  }
  EcefPoint enu_to_ecef(const Vec3& v) const;
  Vec3 ecef_to_enu_dir(const Vec3& v) const {
    return {dot(v, east), dot(v, north), dot(v, up)};
  }
};

SceneFrame make_scene_frame(const GeodeticPoint& center, double east_half_m,
                            double north_half_m, const SceneNormalization& n);

struct Ray {
  Vec3 o;            // normalized coordinates
  Vec3 d;            // unit
  double t_min = 0;
  double t_max = 0;  // chord length in normalized units
  Vec3 sun_dir;      // unit, pointing from the sun into the scene
  int32_t image_index = 0;
  PixelCoord pixel;
  std::array<double, 3> gt_color{0, 0, 0};
};

struct SampledRay {
  std::vector<double> t;      // ascending in [t_min, t_max]
  std::vector<Vec3> points;   // o + t_i d
  std::vector<double> delta;  // t_{i+1} - t_i; last repeats the previous gap
};

// Chord through the scene volume: endpoints localized at h_max (origin) and
// h_min, both mapped into normalized coordinates.
Ray build_ray(const RpcModel& m, const PixelCoord& p,
              const SceneNormalization& n, const Vec3& sun_dir, int32_t j,
              const std::array<double, 3>& gt_color);

// jitter=false: endpoints-inclusive uniform spacing. jitter=true: one uniform
// draw per stratum of [t_min, t_max] split into n equal bins.
SampledRay sample_points(const Ray& r, int n, bool jitter, Pcg32& rng);

// Rays entering the volume on the h_max plane at the given anchors and
// following the sun direction, clipped to the footprint box.
std::vector<Ray> build_solar_rays(std::span<const GeodeticPoint> anchors,
                                  const Vec3& sun_enu, const SceneFrame& f);

}  // namespace satnerf
