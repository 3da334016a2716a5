#include "satnerf/rays.hpp"

#include <algorithm>
#include <cmath>

namespace satnerf {

EcefPoint SceneFrame::enu_to_ecef(const Vec3& v) const {
  const EcefPoint c = geodetic_to_ecef(center);
  const Vec3 p = c.vec() + enu_to_ecef_dir(v);
  return {p.x, p.y, p.z};
}

SceneFrame make_scene_frame(const GeodeticPoint& center, double east_half_m,
                            double north_half_m, const SceneNormalization& n) {
  SceneFrame f;
  f.center = center;
  const double lat = center.lat_deg * M_PI / 180.0;
  const double lon = center.lon_deg * M_PI / 180.0;
  const double sl = std::sin(lat), cl = std::cos(lat);
  const double so = std::sin(lon), co = std::cos(lon);
  f.east = {-so, co, 0.0};
  f.north = {-sl * co, -sl * so, cl};
  f.up = {cl * co, cl * so, sl};
  f.east_half_m = east_half_m;
  f.north_half_m = north_half_m;
  f.norm = n;
  return f;
}

Ray build_ray(const RpcModel& m, const PixelCoord& p,
              const SceneNormalization& n, const Vec3& sun_dir, int32_t j,
              const std::array<double, 3>& gt_color) {
  const GeodeticPoint top = rpc_localize(m, p, n.h_max);
  const GeodeticPoint bot = rpc_localize(m, p, n.h_min);
  const Vec3 x_start = n.normalize(geodetic_to_ecef(top));
  const Vec3 x_end = n.normalize(geodetic_to_ecef(bot));
  Ray r;
  r.o = x_start;
  const Vec3 chord = x_end - x_start;
  r.t_max = norm(chord);
  r.d = chord / r.t_max;
  r.t_min = 0.0;
  r.sun_dir = sun_dir;
  r.image_index = j;
  r.pixel = p;
  r.gt_color = gt_color;
  return r;
}

SampledRay sample_points(const Ray& r, int n, bool jitter, Pcg32& rng) {
  SampledRay s;
  s.t.resize(n);
  s.points.resize(n);
  s.delta.resize(n);
  const double span = r.t_max - r.t_min;
  if (jitter) {
    for (int i = 0; i < n; ++i)
      s.t[i] = r.t_min + (i + rng.next_double()) / n * span;
  } else {
    for (int i = 0; i < n; ++i)
      s.t[i] = r.t_min + static_cast<double>(i) / (n - 1) * span;
  }
  for (int i = 0; i < n; ++i) s.points[i] = r.o + r.d * s.t[i];
  for (int i = 0; i + 1 < n; ++i) s.delta[i] = s.t[i + 1] - s.t[i];
  s.delta[n - 1] = n >= 2 ? s.delta[n - 2] : span;
  return s;
}

std::vector<Ray> build_solar_rays(std::span<const GeodeticPoint> anchors,
                                  const Vec3& sun_enu, const SceneFrame& f) {
  if (sun_enu.z >= 0.0)
    throw SunBelowHorizon("build_solar_rays: sun direction does not descend");
  const Vec3 w = normalized(sun_enu);
  const double h_span = f.norm.h_max - f.norm.h_min;

  const Vec3 center_ecef = geodetic_to_ecef(f.center).vec();
  std::vector<Ray> rays;
  rays.reserve(anchors.size());
  for (const auto& a : anchors) {
    // Entry point sits on the h_max plane; clip t (meters along w) against
    // the vertical slab and the footprint.
    double t_exit = h_span / (-w.z);
    const EcefPoint a_ecef =
        geodetic_to_ecef({a.lat_deg, a.lon_deg, f.norm.h_max});
    const Vec3 start_enu = f.ecef_to_enu_dir(a_ecef.vec() - center_ecef);
    auto clip_axis = [&](double x0, double dir, double half) {
      if (dir > 1e-15)
        t_exit = std::min(t_exit, (half - x0) / dir);
      else if (dir < -1e-15)
        t_exit = std::min(t_exit, (-half - x0) / dir);
    };
    clip_axis(start_enu.x, w.x, f.east_half_m);
    clip_axis(start_enu.y, w.y, f.north_half_m);
    t_exit = std::max(t_exit, 0.0);

    const Vec3 w_ecef = f.enu_to_ecef_dir(w);
    const Vec3 end_ecef = a_ecef.vec() + w_ecef * t_exit;

    Ray r;
    r.o = f.norm.normalize(a_ecef);
    const Vec3 x_end = f.norm.normalize({end_ecef.x, end_ecef.y, end_ecef.z});
    const Vec3 chord = x_end - r.o;
    r.t_max = norm(chord);
    r.d = r.t_max > 0 ? chord / r.t_max : w_ecef;
    r.sun_dir = w_ecef;
    r.pixel = {0, 0};
    rays.push_back(r);
  }
  return rays;
}

}  // namespace satnerf
