#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "satnerf/network.hpp"
#include "satnerf/rays.hpp"
#include "satnerf/rpc.hpp"
#include "satnerf/utm.hpp"

namespace satnerf {

struct NoOverlap : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GridMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Georeferenced altitude raster. Row 0 is the northern edge; nodata is NaN in
// memory and -9999 on disk.
struct Dsm {
  double origin_easting = 0;   // lower-left (south-west) corner
  double origin_northing = 0;
  double resolution = 0.5;     // meters per cell
  int width = 0, height = 0;
  int zone = 0;
  bool south = false;
  std::vector<double> alt;

  static constexpr double kNoData = -9999.0;

  double at(int r, int c) const { return alt[static_cast<size_t>(r) * width + c]; }
  double& at(int r, int c) { return alt[static_cast<size_t>(r) * width + c]; }
  bool valid(int r, int c) const { return std::isfinite(at(r, c)); }
  double cell_easting(int c) const {
    return origin_easting + (c + 0.5) * resolution;
  }
  double cell_northing(int r) const {
    return origin_northing + (height - r - 0.5) * resolution;
  }
};

// ASCII-grid style header (ncols, nrows, xllcorner, yllcorner, cellsize,
// NODATA_value, zone, south) followed by row-major values; round trip is
// bit-exact. The .bin variant stores the same header fields and a raw
// little-endian double payload.
void write_dsm_ascii(const std::string& path, const Dsm& d);
Dsm read_dsm_ascii(const std::string& path);
void write_dsm_binary(const std::string& path, const Dsm& d);
Dsm read_dsm_binary(const std::string& path);

struct SurfacePoint {
  GeodeticPoint geodetic;
  UtmCoord utm;
};

// Lift rendered depths through the ray geometry back to geodetic points.
std::vector<SurfacePoint> depth_to_surface_points(
    std::span<const Ray> rays, std::span<const double> depths,
    std::span<const double> weight_sums, const SceneNormalization& n,
    double weight_threshold, int utm_zone);

struct GridBounds {
  double origin_easting = 0, origin_northing = 0;
  int width = 0, height = 0;
};

// Per-cell median aggregation; cells without points become nodata.
Dsm rasterize_dsm(std::span<const SurfacePoint> points, double resolution,
                  const GridBounds* bounds = nullptr, int zone = 0,
                  bool south = false);

struct DsmScore {
  double mae = 0;
  double completeness = 0;  // scored cells / valid reference cells
  double shift = 0;         // vertical alignment applied to pred
};

DsmScore dsm_mae(const Dsm& pred, const Dsm& ref, bool align_shift);

// Full-view render: color, depth, weight sum and integrated shading per
// pixel. Deterministic (no jitter); points processed in fixed chunks.
struct ViewRender {
  int width = 0, height = 0;
  std::vector<double> rgb;         // 3 per pixel
  std::vector<double> depth;
  std::vector<double> weight_sum;
  std::vector<double> sun_vis;
  std::vector<double> beta;
  std::vector<Ray> rays;
};

template <typename T>
ViewRender render_view(const NetworkParams<T>& params, const RpcModel& rpc,
                       int width, int height, const SceneNormalization& norm,
                       const Vec3& sun_dir, int32_t embedding_index,
                       int n_samples, bool use_shading, int workers = 1);

}  // namespace satnerf
