#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "satnerf/image_io.hpp"
#include "satnerf/rpc.hpp"

namespace satnerf {

struct BoxSpec {
  double cx = 0, cy = 0;   // center, meters east/north of the footprint center
  double sx = 10, sy = 10; // side lengths
  double height = 10;      // above the ground plane
  std::array<double, 3> albedo{0.7, 0.7, 0.7};
};

struct ViewSpec {
  double view_az_deg = 0;
  double view_el_deg = 90;
  double sun_az_deg = 160;
  double sun_el_deg = 50;
  std::string split = "train";
};

struct SceneSpec {
  std::string scene_id = "desk";
  double footprint_m = 64;
  double base_alt_m = 50;
  int image_size = 96;
  double center_lat = 38.0;
  double center_lon = -105.0;
  std::array<double, 3> ground_albedo{0.45, 0.42, 0.35};
  std::array<double, 3> ambient{0.22, 0.26, 0.45};  // shadow tint
  double texture_amp = 0.35;    // multiplicative albedo noise amplitude
  double texture_scale_m = 5.0; // coarsest noise wavelength
  std::vector<BoxSpec> boxes;
  std::vector<ViewSpec> views;
  int transients_per_view = 0;
  int transient_min_px = 3;
  int transient_max_px = 9;
  double noise_sigma = 0.0;
  double rpc_jitter_px = 0.0;  // per-view pixel offsets, emulates raw cameras
  double alt_margin_m = 2.0;
  int sparse_points = 0;       // surface samples written as depth supervision
  uint64_t seed = 0;

  double gsd() const { return footprint_m / image_size; }
  double max_box_height() const {
    double h = 0;
    for (const auto& b : boxes) h = std::max(h, b.height);
    return h;
  }
  double h_min() const { return base_alt_m - alt_margin_m; }
  double h_max() const { return base_alt_m + max_box_height() + alt_margin_m; }
};

// 10-view scene with a few boxes; seeds the sun/view geometry.
SceneSpec default_scene(uint64_t seed);

SceneSpec parse_scene_json(const std::string& blob);
std::string serialize_scene_json(const SceneSpec& spec);

// Exact affine camera in rpc form: row/col linear in (lat, lon, alt) with
// altitude parallax along the view direction; round-trips in closed form.
RpcModel fabricate_rpc(const SceneSpec& spec, const ViewSpec& view,
                       double jitter_row_px = 0, double jitter_col_px = 0);

struct ReferenceView {
  Image image;                          // final pixels (transients + noise)
  std::vector<uint8_t> shadow_mask;     // 1 = static scene shadow
  std::vector<uint8_t> transient_mask;  // 1 = painted over by a transient
  std::vector<double> surface_alt;      // true altitude seen per pixel
};

// Exact heightfield intersection, analytic sun occlusion, lambertian color
// with the ambient tint in shadow.
ReferenceView render_reference(const SceneSpec& spec, int view_index);

// True surface altitude at footprint coordinates (east, north).
double scene_surface_alt(const SceneSpec& spec, double e, double n);

// Deterministic multiplicative texture factor (two octaves of smooth value
// noise); identical in every view so multi-view color stays consistent.
double scene_texture(const SceneSpec& spec, double e, double n);

// Analytic sun-occlusion test at footprint coordinates.
bool scene_point_lit(const SceneSpec& spec, double e, double n, double alt,
                     double sun_az_deg, double sun_el_deg);

// Writes images, rpc sidecars, metadata, manifest, the true dsm raster and
// (optionally) sparse surface points in the loader's formats.
void make_dataset(const SceneSpec& spec, const std::string& out_dir);

}  // namespace satnerf
