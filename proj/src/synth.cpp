#include "satnerf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "json.hpp"
#include "satnerf/dataset.hpp"
#include "satnerf/dsm.hpp"
#include "satnerf/rng.hpp"
#include "satnerf/utm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace satnerf {

namespace {

struct CameraLin {
  double pe, pn;        // lateral drift per meter of altitude
  double k_e, k_n;      // meters per degree of lon / lat
  double c0, r0;        // principal point (pixels)
  double gsd;
};

CameraLin camera_for(const SceneSpec& spec, const ViewSpec& v) {
  CameraLin cam;
  const double az = v.view_az_deg * M_PI / 180.0;
  const double el = v.view_el_deg * M_PI / 180.0;
  cam.pe = std::sin(az) / std::tan(el);
  cam.pn = std::cos(az) / std::tan(el);
  const double lat = spec.center_lat * M_PI / 180.0;
  const double s2 = std::sin(lat) * std::sin(lat);
  const double n_rad = kWgs84A / std::sqrt(1 - kWgs84E2 * s2);
  const double m_rad =
      kWgs84A * (1 - kWgs84E2) / std::pow(1 - kWgs84E2 * s2, 1.5);
  cam.k_e = (n_rad + spec.base_alt_m) * std::cos(lat) * M_PI / 180.0;
  cam.k_n = (m_rad + spec.base_alt_m) * M_PI / 180.0;
  cam.c0 = spec.image_size / 2.0;
  cam.r0 = spec.image_size / 2.0;
  cam.gsd = spec.gsd();
  return cam;
}

struct Hit {
  double du;         // altitude above the ground plane
  int box = -1;      // -1 = ground
};

Hit trace(const SceneSpec& spec, const CameraLin& cam, double pr, double pc) {
  const double e0 = (pc - cam.c0) * cam.gsd;
  const double n0 = -(pr - cam.r0) * cam.gsd;
  auto e_at = [&](double du) { return e0 + cam.pe * du; };
  auto n_at = [&](double du) { return n0 + cam.pn * du; };

  Hit best{0.0, -1};  // the ground plane always terminates the ray
  for (size_t b = 0; b < spec.boxes.size(); ++b) {
    const auto& box = spec.boxes[b];
    const double ex0 = box.cx - box.sx / 2, ex1 = box.cx + box.sx / 2;
    const double ny0 = box.cy - box.sy / 2, ny1 = box.cy + box.sy / 2;
    // top face
    const double et = e_at(box.height), nt = n_at(box.height);
    if (et >= ex0 && et <= ex1 && nt >= ny0 && nt <= ny1 &&
        box.height > best.du) {
      best = {box.height, static_cast<int>(b)};
    }
    // side walls
    if (std::abs(cam.pe) > 1e-12) {
      for (const double ex : {ex0, ex1}) {
        const double du = (ex - e0) / cam.pe;
        if (du > best.du && du <= box.height) {
          const double nn = n_at(du);
          if (nn >= ny0 && nn <= ny1) best = {du, static_cast<int>(b)};
        }
      }
    }
    if (std::abs(cam.pn) > 1e-12) {
      for (const double ny : {ny0, ny1}) {
        const double du = (ny - n0) / cam.pn;
        if (du > best.du && du <= box.height) {
          const double ee = e_at(du);
          if (ee >= ex0 && ee <= ex1) best = {du, static_cast<int>(b)};
        }
      }
    }
  }
  return best;
}

}  // namespace

double scene_surface_alt(const SceneSpec& spec, double e, double n) {
  double du = 0;
  for (const auto& b : spec.boxes) {
    if (std::abs(e - b.cx) <= b.sx / 2 && std::abs(n - b.cy) <= b.sy / 2)
      du = std::max(du, b.height);
  }
  return spec.base_alt_m + du;
}

namespace {

double lattice_value(uint64_t seed, int64_t ix, int64_t iy) {
  const uint64_t h = mix64(seed ^ mix64(static_cast<uint64_t>(ix) * 0x9e3779b97f4a7c15ULL ^
                                        static_cast<uint64_t>(iy) + 0x7f4a7c15ULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

double value_noise(uint64_t seed, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const int64_t ix = static_cast<int64_t>(fx), iy = static_cast<int64_t>(fy);
  double tx = x - fx, ty = y - fy;
  tx = tx * tx * (3 - 2 * tx);  // smoothstep
  ty = ty * ty * (3 - 2 * ty);
  const double v00 = lattice_value(seed, ix, iy);
  const double v10 = lattice_value(seed, ix + 1, iy);
  const double v01 = lattice_value(seed, ix, iy + 1);
  const double v11 = lattice_value(seed, ix + 1, iy + 1);
  return (v00 * (1 - tx) + v10 * tx) * (1 - ty) +
         (v01 * (1 - tx) + v11 * tx) * ty;
}

}  // namespace

double scene_texture(const SceneSpec& spec, double e, double n) {
  if (spec.texture_amp <= 0) return 1.0;
  const uint64_t s = mix64(spec.seed ^ 0x5eedfacecafef00dULL);
  const double w = spec.texture_scale_m;
  const double v = 0.7 * value_noise(s, e / w, n / w) +
                   0.3 * value_noise(s ^ 0xabcdef, e / (w / 3), n / (w / 3));
  const double f = 1.0 + spec.texture_amp * v;
  return std::clamp(f, 0.25, 1.75);
}

bool scene_point_lit(const SceneSpec& spec, double e, double n, double alt,
                     double sun_az_deg, double sun_el_deg) {
  const double az = sun_az_deg * M_PI / 180.0;
  const double el = sun_el_deg * M_PI / 180.0;
  const Vec3 toward_sun{std::sin(az) * std::cos(el),
                        std::cos(az) * std::cos(el), std::sin(el)};
  const double z = alt - spec.base_alt_m + 1e-6;
  for (const auto& b : spec.boxes) {
    const double lo[3] = {b.cx - b.sx / 2, b.cy - b.sy / 2, 0.0};
    const double hi[3] = {b.cx + b.sx / 2, b.cy + b.sy / 2, b.height};
    const double org[3] = {e, n, z};
    const double dir[3] = {toward_sun.x, toward_sun.y, toward_sun.z};
    double t0 = 1e-9, t1 = 1e18;
    bool miss = false;
    for (int ax = 0; ax < 3 && !miss; ++ax) {
      if (std::abs(dir[ax]) < 1e-15) {
        // grazing along a face does not occlude
        if (org[ax] <= lo[ax] || org[ax] >= hi[ax]) miss = true;
      } else {
        double ta = (lo[ax] - org[ax]) / dir[ax];
        double tb = (hi[ax] - org[ax]) / dir[ax];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) miss = true;
      }
    }
    if (!miss) return false;
  }
  return true;
}

SceneSpec default_scene(uint64_t seed) {
  SceneSpec s;
  s.seed = seed;
  s.boxes = {
      {-12.0, -8.0, 16.0, 14.0, 12.0, {0.75, 0.30, 0.25}},
      {13.0, 10.0, 12.0, 18.0, 8.0, {0.30, 0.45, 0.75}},
      {4.0, -16.0, 10.0, 8.0, 5.0, {0.70, 0.68, 0.60}},
  };
  // views circle the site; suns sweep the southern sky
  Pcg32 rng = rng_stream(seed, "scene-views");
  const int n_views = 10;
  for (int i = 0; i < n_views; ++i) {
    ViewSpec v;
    v.view_az_deg = 36.0 * i + rng.uniform(-8, 8);
    v.view_el_deg = rng.uniform(55, 85);
    v.sun_az_deg = 100.0 + 140.0 * i / (n_views - 1) + rng.uniform(-5, 5);
    v.sun_el_deg = rng.uniform(38, 65);
    v.split = i == n_views - 1 ? "test" : "train";
    s.views.push_back(v);
  }
  return s;
}

RpcModel fabricate_rpc(const SceneSpec& spec, const ViewSpec& view,
                       double jitter_row_px, double jitter_col_px) {
  const CameraLin cam = camera_for(spec, view);
  RpcModel m;
  m.lat_off = spec.center_lat;
  m.lon_off = spec.center_lon;
  m.alt_off = spec.base_alt_m;
  m.lon_scale = 0.75 * spec.footprint_m / cam.k_e;
  m.lat_scale = 0.75 * spec.footprint_m / cam.k_n;
  m.alt_scale = spec.h_max() - spec.h_min();
  m.row_off = cam.r0 + jitter_row_px;
  m.col_off = cam.c0 + jitter_col_px;
  m.row_scale = spec.image_size / 2.0;
  m.col_scale = spec.image_size / 2.0;
  m.line_den[0] = m.samp_den[0] = 1.0;

  // col_n = (e - du*pe) / (gsd * col_scale), e = L * lon_scale * k_e
  m.samp_num[1] = m.lon_scale * cam.k_e / (cam.gsd * m.col_scale);
  m.samp_num[3] = -m.alt_scale * cam.pe / (cam.gsd * m.col_scale);
  m.line_num[2] = -m.lat_scale * cam.k_n / (cam.gsd * m.row_scale);
  m.line_num[3] = m.alt_scale * cam.pn / (cam.gsd * m.row_scale);

  // exact affine inverse: lat/lon from (col_n, row_n, H)
  m.has_inverse = true;
  m.inv_lat_den[0] = m.inv_lon_den[0] = 1.0;
  // e = col_n * gsd * col_scale + du * pe; du = H * alt_scale
  m.inv_lon_num[1] = cam.gsd * m.col_scale / (m.lon_scale * cam.k_e);
  m.inv_lon_num[3] = m.alt_scale * cam.pe / (m.lon_scale * cam.k_e);
  m.inv_lat_num[2] = -cam.gsd * m.row_scale / (m.lat_scale * cam.k_n);
  m.inv_lat_num[3] = m.alt_scale * cam.pn / (m.lat_scale * cam.k_n);
  return m;
}

ReferenceView render_reference(const SceneSpec& spec, int view_index) {
  const auto& view = spec.views.at(view_index);
  const CameraLin cam = camera_for(spec, view);
  const int sz = spec.image_size;

  ReferenceView out;
  out.image = Image::blank(sz, sz);
  out.shadow_mask.assign(static_cast<size_t>(sz) * sz, 0);
  out.transient_mask.assign(static_cast<size_t>(sz) * sz, 0);
  out.surface_alt.assign(static_cast<size_t>(sz) * sz, 0);

  for (int r = 0; r < sz; ++r)
    for (int c = 0; c < sz; ++c) {
      const double pr = r + 0.5, pc = c + 0.5;
      const Hit hit = trace(spec, cam, pr, pc);
      const double e = (pc - cam.c0) * cam.gsd + cam.pe * hit.du;
      const double n = -(pr - cam.r0) * cam.gsd + cam.pn * hit.du;
      const double alt = spec.base_alt_m + hit.du;
      const auto& albedo =
          hit.box >= 0 ? spec.boxes[hit.box].albedo : spec.ground_albedo;
      const double tex = scene_texture(spec, e, n);
      const bool lit =
          scene_point_lit(spec, e, n, alt, view.sun_az_deg, view.sun_el_deg);
      const size_t px = static_cast<size_t>(r) * sz + c;
      out.surface_alt[px] = alt;
      out.shadow_mask[px] = lit ? 0 : 1;
      for (int ch = 0; ch < 3; ++ch) {
        const double a = std::clamp(albedo[ch] * tex, 0.0, 1.0);
        const double v = lit ? a : a * spec.ambient[ch];
        out.image.set(r, c, ch, v);
      }
    }

  if (spec.transients_per_view > 0) {
    Pcg32 rng = rng_stream(spec.seed, "transients",
                           static_cast<uint64_t>(view_index));
    for (int k = 0; k < spec.transients_per_view; ++k) {
      const int w = spec.transient_min_px +
                    static_cast<int>(rng.below(
                        spec.transient_max_px - spec.transient_min_px + 1));
      const int h = spec.transient_min_px +
                    static_cast<int>(rng.below(
                        spec.transient_max_px - spec.transient_min_px + 1));
      const int r0 = static_cast<int>(rng.below(sz - h));
      const int c0 = static_cast<int>(rng.below(sz - w));
      const double col[3] = {rng.uniform(0.15, 0.95), rng.uniform(0.15, 0.95),
                             rng.uniform(0.15, 0.95)};
      for (int r = r0; r < r0 + h; ++r)
        for (int c = c0; c < c0 + w; ++c) {
          out.transient_mask[static_cast<size_t>(r) * sz + c] = 1;
          for (int ch = 0; ch < 3; ++ch) out.image.set(r, c, ch, col[ch]);
        }
    }
  }

  if (spec.noise_sigma > 0) {
    Pcg32 rng =
        rng_stream(spec.seed, "pixel-noise", static_cast<uint64_t>(view_index));
    for (int r = 0; r < sz; ++r)
      for (int c = 0; c < sz; ++c)
        for (int ch = 0; ch < 3; ++ch)
          out.image.set(r, c, ch,
                        out.image.at(r, c, ch) +
                            spec.noise_sigma * rng.normal());
  }
  return out;
}

namespace {

json scene_to_json(const SceneSpec& s) {
  json j;
  j["scene_id"] = s.scene_id;
  j["footprint_m"] = s.footprint_m;
  j["base_alt_m"] = s.base_alt_m;
  j["image_size"] = s.image_size;
  j["center_lat"] = s.center_lat;
  j["center_lon"] = s.center_lon;
  j["ground_albedo"] = s.ground_albedo;
  j["ambient"] = s.ambient;
  j["texture_amp"] = s.texture_amp;
  j["texture_scale_m"] = s.texture_scale_m;
  j["transients_per_view"] = s.transients_per_view;
  j["transient_min_px"] = s.transient_min_px;
  j["transient_max_px"] = s.transient_max_px;
  j["noise_sigma"] = s.noise_sigma;
  j["rpc_jitter_px"] = s.rpc_jitter_px;
  j["alt_margin_m"] = s.alt_margin_m;
  j["sparse_points"] = s.sparse_points;
  j["seed"] = s.seed;
  j["boxes"] = json::array();
  for (const auto& b : s.boxes)
    j["boxes"].push_back({{"cx", b.cx},
                          {"cy", b.cy},
                          {"sx", b.sx},
                          {"sy", b.sy},
                          {"height", b.height},
                          {"albedo", b.albedo}});
  j["views"] = json::array();
  for (const auto& v : s.views)
    j["views"].push_back({{"view_az_deg", v.view_az_deg},
                          {"view_el_deg", v.view_el_deg},
                          {"sun_az_deg", v.sun_az_deg},
                          {"sun_el_deg", v.sun_el_deg},
                          {"split", v.split}});
  return j;
}

}  // namespace

std::string serialize_scene_json(const SceneSpec& s) {
  return scene_to_json(s).dump(2);
}

SceneSpec parse_scene_json(const std::string& blob) {
  json j = json::parse(blob);
  SceneSpec s;
  auto opt = [&](const char* k, auto& dst) {
    if (j.contains(k)) dst = j[k].get<std::decay_t<decltype(dst)>>();
  };
  opt("scene_id", s.scene_id);
  opt("footprint_m", s.footprint_m);
  opt("base_alt_m", s.base_alt_m);
  opt("image_size", s.image_size);
  opt("center_lat", s.center_lat);
  opt("center_lon", s.center_lon);
  opt("ground_albedo", s.ground_albedo);
  opt("ambient", s.ambient);
  opt("texture_amp", s.texture_amp);
  opt("texture_scale_m", s.texture_scale_m);
  opt("transients_per_view", s.transients_per_view);
  opt("transient_min_px", s.transient_min_px);
  opt("transient_max_px", s.transient_max_px);
  opt("noise_sigma", s.noise_sigma);
  opt("rpc_jitter_px", s.rpc_jitter_px);
  opt("alt_margin_m", s.alt_margin_m);
  opt("sparse_points", s.sparse_points);
  opt("seed", s.seed);
  if (j.contains("boxes")) {
    s.boxes.clear();
    for (const auto& bj : j["boxes"]) {
      BoxSpec b;
      b.cx = bj.at("cx").get<double>();
      b.cy = bj.at("cy").get<double>();
      b.sx = bj.at("sx").get<double>();
      b.sy = bj.at("sy").get<double>();
      b.height = bj.at("height").get<double>();
      if (bj.contains("albedo")) b.albedo = bj["albedo"].get<std::array<double, 3>>();
      s.boxes.push_back(b);
    }
  }
  if (j.contains("views")) {
    s.views.clear();
    for (const auto& vj : j["views"]) {
      ViewSpec v;
      v.view_az_deg = vj.at("view_az_deg").get<double>();
      v.view_el_deg = vj.at("view_el_deg").get<double>();
      v.sun_az_deg = vj.at("sun_az_deg").get<double>();
      v.sun_el_deg = vj.at("sun_el_deg").get<double>();
      if (vj.contains("split")) v.split = vj["split"].get<std::string>();
      s.views.push_back(v);
    }
  }
  return s;
}

void make_dataset(const SceneSpec& spec, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const auto path = [&](const std::string& f) {
    return (fs::path(out_dir) / f).string();
  };

  json manifest;
  manifest["scene_id"] = spec.scene_id;
  manifest["h_min"] = spec.h_min();
  manifest["h_max"] = spec.h_max();
  manifest["images"] = json::array();

  Pcg32 jitter_rng = rng_stream(spec.seed, "rpc-jitter");
  for (size_t i = 0; i < spec.views.size(); ++i) {
    const auto& view = spec.views[i];
    char name[64];
    std::snprintf(name, sizeof name, "view_%03zu", i);
    const ReferenceView rv = render_reference(spec, static_cast<int>(i));
    write_png(path(std::string(name) + ".png"), rv.image);

    double jr = 0, jc = 0;
    if (spec.rpc_jitter_px > 0) {
      jr = jitter_rng.uniform(-spec.rpc_jitter_px, spec.rpc_jitter_px);
      jc = jitter_rng.uniform(-spec.rpc_jitter_px, spec.rpc_jitter_px);
    }
    const RpcModel rpc = fabricate_rpc(spec, view, jr, jc);
    write_file(path(std::string(name) + ".rpc.txt"), serialize_rpc_text(rpc));

    json meta;
    meta["id"] = static_cast<int>(i);
    meta["image"] = std::string(name) + ".png";
    meta["rpc"] = std::string(name) + ".rpc.txt";
    meta["sun_azimuth_deg"] = view.sun_az_deg;
    meta["sun_elevation_deg"] = view.sun_el_deg;
    meta["split"] = view.split;
    write_file(path(std::string(name) + ".json"), meta.dump(2));
    manifest["images"].push_back(std::string(name) + ".json");
  }

  // true surface raster on the comparison grid
  {
    const double half = spec.footprint_m / 2.0 - 1.0;
    const CameraLin cam = camera_for(spec, spec.views.at(0));
    UtmCoord corners[4];
    int idx = 0;
    for (const double de : {-half, half})
      for (const double dn : {-half, half}) {
        const GeodeticPoint g{spec.center_lat + dn / cam.k_n,
                              spec.center_lon + de / cam.k_e,
                              spec.base_alt_m};
        corners[idx++] = geodetic_to_utm(g);
      }
    double e0 = corners[0].easting, e1 = e0, n0 = corners[0].northing, n1 = n0;
    for (const auto& c : corners) {
      e0 = std::min(e0, c.easting);
      e1 = std::max(e1, c.easting);
      n0 = std::min(n0, c.northing);
      n1 = std::max(n1, c.northing);
    }
    Dsm truth;
    truth.resolution = 0.5;
    truth.zone = corners[0].zone;
    truth.south = corners[0].south;
    truth.origin_easting = std::floor(e0 / truth.resolution) * truth.resolution;
    truth.origin_northing =
        std::floor(n0 / truth.resolution) * truth.resolution;
    truth.width =
        static_cast<int>(std::ceil((e1 - truth.origin_easting) / truth.resolution));
    truth.height =
        static_cast<int>(std::ceil((n1 - truth.origin_northing) / truth.resolution));
    truth.alt.resize(static_cast<size_t>(truth.width) * truth.height);
    for (int r = 0; r < truth.height; ++r)
      for (int c = 0; c < truth.width; ++c) {
        UtmCoord u;
        u.zone = truth.zone;
        u.south = truth.south;
        u.easting = truth.cell_easting(c);
        u.northing = truth.cell_northing(r);
        const GeodeticPoint g = utm_to_geodetic(u);
        const double e = (g.lon_deg - spec.center_lon) * cam.k_e;
        const double n = (g.lat_deg - spec.center_lat) * cam.k_n;
        truth.at(r, c) = scene_surface_alt(spec, e, n);
      }
    write_dsm_ascii(path("truth_dsm.asc"), truth);
    manifest["reference_dsm"] = "truth_dsm.asc";
  }

  write_file(path("manifest.json"), manifest.dump(2));

  // sparse surface points, expressed in the loader's normalized frame
  if (spec.sparse_points > 0) {
    const Dataset ds = load_dataset(path("manifest.json"));
    Pcg32 rng = rng_stream(spec.seed, "sparse-points");
    std::vector<int> train_views;
    for (size_t i = 0; i < spec.views.size(); ++i)
      if (spec.views[i].split == "train") train_views.push_back(static_cast<int>(i));

    std::string lines = "# j row col X Y Z err\n";
    char buf[256];
    for (int k = 0; k < spec.sparse_points; ++k) {
      const int vi = train_views[rng.below(static_cast<uint32_t>(train_views.size()))];
      const CameraLin cam = camera_for(spec, spec.views[vi]);
      const double pr = rng.uniform(2.0, spec.image_size - 2.0);
      const double pc = rng.uniform(2.0, spec.image_size - 2.0);
      const Hit hit = trace(spec, cam, pr, pc);
      const double e = (pc - cam.c0) * cam.gsd + cam.pe * hit.du;
      const double n = -(pr - cam.r0) * cam.gsd + cam.pn * hit.du;
      const GeodeticPoint g{spec.center_lat + n / cam.k_n,
                            spec.center_lon + e / cam.k_e,
                            spec.base_alt_m + hit.du};
      const Vec3 x = ds.frame.norm.normalize(geodetic_to_ecef(g));
      std::snprintf(buf, sizeof buf, "%d %.17g %.17g %.17g %.17g %.17g 0\n",
                    vi, pr, pc, x.x, x.y, x.z);
      lines += buf;
    }
    write_file(path("points.txt"), lines);
    manifest["depth_points"] = "points.txt";
    write_file(path("manifest.json"), manifest.dump(2));
  }
}

}  // namespace satnerf
