#include "satnerf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <sstream>

#include "json.hpp"
#include "satnerf/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace satnerf {

namespace {

constexpr const char* kRayCacheMagic = "SNRAY01\n";
constexpr const char* kCacheVersion = "raycache-v1";

std::string resolve(const std::string& root, const std::string& rel) {
  if (rel.empty()) return rel;
  fs::path p(rel);
  if (p.is_absolute()) return rel;
  return (fs::path(root) / p).string();
}

RpcModel load_rpc_any(const std::string& path) {
  const std::string blob = read_file(path);
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json")
    return parse_rpc_json(blob);
  return parse_rpc_text(blob);
}

}  // namespace

Vec3 sun_dir_enu(double az_deg, double el_deg) {
  if (!(el_deg > 0.0) || el_deg > 90.0)
    throw SunBelowHorizon("sun elevation must be in (0, 90]");
  const double az = az_deg * M_PI / 180.0;
  const double el = el_deg * M_PI / 180.0;
  return {-std::sin(az) * std::cos(el), -std::cos(az) * std::cos(el),
          -std::sin(el)};
}

Dataset load_dataset(const std::string& manifest_path) {
  Dataset ds;
  json mj;
  try {
    mj = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw DatasetError(manifest_path + ": " + e.what());
  }
  auto& m = ds.manifest;
  m.root_dir = fs::path(manifest_path).parent_path().string();
  try {
    m.scene_id = mj.at("scene_id").get<std::string>();
    m.h_min = mj.at("h_min").get<double>();
    m.h_max = mj.at("h_max").get<double>();
    for (const auto& p : mj.at("images"))
      m.image_meta_paths.push_back(p.get<std::string>());
    if (mj.contains("depth_points") && !mj["depth_points"].is_null())
      m.depth_points_path = mj["depth_points"].get<std::string>();
    if (mj.contains("reference_dsm") && !mj["reference_dsm"].is_null())
      m.reference_dsm_path = mj["reference_dsm"].get<std::string>();
  } catch (const json::exception& e) {
    throw DatasetError(manifest_path + ": " + e.what());
  }
  if (!(m.h_min < m.h_max))
    throw DatasetError(manifest_path + ": h_min must be below h_max");

  uint64_t hash = fnv1a64(kCacheVersion);
  for (const auto& meta_rel : m.image_meta_paths) {
    const std::string meta_path = resolve(m.root_dir, meta_rel);
    json ij;
    try {
      ij = json::parse(read_file(meta_path));
    } catch (const json::exception& e) {
      throw DatasetError(meta_path + ": " + e.what());
    }
    ImageRecord rec;
    try {
      rec.id = ij.at("id").get<int32_t>();
      rec.image_path = resolve(m.root_dir, ij.at("image").get<std::string>());
      rec.sun_azimuth_deg = ij.at("sun_azimuth_deg").get<double>();
      rec.sun_elevation_deg = ij.at("sun_elevation_deg").get<double>();
      rec.split = ij.at("split").get<std::string>();
      if (ij.contains("rpc_inline")) {
        rec.rpc = parse_rpc_json(ij["rpc_inline"].dump());
      } else {
        rec.rpc_path = resolve(m.root_dir, ij.at("rpc").get<std::string>());
        rec.rpc = load_rpc_any(rec.rpc_path);
      }
    } catch (const json::exception& e) {
      throw DatasetError(meta_path + ": " + e.what());
    }
    if (rec.sun_azimuth_deg < 0 || rec.sun_azimuth_deg >= 360)
      throw DatasetError(meta_path + ": sun azimuth out of [0,360)");
    if (!(rec.sun_elevation_deg > 0) || rec.sun_elevation_deg > 90)
      throw DatasetError(meta_path + ": sun elevation out of (0,90]");
    if (rec.split != "train" && rec.split != "test")
      throw DatasetError(meta_path + ": split must be train or test");
    rec.image = read_png(rec.image_path);
    if (rec.image.width <= 0 || rec.image.height <= 0)
      throw DatasetError(rec.image_path + ": empty image");

    hash = fnv1a64(rec.image.rgb.data(), rec.image.rgb.size(), hash);
    const std::string rpc_text = serialize_rpc_text(rec.rpc);
    hash = fnv1a64(rpc_text.data(), rpc_text.size(), hash);
    hash = fnv1a64(&rec.sun_azimuth_deg, 8, hash);
    hash = fnv1a64(&rec.sun_elevation_deg, 8, hash);
    hash = fnv1a64(rec.split.data(), rec.split.size(), hash);
    ds.records.push_back(std::move(rec));
  }
  hash = fnv1a64(&m.h_min, 8, hash);
  hash = fnv1a64(&m.h_max, 8, hash);
  ds.content_hash = hash;

  size_t n_train = 0;
  for (const auto& r : ds.records) n_train += r.split == "train";
  if (n_train == 0) throw DatasetError("dataset has no training images");

  // Boundary point cloud: every pixel of every image localized at both
  // altitude bounds, defining the normalization and the footprint.
  std::vector<EcefPoint> boundary;
  std::vector<GeodeticPoint> boundary_geo;
  for (const auto& rec : ds.records) {
    for (int r = 0; r < rec.image.height; ++r)
      for (int c = 0; c < rec.image.width; ++c) {
        const PixelCoord px{r + 0.5, c + 0.5};
        const auto lo = rpc_localize(rec.rpc, px, m.h_min);
        const auto hi = rpc_localize(rec.rpc, px, m.h_max);
        boundary.push_back(geodetic_to_ecef(lo));
        boundary.push_back(geodetic_to_ecef(hi));
        boundary_geo.push_back(lo);
        boundary_geo.push_back(hi);
      }
  }
  const auto scene_norm = fit_normalization(boundary, m.h_min, m.h_max);

  double lat0 = 0, lon0 = 0;
  double lat_lo = boundary_geo[0].lat_deg, lat_hi = lat_lo;
  double lon_lo = boundary_geo[0].lon_deg, lon_hi = lon_lo;
  for (const auto& g : boundary_geo) {
    lat_lo = std::min(lat_lo, g.lat_deg);
    lat_hi = std::max(lat_hi, g.lat_deg);
    lon_lo = std::min(lon_lo, g.lon_deg);
    lon_hi = std::max(lon_hi, g.lon_deg);
  }
  lat0 = (lat_lo + lat_hi) / 2;
  lon0 = (lon_lo + lon_hi) / 2;

  SceneFrame probe = make_scene_frame({lat0, lon0, (m.h_min + m.h_max) / 2},
                                      1, 1, scene_norm);
  const Vec3 center_ecef = geodetic_to_ecef(probe.center).vec();
  double e_half = 0, n_half = 0;
  for (const auto& g : boundary_geo) {
    const Vec3 enu =
        probe.ecef_to_enu_dir(geodetic_to_ecef(g).vec() - center_ecef);
    e_half = std::max(e_half, std::abs(enu.x));
    n_half = std::max(n_half, std::abs(enu.y));
  }
  ds.frame = make_scene_frame(probe.center, e_half, n_half, scene_norm);

  for (auto& rec : ds.records)
    rec.sun_dir = normalized(ds.frame.enu_to_ecef_dir(
        sun_dir_enu(rec.sun_azimuth_deg, rec.sun_elevation_deg)));

  // sparse depth points
  if (!m.depth_points_path.empty()) {
    const std::string path = resolve(m.root_dir, m.depth_points_path);
    std::istringstream in(read_file(path));
    std::string line;
    int lineno = 0;
    std::vector<double> errs;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      DepthPoint p;
      int32_t j;
      double row, col, err;
      if (!(ls >> j >> row >> col >> p.point.x >> p.point.y >> p.point.z >>
            err))
        throw DatasetError(path + ":" + std::to_string(lineno) +
                           ": want `j row col X Y Z err`");
      p.image_index = j;
      p.pixel = {row, col};
      p.reproj_err = err;
      if (std::abs(p.point.x) > 1.5 || std::abs(p.point.y) > 1.5 ||
          std::abs(p.point.z) > 1.5)
        throw DatasetError(path + ":" + std::to_string(lineno) +
                           ": point outside the normalized volume");
      const ImageRecord* rec = ds.find_record(j);
      if (!rec || rec->split != "train")
        throw DatasetError(path + ":" + std::to_string(lineno) +
                           ": image index " + std::to_string(j) +
                           " is not a training image");
      errs.push_back(err);
      ds.depth_points.push_back(p);
    }
    const auto weights = losses::ds_weights(errs);
    for (size_t i = 0; i < weights.size(); ++i) {
      ds.depth_points[i].weight = weights[i];
      const auto& rec = *ds.find_record(ds.depth_points[i].image_index);
      Ray ray = build_ray(rec.rpc, ds.depth_points[i].pixel, scene_norm,
                          rec.sun_dir, rec.id, {0, 0, 0});
      ds.ds_rays.push_back(ray);
      ds.ds_target_depth.push_back(norm(ds.depth_points[i].point - ray.o));
    }
  }
  return ds;
}

RayStore cache_rays(const Dataset& ds, bool persist) {
  RayStore store;
  store.hash = ds.content_hash;
  const std::string cache_path =
      (fs::path(ds.manifest.root_dir) / "rays.cache").string();

  if (persist && fs::exists(cache_path)) {
    const std::string blob = read_file(cache_path);
    if (blob.size() >= 24 && blob.compare(0, 8, kRayCacheMagic) == 0) {
      uint64_t hash, count;
      std::memcpy(&hash, blob.data() + 8, 8);
      std::memcpy(&count, blob.data() + 16, 8);
      const size_t stride = 15 * 8 + 8;
      if (hash == ds.content_hash && blob.size() == 24 + count * stride) {
        store.rays.resize(count);
        size_t off = 24;
        for (auto& r : store.rays) {
          double buf[15];
          std::memcpy(buf, blob.data() + off, 15 * 8);
          off += 15 * 8;
          int64_t j;
          std::memcpy(&j, blob.data() + off, 8);
          off += 8;
          r.o = {buf[0], buf[1], buf[2]};
          r.d = {buf[3], buf[4], buf[5]};
          r.t_max = buf[6];
          r.sun_dir = {buf[7], buf[8], buf[9]};
          r.pixel = {buf[10], buf[11]};
          r.gt_color = {buf[12], buf[13], buf[14]};
          r.image_index = static_cast<int32_t>(j);
        }
        store.from_cache = true;
        return store;
      }
    }
  }

  for (const auto& rec : ds.records) {
    if (rec.split != "train") continue;
    for (int r = 0; r < rec.image.height; ++r)
      for (int c = 0; c < rec.image.width; ++c) {
        const std::array<double, 3> gt = {rec.image.at(r, c, 0),
                                          rec.image.at(r, c, 1),
                                          rec.image.at(r, c, 2)};
        store.rays.push_back(build_ray(rec.rpc, {r + 0.5, c + 0.5},
                                       ds.frame.norm, rec.sun_dir, rec.id,
                                       gt));
      }
  }

  if (persist) {
    std::string blob = kRayCacheMagic;
    const uint64_t count = store.rays.size();
    blob.append(reinterpret_cast<const char*>(&store.hash), 8);
    blob.append(reinterpret_cast<const char*>(&count), 8);
    for (const auto& r : store.rays) {
      const double buf[15] = {r.o.x,       r.o.y,       r.o.z,
                              r.d.x,       r.d.y,       r.d.z,
                              r.t_max,     r.sun_dir.x, r.sun_dir.y,
                              r.sun_dir.z, r.pixel.row, r.pixel.col,
                              r.gt_color[0], r.gt_color[1], r.gt_color[2]};
      const int64_t j = r.image_index;
      blob.append(reinterpret_cast<const char*>(buf), 15 * 8);
      blob.append(reinterpret_cast<const char*>(&j), 8);
    }
    write_file(cache_path, blob);
  }
  return store;
}

BatchSampler::BatchSampler(size_t count, size_t batch_size, uint64_t seed)
    : count_(count), batch_(batch_size), seed_(seed) {
  if (count_ == 0) throw DatasetError("sampler: empty ray store");
  iters_per_epoch_ =
      static_cast<int64_t>((count_ + batch_ - 1) / batch_);
}

void BatchSampler::ensure_epoch(int64_t epoch) {
  if (epoch == cached_epoch_) return;
  perm_.resize(count_);
  for (size_t i = 0; i < count_; ++i) perm_[i] = static_cast<uint32_t>(i);
  Pcg32 rng = rng_stream(seed_, "epoch-permutation",
                         static_cast<uint64_t>(epoch));
  for (size_t i = count_ - 1; i > 0; --i) {
    const uint32_t j = rng.below(static_cast<uint32_t>(i + 1));
    std::swap(perm_[i], perm_[j]);
  }
  cached_epoch_ = epoch;
}

std::vector<uint32_t> BatchSampler::batch(int64_t iter) {
  const int64_t epoch = epoch_of(iter);
  ensure_epoch(epoch);
  const size_t pos = static_cast<size_t>(iter % iters_per_epoch_) * batch_;
  const size_t end = std::min(count_, pos + batch_);
  return {perm_.begin() + pos, perm_.begin() + end};
}

SolarBatch sample_solar_batch(const Dataset& ds, size_t size, uint64_t seed,
                              int64_t iter) {
  Pcg32 rng = rng_stream(seed, "solar-anchors", static_cast<uint64_t>(iter));
  std::vector<const ImageRecord*> train;
  for (const auto& r : ds.records)
    if (r.split == "train") train.push_back(&r);

  const auto& f = ds.frame;
  const double mpd_lat =
      M_PI / 180.0 * kWgs84A;  // coarse; anchors only need footprint coverage
  const double mpd_lon = mpd_lat * std::cos(f.center.lat_deg * M_PI / 180.0);

  SolarBatch out;
  out.rays.reserve(size);
  for (size_t i = 0; i < size; ++i) {
    const auto& rec = *train[rng.below(static_cast<uint32_t>(train.size()))];
    const GeodeticPoint anchor{
        f.center.lat_deg +
            rng.uniform(-f.north_half_m, f.north_half_m) / mpd_lat,
        f.center.lon_deg +
            rng.uniform(-f.east_half_m, f.east_half_m) / mpd_lon,
        f.norm.h_max};
    const Vec3 enu = sun_dir_enu(rec.sun_azimuth_deg, rec.sun_elevation_deg);
    auto rays = build_solar_rays(std::span(&anchor, 1), enu, f);
    rays[0].image_index = rec.id;
    out.rays.push_back(rays[0]);
  }
  return out;
}

std::vector<uint32_t> sample_ds_batch(size_t point_count, size_t size,
                                      uint64_t seed, int64_t iter) {
  Pcg32 rng = rng_stream(seed, "depth-batch", static_cast<uint64_t>(iter));
  std::vector<uint32_t> idx(size);
  for (auto& i : idx) i = rng.below(static_cast<uint32_t>(point_count));
  return idx;
}

}  // namespace satnerf
