#include "satnerf/dsm.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <sstream>
#include <thread>

#include "satnerf/image_io.hpp"
#include "satnerf/render.hpp"

namespace satnerf {

namespace {
std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

void write_dsm_ascii(const std::string& path, const Dsm& d) {
  std::string out;
  out += "ncols " + std::to_string(d.width) + "\n";
  out += "nrows " + std::to_string(d.height) + "\n";
  out += "xllcorner " + fmt17(d.origin_easting) + "\n";
  out += "yllcorner " + fmt17(d.origin_northing) + "\n";
  out += "cellsize " + fmt17(d.resolution) + "\n";
  out += "NODATA_value -9999\n";
  out += "zone " + std::to_string(d.zone) + "\n";
  out += std::string("south ") + (d.south ? "1" : "0") + "\n";
  for (int r = 0; r < d.height; ++r) {
    for (int c = 0; c < d.width; ++c) {
      if (c) out += ' ';
      out += d.valid(r, c) ? fmt17(d.at(r, c)) : "-9999";
    }
    out += '\n';
  }
  write_file(path, out);
}

Dsm read_dsm_ascii(const std::string& path) {
  std::istringstream in(read_file(path));
  Dsm d;
  std::string key;
  auto expect = [&](const char* want) {
    in >> key;
    if (key != want) throw GridMismatch("dsm header: expected " + std::string(want));
  };
  expect("ncols");
  in >> d.width;
  expect("nrows");
  in >> d.height;
  expect("xllcorner");
  in >> d.origin_easting;
  expect("yllcorner");
  in >> d.origin_northing;
  expect("cellsize");
  in >> d.resolution;
  expect("NODATA_value");
  double nodata;
  in >> nodata;
  expect("zone");
  in >> d.zone;
  expect("south");
  int south;
  in >> south;
  d.south = south != 0;
  d.alt.resize(static_cast<size_t>(d.width) * d.height);
  for (auto& v : d.alt) {
    if (!(in >> v)) throw GridMismatch("dsm payload truncated: " + path);
    if (v == nodata) v = std::numeric_limits<double>::quiet_NaN();
  }
  return d;
}

void write_dsm_binary(const std::string& path, const Dsm& d) {
  std::string out = "SNDSM01\n";
  auto put = [&](const void* p, size_t n) {
    out.append(static_cast<const char*>(p), n);
  };
  const int32_t w = d.width, h = d.height, zone = d.zone,
                south = d.south ? 1 : 0;
  put(&w, 4);
  put(&h, 4);
  put(&zone, 4);
  put(&south, 4);
  put(&d.origin_easting, 8);
  put(&d.origin_northing, 8);
  put(&d.resolution, 8);
  put(d.alt.data(), d.alt.size() * 8);
  write_file(path, out);
}

Dsm read_dsm_binary(const std::string& path) {
  const std::string blob = read_file(path);
  if (blob.size() < 8 + 16 + 24 || blob.compare(0, 8, "SNDSM01\n") != 0)
    throw GridMismatch("bad dsm binary header: " + path);
  size_t off = 8;
  auto get = [&](void* p, size_t n) {
    std::memcpy(p, blob.data() + off, n);
    off += n;
  };
  Dsm d;
  int32_t w, h, zone, south;
  get(&w, 4);
  get(&h, 4);
  get(&zone, 4);
  get(&south, 4);
  get(&d.origin_easting, 8);
  get(&d.origin_northing, 8);
  get(&d.resolution, 8);
  d.width = w;
  d.height = h;
  d.zone = zone;
  d.south = south != 0;
  const size_t n = static_cast<size_t>(w) * h;
  if (blob.size() != off + n * 8)
    throw GridMismatch("dsm binary payload size mismatch: " + path);
  d.alt.resize(n);
  get(d.alt.data(), n * 8);
  return d;
}

std::vector<SurfacePoint> depth_to_surface_points(
    std::span<const Ray> rays, std::span<const double> depths,
    std::span<const double> weight_sums, const SceneNormalization& n,
    double weight_threshold, int utm_zone) {
  std::vector<SurfacePoint> out;
  out.reserve(rays.size());
  for (size_t i = 0; i < rays.size(); ++i) {
    if (weight_sums[i] < weight_threshold) continue;
    const Vec3 q = rays[i].o + rays[i].d * depths[i];
    SurfacePoint sp;
    sp.geodetic = ecef_to_geodetic(n.denormalize(q));
    sp.utm = geodetic_to_utm(sp.geodetic, utm_zone);
    out.push_back(sp);
  }
  return out;
}

Dsm rasterize_dsm(std::span<const SurfacePoint> points, double resolution,
                  const GridBounds* bounds, int zone, bool south) {
  if (points.empty() && !bounds)
    throw NoOverlap("rasterize_dsm: no points and no bounds");

  Dsm d;
  d.resolution = resolution;
  if (bounds) {
    d.origin_easting = bounds->origin_easting;
    d.origin_northing = bounds->origin_northing;
    d.width = bounds->width;
    d.height = bounds->height;
  } else {
    double e0 = points[0].utm.easting, e1 = e0;
    double n0 = points[0].utm.northing, n1 = n0;
    for (const auto& p : points) {
      e0 = std::min(e0, p.utm.easting);
      e1 = std::max(e1, p.utm.easting);
      n0 = std::min(n0, p.utm.northing);
      n1 = std::max(n1, p.utm.northing);
    }
    d.origin_easting = std::floor(e0 / resolution) * resolution;
    d.origin_northing = std::floor(n0 / resolution) * resolution;
    d.width = static_cast<int>(std::ceil((e1 - d.origin_easting) / resolution)) + 1;
    d.height = static_cast<int>(std::ceil((n1 - d.origin_northing) / resolution)) + 1;
  }
  d.zone = zone ? zone : (points.empty() ? 0 : points[0].utm.zone);
  d.south = points.empty() ? south : points[0].utm.south;
  d.alt.assign(static_cast<size_t>(d.width) * d.height,
               std::numeric_limits<double>::quiet_NaN());

  std::vector<std::vector<float>> cells(d.alt.size());
  for (const auto& p : points) {
    const int c = static_cast<int>(
        std::floor((p.utm.easting - d.origin_easting) / resolution));
    const int r_from_bottom = static_cast<int>(
        std::floor((p.utm.northing - d.origin_northing) / resolution));
    const int r = d.height - 1 - r_from_bottom;
    if (c < 0 || c >= d.width || r < 0 || r >= d.height) continue;
    cells[static_cast<size_t>(r) * d.width + c].push_back(
        static_cast<float>(p.geodetic.alt_m));
  }
  for (size_t i = 0; i < cells.size(); ++i) {
    auto& v = cells[i];
    if (v.empty()) continue;
    std::sort(v.begin(), v.end());
    const size_t mid = v.size() / 2;
    d.alt[i] = v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
  }
  return d;
}

DsmScore dsm_mae(const Dsm& pred, const Dsm& ref, bool align_shift) {
  if (std::abs(pred.resolution - ref.resolution) > 1e-9)
    throw GridMismatch("dsm_mae: resolutions differ (resample first)");
  const double dc = (pred.origin_easting - ref.origin_easting) / ref.resolution;
  const double dr = (pred.origin_northing - ref.origin_northing) / ref.resolution;
  const int ic = static_cast<int>(std::lround(dc));
  const int ir = static_cast<int>(std::lround(dr));
  if (std::abs(dc - ic) > 1e-6 || std::abs(dr - ir) > 1e-6)
    throw GridMismatch("dsm_mae: grids not cell-aligned");

  // collect differences over the cell-aligned overlap
  std::vector<double> diffs;
  size_t ref_valid = 0;
  for (int r = 0; r < ref.height; ++r)
    for (int c = 0; c < ref.width; ++c) {
      if (!ref.valid(r, c)) continue;
      ++ref_valid;
      // same world cell in pred
      const double northing = ref.cell_northing(r);
      const double easting = ref.cell_easting(c);
      const int pc = static_cast<int>(
          std::floor((easting - pred.origin_easting) / pred.resolution));
      const int pr_from_bottom = static_cast<int>(
          std::floor((northing - pred.origin_northing) / pred.resolution));
      const int pr = pred.height - 1 - pr_from_bottom;
      if (pc < 0 || pc >= pred.width || pr < 0 || pr >= pred.height) continue;
      if (!pred.valid(pr, pc)) continue;
      diffs.push_back(pred.at(pr, pc) - ref.at(r, c));
    }
  if (diffs.empty()) throw NoOverlap("dsm_mae: no mutually valid cells");

  DsmScore s;
  if (align_shift) {
    std::vector<double> sorted = diffs;
    std::sort(sorted.begin(), sorted.end());
    const size_t mid = sorted.size() / 2;
    s.shift = sorted.size() % 2 ? sorted[mid]
                                : 0.5 * (sorted[mid - 1] + sorted[mid]);
  }
  double acc = 0;
  for (const double v : diffs) acc += std::abs(v - s.shift);
  s.mae = acc / static_cast<double>(diffs.size());
  s.completeness = ref_valid ? static_cast<double>(diffs.size()) / ref_valid : 0;
  return s;
}

template <typename T>
ViewRender render_view(const NetworkParams<T>& params, const RpcModel& rpc,
                       int width, int height, const SceneNormalization& norm,
                       const Vec3& sun_dir, int32_t embedding_index,
                       int n_samples, bool use_shading, int workers) {
  ViewRender out;
  out.width = width;
  out.height = height;
  const size_t npx = static_cast<size_t>(width) * height;
  out.rgb.assign(npx * 3, 0);
  out.depth.assign(npx, 0);
  out.weight_sum.assign(npx, 0);
  out.sun_vis.assign(npx, 0);
  out.beta.assign(npx, 0);
  out.rays.resize(npx);

  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c)
      out.rays[static_cast<size_t>(r) * width + c] =
          build_ray(rpc, {r + 0.5, c + 0.5}, norm, sun_dir, embedding_index,
                    {0, 0, 0});

  const size_t chunk_px = std::max<size_t>(1, 16384 / n_samples);
  auto run_range = [&](size_t px0, size_t px1) {
    Pcg32 unused(0, 0);
    for (size_t base = px0; base < px1; base += chunk_px) {
      const size_t count = std::min(chunk_px, px1 - base);
      const size_t pts = count * n_samples;
      ad::Tensor<T> x(pts, 3), w(pts, 3), dl(pts, 1), tv(pts, 1);
      std::vector<int32_t> jidx(pts, embedding_index);
      for (size_t i = 0; i < count; ++i) {
        const Ray& ray = out.rays[base + i];
        const auto s = sample_points(ray, n_samples, false, unused);
        for (int k = 0; k < n_samples; ++k) {
          const size_t row = i * n_samples + k;
          x.v[3 * row + 0] = static_cast<T>(s.points[k].x);
          x.v[3 * row + 1] = static_cast<T>(s.points[k].y);
          x.v[3 * row + 2] = static_cast<T>(s.points[k].z);
          w.v[3 * row + 0] = static_cast<T>(ray.sun_dir.x);
          w.v[3 * row + 1] = static_cast<T>(ray.sun_dir.y);
          w.v[3 * row + 2] = static_cast<T>(ray.sun_dir.z);
          dl.v[row] = static_cast<T>(s.delta[k]);
          tv.v[row] = static_cast<T>(s.t[k]);
        }
      }
      ad::Tape<T> tape;
      tape.set_check_finite(false);
      const auto xid = tape.constant(std::move(x));
      const auto wid = tape.constant(std::move(w));
      const auto did = tape.constant(std::move(dl));
      const auto tid = tape.constant(std::move(tv));
      const auto heads = forward_batch(tape, params, xid, wid, jidx);
      const auto rr = render::composite_batch(tape, heads, did, tid,
                                              n_samples, use_shading);
      const auto& color = tape.value(rr.color);
      const auto& depth = tape.value(rr.depth);
      const auto& wsum = tape.value(rr.weight_sum);
      const auto& sv = tape.value(rr.sun_vis);
      const auto& bt = tape.value(rr.beta);
      for (size_t i = 0; i < count; ++i) {
        for (int ch = 0; ch < 3; ++ch)
          out.rgb[3 * (base + i) + ch] = color.v[3 * i + ch];
        out.depth[base + i] = depth.v[i];
        out.weight_sum[base + i] = wsum.v[i];
        out.sun_vis[base + i] = sv.v[i];
        out.beta[base + i] = bt.v[i];
      }
    }
  };

  if (workers <= 1) {
    run_range(0, npx);
  } else {
    std::vector<std::thread> pool;
    const size_t per = (npx + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
      const size_t lo = t * per, hi = std::min(npx, lo + per);
      if (lo >= hi) break;
      pool.emplace_back(run_range, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

template ViewRender render_view<float>(const NetworkParams<float>&,
                                       const RpcModel&, int, int,
                                       const SceneNormalization&, const Vec3&,
                                       int32_t, int, bool, int);
template ViewRender render_view<double>(const NetworkParams<double>&,
                                        const RpcModel&, int, int,
                                        const SceneNormalization&, const Vec3&,
                                        int32_t, int, bool, int);

}  // namespace satnerf
