#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "satnerf/image_io.hpp"
#include "satnerf/losses.hpp"
#include "satnerf/rays.hpp"
#include "satnerf/rpc.hpp"

namespace satnerf {

struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ImageRecord {
  int32_t id = 0;
  std::string image_path;
  std::string rpc_path;  // empty when the rpc came inline
  RpcModel rpc;
  double sun_azimuth_deg = 0;   // clockwise from north
  double sun_elevation_deg = 0; // above horizon, (0, 90]
  std::string split = "train";
  Image image;
  Vec3 sun_dir;  // unit, normalized frame, filled by the loader
};

struct DatasetManifest {
  std::string scene_id;
  std::vector<std::string> image_meta_paths;
  double h_min = 0, h_max = 0;
  std::string depth_points_path;   // optional
  std::string reference_dsm_path;  // optional
  std::string root_dir;            // directory of the manifest file
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<ImageRecord> records;
  SceneFrame frame;
  std::vector<DepthPoint> depth_points;
  std::vector<Ray> ds_rays;              // one per depth point
  std::vector<double> ds_target_depth;   // |X - o| in normalized units
  uint64_t content_hash = 0;

  const ImageRecord* find_record(int32_t id) const {
    for (const auto& r : records)
      if (r.id == id) return &r;
    return nullptr;
  }
  size_t train_ray_count() const {
    size_t n = 0;
    for (const auto& r : records)
      if (r.split == "train")
        n += static_cast<size_t>(r.image.width) * r.image.height;
    return n;
  }
};

// Down-sun unit vector in the local east-north-up frame:
// -(sin az cos el, cos az cos el, sin el). Azimuth clockwise from north.
Vec3 sun_dir_enu(double az_deg, double el_deg);

Dataset load_dataset(const std::string& manifest_path);

// All training rays in image order, pixel row-major. Persisted next to the
// manifest keyed by a content hash of the inputs; hits are bit-identical.
struct RayStore {
  std::vector<Ray> rays;
  uint64_t hash = 0;
  bool from_cache = false;
};

RayStore cache_rays(const Dataset& ds, bool persist = true);

// Without-replacement batches inside per-epoch permutations; everything is a
// pure function of (seed, iteration), so resuming needs no sampler state.
class BatchSampler {
 public:
  BatchSampler(size_t count, size_t batch_size, uint64_t seed);

  int64_t iters_per_epoch() const { return iters_per_epoch_; }
  int64_t epoch_of(int64_t iter) const { return iter / iters_per_epoch_; }

  // ray indices for this iteration (the final batch of an epoch may be short)
  std::vector<uint32_t> batch(int64_t iter);

 private:
  void ensure_epoch(int64_t epoch);

  size_t count_, batch_;
  uint64_t seed_;
  int64_t iters_per_epoch_;
  int64_t cached_epoch_ = -1;
  std::vector<uint32_t> perm_;
};

// Anchors for solar-correction rays: uniform over the footprint on the h_max
// plane, sun direction copied from a uniformly drawn training record.
struct SolarBatch {
  std::vector<Ray> rays;
};
SolarBatch sample_solar_batch(const Dataset& ds, size_t size, uint64_t seed,
                              int64_t iter);

// Depth-supervision batch: uniform with replacement over the sparse points.
std::vector<uint32_t> sample_ds_batch(size_t point_count, size_t size,
                                      uint64_t seed, int64_t iter);

}  // namespace satnerf
