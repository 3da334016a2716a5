#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "satnerf/dataset.hpp"
#include "satnerf/losses.hpp"
#include "satnerf/network.hpp"

namespace satnerf {

struct NonFiniteGradient : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double lr0 = 5e-4;
  double gamma = 0.9;  // per-epoch decay
  int batch = 1024;
  int samples_per_ray = 64;
  int64_t max_iters = 300000;  // desk-scale runs override to 30000

  bool use_sc = true;
  bool use_ds = false;
  bool use_beta = true;
  bool use_shading = true;

  bool jitter = true;  // stratified point sampling while training
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
  bool grad_clip = false;
  double clip_norm = 1.0;

  uint64_t seed = 0;
  int64_t checkpoint_every = 10000;
  std::string precision = "f32";  // f32 | f64
  int eval_samples = 96;          // render-time sampling density
  int workers = 1;
  int64_t log_every = 0;   // stderr progress period, 0 = silent
  int64_t stop_after = 0;  // halt at this iteration, keeping max_iters-based
                           // schedules intact; 0 = run to max_iters

  LossConfig loss;
  NetworkConfig network;  // n_images is filled from the dataset
};

// Flag > file > default: only keys present in the json override.
TrainConfig parse_train_config_json(const std::string& blob,
                                    TrainConfig base = {});
std::string serialize_train_config(const TrainConfig& cfg);

double lr_at(const TrainConfig& cfg, int64_t epoch);

template <typename T>
struct AdamState {
  std::vector<ad::Tensor<T>> m, v;
  int64_t step = 0;

  static AdamState zeros_like(const NetworkParams<T>& p) {
    AdamState s;
    for (const auto& t : p.tensors) {
      s.m.emplace_back(t.rows, t.cols);
      s.v.emplace_back(t.rows, t.cols);
    }
    return s;
  }
};

// One bias-corrected update over every parameter tensor.
template <typename T>
void adam_step(NetworkParams<T>& params,
               const std::vector<ad::Tensor<T>>& grads, AdamState<T>& state,
               double lr, const TrainConfig& cfg);

// Checkpoint layout: one json header line (format, iteration, seed, adam
// step, network config, tensor table) followed by three little-endian f64
// blobs in tensor order: parameters, adam first moments, adam second moments.
// The rng "state" is {seed, iteration}: training streams are pure functions
// of those, so a resumed run continues bit-identically.
template <typename T>
void save_checkpoint(const std::string& path, const NetworkParams<T>& params,
                     const AdamState<T>& state, int64_t iteration,
                     const TrainConfig& cfg);

struct CheckpointInfo {
  int64_t iteration = 0;
  TrainConfig cfg;
};

template <typename T>
CheckpointInfo load_checkpoint(const std::string& path,
                               NetworkParams<T>& params, AdamState<T>& state);

NetworkConfig checkpoint_network_config(const std::string& path);
std::string checkpoint_precision(const std::string& path);

struct TrainResult {
  int64_t iterations = 0;
  std::string final_checkpoint;
  std::string metrics_path;
};

TrainResult train(const TrainConfig& cfg, const Dataset& ds,
                  const std::string& out_dir,
                  const std::string& resume_from = "");

}  // namespace satnerf
