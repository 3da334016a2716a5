#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "satnerf/geodesy.hpp"
#include "satnerf/tape.hpp"

namespace satnerf {

struct IndexOutOfRange : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NetworkConfig {
  int hidden = 512;  // desk-scale runs use 64
  int depth_main = 8;
  int n_transient = 4;
  int n_images = 1;
  double omega0 = 30.0;
  double embed_sigma = 0.01;
  // density = sigma_gain * softplus(head output): puts fully opaque samples
  // within the head's dynamic range instead of waiting for weight growth
  double sigma_gain = 20.0;
  uint64_t seed = 0;
};

// Named parameter tensors in a fixed order; checkpoints serialize the flat
// blobs in exactly this order:
//   main.0.w main.0.b ... main.7.w main.7.b
//   sigma.w sigma.b
//   albedo.0.w albedo.0.b albedo.1.w albedo.1.b
//   shading.0..3 (.w .b)
//   ambient.0..1 (.w .b)
//   beta.0..1 (.w .b)
//   embedding
template <typename T>
struct NetworkParams {
  NetworkConfig cfg;
  std::vector<std::string> names;
  std::vector<ad::Tensor<T>> tensors;

  size_t total_size() const {
    size_t n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
  }
  int find(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    return -1;
  }
};

// Sine layers follow the SIREN scheme: layer output sin(omega0 * (Wx + b));
// first-layer weights U(-1/fan_in, 1/fan_in), hidden sine layers
// U(+-sqrt(6/fan_in)/omega0), non-sine output layers U(+-sqrt(6/fan_in)),
// biases U(+-1/sqrt(fan_in)), embeddings N(0, embed_sigma^2).
template <typename T>
NetworkParams<T> init_params(const NetworkConfig& cfg);

template <typename T>
struct HeadIds {
  using Id = typename ad::Tape<T>::Id;
  Id sigma;     // [P,1] softplus
  Id albedo;    // [P,3] sigmoid
  Id shading;   // [P,1] sigmoid
  Id ambient;   // [P,3] sigmoid
  Id beta;      // [P,1] softplus
  Id features;  // [P,h] main block output
};

template <typename T>
struct ParamBinding {
  std::vector<typename ad::Tape<T>::Id> ids;  // parallel to params.tensors
};

// Evaluates the whole network for a batch of points. x and omega are already
// tape leaves ([P,3] each); image_idx selects the per-point transient
// embedding row. When binding is non-null the parameters are registered as
// tracked leaves, so their gradients can be read after backward().
template <typename T>
HeadIds<T> forward_batch(ad::Tape<T>& tape, const NetworkParams<T>& params,
                         typename ad::Tape<T>::Id x,
                         typename ad::Tape<T>::Id omega,
                         const std::vector<int32_t>& image_idx,
                         ParamBinding<T>* binding = nullptr);

template <typename T>
struct HeadOutputs {
  T sigma;
  std::array<T, 3> albedo;
  T shading;
  std::array<T, 3> ambient;
  T beta;
};

template <typename T>
HeadOutputs<T> forward_point(const NetworkParams<T>& params, const Vec3& x,
                             const Vec3& omega, int32_t j);

}  // namespace satnerf
