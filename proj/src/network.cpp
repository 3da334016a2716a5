#include "satnerf/network.hpp"

#include <cmath>

#include "satnerf/rng.hpp"

namespace satnerf {

namespace {

enum class LayerKind { First, Hidden, Output };

template <typename T>
void init_linear(ad::Tensor<T>& w, ad::Tensor<T>& b, LayerKind kind,
                 double omega0, Pcg32& rng) {
  const double fan_in = static_cast<double>(w.rows);
  double bound = 0;
  switch (kind) {
    case LayerKind::First: bound = 1.0 / fan_in; break;
    case LayerKind::Hidden: bound = std::sqrt(6.0 / fan_in) / omega0; break;
    case LayerKind::Output: bound = std::sqrt(6.0 / fan_in); break;
  }
  for (auto& x : w.v) x = static_cast<T>(rng.uniform(-bound, bound));
  const double bbound = 1.0 / std::sqrt(fan_in);
  for (auto& x : b.v) x = static_cast<T>(rng.uniform(-bbound, bbound));
}

}  // namespace

template <typename T>
NetworkParams<T> init_params(const NetworkConfig& cfg) {
  const int h = cfg.hidden;
  const int h2 = h / 2;
  NetworkParams<T> p;
  p.cfg = cfg;
  Pcg32 rng = rng_stream(cfg.seed, "network-init");

  auto add_linear = [&](const std::string& name, int in, int out,
                        LayerKind kind) {
    ad::Tensor<T> w(in, out), b(1, out);
    init_linear(w, b, kind, cfg.omega0, rng);
    p.names.push_back(name + ".w");
    p.tensors.push_back(std::move(w));
    p.names.push_back(name + ".b");
    p.tensors.push_back(std::move(b));
  };

  // main block: skip connection re-concatenates the input at the 8th layer
  add_linear("main.0", 3, h, LayerKind::First);
  for (int l = 1; l < cfg.depth_main - 1; ++l)
    add_linear("main." + std::to_string(l), h, h, LayerKind::Hidden);
  add_linear("main." + std::to_string(cfg.depth_main - 1), h + 3, h,
             LayerKind::Hidden);

  add_linear("sigma", h, 1, LayerKind::Output);
  // start near-transparent: density stays close to zero until the color
  // terms ask for surface, and an untrained model renders as empty space
  p.tensors[p.find("sigma.b")].v[0] = static_cast<T>(-4.0);

  add_linear("albedo.0", h, h2, LayerKind::Hidden);
  add_linear("albedo.1", h2, 3, LayerKind::Output);

  add_linear("shading.0", h + 3, h2, LayerKind::Hidden);
  add_linear("shading.1", h2, h2, LayerKind::Hidden);
  add_linear("shading.2", h2, h2, LayerKind::Hidden);
  add_linear("shading.3", h2, 1, LayerKind::Output);

  add_linear("ambient.0", 3, h2, LayerKind::Hidden);
  add_linear("ambient.1", h2, 3, LayerKind::Output);

  add_linear("beta.0", h + cfg.n_transient, h2, LayerKind::Hidden);
  add_linear("beta.1", h2, 1, LayerKind::Output);

  ad::Tensor<T> embed(cfg.n_images, cfg.n_transient);
  for (auto& x : embed.v)
    x = static_cast<T>(rng.normal() * cfg.embed_sigma);
  p.names.push_back("embedding");
  p.tensors.push_back(std::move(embed));

  return p;
}

template <typename T>
HeadIds<T> forward_batch(ad::Tape<T>& tape, const NetworkParams<T>& params,
                         typename ad::Tape<T>::Id x,
                         typename ad::Tape<T>::Id omega,
                         const std::vector<int32_t>& image_idx,
                         ParamBinding<T>* binding) {
  using Id = typename ad::Tape<T>::Id;
  const auto& cfg = params.cfg;
  const bool track = binding != nullptr;

  for (const auto idx : image_idx)
    if (idx < 0 || idx >= cfg.n_images)
      throw IndexOutOfRange("forward_batch: image index " +
                            std::to_string(idx));

  // A binding with ids already filled reuses the same parameter leaves, so
  // several forward passes on one tape accumulate into one gradient set.
  std::vector<Id> pid;
  if (binding && !binding->ids.empty()) {
    pid = binding->ids;
  } else {
    pid.resize(params.tensors.size());
    for (size_t i = 0; i < params.tensors.size(); ++i)
      pid[i] = tape.leaf(params.tensors[i], track);
    if (binding) binding->ids = pid;
  }

  const T w0 = static_cast<T>(cfg.omega0);
  int cursor = 0;
  auto linear = [&](Id in) {
    const Id w = pid[cursor++];
    const Id b = pid[cursor++];
    return tape.add_rowvec(tape.matmul(in, w), b);
  };
  auto sine = [&](Id in) { return tape.sin_scaled(linear(in), w0); };

  Id f = sine(x);
  for (int l = 1; l < cfg.depth_main - 1; ++l) f = sine(f);
  f = sine(tape.concat_cols(f, x));

  const Id sigma = tape.scalar_mul(tape.softplus(linear(f)),
                                   static_cast<T>(cfg.sigma_gain));
  const Id albedo = tape.sigmoid(linear(sine(f)));
  const Id shading =
      tape.sigmoid(linear(sine(sine(sine(tape.concat_cols(f, omega))))));
  const Id ambient = tape.sigmoid(linear(sine(omega)));

  const Id embed_table = pid[params.tensors.size() - 1];
  const Id emb =
      tape.gather_rows(embed_table, {image_idx.begin(), image_idx.end()});
  const Id beta = tape.softplus(linear(sine(tape.concat_cols(f, emb))));
  if (static_cast<size_t>(cursor) + 1 != params.tensors.size())
    throw std::logic_error("forward_batch: layer order out of sync");

  HeadIds<T> out;
  out.sigma = sigma;
  out.albedo = albedo;
  out.shading = shading;
  out.ambient = ambient;
  out.beta = beta;
  out.features = f;
  return out;
}

template <typename T>
HeadOutputs<T> forward_point(const NetworkParams<T>& params, const Vec3& x,
                             const Vec3& omega, int32_t j) {
  ad::Tape<T> tape;
  ad::Tensor<T> xt(1, 3), ot(1, 3);
  xt.v = {static_cast<T>(x.x), static_cast<T>(x.y), static_cast<T>(x.z)};
  ot.v = {static_cast<T>(omega.x), static_cast<T>(omega.y),
          static_cast<T>(omega.z)};
  const auto xid = tape.constant(std::move(xt));
  const auto oid = tape.constant(std::move(ot));
  const auto heads = forward_batch(tape, params, xid, oid, {j});
  HeadOutputs<T> o;
  o.sigma = tape.value(heads.sigma).v[0];
  o.shading = tape.value(heads.shading).v[0];
  o.beta = tape.value(heads.beta).v[0];
  for (int c = 0; c < 3; ++c) {
    o.albedo[c] = tape.value(heads.albedo).v[c];
    o.ambient[c] = tape.value(heads.ambient).v[c];
  }
  return o;
}

template NetworkParams<float> init_params<float>(const NetworkConfig&);
template NetworkParams<double> init_params<double>(const NetworkConfig&);
template HeadIds<float> forward_batch<float>(ad::Tape<float>&,
                                             const NetworkParams<float>&,
                                             ad::Tape<float>::Id,
                                             ad::Tape<float>::Id,
                                             const std::vector<int32_t>&,
                                             ParamBinding<float>*);
template HeadIds<double> forward_batch<double>(ad::Tape<double>&,
                                               const NetworkParams<double>&,
                                               ad::Tape<double>::Id,
                                               ad::Tape<double>::Id,
                                               const std::vector<int32_t>&,
                                               ParamBinding<double>*);
template HeadOutputs<float> forward_point<float>(const NetworkParams<float>&,
                                                 const Vec3&, const Vec3&,
                                                 int32_t);
template HeadOutputs<double> forward_point<double>(
    const NetworkParams<double>&, const Vec3&, const Vec3&, int32_t);

}  // namespace satnerf
