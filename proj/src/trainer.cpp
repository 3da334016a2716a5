#include "satnerf/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "satnerf/image_io.hpp"
#include "satnerf/kernels.hpp"
#include "satnerf/render.hpp"
#include "satnerf/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace satnerf {

namespace {

json config_to_json(const TrainConfig& c) {
  json j;
  j["lr0"] = c.lr0;
  j["gamma"] = c.gamma;
  j["batch"] = c.batch;
  j["samples_per_ray"] = c.samples_per_ray;
  j["max_iters"] = c.max_iters;
  j["use_sc"] = c.use_sc;
  j["use_ds"] = c.use_ds;
  j["use_beta"] = c.use_beta;
  j["use_shading"] = c.use_shading;
  j["jitter"] = c.jitter;
  j["adam_beta1"] = c.adam_beta1;
  j["adam_beta2"] = c.adam_beta2;
  j["adam_eps"] = c.adam_eps;
  j["grad_clip"] = c.grad_clip;
  j["clip_norm"] = c.clip_norm;
  j["seed"] = c.seed;
  j["checkpoint_every"] = c.checkpoint_every;
  j["precision"] = c.precision;
  j["eval_samples"] = c.eval_samples;
  j["workers"] = c.workers;
  j["beta_min"] = c.loss.beta_min;
  j["eta"] = c.loss.eta;
  j["lambda_sc"] = c.loss.lambda_sc;
  j["lambda_ds"] = c.loss.lambda_ds;
  j["beta_warmup_epochs"] = c.loss.beta_warmup_epochs;
  j["ds_fraction"] = c.loss.ds_fraction;
  j["h"] = c.network.hidden;
  j["depth_main"] = c.network.depth_main;
  j["n_transient"] = c.network.n_transient;
  j["omega0"] = c.network.omega0;
  j["sigma_gain"] = c.network.sigma_gain;
  j["embed_sigma"] = c.network.embed_sigma;
  return j;
}

void config_from_json(const json& j, TrainConfig& c) {
  auto opt = [&](const char* k, auto& dst) {
    if (j.contains(k)) dst = j[k].get<std::decay_t<decltype(dst)>>();
  };
  opt("lr0", c.lr0);
  opt("gamma", c.gamma);
  opt("batch", c.batch);
  opt("samples_per_ray", c.samples_per_ray);
  opt("max_iters", c.max_iters);
  opt("use_sc", c.use_sc);
  opt("use_ds", c.use_ds);
  opt("use_beta", c.use_beta);
  opt("use_shading", c.use_shading);
  opt("jitter", c.jitter);
  opt("adam_beta1", c.adam_beta1);
  opt("adam_beta2", c.adam_beta2);
  opt("adam_eps", c.adam_eps);
  opt("grad_clip", c.grad_clip);
  opt("clip_norm", c.clip_norm);
  opt("seed", c.seed);
  opt("checkpoint_every", c.checkpoint_every);
  opt("precision", c.precision);
  opt("eval_samples", c.eval_samples);
  opt("workers", c.workers);
  opt("beta_min", c.loss.beta_min);
  opt("eta", c.loss.eta);
  opt("lambda_sc", c.loss.lambda_sc);
  opt("lambda_ds", c.loss.lambda_ds);
  opt("beta_warmup_epochs", c.loss.beta_warmup_epochs);
  opt("ds_fraction", c.loss.ds_fraction);
  opt("h", c.network.hidden);
  opt("depth_main", c.network.depth_main);
  opt("n_transient", c.network.n_transient);
  opt("omega0", c.network.omega0);
  opt("sigma_gain", c.network.sigma_gain);
  opt("embed_sigma", c.network.embed_sigma);
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

TrainConfig parse_train_config_json(const std::string& blob,
                                    TrainConfig base) {
  json j;
  try {
    j = json::parse(blob);
  } catch (const json::exception& e) {
    throw DatasetError(std::string("config: ") + e.what());
  }
  config_from_json(j, base);
  if (base.loss.beta_min <= std::exp(-base.loss.eta))
    throw DatasetError("config: beta_min must exceed exp(-eta)");
  if (base.precision != "f32" && base.precision != "f64")
    throw DatasetError("config: precision must be f32 or f64");
  return base;
}

std::string serialize_train_config(const TrainConfig& cfg) {
  return config_to_json(cfg).dump(2);
}

double lr_at(const TrainConfig& cfg, int64_t epoch) {
  return cfg.lr0 * std::pow(cfg.gamma, static_cast<double>(epoch));
}

template <typename T>
void adam_step(NetworkParams<T>& params,
               const std::vector<ad::Tensor<T>>& grads, AdamState<T>& state,
               double lr, const TrainConfig& cfg) {
  const auto& K = kernels::active<T>();
  state.step += 1;
  const T bc1 = T(1) - static_cast<T>(std::pow(cfg.adam_beta1,
                                               static_cast<double>(state.step)));
  const T bc2 = T(1) - static_cast<T>(std::pow(cfg.adam_beta2,
                                               static_cast<double>(state.step)));
  for (size_t i = 0; i < params.tensors.size(); ++i) {
    auto& p = params.tensors[i];
    K.adam(p.data(), grads[i].data(), state.m[i].data(), state.v[i].data(),
           p.size(), static_cast<T>(lr), static_cast<T>(cfg.adam_beta1),
           static_cast<T>(cfg.adam_beta2), static_cast<T>(cfg.adam_eps), bc1,
           bc2);
  }
}

template <typename T>
void save_checkpoint(const std::string& path, const NetworkParams<T>& params,
                     const AdamState<T>& state, int64_t iteration,
                     const TrainConfig& cfg) {
  json header;
  header["format"] = "satnerf-ckpt-v1";
  header["iteration"] = iteration;
  header["seed"] = cfg.seed;
  header["adam_step"] = state.step;
  header["precision"] = cfg.precision;
  header["config"] = config_to_json(cfg);
  header["n_images"] = params.cfg.n_images;
  header["network_seed"] = params.cfg.seed;
  json tensors = json::array();
  for (size_t i = 0; i < params.tensors.size(); ++i)
    tensors.push_back({{"name", params.names[i]},
                       {"rows", params.tensors[i].rows},
                       {"cols", params.tensors[i].cols}});
  header["tensors"] = tensors;

  std::string blob = header.dump() + "\n";
  auto append_f64 = [&](const std::vector<ad::Tensor<T>>& ts) {
    for (const auto& t : ts)
      for (const T v : t.v) {
        const double d = static_cast<double>(v);
        blob.append(reinterpret_cast<const char*>(&d), 8);
      }
  };
  append_f64(params.tensors);
  append_f64(state.m);
  append_f64(state.v);
  write_file(path, blob);
}

namespace {

json read_ckpt_header(const std::string& blob, const std::string& path,
                      size_t* payload_off) {
  const size_t nl = blob.find('\n');
  if (nl == std::string::npos)
    throw DatasetError(path + ": missing checkpoint header");
  json header = json::parse(blob.substr(0, nl));
  if (header.at("format").get<std::string>() != "satnerf-ckpt-v1")
    throw DatasetError(path + ": unknown checkpoint format");
  *payload_off = nl + 1;
  return header;
}

NetworkConfig network_cfg_from_header(const json& header) {
  TrainConfig tmp;
  config_from_json(header.at("config"), tmp);
  NetworkConfig net = tmp.network;
  net.n_images = header.at("n_images").get<int>();
  net.seed = header.at("network_seed").get<uint64_t>();
  return net;
}

}  // namespace

NetworkConfig checkpoint_network_config(const std::string& path) {
  const std::string blob = read_file(path);
  size_t off;
  return network_cfg_from_header(read_ckpt_header(blob, path, &off));
}

std::string checkpoint_precision(const std::string& path) {
  const std::string blob = read_file(path);
  size_t off;
  return read_ckpt_header(blob, path, &off)
      .at("precision")
      .get<std::string>();
}

template <typename T>
CheckpointInfo load_checkpoint(const std::string& path,
                               NetworkParams<T>& params,
                               AdamState<T>& state) {
  const std::string blob = read_file(path);
  size_t off;
  const json header = read_ckpt_header(blob, path, &off);

  CheckpointInfo info;
  info.iteration = header.at("iteration").get<int64_t>();
  config_from_json(header.at("config"), info.cfg);
  info.cfg.seed = header.at("seed").get<uint64_t>();

  const NetworkConfig net = network_cfg_from_header(header);
  params = NetworkParams<T>{};
  params.cfg = net;
  state = AdamState<T>{};
  state.step = header.at("adam_step").get<int64_t>();

  size_t total = 0;
  for (const auto& tj : header.at("tensors")) {
    params.names.push_back(tj.at("name").get<std::string>());
    params.tensors.emplace_back(tj.at("rows").get<size_t>(),
                                tj.at("cols").get<size_t>());
    total += params.tensors.back().size();
  }
  if (blob.size() != off + 3 * total * 8)
    throw DatasetError(path + ": checkpoint payload size mismatch");

  auto read_f64 = [&](std::vector<ad::Tensor<T>>& ts) {
    for (auto& t : ts)
      for (auto& v : t.v) {
        double d;
        std::memcpy(&d, blob.data() + off, 8);
        off += 8;
        v = static_cast<T>(d);
      }
  };
  read_f64(params.tensors);
  for (const auto& t : params.tensors) {
    state.m.emplace_back(t.rows, t.cols);
    state.v.emplace_back(t.rows, t.cols);
  }
  read_f64(state.m);
  read_f64(state.v);
  return info;
}

namespace {

using clock_type = std::chrono::steady_clock;

template <typename T>
struct PointBatch {
  ad::Tensor<T> x, omega, delta, tvals;
  std::vector<int32_t> j;
};

// Lays out n_samples consecutive rows per ray.
template <typename T>
PointBatch<T> assemble_points(std::span<const Ray> rays, int n_samples,
                              bool jitter, uint64_t seed, int64_t iter,
                              const char* stream) {
  const size_t nr = rays.size();
  const size_t pts = nr * n_samples;
  PointBatch<T> b{ad::Tensor<T>(pts, 3), ad::Tensor<T>(pts, 3),
                  ad::Tensor<T>(pts, 1), ad::Tensor<T>(pts, 1),
                  std::vector<int32_t>(pts)};
  Pcg32 rng = rng_stream(seed, stream, static_cast<uint64_t>(iter));
  for (size_t i = 0; i < nr; ++i) {
    const auto s = sample_points(rays[i], n_samples, jitter, rng);
    for (int k = 0; k < n_samples; ++k) {
      const size_t row = i * n_samples + k;
      b.x.v[3 * row + 0] = static_cast<T>(s.points[k].x);
      b.x.v[3 * row + 1] = static_cast<T>(s.points[k].y);
      b.x.v[3 * row + 2] = static_cast<T>(s.points[k].z);
      b.omega.v[3 * row + 0] = static_cast<T>(rays[i].sun_dir.x);
      b.omega.v[3 * row + 1] = static_cast<T>(rays[i].sun_dir.y);
      b.omega.v[3 * row + 2] = static_cast<T>(rays[i].sun_dir.z);
      b.delta.v[row] = static_cast<T>(s.delta[k]);
      b.tvals.v[row] = static_cast<T>(s.t[k]);
      b.j[row] = rays[i].image_index;
    }
  }
  return b;
}

template <typename T>
TrainResult train_impl(const TrainConfig& cfg_in, const Dataset& ds,
                       const std::string& out_dir,
                       const std::string& resume_from) {
  TrainConfig cfg = cfg_in;
  cfg.network.n_images = static_cast<int>(ds.records.size());
  if (cfg.loss.beta_min <= std::exp(-cfg.loss.eta))
    throw DatasetError("train: beta_min must exceed exp(-eta)");

  fs::create_directories(out_dir);
  const auto out_path = [&](const std::string& f) {
    return (fs::path(out_dir) / f).string();
  };

  NetworkParams<T> params;
  AdamState<T> state;
  int64_t start_iter = 0;
  if (!resume_from.empty()) {
    const auto info = load_checkpoint<T>(resume_from, params, state);
    start_iter = info.iteration;
    cfg.seed = info.cfg.seed;
  } else {
    NetworkConfig net = cfg.network;
    net.seed = cfg.seed;
    params = init_params<T>(net);
    state = AdamState<T>::zeros_like(params);
  }

  const RayStore store = cache_rays(ds);
  BatchSampler sampler(store.rays.size(), cfg.batch, cfg.seed);

  std::ofstream metrics(out_path("metrics.jsonl"),
                        resume_from.empty() ? std::ios::trunc : std::ios::app);
  if (!metrics) throw ImageIoError("cannot open metrics log");

  const bool have_ds = cfg.use_ds && !ds.depth_points.empty();
  std::vector<ad::Tensor<T>> grads;

  const int64_t stop = cfg.stop_after > 0
                           ? std::min(cfg.stop_after, cfg.max_iters)
                           : cfg.max_iters;
  for (int64_t iter = start_iter; iter < stop; ++iter) {
    const auto t0 = clock_type::now();
    const int64_t epoch = sampler.epoch_of(iter);
    const double lr = lr_at(cfg, epoch);

    const auto idx = sampler.batch(iter);
    std::vector<Ray> rays(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) rays[i] = store.rays[idx[i]];

    ad::Tape<T> tape;
    ParamBinding<T> binding;

    // main color batch
    auto mb = assemble_points<T>(rays, cfg.samples_per_ray, cfg.jitter,
                                 cfg.seed, iter, "jitter-main");
    ad::Tensor<T> targets(rays.size(), 3);
    for (size_t i = 0; i < rays.size(); ++i)
      for (int c = 0; c < 3; ++c)
        targets.v[3 * i + c] = static_cast<T>(rays[i].gt_color[c]);

    const auto heads = forward_batch(tape, params, tape.constant(std::move(mb.x)),
                                     tape.constant(std::move(mb.omega)), mb.j,
                                     &binding);
    const auto rr = render::composite_batch(
        tape, heads, tape.constant(std::move(mb.delta)),
        tape.constant(std::move(mb.tvals)), cfg.samples_per_ray,
        cfg.use_shading);

    const auto target_id = tape.constant(std::move(targets));
    const bool uncertainty_branch =
        losses::rgb_uses_uncertainty(cfg.loss, cfg.use_beta, epoch);
    const auto l_rgb =
        uncertainty_branch
            ? losses::rgb_uncertainty(tape, rr.color, target_id, rr.beta,
                                      static_cast<T>(cfg.loss.beta_min),
                                      static_cast<T>(cfg.loss.eta))
            : losses::rgb_mse(tape, rr.color, target_id);

    // solar correction batch
    typename ad::Tape<T>::Id l_sc = -1;
    if (cfg.use_sc) {
      const auto solar = sample_solar_batch(ds, rays.size(), cfg.seed, iter);
      auto sb = assemble_points<T>(solar.rays, cfg.samples_per_ray, cfg.jitter,
                                   cfg.seed, iter, "jitter-solar");
      const auto sheads = forward_batch(
          tape, params, tape.constant(std::move(sb.x)),
          tape.constant(std::move(sb.omega)), sb.j, &binding);
      const auto srr = render::composite_batch(
          tape, sheads, tape.constant(std::move(sb.delta)),
          tape.constant(std::move(sb.tvals)), cfg.samples_per_ray,
          cfg.use_shading);
      l_sc = losses::solar(tape, srr.trans, srr.weights, sheads.shading,
                           cfg.samples_per_ray);
    }

    // depth supervision batch
    typename ad::Tape<T>::Id l_ds = -1;
    if (have_ds && losses::ds_active(cfg.loss, iter, cfg.max_iters)) {
      const auto pick = sample_ds_batch(ds.depth_points.size(), rays.size(),
                                        cfg.seed, iter);
      std::vector<Ray> drays(pick.size());
      ad::Tensor<T> dtarget(pick.size(), 1), dweight(pick.size(), 1);
      for (size_t i = 0; i < pick.size(); ++i) {
        drays[i] = ds.ds_rays[pick[i]];
        dtarget.v[i] = static_cast<T>(ds.ds_target_depth[pick[i]]);
        dweight.v[i] = static_cast<T>(ds.depth_points[pick[i]].weight);
      }
      auto db = assemble_points<T>(drays, cfg.samples_per_ray, cfg.jitter,
                                   cfg.seed, iter, "jitter-depth");
      const auto dheads = forward_batch(
          tape, params, tape.constant(std::move(db.x)),
          tape.constant(std::move(db.omega)), db.j, &binding);
      const auto drr = render::composite_batch(
          tape, dheads, tape.constant(std::move(db.delta)),
          tape.constant(std::move(db.tvals)), cfg.samples_per_ray,
          cfg.use_shading);
      l_ds = losses::depth(tape, drr.depth, tape.constant(std::move(dtarget)),
                           tape.constant(std::move(dweight)));
    }

    const auto total =
        losses::combine(tape, l_rgb, l_sc, l_ds,
                        static_cast<T>(cfg.loss.lambda_sc),
                        static_cast<T>(cfg.loss.lambda_ds));
    tape.backward(total);

    grads.clear();
    grads.reserve(params.tensors.size());
    const auto& K = kernels::active<T>();
    for (size_t i = 0; i < params.tensors.size(); ++i) {
      grads.push_back(tape.grad(binding.ids[i]));
      if (!K.all_finite(grads.back().data(), grads.back().size()))
        throw NonFiniteGradient("iteration " + std::to_string(iter) +
                                ": non-finite gradient in " + params.names[i]);
    }

    if (cfg.grad_clip) {
      double sq = 0;
      for (const auto& g : grads)
        for (const T v : g.v) sq += static_cast<double>(v) * v;
      const double gn = std::sqrt(sq);
      if (gn > cfg.clip_norm) {
        const T s = static_cast<T>(cfg.clip_norm / gn);
        for (auto& g : grads) K.scale(g.data(), s, g.data(), g.size());
      }
    }

    adam_step(params, grads, state, lr, cfg);

    const double wall_ms =
        std::chrono::duration<double, std::milli>(clock_type::now() - t0)
            .count();
    metrics << "{\"iter\":" << iter << ",\"epoch\":" << epoch
            << ",\"lr\":" << fmt17(lr)
            << ",\"l_rgb\":" << fmt17(tape.scalar_value(l_rgb))
            << ",\"l_sc\":" << (l_sc >= 0 ? fmt17(tape.scalar_value(l_sc)) : "0")
            << ",\"l_ds\":" << (l_ds >= 0 ? fmt17(tape.scalar_value(l_ds)) : "0")
            << ",\"total\":" << fmt17(tape.scalar_value(total))
            << ",\"wall_ms\":" << wall_ms << "}\n";

    if (cfg.log_every > 0 && (iter + 1) % cfg.log_every == 0)
      std::fprintf(stderr, "iter %lld/%lld epoch %lld lr %.3g l_rgb %.5f (%.1f ms/iter)\n",
                   static_cast<long long>(iter + 1),
                   static_cast<long long>(cfg.max_iters),
                   static_cast<long long>(epoch), lr,
                   static_cast<double>(tape.scalar_value(l_rgb)), wall_ms);

    const int64_t done = iter + 1;
    if (done == stop ||
        (cfg.checkpoint_every > 0 && done % cfg.checkpoint_every == 0)) {
      char name[64];
      std::snprintf(name, sizeof name, "ckpt_%09lld.snck",
                    static_cast<long long>(done));
      save_checkpoint(out_path(name), params, state, done, cfg);
      if (done == stop)
        save_checkpoint(out_path("ckpt_final.snck"), params, state, done, cfg);
    }
  }
  metrics.flush();

  TrainResult res;
  res.iterations = stop;
  res.final_checkpoint = out_path("ckpt_final.snck");
  res.metrics_path = out_path("metrics.jsonl");
  return res;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Dataset& ds,
                  const std::string& out_dir, const std::string& resume_from) {
  if (cfg.precision == "f64")
    return train_impl<double>(cfg, ds, out_dir, resume_from);
  return train_impl<float>(cfg, ds, out_dir, resume_from);
}

template void adam_step<float>(NetworkParams<float>&,
                               const std::vector<ad::Tensor<float>>&,
                               AdamState<float>&, double, const TrainConfig&);
template void adam_step<double>(NetworkParams<double>&,
                                const std::vector<ad::Tensor<double>>&,
                                AdamState<double>&, double,
                                const TrainConfig&);
template void save_checkpoint<float>(const std::string&,
                                     const NetworkParams<float>&,
                                     const AdamState<float>&, int64_t,
                                     const TrainConfig&);
template void save_checkpoint<double>(const std::string&,
                                      const NetworkParams<double>&,
                                      const AdamState<double>&, int64_t,
                                      const TrainConfig&);
template CheckpointInfo load_checkpoint<float>(const std::string&,
                                               NetworkParams<float>&,
                                               AdamState<float>&);
template CheckpointInfo load_checkpoint<double>(const std::string&,
                                                NetworkParams<double>&,
                                                AdamState<double>&);

}  // namespace satnerf
