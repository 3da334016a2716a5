// Command-line front end: dataset synthesis, training, rendering, scoring.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "satnerf/dataset.hpp"
#include "satnerf/dsm.hpp"
#include "satnerf/image_io.hpp"
#include "satnerf/metrics.hpp"
#include "satnerf/render.hpp"
#include "satnerf/synth.hpp"
#include "satnerf/trainer.hpp"

namespace fs = std::filesystem;
using namespace satnerf;
using nlohmann::json;

namespace {

int log_level() {
  const char* env = std::getenv("SATNERF_LOG");
  return env ? std::atoi(env) : 1;
}

struct TrainFlags {
  std::string manifest, out, config_path, resume;
  std::optional<uint64_t> seed;
  std::optional<double> lr0, gamma, lambda_sc, lambda_ds, beta_min, eta,
      ds_fraction, omega0, embed_sigma, clip_norm;
  std::optional<int> batch, samples, h, n_transient, beta_warmup, workers,
      eval_samples;
  std::optional<int64_t> max_iters, checkpoint_every;
  std::optional<bool> use_sc, use_ds, use_beta, use_shading, jitter, grad_clip;
  std::optional<std::string> precision;
};

TrainConfig merge_config(const TrainFlags& f) {
  TrainConfig cfg;
  if (!f.config_path.empty())
    cfg = parse_train_config_json(read_file(f.config_path), cfg);
  auto apply = [](auto& dst, const auto& src) {
    if (src) dst = *src;
  };
  apply(cfg.seed, f.seed);
  apply(cfg.lr0, f.lr0);
  apply(cfg.gamma, f.gamma);
  apply(cfg.loss.lambda_sc, f.lambda_sc);
  apply(cfg.loss.lambda_ds, f.lambda_ds);
  apply(cfg.loss.beta_min, f.beta_min);
  apply(cfg.loss.eta, f.eta);
  apply(cfg.loss.ds_fraction, f.ds_fraction);
  apply(cfg.network.omega0, f.omega0);
  apply(cfg.network.embed_sigma, f.embed_sigma);
  apply(cfg.clip_norm, f.clip_norm);
  apply(cfg.batch, f.batch);
  apply(cfg.samples_per_ray, f.samples);
  apply(cfg.network.hidden, f.h);
  apply(cfg.network.n_transient, f.n_transient);
  apply(cfg.loss.beta_warmup_epochs, f.beta_warmup);
  apply(cfg.workers, f.workers);
  apply(cfg.eval_samples, f.eval_samples);
  apply(cfg.max_iters, f.max_iters);
  apply(cfg.checkpoint_every, f.checkpoint_every);
  apply(cfg.use_sc, f.use_sc);
  apply(cfg.use_ds, f.use_ds);
  apply(cfg.use_beta, f.use_beta);
  apply(cfg.use_shading, f.use_shading);
  apply(cfg.jitter, f.jitter);
  apply(cfg.grad_clip, f.grad_clip);
  apply(cfg.precision, f.precision);
  if (cfg.loss.beta_min <= std::exp(-cfg.loss.eta))
    throw DatasetError("beta_min must exceed exp(-eta)");
  if (log_level() >= 1)
    cfg.log_every = std::max<int64_t>(1, cfg.max_iters / 30);
  return cfg;
}

// Renders one view, returning images plus the raw buffers.
template <typename T>
ViewRender render_record(const NetworkParams<T>& params,
                         const ImageRecord& rec, const SceneFrame& frame,
                         int samples, bool use_shading, int embedding,
                         int workers) {
  const Vec3 sun = rec.sun_dir;
  return render_view(params, rec.rpc, rec.image.width, rec.image.height,
                     frame.norm, sun, embedding, samples, use_shading,
                     workers);
}

Image rgb_to_image(const ViewRender& vr) {
  Image im = Image::blank(vr.width, vr.height);
  for (int r = 0; r < vr.height; ++r)
    for (int c = 0; c < vr.width; ++c)
      for (int ch = 0; ch < 3; ++ch)
        im.set(r, c, ch, vr.rgb[3 * (static_cast<size_t>(r) * vr.width + c) + ch]);
  return im;
}

void write_scalar_grid(const std::string& path, int w, int h,
                       const std::vector<double>& v) {
  std::string blob = "SNGRID1\n";
  const int32_t wi = w, hi = h;
  blob.append(reinterpret_cast<const char*>(&wi), 4);
  blob.append(reinterpret_cast<const char*>(&hi), 4);
  blob.append(reinterpret_cast<const char*>(v.data()), v.size() * 8);
  write_file(path, blob);
}

int cmd_synth(const std::string& spec_path, const std::string& out,
              uint64_t seed, int transients, double rpc_jitter,
              int sparse_points, int image_size, int n_views) {
  SceneSpec spec =
      spec_path.empty() ? default_scene(seed) : parse_scene_json(read_file(spec_path));
  if (spec_path.empty()) {
    spec.transients_per_view = transients;
    spec.rpc_jitter_px = rpc_jitter;
    spec.sparse_points = sparse_points;
    if (image_size > 0) spec.image_size = image_size;
    if (n_views > 0) {
      SceneSpec wide = default_scene(seed);
      // regenerate the view ring at the requested count
      spec.views.clear();
      Pcg32 rng = rng_stream(seed, "scene-views");
      for (int i = 0; i < n_views; ++i) {
        ViewSpec v;
        v.view_az_deg = 360.0 * i / n_views + rng.uniform(-8, 8);
        v.view_el_deg = rng.uniform(55, 85);
        v.sun_az_deg = 100.0 + 140.0 * i / std::max(1, n_views - 1) +
                       rng.uniform(-5, 5);
        v.sun_el_deg = rng.uniform(38, 65);
        v.split = i == n_views - 1 ? "test" : "train";
        spec.views.push_back(v);
      }
      (void)wide;
    }
  }
  make_dataset(spec, out);
  write_file((fs::path(out) / "scene_spec.json").string(),
             serialize_scene_json(spec));
  if (log_level() >= 1)
    std::fprintf(stderr, "wrote %zu views to %s\n", spec.views.size(),
                 out.c_str());
  return 0;
}

int cmd_train(const TrainFlags& f) {
  const Dataset ds = load_dataset(f.manifest);
  const TrainConfig cfg = merge_config(f);
  const auto res = train(cfg, ds, f.out, f.resume);
  if (log_level() >= 1)
    std::fprintf(stderr, "trained %lld iterations -> %s\n",
                 static_cast<long long>(res.iterations),
                 res.final_checkpoint.c_str());
  std::printf("%s\n", res.final_checkpoint.c_str());
  return 0;
}

template <typename T>
int cmd_render_t(const std::string& ckpt, const std::string& manifest,
                 const std::string& out_prefix, int view_id,
                 std::optional<double> sun_az, std::optional<double> sun_el,
                 int samples, int embedding, int workers, bool use_shading) {
  NetworkParams<T> params;
  AdamState<T> state;
  load_checkpoint<T>(ckpt, params, state);
  const Dataset ds = load_dataset(manifest);
  const ImageRecord* rec = ds.find_record(view_id);
  if (!rec) throw DatasetError("render: no view with id " + std::to_string(view_id));

  ImageRecord tweaked = *rec;
  if (sun_az || sun_el) {
    const double az = sun_az.value_or(rec->sun_azimuth_deg);
    const double el = sun_el.value_or(rec->sun_elevation_deg);
    tweaked.sun_azimuth_deg = az;
    tweaked.sun_elevation_deg = el;
    tweaked.sun_dir = normalized(ds.frame.enu_to_ecef_dir(sun_dir_enu(az, el)));
  }
  const auto vr = render_record(params, tweaked, ds.frame, samples,
                                use_shading, embedding, workers);
  write_png(out_prefix + "_rgb.png", rgb_to_image(vr));
  write_scalar_grid(out_prefix + "_depth.bin", vr.width, vr.height, vr.depth);
  write_scalar_grid(out_prefix + "_sunvis.bin", vr.width, vr.height,
                    vr.sun_vis);
  write_scalar_grid(out_prefix + "_wsum.bin", vr.width, vr.height,
                    vr.weight_sum);
  if (log_level() >= 1)
    std::fprintf(stderr, "rendered view %d -> %s_*\n", view_id,
                 out_prefix.c_str());
  return 0;
}

template <typename T>
int cmd_eval_t(const std::string& ckpt, const std::string& manifest,
               const std::string& out_json, const std::string& dsm_out,
               int samples, int embedding, int workers, double wsum_threshold) {
  NetworkParams<T> params;
  AdamState<T> state;
  const auto info = load_checkpoint<T>(ckpt, params, state);
  const Dataset ds = load_dataset(manifest);
  const bool use_shading = info.cfg.use_shading;

  // novel-view quality over the test split
  double psnr_acc = 0, ssim_acc = 0;
  int n_test = 0;
  json per_view = json::array();
  for (const auto& rec : ds.records) {
    if (rec.split != "test") continue;
    const auto vr = render_record(params, rec, ds.frame, samples, use_shading,
                                  embedding, workers);
    const Image im = rgb_to_image(vr);
    const double p = psnr(im, rec.image);
    const double s = ssim(im, rec.image);
    psnr_acc += p;
    ssim_acc += s;
    ++n_test;
    per_view.push_back({{"view", rec.id}, {"psnr", p}, {"ssim", s}});
  }

  // surface model over every view, scored against the reference raster
  json report;
  report["psnr"] = n_test ? psnr_acc / n_test : 0.0;
  report["ssim"] = n_test ? ssim_acc / n_test : 0.0;
  report["test_views"] = per_view;
  report["mae"] = nullptr;
  report["completeness"] = 0.0;
  report["vertical_shift"] = 0.0;

  if (!ds.manifest.reference_dsm_path.empty()) {
    const std::string ref_path =
        (fs::path(ds.manifest.root_dir) / ds.manifest.reference_dsm_path)
            .string();
    const Dsm ref = read_dsm_ascii(ref_path);
    std::vector<SurfacePoint> points;
    for (const auto& rec : ds.records) {
      const auto vr = render_record(params, rec, ds.frame, samples,
                                    use_shading,
                                    rec.split == "train" ? rec.id : embedding,
                                    workers);
      auto pts = depth_to_surface_points(vr.rays, vr.depth, vr.weight_sum,
                                         ds.frame.norm, wsum_threshold,
                                         ref.zone);
      points.insert(points.end(), pts.begin(), pts.end());
    }
    GridBounds bounds{ref.origin_easting, ref.origin_northing, ref.width,
                      ref.height};
    const Dsm pred =
        rasterize_dsm(points, ref.resolution, &bounds, ref.zone, ref.south);
    if (!dsm_out.empty()) write_dsm_ascii(dsm_out, pred);
    try {
      const auto score = dsm_mae(pred, ref, true);
      report["mae"] = score.mae;
      report["completeness"] = score.completeness;
      report["vertical_shift"] = score.shift;
    } catch (const NoOverlap&) {
      // untrained model: nothing above the weight threshold
      report["mae"] = nullptr;
      report["completeness"] = 0.0;
    }
  }

  const std::string text = report.dump(2) + "\n";
  if (out_json.empty() || out_json == "-")
    std::fputs(text.c_str(), stdout);
  else
    write_file(out_json, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"radiance-field photogrammetry from rpc satellite cameras"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  std::string synth_spec, synth_out = "dataset";
  uint64_t synth_seed = 0;
  int synth_transients = 0, synth_points = 0, synth_size = 0, synth_views = 0;
  double synth_jitter = 0;
  synth->add_option("--spec", synth_spec, "scene spec json (default scene if omitted)");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_seed, "scene seed");
  synth->add_option("--transients", synth_transients, "transient rectangles per view");
  synth->add_option("--rpc-jitter", synth_jitter, "per-view rpc offset in pixels");
  synth->add_option("--sparse-points", synth_points, "surface points to export");
  synth->add_option("--image-size", synth_size, "image side length in pixels");
  synth->add_option("--views", synth_views, "number of views (last one is the test split)");

  // train
  auto* tr = app.add_subcommand("train", "optimize a model on a dataset");
  TrainFlags tf;
  tr->add_option("--manifest", tf.manifest)->required();
  tr->add_option("--out", tf.out)->required();
  tr->add_option("--config", tf.config_path, "json config file");
  tr->add_option("--resume", tf.resume, "checkpoint to continue from");
  tr->add_option("--seed", tf.seed);
  tr->add_option("--lr0", tf.lr0);
  tr->add_option("--gamma", tf.gamma);
  tr->add_option("--batch", tf.batch);
  tr->add_option("--samples", tf.samples);
  tr->add_option("--max-iters", tf.max_iters);
  tr->add_option("--checkpoint-every", tf.checkpoint_every);
  tr->add_option("--hidden", tf.h, "network width (config key: h)");
  tr->add_option("--n-transient", tf.n_transient);
  tr->add_option("--omega0", tf.omega0);
  tr->add_option("--embed-sigma", tf.embed_sigma);
  tr->add_option("--lambda-sc", tf.lambda_sc);
  tr->add_option("--lambda-ds", tf.lambda_ds);
  tr->add_option("--beta-min", tf.beta_min);
  tr->add_option("--eta", tf.eta);
  tr->add_option("--beta-warmup-epochs", tf.beta_warmup);
  tr->add_option("--ds-fraction", tf.ds_fraction);
  tr->add_option("--use-sc", tf.use_sc);
  tr->add_option("--use-ds", tf.use_ds);
  tr->add_option("--use-beta", tf.use_beta);
  tr->add_option("--use-shading", tf.use_shading);
  tr->add_option("--jitter", tf.jitter);
  tr->add_option("--grad-clip", tf.grad_clip);
  tr->add_option("--clip-norm", tf.clip_norm);
  tr->add_option("--precision", tf.precision);
  tr->add_option("--eval-samples", tf.eval_samples);
  tr->add_option("--workers", tf.workers);

  // render
  auto* rd = app.add_subcommand("render", "render a view from a checkpoint");
  std::string rd_ckpt, rd_manifest, rd_out = "render";
  int rd_view = 0, rd_samples = 96, rd_embedding = 0, rd_workers = 1;
  std::optional<double> rd_sun_az, rd_sun_el;
  bool rd_no_shading = false;
  rd->add_option("--checkpoint", rd_ckpt)->required();
  rd->add_option("--manifest", rd_manifest)->required();
  rd->add_option("--out", rd_out, "output prefix");
  rd->add_option("--view", rd_view, "view id");
  rd->add_option("--sun-azimuth", rd_sun_az, "override sun azimuth (deg)");
  rd->add_option("--sun-elevation", rd_sun_el, "override sun elevation (deg)");
  rd->add_option("--samples", rd_samples, "points per ray");
  rd->add_option("--embedding", rd_embedding, "transient embedding index");
  rd->add_option("--workers", rd_workers);
  rd->add_flag("--no-shading", rd_no_shading, "render raw albedo");

  // eval
  auto* ev = app.add_subcommand("eval", "score a checkpoint against a dataset");
  std::string ev_ckpt, ev_manifest, ev_out, ev_dsm;
  int ev_samples = 96, ev_embedding = 0, ev_workers = 1;
  double ev_threshold = 0.3;
  ev->add_option("--checkpoint", ev_ckpt)->required();
  ev->add_option("--manifest", ev_manifest)->required();
  ev->add_option("--out", ev_out, "report path (stdout if omitted)");
  ev->add_option("--dsm-out", ev_dsm, "write the predicted surface raster");
  ev->add_option("--samples", ev_samples, "points per ray");
  ev->add_option("--embedding", ev_embedding, "embedding index for test views");
  ev->add_option("--workers", ev_workers);
  ev->add_option("--weight-threshold", ev_threshold,
                 "mask pixels whose weight sum falls below this");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed())
      return cmd_synth(synth_spec, synth_out, synth_seed, synth_transients,
                       synth_jitter, synth_points, synth_size, synth_views);
    if (tr->parsed()) return cmd_train(tf);
    if (rd->parsed()) {
      const bool shading = !rd_no_shading;
      if (checkpoint_precision(rd_ckpt) == "f64")
        return cmd_render_t<double>(rd_ckpt, rd_manifest, rd_out, rd_view,
                                    rd_sun_az, rd_sun_el, rd_samples,
                                    rd_embedding, rd_workers, shading);
      return cmd_render_t<float>(rd_ckpt, rd_manifest, rd_out, rd_view,
                                 rd_sun_az, rd_sun_el, rd_samples,
                                 rd_embedding, rd_workers, shading);
    }
    if (ev->parsed()) {
      if (checkpoint_precision(ev_ckpt) == "f64")
        return cmd_eval_t<double>(ev_ckpt, ev_manifest, ev_out, ev_dsm,
                                  ev_samples, ev_embedding, ev_workers,
                                  ev_threshold);
      return cmd_eval_t<float>(ev_ckpt, ev_manifest, ev_out, ev_dsm,
                               ev_samples, ev_embedding, ev_workers,
                               ev_threshold);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
