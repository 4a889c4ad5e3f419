#include "cmas/cmas.h"

#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmas/benchmark.hpp"
#include "cmas/error.hpp"
#include "cmas/eval.hpp"
#include "cmas/io.hpp"
#include "cmas/preprocess.hpp"
#include "cmas/prior.hpp"
#include "cmas/sampler.hpp"

struct cmas_config {
  cmas::CmasConfig value;
};

struct FitRow {
  int step;
  double mse;
  double reference;
};

struct cmas_model {
  std::string kind;
  cmas::LoadedModel loaded;
  cmas::Pose3DSequence oracle_truth;
  std::vector<FitRow> fit_rows;

  int frames() const {
    if (kind == "oracle") return oracle_truth.frames;
    return loaded.gaussian ? loaded.gaussian->frames() : loaded.regression->frames();
  }
  int joints() const {
    if (kind == "oracle") return oracle_truth.joints;
    return loaded.gaussian ? loaded.gaussian->joints() : loaded.regression->joints();
  }
  std::unique_ptr<cmas::Denoiser> denoiser(const cmas::CmasConfig& config) const {
    if (kind == "oracle") {
      return std::make_unique<cmas::OracleDenoiser>(oracle_truth, cmas::rig_for(config));
    }
    return loaded.make_denoiser(config.steps);
  }
};

namespace {

thread_local std::string g_last_error;

struct ArgError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

cmas_status status_for(cmas::Errc code) {
  switch (code) {
    case cmas::Errc::shape: return CMAS_ERR_SHAPE;
    case cmas::Errc::domain: return CMAS_ERR_DOMAIN;
    case cmas::Errc::projection: return CMAS_ERR_PROJECTION;
    case cmas::Errc::numerical: return CMAS_ERR_NUMERICAL;
    case cmas::Errc::config: return CMAS_ERR_CONFIG;
    case cmas::Errc::io: return CMAS_ERR_IO;
  }
  return CMAS_ERR_INTERNAL;
}

template <typename Fn>
cmas_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return CMAS_OK;
  } catch (const ArgError& e) {
    g_last_error = e.what();
    return CMAS_ERR_INVALID_ARGUMENT;
  } catch (const cmas::Error& e) {
    g_last_error = e.what();
    return status_for(e.code());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = e.what();
    return CMAS_ERR_CONFIG;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return CMAS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CMAS_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return CMAS_ERR_INTERNAL;
  }
}

template <typename T>
void need(const T* p, const char* what) {
  if (p == nullptr) throw ArgError(std::string(what) + " is null");
}

int as_int(double v, const std::string& key) {
  if (v != std::floor(v) || std::fabs(v) > 2147483647.0) {
    throw ArgError("config key '" + key + "' needs an integer");
  }
  return static_cast<int>(v);
}

void set_key(cmas::CmasConfig& c, const std::string& key, double v) {
  if (key == "views") c.views = as_int(v, key);
  else if (key == "steps") c.steps = as_int(v, key);
  else if (key == "w_ref") c.w_ref = v;
  else if (key == "lambda_bone") c.lambda_bone = v;
  else if (key == "lr") c.optimizer.learning_rate = v;
  else if (key == "iters") c.optimizer.iterations = as_int(v, key);
  else if (key == "beta1") c.optimizer.beta1 = v;
  else if (key == "beta2") c.optimizer.beta2 = v;
  else if (key == "epsilon") c.optimizer.epsilon = v;
  else if (key == "min_depth") c.optimizer.min_depth = v;
  else if (key == "threads") c.threads = as_int(v, key);
  else if (key == "distance") c.rig.distance = v;
  else if (key == "elevation") c.rig.elevation = v;
  else if (key == "reference_index") c.reference_index = as_int(v, key);
  else if (key == "seed") {
    if (v < 0 || v != std::floor(v)) throw ArgError("seed must be a non-negative integer");
    c.seed = static_cast<std::uint64_t>(v);
  } else {
    throw ArgError("unknown config key '" + key + "'");
  }
}

double get_key(const cmas::CmasConfig& c, const std::string& key) {
  if (key == "views") return c.views;
  if (key == "steps") return c.steps;
  if (key == "w_ref") return c.w_ref;
  if (key == "lambda_bone") return c.lambda_bone;
  if (key == "lr") return c.optimizer.learning_rate;
  if (key == "iters") return c.optimizer.iterations;
  if (key == "beta1") return c.optimizer.beta1;
  if (key == "beta2") return c.optimizer.beta2;
  if (key == "epsilon") return c.optimizer.epsilon;
  if (key == "min_depth") return c.optimizer.min_depth;
  if (key == "threads") return c.threads;
  if (key == "distance") return c.rig.distance;
  if (key == "elevation") return c.rig.elevation;
  if (key == "reference_index") return c.reference_index;
  if (key == "seed") return static_cast<double>(c.seed);
  throw ArgError("unknown config key '" + key + "'");
}

std::vector<cmas::Pose2DSequence> pooled_views(const cmas::SyntheticDataset& ds) {
  std::vector<cmas::Pose2DSequence> pool;
  for (const auto& view : ds.projections) pool.insert(pool.end(), view.begin(), view.end());
  return pool;
}

constexpr int kFitDiagnosticSamples = 64;

cmas::RawPoseTrack track_from_sequence(const cmas::Pose2DSequence& s,
                                       const std::vector<int>& frame_index) {
  cmas::RawPoseTrack t;
  t.joints = s.joints;
  t.coords = s.coords;
  t.confidence.assign(static_cast<std::size_t>(s.frames) * s.joints, 1.0);
  t.mask = s.mask;
  t.frame_index = frame_index;
  return t;
}

cmas::RawPoseTrack read_input_track(const std::string& path, const cmas_lift_options& opts,
                                    int model_joints) {
  const std::string text = cmas::read_text(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    const cmas::JointMap map =
        opts.joint_map_path ? cmas::load_joint_map(opts.joint_map_path) : cmas::coco17_joint_map();
    if (map.joints() != model_joints) {
      cmas::fail(cmas::Errc::config, "joint map yields " + std::to_string(map.joints()) +
                                         " joints, model expects " + std::to_string(model_joints));
    }
    cmas::RawPoseTrack t = cmas::parse_alphapose(text, map);
    return t;
  }
  std::vector<int> frame_index;
  const cmas::Pose2DSequence s = cmas::read_pose2d_jsonl(path, &frame_index);
  return track_from_sequence(s, frame_index);
}

}  // namespace

extern "C" {

const char* cmas_version(void) { return "0.1.0"; }

const char* cmas_status_string(cmas_status status) {
  switch (status) {
    case CMAS_OK: return "ok";
    case CMAS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case CMAS_ERR_SHAPE: return "shape error";
    case CMAS_ERR_DOMAIN: return "domain error";
    case CMAS_ERR_PROJECTION: return "projection error";
    case CMAS_ERR_NUMERICAL: return "numerical error";
    case CMAS_ERR_CONFIG: return "configuration error";
    case CMAS_ERR_IO: return "I/O error";
    case CMAS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* cmas_last_error(void) { return g_last_error.c_str(); }

cmas_status cmas_config_create(cmas_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new cmas_config{};
  });
}

void cmas_config_destroy(cmas_config* config) { delete config; }

cmas_status cmas_config_clone(const cmas_config* config, cmas_config** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = new cmas_config{*config};
  });
}

cmas_status cmas_config_set_int(cmas_config* config, const char* key, int64_t value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    if (std::strcmp(key, "seed") == 0) {
      if (value < 0) throw ArgError("seed must be non-negative");
      config->value.seed = static_cast<std::uint64_t>(value);
      return;
    }
    set_key(config->value, key, static_cast<double>(value));
  });
}

cmas_status cmas_config_set_double(cmas_config* config, const char* key, double value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    set_key(config->value, key, value);
  });
}

cmas_status cmas_config_get_double(const cmas_config* config, const char* key, double* out) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(out, "out");
    *out = get_key(config->value, key);
  });
}

cmas_status cmas_config_load_json(cmas_config* config, const char* path) {
  return guarded([&] {
    need(config, "config");
    need(path, "path");
    const auto j = nlohmann::json::parse(cmas::read_text(path));
    if (!j.is_object()) cmas::fail(cmas::Errc::config, std::string(path) + ": expected a JSON object");
    cmas::CmasConfig next = config->value;
    for (const auto& [key, v] : j.items()) {
      if (!v.is_number()) cmas::fail(cmas::Errc::config, "config key '" + key + "' must be a number");
      try {
        if (key == "seed") {
          if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            throw ArgError("seed must be a non-negative integer");
          }
          next.seed = v.get<std::uint64_t>();
        } else {
          set_key(next, key, v.get<double>());
        }
      } catch (const ArgError& e) {
        cmas::fail(cmas::Errc::config, std::string(path) + ": " + e.what());
      }
    }
    config->value = next;
  });
}

cmas_status cmas_config_validate(const cmas_config* config) {
  return guarded([&] {
    need(config, "config");
    config->value.validate();
  });
}

cmas_status cmas_synth_dataset(const cmas_config* config, int count, int frames, const char* out_dir) {
  return guarded([&] {
    need(config, "config");
    need(out_dir, "out_dir");
    if (count < 1) cmas::fail(cmas::Errc::config, "synth: count must be >= 1");
    if (frames < 1) cmas::fail(cmas::Errc::config, "synth: frames must be >= 1");
    const cmas::CameraRig rig = cmas::rig_for(config->value);
    cmas::RngStream rng = cmas::rng_stream(config->value.seed, 0, 0);
    const cmas::SyntheticDataset ds =
        cmas::make_dataset(count, cmas::default_topology(), rig, frames, rng);
    cmas::write_dataset(out_dir, ds);
  });
}

cmas_status cmas_model_fit(const char* dataset_dir, const char* kind, const cmas_config* config,
                           cmas_model** out) {
  return guarded([&] {
    need(dataset_dir, "dataset_dir");
    need(kind, "kind");
    need(config, "config");
    need(out, "out");
    const std::string k = kind;
    if (k != "gaussian" && k != "regression") {
      cmas::fail(cmas::Errc::config, "model kind must be 'gaussian' or 'regression', got '" + k + "'");
    }
    const cmas::CmasConfig& cfg = config->value;
    if (cfg.steps < 1) cmas::fail(cmas::Errc::config, "fit: steps must be >= 1");
    const cmas::SyntheticDataset ds = cmas::read_dataset(dataset_dir);
    const std::vector<cmas::Pose2DSequence> pool = pooled_views(ds);
    const cmas::NoiseSchedule sched = cmas::cosine_schedule(cfg.steps);

    auto model = std::make_unique<cmas_model>();
    model->kind = k;
    model->loaded.kind = k;
    model->loaded.steps = cfg.steps;
    auto gaussian = std::make_shared<const cmas::GaussianMotionPrior>(cmas::fit_gaussian_prior(pool));
    const cmas::GaussianDenoiser analytic(gaussian, sched);
    if (k == "gaussian") {
      model->loaded.gaussian = gaussian;
    } else {
      cmas::RngStream rng = cmas::rng_stream(cfg.seed, 0, 1);
      model->loaded.regression = std::make_shared<const cmas::RegressionDenoiser>(
          cmas::fit_regression_denoiser(pool, sched, cmas::RegressionFitOptions{}, rng));
    }
    const auto den = model->loaded.make_denoiser(cfg.steps);
    for (int t = 1; t <= cfg.steps; ++t) {
      cmas::RngStream rng = cmas::rng_stream(cfg.seed, static_cast<std::uint64_t>(t), 2);
      cmas::RngStream ref_rng = rng;
      FitRow row{t, cmas::denoiser_mse(*den, pool, t, sched, kFitDiagnosticSamples, rng), 0.0};
      row.reference = k == "gaussian"
                          ? gaussian->bayes_mse(t, sched)
                          : cmas::denoiser_mse(analytic, pool, t, sched, kFitDiagnosticSamples, ref_rng);
      model->fit_rows.push_back(row);
    }
    *out = model.release();
  });
}

cmas_status cmas_model_load(const char* path, cmas_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    auto model = std::make_unique<cmas_model>();
    model->loaded = cmas::load_model(path);
    model->kind = model->loaded.kind;
    *out = model.release();
  });
}

cmas_status cmas_model_oracle(const char* motion3d_path, cmas_model** out) {
  return guarded([&] {
    need(motion3d_path, "motion3d_path");
    need(out, "out");
    auto model = std::make_unique<cmas_model>();
    model->kind = "oracle";
    model->oracle_truth = cmas::read_pose3d_jsonl(motion3d_path);
    *out = model.release();
  });
}

void cmas_model_destroy(cmas_model* model) { delete model; }

cmas_status cmas_model_save(const cmas_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    if (model->kind == "oracle") cmas::fail(cmas::Errc::config, "oracle models cannot be saved");
    const nlohmann::json j = model->loaded.gaussian
                                 ? cmas::prior_to_json(*model->loaded.gaussian, model->loaded.steps)
                                 : cmas::regression_to_json(*model->loaded.regression);
    cmas::save_model_json(j, path);
  });
}

cmas_status cmas_model_shape(const cmas_model* model, int* frames, int* joints) {
  return guarded([&] {
    need(model, "model");
    if (frames) *frames = model->frames();
    if (joints) *joints = model->joints();
  });
}

const char* cmas_model_kind(const cmas_model* model) { return model ? model->kind.c_str() : ""; }

int cmas_model_fit_rows(const cmas_model* model) {
  return model ? static_cast<int>(model->fit_rows.size()) : 0;
}

cmas_status cmas_model_fit_row(const cmas_model* model, int i, int* step, double* mse,
                               double* reference_mse) {
  return guarded([&] {
    need(model, "model");
    if (i < 0 || i >= static_cast<int>(model->fit_rows.size())) throw ArgError("fit row out of range");
    const FitRow& r = model->fit_rows[static_cast<std::size_t>(i)];
    if (step) *step = r.step;
    if (mse) *mse = r.mse;
    if (reference_mse) *reference_mse = r.reference;
  });
}

cmas_status cmas_lift(const cmas_model* model, const cmas_config* config, int frames, int joints,
                      const double* xy, const uint8_t* mask, double* out_xyz) {
  return guarded([&] {
    need(model, "model");
    need(config, "config");
    need(xy, "xy");
    need(out_xyz, "out_xyz");
    if (frames < 1 || joints < 1) cmas::fail(cmas::Errc::shape, "lift: empty input");
    cmas::Pose2DSequence input(frames, joints);
    const std::size_t n = static_cast<std::size_t>(frames) * joints;
    input.coords.assign(xy, xy + 2 * n);
    if (mask) {
      input.mask.assign(mask, mask + n);
      for (auto& m : input.mask) m = m ? 1 : 0;
    }
    const auto den = model->denoiser(config->value);
    const cmas::LiftResult r = cmas::lift(input, *den, config->value);
    std::memcpy(out_xyz, r.pose.coords.data(), r.pose.coords.size() * sizeof(double));
  });
}

cmas_lift_options cmas_lift_options_default(void) {
  cmas_lift_options o;
  o.raw = 0;
  o.joint_map_path = nullptr;
  o.confidence_threshold = cmas::kConfidenceThreshold;
  o.continuity_threshold = cmas::kContinuityThreshold;
  o.smoothing_sigma = 1.0;
  return o;
}

cmas_status cmas_lift_file(const cmas_model* model, const cmas_config* config, const char* input_path,
                           const cmas_lift_options* options, const char* out_path,
                           const char* diag_path, int* windows_out) {
  return guarded([&] {
    need(model, "model");
    need(config, "config");
    need(input_path, "input_path");
    need(out_path, "out_path");
    const cmas_lift_options opts = options ? *options : cmas_lift_options_default();
    const cmas::CmasConfig& cfg = config->value;
    cfg.validate();
    const int L = model->frames();
    const int J = model->joints();
    const auto den = model->denoiser(cfg);

    const cmas::RawPoseTrack track = read_input_track(input_path, opts, J);
    if (track.joints != J) {
      cmas::fail(cmas::Errc::config, "input has " + std::to_string(track.joints) +
                                         " joints, model expects " + std::to_string(J));
    }

    std::vector<cmas::RawPoseTrack> segments;
    if (opts.raw) {
      if (track.frames() != L) {
        cmas::fail(cmas::Errc::config, "input has " + std::to_string(track.frames()) +
                                           " frames, model expects " + std::to_string(L) +
                                           " (drop --raw to window longer inputs)");
      }
      segments.push_back(track);
    } else {
      cmas::PreprocessOptions po;
      po.confidence_threshold = opts.confidence_threshold;
      po.continuity_threshold = opts.continuity_threshold;
      po.sigma_frames = opts.smoothing_sigma;
      po.normalize.distance = cfg.rig.distance;
      for (auto& seg : cmas::preprocess(track, cmas::rig_for(cfg).reference(), po)) {
        segments.push_back(std::move(seg.track));
      }
    }

    std::string out_text;
    std::string diag_text;
    int window = 0;
    for (const auto& seg : segments) {
      const int F = seg.frames();
      if (F < L) continue;
      cmas::Pose3DSequence lifted(F, J);
      std::vector<int> starts;
      for (int s = 0; s + L <= F; s += L) starts.push_back(s);
      if (starts.back() + L < F) starts.push_back(F - L);
      for (int s : starts) {
        cmas::CmasConfig wcfg = cfg;
        wcfg.seed = cmas::sequence_seed(cfg.seed, static_cast<std::size_t>(window));
        const cmas::LiftResult r = cmas::lift(cmas::to_sequence(seg.slice(s, s + L)), *den, wcfg);
        std::copy(r.pose.coords.begin(), r.pose.coords.end(),
                  lifted.coords.begin() + static_cast<std::ptrdiff_t>(lifted.index(s, 0)));
        diag_text += cmas::diagnostics_to_jsonl(r.diagnostics, window);
        ++window;
      }
      std::vector<int> labels = seg.frame_index;
      if (labels.empty()) {
        for (int f = 0; f < F; ++f) labels.push_back(f);
      }
      out_text += cmas::pose3d_to_jsonl(lifted, labels);
    }
    if (window == 0) {
      cmas::fail(cmas::Errc::config, "no usable segment has the model length of " + std::to_string(L) + " frames");
    }
    cmas::write_text(out_path, out_text);
    if (diag_path) cmas::write_text(diag_path, diag_text);
    if (windows_out) *windows_out = window;
  });
}

cmas_status cmas_mpjpe(int frames, int joints, const double* pred, const double* gt,
                       const char* alignment, double* out_mm) {
  return guarded([&] {
    need(pred, "pred");
    need(gt, "gt");
    need(out_mm, "out_mm");
    if (frames < 1 || joints < 1) cmas::fail(cmas::Errc::shape, "mpjpe: empty shape");
    const cmas::Alignment a = cmas::parse_alignment(alignment ? alignment : "root");
    cmas::Pose3DSequence p(frames, joints), g(frames, joints);
    p.coords.assign(pred, pred + p.size());
    g.coords.assign(gt, gt + g.size());
    *out_mm = cmas::mpjpe(p, g, a);
  });
}

cmas_status cmas_eval_files(const char* pred_path, const char* gt_path, const char* alignment,
                            double* out_mm) {
  return guarded([&] {
    need(pred_path, "pred_path");
    need(gt_path, "gt_path");
    need(out_mm, "out_mm");
    const cmas::Alignment a = cmas::parse_alignment(alignment ? alignment : "root");
    const auto pred = cmas::read_pose3d_jsonl(pred_path);
    const auto gt = cmas::read_pose3d_jsonl(gt_path);
    *out_mm = cmas::mpjpe(pred, gt, a);
  });
}

cmas_ablate_options cmas_ablate_options_default(void) {
  cmas_ablate_options o;
  o.views_grid = nullptr;
  o.weights_grid = nullptr;
  o.components = 1;
  o.input_noise = 0.005;
  o.max_sequences = 0;
  o.baseline = 1;
  return o;
}

cmas_status cmas_ablate(const cmas_model* model, const cmas_config* base, const char* dataset_dir,
                        const cmas_ablate_options* options, const char* out_csv,
                        const char* out_json, int* rows_out) {
  return guarded([&] {
    need(model, "model");
    need(base, "base");
    need(dataset_dir, "dataset_dir");
    const cmas_ablate_options opts = options ? *options : cmas_ablate_options_default();
    cmas::AblationGrid grid;
    if (opts.views_grid) grid.views = cmas::parse_view_grid(opts.views_grid);
    if (opts.weights_grid) grid.weights = cmas::parse_weight_grid(opts.weights_grid);
    grid.components = opts.components != 0;
    if (opts.max_sequences < 0) cmas::fail(cmas::Errc::config, "ablate: max_sequences must be >= 0");
    const cmas::CmasConfig& cfg = base->value;
    cfg.validate();
    if (model->kind == "oracle") cmas::fail(cmas::Errc::config, "ablate needs a fitted model");

    cmas::SyntheticDataset ds = cmas::read_dataset(dataset_dir);
    if (opts.max_sequences > 0 && static_cast<std::size_t>(opts.max_sequences) < ds.motions.size()) {
      ds.motions.resize(static_cast<std::size_t>(opts.max_sequences));
      for (auto& v : ds.projections) v.resize(ds.motions.size());
    }
    const cmas::BenchmarkData data = cmas::make_benchmark_data(ds, opts.input_noise, cfg.seed);
    const auto den = model->denoiser(cfg);
    const auto& topo = cmas::default_topology();
    std::vector<cmas::BenchmarkReport> reports =
        cmas::run_ablation(cfg, grid, data, *den, topo, cfg.threads);
    if (opts.baseline) reports.insert(reports.begin(), cmas::baseline_report(data, cfg, topo));
    if (out_csv) cmas::write_text(out_csv, cmas::reports_to_csv(reports));
    if (out_json) cmas::write_text(out_json, cmas::reports_to_json(reports));
    if (rows_out) *rows_out = static_cast<int>(reports.size());
  });
}

}  // extern "C"
