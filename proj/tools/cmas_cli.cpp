#include <cstdio>
#include <cstdint>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cmas/cmas.h"

namespace {

// Exit codes: 0 ok, 1 runtime failure, 2 usage or configuration problem.
int exit_code(cmas_status s) {
  switch (s) {
    case CMAS_OK: return 0;
    case CMAS_ERR_INVALID_ARGUMENT:
    case CMAS_ERR_CONFIG:
    case CMAS_ERR_SHAPE:
    case CMAS_ERR_DOMAIN: return 2;
    default: return 1;
  }
}

struct Failure {
  int code;
};

void check(cmas_status s, const char* what) {
  if (s == CMAS_OK) return;
  std::fprintf(stderr, "error: %s: %s: %s\n", what, cmas_status_string(s), cmas_last_error());
  throw Failure{exit_code(s)};
}

struct ConfigHandle {
  cmas_config* ptr = nullptr;
  ConfigHandle() { check(cmas_config_create(&ptr), "config"); }
  ~ConfigHandle() { cmas_config_destroy(ptr); }
  ConfigHandle(const ConfigHandle&) = delete;
  ConfigHandle& operator=(const ConfigHandle&) = delete;
};

struct ModelHandle {
  cmas_model* ptr = nullptr;
  ModelHandle() = default;
  ~ModelHandle() { cmas_model_destroy(ptr); }
  ModelHandle(const ModelHandle&) = delete;
  ModelHandle& operator=(const ModelHandle&) = delete;
};

// Sampler flags shared by several subcommands. Values given on the command
// line override a --config file, which overrides the built-in defaults.
struct SamplerFlags {
  std::string config_path;
  int views = 7;
  int steps = 100;
  double w_ref = 0.8;
  double lambda_bone = 0.001;
  double lr = 0.01;
  int iters = 1000;
  std::uint64_t seed = 0;
  int threads = 0;
  double distance = 7.0;
  double elevation = 0.19634954084936207;  // pi / 16

  struct Bound {
    CLI::Option* opt;
    const char* key;
    std::function<void(cmas_config*)> apply;
  };
  std::vector<Bound> bound;

  void add_int(CLI::App* app, const char* flag, const char* key, int& v, const char* help) {
    auto* o = app->add_option(flag, v, help)->capture_default_str();
    bound.push_back({o, key, [&v, key](cmas_config* c) { check(cmas_config_set_int(c, key, v), key); }});
  }
  void add_double(CLI::App* app, const char* flag, const char* key, double& v, const char* help) {
    auto* o = app->add_option(flag, v, help)->capture_default_str();
    bound.push_back({o, key, [&v, key](cmas_config* c) { check(cmas_config_set_double(c, key, v), key); }});
  }

  void add_common(CLI::App* app) {
    app->add_option("--config", config_path, "JSON file of sampler settings; flags override it")
        ->check(CLI::ExistingFile);
    auto* o = app->add_option("--seed", seed, "Seed for every random draw")->capture_default_str();
    bound.push_back({o, "seed", [this](cmas_config* c) {
                       check(cmas_config_set_int(c, "seed", static_cast<std::int64_t>(seed)), "seed");
                     }});
    add_int(app, "--threads", "threads", threads, "Worker threads, 0 = all cores");
    add_int(app, "--views", "views", views, "Number of views V including the reference");
    add_double(app, "--distance", "distance", distance, "Camera distance from the subject, m");
    add_double(app, "--elevation", "elevation", elevation, "Camera elevation, rad");
  }

  void add_sampler(CLI::App* app) {
    add_common(app);
    add_int(app, "--steps", "steps", steps, "Diffusion steps T");
    add_double(app, "--w-ref", "w_ref", w_ref, "Reference-view weight");
    add_double(app, "--lambda-bone", "lambda_bone", lambda_bone, "Bone-variance loss weight");
    add_double(app, "--lr", "lr", lr, "Adam learning rate");
    add_int(app, "--iters", "iters", iters, "Adam iterations per triangulation");
  }

  void apply(ConfigHandle& cfg) const {
    check(cmas_config_set_int(cfg.ptr, "threads", 0), "threads");
    if (!config_path.empty()) check(cmas_config_load_json(cfg.ptr, config_path.c_str()), "config file");
    for (const auto& b : bound) {
      if (b.opt->count() > 0) b.apply(cfg.ptr);
    }
    check(cmas_config_validate(cfg.ptr), "config");
  }
};

int run(int argc, char** argv) {
  CLI::App app{"Lift 2D pose sequences to 3D with conditional multi-view ancestral sampling"};
  app.set_version_flag("--version", std::string(cmas_version()));
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset of 3D motions and their projections");
  SamplerFlags synth_flags;
  int synth_n = 200, synth_len = 32;
  std::string synth_out;
  synth->add_option("-n,--n", synth_n, "Number of motions")->capture_default_str();
  synth->add_option("--length", synth_len, "Frames per motion")->capture_default_str();
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth_flags.add_common(synth);

  // fit-prior
  auto* fit = app.add_subcommand("fit-prior", "Fit a denoiser to a dataset directory");
  SamplerFlags fit_flags;
  std::string fit_dataset, fit_kind = "gaussian", fit_out;
  fit->add_option("--dataset", fit_dataset, "Dataset directory")->required();
  fit->add_option("--kind", fit_kind, "gaussian or regression")
      ->capture_default_str()
      ->check(CLI::IsMember({"gaussian", "regression"}));
  fit->add_option("--out", fit_out, "Model file to write")->required();
  fit_flags.add_common(fit);
  fit_flags.add_int(fit, "--steps", "steps", fit_flags.steps, "Diffusion steps T");

  // lift
  auto* lift = app.add_subcommand("lift", "Lift a 2D pose file to 3D");
  SamplerFlags lift_flags;
  std::string lift_input, lift_model, lift_oracle, lift_out, lift_diag, lift_joint_map, lift_gt;
  std::string lift_alignment = "root";
  bool lift_raw = false;
  cmas_lift_options lift_opts = cmas_lift_options_default();
  lift->add_option("--input", lift_input, "Pose2D JSONL or pose-estimator JSON")
      ->required()
      ->check(CLI::ExistingFile);
  auto* model_opt = lift->add_option("--model", lift_model, "Model file")->check(CLI::ExistingFile);
  auto* oracle_opt = lift->add_option("--oracle", lift_oracle,
                                      "Use the projections of this Pose3D JSONL motion as the denoiser")
                         ->check(CLI::ExistingFile);
  model_opt->excludes(oracle_opt);
  lift->add_option("--out", lift_out, "Pose3D JSONL to write")->required();
  lift->add_option("--diag", lift_diag, "Per-step diagnostics JSONL to write");
  lift->add_flag("--raw", lift_raw, "Skip preprocessing; input must match the model length");
  lift->add_option("--joint-map", lift_joint_map, "Joint map JSON for pose-estimator input (default COCO-17)")
      ->check(CLI::ExistingFile);
  lift->add_option("--confidence-threshold", lift_opts.confidence_threshold, "Mask joints below this confidence")
      ->capture_default_str();
  lift->add_option("--continuity-threshold", lift_opts.continuity_threshold, "Cut where the frame jump exceeds this")
      ->capture_default_str();
  lift->add_option("--smooth-sigma", lift_opts.smoothing_sigma, "Temporal smoothing sigma, frames")
      ->capture_default_str();
  lift->add_option("--gt", lift_gt, "Ground-truth Pose3D JSONL; prints MPJPE after lifting")
      ->check(CLI::ExistingFile);
  lift->add_option("--alignment", lift_alignment, "Alignment for --gt: none, root or procrustes")
      ->capture_default_str()
      ->check(CLI::IsMember({"none", "root", "procrustes"}));
  lift_flags.add_sampler(lift);

  // eval
  auto* eval = app.add_subcommand("eval", "MPJPE between two Pose3D JSONL files");
  std::string eval_pred, eval_gt, eval_alignment = "root", eval_csv;
  eval->add_option("--pred", eval_pred, "Predicted motion")->required()->check(CLI::ExistingFile);
  eval->add_option("--gt", eval_gt, "Ground-truth motion")->required()->check(CLI::ExistingFile);
  eval->add_option("--alignment", eval_alignment, "none, root or procrustes")
      ->capture_default_str()
      ->check(CLI::IsMember({"none", "root", "procrustes"}));
  eval->add_option("--csv", eval_csv, "Also write the result as CSV");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Run the view, component and weight ablations");
  SamplerFlags ablate_flags;
  std::string ab_dataset, ab_model, ab_csv, ab_json;
  std::string ab_views = "3,5,7,9";
  std::string ab_weights = "1/7,1/4,1/3,2/5,1/2,2/3,3/4,4/5,9/10,1";
  bool ab_no_components = false, ab_no_baseline = false;
  cmas_ablate_options ab_opts = cmas_ablate_options_default();
  ablate->add_option("--dataset", ab_dataset, "Dataset directory")->required();
  ablate->add_option("--model", ab_model, "Model file")->required()->check(CLI::ExistingFile);
  ablate->add_option("--out", ab_csv, "CSV report to write")->required();
  ablate->add_option("--json", ab_json, "Also write a JSON report");
  ablate->add_option("--views-grid", ab_views, "View counts")->capture_default_str();
  ablate->add_option("--weights-grid", ab_weights, "Reference weights")->capture_default_str();
  ablate->add_flag("--no-components", ab_no_components, "Skip the loss-component cells");
  ablate->add_flag("--no-baseline", ab_no_baseline, "Skip the constant-depth baseline row");
  ablate->add_option("--noise", ab_opts.input_noise, "2D noise added to the inputs")->capture_default_str();
  ablate->add_option("--max-sequences", ab_opts.max_sequences, "Use at most this many sequences, 0 = all")
      ->capture_default_str();
  ablate_flags.add_sampler(ablate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      ConfigHandle cfg;
      synth_flags.apply(cfg);
      check(cmas_synth_dataset(cfg.ptr, synth_n, synth_len, synth_out.c_str()), "synth");
      std::fprintf(stderr, "wrote %d motions to %s\n", synth_n, synth_out.c_str());
    } else if (fit->parsed()) {
      ConfigHandle cfg;
      fit_flags.apply(cfg);
      ModelHandle model;
      check(cmas_model_fit(fit_dataset.c_str(), fit_kind.c_str(), cfg.ptr, &model.ptr), "fit-prior");
      check(cmas_model_save(model.ptr, fit_out.c_str()), "fit-prior");
      const bool gaussian = fit_kind == "gaussian";
      std::printf("t,mse,%s\n", gaussian ? "bayes_mse" : "analytic_mse");
      for (int i = 0; i < cmas_model_fit_rows(model.ptr); ++i) {
        int t = 0;
        double mse = 0.0, ref = 0.0;
        check(cmas_model_fit_row(model.ptr, i, &t, &mse, &ref), "fit-prior");
        std::printf("%d,%.6g,%.6g\n", t, mse, ref);
      }
    } else if (lift->parsed()) {
      if (lift_model.empty() && lift_oracle.empty()) {
        std::fprintf(stderr, "error: lift needs --model or --oracle\n");
        return 2;
      }
      ConfigHandle cfg;
      lift_flags.apply(cfg);
      ModelHandle model;
      if (!lift_oracle.empty()) {
        check(cmas_model_oracle(lift_oracle.c_str(), &model.ptr), "oracle");
      } else {
        check(cmas_model_load(lift_model.c_str(), &model.ptr), "model");
      }
      lift_opts.raw = lift_raw ? 1 : 0;
      lift_opts.joint_map_path = lift_joint_map.empty() ? nullptr : lift_joint_map.c_str();
      int windows = 0;
      check(cmas_lift_file(model.ptr, cfg.ptr, lift_input.c_str(), &lift_opts, lift_out.c_str(),
                           lift_diag.empty() ? nullptr : lift_diag.c_str(), &windows),
            "lift");
      std::fprintf(stderr, "lifted %d window(s) to %s\n", windows, lift_out.c_str());
      if (!lift_gt.empty()) {
        double mm = 0.0;
        check(cmas_eval_files(lift_out.c_str(), lift_gt.c_str(), lift_alignment.c_str(), &mm), "eval");
        std::printf("mpjpe_%s %.6f\n", lift_alignment.c_str(), mm);
      }
    } else if (eval->parsed()) {
      double mm = 0.0;
      check(cmas_eval_files(eval_pred.c_str(), eval_gt.c_str(), eval_alignment.c_str(), &mm), "eval");
      std::printf("mpjpe_%s %.6f\n", eval_alignment.c_str(), mm);
      if (!eval_csv.empty()) {
        std::ofstream os(eval_csv);
        os << "pred,gt,alignment,mpjpe_mm\n" << eval_pred << ',' << eval_gt << ',' << eval_alignment << ','
           << mm << '\n';
        if (!os) {
          std::fprintf(stderr, "error: cannot write %s\n", eval_csv.c_str());
          return 1;
        }
      }
    } else if (ablate->parsed()) {
      ConfigHandle cfg;
      ablate_flags.apply(cfg);
      ModelHandle model;
      check(cmas_model_load(ab_model.c_str(), &model.ptr), "model");
      ab_opts.views_grid = ab_views.c_str();
      ab_opts.weights_grid = ab_weights.c_str();
      ab_opts.components = ab_no_components ? 0 : 1;
      ab_opts.baseline = ab_no_baseline ? 0 : 1;
      int rows = 0;
      check(cmas_ablate(model.ptr, cfg.ptr, ab_dataset.c_str(), &ab_opts, ab_csv.c_str(),
                        ab_json.empty() ? nullptr : ab_json.c_str(), &rows),
            "ablate");
      std::fprintf(stderr, "wrote %d rows to %s\n", rows, ab_csv.c_str());
    }
  } catch (const Failure& f) {
    return f.code;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
