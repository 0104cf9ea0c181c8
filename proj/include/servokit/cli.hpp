#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "servokit/archcheck.hpp"
#include "servokit/camera.hpp"
#include "servokit/config.hpp"
#include "servokit/csvio.hpp"
#include "servokit/datapipe.hpp"
#include "servokit/errors.hpp"
#include "servokit/image.hpp"
#include "servokit/kinematics.hpp"
#include "servokit/plot.hpp"
#include "servokit/servo.hpp"
#include "servokit/vision.hpp"

namespace servokit {

inline std::set<std::string> all_config_keys() {
  std::set<std::string> keys = {"seed"};
  for (const auto& group :
       {kinematics_config_keys(), camera_config_keys(), servo_config_keys(),
        vision_config_keys()})
    keys.insert(group.begin(), group.end());
  return keys;
}

namespace cli {

struct GlobalOpts {
  std::string config_path;
  std::uint64_t seed = 42;
  bool seed_given = false;
  bool quiet = false;
  KeyValueConfig cfg;

  void load() {
    if (!config_path.empty()) cfg = KeyValueConfig::from_file(config_path);
    cfg.reject_unknown_keys(all_config_keys());
    if (!seed_given) seed = static_cast<std::uint64_t>(cfg.get_int("seed", 42));
  }

  std::ostream& diag() const {
    static std::ostream null_stream(nullptr);
    return quiet ? null_stream : std::cerr;
  }
};

inline Vec4 parse_q(const std::vector<double>& values, const char* flag) {
  if (values.size() != 4)
    throw ConfigError(std::string(flag) + " needs exactly 4 joint angles");
  return Vec4(values[0], values[1], values[2], values[3]);
}

inline Vec4 q_from_config(const KeyValueConfig& cfg, const std::string& key,
                          const Vec4& fallback) {
  const auto arr = cfg.get_vector<4>(
      {fallback[0], fallback[1], fallback[2], fallback[3]}, key);
  return Vec4(arr[0], arr[1], arr[2], arr[3]);
}

struct ServoArgs {
  std::string trace_path;
  std::string desired_csv;
  std::string traj_svg;
  std::string error_svg_path;
  std::vector<double> q_start, q_goal;
  double lambda = 0, dt = 0, damping = 0, stop_tolerance = 0, zstar = 0;
  long long iterations = 0;
  std::string depth_mode;
  bool early_stop = false;
  CLI::App* sub = nullptr;
};

inline int run_servo_cmd(GlobalOpts& g, const ServoArgs& a) {
  ServoConfig sc = servo_from_config(g.cfg);
  if (a.sub->count("--lambda")) sc.lambda = a.lambda;
  if (a.sub->count("--dt")) sc.dt = a.dt;
  if (a.sub->count("--iterations")) sc.iterations = static_cast<int>(a.iterations);
  if (a.sub->count("--damping")) sc.damping = a.damping;
  if (a.sub->count("--stop-tolerance")) {
    sc.stop_tolerance = a.stop_tolerance;
    sc.early_stop = true;
  }
  if (a.early_stop) sc.early_stop = true;
  if (a.sub->count("--depth-mode")) {
    if (a.depth_mode == "true")
      sc.depth_mode = DepthMode::true_depth;
    else if (a.depth_mode == "constant")
      sc.depth_mode = DepthMode::constant;
    else
      throw ConfigError("--depth-mode must be 'true' or 'constant'");
  }
  if (a.sub->count("--zstar")) sc.constant_depth = a.zstar;
  if (!(sc.lambda > 0.0) || !(sc.dt > 0.0) || sc.iterations < 1)
    throw ConfigError("servo needs lambda > 0, dt > 0, iterations >= 1");

  const DhTable dh = dh_from_config(g.cfg);
  const CameraIntrinsics k = intrinsics_from_config(g.cfg);
  const TargetScene scene = scene_from_config(g.cfg);
  const Mat3 mount = mount_from_config(g.cfg);
  const Vec4 q_start = a.sub->count("--q-start")
                           ? parse_q(a.q_start, "--q-start")
                           : q_from_config(g.cfg, "servo.q_start", kDefaultQStart);
  const Vec4 q_goal = a.sub->count("--q-goal")
                          ? parse_q(a.q_goal, "--q-goal")
                          : q_from_config(g.cfg, "servo.q_goal", kDefaultQGoal);

  ServoTrace trace;
  try {
    if (!a.desired_csv.empty()) {
      const FeatureSet desired =
          desired_features_from_csv(a.desired_csv, sc.constant_depth);
      trace = run_servo_to_features(sc, dh, k, scene, q_start, desired, mount);
    } else {
      trace = run_servo(sc, dh, k, scene, q_start, q_goal, mount);
    }
  } catch (const FieldOfViewError& e) {
    // Keep the partial trace around; it is the main debugging artifact.
    write_text_file(a.trace_path, trace_to_csv(e.trace));
    throw;
  }
  write_text_file(a.trace_path, trace_to_csv(trace));
  if (!a.traj_svg.empty()) write_text_file(a.traj_svg, trajectory_svg(trace, k));
  if (!a.error_svg_path.empty())
    write_text_file(a.error_svg_path, error_svg(trace));
  if (!trace.rows.empty())
    g.diag() << "servo: " << trace.rows.size() << " iterations, error "
             << format_double(trace.rows.front().total_error) << " -> "
             << format_double(trace.rows.back().total_error) << " px\n";
  return 0;
}

struct AnnotateArgs {
  std::string in_dir;
  std::string out_csv;
  double sigma = 0, low = 0, high = 0, slope = 0;
  CLI::App* sub = nullptr;
};

inline std::vector<std::string> list_images(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".pgm" || ext == ".ppm")
      names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

inline int run_annotate_cmd(GlobalOpts& g, const AnnotateArgs& a) {
  VisionParams p = vision_from_config(g.cfg);
  if (a.sub->count("--sigma")) p.sigma = a.sigma;
  if (a.sub->count("--low")) p.low = a.low;
  if (a.sub->count("--high")) p.high = a.high;
  if (a.sub->count("--slope")) p.slope = a.slope;

  const auto names = list_images(a.in_dir);
  if (names.empty()) throw NoTargetError("no images in " + a.in_dir);
  std::vector<LabeledImage> items;
  for (const auto& name : names) {
    RasterImage img = read_pnm((std::filesystem::path(a.in_dir) / name).string());
    if (img.channels == 3) img = to_grayscale(img);
    try {
      const EdgeMap edges = canny(img, p.sigma, p.low, p.high);
      const CornerQuad quad = extract_quadrilateral(edges, p.slope);
      ensure_corner_support(edges, quad);
      items.push_back({name, quad, LabelUnits::pixels});
    } catch (const Error& e) {
      throw NoTargetError(name + ": " + e.what());
    }
    g.diag() << "annotated " << name << "\n";
  }
  write_text_file(a.out_csv, labels_to_csv(items));
  return 0;
}

struct AugmentArgs {
  std::string in_dir, labels_csv, out_dir, labels_out;
  std::vector<std::string> ops;
};

inline int run_augment_cmd(GlobalOpts& g, const AugmentArgs& a) {
  namespace fs = std::filesystem;
  if (a.ops.empty()) throw ConfigError("augment: --ops must name at least one op");
  std::vector<AugmentOp> ops;
  for (const auto& name : a.ops) ops.push_back(augment_op_from_string(name));
  const auto items = read_labels_csv(a.labels_csv);
  fs::create_directories(a.out_dir);
  std::vector<LabeledImage> out_items;
  for (const auto& item : items) {
    const RasterImage img = read_pnm((fs::path(a.in_dir) / item.id).string());
    write_pnm((fs::path(a.out_dir) / item.id).string(), img);
    out_items.push_back(item);
    for (const AugmentOp op : ops) {
      auto [aug_img, aug_item] = augment(img, item, op);
      write_pnm((fs::path(a.out_dir) / aug_item.id).string(), aug_img);
      out_items.push_back(aug_item);
    }
  }
  const std::string labels_out =
      a.labels_out.empty() ? (fs::path(a.out_dir) / "labels.csv").string()
                           : a.labels_out;
  write_text_file(labels_out, labels_to_csv(out_items));
  g.diag() << "augment: " << items.size() << " -> " << out_items.size()
           << " items\n";
  return 0;
}

struct SplitArgs {
  std::string labels_csv, out_path;
  double val_frac = 0.1;
};

inline int run_split_cmd(GlobalOpts& g, const SplitArgs& a) {
  const auto items = read_labels_csv(a.labels_csv);
  std::vector<std::string> ids;
  for (const auto& item : items) ids.push_back(item.id);
  const SplitResult split = split_train_val(ids, a.val_frac, g.seed);
  const std::set<std::string> val_set(split.val.begin(), split.val.end());
  std::string out = "id,subset\n";
  for (const auto& id : ids) {
    out += id;
    out += val_set.count(id) ? ",val\n" : ",train\n";
  }
  if (a.out_path.empty())
    std::cout << out;
  else
    write_text_file(a.out_path, out);
  g.diag() << "split: " << split.train.size() << " train, " << split.val.size()
           << " val\n";
  return 0;
}

struct KfoldArgs {
  std::string labels_csv, out_path;
  long long k = 7;
};

inline int run_kfold_cmd(GlobalOpts& g, const KfoldArgs& a) {
  const auto items = read_labels_csv(a.labels_csv);
  std::vector<std::string> ids;
  for (const auto& item : items) ids.push_back(item.id);
  const FoldPlan plan = kfold_partition(ids, static_cast<int>(a.k), g.seed);
  write_text_file(a.out_path, folds_to_csv(plan));
  g.diag() << "kfold: " << ids.size() << " ids into " << a.k << " folds\n";
  return 0;
}

struct EvalArgs {
  std::string pred_csv, truth_csv;
};

inline int run_eval_cmd(GlobalOpts&, const EvalArgs& a) {
  const EvalReport report =
      evaluate(read_labels_csv(a.pred_csv), read_labels_csv(a.truth_csv));
  std::cout << "corner1_mae,corner2_mae,corner3_mae,corner4_mae,overall_mae,"
               "worst_corner\n";
  for (int c = 0; c < 4; ++c) std::cout << format_double(report.per_corner[c]) << ',';
  std::cout << format_double(report.overall) << ','
            << format_int(report.worst_corner + 1) << "\n";
  return 0;
}

struct ArchArgs {
  std::string pool = "avg";
  std::string csv_path;
};

inline int run_archcheck_cmd(GlobalOpts&, const ArchArgs& a) {
  PoolMode mode;
  if (a.pool == "avg")
    mode = PoolMode::avg;
  else if (a.pool == "max")
    mode = PoolMode::max;
  else
    throw ConfigError("--pool must be 'avg' or 'max'");
  const auto arch = build_modified_vgg19(mode);
  if (!a.csv_path.empty()) write_text_file(a.csv_path, arch_to_csv(arch));
  const VerifyReport report = verify_table(arch, expected_shape_table());
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& row = report.rows[i];
    std::cout << format_int(static_cast<long long>(i)) << "  " << row.name
              << "  " << kind_name(row.kind) << "  "
              << shape_to_string(row.input) << " -> "
              << shape_to_string(row.output) << "  params "
              << format_int(row.params) << (row.matches ? "" : "  MISMATCH")
              << "\n";
  }
  std::cout << "dense head params: " << format_int(report.dense_head_params)
            << "\n";
  std::cout << "frozen base params: " << format_int(report.frozen_base_params)
            << "\n";
  std::cout << "verdict: " << (report.ok ? "OK" : "MISMATCH") << " ("
            << report.message << ")\n";
  return 0;
}

struct LrArgs {
  long long step = 0;
  double initial = 1e-5, factor = 0.95;
  long long every = 2500;
};

inline int run_lr_cmd(GlobalOpts&, const LrArgs& a) {
  const LrSchedule schedule{a.initial, a.factor, a.every};
  std::cout << format_double(lr_at(schedule, a.step)) << "\n";
  return 0;
}

struct RenderQuadArgs {
  std::string out_path;
  long long width = 320, height = 180;
  std::vector<double> corners;
  long long fg = 200, bg = 60;
  double noise = 0.0, shade = 0.0;
};

inline int run_render_quad_cmd(GlobalOpts& g, const RenderQuadArgs& a) {
  if (a.corners.size() != 8)
    throw ConfigError("--corners needs u1,v1,...,u4,v4 (8 values)");
  if (a.fg < 0 || a.fg > 255 || a.bg < 0 || a.bg > 255)
    throw ConfigError("--fg/--bg must be gray levels in 0..255");
  std::array<PixelPoint, 4> pts;
  for (int i = 0; i < 4; ++i)
    pts[i] = {a.corners[2 * i], a.corners[2 * i + 1]};
  RenderOptions options;
  options.noise_sigma = a.noise;
  options.shade = a.shade;
  options.seed = g.seed;
  const RasterImage img = render_quad(
      static_cast<int>(a.width), static_cast<int>(a.height),
      reorder_canonical(pts), static_cast<std::uint8_t>(a.fg),
      static_cast<std::uint8_t>(a.bg), options);
  write_pnm(a.out_path, img);
  return 0;
}

inline int run(int argc, const char* const* argv) {
  CLI::App app{"visual-servoing workbench: IBVS simulation and keypoint dataset tools"};
  app.fallthrough();
  GlobalOpts g;
  app.add_option("--config", g.config_path, "key = value config file");
  auto* seed_opt = app.add_option("--seed", g.seed, "PRNG seed (default 42)");
  app.add_flag("--quiet", g.quiet, "suppress diagnostics on stderr");
  app.require_subcommand(1);

  ServoArgs servo_args;
  servo_args.sub = app.add_subcommand("servo", "run the closed-loop IBVS simulation");
  servo_args.sub->add_option("--trace", servo_args.trace_path, "output trace CSV")
      ->required();
  servo_args.sub->add_option("--desired", servo_args.desired_csv,
                             "desired-feature CSV (u1,v1,...,u4,v4)");
  servo_args.sub->add_option("--plot-traj", servo_args.traj_svg,
                             "feature-trajectory SVG");
  servo_args.sub->add_option("--plot-error", servo_args.error_svg_path,
                             "error-norm SVG");
  servo_args.sub->add_option("--q-start", servo_args.q_start, "start joint angles")
      ->delimiter(',');
  servo_args.sub->add_option("--q-goal", servo_args.q_goal, "goal joint angles")
      ->delimiter(',');
  servo_args.sub->add_option("--lambda", servo_args.lambda, "control gain");
  servo_args.sub->add_option("--dt", servo_args.dt, "time step [s]");
  servo_args.sub->add_option("--iterations", servo_args.iterations, "loop count");
  servo_args.sub->add_option("--damping", servo_args.damping,
                             "least-squares damping");
  servo_args.sub->add_option("--stop-tolerance", servo_args.stop_tolerance,
                             "early-stop error norm [px]; enables early stop");
  servo_args.sub->add_flag("--early-stop", servo_args.early_stop,
                           "stop once the error norm drops below the tolerance");
  servo_args.sub->add_option("--depth-mode", servo_args.depth_mode,
                             "'true' or 'constant' feature depth");
  servo_args.sub->add_option("--zstar", servo_args.zstar,
                             "constant depth estimate [m]");

  AnnotateArgs annotate_args;
  annotate_args.sub =
      app.add_subcommand("annotate", "detect quad corners in a directory of images");
  annotate_args.sub->add_option("--in", annotate_args.in_dir, "input image dir")
      ->required();
  annotate_args.sub->add_option("--out", annotate_args.out_csv, "output label CSV")
      ->required();
  annotate_args.sub->add_option("--sigma", annotate_args.sigma, "blur std-dev");
  annotate_args.sub->add_option("--low", annotate_args.low, "weak threshold");
  annotate_args.sub->add_option("--high", annotate_args.high, "strong threshold");
  annotate_args.sub->add_option("--slope", annotate_args.slope,
                                "intercept-line slope");

  AugmentArgs augment_args;
  auto* augment_sub =
      app.add_subcommand("augment", "flip/rotate images with their labels");
  augment_sub->add_option("--in", augment_args.in_dir, "input image dir")
      ->required();
  augment_sub->add_option("--labels", augment_args.labels_csv, "label CSV")
      ->required();
  augment_sub->add_option("--ops", augment_args.ops, "rot180,hflip,vflip")
      ->delimiter(',')
      ->required();
  augment_sub->add_option("--out", augment_args.out_dir, "output dir")->required();
  augment_sub->add_option("--labels-out", augment_args.labels_out,
                          "combined label CSV (default <out>/labels.csv)");

  SplitArgs split_args;
  auto* split_sub =
      app.add_subcommand("split", "deterministic train/validation split");
  split_sub->add_option("--labels", split_args.labels_csv, "label CSV")->required();
  split_sub->add_option("--val-frac", split_args.val_frac,
                        "validation fraction (default 0.1)");
  split_sub->add_option("--out", split_args.out_path,
                        "output CSV (default stdout)");

  KfoldArgs kfold_args;
  auto* kfold_sub = app.add_subcommand("kfold", "deterministic k-fold partition");
  kfold_sub->add_option("--labels", kfold_args.labels_csv, "label CSV")->required();
  kfold_sub->add_option("--k", kfold_args.k, "fold count (default 7)");
  kfold_sub->add_option("--out", kfold_args.out_path, "fold CSV")->required();

  EvalArgs eval_args;
  auto* eval_sub =
      app.add_subcommand("eval", "per-corner MAE of predictions vs truth");
  eval_sub->add_option("--pred", eval_args.pred_csv, "prediction CSV")->required();
  eval_sub->add_option("--truth", eval_args.truth_csv, "truth CSV")->required();

  ArchArgs arch_args;
  auto* arch_sub =
      app.add_subcommand("archcheck", "propagate and verify the network table");
  arch_sub->add_option("--pool", arch_args.pool, "avg or max (default avg)");
  arch_sub->add_option("--csv", arch_args.csv_path, "write architecture CSV");

  LrArgs lr_args;
  auto* lr_sub = app.add_subcommand("lr", "step-decay learning-rate value");
  lr_sub->add_option("--step", lr_args.step, "training step")->required();
  lr_sub->add_option("--initial", lr_args.initial, "initial rate (default 1e-5)");
  lr_sub->add_option("--factor", lr_args.factor, "decay factor (default 0.95)");
  lr_sub->add_option("--every", lr_args.every, "decay period (default 2500)");

  RenderQuadArgs rq_args;
  auto* rq_sub =
      app.add_subcommand("render-quad", "render a filled quadrilateral PGM");
  rq_sub->add_option("--out", rq_args.out_path, "output PGM")->required();
  rq_sub->add_option("--width", rq_args.width, "image width (default 320)");
  rq_sub->add_option("--height", rq_args.height, "image height (default 180)");
  rq_sub->add_option("--corners", rq_args.corners, "u1,v1,...,u4,v4")
      ->delimiter(',')
      ->required();
  rq_sub->add_option("--fg", rq_args.fg, "fill gray level (default 200)");
  rq_sub->add_option("--bg", rq_args.bg, "background gray level (default 60)");
  rq_sub->add_option("--noise", rq_args.noise, "additive noise std-dev");
  rq_sub->add_option("--shade", rq_args.shade, "horizontal shading ramp");

  try {
    app.parse(argc, const_cast<char**>(argv));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  g.seed_given = seed_opt->count() > 0;

  try {
    g.load();
    if (servo_args.sub->parsed()) return run_servo_cmd(g, servo_args);
    if (annotate_args.sub->parsed()) return run_annotate_cmd(g, annotate_args);
    if (augment_sub->parsed()) return run_augment_cmd(g, augment_args);
    if (split_sub->parsed()) return run_split_cmd(g, split_args);
    if (kfold_sub->parsed()) return run_kfold_cmd(g, kfold_args);
    if (eval_sub->parsed()) return run_eval_cmd(g, eval_args);
    if (arch_sub->parsed()) return run_archcheck_cmd(g, arch_args);
    if (lr_sub->parsed()) return run_lr_cmd(g, lr_args);
    if (rq_sub->parsed()) return run_render_quad_cmd(g, rq_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace cli
}  // namespace servokit
