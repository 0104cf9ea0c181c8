#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "servokit/camera.hpp"
#include "servokit/config.hpp"
#include "servokit/csvio.hpp"
#include "servokit/errors.hpp"
#include "servokit/kinematics.hpp"

namespace servokit {

/// Ordered image features with their camera-frame depths.
struct FeatureSet {
  std::vector<PixelPoint> points;
  std::vector<double> depths;

  std::size_t size() const { return points.size(); }
};

/// Camera twist (v, omega) in the camera frame.
struct Twist {
  Vec3 v = Vec3::Zero();
  Vec3 omega = Vec3::Zero();

  Vec6 stacked() const {
    Vec6 out;
    out << v, omega;
    return out;
  }

  static Twist from_stacked(const Vec6& s) {
    return {s.head<3>(), s.tail<3>()};
  }
};

enum class DepthMode { true_depth, constant };

struct ServoConfig {
  double lambda = 1.0;
  double dt = 0.005;
  int iterations = 1500;
  /// Early-stop threshold on the total error norm [px]. Reproduction runs
  /// use the fixed iteration count, so the early stop is off by default.
  double stop_tolerance = 0.5;
  bool early_stop = false;
  double damping = kDefaultDamping;
  double rate_clamp = kDefaultRateClamp;
  DepthMode depth_mode = DepthMode::true_depth;
  double constant_depth = 0.3;  ///< Z* when depth_mode == constant [m]
};

/// Four coplanar world-frame keypoints standing in for the fiducial target.
/// Point order is chosen so the desired-pose projection comes out in
/// canonical TL, TR, BR, BL order.
struct TargetScene {
  std::array<Vec3, 4> points;
  Vec3 plane_point = Vec3::Zero();
  Vec3 plane_normal = Vec3::UnitZ();
};

inline void validate_scene(const TargetScene& scene, double tol = 1e-9) {
  const Vec3 n = scene.plane_normal.normalized();
  for (const auto& p : scene.points)
    if (std::abs(n.dot(p - scene.plane_point)) > tol)
      throw ContractError("target scene points are not coplanar");
}

/// Square target of the given side length on the horizontal plane through
/// `center`. The ordering below projects to TL, TR, BR, BL when viewed by
/// the wrist camera near the default goal configuration.
inline TargetScene make_square_scene(const Vec3& center, double side) {
  if (!(side > 0.0)) throw ContractError("scene side must be > 0");
  const double h = side / 2.0;
  TargetScene scene;
  scene.points = {center + Vec3(-h, -h, 0.0), center + Vec3(-h, h, 0.0),
                  center + Vec3(h, h, 0.0), center + Vec3(h, -h, 0.0)};
  scene.plane_point = center;
  scene.plane_normal = Vec3::UnitZ();
  return scene;
}

inline const Vec3 kDefaultSceneCenter{0.342, 0.0, -0.05};
constexpr double kDefaultSceneSide = 0.05;

inline TargetScene default_target_scene() {
  return make_square_scene(kDefaultSceneCenter, kDefaultSceneSide);
}

/// Goal pose looking down at the default scene; start pose a reachable
/// offset from it.
inline const Vec4 kDefaultQGoal{0.0, 0.7, 0.1, -1.6};
inline const Vec4 kDefaultQStart{0.08, 0.62, 0.2, -1.75};

/// Project the scene through a camera pose (camera-in-world). Depths are
/// the camera-frame z of each point.
inline FeatureSet render_scene_features(const RigidPose& camera_pose,
                                        const TargetScene& scene,
                                        const CameraIntrinsics& k) {
  FeatureSet features;
  features.points.reserve(scene.points.size());
  features.depths.reserve(scene.points.size());
  for (const auto& world_point : scene.points) {
    const Vec3 cam_point = camera_pose.apply_inverse(world_point);
    if (!(cam_point.z() > 0.0))
      throw BehindCameraError("scene point behind camera");
    features.points.push_back(project(cam_point, k));
    features.depths.push_back(cam_point.z());
  }
  return features;
}

/**
 * IBVS control law: V = lambda * L^+ (p* - p) with L the 2Nx6 stack of
 * per-feature interaction matrices. The pseudoinverse is the damped
 * normal-equation solve (L^T L + damping^2 I)^-1 L^T; with zero damping a
 * rank-deficient stack raises SingularityError instead of inverting noise.
 */
inline Twist control_law(const FeatureSet& current, const FeatureSet& desired,
                         const CameraIntrinsics& k, double lambda,
                         double damping = kDefaultDamping) {
  const std::size_t n = current.size();
  if (n == 0 || desired.size() != n || current.depths.size() != n)
    throw ContractError("control_law: feature sets must match and be non-empty");
  Eigen::MatrixXd stack(2 * n, 6);
  Eigen::VectorXd error(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    stack.block<2, 6>(2 * static_cast<int>(i), 0) =
        interaction_matrix(current.points[i], current.depths[i], k);
    error[2 * i] = desired.points[i].u - current.points[i].u;
    error[2 * i + 1] = desired.points[i].v - current.points[i].v;
  }
  Vec6 twist;
  if (static_cast<int>(2 * n) < 6) {
    // Wide stack: the dual damped form L^T (L L^T + mu^2 I)^-1 e is the same
    // operator, but it inverts the small Gram matrix, which is full rank for
    // distinct features. The primal normal matrix would be singular up to
    // the damping term and lose the least-norm component in floating point.
    Eigen::MatrixXd gram = stack * stack.transpose();
    gram.diagonal().array() += damping * damping;
    if (damping == 0.0) {
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
      if (!lu.isInvertible())
        throw SingularityError("control_law: rank-deficient interaction stack");
      twist = stack.transpose() * lu.solve(error);
    } else {
      twist = stack.transpose() * gram.ldlt().solve(error);
    }
  } else {
    Eigen::Matrix<double, 6, 6> normal = stack.transpose() * stack;
    normal.diagonal().array() += damping * damping;
    if (damping == 0.0) {
      const Eigen::FullPivLU<Eigen::Matrix<double, 6, 6>> lu(normal);
      if (!lu.isInvertible())
        throw SingularityError("control_law: rank-deficient interaction stack");
      twist = lu.solve(stack.transpose() * error);
    } else {
      twist = normal.ldlt().solve(stack.transpose() * error);
    }
  }
  return Twist::from_stacked(lambda * twist);
}

struct TraceRow {
  int iter = 0;
  double t = 0.0;
  Vec4 q = Vec4::Zero();
  std::array<PixelPoint, 4> pixels{};
  std::array<double, 4> feature_errors{};
  double total_error = 0.0;
  Twist twist;
};

struct ServoTrace {
  std::vector<TraceRow> rows;
};

/// A feature left the image during a run; carries the trace up to the
/// failing iteration.
class FieldOfViewError : public Error {
 public:
  FieldOfViewError(const std::string& what, ServoTrace partial)
      : Error(what), trace(std::move(partial)) {}
  ServoTrace trace;
};

namespace detail {

inline void check_in_view(const FeatureSet& features, const CameraIntrinsics& k,
                          const ServoTrace& trace) {
  for (const auto& p : features.points)
    if (p.u < 0.0 || p.u >= k.width || p.v < 0.0 || p.v >= k.height)
      throw FieldOfViewError("feature left the image bounds", trace);
}

}  // namespace detail

/**
 * Closed servo loop: render features at the current joint state, apply the
 * control law, re-express the arm Jacobian in the camera frame, resolve
 * joint rates by damped least squares, Euler-integrate. Each trace row
 * records the state before the update, so replaying q reproduces the
 * logged pixels exactly.
 */
inline ServoTrace run_servo_to_features(const ServoConfig& cfg, const DhTable& dh,
                                        const CameraIntrinsics& k,
                                        const TargetScene& scene,
                                        const Vec4& q_start,
                                        const FeatureSet& desired,
                                        const Mat3& mount = default_camera_mount()) {
  if (!(cfg.lambda > 0.0) || !(cfg.dt > 0.0) || cfg.iterations < 1)
    throw ContractError("servo config requires lambda > 0, dt > 0, iterations >= 1");
  if (desired.size() != 4)
    throw ContractError("servo loop expects 4 target features");
  validate_scene(scene);

  ServoTrace trace;
  trace.rows.reserve(static_cast<std::size_t>(cfg.iterations));
  Vec4 q = q_start;
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const auto frames = forward_kinematics(dh, q);
    const RigidPose cam = camera_frame(frames, mount);
    FeatureSet current;
    try {
      current = render_scene_features(cam, scene, k);
    } catch (const BehindCameraError& e) {
      throw FieldOfViewError(e.what(), trace);
    }
    detail::check_in_view(current, k, trace);

    FeatureSet measured = current;
    if (cfg.depth_mode == DepthMode::constant)
      measured.depths.assign(measured.depths.size(), cfg.constant_depth);
    const Twist twist = control_law(measured, desired, k, cfg.lambda, cfg.damping);

    TraceRow row;
    row.iter = iter;
    row.t = iter * cfg.dt;
    row.q = q;
    double sq_total = 0.0;
    for (int i = 0; i < 4; ++i) {
      row.pixels[i] = current.points[i];
      const double du = desired.points[i].u - current.points[i].u;
      const double dv = desired.points[i].v - current.points[i].v;
      row.feature_errors[i] = std::hypot(du, dv);
      sq_total += du * du + dv * dv;
    }
    row.total_error = std::sqrt(sq_total);
    row.twist = twist;
    trace.rows.push_back(row);

    if (cfg.early_stop && row.total_error < cfg.stop_tolerance) break;

    const JacobianMatrix jac_cam =
        map_to_camera_frame(geometric_jacobian(dh, q), cam);
    const Vec4 qdot =
        resolve_joint_rates(jac_cam, twist.stacked(), cfg.damping, cfg.rate_clamp);
    q += qdot * cfg.dt;
  }
  return trace;
}

/// Variant with the desired features rendered at a goal joint configuration.
inline ServoTrace run_servo(const ServoConfig& cfg, const DhTable& dh,
                            const CameraIntrinsics& k, const TargetScene& scene,
                            const Vec4& q_start, const Vec4& q_goal,
                            const Mat3& mount = default_camera_mount()) {
  const auto goal_frames = forward_kinematics(dh, q_goal);
  const FeatureSet desired =
      render_scene_features(camera_frame(goal_frames, mount), scene, k);
  return run_servo_to_features(cfg, dh, k, scene, q_start, desired, mount);
}

inline const char* kTraceCsvHeader =
    "iter,t,q1,q2,q3,q4,u1,v1,u2,v2,u3,v3,u4,v4,e1,e2,e3,e4,e_total,"
    "vx,vy,vz,wx,wy,wz";

inline std::string trace_to_csv(const ServoTrace& trace) {
  std::string out(kTraceCsvHeader);
  out += '\n';
  for (const auto& row : trace.rows) {
    out += format_int(row.iter);
    out += ',';
    out += format_double(row.t);
    for (int i = 0; i < 4; ++i) {
      out += ',';
      out += format_double(row.q[i]);
    }
    for (int i = 0; i < 4; ++i) {
      out += ',';
      out += format_double(row.pixels[i].u);
      out += ',';
      out += format_double(row.pixels[i].v);
    }
    for (int i = 0; i < 4; ++i) {
      out += ',';
      out += format_double(row.feature_errors[i]);
    }
    out += ',';
    out += format_double(row.total_error);
    const Vec6 v = row.twist.stacked();
    for (int i = 0; i < 6; ++i) {
      out += ',';
      out += format_double(v[i]);
    }
    out += '\n';
  }
  return out;
}

/// Desired-feature CSV: header `u1,v1,...,u4,v4`, one data row.
inline FeatureSet desired_features_from_csv(const std::string& path,
                                            double default_depth) {
  const auto lines = read_text_lines(path);
  if (lines.size() < 2) throw IoError("desired-feature CSV needs a data row: " + path);
  const auto header = split_csv_line(lines[0]);
  const std::vector<std::string> expect = {"u1", "v1", "u2", "v2",
                                           "u3", "v3", "u4", "v4"};
  if (std::vector<std::string>(header.begin(), header.end()) != expect)
    throw IoError("bad desired-feature header in " + path);
  const auto fields = split_csv_line(lines[1]);
  if (fields.size() != 8) throw IoError("bad desired-feature row in " + path);
  FeatureSet desired;
  for (int i = 0; i < 4; ++i) {
    desired.points.push_back({csv_double(fields[2 * i], path),
                              csv_double(fields[2 * i + 1], path)});
    desired.depths.push_back(default_depth);
  }
  return desired;
}

inline const std::set<std::string>& servo_config_keys() {
  static const std::set<std::string> keys = {
      "servo.lambda",      "servo.dt",          "servo.iterations",
      "servo.stop_tolerance", "servo.early_stop", "servo.damping",
      "servo.depth_mode",  "servo.zstar",       "servo.q_start",
      "servo.q_goal",      "scene.center",      "scene.side"};
  return keys;
}

inline ServoConfig servo_from_config(const KeyValueConfig& cfg) {
  ServoConfig sc;
  sc.lambda = cfg.get_double("servo.lambda", sc.lambda);
  sc.dt = cfg.get_double("servo.dt", sc.dt);
  sc.iterations = static_cast<int>(cfg.get_int("servo.iterations", sc.iterations));
  sc.stop_tolerance = cfg.get_double("servo.stop_tolerance", sc.stop_tolerance);
  sc.early_stop = cfg.get_bool("servo.early_stop", sc.early_stop);
  sc.damping = cfg.get_double("servo.damping", sc.damping);
  sc.rate_clamp = cfg.get_double("limits.rate_clamp", sc.rate_clamp);
  if (cfg.has("servo.depth_mode")) {
    const std::string mode = cfg.get_string("servo.depth_mode", "true");
    if (mode == "true")
      sc.depth_mode = DepthMode::true_depth;
    else if (mode == "constant")
      sc.depth_mode = DepthMode::constant;
    else
      throw ConfigError("servo.depth_mode must be 'true' or 'constant'");
  }
  sc.constant_depth = cfg.get_double("servo.zstar", sc.constant_depth);
  if (!(sc.lambda > 0.0) || !(sc.dt > 0.0) || sc.iterations < 1)
    throw ConfigError("servo config requires lambda > 0, dt > 0, iterations >= 1");
  return sc;
}

inline TargetScene scene_from_config(const KeyValueConfig& cfg) {
  const auto center = cfg.get_vector<3>(
      {kDefaultSceneCenter.x(), kDefaultSceneCenter.y(), kDefaultSceneCenter.z()},
      "scene.center");
  const double side = cfg.get_double("scene.side", kDefaultSceneSide);
  return make_square_scene(Vec3(center[0], center[1], center[2]), side);
}

}  // namespace servokit
