#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <set>
#include <string>

#include "servokit/config.hpp"
#include "servokit/errors.hpp"
#include "servokit/kinematics.hpp"

namespace servokit {

/// Pinhole intrinsics. Focal lengths are in pixels; rho (pixel pitch, m) is
/// carried as metadata only so the pitch is never double-counted.
struct CameraIntrinsics {
  double u0 = 617.930;
  double v0 = 366.566;
  double fu = 686.015;
  double fv = 681.838;
  double rho = 4e-6;
  int width = 1280;
  int height = 720;

  bool valid() const {
    return fu > 0.0 && fv > 0.0 && u0 >= 0.0 && u0 < width && v0 >= 0.0 &&
           v0 < height && width > 0 && height > 0;
  }
};

/// Continuous pixel coordinates.
struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
};

/// 2x6 point-feature interaction matrix; columns ordered
/// (v_x, v_y, v_z, w_x, w_y, w_z).
using InteractionMatrix = Eigen::Matrix<double, 2, 6>;

inline PixelPoint project(const Vec3& point_cam, const CameraIntrinsics& k) {
  if (!(point_cam.z() > 0.0))
    throw BehindCameraError("project: point at or behind the camera plane");
  return {k.u0 + k.fu * point_cam.x() / point_cam.z(),
          k.v0 + k.fv * point_cam.y() / point_cam.z()};
}

/// Camera-frame point at depth Z that projects to p.
inline Vec3 backproject(const PixelPoint& p, double depth,
                        const CameraIntrinsics& k) {
  if (!(depth > 0.0)) throw InvalidDepthError("backproject: depth must be > 0");
  return {(p.u - k.u0) / k.fu * depth, (p.v - k.v0) / k.fv * depth, depth};
}

/**
 * Interaction matrix of a point feature at pixel p and depth Z:
 * with x=(u-u0)/f_u, y=(v-v0)/f_v,
 *
 *   L = diag(f_u, f_v) * [ -1/Z   0    x/Z   xy     -(1+x^2)  y  ]
 *                        [  0   -1/Z   y/Z   1+y^2  -xy      -x  ]
 *
 * so that pdot = L * V for a camera twist V = (v, omega) expressed in the
 * camera frame, the feature point being static in the world.
 */
inline InteractionMatrix interaction_matrix(const PixelPoint& p, double depth,
                                            const CameraIntrinsics& k) {
  if (!(depth > 0.0))
    throw InvalidDepthError("interaction_matrix: depth must be > 0");
  const double x = (p.u - k.u0) / k.fu;
  const double y = (p.v - k.v0) / k.fv;
  InteractionMatrix l;
  l << -1.0 / depth, 0.0, x / depth, x * y, -(1.0 + x * x), y,
      0.0, -1.0 / depth, y / depth, 1.0 + y * y, -x * y, -x;
  l.row(0) *= k.fu;
  l.row(1) *= k.fv;
  return l;
}

inline const std::set<std::string>& camera_config_keys() {
  static const std::set<std::string> keys = {
      "cam.u0", "cam.v0", "cam.fu", "cam.fv",
      "cam.rho", "cam.width", "cam.height"};
  return keys;
}

/// Intrinsics from `cam.*` keys; defaults are the ZED mini parameters.
inline CameraIntrinsics intrinsics_from_config(const KeyValueConfig& cfg) {
  CameraIntrinsics k;
  k.u0 = cfg.get_double("cam.u0", k.u0);
  k.v0 = cfg.get_double("cam.v0", k.v0);
  k.fu = cfg.get_double("cam.fu", k.fu);
  k.fv = cfg.get_double("cam.fv", k.fv);
  k.rho = cfg.get_double("cam.rho", k.rho);
  k.width = static_cast<int>(cfg.get_int("cam.width", k.width));
  k.height = static_cast<int>(cfg.get_int("cam.height", k.height));
  if (!k.valid()) throw ConfigError("camera intrinsics out of range");
  return k;
}

}  // namespace servokit
