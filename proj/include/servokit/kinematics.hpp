#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "servokit/config.hpp"
#include "servokit/errors.hpp"

namespace servokit {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;

/// One row of a standard (distal) Denavit-Hartenberg table:
/// A(theta) = Rz(theta + theta_offset) * Tz(d) * Tx(a) * Rx(alpha).
struct DhRow {
  double a = 0.0;             ///< link length [m]
  double alpha = 0.0;         ///< link twist [rad]
  double d = 0.0;             ///< link offset [m]
  double theta_offset = 0.0;  ///< fixed joint-angle offset [rad]
};

using DhTable = std::array<DhRow, 4>;

/// DH parameters of the OpenMANIPULATOR-X: four revolute joints, the last
/// three parallel. Rows 2 and 3 carry the +-atan(128/24) offset of the
/// L-shaped second link.
inline DhTable openmanipulator_x_dh() {
  const double bend = std::atan(128.0 / 24.0);
  return DhTable{{{0.0, std::numbers::pi / 2.0, 0.077, 0.0},
                  {0.13, 0.0, 0.0, bend},
                  {0.124, 0.0, 0.0, -bend},
                  {0.126, 0.0, 0.0, 0.0}}};
}

/// Joint angles and rates [rad, rad/s].
struct JointState {
  Vec4 q = Vec4::Zero();
  Vec4 qdot = Vec4::Zero();
};

/// Orientation + position of a frame.
struct RigidPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  RigidPose compose(const RigidPose& other) const {
    return {rotation * other.rotation,
            rotation * other.translation + translation};
  }

  RigidPose inverse() const {
    const Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  /// Map a point from this frame into the parent frame.
  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  /// Map a parent-frame point into this frame.
  Vec3 apply_inverse(const Vec3& p) const {
    return rotation.transpose() * (p - translation);
  }

  bool is_orthonormal(double tol = 1e-9) const {
    const Mat3 err = rotation.transpose() * rotation - Mat3::Identity();
    return err.cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol;
  }
};

enum class JacobianFrame { world, camera };

/// 6x4 Jacobian, rows ordered translational (1-3) then rotational (4-6)
/// to match twists V = (v, omega). Carries the frame its twist lives in.
struct JacobianMatrix {
  Eigen::Matrix<double, 6, 4> entries = Eigen::Matrix<double, 6, 4>::Zero();
  JacobianFrame frame = JacobianFrame::world;
};

inline Mat3 rot_x(double t) {
  Mat3 m;
  m << 1, 0, 0, 0, std::cos(t), -std::sin(t), 0, std::sin(t), std::cos(t);
  return m;
}

inline Mat3 rot_y(double t) {
  Mat3 m;
  m << std::cos(t), 0, std::sin(t), 0, 1, 0, -std::sin(t), 0, std::cos(t);
  return m;
}

inline Mat3 rot_z(double t) {
  Mat3 m;
  m << std::cos(t), -std::sin(t), 0, std::sin(t), std::cos(t), 0, 0, 0, 1;
  return m;
}

/// Link transform for one DH row at joint angle theta.
inline RigidPose dh_transform(const DhRow& row, double theta) {
  const double th = theta + row.theta_offset;
  const double ct = std::cos(th), st = std::sin(th);
  const double ca = std::cos(row.alpha), sa = std::sin(row.alpha);
  RigidPose pose;
  pose.rotation << ct, -st * ca, st * sa,
                   st, ct * ca, -ct * sa,
                   0.0, sa, ca;
  pose.translation << row.a * ct, row.a * st, row.d;
  return pose;
}

/// Cumulative frames T_0 .. T_4 (base to end-effector).
inline std::array<RigidPose, 5> forward_kinematics(const DhTable& dh,
                                                   const Vec4& q) {
  std::array<RigidPose, 5> frames;
  frames[0] = RigidPose{};
  for (int i = 0; i < 4; ++i)
    frames[i + 1] = frames[i].compose(dh_transform(dh[i], q[i]));
  return frames;
}

/// Camera mount rotation: optical axis (+z of the camera) aligned with the
/// end-effector x axis (the direction the last link extends). Columns are
/// the camera axes expressed in the end-effector frame.
inline Mat3 default_camera_mount() { return rot_y(std::numbers::pi / 2.0); }

/// Camera frame: end-effector frame composed with the fixed mount rotation.
/// The camera origin coincides with the end-effector origin.
inline RigidPose camera_frame(const std::array<RigidPose, 5>& frames,
                              const Mat3& mount = default_camera_mount()) {
  return frames[4].compose(RigidPose{mount, Vec3::Zero()});
}

/// World-frame geometric Jacobian of the end-effector origin; column i is
/// [z_{i-1} x (o_4 - o_{i-1}); z_{i-1}] for the revolute joints.
inline JacobianMatrix geometric_jacobian(const DhTable& dh, const Vec4& q) {
  const auto frames = forward_kinematics(dh, q);
  const Vec3 tip = frames[4].translation;
  JacobianMatrix jac;
  for (int i = 0; i < 4; ++i) {
    const Vec3 axis = frames[i].rotation.col(2);
    const Vec3 origin = frames[i].translation;
    jac.entries.block<3, 1>(0, i) = axis.cross(tip - origin);
    jac.entries.block<3, 1>(3, i) = axis;
  }
  jac.frame = JacobianFrame::world;
  return jac;
}

/// Re-express a world-frame Jacobian in the camera frame:
/// blkdiag(R, R) * J with R the world-to-camera rotation, i.e. the
/// transpose of the camera rotation in the world frame.
inline JacobianMatrix map_to_camera_frame(const JacobianMatrix& world_jacobian,
                                          const RigidPose& camera_pose) {
  if (world_jacobian.frame != JacobianFrame::world)
    throw ContractError("map_to_camera_frame: Jacobian is not world-tagged");
  const Mat3 world_to_camera = camera_pose.rotation.transpose();
  JacobianMatrix out;
  out.entries.topRows<3>() = world_to_camera * world_jacobian.entries.topRows<3>();
  out.entries.bottomRows<3>() =
      world_to_camera * world_jacobian.entries.bottomRows<3>();
  out.frame = JacobianFrame::camera;
  return out;
}

constexpr double kDefaultDamping = 1e-3;
constexpr double kDefaultRateClamp = std::numbers::pi;

/**
 * Damped-least-squares twist inversion:
 *   qdot = (J^T J + damping^2 I)^-1 J^T V
 * clamped elementwise to +-rate_clamp. The 6x4 Jacobian of a 4-DOF arm has
 * no inverse, so the commanded twist is realized in the least-squares sense.
 * Throws SingularityError when damping is zero and J is rank deficient.
 */
inline Vec4 resolve_joint_rates(const JacobianMatrix& jacobian, const Vec6& twist,
                                double damping,
                                double rate_clamp = kDefaultRateClamp) {
  if (damping < 0.0)
    throw ContractError("resolve_joint_rates: damping must be >= 0");
  const auto& jac = jacobian.entries;
  Eigen::Matrix4d normal = jac.transpose() * jac;
  normal.diagonal().array() += damping * damping;
  Vec4 qdot;
  if (damping == 0.0) {
    const Eigen::FullPivLU<Eigen::Matrix4d> lu(normal);
    if (!lu.isInvertible())
      throw SingularityError(
          "resolve_joint_rates: rank-deficient Jacobian with zero damping");
    qdot = lu.solve(jac.transpose() * twist);
  } else {
    qdot = normal.ldlt().solve(jac.transpose() * twist);
  }
  return qdot.cwiseMax(-rate_clamp).cwiseMin(rate_clamp);
}

inline const std::set<std::string>& kinematics_config_keys() {
  static const std::set<std::string> keys = [] {
    std::set<std::string> k;
    for (int i = 1; i <= 4; ++i) {
      const std::string prefix = "link" + std::to_string(i);
      k.insert(prefix + ".a");
      k.insert(prefix + ".alpha");
      k.insert(prefix + ".d");
      k.insert(prefix + ".theta0");
    }
    k.insert("limits.rate_clamp");
    k.insert("mount.rpy");
    return k;
  }();
  return keys;
}

/// DH table from `link<i>.a/.alpha/.d/.theta0` keys; defaults are the
/// OpenMANIPULATOR-X values.
inline DhTable dh_from_config(const KeyValueConfig& cfg) {
  DhTable table = openmanipulator_x_dh();
  for (int i = 0; i < 4; ++i) {
    const std::string prefix = "link" + std::to_string(i + 1);
    table[i].a = cfg.get_double(prefix + ".a", table[i].a);
    table[i].alpha = cfg.get_double(prefix + ".alpha", table[i].alpha);
    table[i].d = cfg.get_double(prefix + ".d", table[i].d);
    table[i].theta_offset = cfg.get_double(prefix + ".theta0", table[i].theta_offset);
  }
  return table;
}

/// Mount rotation from `mount.rpy` (roll,pitch,yaw; Rz(y)*Ry(p)*Rx(r)).
inline Mat3 mount_from_config(const KeyValueConfig& cfg) {
  if (!cfg.has("mount.rpy")) return default_camera_mount();
  const auto rpy = cfg.get_vector<3>({0.0, 0.0, 0.0}, "mount.rpy");
  return rot_z(rpy[2]) * rot_y(rpy[1]) * rot_x(rpy[0]);
}

}  // namespace servokit
