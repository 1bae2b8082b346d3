#pragma once

#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

// Frame conventions
//   world:  fixed ENU-style frame, z up.
//   body:   vehicle frame, x forward, y left, z up. Pose6D maps body -> world.
//   camera: x right, y down, z forward (optical axis). Mounted at a fixed
//           body_from_camera transform, by default at the body origin.

namespace monoloc {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

/// Minimal pose increment: (dt [m], dtheta [rad, axis-angle]).
using PoseIncrement = Vector6d;

/// Points at or closer than this depth (camera z, meters) are culled.
inline constexpr double kMinDepth = 0.1;

struct Pose6D {
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();

  static Pose6D identity() { return {}; }
  static Pose6D from_translation(double x, double y, double z);
  /// Yaw about z, then pitch about y, then roll about x (radians).
  static Pose6D from_xyz_ypr(const Eigen::Vector3d& t, double yaw, double pitch, double roll);

  Eigen::Matrix3d rotation_matrix() const { return rotation.toRotationMatrix(); }
  Eigen::Vector3d transform(const Eigen::Vector3d& x) const { return rotation * x + translation; }
};

Pose6D compose(const Pose6D& a, const Pose6D& b);
Pose6D inverse(const Pose6D& p);

/// Right-multiplicative update p ∘ Exp(delta). Exp(delta) is the pose with
/// translation dt and rotation exp(dtheta).
Pose6D boxplus(const Pose6D& p, const PoseIncrement& delta);
/// Inverse of boxplus: Log(b⁻¹ ∘ a), so boxplus(b, boxminus(a, b)) == a.
PoseIncrement boxminus(const Pose6D& a, const Pose6D& b);

/// Rotation angle of p, radians in [0, π].
double rotation_angle(const Pose6D& p);

Eigen::Matrix3d skew(const Eigen::Vector3d& v);
Eigen::Quaterniond so3_exp(const Eigen::Vector3d& v);
Eigen::Vector3d so3_log(const Eigen::Quaterniond& q);
/// Jr⁻¹(φ): Log(Exp(φ) Exp(δ)) ≈ φ + Jr⁻¹(φ) δ.
Eigen::Matrix3d so3_right_jacobian_inverse(const Eigen::Vector3d& phi);

/// Yaw, pitch, roll (radians) of a rotation, ZYX convention.
Eigen::Vector3d yaw_pitch_roll(const Eigen::Quaterniond& q);

struct CameraIntrinsics {
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  int width = 0, height = 0;

  /// Throws InvariantViolation when focal lengths or principal point are out of range.
  void validate() const;
  double diagonal() const;
};

/// Pinhole projection. nullopt when the point is at or behind the near plane (BehindCamera).
std::optional<Eigen::Vector2d> project(const CameraIntrinsics& cam, const Eigen::Vector3d& x_cam);
std::optional<Eigen::Matrix<double, 2, 3>> project_jacobian(const CameraIntrinsics& cam,
                                                            const Eigen::Vector3d& x_cam);

bool in_image(const CameraIntrinsics& cam, const Eigen::Vector2d& uv);

/// Camera rig: intrinsics plus the fixed mount on the vehicle body.
struct Camera {
  CameraIntrinsics intrinsics;
  Pose6D body_from_camera = default_mount();

  /// Camera axes (right, down, forward) aligned with body (-y, -z, x), no offset.
  static Pose6D default_mount();

  Eigen::Vector3d to_camera(const Pose6D& body_pose, const Eigen::Vector3d& x_world) const;
  /// d(to_camera)/d(increment) for a right increment of body_pose.
  Eigen::Matrix<double, 3, 6> to_camera_jacobian(const Pose6D& body_pose,
                                                 const Eigen::Vector3d& x_world) const;
  std::optional<Eigen::Vector2d> project_world(const Pose6D& body_pose,
                                               const Eigen::Vector3d& x_world) const;
};

}  // namespace monoloc
