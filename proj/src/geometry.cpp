#include "monoloc/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "monoloc/errors.hpp"

namespace monoloc {

Pose6D Pose6D::from_translation(double x, double y, double z) {
  Pose6D p;
  p.translation = {x, y, z};
  return p;
}

Pose6D Pose6D::from_xyz_ypr(const Eigen::Vector3d& t, double yaw, double pitch, double roll) {
  Pose6D p;
  p.translation = t;
  p.rotation = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
               Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
               Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX());
  p.rotation.normalize();
  return p;
}

Pose6D compose(const Pose6D& a, const Pose6D& b) {
  Pose6D out;
  out.translation = a.rotation * b.translation + a.translation;
  out.rotation = (a.rotation * b.rotation).normalized();
  return out;
}

Pose6D inverse(const Pose6D& p) {
  Pose6D out;
  out.rotation = p.rotation.conjugate().normalized();
  out.translation = -(out.rotation * p.translation);
  return out;
}

Pose6D boxplus(const Pose6D& p, const PoseIncrement& delta) {
  Pose6D step;
  step.translation = delta.head<3>();
  step.rotation = so3_exp(delta.tail<3>());
  return compose(p, step);
}

PoseIncrement boxminus(const Pose6D& a, const Pose6D& b) {
  const Pose6D rel = compose(inverse(b), a);
  PoseIncrement d;
  d.head<3>() = rel.translation;
  d.tail<3>() = so3_log(rel.rotation);
  return d;
}

double rotation_angle(const Pose6D& p) { return so3_log(p.rotation).norm(); }

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0, -v.z(), v.y(),
       v.z(), 0, -v.x(),
       -v.y(), v.x(), 0;
  return m;
}

Eigen::Quaterniond so3_exp(const Eigen::Vector3d& v) {
  const double theta2 = v.squaredNorm();
  const double theta = std::sqrt(theta2);
  double w, k;
  if (theta < 1e-8) {
    w = 1.0 - theta2 / 8.0;
    k = 0.5 - theta2 / 48.0;
  } else {
    w = std::cos(0.5 * theta);
    k = std::sin(0.5 * theta) / theta;
  }
  Eigen::Quaterniond q(w, k * v.x(), k * v.y(), k * v.z());
  return q.normalized();
}

Eigen::Vector3d so3_log(const Eigen::Quaterniond& q_in) {
  Eigen::Quaterniond q = q_in.normalized();
  if (q.w() < 0) q.coeffs() = -q.coeffs();
  const Eigen::Vector3d vec = q.vec();
  const double n = vec.norm();
  const double w = q.w();
  double scale;
  if (n < 1e-8) {
    // 2 atan2(n, w) / n expanded around n = 0
    scale = 2.0 / w - 2.0 * n * n / (3.0 * w * w * w);
  } else {
    scale = 2.0 * std::atan2(n, w) / n;
  }
  return scale * vec;
}

Eigen::Matrix3d so3_right_jacobian_inverse(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d k = skew(phi);
  double c;
  if (theta < 1e-5) {
    c = 1.0 / 12.0 + theta * theta / 720.0;
  } else {
    c = 1.0 / (theta * theta) - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  return Eigen::Matrix3d::Identity() + 0.5 * k + c * k * k;
}

Eigen::Vector3d yaw_pitch_roll(const Eigen::Quaterniond& q) {
  const Eigen::Matrix3d r = q.normalized().toRotationMatrix();
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  return {yaw, pitch, roll};
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0) || !(fy > 0)) throw InvariantViolation("camera focal lengths must be positive");
  if (width <= 0 || height <= 0) throw InvariantViolation("camera image size must be positive");
  if (!(cx >= 0 && cx < width) || !(cy >= 0 && cy < height))
    throw InvariantViolation("camera principal point outside the image");
}

double CameraIntrinsics::diagonal() const { return std::hypot(double(width), double(height)); }

std::optional<Eigen::Vector2d> project(const CameraIntrinsics& cam, const Eigen::Vector3d& x) {
  if (!(x.z() > kMinDepth)) return std::nullopt;
  return Eigen::Vector2d(cam.fx * x.x() / x.z() + cam.cx, cam.fy * x.y() / x.z() + cam.cy);
}

std::optional<Eigen::Matrix<double, 2, 3>> project_jacobian(const CameraIntrinsics& cam,
                                                            const Eigen::Vector3d& x) {
  if (!(x.z() > kMinDepth)) return std::nullopt;
  const double iz = 1.0 / x.z();
  Eigen::Matrix<double, 2, 3> j;
  j << cam.fx * iz, 0.0, -cam.fx * x.x() * iz * iz,
       0.0, cam.fy * iz, -cam.fy * x.y() * iz * iz;
  return j;
}

bool in_image(const CameraIntrinsics& cam, const Eigen::Vector2d& uv) {
  return uv.x() >= 0.0 && uv.y() >= 0.0 && uv.x() <= cam.width - 1.0 &&
         uv.y() <= cam.height - 1.0;
}

Pose6D Camera::default_mount() {
  Pose6D m;
  Eigen::Matrix3d r;
  // columns: camera x, y, z expressed in body axes
  r << 0, 0, 1,
      -1, 0, 0,
       0, -1, 0;
  m.rotation = Eigen::Quaterniond(r).normalized();
  return m;
}

Eigen::Vector3d Camera::to_camera(const Pose6D& body_pose, const Eigen::Vector3d& x_world) const {
  const Eigen::Vector3d x_body = body_pose.rotation.conjugate() * (x_world - body_pose.translation);
  return body_from_camera.rotation.conjugate() * (x_body - body_from_camera.translation);
}

Eigen::Matrix<double, 3, 6> Camera::to_camera_jacobian(const Pose6D& body_pose,
                                                       const Eigen::Vector3d& x_world) const {
  const Eigen::Vector3d x_body = body_pose.rotation.conjugate() * (x_world - body_pose.translation);
  Eigen::Matrix<double, 3, 6> d_body;
  d_body.leftCols<3>() = -Eigen::Matrix3d::Identity();
  d_body.rightCols<3>() = skew(x_body);
  return body_from_camera.rotation.conjugate().toRotationMatrix() * d_body;
}

std::optional<Eigen::Vector2d> Camera::project_world(const Pose6D& body_pose,
                                                     const Eigen::Vector3d& x_world) const {
  return project(intrinsics, to_camera(body_pose, x_world));
}

}  // namespace monoloc
