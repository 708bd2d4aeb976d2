#include "spot/geometry/pose.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>

#include "spot/common/error.hpp"

namespace spot::geometry {

Pose Pose::from_matrix(const Mat4& m) {
  Pose p;
  p.rotation = m.topLeftCorner<3, 3>();
  p.position = m.topRightCorner<3, 1>();
  return p;
}

Pose Pose::from_row_major(std::span<const double> v) {
  if (v.size() != 16) throw DimensionError("pose matrix needs 16 values, got " + std::to_string(v.size()));
  Mat4 m;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) m(r, c) = v[static_cast<std::size_t>(r * 4 + c)];
  }
  return from_matrix(m);
}

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = position;
  return m;
}

std::array<double, 16> Pose::to_row_major() const {
  const Mat4 m = matrix();
  std::array<double, 16> out{};
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) out[static_cast<std::size_t>(r * 4 + c)] = m(r, c);
  }
  return out;
}

Pose Pose::inverse() const {
  Pose inv;
  inv.rotation = rotation.transpose();
  inv.position = -(inv.rotation * position);
  return inv;
}

Pose Pose::operator*(const Pose& rhs) const {
  Pose out;
  out.rotation = rotation * rhs.rotation;
  out.position = rotation * rhs.position + position;
  return out;
}

bool is_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

Mat3 project_to_rotation(const Mat3& r) {
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0) u.col(2) *= -1.0;
  return u * v.transpose();
}

Pose validated(const Pose& pose) {
  if (!pose.position.allFinite()) throw GeometryError("pose position is not finite");
  if (!is_rotation(pose.rotation)) throw GeometryError("pose rotation is not a valid rotation (tolerance 1e-6)");
  const double err = (pose.rotation.transpose() * pose.rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (err <= 1e-12) return pose;
  Pose out = pose;
  out.rotation = project_to_rotation(pose.rotation);
  return out;
}

Mat3 rotation_about_axis(const Vec3& axis, double angle_rad) {
  return Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  const double c = std::clamp(((a.transpose() * b).trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

Pose relative_pose(const Pose& from, const Pose& to) {
  const Pose a = validated(from);
  const Pose b = validated(to);
  Pose out;
  out.rotation = a.rotation.transpose() * b.rotation;
  out.position = a.rotation.transpose() * (b.position - a.position);
  return out;
}

Rot6 rot6d_encode(const Mat3& r) {
  return {r(0, 0), r(1, 0), r(2, 0), r(0, 1), r(1, 1), r(2, 1)};
}

Mat3 rot6d_decode(std::span<const double, 6> r6) {
  const Vec3 a1(r6[0], r6[1], r6[2]);
  const Vec3 a2(r6[3], r6[4], r6[5]);
  if (!a1.allFinite() || !a2.allFinite()) throw GeometryError("rot6d: non-finite input");
  const double n1 = a1.norm();
  if (n1 <= 1e-8) throw GeometryError("rot6d: first column norm below 1e-8");
  const Vec3 b1 = a1 / n1;
  const Vec3 u2 = a2 - a2.dot(b1) * b1;
  const double n2 = u2.norm();
  if (n2 <= 1e-8) throw GeometryError("rot6d: second column parallel to the first");
  const Vec3 b2 = u2 / n2;
  Mat3 r;
  r.col(0) = b1;
  r.col(1) = b2;
  r.col(2) = b1.cross(b2);
  return r;
}

std::array<double, Waypoint10::kDim> Waypoint10::to_array() const {
  return {dp.x(), dp.y(), dp.z(), r6[0], r6[1], r6[2], r6[3], r6[4], r6[5], grip};
}

Waypoint10 Waypoint10::from_array(std::span<const double> v) {
  if (v.size() != kDim) throw DimensionError("waypoint needs 10 values, got " + std::to_string(v.size()));
  Waypoint10 w;
  w.dp = Vec3(v[0], v[1], v[2]);
  for (std::size_t i = 0; i < 6; ++i) w.r6[i] = v[3 + i];
  w.grip = v[9];
  return w;
}

Waypoint10 waypoint_encode(const Pose& relative, double grip) {
  if (!(grip >= 0.0)) throw ContractError("waypoint_encode: gripper width must be >= 0");
  const Pose rel = validated(relative);
  Waypoint10 w;
  w.dp = rel.position;
  w.r6 = rot6d_encode(rel.rotation);
  w.grip = grip;
  return w;
}

Pose waypoint_decode(const Waypoint10& w) {
  Pose p;
  p.rotation = rot6d_decode(w.r6);
  p.position = w.dp;
  return p;
}

Mat3 slerp(const Mat3& r0, const Mat3& r1, double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw ContractError("slerp: u must lie in [0, 1]");
  if (!is_rotation(r0) || !is_rotation(r1)) throw GeometryError("slerp: inputs must be rotations");
  if (u == 0.0) return r0;
  if (u == 1.0) return r1;
  Eigen::Quaterniond q0(r0);
  Eigen::Quaterniond q1(r1);
  q0.normalize();
  q1.normalize();
  double d = q0.coeffs().dot(q1.coeffs());
  if (d < 0.0) {
    q1.coeffs() = -q1.coeffs();
    d = -d;
  }
  Eigen::Vector4d c;
  if (d > 1.0 - 1e-12) {
    c = (1.0 - u) * q0.coeffs() + u * q1.coeffs();
  } else {
    const double theta = std::acos(std::min(d, 1.0));
    const double s = std::sin(theta);
    c = (std::sin((1.0 - u) * theta) / s) * q0.coeffs() + (std::sin(u * theta) / s) * q1.coeffs();
  }
  Eigen::Quaterniond q;
  q.coeffs() = c.normalized();
  return q.toRotationMatrix();
}

Vec3 lerp(const Vec3& p0, const Vec3& p1, double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw ContractError("lerp: u must lie in [0, 1]");
  return p0 + u * (p1 - p0);
}

std::vector<Pose> stitch(std::span<const Chunk> chunks, std::span<const Pose> anchors) {
  if (chunks.size() != anchors.size()) {
    throw ContractError("stitch: " + std::to_string(chunks.size()) + " chunks but " +
                        std::to_string(anchors.size()) + " anchors");
  }
  std::vector<Pose> out;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    for (const auto& w : chunks[i]) out.push_back(anchors[i] * waypoint_decode(w));
  }
  return out;
}

}  // namespace spot::geometry
