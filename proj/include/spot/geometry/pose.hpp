#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <span>
#include <vector>

namespace spot::geometry {

using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Vec3 = Eigen::Vector3d;

inline constexpr double kRotationTolerance = 1e-6;

// Rigid transform: x_world = rotation * x_local + position (meters).
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 position = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose from_matrix(const Mat4& m);
  // 16 values, row-major homogeneous matrix.
  static Pose from_row_major(std::span<const double> values);

  Mat4 matrix() const;
  std::array<double, 16> to_row_major() const;

  Pose inverse() const;
  Pose operator*(const Pose& rhs) const;
  Vec3 apply(const Vec3& p) const { return rotation * p + position; }
};

// Orthonormality and det=+1 within `tol`.
bool is_rotation(const Mat3& r, double tol = kRotationTolerance);
// Nearest rotation in Frobenius norm (polar factor via SVD).
Mat3 project_to_rotation(const Mat3& r);
// Throws GeometryError if the rotation is outside tolerance; projects near-valid input.
Pose validated(const Pose& pose);

Mat3 rotation_about_axis(const Vec3& axis, double angle_rad);
// Geodesic angle between two rotations, radians.
double rotation_angle_between(const Mat3& a, const Mat3& b);

// Pose of `to` expressed in the frame of `from`: from^-1 * to.
Pose relative_pose(const Pose& from, const Pose& to);

using Rot6 = std::array<double, 6>;

// First two columns of R, column-major: [R00 R10 R20 R01 R11 R21].
Rot6 rot6d_encode(const Mat3& r);
// Gram-Schmidt on the two stored columns; third column is their cross product.
Mat3 rot6d_decode(std::span<const double, 6> r6);
inline Mat3 rot6d_decode(const Rot6& r6) { return rot6d_decode(std::span<const double, 6>(r6)); }

// 10-D action: [dp(3), rot6d(6), gripper width(1)].
struct Waypoint10 {
  Vec3 dp = Vec3::Zero();
  Rot6 r6{1, 0, 0, 0, 1, 0};
  double grip = 0.0;

  static constexpr std::size_t kDim = 10;
  std::array<double, kDim> to_array() const;
  static Waypoint10 from_array(std::span<const double> values);
};

Waypoint10 waypoint_encode(const Pose& relative, double grip);
Pose waypoint_decode(const Waypoint10& w);

using Chunk = std::vector<Waypoint10>;

Mat3 slerp(const Mat3& r0, const Mat3& r1, double u);
Vec3 lerp(const Vec3& p0, const Vec3& p1, double u);

// World poses anchor_i * decode(chunk_i[h]) for every chunk in order, h ascending.
std::vector<Pose> stitch(std::span<const Chunk> chunks, std::span<const Pose> anchors);

}  // namespace spot::geometry
