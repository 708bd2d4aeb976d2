#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support/random_geometry.hpp"
#include "spot/common/error.hpp"
#include "spot/geometry/pose.hpp"

namespace {

using namespace spot::geometry;
using spot::testing::max_abs_diff;
using spot::testing::random_pose;
using spot::testing::random_rotation;

const Vec3 kZ(0, 0, 1);

TEST(RelativePose, SelfIsIdentity) {
  std::mt19937_64 rng(1);
  const Pose t = random_pose(rng);
  const Pose d = relative_pose(t, t);
  EXPECT_LT((d.rotation - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(d.position.norm(), 1e-12);
}

TEST(RelativePose, FromIdentityReturnsTarget) {
  std::mt19937_64 rng(2);
  const Pose target = random_pose(rng);
  const Pose d = relative_pose(Pose::identity(), target);
  EXPECT_EQ(d.rotation, target.rotation);
  EXPECT_EQ(d.position, target.position);
}

TEST(RelativePose, CompositionRecoversSecondArgument) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const Pose a = random_pose(rng, 2.0), b = random_pose(rng, 2.0);
    EXPECT_LE(max_abs_diff(a * relative_pose(a, b), b), 1e-12);
  }
}

TEST(RelativePose, RejectsInvalidRotation) {
  Pose bad;
  bad.rotation(0, 0) = 1.1;
  EXPECT_THROW(relative_pose(bad, Pose::identity()), spot::GeometryError);
}

TEST(Validated, ProjectsNearValidRotation) {
  Pose p;
  p.rotation = rotation_about_axis(kZ, 0.3);
  p.rotation(0, 1) += 5e-7;
  const Pose v = validated(p);
  EXPECT_TRUE(is_rotation(v.rotation, 1e-12));
}

TEST(Rot6d, KnownEncodings) {
  EXPECT_EQ(rot6d_encode(Mat3::Identity()), (Rot6{1, 0, 0, 0, 1, 0}));
  const Rot6 r = rot6d_encode(rotation_about_axis(kZ, std::numbers::pi / 2));
  const Rot6 expected{0, 1, 0, -1, 0, 0};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(r[i], expected[i], 1e-15);
}

TEST(Rot6d, DecodeNormalisesAndOrthogonalises) {
  EXPECT_EQ(rot6d_decode(Rot6{1, 0, 0, 0, 1, 0}), Mat3::Identity());
  EXPECT_LT((rot6d_decode(Rot6{2, 0, 0, 1, 1, 0}) - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Rot6d, DegenerateInputsThrow) {
  EXPECT_THROW(rot6d_decode(Rot6{0, 0, 0, 0, 1, 0}), spot::GeometryError);
  EXPECT_THROW(rot6d_decode(Rot6{1, 0, 0, 2, 0, 0}), spot::GeometryError);
}

TEST(Rot6d, RoundTripAndOrthonormalOutput) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 0.2);
  for (int i = 0; i < 1000; ++i) {
    const Mat3 r = random_rotation(rng);
    EXPECT_LE((rot6d_decode(rot6d_encode(r)) - r).cwiseAbs().maxCoeff(), 1e-9);
    const Rot6 code = rot6d_encode(r);
    EXPECT_LE(std::abs(code[0] - rot6d_encode(rot6d_decode(code))[0]), 1e-9);
    Rot6 perturbed = code;
    for (auto& v : perturbed) v += noise(rng);
    const Mat3 d = rot6d_decode(perturbed);
    EXPECT_LE((d.transpose() * d - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(d.determinant(), 1.0, 1e-12);
  }
}

TEST(Waypoint, IdentityEncoding) {
  const auto a = waypoint_encode(Pose::identity(), 0.0).to_array();
  EXPECT_EQ(a, (std::array<double, 10>{0, 0, 0, 1, 0, 0, 0, 1, 0, 0}));
}

TEST(Waypoint, TranslationOnlyKeepsIdentityCode) {
  Pose p;
  p.position = Vec3(0.1, -0.2, 0.3);
  const auto w = waypoint_encode(p, 0.04);
  EXPECT_EQ(w.r6, (Rot6{1, 0, 0, 0, 1, 0}));
  EXPECT_EQ(w.dp, p.position);
}

TEST(Waypoint, NegativeGripIsContractError) {
  EXPECT_THROW(waypoint_encode(Pose::identity(), -0.01), spot::ContractError);
}

TEST(Waypoint, RoundTrip) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    const Pose p = random_pose(rng);
    const auto w = waypoint_encode(p, 0.05);
    const auto w2 = Waypoint10::from_array(w.to_array());
    EXPECT_LE(max_abs_diff(waypoint_decode(w2), p), 1e-9);
    EXPECT_EQ(w2.grip, 0.05);
  }
}

TEST(Slerp, EndpointsExact) {
  std::mt19937_64 rng(6);
  const Mat3 a = random_rotation(rng), b = random_rotation(rng);
  EXPECT_EQ(slerp(a, b, 0.0), a);
  EXPECT_EQ(slerp(a, b, 1.0), b);
  EXPECT_THROW(slerp(a, b, 1.5), spot::ContractError);
  EXPECT_THROW(lerp(Vec3::Zero(), Vec3::Ones(), -0.1), spot::ContractError);
}

TEST(Slerp, MidpointOfQuarterTurn) {
  const Mat3 mid = slerp(Mat3::Identity(), rotation_about_axis(kZ, std::numbers::pi / 2), 0.5);
  EXPECT_LE((mid - rotation_about_axis(kZ, std::numbers::pi / 4)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Slerp, TakesShorterArc) {
  // 270 degrees about z is -90 the short way; the midpoint is -45.
  const Mat3 mid = slerp(Mat3::Identity(), rotation_about_axis(kZ, 1.5 * std::numbers::pi), 0.5);
  EXPECT_LE((mid - rotation_about_axis(kZ, -std::numbers::pi / 4)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Slerp, AntipodalQuaternionSignsGiveSameRotation) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    Eigen::Quaterniond q0(random_rotation(rng)), q1(random_rotation(rng));
    Eigen::Quaterniond q1n(-q1.w(), -q1.x(), -q1.y(), -q1.z());
    const Mat3 a = slerp(q0.toRotationMatrix(), q1.toRotationMatrix(), 0.3);
    const Mat3 b = slerp(q0.toRotationMatrix(), q1n.toRotationMatrix(), 0.3);
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Slerp, ReversedEndpointsSymmetric) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> uu(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const Mat3 a = random_rotation(rng), b = random_rotation(rng);
    const double u = uu(rng);
    EXPECT_LE((slerp(a, b, u) - slerp(b, a, 1.0 - u)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Slerp, ConstantAngularVelocity) {
  std::mt19937_64 rng(9);
  const Mat3 a = random_rotation(rng), b = random_rotation(rng);
  const double total = rotation_angle_between(a, b);
  for (double u : {0.1, 0.25, 0.5, 0.8}) {
    EXPECT_NEAR(rotation_angle_between(a, slerp(a, b, u)), u * total, 1e-9);
  }
}

TEST(Stitch, SingleChunkIdentityAnchor) {
  std::mt19937_64 rng(10);
  Chunk chunk;
  std::vector<Pose> rel;
  for (int h = 0; h < 16; ++h) {
    rel.push_back(random_pose(rng));
    chunk.push_back(waypoint_encode(rel.back(), 0.02));
  }
  const std::vector<Chunk> chunks{chunk};
  const std::vector<Pose> anchors{Pose::identity()};
  const auto world = stitch(chunks, anchors);
  ASSERT_EQ(world.size(), 16u);
  for (int h = 0; h < 16; ++h) EXPECT_LE(max_abs_diff(world[h], rel[h]), 1e-12);
}

TEST(Stitch, GroundTruthChunksReproduceTrajectory) {
  std::mt19937_64 rng(11);
  const int H = 16;
  for (int ep = 0; ep < 100; ++ep) {
    std::vector<Pose> traj{random_pose(rng)};
    for (int i = 1; i <= 4 * H; ++i) {
      Pose step;
      step.rotation = rotation_about_axis(Vec3(0.3, -0.2, 1.0), 0.05);
      step.position = Vec3(0.01, 0.0, -0.005);
      traj.push_back(traj.back() * step);
    }
    std::vector<Chunk> chunks;
    std::vector<Pose> anchors;
    for (int t = 0; t + H < static_cast<int>(traj.size()); t += H) {
      Chunk c;
      for (int h = 1; h <= H; ++h) c.push_back(waypoint_encode(relative_pose(traj[t], traj[t + h]), 0.03));
      chunks.push_back(c);
      anchors.push_back(traj[t]);
    }
    const auto world = stitch(chunks, anchors);
    ASSERT_EQ(world.size(), traj.size() - 1);
    for (std::size_t i = 0; i < world.size(); ++i) {
      EXPECT_LE(max_abs_diff(world[i], traj[i + 1]), 1e-9);
      EXPECT_LE((world[i].position - traj[i + 1].position).norm(), 1e-9);
    }
  }
}

TEST(Stitch, CountMismatchThrows) {
  const std::vector<Chunk> chunks(2);
  const std::vector<Pose> anchors(1);
  EXPECT_THROW(stitch(chunks, anchors), spot::ContractError);
}

}  // namespace
