#pragma once

#include <array>
#include <string_view>

#include <Eigen/Core>

#include "iso/common/rng.hpp"
#include "iso/geometry/pose.hpp"
#include "iso/geometry/skeleton.hpp"

namespace iso::geom {

/// Pinhole camera with the subject's root placed at a fixed depth.
struct CameraModel {
  double focal = 1.0;
  double root_depth = 5500.0;  // mm

  void validate() const;
};

/// Azimuth about the vertical (y) axis, then elevation about the horizontal (x) axis.
struct ViewRotation {
  double azimuth = 0.0;
  double elevation = 0.0;

  /// R = Rx(elevation) * Ry(azimuth)
  Eigen::Matrix3d matrix() const;
};

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kRandomViewMaxElevation = kPi / 9.0;

/// Azimuth ~ U[-pi, pi], elevation ~ U[-pi/9, pi/9].
ViewRotation sample_random_view(Rng& rng);
ViewRotation sample_view(Rng& rng, double az_lo, double az_hi, double el_lo, double el_hi);

/// (u, v) = focal * (x, y) / (z + root_depth), then root-centered.
Pose2D project(const Pose3D& pose, const CameraModel& cam, int root = 0);
/// Uncentered perspective projection.
Pose2D project_raw(const Pose3D& pose, const CameraModel& cam);

Pose3D rotate(const Pose3D& pose, const ViewRotation& r);
Pose3D inverse_rotate(const Pose3D& pose, const ViewRotation& r);

/// Root-centered and scaled so that non-root joints sit at mean distance 1 from the root.
Pose2D normalize2d(const Pose2D& pose, int root = 0);
/// The scale divided out by normalize2d (mean non-root distance after centering).
double normalization_scale(const Pose2D& pose, int root = 0);

/// normalize2d(project(rotate(pose, r), cam))
Pose2D reproject_random(const Pose3D& pose, const ViewRotation& r, const CameraModel& cam, int root = 0);

Pose3D hflip(const Pose3D& pose, const SkeletonTopology& topo);
Pose2D hflip(const Pose2D& pose, const SkeletonTopology& topo);

/// Child minus parent per bone, (J-1) x 3.
Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> bone_vectors(const Pose3D& pose,
                                                                          const SkeletonTopology& topo);

/// Upper-to-lower segment length ratios.
struct LimbRatios {
  static constexpr std::array<std::string_view, 5> kNames = {"arm_L", "arm_R", "leg_L", "leg_R", "torso"};
  std::array<double, 5> values{};

  double arm_l() const { return values[0]; }
  double arm_r() const { return values[1]; }
  double leg_l() const { return values[2]; }
  double leg_r() const { return values[3]; }
  double torso() const { return values[4]; }
};

/// Arms: |shoulder-elbow| / |elbow-wrist|; legs: |hip-knee| / |knee-ankle|;
/// torso: |neck-spine| / |spine-pelvis|. Joints are located by their standard names.
LimbRatios limb_ratios(const Pose3D& pose, const SkeletonTopology& topo);

}  // namespace iso::geom
