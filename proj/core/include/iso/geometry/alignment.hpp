#pragma once

#include <Eigen/Core>

#include "iso/geometry/pose.hpp"

namespace iso::geom {

struct SimilarityTransform {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::RowVector3d translation = Eigen::RowVector3d::Zero();

  Pose3D apply(const Pose3D& pose) const;
};

/// Least-squares similarity (proper rotation, scale, translation) mapping pred onto gt.
SimilarityTransform procrustes_transform(const Pose3D& pred, const Pose3D& gt);
/// pred after the optimal similarity transform towards gt.
Pose3D procrustes_align(const Pose3D& pred, const Pose3D& gt);

/// s = <pred, gt> / <pred, pred>
double global_scale_factor(const Pose3D& pred, const Pose3D& gt);
Pose3D optimal_global_scale(const Pose3D& pred, const Pose3D& gt);

}  // namespace iso::geom
