#pragma once

// Tape ops for the lift -> rotate -> project pipeline. Rows are flattened poses:
// B x 3J for 3D, B x 2J for 2D.

#include <span>

#include <Eigen/Core>

#include "iso/autodiff/ops.hpp"
#include "iso/geometry/skeleton.hpp"
#include "iso/geometry/transforms.hpp"

namespace iso::geom {

/// Row b rotated by rotations[b] about the origin.
template <typename T>
ad::Var<T> rotate_rows(ad::Var<T> poses, std::span<const Eigen::Matrix3d> rotations);

/// Perspective projection of every joint, then root-centered. With depth_floor = 0 a joint at or
/// behind the camera throws. With depth_floor > 0 depths are clamped to depth_floor * root_depth
/// and clamped joints pass no depth gradient.
template <typename T>
ad::Var<T> project_rows(ad::Var<T> poses, const CameraModel& cam, int root = 0, double depth_floor = 0.0);

/// Per-row normalize2d.
template <typename T>
ad::Var<T> normalize2d_rows(ad::Var<T> poses, int root = 0);

/// normalize2d_rows(project_rows(rotate_rows(X)))
template <typename T>
ad::Var<T> reproject_rows(ad::Var<T> poses, std::span<const Eigen::Matrix3d> rotations,
                          const CameraModel& cam, int root = 0, double depth_floor = 0.0);

/// Constant matrix M (3J x 3(J-1)) with flatten(bone_vectors(X)) = flatten(X) * M.
template <typename T>
ad::Tensor<T> bone_matrix(const SkeletonTopology& topo);

/// Flip every row of a B x (D*J) batch; D is 2 or 3.
template <typename T>
ad::Tensor<T> hflip_rows(const ad::Tensor<T>& poses, const SkeletonTopology& topo, int dims);

}  // namespace iso::geom
