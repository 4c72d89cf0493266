#pragma once

#include <Eigen/Core>

namespace iso::geom {

/// J x 3 joint positions in mm, root-relative unless noted.
using Pose3D = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
/// J x 2 image-plane joint positions.
using Pose2D = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

/// Row-major flattening (x0, y0[, z0], x1, ...) used for network inputs and outputs.
template <typename Derived>
Eigen::RowVectorXd flatten(const Eigen::MatrixBase<Derived>& pose) {
  Eigen::RowVectorXd out(pose.size());
  for (Eigen::Index j = 0; j < pose.rows(); ++j)
    for (Eigen::Index c = 0; c < pose.cols(); ++c) out(j * pose.cols() + c) = pose(j, c);
  return out;
}

template <int Cols, typename Scalar>
Eigen::Matrix<double, Eigen::Dynamic, Cols, Eigen::RowMajor> unflatten(const Scalar* data, Eigen::Index joints) {
  Eigen::Matrix<double, Eigen::Dynamic, Cols, Eigen::RowMajor> out(joints, Cols);
  for (Eigen::Index j = 0; j < joints; ++j)
    for (Eigen::Index c = 0; c < Cols; ++c) out(j, c) = static_cast<double>(data[j * Cols + c]);
  return out;
}

}  // namespace iso::geom
