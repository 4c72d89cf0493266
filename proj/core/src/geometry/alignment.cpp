#include "iso/geometry/alignment.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include "iso/common/error.hpp"

namespace iso::geom {

Pose3D SimilarityTransform::apply(const Pose3D& pose) const {
  Pose3D out = scale * (pose * rotation.transpose());
  out.rowwise() += translation;
  return out;
}

SimilarityTransform procrustes_transform(const Pose3D& pred, const Pose3D& gt) {
  if (pred.rows() != gt.rows()) throw ShapeError("procrustes: joint counts differ");
  const Eigen::RowVector3d mu_p = pred.colwise().mean();
  const Eigen::RowVector3d mu_g = gt.colwise().mean();
  const Pose3D a = pred.rowwise() - mu_p;
  const Pose3D b = gt.rowwise() - mu_g;
  const double norm_a = a.squaredNorm();
  if (!(norm_a > 1e-24) || !(b.squaredNorm() > 1e-24)) throw GeometryError("procrustes: degenerate pose");

  // Cross-covariance H = A^T B; R = V diag(1, 1, d) U^T with d fixing det(R) = +1.
  const Eigen::Matrix3d h = a.transpose() * b;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Vector3d d(1.0, 1.0, (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0);

  SimilarityTransform t;
  t.rotation = v * d.asDiagonal() * u.transpose();
  t.scale = (svd.singularValues().array() * d.array()).sum() / norm_a;
  t.translation = mu_g - t.scale * (mu_p * t.rotation.transpose());
  return t;
}

Pose3D procrustes_align(const Pose3D& pred, const Pose3D& gt) {
  return procrustes_transform(pred, gt).apply(pred);
}

double global_scale_factor(const Pose3D& pred, const Pose3D& gt) {
  if (pred.rows() != gt.rows()) throw ShapeError("global scale: joint counts differ");
  const double pp = pred.squaredNorm();
  if (!(pp > 0.0)) throw GeometryError("global scale: prediction is identically zero");
  return (pred.array() * gt.array()).sum() / pp;
}

Pose3D optimal_global_scale(const Pose3D& pred, const Pose3D& gt) {
  return global_scale_factor(pred, gt) * pred;
}

}  // namespace iso::geom
