#include "iso/geometry/transforms.hpp"

#include <cmath>

#include "iso/common/error.hpp"

namespace iso::geom {

void CameraModel::validate() const {
  if (!(focal > 0.0)) throw ConfigError("camera: focal must be positive");
  if (!(root_depth > 0.0)) throw ConfigError("camera: root depth must be positive");
}

Eigen::Matrix3d ViewRotation::matrix() const {
  const double ca = std::cos(azimuth), sa = std::sin(azimuth);
  const double ce = std::cos(elevation), se = std::sin(elevation);
  Eigen::Matrix3d ry;
  ry << ca, 0, sa, 0, 1, 0, -sa, 0, ca;
  Eigen::Matrix3d rx;
  rx << 1, 0, 0, 0, ce, -se, 0, se, ce;
  return rx * ry;
}

ViewRotation sample_view(Rng& rng, double az_lo, double az_hi, double el_lo, double el_hi) {
  ViewRotation r;
  r.azimuth = rng.uniform(az_lo, az_hi);
  r.elevation = rng.uniform(el_lo, el_hi);
  return r;
}

ViewRotation sample_random_view(Rng& rng) {
  return sample_view(rng, -kPi, kPi, -kRandomViewMaxElevation, kRandomViewMaxElevation);
}

Pose2D project_raw(const Pose3D& pose, const CameraModel& cam) {
  Pose2D out(pose.rows(), 2);
  for (Eigen::Index j = 0; j < pose.rows(); ++j) {
    const double depth = pose(j, 2) + cam.root_depth;
    if (!(depth > 0.0))
      throw GeometryError("project: joint " + std::to_string(j) + " is behind the camera (depth " +
                          std::to_string(depth) + " mm)");
    out(j, 0) = cam.focal * pose(j, 0) / depth;
    out(j, 1) = cam.focal * pose(j, 1) / depth;
  }
  return out;
}

Pose2D project(const Pose3D& pose, const CameraModel& cam, int root) {
  Pose2D out = project_raw(pose, cam);
  const Eigen::RowVector2d r = out.row(root);
  out.rowwise() -= r;
  return out;
}

Pose3D rotate(const Pose3D& pose, const ViewRotation& r) {
  return pose * r.matrix().transpose();
}

Pose3D inverse_rotate(const Pose3D& pose, const ViewRotation& r) {
  return pose * r.matrix();
}

double normalization_scale(const Pose2D& pose, int root) {
  if (pose.rows() < 2) throw GeometryError("normalize2d: pose needs a non-root joint");
  double total = 0.0;
  for (Eigen::Index j = 0; j < pose.rows(); ++j)
    if (j != root) total += (pose.row(j) - pose.row(root)).norm();
  return total / static_cast<double>(pose.rows() - 1);
}

Pose2D normalize2d(const Pose2D& pose, int root) {
  const double s = normalization_scale(pose, root);
  if (!(s > 1e-12)) throw GeometryError("normalize2d: all joints coincide with the root");
  Pose2D out = pose;
  const Eigen::RowVector2d r = pose.row(root);
  out.rowwise() -= r;
  return out / s;
}

Pose2D reproject_random(const Pose3D& pose, const ViewRotation& r, const CameraModel& cam, int root) {
  return normalize2d(project(rotate(pose, r), cam, root), root);
}

namespace {

template <typename PoseT>
PoseT hflip_impl(const PoseT& pose, const SkeletonTopology& topo) {
  if (pose.rows() != topo.joints()) throw ShapeError("hflip: pose joint count does not match topology");
  PoseT out(pose.rows(), pose.cols());
  for (int j = 0; j < topo.joints(); ++j) {
    out.row(j) = pose.row(topo.mirror(j));
    out(j, 0) = -out(j, 0);
  }
  return out;
}

}  // namespace

Pose3D hflip(const Pose3D& pose, const SkeletonTopology& topo) { return hflip_impl(pose, topo); }
Pose2D hflip(const Pose2D& pose, const SkeletonTopology& topo) { return hflip_impl(pose, topo); }

Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> bone_vectors(const Pose3D& pose,
                                                                          const SkeletonTopology& topo) {
  if (pose.rows() != topo.joints()) throw ShapeError("bone_vectors: pose joint count does not match topology");
  Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> out(static_cast<Eigen::Index>(topo.bones().size()), 3);
  Eigen::Index k = 0;
  for (const auto& [child, parent] : topo.bones()) out.row(k++) = pose.row(child) - pose.row(parent);
  return out;
}

LimbRatios limb_ratios(const Pose3D& pose, const SkeletonTopology& topo) {
  struct Def {
    const char *ua, *ub, *la, *lb;
  };
  static constexpr std::array<Def, 5> defs = {{
      {"l_shoulder", "l_elbow", "l_elbow", "l_wrist"},
      {"r_shoulder", "r_elbow", "r_elbow", "r_wrist"},
      {"l_hip", "l_knee", "l_knee", "l_ankle"},
      {"r_hip", "r_knee", "r_knee", "r_ankle"},
      {"spine", "neck", "pelvis", "spine"},
  }};
  auto joint = [&](const char* name) {
    const int j = topo.index_of(name);
    if (j < 0) throw CompatibilityError(std::string("limb_ratios: topology lacks joint '") + name + "'");
    return j;
  };
  LimbRatios out;
  for (std::size_t i = 0; i < defs.size(); ++i) {
    const double upper = (pose.row(joint(defs[i].ua)) - pose.row(joint(defs[i].ub))).norm();
    const double lower = (pose.row(joint(defs[i].la)) - pose.row(joint(defs[i].lb))).norm();
    if (!(lower > 0.0))
      throw GeometryError("limb_ratios: zero-length lower segment for " + std::string(LimbRatios::kNames[i]));
    out.values[i] = upper / lower;
  }
  return out;
}

}  // namespace iso::geom
