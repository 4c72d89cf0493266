#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "iso/common/rng.hpp"
#include "iso/geometry/pose.hpp"
#include "iso/geometry/skeleton.hpp"
#include "iso/geometry/transforms.hpp"

namespace iso::synth {

struct AngleRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Generative description of one pose/viewpoint distribution over a skeleton.
///
/// Every non-root joint hangs off its parent at `bone_length[j]` mm along
/// `rest_dir[j]` (canonical standing pose, y up, the subject facing -z).
/// Each joint carries an x/y/z Euler rotation that swings the bones of its
/// children; the sampled angle is uniform in `articulation * range`.
struct DistributionConfig {
  std::string name = "custom";
  std::vector<double> bone_length;
  std::vector<Eigen::Vector3d> rest_dir;
  std::vector<std::array<AngleRange, 3>> angles;
  double articulation = 1.0;
  double scale_lo = 1.0;
  double scale_hi = 1.0;
  double azimuth_lo = 0.0;
  double azimuth_hi = 0.0;
  double elevation_lo = 0.0;
  double elevation_hi = 0.0;
  std::size_t samples = 1000;
  std::uint64_t seed = 0;

  void validate(const geom::SkeletonTopology& topo) const;
  /// key=value lines; stored in dataset headers.
  std::string echo() const;

  /// Human-proportioned table for the default skeleton: upper/lower arm and
  /// leg ratios 1.3, torso ratio 1.0, and mirror-symmetric angle ranges.
  static DistributionConfig standard16();
  /// Near-frontal views with moderate articulation.
  static DistributionConfig desk_shift_source();
  /// All-round views, wider articulation and body scale in [0.9, 1.1].
  static DistributionConfig desk_shift_target();
};

/// Forward kinematics for one sample; root at the origin, mm.
geom::Pose3D sample_pose3d(const DistributionConfig& config, const geom::SkeletonTopology& topo, Rng& rng);

/// Paired view-frame 3D pose and its normalized projection, stored as f32.
struct Sample {
  std::vector<float> pose3d;  ///< J x 3, root-relative mm
  std::vector<float> pose2d;  ///< J x 2, normalized
};

struct Dataset {
  geom::SkeletonTopology topology = geom::SkeletonTopology::default16();
  geom::CameraModel camera;
  std::string config_echo;
  std::vector<Sample> samples;

  int joints() const noexcept { return topology.joints(); }
  std::size_t size() const noexcept { return samples.size(); }
  geom::Pose3D pose3d(std::size_t i) const;
  geom::Pose2D pose2d(std::size_t i) const;
};

/// Record i uses its own generator seeded from (config.seed, i).
Dataset make_dataset(const DistributionConfig& config, const geom::CameraModel& cam,
                     const geom::SkeletonTopology& topo = geom::SkeletonTopology::default16());

/// Normalized 2D of a view-frame pose: normalize2d(project(pose)).
geom::Pose2D observe(const geom::Pose3D& view_pose, const geom::CameraModel& cam, int root);

/// Scale factor taking a normalized 2D pose into the pixel frame (largest bounding-box side = 200 px).
double pixel_scale(const geom::Pose2D& x);
inline constexpr double kPersonPixels = 200.0;

/// Pixel-frame pose plus i.i.d. N(0, sigma) per coordinate (no re-normalization).
geom::Pose2D inject_pixel_noise(const geom::Pose2D& pixels, double sigma, Rng& rng);
/// Noise added in the pixel frame, then re-normalized.
geom::Pose2D add_noise2d(const geom::Pose2D& x, double sigma, Rng& rng, int root = 0);

}  // namespace iso::synth
