#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "iso/geometry/pose.hpp"
#include "iso/geometry/skeleton.hpp"
#include "iso/geometry/transforms.hpp"

namespace iso::eval {

inline constexpr double kPckThreshold = 150.0;  // mm

/// Thresholds averaged by auc(): 5, 10, ..., 150 mm.
std::array<double, 30> auc_thresholds();

/// Per-joint Euclidean distances.
std::vector<double> joint_errors(const geom::Pose3D& pred, const geom::Pose3D& gt);
double mpjpe(const geom::Pose3D& pred, const geom::Pose3D& gt);
/// Percentage of joints with error <= threshold.
double pck(const geom::Pose3D& pred, const geom::Pose3D& gt, double threshold = kPckThreshold);
double auc(const geom::Pose3D& pred, const geom::Pose3D& gt);

enum class Protocol { us, gs, pa };

Protocol parse_protocol(std::string_view s);
std::string_view to_string(Protocol p);

/// pred as compared under the protocol: raw, optimally scaled, or Procrustes aligned.
geom::Pose3D align(const geom::Pose3D& pred, const geom::Pose3D& gt, Protocol p);

struct Metrics {
  double pck = 0.0;
  double auc = 0.0;
  double mpjpe = 0.0;
};

/// Pooled over every joint of every sample.
Metrics evaluate(std::span<const geom::Pose3D> preds, std::span<const geom::Pose3D> gts, Protocol p);

/// PCK restricted to each body part, indexed by geom::Part.
std::array<double, geom::kPartCount> per_part_pck(std::span<const geom::Pose3D> preds,
                                                  std::span<const geom::Pose3D> gts,
                                                  const geom::SkeletonTopology& topo, Protocol p = Protocol::us,
                                                  double threshold = kPckThreshold);

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  /// Values outside [lo, hi) are clamped into the first or last bin.
  std::vector<std::size_t> counts;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t total = 0;

  std::size_t bin_of(double v) const;
};

Histogram make_histogram(std::span<const double> values, std::size_t bins, double lo, double hi);

/// One histogram per geom::LimbRatios entry (arm_L, arm_R, leg_L, leg_R, torso).
struct LimbRatioReport {
  std::array<Histogram, 5> ratios;
};

/// Default bins are centred on multiples of 0.05 so that round ratios never sit on an edge.
LimbRatioReport limb_ratio_report(std::span<const geom::Pose3D> poses, const geom::SkeletonTopology& topo,
                                  std::size_t bins = 40, double lo = 0.475, double hi = 2.475);

struct EvalReport {
  Protocol protocol = Protocol::us;
  Metrics metrics;
  std::optional<double> pa_mpjpe;
  std::optional<std::array<double, geom::kPartCount>> parts;
  std::optional<LimbRatioReport> limbs;
};

/// With `full`, also fills PA-MPJPE, per-part PCK and the limb-ratio report of preds.
EvalReport evaluate_protocol(std::span<const geom::Pose3D> preds, std::span<const geom::Pose3D> gts,
                             Protocol p, const geom::SkeletonTopology& topo, bool full = false);

/// Flattened J x 3 rows to poses.
std::vector<geom::Pose3D> to_poses(const std::vector<std::vector<float>>& rows, int joints);

}  // namespace iso::eval
