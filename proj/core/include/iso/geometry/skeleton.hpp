#pragma once

#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace iso::geom {

/// Body-part groups used for per-part accuracy.
enum class Part : int { hip = 0, spine, shoulder, head, elbow, wrist, knee, ankle };
inline constexpr int kPartCount = 8;
std::string_view part_name(Part p);

/// Joint tree with left/right pairing and part membership.
///
/// Invariants (checked on construction): a single root whose parent is itself,
/// every other joint reaches the root, `mirror` is an involution, and every
/// joint belongs to at most one part (-1 means none).
class SkeletonTopology {
 public:
  SkeletonTopology(std::vector<std::string> names, std::vector<int> parent, std::vector<int> mirror,
                   std::vector<int> part);

  /// 16 joints: pelvis, spine, neck, head and per side hip/knee/ankle/shoulder/elbow/wrist.
  static SkeletonTopology default16();

  int joints() const noexcept { return static_cast<int>(parent_.size()); }
  int root() const noexcept { return root_; }
  int parent(int j) const { return parent_.at(static_cast<std::size_t>(j)); }
  int mirror(int j) const { return mirror_.at(static_cast<std::size_t>(j)); }
  int part_of(int j) const { return part_.at(static_cast<std::size_t>(j)); }
  /// (child, parent) per non-root joint, in joint-index order.
  const std::vector<std::pair<int, int>>& bones() const noexcept { return bones_; }
  std::vector<int> joints_in(Part p) const;
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<int>& parents() const noexcept { return parent_; }
  const std::vector<int>& mirrors() const noexcept { return mirror_; }
  const std::vector<int>& parts() const noexcept { return part_; }
  /// -1 when no joint carries the name.
  int index_of(std::string_view name) const noexcept;

  friend bool operator==(const SkeletonTopology&, const SkeletonTopology&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<int> parent_;
  std::vector<int> mirror_;
  std::vector<int> part_;
  std::vector<std::pair<int, int>> bones_;
  int root_ = 0;
};

}  // namespace iso::geom
