#include "iso/geometry/skeleton.hpp"

#include "iso/common/error.hpp"

namespace iso::geom {

std::string_view part_name(Part p) {
  static constexpr std::array<std::string_view, kPartCount> names = {
      "Hip", "Spine", "Shoulder", "Head", "Elbow", "Wrist", "Knee", "Ankle"};
  return names.at(static_cast<std::size_t>(p));
}

SkeletonTopology::SkeletonTopology(std::vector<std::string> names, std::vector<int> parent,
                                   std::vector<int> mirror, std::vector<int> part)
    : names_(std::move(names)), parent_(std::move(parent)), mirror_(std::move(mirror)), part_(std::move(part)) {
  const int j = static_cast<int>(parent_.size());
  if (j < 1) throw ConfigError("skeleton: at least one joint required");
  if (static_cast<int>(names_.size()) != j || static_cast<int>(mirror_.size()) != j ||
      static_cast<int>(part_.size()) != j)
    throw ConfigError("skeleton: names, parent, mirror and part arrays must have equal length");

  int roots = 0;
  for (int k = 0; k < j; ++k) {
    const int p = parent_[static_cast<std::size_t>(k)];
    if (p < 0 || p >= j) throw ConfigError("skeleton: parent index out of range at joint " + std::to_string(k));
    if (p == k) {
      root_ = k;
      ++roots;
    }
  }
  if (roots != 1) throw ConfigError("skeleton: expected exactly one root, found " + std::to_string(roots));
  for (int k = 0; k < j; ++k) {
    int cur = k, steps = 0;
    while (cur != root_) {
      cur = parent_[static_cast<std::size_t>(cur)];
      if (++steps > j) throw ConfigError("skeleton: parent cycle through joint " + std::to_string(k));
    }
    if (k != root_) bones_.emplace_back(k, parent_[static_cast<std::size_t>(k)]);
  }
  for (int k = 0; k < j; ++k) {
    const int m = mirror_[static_cast<std::size_t>(k)];
    if (m < 0 || m >= j || mirror_[static_cast<std::size_t>(m)] != k)
      throw ConfigError("skeleton: left/right pairing is not an involution at joint " + std::to_string(k));
    const int pt = part_[static_cast<std::size_t>(k)];
    if (pt < -1 || pt >= kPartCount) throw ConfigError("skeleton: invalid part id at joint " + std::to_string(k));
  }
}

SkeletonTopology SkeletonTopology::default16() {
  return SkeletonTopology(
      {"pelvis", "r_hip", "r_knee", "r_ankle", "l_hip", "l_knee", "l_ankle", "spine", "neck", "head",
       "l_shoulder", "l_elbow", "l_wrist", "r_shoulder", "r_elbow", "r_wrist"},
      {0, 0, 1, 2, 0, 4, 5, 0, 7, 8, 8, 10, 11, 8, 13, 14},
      {0, 4, 5, 6, 1, 2, 3, 7, 8, 9, 13, 14, 15, 10, 11, 12},
      {-1, 0, 6, 7, 0, 6, 7, 1, 1, 3, 2, 4, 5, 2, 4, 5});
}

std::vector<int> SkeletonTopology::joints_in(Part p) const {
  std::vector<int> out;
  for (int k = 0; k < joints(); ++k)
    if (part_[static_cast<std::size_t>(k)] == static_cast<int>(p)) out.push_back(k);
  return out;
}

int SkeletonTopology::index_of(std::string_view name) const noexcept {
  for (std::size_t k = 0; k < names_.size(); ++k)
    if (names_[k] == name) return static_cast<int>(k);
  return -1;
}

}  // namespace iso::geom
