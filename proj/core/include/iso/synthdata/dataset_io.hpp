#pragma once

// Dataset container: magic "ISODATA1", u32 version, u32 J, J joint names,
// J x i32 parent / mirror / part, f64 focal and root depth, config echo
// string, u64 record count, then per record a u32 byte length followed by
// J x 3 f32 (3D, mm) and J x 2 f32 (normalized 2D).

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "iso/synthdata/generator.hpp"

namespace iso::synth {

inline constexpr char kDatasetMagic[] = "ISODATA1";
inline constexpr std::uint32_t kDatasetVersion = 1;

std::vector<char> encode_dataset(const Dataset& ds);
Dataset decode_dataset(std::span<const char> bytes);

void write_dataset(const std::filesystem::path& path, const Dataset& ds);
/// With `expected_joints`, a file for a different joint count is rejected.
Dataset read_dataset(const std::filesystem::path& path, std::optional<int> expected_joints = std::nullopt);

/// Throws CompatibilityError unless the dataset's topology equals `topo`.
void require_compatible(const Dataset& ds, const geom::SkeletonTopology& topo);

/// One record per line: index, 3J floats, 2J floats, tab-separated.
void export_tsv(const std::filesystem::path& path, const Dataset& ds);

}  // namespace iso::synth
