#pragma once

// Binary container: magic "ISOCKPT1", u32 version, u32 entry count, then per
// entry a u32 name length, the UTF-8 name, u32 rank, u64 dims and raw f32
// values. String metadata travels as zero-length entries named "meta/<key>=<value>".

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "iso/geometry/skeleton.hpp"
#include "iso/geometry/transforms.hpp"
#include "iso/nn/discriminator.hpp"
#include "iso/nn/lifter.hpp"

namespace iso::nn {

inline constexpr char kCheckpointMagic[] = "ISOCKPT1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointData {
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, ad::Tensor<float>>> tensors;

  const ad::Tensor<float>* find(const std::string& name) const;
  std::optional<std::string> meta_value(const std::string& key) const;
};

std::vector<char> encode_checkpoint(const CheckpointData& data);
/// Throws MagicError, VersionError or FormatError (with byte offset) on malformed input.
CheckpointData decode_checkpoint(std::span<const char> bytes);

void write_checkpoint(const std::filesystem::path& path, const CheckpointData& data);
CheckpointData read_checkpoint(const std::filesystem::path& path);

/// A trained model with everything needed to run it on new data.
struct ModelBundle {
  Lifter<float> lifter;
  std::optional<Discriminator<float>> disc;
  geom::SkeletonTopology topology;
  geom::CameraModel camera;
  /// "none", "adversary" or "cycle".
  std::string ssl_kind = "none";
  /// Free-form training metadata (epoch, seed, ...).
  std::map<std::string, std::string> meta;
  /// Extra tensors carried verbatim, e.g. optimizer moments under "adam/".
  std::vector<std::pair<std::string, ad::Tensor<float>>> extra;
};

CheckpointData to_checkpoint(const ModelBundle& bundle);
ModelBundle from_checkpoint(const CheckpointData& data);

void save_model(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle load_model(const std::filesystem::path& path);

}  // namespace iso::nn
