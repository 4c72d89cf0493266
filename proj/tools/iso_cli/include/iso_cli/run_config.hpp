#pragma once

// Flat key = value experiment file. Keys carry a section prefix
// (data., camera., arch., train., loss., iso., eval.) except `seed` and
// `out_dir`. Lines starting with '#' are comments.

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "iso/adapt/iso_engine.hpp"
#include "iso/eval/metrics.hpp"
#include "iso/synthdata/generator.hpp"
#include "iso/train/trainer.hpp"

namespace iso::cli {

enum class ValueKind { integer, real, boolean, text, path };

struct KeySpec {
  std::string key;
  ValueKind kind;
  std::string fallback;
  std::string help;
};

/// Every accepted key in a stable order.
const std::vector<KeySpec>& key_specs();

class RunConfig {
 public:
  RunConfig();

  /// Relative paths in the file resolve against the file's directory.
  static RunConfig from_file(const std::filesystem::path& file);
  static RunConfig parse(std::string_view text, const std::filesystem::path& base_dir,
                         const std::string& origin = "<string>");

  /// Throws ConfigError for unknown keys or values of the wrong kind.
  void set(const std::string& key, const std::string& value);
  /// "key=value" form of set().
  void assign(std::string_view kv);
  bool is_set(const std::string& key) const { return explicit_.count(key) != 0; }

  const std::string& text(const std::string& key) const;
  long long integer(const std::string& key) const;
  double real(const std::string& key) const;
  bool boolean(const std::string& key) const;
  /// out_dir resolves against the base directory; every other path against out_dir.
  std::filesystem::path path(const std::string& key) const;

  /// ISO_SEED, when present, replaces `seed`.
  void apply_environment();
  /// Fills values that default to "auto" from the rest of the configuration.
  void resolve();

  /// "key = value" per line, sorted by key, paths resolved.
  std::string manifest() const;

  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }
  void set_base_dir(std::filesystem::path dir) { base_dir_ = std::move(dir); }

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> explicit_;
  std::filesystem::path base_dir_;
};

geom::CameraModel camera_model(const RunConfig& rc);
synth::DistributionConfig source_profile(const RunConfig& rc);
synth::DistributionConfig target_profile(const RunConfig& rc);
train::TrainConfig train_config(const RunConfig& rc);
adapt::IsoConfig iso_config(const RunConfig& rc);
eval::Protocol eval_protocol(const RunConfig& rc);

/// Writes `<output>.manifest.txt` holding the command line and the resolved config.
std::filesystem::path write_manifest(const std::filesystem::path& output, const std::string& command,
                                     const RunConfig& rc);

}  // namespace iso::cli
