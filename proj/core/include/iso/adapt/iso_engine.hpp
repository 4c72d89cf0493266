#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "iso/nn/checkpoint.hpp"
#include "iso/nn/snapshot.hpp"
#include "iso/train/step.hpp"

namespace iso::adapt {

enum class IsoMode { off, vanilla, online };

IsoMode parse_iso_mode(std::string_view s);
std::string_view to_string(IsoMode m);

struct IsoConfig {
  IsoMode mode = IsoMode::vanilla;
  /// Updates per adapted instance.
  int T = 10;
  double alpha = 2e-5;
  /// Rows of the per-instance batch; the first half are x, the rest hflip(x).
  int copies = 32;
  int views_per_copy = 1;
  /// Adapt on instances whose 0-based index is a multiple of `skip`.
  int skip = 1;
  bool freeze_bn = true;
  std::uint64_t seed = 0;
  losses::LossWeights weights;
  optim::AdamConfig adam;
  /// Threads for vanilla mode; online mode is always sequential.
  int workers = 1;

  void validate() const;
  static IsoConfig vanilla();
  static IsoConfig online();
};

/// `copies` rows of the flattened normalized pose: x repeated, then hflip(x).
ad::Tensor<float> build_iso_batch(std::span<const float> x, const geom::SkeletonTopology& topo, int copies);

/// Mean of the FSL-head output on x and the un-flipped output on hflip(x), in mm.
std::vector<float> predict_flip_averaged(const nn::Lifter<float>& lifter, const geom::SkeletonTopology& topo,
                                         std::span<const float> x);

struct TimingRecord {
  std::size_t index = 0;
  bool adapted = false;
  double seconds = 0.0;
};

struct SequenceResult {
  std::vector<std::vector<float>> predictions;  ///< J x 3 mm per instance
  std::vector<TimingRecord> timing;
  std::size_t adaptations = 0;
  double wall_seconds = 0.0;
};

/// Per-instance inference-stage optimization over a trained joint model.
///
/// Vanilla mode restores the shared extractor, SSL head, discriminator and a
/// fresh optimizer before every adapted instance; online mode carries all of
/// them forward. The FSL head and batchnorm state are never modified.
class IsoEngine {
 public:
  IsoEngine(const nn::ModelBundle& model, IsoConfig config);
  /// Copies the current parameters and checkpoint; optimizer state starts fresh.
  IsoEngine(const IsoEngine& other);
  IsoEngine& operator=(const IsoEngine&) = delete;

  /// Adapts on x (when the schedule says so) and predicts. `index` is the 0-based
  /// stream position used for skip scheduling and online seeding.
  std::vector<float> infer_one(std::span<const float> x, std::size_t index, bool* adapted = nullptr);

  /// Runs the whole stream in order (or sharded over workers in vanilla mode).
  SequenceResult infer_sequence(const std::vector<std::vector<float>>& xs);

  /// Restores checkpoint parameters and forgets optimizer state.
  void reset();

  const nn::Lifter<float>& lifter() const noexcept { return lifter_; }
  const nn::Discriminator<float>* disc() const noexcept { return disc_ ? &*disc_ : nullptr; }
  const IsoConfig& config() const noexcept { return config_; }
  std::size_t adaptations() const noexcept { return adaptations_; }
  /// Fingerprint of the current lifter and discriminator tensors.
  std::uint64_t state_hash() const;

  bool should_adapt(std::size_t index) const;

 private:
  void adapt(std::span<const float> x, std::uint64_t seed);
  void rebuild_optimizers();

  IsoConfig config_;
  geom::SkeletonTopology topology_;
  geom::CameraModel camera_;
  losses::SslKind kind_ = losses::SslKind::none;
  nn::Lifter<float> lifter_;
  std::optional<nn::Discriminator<float>> disc_;
  nn::ParamSnapshot<float> lifter_init_;
  nn::ParamSnapshot<float> disc_init_;
  std::optional<optim::Adam<float>> lifter_opt_;
  std::optional<optim::Adam<float>> disc_opt_;
  std::size_t adaptations_ = 0;
};

/// Tab-separated: index, adapted, seconds.
void write_timing(const std::filesystem::path& path, const std::vector<TimingRecord>& timing);

}  // namespace iso::adapt
