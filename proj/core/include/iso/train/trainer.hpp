#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "iso/nn/checkpoint.hpp"
#include "iso/synthdata/generator.hpp"
#include "iso/train/step.hpp"

namespace iso::train {

struct TrainConfig {
  int epochs = 200;
  int batch_size = 64;
  optim::LrSchedule lr{2e-4, 0.96};
  optim::AdamConfig adam;
  losses::LossWeights weights;
  losses::SslKind ssl = losses::SslKind::none;
  std::uint64_t seed = 0;
  bool flip = true;
  double flip_prob = 0.5;
  /// Random reprojections per training sample for the SSL fake pool.
  int views_per_sample = 1;
  nn::LifterConfig lifter;
  nn::DiscriminatorConfig disc;
  /// Replace lifter.mm_per_unit by the RMS 3D coordinate of the training set,
  /// so that network outputs are standardized targets.
  bool auto_unit = true;
  /// Embed optimizer moments in the checkpoint.
  bool save_optimizer = false;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double fsl = 0.0;
  double ssl = 0.0;
  double disc = 0.0;
  double combined = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  double wall_seconds = 0.0;
};

struct TrainResult {
  nn::ModelBundle model;
  TrainReport report;
};

/// Observes every update; receives the epoch, batch index and the step's losses.
using StepObserver = std::function<void(int epoch, std::size_t batch, const StepLosses&)>;

/// FSL-only training; ignores `config.ssl` and builds a lifter without SSL head.
TrainResult train_baseline(const synth::Dataset& data, TrainConfig config, const StepObserver& observer = {});
/// FSL plus the configured SSL task, alternating discriminator and lifter updates.
TrainResult train_joint(const synth::Dataset& data, TrainConfig config, const StepObserver& observer = {});
/// Dispatches on config.ssl.
TrainResult train(const synth::Dataset& data, const TrainConfig& config, const StepObserver& observer = {});

/// Flips each (2D, 3D) row pair with probability `prob`. Rows are flattened poses.
void augment_flip(ad::Tensor<float>& x2d, ad::Tensor<float>& x3d, const geom::SkeletonTopology& topo,
                  double prob, Rng& rng);

/// Root-mean-square of every 3D coordinate in the dataset (mm).
double coordinate_rms(const synth::Dataset& data);

/// Tab-separated: epoch, lr, fsl, ssl, disc.
void write_metrics_log(const std::filesystem::path& path, const TrainReport& report);

}  // namespace iso::train
