#pragma once

#include <span>

#include <Eigen/Core>

#include "iso/losses/losses.hpp"
#include "iso/optim/adam.hpp"

namespace iso::train {

/// Scalar values observed during one update, in native loss units.
struct StepLosses {
  double fsl = 0.0;
  double ssl = 0.0;
  double disc = 0.0;
  double combined = 0.0;
};

/// Networks and optimizers touched by an update. `disc`/`disc_opt` may be
/// null when no SSL branch runs.
template <typename T>
struct StepModels {
  nn::Lifter<T>& lifter;
  optim::Adam<T>& lifter_opt;
  nn::Discriminator<T>* disc = nullptr;
  optim::Adam<T>* disc_opt = nullptr;
};

struct StepSettings {
  losses::SslKind kind = losses::SslKind::none;
  losses::LossWeights weights;
  losses::ProjectionSetup projection;
  double lr = 2e-4;
};

/// Discriminator update on `real` vs detached `fakes`, then returns its loss.
template <typename T>
double discriminator_update(nn::Discriminator<T>& disc, optim::Adam<T>& opt, const ad::Tensor<T>& real,
                            const ad::Tensor<T>& fakes, const nn::ForwardContext<T>& ctx, double lr);

/// One joint-training update on a labeled batch: the discriminator ascends the
/// adversarial objective on (x, fakes), then the lifter descends L_f + lambda L_s.
/// The discriminator step never changes lifter parameters and the lifter step
/// never changes the discriminator.
template <typename T>
StepLosses joint_step(StepModels<T> models, const ad::Tensor<T>& x, const ad::Tensor<T>& gt_native,
                      std::span<const Eigen::Matrix3d> views, const StepSettings& settings,
                      const geom::SkeletonTopology& topo, const nn::ForwardContext<T>& ctx,
                      const nn::ForwardContext<T>& disc_ctx);

/// One inference-stage update on an unlabeled batch: discriminator step with
/// `x` as the real pool, then the shared extractor and SSL head descend L_s.
template <typename T>
StepLosses ssl_step(StepModels<T> models, const ad::Tensor<T>& x, std::span<const Eigen::Matrix3d> views,
                    const StepSettings& settings, const nn::ForwardContext<T>& ctx,
                    const nn::ForwardContext<T>& disc_ctx);

}  // namespace iso::train
