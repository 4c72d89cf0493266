#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "iso/autodiff/ops.hpp"
#include "iso/geometry/graph_ops.hpp"
#include "iso/nn/discriminator.hpp"
#include "iso/nn/lifter.hpp"

namespace iso::losses {

struct LossWeights {
  double lambda_joint = 0.1;
  double lambda_2d = 10.0;
  double lambda_3d = 0.1;

  void validate() const;
};

enum class SslKind { none, adversary, cycle };

SslKind parse_ssl_kind(std::string_view s);
std::string_view to_string(SslKind k);

/// Batch mean of ||pred - gt||^2 + ||B(pred) - B(gt)||^2 over B x 3J rows.
/// `bones` is the 3J x 3(J-1) matrix from geom::bone_matrix.
template <typename T>
ad::Var<T> fsl_loss(ad::Var<T> pred, ad::Var<T> gt, ad::Var<T> bones);
template <typename T>
ad::Var<T> fsl_loss(ad::Var<T> pred, ad::Var<T> gt, const geom::SkeletonTopology& topo);

/// E[log D(r)] + E[log(1 - D(y))]; DomainError unless every score lies in (0,1).
double adversarial_value(std::span<const double> real_scores, std::span<const double> fake_scores);
/// E[-log D(y)]
double generator_value(std::span<const double> fake_scores);

/// Negated adversarial objective on probabilities (what the discriminator minimizes).
template <typename T>
ad::Var<T> disc_loss_scores(ad::Var<T> real_scores, ad::Var<T> fake_scores);
template <typename T>
ad::Var<T> gen_loss_scores(ad::Var<T> fake_scores);
/// Same objectives evaluated from pre-sigmoid logits, numerically stable.
template <typename T>
ad::Var<T> disc_loss_logits(ad::Var<T> real_logits, ad::Var<T> fake_logits);
template <typename T>
ad::Var<T> gen_loss_logits(ad::Var<T> fake_logits);

/// Maps B x 2J normalized 2D rows to B x 3J native-unit 3D rows.
template <typename T>
using LiftFn = std::function<ad::Var<T>(ad::Tape<T>&, ad::Var<T>)>;
/// Maps B x 2J rows to B x 1 logits.
template <typename T>
using DiscFn = std::function<ad::Var<T>(ad::Tape<T>&, ad::Var<T>)>;

/// Called with the fake 2D batch after it is formed and before the discriminator
/// scores it; training uses it to run the discriminator update first.
template <typename T>
using FakeHook = std::function<void(const ad::Tensor<T>& fakes)>;

/// Fixed pieces of the lift/project geometry.
struct ProjectionSetup {
  geom::CameraModel camera;
  double mm_per_unit = 1000.0;
  int root = 0;
  /// Minimum depth as a fraction of the root depth; 0 makes behind-camera joints throw.
  double depth_floor = 0.1;
};

/// Intermediates of the random-projection losses. Views may outnumber the rows
/// of x by an integer factor k, in which case every row is used with k views.
template <typename T>
struct SslArtifacts {
  std::vector<Eigen::Matrix3d> views;
  ad::Var<T> lifted;       ///< X~ (native units), one row per view
  ad::Var<T> fake;         ///< y, the reprojected 2D poses
  ad::Var<T> fake_logits;  ///< D(y) before the sigmoid
  ad::Var<T> adv;          ///< generator term
  std::optional<ad::Var<T>> relifted;     ///< re-lifted pose mapped back to the original view
  std::optional<ad::Var<T>> reprojected;  ///< x~
  std::optional<ad::Var<T>> term2d;       ///< mean ||x - x~||^2
  std::optional<ad::Var<T>> term3d;       ///< mean ||X~ - relifted||^2
  ad::Var<T> total;
};

/// Generator side of the random-projection adversary.
template <typename T>
SslArtifacts<T> adversary_loss(ad::Var<T> x, const LiftFn<T>& lift, const DiscFn<T>& disc,
                               std::span<const Eigen::Matrix3d> views, const ProjectionSetup& setup);

/// Generator adversarial term plus the 2D and 3D lift-project-lift consistency terms.
template <typename T>
SslArtifacts<T> cycle_loss(ad::Var<T> x, const LiftFn<T>& lift, const DiscFn<T>& disc,
                           std::span<const Eigen::Matrix3d> views, const ProjectionSetup& setup,
                           const LossWeights& weights);

template <typename T>
SslArtifacts<T> ssl_loss(SslKind kind, ad::Var<T> x, const LiftFn<T>& lift, const DiscFn<T>& disc,
                         std::span<const Eigen::Matrix3d> views, const ProjectionSetup& setup,
                         const LossWeights& weights, const FakeHook<T>& on_fakes = {});

/// `count` matrices from sample_random_view.
std::vector<Eigen::Matrix3d> sample_view_matrices(std::size_t count, Rng& rng);

/// Lifter-bound wrappers for the callbacks above.
template <typename T>
LiftFn<T> ssl_lift_fn(nn::Lifter<T>& lifter, nn::ForwardContext<T> ctx);
template <typename T>
DiscFn<T> disc_fn(nn::Discriminator<T>& disc, nn::ForwardContext<T> ctx);

template <typename T>
struct JointTerms {
  ad::Var<T> fsl;
  std::optional<SslArtifacts<T>> ssl;
  ad::Var<T> combined;
};

/// L_f(x, X) + lambda * L_s(x). gt_native holds B x 3J targets in native units.
/// With SslKind::none or lambda == 0 the SSL branch is not built at all.
template <typename T>
JointTerms<T> joint_objective(ad::Var<T> x, ad::Var<T> gt_native, nn::Lifter<T>& lifter,
                              nn::Discriminator<T>* disc, SslKind kind, std::span<const Eigen::Matrix3d> views,
                              const ProjectionSetup& setup, const LossWeights& weights,
                              const geom::SkeletonTopology& topo, const nn::ForwardContext<T>& ctx,
                              const nn::ForwardContext<T>& disc_ctx, const FakeHook<T>& on_fakes = {});

}  // namespace iso::losses
