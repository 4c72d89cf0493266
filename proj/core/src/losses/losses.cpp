#include "iso/losses/losses.hpp"

#include <cmath>
#include <string>

namespace iso::losses {
namespace {

template <typename T>
ad::Var<T> batch_mean_sq(ad::Var<T> a, ad::Var<T> b) {
  const auto rows = a.value().rows();
  return ad::scale(ad::sum_squares(ad::sub(a, b)), T(1) / static_cast<T>(rows));
}

template <typename T>
void check_scores(ad::Var<T> s, const char* what) {
  for (T v : s.value().data())
    if (!(v > T(0) && v < T(1)))
      throw DomainError(std::string(what) + " score " + std::to_string(static_cast<double>(v)) +
                        " outside (0,1)");
}

template <typename T>
ad::Var<T> ones_like(ad::Var<T> v) {
  return v.tape->constant(ad::Tensor<T>(v.shape(), T(1)));
}

std::vector<Eigen::Matrix3d> transposed(std::span<const Eigen::Matrix3d> views) {
  std::vector<Eigen::Matrix3d> out;
  out.reserve(views.size());
  for (const auto& r : views) out.push_back(r.transpose());
  return out;
}

template <typename T>
std::size_t view_factor(ad::Var<T> x, std::span<const Eigen::Matrix3d> views) {
  const auto b = x.value().rows();
  if (views.empty() || views.size() % b != 0)
    throw ShapeError("need a positive multiple of " + std::to_string(b) + " views, got " +
                     std::to_string(views.size()));
  return views.size() / b;
}

template <typename T>
ad::Var<T> repeat_if(ad::Var<T> v, std::size_t k) {
  return k == 1 ? v : ad::repeat_rows(v, k);
}

/// Shared tail of both SSL losses, starting from X~ already lifted from x.
template <typename T>
SslArtifacts<T> from_lifted(SslKind kind, ad::Var<T> x, ad::Var<T> lifted, const LiftFn<T>& lift,
                            const DiscFn<T>& disc, std::span<const Eigen::Matrix3d> views,
                            const ProjectionSetup& setup, const LossWeights& weights,
                            const FakeHook<T>& on_fakes) {
  const std::size_t k = view_factor(x, views);
  const T unit = static_cast<T>(setup.mm_per_unit);
  SslArtifacts<T> a;
  a.views.assign(views.begin(), views.end());
  a.lifted = repeat_if(lifted, k);
  a.fake = geom::reproject_rows(ad::scale(a.lifted, unit), views, setup.camera, setup.root, setup.depth_floor);
  if (on_fakes) on_fakes(a.fake.value());
  a.fake_logits = disc(*x.tape, a.fake);
  a.adv = gen_loss_logits(a.fake_logits);
  a.total = a.adv;
  if (kind != SslKind::cycle) return a;

  const auto inverse = transposed(views);
  ad::Var<T> back = geom::rotate_rows<T>(lift(*x.tape, a.fake), inverse);
  a.relifted = back;
  a.reprojected = geom::normalize2d_rows(geom::project_rows(ad::scale(back, unit), setup.camera, setup.root, setup.depth_floor),
                                         setup.root);
  a.term2d = batch_mean_sq(repeat_if(x, k), *a.reprojected);
  a.term3d = batch_mean_sq(a.lifted, back);
  a.total = ad::add(a.adv, ad::add(ad::scale(*a.term2d, static_cast<T>(weights.lambda_2d)),
                                   ad::scale(*a.term3d, static_cast<T>(weights.lambda_3d))));
  return a;
}

}  // namespace

void LossWeights::validate() const {
  if (!(lambda_joint >= 0.0 && lambda_2d >= 0.0 && lambda_3d >= 0.0))
    throw ConfigError("loss weights must be >= 0");
}

SslKind parse_ssl_kind(std::string_view s) {
  if (s == "none") return SslKind::none;
  if (s == "adversary") return SslKind::adversary;
  if (s == "cycle") return SslKind::cycle;
  throw ConfigError("unknown ssl kind '" + std::string(s) + "' (expected none, adversary or cycle)");
}

std::string_view to_string(SslKind k) {
  switch (k) {
    case SslKind::none: return "none";
    case SslKind::adversary: return "adversary";
    case SslKind::cycle: return "cycle";
  }
  return "none";
}

template <typename T>
ad::Var<T> fsl_loss(ad::Var<T> pred, ad::Var<T> gt, ad::Var<T> bones) {
  if (pred.shape() != gt.shape())
    throw ShapeError("fsl_loss: pred " + ad::to_string(pred.shape()) + " vs gt " + ad::to_string(gt.shape()));
  ad::Var<T> diff = ad::sub(pred, gt);
  const T inv_b = T(1) / static_cast<T>(pred.value().rows());
  ad::Var<T> pose = ad::sum_squares(diff);
  if (bones.value().cols() == 0) return ad::scale(pose, inv_b);
  ad::Var<T> bone = ad::sum_squares(ad::matmul(diff, bones));
  return ad::scale(ad::add(pose, bone), inv_b);
}

template <typename T>
ad::Var<T> fsl_loss(ad::Var<T> pred, ad::Var<T> gt, const geom::SkeletonTopology& topo) {
  return fsl_loss(pred, gt, pred.tape->constant(geom::bone_matrix<T>(topo)));
}

double adversarial_value(std::span<const double> real, std::span<const double> fake) {
  if (real.empty() || fake.empty()) throw ShapeError("adversarial_value: empty score set");
  double lr = 0.0, lf = 0.0;
  for (double s : real) {
    if (!(s > 0.0 && s < 1.0)) throw DomainError("real score outside (0,1)");
    lr += std::log(s);
  }
  for (double s : fake) {
    if (!(s > 0.0 && s < 1.0)) throw DomainError("fake score outside (0,1)");
    lf += std::log1p(-s);
  }
  return lr / static_cast<double>(real.size()) + lf / static_cast<double>(fake.size());
}

double generator_value(std::span<const double> fake) {
  if (fake.empty()) throw ShapeError("generator_value: empty score set");
  double acc = 0.0;
  for (double s : fake) {
    if (!(s > 0.0 && s < 1.0)) throw DomainError("fake score outside (0,1)");
    acc -= std::log(s);
  }
  return acc / static_cast<double>(fake.size());
}

template <typename T>
ad::Var<T> disc_loss_scores(ad::Var<T> real, ad::Var<T> fake) {
  check_scores(real, "real");
  check_scores(fake, "fake");
  ad::Var<T> value = ad::add(ad::mean(ad::log(real)), ad::mean(ad::log(ad::sub(ones_like(fake), fake))));
  return ad::scale(value, T(-1));
}

template <typename T>
ad::Var<T> gen_loss_scores(ad::Var<T> fake) {
  check_scores(fake, "fake");
  return ad::scale(ad::mean(ad::log(fake)), T(-1));
}

template <typename T>
ad::Var<T> disc_loss_logits(ad::Var<T> real, ad::Var<T> fake) {
  ad::Var<T> value = ad::add(ad::mean(ad::log_sigmoid(real)), ad::mean(ad::log_sigmoid(ad::scale(fake, T(-1)))));
  return ad::scale(value, T(-1));
}

template <typename T>
ad::Var<T> gen_loss_logits(ad::Var<T> fake) {
  return ad::scale(ad::mean(ad::log_sigmoid(fake)), T(-1));
}

template <typename T>
SslArtifacts<T> adversary_loss(ad::Var<T> x, const LiftFn<T>& lift, const DiscFn<T>& disc,
                               std::span<const Eigen::Matrix3d> views, const ProjectionSetup& setup) {
  return from_lifted(SslKind::adversary, x, lift(*x.tape, x), lift, disc, views, setup, LossWeights{}, {});
}

template <typename T>
SslArtifacts<T> cycle_loss(ad::Var<T> x, const LiftFn<T>& lift, const DiscFn<T>& disc,
                           std::span<const Eigen::Matrix3d> views, const ProjectionSetup& setup,
                           const LossWeights& weights) {
  return from_lifted(SslKind::cycle, x, lift(*x.tape, x), lift, disc, views, setup, weights, {});
}

template <typename T>
SslArtifacts<T> ssl_loss(SslKind kind, ad::Var<T> x, const LiftFn<T>& lift, const DiscFn<T>& disc,
                         std::span<const Eigen::Matrix3d> views, const ProjectionSetup& setup,
                         const LossWeights& weights, const FakeHook<T>& on_fakes) {
  if (kind == SslKind::none) throw ConfigError("ssl_loss called with kind none");
  return from_lifted(kind, x, lift(*x.tape, x), lift, disc, views, setup, weights, on_fakes);
}

std::vector<Eigen::Matrix3d> sample_view_matrices(std::size_t count, Rng& rng) {
  std::vector<Eigen::Matrix3d> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(geom::sample_random_view(rng).matrix());
  return out;
}

template <typename T>
LiftFn<T> ssl_lift_fn(nn::Lifter<T>& lifter, nn::ForwardContext<T> ctx) {
  return [&lifter, ctx](ad::Tape<T>& tape, ad::Var<T> x) { return lifter.forward(tape, x, nn::Head::ssl, ctx); };
}

template <typename T>
DiscFn<T> disc_fn(nn::Discriminator<T>& disc, nn::ForwardContext<T> ctx) {
  return [&disc, ctx](ad::Tape<T>& tape, ad::Var<T> x) { return disc.logits(tape, x, ctx); };
}

template <typename T>
JointTerms<T> joint_objective(ad::Var<T> x, ad::Var<T> gt, nn::Lifter<T>& lifter, nn::Discriminator<T>* disc,
                              SslKind kind, std::span<const Eigen::Matrix3d> views, const ProjectionSetup& setup,
                              const LossWeights& weights, const geom::SkeletonTopology& topo,
                              const nn::ForwardContext<T>& ctx, const nn::ForwardContext<T>& disc_ctx,
                              const FakeHook<T>& on_fakes) {
  ad::Tape<T>& tape = *x.tape;
  ad::Var<T> h = lifter.features(tape, x, ctx);
  JointTerms<T> out;
  out.fsl = fsl_loss(lifter.head(tape, h, nn::Head::fsl, ctx), gt, topo);
  out.combined = out.fsl;
  if (kind == SslKind::none || weights.lambda_joint == 0.0) return out;
  if (!disc) throw ConfigError("joint objective with SSL needs a discriminator");
  ad::Var<T> lifted = lifter.head(tape, h, nn::Head::ssl, ctx);
  out.ssl = from_lifted(kind, x, lifted, ssl_lift_fn(lifter, ctx), disc_fn(*disc, disc_ctx), views,
                        setup, weights, on_fakes);
  out.combined = ad::add(out.fsl, ad::scale(out.ssl->total, static_cast<T>(weights.lambda_joint)));
  return out;
}

#define ISO_INSTANTIATE_LOSSES(T)                                                                        \
  template ad::Var<T> fsl_loss<T>(ad::Var<T>, ad::Var<T>, ad::Var<T>);                                  \
  template ad::Var<T> fsl_loss<T>(ad::Var<T>, ad::Var<T>, const geom::SkeletonTopology&);               \
  template ad::Var<T> disc_loss_scores<T>(ad::Var<T>, ad::Var<T>);                                      \
  template ad::Var<T> gen_loss_scores<T>(ad::Var<T>);                                                   \
  template ad::Var<T> disc_loss_logits<T>(ad::Var<T>, ad::Var<T>);                                      \
  template ad::Var<T> gen_loss_logits<T>(ad::Var<T>);                                                   \
  template SslArtifacts<T> adversary_loss<T>(ad::Var<T>, const LiftFn<T>&, const DiscFn<T>&,            \
                                             std::span<const Eigen::Matrix3d>, const ProjectionSetup&); \
  template SslArtifacts<T> cycle_loss<T>(ad::Var<T>, const LiftFn<T>&, const DiscFn<T>&,                \
                                         std::span<const Eigen::Matrix3d>, const ProjectionSetup&,      \
                                         const LossWeights&);                                           \
  template SslArtifacts<T> ssl_loss<T>(SslKind, ad::Var<T>, const LiftFn<T>&, const DiscFn<T>&,         \
                                       std::span<const Eigen::Matrix3d>, const ProjectionSetup&,        \
                                       const LossWeights&, const FakeHook<T>&);                         \
  template LiftFn<T> ssl_lift_fn<T>(nn::Lifter<T>&, nn::ForwardContext<T>);                             \
  template DiscFn<T> disc_fn<T>(nn::Discriminator<T>&, nn::ForwardContext<T>);                          \
  template JointTerms<T> joint_objective<T>(ad::Var<T>, ad::Var<T>, nn::Lifter<T>&, nn::Discriminator<T>*, \
                                            SslKind, std::span<const Eigen::Matrix3d>, const ProjectionSetup&, \
                                            const LossWeights&, const geom::SkeletonTopology&,          \
                                            const nn::ForwardContext<T>&, const nn::ForwardContext<T>&, \
                                            const FakeHook<T>&);

ISO_INSTANTIATE_LOSSES(float)
ISO_INSTANTIATE_LOSSES(double)

}  // namespace iso::losses
