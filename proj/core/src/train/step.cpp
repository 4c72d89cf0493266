#include "iso/train/step.hpp"

namespace iso::train {
namespace {

/// Keeps the discriminator out of the lifter's graph for the scope's lifetime.
template <typename T>
class FrozenDisc {
 public:
  explicit FrozenDisc(nn::Discriminator<T>* d) : d_(d) {
    if (d_) d_->set_trainable(false);
  }
  ~FrozenDisc() {
    if (d_) d_->set_trainable(true);
  }
  FrozenDisc(const FrozenDisc&) = delete;
  FrozenDisc& operator=(const FrozenDisc&) = delete;

 private:
  nn::Discriminator<T>* d_;
};

template <typename T>
losses::FakeHook<T> disc_hook(StepModels<T>& m, const ad::Tensor<T>& real, const nn::ForwardContext<T>& ctx,
                              double lr, double& disc_loss) {
  return [&m, &real, ctx, lr, &disc_loss](const ad::Tensor<T>& fakes) {
    m.disc->set_trainable(true);
    disc_loss = discriminator_update(*m.disc, *m.disc_opt, real, fakes, ctx, lr);
    m.disc->set_trainable(false);
  };
}

}  // namespace

template <typename T>
double discriminator_update(nn::Discriminator<T>& disc, optim::Adam<T>& opt, const ad::Tensor<T>& real,
                            const ad::Tensor<T>& fakes, const nn::ForwardContext<T>& ctx, double lr) {
  ad::Tape<T> tape;
  ad::Var<T> lr_real = disc.logits(tape, tape.constant(real), ctx);
  ad::Var<T> lr_fake = disc.logits(tape, tape.constant(fakes), ctx);
  ad::Var<T> loss = losses::disc_loss_logits(lr_real, lr_fake);
  opt.zero_grad();
  tape.backward(loss);
  opt.step(lr);
  return static_cast<double>(loss.value().item());
}

template <typename T>
StepLosses joint_step(StepModels<T> m, const ad::Tensor<T>& x, const ad::Tensor<T>& gt,
                      std::span<const Eigen::Matrix3d> views, const StepSettings& s,
                      const geom::SkeletonTopology& topo, const nn::ForwardContext<T>& ctx,
                      const nn::ForwardContext<T>& disc_ctx) {
  const bool with_ssl = s.kind != losses::SslKind::none && s.weights.lambda_joint != 0.0;
  if (with_ssl && (!m.disc || !m.disc_opt)) throw ConfigError("SSL training needs a discriminator");
  StepLosses out;
  FrozenDisc<T> frozen(with_ssl ? m.disc : nullptr);
  ad::Tape<T> tape;
  losses::FakeHook<T> hook;
  if (with_ssl) hook = disc_hook(m, x, disc_ctx, s.lr, out.disc);
  auto terms = losses::joint_objective(tape.constant(x), tape.constant(gt), m.lifter, with_ssl ? m.disc : nullptr,
                                       with_ssl ? s.kind : losses::SslKind::none, views, s.projection, s.weights,
                                       topo, ctx, disc_ctx, hook);
  m.lifter_opt.zero_grad();
  tape.backward(terms.combined);
  m.lifter_opt.step(s.lr);
  out.fsl = static_cast<double>(terms.fsl.value().item());
  if (terms.ssl) out.ssl = static_cast<double>(terms.ssl->total.value().item());
  out.combined = static_cast<double>(terms.combined.value().item());
  return out;
}

template <typename T>
StepLosses ssl_step(StepModels<T> m, const ad::Tensor<T>& x, std::span<const Eigen::Matrix3d> views,
                    const StepSettings& s, const nn::ForwardContext<T>& ctx, const nn::ForwardContext<T>& disc_ctx) {
  if (s.kind == losses::SslKind::none) throw ConfigError("ssl_step needs an SSL kind");
  if (!m.disc || !m.disc_opt) throw ConfigError("ssl_step needs a discriminator");
  StepLosses out;
  FrozenDisc<T> frozen(m.disc);
  ad::Tape<T> tape;
  auto a = losses::ssl_loss(s.kind, tape.constant(x), losses::ssl_lift_fn(m.lifter, ctx),
                            losses::disc_fn(*m.disc, disc_ctx), views, s.projection, s.weights,
                            disc_hook(m, x, disc_ctx, s.lr, out.disc));
  m.lifter_opt.zero_grad();
  tape.backward(a.total);
  m.lifter_opt.step(s.lr);
  out.ssl = static_cast<double>(a.total.value().item());
  out.combined = out.ssl;
  return out;
}

#define ISO_INSTANTIATE_STEP(T)                                                                               \
  template double discriminator_update<T>(nn::Discriminator<T>&, optim::Adam<T>&, const ad::Tensor<T>&,       \
                                          const ad::Tensor<T>&, const nn::ForwardContext<T>&, double);        \
  template StepLosses joint_step<T>(StepModels<T>, const ad::Tensor<T>&, const ad::Tensor<T>&,                \
                                    std::span<const Eigen::Matrix3d>, const StepSettings&,                    \
                                    const geom::SkeletonTopology&, const nn::ForwardContext<T>&,              \
                                    const nn::ForwardContext<T>&);                                            \
  template StepLosses ssl_step<T>(StepModels<T>, const ad::Tensor<T>&, std::span<const Eigen::Matrix3d>,      \
                                  const StepSettings&, const nn::ForwardContext<T>&, const nn::ForwardContext<T>&);

ISO_INSTANTIATE_STEP(float)
ISO_INSTANTIATE_STEP(double)

}  // namespace iso::train
