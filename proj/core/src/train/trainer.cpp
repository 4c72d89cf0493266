#include "iso/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>

#include "iso/geometry/graph_ops.hpp"

namespace iso::train {
namespace {

using Clock = std::chrono::steady_clock;

// Independent random streams of a run.
enum Stream : std::uint64_t { kShuffle = 1, kFlip, kDropout, kViews, kLifterInit = 10, kDiscInit };

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void gather(const synth::Dataset& data, std::span<const std::size_t> idx, double inv_unit, ad::Tensor<float>& x2d,
            ad::Tensor<float>& x3d) {
  const auto J = static_cast<std::size_t>(data.joints());
  x2d = ad::Tensor<float>::matrix(idx.size(), 2 * J);
  x3d = ad::Tensor<float>::matrix(idx.size(), 3 * J);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& s = data.samples[idx[r]];
    std::copy(s.pose2d.begin(), s.pose2d.end(), x2d.data().begin() + static_cast<std::ptrdiff_t>(r * 2 * J));
    for (std::size_t c = 0; c < 3 * J; ++c) x3d.at(r, c) = static_cast<float>(s.pose3d[c] * inv_unit);
  }
}

TrainResult run(const synth::Dataset& data, const TrainConfig& cfg, bool joint, const StepObserver& observer) {
  cfg.validate();
  if (data.size() == 0) throw ConfigError("training dataset is empty");
  if (cfg.lifter.joints != data.joints())
    throw CompatibilityError("lifter expects " + std::to_string(cfg.lifter.joints) + " joints, dataset has " +
                             std::to_string(data.joints()));
  const auto t0 = Clock::now();
  const auto& topo = data.topology;

  nn::LifterConfig lc = cfg.lifter;
  lc.ssl_head = joint;
  if (cfg.auto_unit) lc.mm_per_unit = coordinate_rms(data);
  nn::Lifter<float> lifter(lc, derive_seed(cfg.seed, kLifterInit));
  std::optional<nn::Discriminator<float>> disc;
  if (joint) {
    nn::DiscriminatorConfig dc = cfg.disc;
    dc.joints = lc.joints;
    disc.emplace(dc, derive_seed(cfg.seed, kDiscInit));
  }
  optim::Adam<float> lifter_opt(nn::collect_params<float>(lifter, true), cfg.adam);
  std::optional<optim::Adam<float>> disc_opt;
  if (disc) disc_opt.emplace(nn::collect_params<float>(*disc, true), cfg.adam);

  Rng shuffle_rng(derive_seed(cfg.seed, kShuffle));
  Rng flip_rng(derive_seed(cfg.seed, kFlip));
  Rng dropout_rng(derive_seed(cfg.seed, kDropout));
  Rng view_rng(derive_seed(cfg.seed, kViews));

  StepSettings settings;
  settings.kind = joint ? cfg.ssl : losses::SslKind::none;
  settings.weights = cfg.weights;
  settings.projection = {data.camera, lc.mm_per_unit, topo.root()};
  const bool with_ssl = settings.kind != losses::SslKind::none && cfg.weights.lambda_joint != 0.0;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto B = static_cast<std::size_t>(cfg.batch_size);
  const double inv_unit = 1.0 / lc.mm_per_unit;

  TrainReport report;
  ad::Tensor<float> x2d, x3d;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto te = Clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    settings.lr = cfg.lr.at(epoch);
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.lr = settings.lr;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += B) {
      const std::size_t n = std::min(B, order.size() - start);
      // Batchnorm needs at least two rows.
      if (n < 2) break;
      gather(data, std::span(order).subspan(start, n), inv_unit, x2d, x3d);
      if (cfg.flip) augment_flip(x2d, x3d, topo, cfg.flip_prob, flip_rng);
      std::vector<Eigen::Matrix3d> views;
      if (with_ssl) views = losses::sample_view_matrices(n * static_cast<std::size_t>(cfg.views_per_sample), view_rng);
      const auto ctx = nn::ForwardContext<float>::train(dropout_rng);
      StepModels<float> models{lifter, lifter_opt, disc ? &*disc : nullptr, disc_opt ? &*disc_opt : nullptr};
      const StepLosses l = joint_step(models, x2d, x3d, views, settings, topo, ctx, ctx);
      if (observer) observer(epoch + 1, batches, l);
      rec.fsl += l.fsl;
      rec.ssl += l.ssl;
      rec.disc += l.disc;
      rec.combined += l.combined;
      ++batches;
    }
    if (batches > 0) {
      const double inv = 1.0 / static_cast<double>(batches);
      rec.fsl *= inv;
      rec.ssl *= inv;
      rec.disc *= inv;
      rec.combined *= inv;
    }
    rec.seconds = seconds_since(te);
    report.epochs.push_back(rec);
  }

  std::vector<std::pair<std::string, ad::Tensor<float>>> extra;
  std::map<std::string, std::string> meta;
  meta["train.epochs"] = std::to_string(cfg.epochs);
  meta["train.seed"] = std::to_string(cfg.seed);
  meta["train.batch_size"] = std::to_string(cfg.batch_size);
  meta["train.samples"] = std::to_string(data.size());
  if (cfg.save_optimizer) {
    for (auto& [name, t] : lifter_opt.export_state()) extra.emplace_back("adam/" + name, std::move(t));
    meta["adam.lifter.steps"] = std::to_string(lifter_opt.steps());
    if (disc_opt) {
      for (auto& [name, t] : disc_opt->export_state()) extra.emplace_back("adam/" + name, std::move(t));
      meta["adam.disc.steps"] = std::to_string(disc_opt->steps());
    }
  }
  TrainResult result{nn::ModelBundle{std::move(lifter), std::move(disc), topo, data.camera,
                                     std::string(losses::to_string(settings.kind)), std::move(meta),
                                     std::move(extra)},
                     std::move(report)};
  result.report.wall_seconds = seconds_since(t0);
  return result;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (batch_size < 2) throw ConfigError("train.batch_size must be >= 2 (batchnorm)");
  if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) throw ConfigError("train.flip_prob must lie in [0,1]");
  if (views_per_sample < 1) throw ConfigError("train.views_per_sample must be >= 1");
  lr.validate();
  adam.validate();
  weights.validate();
  lifter.validate();
  disc.validate();
}

double coordinate_rms(const synth::Dataset& data) {
  double ss = 0.0;
  std::size_t n = 0;
  for (const auto& s : data.samples) {
    for (float v : s.pose3d) ss += static_cast<double>(v) * v;
    n += s.pose3d.size();
  }
  const double rms = n ? std::sqrt(ss / static_cast<double>(n)) : 0.0;
  if (!(rms > 0.0)) throw ConfigError("dataset 3D coordinates are all zero");
  return rms;
}

void augment_flip(ad::Tensor<float>& x2d, ad::Tensor<float>& x3d, const geom::SkeletonTopology& topo, double prob,
                  Rng& rng) {
  if (x2d.rows() != x3d.rows()) throw ShapeError("augment_flip: 2D and 3D batches differ in size");
  const auto J = static_cast<std::size_t>(topo.joints());
  for (std::size_t r = 0; r < x2d.rows(); ++r) {
    if (!rng.bernoulli(prob)) continue;
    for (auto [t, d] : {std::pair{&x2d, std::size_t{2}}, std::pair{&x3d, std::size_t{3}}}) {
      std::vector<float> row(t->data().begin() + static_cast<std::ptrdiff_t>(r * d * J),
                             t->data().begin() + static_cast<std::ptrdiff_t>((r + 1) * d * J));
      for (std::size_t j = 0; j < J; ++j) {
        const auto m = static_cast<std::size_t>(topo.mirror(static_cast<int>(j)));
        for (std::size_t c = 0; c < d; ++c) {
          const float v = row[m * d + c];
          t->at(r, j * d + c) = c == 0 ? -v : v;
        }
      }
    }
  }
}

TrainResult train_baseline(const synth::Dataset& data, TrainConfig config, const StepObserver& observer) {
  config.ssl = losses::SslKind::none;
  return run(data, config, false, observer);
}

TrainResult train_joint(const synth::Dataset& data, TrainConfig config, const StepObserver& observer) {
  if (config.ssl == losses::SslKind::none) throw ConfigError("joint training needs ssl = adversary or cycle");
  return run(data, config, true, observer);
}

TrainResult train(const synth::Dataset& data, const TrainConfig& config, const StepObserver& observer) {
  return config.ssl == losses::SslKind::none ? train_baseline(data, config, observer)
                                             : train_joint(data, config, observer);
}

void write_metrics_log(const std::filesystem::path& path, const TrainReport& report) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "epoch\tlr\tfsl\tssl\tdisc\n";
  char buf[160];
  for (const auto& e : report.epochs) {
    std::snprintf(buf, sizeof buf, "%d\t%.6g\t%.9g\t%.9g\t%.9g\n", e.epoch, e.lr, e.fsl, e.ssl, e.disc);
    os << buf;
  }
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace iso::train
