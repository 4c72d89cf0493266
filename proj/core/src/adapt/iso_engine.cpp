#include "iso/adapt/iso_engine.hpp"

#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <thread>

namespace iso::adapt {
namespace {

using Clock = std::chrono::steady_clock;

void flip_row(std::span<const float> in, std::span<float> out, const geom::SkeletonTopology& topo, std::size_t d) {
  const auto J = static_cast<std::size_t>(topo.joints());
  for (std::size_t j = 0; j < J; ++j) {
    const auto m = static_cast<std::size_t>(topo.mirror(static_cast<int>(j)));
    for (std::size_t c = 0; c < d; ++c) out[j * d + c] = c == 0 ? -in[m * d + c] : in[m * d + c];
  }
}

}  // namespace

IsoMode parse_iso_mode(std::string_view s) {
  if (s == "off") return IsoMode::off;
  if (s == "vanilla") return IsoMode::vanilla;
  if (s == "online") return IsoMode::online;
  throw ConfigError("unknown iso mode '" + std::string(s) + "' (expected off, vanilla or online)");
}

std::string_view to_string(IsoMode m) {
  switch (m) {
    case IsoMode::off: return "off";
    case IsoMode::vanilla: return "vanilla";
    case IsoMode::online: return "online";
  }
  return "off";
}

void IsoConfig::validate() const {
  if (T < 0) throw ConfigError("iso.T must be >= 0");
  if (!(alpha >= 0.0)) throw ConfigError("iso.alpha must be >= 0");
  if (copies < 2) throw ConfigError("iso.copies must be >= 2");
  if (views_per_copy < 1) throw ConfigError("iso.views_per_copy must be >= 1");
  if (skip < 1) throw ConfigError("iso.skip must be >= 1");
  if (workers < 1) throw ConfigError("iso.workers must be >= 1");
  weights.validate();
  adam.validate();
}

IsoConfig IsoConfig::vanilla() { return IsoConfig{}; }

IsoConfig IsoConfig::online() {
  IsoConfig c;
  c.mode = IsoMode::online;
  c.T = 1;
  return c;
}

ad::Tensor<float> build_iso_batch(std::span<const float> x, const geom::SkeletonTopology& topo, int copies) {
  const auto width = static_cast<std::size_t>(2 * topo.joints());
  if (x.size() != width) throw ShapeError("iso batch: pose has " + std::to_string(x.size()) + " values, expected " +
                                          std::to_string(width));
  if (copies < 2) throw ConfigError("iso batch needs at least 2 copies");
  const auto n = static_cast<std::size_t>(copies);
  const std::size_t plain = (n + 1) / 2;
  ad::Tensor<float> out = ad::Tensor<float>::matrix(n, width);
  std::vector<float> flipped(width);
  flip_row(x, flipped, topo, 2);
  for (std::size_t r = 0; r < n; ++r) {
    const std::span<const float> src = r < plain ? x : std::span<const float>(flipped);
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  return out;
}

std::vector<float> predict_flip_averaged(const nn::Lifter<float>& lifter, const geom::SkeletonTopology& topo,
                                         std::span<const float> x) {
  const ad::Tensor<float> batch = build_iso_batch(x, topo, 2);
  const ad::Tensor<float> y = lifter.predict_mm(batch, nn::Head::fsl);
  const auto w = static_cast<std::size_t>(3 * topo.joints());
  std::vector<float> unflipped(w);
  flip_row(y.data().subspan(w, w), unflipped, topo, 3);
  std::vector<float> out(w);
  for (std::size_t i = 0; i < w; ++i) out[i] = 0.5f * (y[i] + unflipped[i]);
  return out;
}

IsoEngine::IsoEngine(const nn::ModelBundle& model, IsoConfig config)
    : config_(config), topology_(model.topology), camera_(model.camera), lifter_(model.lifter), disc_(model.disc) {
  config_.validate();
  if (config_.mode != IsoMode::off) {
    if (!lifter_.has_ssl_head() || !disc_ || model.ssl_kind == "none")
      throw CompatibilityError("inference-stage optimization needs a jointly trained checkpoint "
                               "(SSL head and discriminator); this one was trained with FSL only");
    kind_ = losses::parse_ssl_kind(model.ssl_kind);
  }
  lifter_init_ = nn::snapshot_params<float>(lifter_);
  if (disc_) disc_init_ = nn::snapshot_params<float>(*disc_);
  if (config_.mode != IsoMode::off) rebuild_optimizers();
}

IsoEngine::IsoEngine(const IsoEngine& other)
    : config_(other.config_),
      topology_(other.topology_),
      camera_(other.camera_),
      kind_(other.kind_),
      lifter_(other.lifter_),
      disc_(other.disc_),
      lifter_init_(other.lifter_init_),
      disc_init_(other.disc_init_) {
  if (config_.mode != IsoMode::off) rebuild_optimizers();
}

void IsoEngine::rebuild_optimizers() {
  nn::ParamList<float> params;
  lifter_.visit_tensors(
      [&](const std::string& name, ad::Tensor<float>& t, nn::TensorRole role) {
        const bool bn_affine = role == nn::TensorRole::bn_affine;
        if (!nn::is_trainable(role) || (bn_affine && config_.freeze_bn)) return;
        params.push_back({name, &t, role});
      },
      nn::kShared | nn::kSslHead);
  lifter_opt_.emplace(std::move(params), config_.adam);
  disc_opt_.emplace(nn::collect_params<float>(*disc_, true), config_.adam);
}

void IsoEngine::reset() {
  lifter_init_.restore(lifter_);
  if (disc_) disc_init_.restore(*disc_);
  if (lifter_opt_) lifter_opt_->reset();
  if (disc_opt_) disc_opt_->reset();
}

bool IsoEngine::should_adapt(std::size_t index) const {
  return config_.mode != IsoMode::off && config_.T > 0 && config_.alpha > 0.0 &&
         index % static_cast<std::size_t>(config_.skip) == 0;
}

std::uint64_t IsoEngine::state_hash() const {
  std::uint64_t h = nn::params_hash<float>(lifter_);
  if (disc_) h ^= mix_seed(nn::params_hash<float>(*disc_));
  return h;
}

void IsoEngine::adapt(std::span<const float> x, std::uint64_t seed) {
  Rng rng(seed);
  const ad::Tensor<float> batch = build_iso_batch(x, topology_, config_.copies);
  train::StepSettings settings;
  settings.kind = kind_;
  settings.weights = config_.weights;
  settings.projection = {camera_, lifter_.config().mm_per_unit, topology_.root()};
  settings.lr = config_.alpha;
  const auto ctx = nn::ForwardContext<float>::adapt(config_.freeze_bn);
  const auto disc_ctx = nn::ForwardContext<float>::eval();
  const auto views_per_iter =
      static_cast<std::size_t>(config_.copies) * static_cast<std::size_t>(config_.views_per_copy);
  for (int t = 0; t < config_.T; ++t) {
    const auto views = losses::sample_view_matrices(views_per_iter, rng);
    train::StepModels<float> models{lifter_, *lifter_opt_, &*disc_, &*disc_opt_};
    train::ssl_step(models, batch, views, settings, ctx, disc_ctx);
  }
  ++adaptations_;
}

std::vector<float> IsoEngine::infer_one(std::span<const float> x, std::size_t index, bool* adapted) {
  const bool run = should_adapt(index);
  if (adapted) *adapted = run;
  if (config_.mode == IsoMode::vanilla) {
    std::vector<float> out;
    if (run) {
      // Seeded from the content so results do not depend on stream position.
      const std::uint64_t seed = derive_seed(config_.seed, nn::fnv1a(x.data(), x.size_bytes()));
      adapt(x, seed);
      out = predict_flip_averaged(lifter_, topology_, x);
      reset();
    } else {
      out = predict_flip_averaged(lifter_, topology_, x);
    }
    return out;
  }
  if (run) adapt(x, derive_seed(config_.seed, index));
  return predict_flip_averaged(lifter_, topology_, x);
}

SequenceResult IsoEngine::infer_sequence(const std::vector<std::vector<float>>& xs) {
  const auto t0 = Clock::now();
  SequenceResult res;
  res.predictions.resize(xs.size());
  res.timing.resize(xs.size());
  auto one = [&](IsoEngine& eng, std::size_t i) {
    const auto ts = Clock::now();
    bool adapted = false;
    res.predictions[i] = eng.infer_one(xs[i], i, &adapted);
    res.timing[i] = {i, adapted, std::chrono::duration<double>(Clock::now() - ts).count()};
  };
  const auto workers = static_cast<std::size_t>(config_.workers);
  if (config_.mode != IsoMode::online && workers > 1 && xs.size() > 1) {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::size_t> counts(workers, 0);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          IsoEngine local(*this);
          for (std::size_t i = w; i < xs.size(); i += workers) one(local, i);
          counts[w] = local.adaptations_;
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    for (auto c : counts) adaptations_ += c;
  } else {
    for (std::size_t i = 0; i < xs.size(); ++i) one(*this, i);
  }
  for (const auto& t : res.timing) res.adaptations += t.adapted ? 1 : 0;
  res.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return res;
}

void write_timing(const std::filesystem::path& path, const std::vector<TimingRecord>& timing) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "index\tadapted\tseconds\n";
  char buf[96];
  for (const auto& t : timing) {
    std::snprintf(buf, sizeof buf, "%zu\t%d\t%.9f\n", t.index, t.adapted ? 1 : 0, t.seconds);
    os << buf;
  }
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace iso::adapt
