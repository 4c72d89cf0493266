#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "iso/adapt/iso_engine.hpp"
#include "iso/geometry/transforms.hpp"
#include "iso/train/trainer.hpp"
#include "support.hpp"

using namespace iso;
using adapt::IsoConfig;
using adapt::IsoEngine;
using adapt::IsoMode;

namespace {

const synth::Dataset& stream_data() {
  static const auto ds = [] {
    auto c = synth::DistributionConfig::desk_shift_target();
    c.samples = 120;
    c.seed = 61;
    return synth::make_dataset(c, {});
  }();
  return ds;
}

const nn::ModelBundle& trained(losses::SslKind kind = losses::SslKind::cycle) {
  static std::map<losses::SslKind, nn::ModelBundle> cache;
  auto it = cache.find(kind);
  if (it == cache.end()) {
    auto c = synth::DistributionConfig::desk_shift_source();
    c.samples = 256;
    c.seed = 62;
    train::TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 32;
    tc.lifter.width = 32;
    tc.lifter.shared_blocks = 1;
    tc.disc.width = 32;
    tc.disc.blocks = 1;
    tc.ssl = kind;
    tc.seed = 63;
    it = cache.emplace(kind, train::train_joint(synth::make_dataset(c, {}), tc).model).first;
  }
  return it->second;
}

std::vector<std::vector<float>> inputs(std::size_t n) {
  std::vector<std::vector<float>> xs;
  for (std::size_t i = 0; i < n; ++i) xs.push_back(stream_data().samples[i].pose2d);
  return xs;
}

using Mutator = void (*)(IsoConfig&);

IsoConfig quick(IsoConfig c) {
  c.copies = 8;
  c.alpha = 1e-3;
  return c;
}

template <typename Net>
std::uint64_t group_hash(const Net& net, unsigned groups) {
  std::uint64_t h = 1469598103934665603ull;
  net.visit_tensors(
      [&](const std::string&, const ad::Tensor<float>& t, nn::TensorRole) {
        h = nn::fnv1a(t.data().data(), t.data().size_bytes(), h);
      },
      groups);
  return h;
}

std::uint64_t bn_hash(const nn::Lifter<float>& net) {
  std::uint64_t h = 1469598103934665603ull;
  net.visit_tensors([&](const std::string&, const ad::Tensor<float>& t, nn::TensorRole role) {
    if (role == nn::TensorRole::bn_affine || role == nn::TensorRole::bn_stat)
      h = nn::fnv1a(t.data().data(), t.data().size_bytes(), h);
  });
  return h;
}

}  // namespace

TEST(IsoBatch, TwoCopiesArePoseAndMirror) {
  const auto& topo = stream_data().topology;
  const auto x = stream_data().samples[0].pose2d;
  const auto b = adapt::build_iso_batch(x, topo, 2);
  ASSERT_EQ(b.shape(), (ad::Shape{2, 32}));
  const geom::Pose2D flipped = geom::hflip(stream_data().pose2d(0), topo);
  for (int j = 0; j < 16; ++j)
    for (int c = 0; c < 2; ++c) {
      EXPECT_EQ(b.at(0, std::size_t(2 * j + c)), x[std::size_t(2 * j + c)]);
      EXPECT_EQ(b.at(1, std::size_t(2 * j + c)), float(flipped(j, c)));
    }
}

TEST(IsoBatch, HalfCopiesHalfMirroredAndNormalized) {
  const auto& topo = stream_data().topology;
  const auto b = adapt::build_iso_batch(stream_data().samples[3].pose2d, topo, 32);
  ASSERT_EQ(b.rows(), 32u);
  for (std::size_t r = 0; r < 32; ++r) {
    geom::Pose2D p(16, 2);
    for (int j = 0; j < 16; ++j)
      for (int c = 0; c < 2; ++c) p(j, c) = b.at(r, std::size_t(2 * j + c));
    double m = 0;
    for (int j = 1; j < 16; ++j) m += p.row(j).norm();
    EXPECT_NEAR(m / 15.0, 1.0, 1e-5);
    for (std::size_t c = 0; c < 32; ++c) EXPECT_EQ(b.at(r, c), b.at(r < 16 ? 0 : 16, c));
  }
  EXPECT_THROW(adapt::build_iso_batch(std::vector<float>(30), topo, 4), ShapeError);
  EXPECT_THROW(adapt::build_iso_batch(stream_data().samples[0].pose2d, topo, 1), ConfigError);
}

TEST(IsoConfigChecks, DefaultsAndValidation) {
  const auto v = IsoConfig::vanilla(), o = IsoConfig::online();
  EXPECT_EQ(v.T, 10);
  EXPECT_EQ(o.T, 1);
  EXPECT_EQ(v.alpha, 2e-5);
  EXPECT_EQ(v.copies, 32);
  EXPECT_TRUE(v.freeze_bn);
  EXPECT_EQ(o.mode, IsoMode::online);
  const std::initializer_list<Mutator> invalid{[](IsoConfig& c) { c.T = -1; }, [](IsoConfig& c) { c.alpha = -1e-5; },
                                               [](IsoConfig& c) { c.copies = 1; }, [](IsoConfig& c) { c.skip = 0; }};
  for (Mutator bad : invalid) {
    auto c = IsoConfig::vanilla();
    bad(c);
    EXPECT_THROW(c.validate(), ConfigError);
  }
  EXPECT_EQ(adapt::parse_iso_mode("online"), IsoMode::online);
  EXPECT_EQ(adapt::to_string(IsoMode::vanilla), "vanilla");
  EXPECT_THROW(adapt::parse_iso_mode("sometimes"), ConfigError);
}

TEST(IsoEngineTest, BaselineCheckpointRejected) {
  auto c = synth::DistributionConfig::desk_shift_source();
  c.samples = 64;
  train::TrainConfig tc;
  tc.epochs = 1;
  tc.lifter.width = 16;
  tc.lifter.shared_blocks = 1;
  const auto base = train::train_baseline(synth::make_dataset(c, {}), tc).model;
  EXPECT_THROW(IsoEngine(base, IsoConfig::online()), CompatibilityError);
  auto off = IsoConfig::online();
  off.mode = IsoMode::off;
  EXPECT_NO_THROW(IsoEngine(base, off));
}

TEST(IsoEngineTest, NoOpAdaptationMatchesJointModel) {
  const auto& m = trained();
  const auto xs = inputs(10);
  const std::initializer_list<Mutator> noops{[](IsoConfig& c) { c.T = 0; }, [](IsoConfig& c) { c.alpha = 0.0; },
                                             [](IsoConfig& c) { c.mode = IsoMode::off; }};
  for (Mutator mutate : noops) {
    for (auto base : {IsoConfig::vanilla(), IsoConfig::online()}) {
      auto cfg = quick(base);
      mutate(cfg);
      IsoEngine eng(m, cfg);
      const auto res = eng.infer_sequence(xs);
      EXPECT_EQ(res.adaptations, 0u);
      for (std::size_t i = 0; i < xs.size(); ++i)
        EXPECT_EQ(res.predictions[i], adapt::predict_flip_averaged(m.lifter, m.topology, xs[i]));
    }
  }
}

TEST(IsoEngineTest, FlipAveragedPredictionIsMirrorSymmetric) {
  const auto& m = trained();
  const auto x = stream_data().samples[5].pose2d;
  const geom::Pose2D xf = geom::hflip(stream_data().pose2d(5), m.topology);
  std::vector<float> flipped(32);
  for (int j = 0; j < 16; ++j)
    for (int c = 0; c < 2; ++c) flipped[std::size_t(2 * j + c)] = float(xf(j, c));
  const auto a = adapt::predict_flip_averaged(m.lifter, m.topology, x);
  const auto b = adapt::predict_flip_averaged(m.lifter, m.topology, flipped);
  geom::Pose3D pa(16, 3), pb(16, 3);
  for (int j = 0; j < 16; ++j)
    for (int c = 0; c < 3; ++c) pa(j, c) = a[std::size_t(3 * j + c)], pb(j, c) = b[std::size_t(3 * j + c)];
  EXPECT_LT(test::max_abs_diff(geom::hflip(pa, m.topology), pb), 1e-3);
}

TEST(IsoEngineTest, VanillaLeavesNoTrace) {
  const auto& m = trained();
  IsoEngine eng(m, quick(IsoConfig::vanilla()));
  const auto before = eng.state_hash();
  const auto x = stream_data().samples[0].pose2d;
  const auto reference = adapt::predict_flip_averaged(m.lifter, m.topology, x);
  bool adapted = false;
  const auto y = eng.infer_one(x, 0, &adapted);
  EXPECT_TRUE(adapted);
  EXPECT_NE(y, reference);
  EXPECT_EQ(eng.state_hash(), before);
  EXPECT_EQ(adapt::predict_flip_averaged(eng.lifter(), m.topology, x), reference);
  EXPECT_EQ(eng.infer_one(x, 7), y);
}

TEST(IsoEngineTest, FslHeadAndBatchnormNeverChange) {
  const auto& m = trained();
  for (auto base : {IsoConfig::vanilla(), IsoConfig::online()}) {
    IsoEngine eng(m, quick(base));
    const auto fsl = group_hash(eng.lifter(), nn::kFslHead);
    const auto bn = bn_hash(eng.lifter());
    const auto shared = group_hash(eng.lifter(), nn::kShared);
    for (std::size_t i = 0; i < 5; ++i) eng.infer_one(stream_data().samples[i].pose2d, i);
    EXPECT_EQ(group_hash(eng.lifter(), nn::kFslHead), fsl);
    EXPECT_EQ(bn_hash(eng.lifter()), bn);
    if (base.mode == IsoMode::online) EXPECT_NE(group_hash(eng.lifter(), nn::kShared), shared);
  }
}

TEST(IsoEngineTest, UnfrozenBatchnormAffineMayAdapt) {
  auto cfg = quick(IsoConfig::online());
  cfg.freeze_bn = false;
  IsoEngine eng(trained(), cfg);
  std::uint64_t affine = 0, stats = 0;
  auto hashes = [&] {
    std::uint64_t a = 1, s = 1;
    eng.lifter().visit_tensors([&](const std::string&, const ad::Tensor<float>& t, nn::TensorRole role) {
      if (role == nn::TensorRole::bn_affine) a = nn::fnv1a(t.data().data(), t.data().size_bytes(), a);
      if (role == nn::TensorRole::bn_stat) s = nn::fnv1a(t.data().data(), t.data().size_bytes(), s);
    });
    return std::pair(a, s);
  };
  std::tie(affine, stats) = hashes();
  eng.infer_one(stream_data().samples[0].pose2d, 0);
  EXPECT_NE(hashes().first, affine);
  EXPECT_EQ(hashes().second, stats);
}

TEST(IsoEngineTest, OnlineAppliesExactlyOneStepPerInstance) {
  const auto& m = trained();
  const auto cfg = quick(IsoConfig::online());
  IsoEngine eng(m, cfg);
  const auto x = stream_data().samples[0].pose2d;
  eng.infer_one(x, 0);

  // Independent replica of a single inference-stage update.
  nn::Lifter<float> lifter = m.lifter;
  nn::Discriminator<float> disc = *m.disc;
  nn::ParamList<float> params;
  lifter.visit_tensors(
      [&](const std::string& name, ad::Tensor<float>& t, nn::TensorRole role) {
        if (role == nn::TensorRole::weight || role == nn::TensorRole::bias) params.push_back({name, &t, role});
      },
      nn::kShared | nn::kSslHead);
  optim::Adam<float> lopt(params, cfg.adam);
  optim::Adam<float> dopt(nn::collect_params<float>(disc, true), cfg.adam);
  Rng rng(derive_seed(cfg.seed, 0));
  const auto views = losses::sample_view_matrices(std::size_t(cfg.copies), rng);
  train::StepSettings s;
  s.kind = losses::parse_ssl_kind(m.ssl_kind);
  s.weights = cfg.weights;
  s.projection = {m.camera, lifter.config().mm_per_unit, 0};
  s.lr = cfg.alpha;
  train::ssl_step<float>({lifter, lopt, &disc, &dopt}, adapt::build_iso_batch(x, m.topology, cfg.copies), views, s,
                         nn::ForwardContext<float>::adapt(true), nn::ForwardContext<float>::eval());
  EXPECT_EQ(eng.state_hash(), nn::params_hash<float>(lifter) ^ mix_seed(nn::params_hash<float>(disc)));
  EXPECT_EQ(eng.adaptations(), 1u);

  const auto h1 = eng.state_hash();
  eng.infer_one(stream_data().samples[1].pose2d, 1);
  EXPECT_NE(eng.state_hash(), h1);
  EXPECT_EQ(eng.adaptations(), 2u);
}

TEST(IsoEngineTest, OnlineStateDependsOnlyOnPrefix) {
  const auto& m = trained();
  const auto xs = inputs(8);
  IsoEngine a(m, quick(IsoConfig::online())), b(m, quick(IsoConfig::online()));
  for (std::size_t i = 0; i < 5; ++i) a.infer_one(xs[i], i);
  const auto res = b.infer_sequence(xs);
  IsoEngine c(m, quick(IsoConfig::online()));
  for (std::size_t i = 0; i < 5; ++i) c.infer_one(xs[i], i);
  EXPECT_EQ(a.state_hash(), c.state_hash());
  EXPECT_EQ(a.infer_one(xs[5], 5), res.predictions[5]);
}

TEST(IsoEngineTest, VanillaIsPermutationInvariant) {
  const auto& m = trained();
  auto xs = inputs(12);
  IsoEngine a(m, quick(IsoConfig::vanilla()));
  const auto forward = a.infer_sequence(xs);
  std::vector<std::size_t> perm(xs.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(64);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  std::vector<std::vector<float>> shuffled;
  for (auto p : perm) shuffled.push_back(xs[p]);
  IsoEngine b(m, quick(IsoConfig::vanilla()));
  const auto back = b.infer_sequence(shuffled);
  for (std::size_t i = 0; i < perm.size(); ++i) EXPECT_EQ(back.predictions[i], forward.predictions[perm[i]]);
}

TEST(IsoEngineTest, VanillaWorkersMatchSequential) {
  const auto& m = trained();
  const auto xs = inputs(9);
  auto cfg = quick(IsoConfig::vanilla());
  cfg.T = 2;
  IsoEngine seq(m, cfg);
  cfg.workers = 3;
  IsoEngine par(m, cfg);
  const auto a = seq.infer_sequence(xs), b = par.infer_sequence(xs);
  EXPECT_EQ(a.predictions, b.predictions);
  EXPECT_EQ(b.adaptations, 9u);
  EXPECT_EQ(par.adaptations(), 9u);
}

TEST(IsoEngineTest, SkipTenOnNinetyFiveInstancesAdaptsTenTimes) {
  auto cfg = quick(IsoConfig::online());
  cfg.skip = 10;
  cfg.copies = 2;
  IsoEngine eng(trained(), cfg);
  const auto res = eng.infer_sequence(inputs(95));
  EXPECT_EQ(res.adaptations, 10u);
  for (const auto& t : res.timing) EXPECT_EQ(t.adapted, t.index % 10 == 0) << t.index;
  EXPECT_EQ(res.timing.size(), 95u);
}

TEST(IsoEngineTest, OnlineAndVanillaDivergeOnAStream) {
  const auto& m = trained();
  const auto xs = inputs(6);
  IsoEngine on(m, quick(IsoConfig::online()));
  auto vc = quick(IsoConfig::vanilla());
  vc.T = 1;
  IsoEngine va(m, vc);
  const auto a = on.infer_sequence(xs), b = va.infer_sequence(xs);
  for (std::size_t i = 1; i < xs.size(); ++i) EXPECT_NE(a.predictions[i], b.predictions[i]) << i;
}

TEST(IsoEngineTest, AdversaryCheckpointAdaptsToo) {
  const auto& m = trained(losses::SslKind::adversary);
  IsoEngine eng(m, quick(IsoConfig::online()));
  const auto h = eng.state_hash();
  eng.infer_one(stream_data().samples[0].pose2d, 0);
  EXPECT_NE(eng.state_hash(), h);
}

TEST(IsoEngineTest, TimingFileFormat) {
  const auto path = std::filesystem::temp_directory_path() / "iso_timing.tsv";
  adapt::write_timing(path, {{0, true, 0.25}, {1, false, 0.5}});
  std::ifstream in(path);
  std::string h, a, b;
  std::getline(in, h);
  std::getline(in, a);
  std::getline(in, b);
  EXPECT_EQ(h, "index\tadapted\tseconds");
  EXPECT_EQ(a, "0\t1\t0.250000000");
  EXPECT_EQ(b, "1\t0\t0.500000000");
}
