#include <benchmark/benchmark.h>

#include "iso/adapt/iso_engine.hpp"
#include "iso/train/trainer.hpp"

using namespace iso;

namespace {

// Untrained weights are fine here: only the cost per instance is measured.
nn::ModelBundle bundle(int width) {
  nn::LifterConfig lc;
  lc.width = width;
  nn::DiscriminatorConfig dc;
  dc.width = width;
  nn::ModelBundle m{nn::Lifter<float>(lc, 1), nn::Discriminator<float>(dc, 2),
                    geom::SkeletonTopology::default16(), geom::CameraModel{}, "cycle", {}, {}};
  return m;
}

std::vector<float> instance() {
  auto c = synth::DistributionConfig::desk_shift_target();
  c.samples = 1;
  return synth::make_dataset(c, {}).samples[0].pose2d;
}

void run_engine(benchmark::State& state, adapt::IsoConfig config) {
  const auto model = bundle(static_cast<int>(state.range(0)));
  const auto x = instance();
  adapt::IsoEngine engine(model, config);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(engine.infer_one(x, i++));
}

void BM_InferNoAdapt(benchmark::State& state) {
  adapt::IsoConfig c;
  c.mode = adapt::IsoMode::off;
  run_engine(state, c);
}
BENCHMARK(BM_InferNoAdapt)->Arg(128)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_OnlineStep(benchmark::State& state) { run_engine(state, adapt::IsoConfig::online()); }
BENCHMARK(BM_OnlineStep)->Arg(128)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_VanillaInstance(benchmark::State& state) { run_engine(state, adapt::IsoConfig::vanilla()); }
BENCHMARK(BM_VanillaInstance)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_JointTrainingBatch(benchmark::State& state) {
  auto c = synth::DistributionConfig::desk_shift_source();
  c.samples = 64;
  const auto ds = synth::make_dataset(c, {});
  train::TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 64;
  tc.lifter.width = static_cast<int>(state.range(0));
  tc.disc.width = tc.lifter.width;
  tc.ssl = losses::SslKind::cycle;
  for (auto _ : state) benchmark::DoNotOptimize(train::train_joint(ds, tc));
}
BENCHMARK(BM_JointTrainingBatch)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace
