#include <benchmark/benchmark.h>

#include "iso/autodiff/ops.hpp"
#include "iso/eval/metrics.hpp"
#include "iso/geometry/alignment.hpp"
#include "iso/nn/lifter.hpp"
#include "iso/synthdata/generator.hpp"

using namespace iso;

namespace {

template <typename T>
ad::Tensor<T> noise(ad::Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  ad::Tensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<T>(rng.normal());
  return t;
}

void BM_LinearForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = noise<float>({64, n}, 1);
  auto w = noise<float>({n, n}, 2), b = noise<float>({n}, 3);
  w.set_requires_grad(true);
  b.set_requires_grad(true);
  for (auto _ : state) {
    ad::Tape<float> tape;
    tape.backward(ad::sum_squares(ad::linear(tape.constant(x), tape.leaf(w), tape.leaf(b))));
    w.clear_grad();
    b.clear_grad();
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_LinearForwardBackward)->Arg(128)->Arg(1024);

void BM_LifterPredict(benchmark::State& state) {
  nn::LifterConfig c;
  c.width = static_cast<int>(state.range(0));
  const nn::Lifter<float> lifter(c, 1);
  const auto x = noise<float>({2, 32}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(lifter.predict_mm(x));
}
BENCHMARK(BM_LifterPredict)->Arg(128)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_Procrustes(benchmark::State& state) {
  const auto cfg = synth::DistributionConfig::standard16();
  const auto topo = geom::SkeletonTopology::default16();
  Rng rng(5);
  const auto gt = synth::sample_pose3d(cfg, topo, rng);
  const geom::Pose3D pred = 1.1 * synth::sample_pose3d(cfg, topo, rng);
  for (auto _ : state) benchmark::DoNotOptimize(geom::procrustes_align(pred, gt));
}
BENCHMARK(BM_Procrustes);

void BM_EvaluatePA(benchmark::State& state) {
  auto cfg = synth::DistributionConfig::desk_shift_target();
  cfg.samples = 1000;
  const auto ds = synth::make_dataset(cfg, {});
  std::vector<geom::Pose3D> gts, preds;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    gts.push_back(ds.pose3d(i));
    preds.push_back(ds.pose3d((i + 1) % ds.size()));
  }
  for (auto _ : state) benchmark::DoNotOptimize(eval::evaluate(preds, gts, eval::Protocol::pa));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_EvaluatePA)->Unit(benchmark::kMillisecond);

void BM_MakeDataset(benchmark::State& state) {
  auto cfg = synth::DistributionConfig::desk_shift_source();
  cfg.samples = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(synth::make_dataset(cfg, {}));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_MakeDataset)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
