#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include <Eigen/Geometry>

#include "iso/eval/metrics.hpp"
#include "iso/eval/report.hpp"
#include "iso/geometry/transforms.hpp"
#include "iso/synthdata/generator.hpp"
#include "support.hpp"

using namespace iso;
using eval::Protocol;
using geom::Pose3D;

namespace {

const geom::SkeletonTopology& topo() {
  static const auto t = geom::SkeletonTopology::default16();
  return t;
}

Pose3D offset_pose(int joints, int which, double dist) {
  Pose3D p = Pose3D::Zero(joints, 3);
  p(which, 0) = dist;
  return p;
}

Eigen::Matrix3d rotation(double angle, const Eigen::Vector3d& axis) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

Pose3D turn(const Pose3D& p, const Eigen::Matrix3d& R) { return p * R.transpose(); }

std::vector<Pose3D> random_set(std::size_t n, std::uint64_t seed, double scale = 300.0) {
  Rng rng(seed);
  std::vector<Pose3D> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(test::random_pose(16, rng, scale));
  return out;
}

}  // namespace

TEST(Mpjpe, Examples) {
  const Pose3D a = Pose3D::Zero(1, 3);
  Pose3D b(1, 3);
  b << 3, 4, 0;
  EXPECT_DOUBLE_EQ(eval::mpjpe(a, a), 0.0);
  EXPECT_DOUBLE_EQ(eval::mpjpe(b, a), 5.0);
  Pose3D two = Pose3D::Zero(2, 3);
  two(0, 1) = 10.0;
  two(1, 2) = -30.0;
  EXPECT_DOUBLE_EQ(eval::mpjpe(two, Pose3D::Zero(2, 3)), 20.0);
  EXPECT_THROW(eval::mpjpe(a, two), ShapeError);
}

TEST(Pck, ExamplesAndInclusiveBoundary) {
  const Pose3D gt = Pose3D::Zero(16, 3);
  EXPECT_DOUBLE_EQ(eval::pck(gt, gt), 100.0);
  EXPECT_DOUBLE_EQ(eval::pck(offset_pose(16, 4, 200.0), gt), 93.75);
  EXPECT_DOUBLE_EQ(eval::pck(offset_pose(16, 4, 150.0), gt), 100.0);
  EXPECT_DOUBLE_EQ(eval::pck(offset_pose(16, 4, 150.0 + 1e-9), gt), 93.75);
  EXPECT_THROW(eval::pck(gt, Pose3D::Zero(15, 3)), ShapeError);
}

TEST(Auc, ThresholdGridAndExamples) {
  const auto t = eval::auc_thresholds();
  EXPECT_EQ(t.front(), 5.0);
  EXPECT_EQ(t.back(), 150.0);
  const Pose3D gt = Pose3D::Zero(4, 3);
  EXPECT_DOUBLE_EQ(eval::auc(gt, gt), 100.0);
  Pose3D all100 = Pose3D::Zero(4, 3);
  all100.col(1).setConstant(100.0);
  int passing = 0;
  for (int k = 1; k <= 30; ++k) passing += 5.0 * k >= 100.0;
  EXPECT_NEAR(eval::auc(all100, gt), 100.0 * passing / 30.0, 1e-12);
  EXPECT_NEAR(eval::auc(all100, gt), 36.6666666667, 1e-9);
  Pose3D far = Pose3D::Zero(4, 3);
  far.col(2).setConstant(151.0);
  EXPECT_EQ(eval::auc(far, gt), 0.0);
}

TEST(Auc, NeverExceedsPck) {
  const auto preds = random_set(200, 1, 200.0), gts = random_set(200, 2, 200.0);
  for (std::size_t i = 0; i < preds.size(); ++i) EXPECT_LE(eval::auc(preds[i], gts[i]), eval::pck(preds[i], gts[i]));
}

TEST(Protocols, ScaledPredictionRecoveredByGsAndPa) {
  const auto gts = random_set(20, 3);
  std::vector<Pose3D> preds;
  for (const auto& g : gts) preds.push_back(0.7 * g);
  EXPECT_GT(eval::evaluate(preds, gts, Protocol::us).mpjpe, 1.0);
  EXPECT_NEAR(eval::evaluate(preds, gts, Protocol::gs).mpjpe, 0.0, 1e-9);
  EXPECT_NEAR(eval::evaluate(preds, gts, Protocol::pa).mpjpe, 0.0, 1e-8);
  EXPECT_DOUBLE_EQ(eval::evaluate(preds, gts, Protocol::gs).pck, 100.0);
}

TEST(Protocols, RotatedPredictionRecoveredOnlyByPa) {
  const auto gts = random_set(20, 4);
  const Eigen::Matrix3d R = rotation(1.1, {0.3, -0.8, 0.5});
  std::vector<Pose3D> preds;
  for (const auto& g : gts) preds.push_back(turn(g, R));
  EXPECT_GT(eval::evaluate(preds, gts, Protocol::us).mpjpe, 1.0);
  EXPECT_GT(eval::evaluate(preds, gts, Protocol::gs).mpjpe, 1.0);
  EXPECT_NEAR(eval::evaluate(preds, gts, Protocol::pa).mpjpe, 0.0, 1e-8);
}

// The aligners minimise squared error, so the superset ordering is exact for RMS
// joint error on every sample. Mean joint distance can invert by a fraction of a
// millimetre when the optimal scale is near 1; it is checked pooled instead.
TEST(Protocols, OrderingHoldsPerSample) {
  auto rms = [](const Pose3D& a, const Pose3D& b) { return std::sqrt((a - b).rowwise().squaredNorm().mean()); };
  const auto preds = random_set(300, 5), gts = random_set(300, 6);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double us = rms(eval::align(preds[i], gts[i], Protocol::us), gts[i]);
    const double gs = rms(eval::align(preds[i], gts[i], Protocol::gs), gts[i]);
    const double pa = rms(eval::align(preds[i], gts[i], Protocol::pa), gts[i]);
    EXPECT_LE(gs, us + 1e-9) << i;
    EXPECT_LE(pa, gs + 1e-9) << i;
  }
  Rng rng(16);
  std::vector<Pose3D> noisy;
  for (const auto& g : gts) {
    const Eigen::Matrix3d R = rotation(rng.uniform(-0.3, 0.3), {rng.normal(), rng.normal(), rng.normal()});
    Pose3D p = rng.uniform(0.8, 1.2) * turn(g, R);
    for (Eigen::Index k = 0; k < p.size(); ++k) p.data()[k] += rng.normal(0.0, 20.0);
    noisy.push_back(p);
  }
  const double us = eval::evaluate(noisy, gts, Protocol::us).mpjpe;
  const double gs = eval::evaluate(noisy, gts, Protocol::gs).mpjpe;
  const double pa = eval::evaluate(noisy, gts, Protocol::pa).mpjpe;
  EXPECT_LT(gs, us);
  EXPECT_LT(pa, gs);
}

TEST(Protocols, RigidAndSimilarityInvariance) {
  const auto preds = random_set(50, 7), gts = random_set(50, 8);
  const Eigen::Matrix3d R = rotation(2.2, {-0.4, 0.9, 0.1});
  std::vector<Pose3D> rp, rg, sim;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    rp.push_back(turn(preds[i], R));
    rg.push_back(turn(gts[i], R));
    Pose3D s = 1.7 * turn(preds[i], R);
    s.rowwise() += Eigen::RowVector3d(12.0, -40.0, 5.0);
    sim.push_back(s);
  }
  const auto a = eval::evaluate(preds, gts, Protocol::us), b = eval::evaluate(rp, rg, Protocol::us);
  EXPECT_NEAR(a.mpjpe, b.mpjpe, 1e-9);
  EXPECT_DOUBLE_EQ(a.pck, b.pck);
  EXPECT_NEAR(a.auc, b.auc, 1e-9);
  const auto p1 = eval::evaluate(preds, gts, Protocol::pa), p2 = eval::evaluate(sim, gts, Protocol::pa);
  EXPECT_NEAR(p1.mpjpe, p2.mpjpe, 1e-7);
  EXPECT_NEAR(p1.pck, p2.pck, 1e-9);
}

TEST(Protocols, ParseAndName) {
  EXPECT_EQ(eval::parse_protocol("GS"), Protocol::gs);
  EXPECT_EQ(eval::parse_protocol("pa"), Protocol::pa);
  EXPECT_EQ(eval::to_string(Protocol::us), "us");
  EXPECT_THROW(eval::parse_protocol("xy"), ConfigError);
}

TEST(PerPart, PerfectAndIsolatedWristError) {
  const auto gts = random_set(10, 9);
  auto parts = eval::per_part_pck(gts, gts, topo());
  for (double v : parts) EXPECT_EQ(v, 100.0);
  auto preds = gts;
  for (auto& p : preds)
    for (int j : topo().joints_in(geom::Part::wrist)) p(j, 0) += 400.0;
  parts = eval::per_part_pck(preds, gts, topo());
  for (int k = 0; k < geom::kPartCount; ++k)
    EXPECT_EQ(parts[std::size_t(k)], k == int(geom::Part::wrist) ? 0.0 : 100.0) << geom::part_name(geom::Part(k));
}

TEST(PerPart, WeightedMeanEqualsPooledPck) {
  const auto preds = random_set(100, 10, 150.0), gts = random_set(100, 11, 150.0);
  const auto parts = eval::per_part_pck(preds, gts, topo());
  double weighted = 0.0, joints = 0.0, hits = 0.0, covered = 0.0;
  for (int k = 0; k < geom::kPartCount; ++k) {
    const auto n = double(topo().joints_in(geom::Part(k)).size());
    weighted += parts[std::size_t(k)] * n;
    joints += n;
  }
  for (std::size_t i = 0; i < preds.size(); ++i)
    for (int j = 0; j < 16; ++j) {
      if (topo().part_of(j) < 0) continue;
      covered += 1;
      hits += (preds[i].row(j) - gts[i].row(j)).norm() <= 150.0;
    }
  EXPECT_NEAR(weighted / joints, 100.0 * hits / covered, 1e-9);
}

TEST(PerPart, EmptyGroupRejected) {
  geom::SkeletonTopology tiny({"pelvis", "a"}, {0, 0}, {0, 1}, {0, 0});
  const std::vector<Pose3D> p{Pose3D::Zero(2, 3)};
  EXPECT_THROW(eval::per_part_pck(p, p, tiny), ConfigError);
}

TEST(LimbReport, GroundTruthMassInConfiguredBin) {
  auto c = synth::DistributionConfig::standard16();
  c.samples = 500;
  const auto ds = synth::make_dataset(c, {});
  std::vector<Pose3D> poses;
  for (std::size_t i = 0; i < ds.size(); ++i) poses.push_back(ds.pose3d(i));
  const auto rep = eval::limb_ratio_report(poses, topo());
  const std::array<double, 5> want{1.3, 1.3, 1.3, 1.3, 1.0};
  for (std::size_t k = 0; k < 5; ++k) {
    const auto& h = rep.ratios[k];
    EXPECT_EQ(h.total, 500u);
    EXPECT_EQ(h.counts[h.bin_of(want[k])], 500u) << k;
    EXPECT_NEAR(h.mean, want[k], 1e-5);
    EXPECT_LT(h.stddev, 1e-5);
  }
  EXPECT_EQ(rep.ratios[0].counts, rep.ratios[1].counts);
  EXPECT_EQ(rep.ratios[2].counts, rep.ratios[3].counts);
}

TEST(LimbReport, MirroredPosesSwapSides) {
  const auto poses = random_set(300, 12);
  std::vector<Pose3D> flipped;
  for (const auto& p : poses) flipped.push_back(geom::hflip(p, topo()));
  const auto a = eval::limb_ratio_report(poses, topo()), b = eval::limb_ratio_report(flipped, topo());
  EXPECT_EQ(a.ratios[0].counts, b.ratios[1].counts);
  EXPECT_EQ(a.ratios[1].counts, b.ratios[0].counts);
  EXPECT_EQ(a.ratios[2].counts, b.ratios[3].counts);
  EXPECT_EQ(a.ratios[4].counts, b.ratios[4].counts);
}

TEST(Histogram, BinsAndClamping) {
  const std::vector<double> v{0.0, 0.5, 0.99, 1.0, 5.0, -3.0};
  const auto h = eval::make_histogram(v, 4, 0.0, 2.0);
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{2, 2, 1, 1}));
  EXPECT_EQ(h.total, 6u);
  EXPECT_NEAR(h.mean, (0.0 + 0.5 + 0.99 + 1.0 + 5.0 - 3.0) / 6.0, 1e-12);
}

TEST(Report, FullEvaluationCarriesExtras) {
  const auto preds = random_set(30, 13), gts = random_set(30, 14);
  const auto r = eval::evaluate_protocol(preds, gts, Protocol::gs, topo(), true);
  ASSERT_TRUE(r.pa_mpjpe && r.parts && r.limbs);
  EXPECT_NEAR(*r.pa_mpjpe, eval::evaluate(preds, gts, Protocol::pa).mpjpe, 1e-9);
  EXPECT_GE(r.metrics.pck, 0.0);
  EXPECT_LE(r.metrics.pck, 100.0);
  std::ostringstream os;
  eval::write_eval_report(os, r);
  EXPECT_NE(os.str().find("PA-MPJPE"), std::string::npos);
  EXPECT_NE(os.str().find("Wrist"), std::string::npos);
  EXPECT_FALSE(eval::evaluate_protocol(preds, gts, Protocol::us, topo()).parts.has_value());
}

TEST(Report, MethodAndNoiseTables) {
  std::ostringstream os;
  eval::write_method_table(os, {{"Baseline", {37.8, 14.25, 190.5}, std::nullopt}, {"Online", {40.0, 15.0, 180.0}, 0.01}},
                           true);
  EXPECT_EQ(os.str(), "method\tPCK\tAUC\tMPJPE\tTime[s]\nBaseline\t37.80\t14.25\t190.50\t-\n"
                      "Online\t40.00\t15.00\t180.00\t0.010000\n");
  std::ostringstream ns;
  eval::write_noise_table(ns, {{10.0, "Joint", {1, 2, 3}}});
  EXPECT_EQ(ns.str(), "sigma\tmethod\tPCK\tAUC\tMPJPE\n10.0\tJoint\t1.00\t2.00\t3.00\n");
  std::ostringstream ss;
  eval::write_sweep_table(ss, {{"alpha", 2e-5, "online", {1, 2, 3}}});
  EXPECT_EQ(ss.str(), "param\tvalue\tmode\tPCK\tAUC\tMPJPE\nalpha\t2e-05\tonline\t1.00\t2.00\t3.00\n");
}

TEST(Report, LimbTableRowsPerRatio) {
  const auto rep = eval::limb_ratio_report(random_set(20, 15), topo(), 4, 0.5, 2.5);
  std::ostringstream os;
  eval::write_limb_table(os, {{"GT", rep}});
  std::istringstream in(os.str());
  std::string line;
  int rows = 0;
  std::getline(in, line);
  EXPECT_EQ(line, "label\tratio\tmean\tstd\tlo\thi\tcounts");
  while (std::getline(in, line)) rows += !line.empty();
  EXPECT_EQ(rows, 5);
}

TEST(Poses, FlatRowsConvert) {
  const std::vector<std::vector<float>> rows{{1, 2, 3, 4, 5, 6}};
  const auto p = eval::to_poses(rows, 2);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0](1, 2), 6.0);
  EXPECT_THROW(eval::to_poses(rows, 3), ShapeError);
}
