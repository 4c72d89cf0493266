#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include <Eigen/Geometry>

#include "iso/autodiff/grad_check.hpp"
#include "iso/geometry/alignment.hpp"
#include "iso/geometry/graph_ops.hpp"
#include "iso/geometry/skeleton.hpp"
#include "iso/geometry/transforms.hpp"
#include "support.hpp"

using namespace iso;
using geom::Pose2D;
using geom::Pose3D;

namespace {

const geom::SkeletonTopology& topo() {
  static const auto t = geom::SkeletonTopology::default16();
  return t;
}

geom::ViewRotation random_view(Rng& rng) { return geom::sample_random_view(rng); }

Eigen::Matrix3d random_rotation(Rng& rng) {
  Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  return q.normalized().toRotationMatrix();
}

double mean_root_distance(const Pose2D& p) {
  double s = 0;
  for (Eigen::Index j = 1; j < p.rows(); ++j) s += (p.row(j) - p.row(0)).norm();
  return s / double(p.rows() - 1);
}

}  // namespace

TEST(Skeleton, DefaultIsTreeWithFifteenBones) {
  const auto& t = topo();
  EXPECT_EQ(t.joints(), 16);
  EXPECT_EQ(t.bones().size(), 15u);
  EXPECT_EQ(t.root(), t.index_of("pelvis"));
  for (int j = 0; j < t.joints(); ++j) {
    int k = j, steps = 0;
    while (k != t.root() && steps++ <= t.joints()) k = t.parent(k);
    EXPECT_EQ(k, t.root()) << j;
  }
}

TEST(Skeleton, MirrorIsInvolutionAndUnpairedJointsAreAxial) {
  const auto& t = topo();
  for (int j = 0; j < t.joints(); ++j) {
    EXPECT_EQ(t.mirror(t.mirror(j)), j);
    if (t.mirror(j) == j) {
      const auto& n = t.names()[static_cast<std::size_t>(j)];
      EXPECT_TRUE(n == "pelvis" || n == "spine" || n == "neck" || n == "head") << n;
    }
  }
}

TEST(Skeleton, PartsAreDisjointAndNonEmpty) {
  std::set<int> seen;
  for (int p = 0; p < geom::kPartCount; ++p) {
    const auto js = topo().joints_in(static_cast<geom::Part>(p));
    EXPECT_FALSE(js.empty()) << geom::part_name(static_cast<geom::Part>(p));
    for (int j : js) EXPECT_TRUE(seen.insert(j).second);
  }
}

TEST(Skeleton, InvalidTopologiesRejected) {
  EXPECT_THROW(geom::SkeletonTopology({"a", "b"}, {0, 1}, {0, 1}, {-1, -1}), ConfigError);      // two roots
  EXPECT_THROW(geom::SkeletonTopology({"a", "b", "c"}, {0, 2, 1}, {0, 1, 2}, {-1, -1, -1}), ConfigError);  // cycle
  EXPECT_THROW(geom::SkeletonTopology({"a", "b", "c"}, {0, 0, 0}, {0, 2, 2}, {-1, -1, -1}), ConfigError);  // mirror
  EXPECT_THROW(geom::SkeletonTopology({"a", "b"}, {0, 0}, {0, 1}, {-1, 9}), ConfigError);
}

TEST(Project, RootMapsToOrigin) {
  Rng rng(1);
  auto p = test::random_pose(16, rng);
  auto uv = geom::project(p, geom::CameraModel{});
  EXPECT_EQ(uv(0, 0), 0.0);
  EXPECT_EQ(uv(0, 1), 0.0);
}

TEST(Project, PinholeEvaluation) {
  Pose3D p = Pose3D::Zero(2, 3);
  p.row(1) << 1000, 0, 0;
  auto uv = geom::project_raw(p, geom::CameraModel{1.0, 5000.0});
  EXPECT_DOUBLE_EQ(uv(1, 0), 1000.0 / 5000.0);
  EXPECT_DOUBLE_EQ(uv(1, 1), 0.0);
}

TEST(Project, PlanarPoseIsUniformScaling) {
  Rng rng(2);
  Pose3D p = test::random_pose(16, rng);
  p.col(2).setZero();
  const geom::CameraModel cam{2.0, 4000.0};
  auto uv = geom::project(p, cam);
  for (int j = 0; j < 16; ++j)
    for (int c = 0; c < 2; ++c) EXPECT_NEAR(uv(j, c), p(j, c) * 2.0 / 4000.0, 1e-15);
}

TEST(Project, BehindCameraRejected) {
  Pose3D p = Pose3D::Zero(2, 3);
  p(1, 2) = -6000;
  EXPECT_THROW(geom::project(p, geom::CameraModel{}), GeometryError);
  p(1, 2) = -5500;
  EXPECT_THROW(geom::project(p, geom::CameraModel{}), GeometryError);
}

TEST(CameraModelCheck, NonPositiveFieldsRejected) {
  EXPECT_THROW((geom::CameraModel{0.0, 1.0}.validate()), ConfigError);
  EXPECT_THROW((geom::CameraModel{1.0, -1.0}.validate()), ConfigError);
}

TEST(RandomView, WithinBoundsWithCenteredAzimuth) {
  Rng rng(3);
  double mean = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto v = random_view(rng);
    ASSERT_GE(v.azimuth, -geom::kPi);
    ASSERT_LE(v.azimuth, geom::kPi);
    ASSERT_GE(v.elevation, -geom::kPi / 9);
    ASSERT_LE(v.elevation, geom::kPi / 9);
    mean += v.azimuth;
  }
  EXPECT_NEAR(mean / n, 0.0, 0.02);
}

TEST(RandomView, SeedDeterminesSequence) {
  Rng a(4), b(4);
  for (int i = 0; i < 100; ++i) {
    const auto va = random_view(a), vb = random_view(b);
    EXPECT_EQ(va.azimuth, vb.azimuth);
    EXPECT_EQ(va.elevation, vb.elevation);
  }
}

TEST(Rotate, ZeroRotationIsIdentity) {
  Rng rng(5);
  auto p = test::random_pose(16, rng);
  EXPECT_EQ(geom::rotate(p, {}), p);
}

TEST(Rotate, HalfTurnAzimuth) {
  Pose3D p(1, 3);
  p << 1000, 0, 0;
  auto q = geom::rotate(p, {geom::kPi, 0.0});
  EXPECT_NEAR(q(0, 0), -1000, 1e-3);
  EXPECT_NEAR(q(0, 1), 0, 1e-3);
  EXPECT_NEAR(q(0, 2), 0, 1e-3);
}

TEST(Rotate, ElevationAppliedAfterAzimuth) {
  const geom::ViewRotation r{0.7, -0.3};
  const Eigen::Matrix3d ry = Eigen::AngleAxisd(0.7, Eigen::Vector3d::UnitY()).toRotationMatrix();
  const Eigen::Matrix3d rx = Eigen::AngleAxisd(-0.3, Eigen::Vector3d::UnitX()).toRotationMatrix();
  EXPECT_LT((r.matrix() - rx * ry).norm(), 1e-12);
}

TEST(Rotate, InverseUndoesRotation) {
  Rng rng(6);
  for (int i = 0; i < 50; ++i) {
    auto p = test::random_pose(16, rng);
    const geom::ViewRotation r{rng.uniform(-geom::kPi, geom::kPi), rng.uniform(-1.0, 1.0)};
    EXPECT_LT(test::max_abs_diff(geom::inverse_rotate(geom::rotate(p, r), r), p), 1e-5);
  }
}

TEST(Reproject, ZeroRotationMatchesOwnProjection) {
  Rng rng(7);
  auto p = test::random_pose(16, rng);
  const geom::CameraModel cam;
  const Pose2D a = geom::reproject_random(p, {}, cam);
  const Pose2D b = geom::normalize2d(geom::project(p, cam));
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(mean_root_distance(a), 1.0, 1e-9);
  EXPECT_EQ(a.row(0).norm(), 0.0);
}

TEST(Reproject, GraphOpsMatchPoseFunctions) {
  Rng rng(8);
  const geom::CameraModel cam;
  const int b = 5;
  ad::Tensor<double> x({b, 48});
  std::vector<Eigen::Matrix3d> rots;
  std::vector<Pose2D> expected;
  for (int i = 0; i < b; ++i) {
    auto p = test::random_pose(16, rng);
    const auto v = random_view(rng);
    rots.push_back(v.matrix());
    expected.push_back(geom::reproject_random(p, v, cam));
    const auto f = geom::flatten(p);
    for (int c = 0; c < 48; ++c) x.at(i, c) = f(c);
  }
  ad::Tape<double> tape;
  auto y = geom::reproject_rows(tape.constant(x), rots, cam).value();
  for (int i = 0; i < b; ++i)
    for (int c = 0; c < 32; ++c) EXPECT_NEAR(y.at(i, c), expected[i](c / 2, c % 2), 1e-12);
}

TEST(Reproject, LiftRotateProjectGradCheck) {
  Rng rng(9);
  auto w = ad::Tensor<double>({32, 48});
  for (auto& v : w.data()) v = rng.normal(0.0, 0.2);
  w.set_requires_grad(true);
  auto x = test::random_tensor<double>({3, 32}, rng);
  std::vector<Eigen::Matrix3d> rots;
  for (int i = 0; i < 3; ++i) rots.push_back(random_view(rng).matrix());
  ad::Tensor<double> target = test::random_tensor<double>({3, 32}, rng, 0.3);
  ad::LossBuilder<double> fn = [&](ad::Tape<double>& t) {
    // Native units times mm_per_unit, as in the projection losses.
    auto lifted = ad::scale(ad::matmul(t.constant(x), t.leaf(w)), 300.0);
    auto y = geom::reproject_rows(lifted, rots, geom::CameraModel{});
    return ad::sum_squares(ad::sub(y, t.constant(target)));
  };
  std::vector<ad::NamedTensor<double>> params = {{"w", &w}};
  ad::GradCheckOptions o;
  o.max_per_tensor = 200;
  EXPECT_LT(ad::grad_check(fn, std::span<const ad::NamedTensor<double>>(params), o).max_rel_error, 1e-3);
}

TEST(Reproject, DepthFloorClampsInsteadOfThrowing) {
  ad::Tensor<double> x({1, 6}, std::vector<double>{0, 0, 0, 100, 0, -9000});
  ad::Tape<double> tape;
  EXPECT_THROW(geom::project_rows(tape.constant(x), geom::CameraModel{}), GeometryError);
  auto y = geom::project_rows(tape.constant(x), geom::CameraModel{}, 0, 0.1).value();
  EXPECT_NEAR(y.at(0, 2), 100.0 / 550.0, 1e-12);
  EXPECT_THROW(geom::project_rows(tape.constant(x), geom::CameraModel{}, 0, 1.0), ConfigError);
}

TEST(Reproject, ClampedJointPassesNoDepthGradient) {
  ad::Tensor<double> x({1, 6}, std::vector<double>{0, 0, 0, 100, 0, -9000});
  x.set_requires_grad(true);
  ad::Tape<double> tape;
  tape.backward(ad::sum(geom::project_rows(tape.leaf(x), geom::CameraModel{}, 0, 0.1)));
  EXPECT_EQ(x.grad_view()[5], 0.0);
  EXPECT_NEAR(x.grad_view()[3], 1.0 / 550.0, 1e-12);
}

TEST(Hflip, InvolutionAndAxisFixedPoints) {
  Rng rng(10);
  auto p = test::random_pose(16, rng);
  EXPECT_EQ(geom::hflip(geom::hflip(p, topo()), topo()), p);
  Pose3D axial = Pose3D::Zero(16, 3);
  for (int j = 0; j < 16; ++j) axial(j, 1) = j;
  for (const char* n : {"spine", "neck", "head"}) {
    const int j = topo().index_of(n);
    EXPECT_EQ(geom::hflip(axial, topo()).row(j), axial.row(j)) << n;
  }
}

TEST(Hflip, SwapsSidesAndNegatesX) {
  Pose2D p = Pose2D::Zero(16, 2);
  const int lw = topo().index_of("l_wrist"), rw = topo().index_of("r_wrist");
  p.row(lw) << 1, 2;
  auto q = geom::hflip(p, topo());
  EXPECT_EQ(q(rw, 0), -1.0);
  EXPECT_EQ(q(rw, 1), 2.0);
  EXPECT_EQ(q.row(lw).norm(), 0.0);
}

TEST(Hflip, BatchVersionMatches) {
  Rng rng(11);
  auto p = test::random_pose(16, rng);
  auto f = geom::flatten(p);
  ad::Tensor<double> rows({1, 48}, std::vector<double>(f.data(), f.data() + 48));
  const auto flipped = geom::hflip_rows(rows, topo(), 3);
  const auto expected = geom::flatten(geom::hflip(p, topo()));
  for (int c = 0; c < 48; ++c) EXPECT_EQ(flipped[c], expected(c));
}

TEST(Bones, CollinearChain) {
  geom::SkeletonTopology chain({"a", "b", "c"}, {0, 0, 1}, {0, 1, 2}, {-1, -1, -1});
  Pose3D p(3, 3);
  p << 0, 0, 0, 0, 1, 0, 0, 2, 0;
  const auto b = geom::bone_vectors(p, chain);
  ASSERT_EQ(b.rows(), 2);
  for (int i = 0; i < 2; ++i) EXPECT_EQ(b.row(i), Eigen::RowVector3d(0, 1, 0));
}

TEST(Bones, CoincidentJointsAndTranslation) {
  Pose3D same = Pose3D::Constant(16, 3, 4.0);
  EXPECT_EQ(geom::bone_vectors(same, topo()).norm(), 0.0);
  Rng rng(12);
  auto p = test::random_pose(16, rng);
  Pose3D moved = p.rowwise() + Eigen::RowVector3d(10, -20, 30);
  EXPECT_LT((geom::bone_vectors(moved, topo()) - geom::bone_vectors(p, topo())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Bones, MatrixFormMatches) {
  Rng rng(13);
  auto p = test::random_pose(16, rng);
  const auto m = geom::bone_matrix<double>(topo());
  ASSERT_EQ(m.shape(), (ad::Shape{48, 45}));
  const auto f = geom::flatten(p);
  const auto bones = geom::flatten(geom::bone_vectors(p, topo()));
  for (int k = 0; k < 45; ++k) {
    double s = 0;
    for (int i = 0; i < 48; ++i) s += f(i) * m.at(i, k);
    EXPECT_NEAR(s, bones(k), 1e-9);
  }
}

TEST(Normalize2d, IdempotentScaleAndTranslationInvariant) {
  Rng rng(14);
  for (int i = 0; i < 20; ++i) {
    const Pose2D p = geom::project(test::random_pose(16, rng), geom::CameraModel{});
    const Pose2D n = geom::normalize2d(p);
    EXPECT_NEAR(mean_root_distance(n), 1.0, 1e-6);
    EXPECT_LT((geom::normalize2d(n) - n).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((geom::normalize2d(Pose2D(7.0 * p)) - n).cwiseAbs().maxCoeff(), 1e-9);
    Pose2D moved = p.rowwise() + Eigen::RowVector2d(3, -1);
    EXPECT_LT((geom::normalize2d(moved) - n).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Normalize2d, CoincidentJointsRejected) {
  EXPECT_THROW(geom::normalize2d(Pose2D::Constant(16, 2, 0.5)), GeometryError);
}

TEST(Procrustes, IdentityHasZeroError) {
  Rng rng(15);
  auto p = test::random_pose(16, rng);
  EXPECT_LT(test::max_abs_diff(geom::procrustes_align(p, p), p), 1e-9);
}

TEST(Procrustes, RecoversSimilarityTransforms) {
  Rng rng(16);
  for (int i = 0; i < 50; ++i) {
    auto gt = test::random_pose(16, rng);
    const Eigen::Matrix3d r = random_rotation(rng);
    const double s = rng.uniform(0.3, 3.0);
    Pose3D pred = s * (gt * r.transpose());
    pred.rowwise() += Eigen::RowVector3d(rng.normal(0, 500), rng.normal(0, 500), rng.normal(0, 500));
    const auto aligned = geom::procrustes_align(pred, gt);
    EXPECT_LT((aligned - gt).norm(), 1e-6 * gt.norm());
    const auto t = geom::procrustes_transform(pred, gt);
    EXPECT_NEAR(t.rotation.determinant(), 1.0, 1e-12);
    EXPECT_NEAR(t.scale, 1.0 / s, 1e-9);
  }
}

TEST(Procrustes, NeverReflects) {
  Rng rng(17);
  auto gt = test::random_pose(16, rng);
  Pose3D mirrored = gt;
  mirrored.col(0) *= -1.0;
  const auto t = geom::procrustes_transform(mirrored, gt);
  EXPECT_NEAR(t.rotation.determinant(), 1.0, 1e-12);
  EXPECT_GT((t.apply(mirrored) - gt).norm(), 1e-3);
}

TEST(Procrustes, FourPointRotationMatchesGridSearch) {
  Pose3D gt(4, 3);
  gt << 0, 0, 0, 3, 0, 0, 0, 2, 0, 0, 0, 1;
  const Eigen::Matrix3d r0 = Eigen::AngleAxisd(geom::kPi / 2, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const Pose3D pred = gt * r0.transpose();

  // Oracle: minimize the centered residual over rotations parametrized by ZYX angles,
  // coarse grid then pattern search.
  const Pose3D a = pred.rowwise() - pred.colwise().mean();
  const Pose3D b = gt.rowwise() - gt.colwise().mean();
  auto rot = [](const Eigen::Vector3d& e) {
    return (Eigen::AngleAxisd(e(0), Eigen::Vector3d::UnitZ()) * Eigen::AngleAxisd(e(1), Eigen::Vector3d::UnitY()) *
            Eigen::AngleAxisd(e(2), Eigen::Vector3d::UnitX()))
        .toRotationMatrix();
  };
  auto cost = [&](const Eigen::Vector3d& e) { return (a * rot(e).transpose() - b).squaredNorm(); };
  Eigen::Vector3d best(0, 0, 0);
  double best_cost = cost(best);
  const int steps = 36;
  for (int i = 0; i < steps; ++i)
    for (int j = 0; j < steps / 2; ++j)
      for (int k = 0; k < steps; ++k) {
        const Eigen::Vector3d e(-geom::kPi + 2 * geom::kPi * i / steps, -geom::kPi / 2 + geom::kPi * j / (steps / 2),
                                -geom::kPi + 2 * geom::kPi * k / steps);
        const double c = cost(e);
        if (c < best_cost) best_cost = c, best = e;
      }
  for (double h = 0.1; h > 1e-10; h *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (int d = 0; d < 3; ++d)
        for (double sgn : {-1.0, 1.0}) {
          Eigen::Vector3d e = best;
          e(d) += sgn * h;
          const double c = cost(e);
          if (c < best_cost) best_cost = c, best = e, improved = true;
        }
    }
  }
  const Eigen::Matrix3d oracle = rot(best);
  const auto t = geom::procrustes_transform(pred, gt);
  EXPECT_LT((t.rotation - oracle).cwiseAbs().maxCoeff(), 1e-5);
  EXPECT_LT((t.rotation - r0.transpose()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Procrustes, DegenerateRejected) {
  Rng rng(18);
  auto gt = test::random_pose(16, rng);
  EXPECT_THROW(geom::procrustes_align(Pose3D::Constant(16, 3, 2.0), gt), GeometryError);
}

TEST(GlobalScale, ExactRescale) {
  Rng rng(19);
  auto gt = test::random_pose(16, rng);
  Pose3D half = 0.5 * gt;
  EXPECT_DOUBLE_EQ(geom::global_scale_factor(half, gt), 2.0);
  EXPECT_LT(test::max_abs_diff(geom::optimal_global_scale(half, gt), gt), 1e-9);
  EXPECT_DOUBLE_EQ(geom::global_scale_factor(gt, gt), 1.0);
}

TEST(GlobalScale, OrthogonalPredictionGivesZero) {
  Pose3D gt = Pose3D::Zero(2, 3), pred = Pose3D::Zero(2, 3);
  gt(1, 0) = 100;
  pred(1, 1) = 100;
  EXPECT_EQ(geom::global_scale_factor(pred, gt), 0.0);
  EXPECT_EQ(geom::optimal_global_scale(pred, gt).norm(), 0.0);
  EXPECT_THROW(geom::optimal_global_scale(Pose3D::Zero(2, 3), gt), GeometryError);
}

namespace {

// Pose with prescribed upper/lower segment lengths along distinct directions.
Pose3D limb_pose(double upper_arm, double lower_arm) {
  const auto& t = topo();
  Pose3D p = Pose3D::Zero(16, 3);
  auto set = [&](const char* n, double x, double y, double z) { p.row(t.index_of(n)) << x, y, z; };
  set("spine", 0, 250, 0);
  set("neck", 0, 500, 0);
  set("head", 0, 650, 0);
  for (double side : {-1.0, 1.0}) {
    const std::string s = side > 0 ? "l_" : "r_";
    set((s + "hip").c_str(), side * 120, 0, 0);
    set((s + "knee").c_str(), side * 120, -450, 0);
    set((s + "ankle").c_str(), side * 120, -850, 0);
    set((s + "shoulder").c_str(), side * 180, 500, 0);
    set((s + "elbow").c_str(), side * (180 + upper_arm), 500, 0);
    set((s + "wrist").c_str(), side * (180 + upper_arm), 500, lower_arm);
  }
  return p;
}

}  // namespace

TEST(LimbRatios, ByConstruction) {
  const auto r = geom::limb_ratios(limb_pose(390, 300), topo());
  EXPECT_NEAR(r.arm_l(), 1.3, 1e-12);
  EXPECT_NEAR(r.arm_r(), 1.3, 1e-12);
  EXPECT_NEAR(r.leg_l(), 450.0 / 400.0, 1e-12);
  EXPECT_NEAR(r.torso(), 1.0, 1e-12);
}

TEST(LimbRatios, FlipSwapsSidesAndScaleInvariant) {
  Pose3D p = limb_pose(390, 300);
  p(topo().index_of("l_wrist"), 2) = 200;  // left arm ratio 1.95
  const auto r = geom::limb_ratios(p, topo());
  const auto f = geom::limb_ratios(geom::hflip(p, topo()), topo());
  EXPECT_NEAR(f.arm_l(), r.arm_r(), 1e-12);
  EXPECT_NEAR(f.arm_r(), r.arm_l(), 1e-12);
  const auto s = geom::limb_ratios(Pose3D(3.7 * p), topo());
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(s.values[i], r.values[i], 1e-12);
}

TEST(LimbRatios, ZeroLowerSegmentRejected) {
  EXPECT_THROW(geom::limb_ratios(limb_pose(390, 0), topo()), GeometryError);
}
