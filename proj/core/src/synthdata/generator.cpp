#include "iso/synthdata/generator.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Geometry>

#include "iso/common/error.hpp"

namespace iso::synth {
namespace {

using geom::kPi;

Eigen::Matrix3d euler_xyz(double ax, double ay, double az) {
  return (Eigen::AngleAxisd(az, Eigen::Vector3d::UnitZ()) * Eigen::AngleAxisd(ay, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(ax, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

/// Mirror of a left-side range for the right side: reflection across x = 0
/// keeps rotations about x and negates those about y and z.
std::array<AngleRange, 3> mirrored(const std::array<AngleRange, 3>& r) {
  return {r[0], AngleRange{-r[1].hi, -r[1].lo}, AngleRange{-r[2].hi, -r[2].lo}};
}

}  // namespace

void DistributionConfig::validate(const geom::SkeletonTopology& topo) const {
  const auto j = static_cast<std::size_t>(topo.joints());
  if (bone_length.size() != j || rest_dir.size() != j || angles.size() != j)
    throw ConfigError("distribution '" + name + "': per-joint tables must have " + std::to_string(j) + " entries");
  for (std::size_t k = 0; k < j; ++k) {
    if (static_cast<int>(k) == topo.root()) continue;
    if (!(bone_length[k] > 0.0)) throw ConfigError("bone lengths must be positive (joint " + std::to_string(k) + ")");
    if (!(rest_dir[k].norm() > 0.0)) throw ConfigError("rest directions must be nonzero");
  }
  for (const auto& a : angles)
    for (const auto& r : a)
      if (r.lo > r.hi) throw ConfigError("angle range lo > hi in distribution '" + name + "'");
  if (!(articulation >= 0.0)) throw ConfigError("articulation must be >= 0");
  if (!(scale_lo > 0.0 && scale_lo <= scale_hi)) throw ConfigError("scale range must satisfy 0 < lo <= hi");
  if (azimuth_lo > azimuth_hi || elevation_lo > elevation_hi) throw ConfigError("view ranges must satisfy lo <= hi");
  if (samples == 0) throw ConfigError("sample count must be positive");
}

std::string DistributionConfig::echo() const {
  std::ostringstream os;
  os.precision(17);
  os << "name=" << name << "\narticulation=" << articulation << "\nscale=" << scale_lo << "," << scale_hi
     << "\nazimuth=" << azimuth_lo << "," << azimuth_hi << "\nelevation=" << elevation_lo << "," << elevation_hi
     << "\nsamples=" << samples << "\nseed=" << seed << "\nbones=";
  for (std::size_t k = 0; k < bone_length.size(); ++k) os << (k ? "," : "") << bone_length[k];
  os << "\n";
  return os.str();
}

DistributionConfig DistributionConfig::standard16() {
  DistributionConfig c;
  c.name = "standard16";
  const Eigen::Vector3d up(0, 1, 0), down(0, -1, 0), left(1, 0, 0), right(-1, 0, 0), zero(0, 0, 0);
  //               pelvis r_hip r_knee r_ankle l_hip l_knee l_ankle spine neck head l_sh  l_el  l_wr  r_sh  r_el  r_wr
  c.bone_length = {0,     130,  455,   350,    130,  455,   350,    240,  240, 180, 160,  299,  230,  160,  299,  230};
  c.rest_dir = {zero, right, down, down, left, down, down, up, up, up, left, down, down, right, down, down};

  using R = std::array<AngleRange, 3>;
  const R none{};
  const R pelvis{AngleRange{-0.2, 0.2}, AngleRange{-0.3, 0.3}, AngleRange{-0.1, 0.1}};
  const R l_hip{AngleRange{-0.4, 1.4}, AngleRange{-0.3, 0.3}, AngleRange{-0.1, 0.5}};
  const R l_knee{AngleRange{-1.8, 0.0}, AngleRange{}, AngleRange{}};
  const R spine{AngleRange{-0.3, 0.3}, AngleRange{-0.4, 0.4}, AngleRange{-0.2, 0.2}};
  const R neck{AngleRange{-0.3, 0.3}, AngleRange{-0.3, 0.3}, AngleRange{-0.2, 0.2}};
  const R l_shoulder{AngleRange{-1.5, 1.5}, AngleRange{-0.5, 0.5}, AngleRange{-0.2, 1.6}};
  const R l_elbow{AngleRange{0.0, 2.0}, AngleRange{}, AngleRange{}};
  c.angles = {pelvis, mirrored(l_hip), mirrored(l_knee), none, l_hip, l_knee,     none,
              spine,  neck,            none,             l_shoulder, l_elbow, none, mirrored(l_shoulder),
              mirrored(l_elbow), none};
  return c;
}

DistributionConfig DistributionConfig::desk_shift_source() {
  DistributionConfig c = standard16();
  c.name = "desk-shift-source";
  c.articulation = 0.6;
  c.azimuth_lo = -kPi / 6;
  c.azimuth_hi = kPi / 6;
  c.elevation_lo = -kPi / 36;
  c.elevation_hi = kPi / 36;
  c.samples = 20000;
  c.seed = 1;
  return c;
}

DistributionConfig DistributionConfig::desk_shift_target() {
  DistributionConfig c = standard16();
  c.name = "desk-shift-target";
  c.articulation = 1.0;
  c.scale_lo = 0.9;
  c.scale_hi = 1.1;
  c.azimuth_lo = -kPi;
  c.azimuth_hi = kPi;
  c.elevation_lo = -kPi / 9;
  c.elevation_hi = kPi / 9;
  c.samples = 2000;
  c.seed = 2;
  return c;
}

geom::Pose3D sample_pose3d(const DistributionConfig& c, const geom::SkeletonTopology& topo, Rng& rng) {
  const int J = topo.joints();
  const auto uJ = static_cast<std::size_t>(J);
  const double scale = rng.uniform(c.scale_lo, c.scale_hi);
  std::vector<Eigen::Matrix3d> local(uJ);
  for (std::size_t j = 0; j < uJ; ++j) {
    const auto& a = c.angles[j];
    const double s = c.articulation;
    local[j] = euler_xyz(rng.uniform(s * a[0].lo, s * a[0].hi), rng.uniform(s * a[1].lo, s * a[1].hi),
                         rng.uniform(s * a[2].lo, s * a[2].hi));
  }
  // Parents may follow children in index order, so both passes resolve recursively.
  std::vector<Eigen::Matrix3d> world(uJ);
  geom::Pose3D pose = geom::Pose3D::Zero(J, 3);
  std::vector<char> done(uJ, 0);
  auto resolve = [&](auto&& self, int j) -> void {
    const auto uj = static_cast<std::size_t>(j);
    if (done[uj]) return;
    if (j == topo.root()) {
      world[uj] = local[uj];
    } else {
      const int p = topo.parent(j);
      self(self, p);
      const auto up = static_cast<std::size_t>(p);
      world[uj] = world[up] * local[uj];
      const Eigen::Vector3d bone = world[up] * (scale * c.bone_length[uj] * c.rest_dir[uj].normalized());
      pose.row(j) = pose.row(p) + bone.transpose();
    }
    done[uj] = 1;
  };
  for (int j = 0; j < J; ++j) resolve(resolve, j);
  return pose;
}

geom::Pose3D Dataset::pose3d(std::size_t i) const {
  return geom::unflatten<3>(samples.at(i).pose3d.data(), joints());
}

geom::Pose2D Dataset::pose2d(std::size_t i) const {
  return geom::unflatten<2>(samples.at(i).pose2d.data(), joints());
}

geom::Pose2D observe(const geom::Pose3D& view_pose, const geom::CameraModel& cam, int root) {
  return geom::normalize2d(geom::project(view_pose, cam, root), root);
}

Dataset make_dataset(const DistributionConfig& config, const geom::CameraModel& cam,
                     const geom::SkeletonTopology& topo) {
  config.validate(topo);
  cam.validate();
  Dataset ds;
  ds.topology = topo;
  ds.camera = cam;
  ds.config_echo = config.echo();
  ds.samples.resize(config.samples);
  const int J = topo.joints();
  for (std::size_t i = 0; i < config.samples; ++i) {
    Rng rng(derive_seed(config.seed, i));
    const geom::Pose3D body = sample_pose3d(config, topo, rng);
    const geom::ViewRotation view = geom::sample_view(rng, config.azimuth_lo, config.azimuth_hi,
                                                      config.elevation_lo, config.elevation_hi);
    geom::Pose3D posed = geom::rotate(body, view);
    posed.rowwise() -= posed.row(topo.root()).eval();
    Sample& s = ds.samples[i];
    s.pose3d.resize(static_cast<std::size_t>(3 * J));
    for (int j = 0; j < J; ++j)
      for (int c = 0; c < 3; ++c) s.pose3d[static_cast<std::size_t>(3 * j + c)] = static_cast<float>(posed(j, c));
    // Project the stored (rounded) 3D so that each record is self-consistent.
    const geom::Pose2D x = observe(geom::unflatten<3>(s.pose3d.data(), J), cam, topo.root());
    s.pose2d.resize(static_cast<std::size_t>(2 * J));
    for (int j = 0; j < J; ++j)
      for (int c = 0; c < 2; ++c) s.pose2d[static_cast<std::size_t>(2 * j + c)] = static_cast<float>(x(j, c));
  }
  return ds;
}

double pixel_scale(const geom::Pose2D& x) {
  const double w = x.col(0).maxCoeff() - x.col(0).minCoeff();
  const double h = x.col(1).maxCoeff() - x.col(1).minCoeff();
  const double extent = std::max(w, h);
  if (!(extent > 0.0)) throw GeometryError("pixel_scale: pose has zero extent");
  return kPersonPixels / extent;
}

geom::Pose2D inject_pixel_noise(const geom::Pose2D& pixels, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw ConfigError("noise sigma must be >= 0");
  geom::Pose2D out = pixels;
  if (sigma == 0.0) return out;
  for (Eigen::Index j = 0; j < out.rows(); ++j)
    for (Eigen::Index c = 0; c < 2; ++c) out(j, c) += rng.normal(0.0, sigma);
  return out;
}

geom::Pose2D add_noise2d(const geom::Pose2D& x, double sigma, Rng& rng, int root) {
  if (!(sigma >= 0.0)) throw ConfigError("noise sigma must be >= 0");
  if (sigma == 0.0) return x;
  const double k = pixel_scale(x);
  return geom::normalize2d(inject_pixel_noise(x * k, sigma, rng), root);
}

}  // namespace iso::synth
