#include "iso/geometry/graph_ops.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "iso/common/error.hpp"

namespace iso::geom {

using ad::Tape;
using ad::Tensor;
using ad::Var;

template <typename T>
Var<T> rotate_rows(Var<T> poses, std::span<const Eigen::Matrix3d> rotations) {
  const Tensor<T>& xv = poses.value();
  if (xv.rank() != 2 || xv.cols() % 3 != 0) throw ShapeError("rotate_rows: expected B x 3J input");
  const std::size_t b = xv.rows(), n = xv.cols(), joints = n / 3;
  if (rotations.size() != b) throw ShapeError("rotate_rows: one rotation per row required");
  std::vector<Eigen::Matrix<T, 3, 3>> rs;
  rs.reserve(b);
  for (const auto& r : rotations) rs.push_back(r.cast<T>());
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < joints; ++j) {
      const std::size_t o = i * n + 3 * j;
      const Eigen::Matrix<T, 3, 1> p(xv[o], xv[o + 1], xv[o + 2]);
      const Eigen::Matrix<T, 3, 1> q = rs[i] * p;
      out[o] = q(0);
      out[o + 1] = q(1);
      out[o + 2] = q(2);
    }
  return poses.tape->record(std::move(out), poses.requires_grad(),
                            [poses, rs = std::move(rs), b, n, joints](Tape<T>& tape, std::span<const T> g) {
                              auto gx = tape.grad_of(poses);
                              for (std::size_t i = 0; i < b; ++i)
                                for (std::size_t j = 0; j < joints; ++j) {
                                  const std::size_t o = i * n + 3 * j;
                                  const Eigen::Matrix<T, 3, 1> gp(g[o], g[o + 1], g[o + 2]);
                                  const Eigen::Matrix<T, 3, 1> q = rs[i].transpose() * gp;
                                  gx[o] += q(0);
                                  gx[o + 1] += q(1);
                                  gx[o + 2] += q(2);
                                }
                            });
}

template <typename T>
Var<T> project_rows(Var<T> poses, const CameraModel& cam, int root, double depth_floor) {
  const Tensor<T>& xv = poses.value();
  if (xv.rank() != 2 || xv.cols() % 3 != 0) throw ShapeError("project_rows: expected B x 3J input");
  const std::size_t b = xv.rows(), joints = xv.cols() / 3;
  if (!(depth_floor >= 0.0 && depth_floor < 1.0)) throw ConfigError("project_rows: depth_floor must lie in [0,1)");
  const T f = static_cast<T>(cam.focal), d = static_cast<T>(cam.root_depth);
  const T floor = static_cast<T>(depth_floor * cam.root_depth);
  const auto r = static_cast<std::size_t>(root);
  Tensor<T> out = Tensor<T>::matrix(b, 2 * joints);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < joints; ++j) {
      const std::size_t o = i * 3 * joints + 3 * j;
      const T depth = std::max(xv[o + 2] + d, floor);
      if (!(depth > T{0}))
        throw GeometryError("project: joint " + std::to_string(j) + " of row " + std::to_string(i) +
                            " is behind the camera");
      out[i * 2 * joints + 2 * j] = f * xv[o] / depth;
      out[i * 2 * joints + 2 * j + 1] = f * xv[o + 1] / depth;
    }
    const T ur = out[i * 2 * joints + 2 * r], vr = out[i * 2 * joints + 2 * r + 1];
    for (std::size_t j = 0; j < joints; ++j) {
      out[i * 2 * joints + 2 * j] -= ur;
      out[i * 2 * joints + 2 * j + 1] -= vr;
    }
  }
  return poses.tape->record(
      std::move(out), poses.requires_grad(), [poses, b, joints, f, d, floor, r](Tape<T>& tape, std::span<const T> g) {
        const auto& xv = tape.value(poses);
        auto gx = tape.grad_of(poses);
        for (std::size_t i = 0; i < b; ++i) {
          // Root-centering: d/d(raw_j) = g_j - [j == r] * sum_k g_k.
          T su = 0, sv = 0;
          for (std::size_t j = 0; j < joints; ++j) {
            su += g[i * 2 * joints + 2 * j];
            sv += g[i * 2 * joints + 2 * j + 1];
          }
          for (std::size_t j = 0; j < joints; ++j) {
            T gu = g[i * 2 * joints + 2 * j], gv = g[i * 2 * joints + 2 * j + 1];
            if (j == r) {
              gu -= su;
              gv -= sv;
            }
            const std::size_t o = i * 3 * joints + 3 * j;
            const T raw = xv[o + 2] + d;
            const T inv = T{1} / std::max(raw, floor);
            gx[o] += gu * f * inv;
            gx[o + 1] += gv * f * inv;
            if (raw > floor) gx[o + 2] -= (gu * xv[o] + gv * xv[o + 1]) * f * inv * inv;
          }
        }
      });
}

template <typename T>
Var<T> normalize2d_rows(Var<T> poses, int root) {
  const Tensor<T>& xv = poses.value();
  if (xv.rank() != 2 || xv.cols() % 2 != 0) throw ShapeError("normalize2d_rows: expected B x 2J input");
  const std::size_t b = xv.rows(), joints = xv.cols() / 2;
  if (joints < 2) throw GeometryError("normalize2d: pose needs a non-root joint");
  const auto r = static_cast<std::size_t>(root);
  Tensor<T> out(xv.shape());
  std::vector<T> scales(b);
  for (std::size_t i = 0; i < b; ++i) {
    const T* row = xv.data().data() + i * 2 * joints;
    T s = 0;
    for (std::size_t j = 0; j < joints; ++j)
      if (j != r) s += std::hypot(row[2 * j] - row[2 * r], row[2 * j + 1] - row[2 * r + 1]);
    s /= static_cast<T>(joints - 1);
    if (!(s > T(1e-12))) throw GeometryError("normalize2d: all joints coincide with the root");
    scales[i] = s;
    for (std::size_t j = 0; j < joints; ++j) {
      out[i * 2 * joints + 2 * j] = (row[2 * j] - row[2 * r]) / s;
      out[i * 2 * joints + 2 * j + 1] = (row[2 * j + 1] - row[2 * r + 1]) / s;
    }
  }
  return poses.tape->record(
      std::move(out), poses.requires_grad(),
      [poses, b, joints, r, scales = std::move(scales)](Tape<T>& tape, std::span<const T> g) {
        const auto& xv = tape.value(poses);
        auto gx = tape.grad_of(poses);
        const T inv_count = T{1} / static_cast<T>(joints - 1);
        for (std::size_t i = 0; i < b; ++i) {
          const T* row = xv.data().data() + i * 2 * joints;
          const T* gi = g.data() + i * 2 * joints;
          T* go = gx.data() + i * 2 * joints;
          const T s = scales[i];
          // out_j = c_j / s with c_j = p_j - p_r and s = mean_{j != r} |c_j|.
          T dot = 0;
          for (std::size_t j = 0; j < joints; ++j)
            dot += gi[2 * j] * (row[2 * j] - row[2 * r]) + gi[2 * j + 1] * (row[2 * j + 1] - row[2 * r + 1]);
          const T coef = dot / (s * s) * inv_count;
          for (std::size_t j = 0; j < joints; ++j) {
            if (j == r) continue;
            const T cx = row[2 * j] - row[2 * r], cy = row[2 * j + 1] - row[2 * r + 1];
            const T len = std::hypot(cx, cy);
            T dcx = gi[2 * j] / s, dcy = gi[2 * j + 1] / s;
            if (len > T{0}) {
              dcx -= coef * cx / len;
              dcy -= coef * cy / len;
            }
            go[2 * j] += dcx;
            go[2 * j + 1] += dcy;
            go[2 * r] -= dcx;
            go[2 * r + 1] -= dcy;
          }
        }
      });
}

template <typename T>
Var<T> reproject_rows(Var<T> poses, std::span<const Eigen::Matrix3d> rotations, const CameraModel& cam,
                      int root, double depth_floor) {
  return normalize2d_rows(project_rows(rotate_rows(poses, rotations), cam, root, depth_floor), root);
}

template <typename T>
Tensor<T> bone_matrix(const SkeletonTopology& topo) {
  const std::size_t j = static_cast<std::size_t>(topo.joints());
  const std::size_t nb = topo.bones().size();
  Tensor<T> m = Tensor<T>::matrix(3 * j, 3 * nb);
  for (std::size_t k = 0; k < nb; ++k) {
    const auto [child, parent] = topo.bones()[k];
    for (std::size_t c = 0; c < 3; ++c) {
      m.at(3 * static_cast<std::size_t>(child) + c, 3 * k + c) += T{1};
      m.at(3 * static_cast<std::size_t>(parent) + c, 3 * k + c) -= T{1};
    }
  }
  return m;
}

template <typename T>
Tensor<T> hflip_rows(const Tensor<T>& poses, const SkeletonTopology& topo, int dims) {
  const std::size_t j = static_cast<std::size_t>(topo.joints());
  const auto d = static_cast<std::size_t>(dims);
  if (poses.rank() != 2 || poses.cols() != d * j) throw ShapeError("hflip_rows: width does not match topology");
  Tensor<T> out(poses.shape());
  for (std::size_t i = 0; i < poses.rows(); ++i)
    for (std::size_t k = 0; k < j; ++k) {
      const auto m = static_cast<std::size_t>(topo.mirror(static_cast<int>(k)));
      for (std::size_t c = 0; c < d; ++c) out.at(i, d * k + c) = poses.at(i, d * m + c);
      out.at(i, d * k) = -out.at(i, d * k);
    }
  return out;
}

#define ISO_INSTANTIATE_GEOM(T)                                                                     \
  template Var<T> rotate_rows(Var<T>, std::span<const Eigen::Matrix3d>);                           \
  template Var<T> project_rows(Var<T>, const CameraModel&, int, double);                           \
  template Var<T> normalize2d_rows(Var<T>, int);                                                    \
  template Var<T> reproject_rows(Var<T>, std::span<const Eigen::Matrix3d>, const CameraModel&, int, \
                                 double);                                                           \
  template Tensor<T> bone_matrix<T>(const SkeletonTopology&);                                      \
  template Tensor<T> hflip_rows(const Tensor<T>&, const SkeletonTopology&, int);

ISO_INSTANTIATE_GEOM(float)
ISO_INSTANTIATE_GEOM(double)

}  // namespace iso::geom
