#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "iso/autodiff/tape.hpp"
#include "iso/common/rng.hpp"
#include "iso/geometry/pose.hpp"
#include "iso/geometry/transforms.hpp"
#include "iso/nn/lifter.hpp"

namespace iso::test {

template <typename T>
ad::Tensor<T> random_tensor(ad::Shape shape, Rng& rng, double scale = 1.0) {
  ad::Tensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<T>(rng.normal(0.0, scale));
  return t;
}

/// Root at the origin, other joints N(0, scale) mm.
inline geom::Pose3D random_pose(int joints, Rng& rng, double scale = 300.0) {
  geom::Pose3D p(joints, 3);
  for (int j = 0; j < joints; ++j)
    for (int c = 0; c < 3; ++c) p(j, c) = j == 0 ? 0.0 : rng.normal(0.0, scale);
  return p;
}

inline nn::LifterConfig small_lifter(int width = 8) {
  nn::LifterConfig c;
  c.width = width;
  return c;
}

inline double max_abs_diff(const geom::Pose3D& a, const geom::Pose3D& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// Lifter that knows the 3D pose behind every 2D row it was taught: the
/// normalized projection of X maps back to X in every registered view.
class OracleLifter {
 public:
  OracleLifter(geom::CameraModel cam, double mm_per_unit) : cam_(cam), unit_(mm_per_unit) {}

  void teach(const geom::Pose3D& pose, const geom::ViewRotation& view) {
    const geom::Pose3D rotated = geom::rotate(pose, view);
    keys_.push_back(geom::flatten(geom::normalize2d(geom::project(rotated, cam_))));
    values_.push_back(geom::flatten(rotated) / unit_);
  }

  /// Largest distance between a queried row and its nearest taught key.
  double worst_match() const { return worst_; }

  template <typename T>
  ad::Var<T> operator()(ad::Tape<T>& tape, ad::Var<T> x) {
    const auto& xv = x.value();
    ad::Tensor<T> out({xv.rows(), static_cast<std::size_t>(values_.at(0).size())});
    for (std::size_t r = 0; r < xv.rows(); ++r) {
      std::size_t best = 0;
      double best_d = 1e300;
      for (std::size_t k = 0; k < keys_.size(); ++k) {
        double d = 0;
        for (std::size_t c = 0; c < xv.cols(); ++c) {
          const double e = double(xv.at(r, c)) - keys_[k](static_cast<Eigen::Index>(c));
          d += e * e;
        }
        if (d < best_d) best_d = d, best = k;
      }
      worst_ = std::max(worst_, std::sqrt(best_d));
      for (std::size_t c = 0; c < out.cols(); ++c) out.at(r, c) = static_cast<T>(values_[best](static_cast<Eigen::Index>(c)));
    }
    return tape.constant(std::move(out));
  }

 private:
  geom::CameraModel cam_;
  double unit_;
  std::vector<Eigen::RowVectorXd> keys_, values_;
  double worst_ = 0.0;
};

}  // namespace iso::test
