#include "iso/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "iso/common/error.hpp"
#include "iso/geometry/alignment.hpp"

namespace iso::eval {
namespace {

void check_pair(const geom::Pose3D& pred, const geom::Pose3D& gt) {
  if (pred.rows() != gt.rows())
    throw ShapeError("pose joint counts differ: " + std::to_string(pred.rows()) + " vs " + std::to_string(gt.rows()));
}

void check_sets(std::size_t a, std::size_t b) {
  if (a != b) throw ShapeError("prediction and ground-truth counts differ: " + std::to_string(a) + " vs " +
                               std::to_string(b));
  if (a == 0) throw ShapeError("no poses to evaluate");
}

}  // namespace

std::array<double, 30> auc_thresholds() {
  std::array<double, 30> t{};
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 5.0 * static_cast<double>(i + 1);
  return t;
}

std::vector<double> joint_errors(const geom::Pose3D& pred, const geom::Pose3D& gt) {
  check_pair(pred, gt);
  std::vector<double> e(static_cast<std::size_t>(pred.rows()));
  for (Eigen::Index j = 0; j < pred.rows(); ++j) e[static_cast<std::size_t>(j)] = (pred.row(j) - gt.row(j)).norm();
  return e;
}

double mpjpe(const geom::Pose3D& pred, const geom::Pose3D& gt) {
  const auto e = joint_errors(pred, gt);
  if (e.empty()) throw ShapeError("mpjpe of an empty pose");
  double s = 0.0;
  for (double v : e) s += v;
  return s / static_cast<double>(e.size());
}

double pck(const geom::Pose3D& pred, const geom::Pose3D& gt, double threshold) {
  const auto e = joint_errors(pred, gt);
  if (e.empty()) throw ShapeError("pck of an empty pose");
  const auto ok = std::count_if(e.begin(), e.end(), [&](double v) { return v <= threshold; });
  return 100.0 * static_cast<double>(ok) / static_cast<double>(e.size());
}

double auc(const geom::Pose3D& pred, const geom::Pose3D& gt) {
  double s = 0.0;
  const auto th = auc_thresholds();
  for (double t : th) s += pck(pred, gt, t);
  return s / static_cast<double>(th.size());
}

Protocol parse_protocol(std::string_view s) {
  if (s == "us" || s == "US") return Protocol::us;
  if (s == "gs" || s == "GS") return Protocol::gs;
  if (s == "pa" || s == "PA") return Protocol::pa;
  throw ConfigError("unknown protocol '" + std::string(s) + "' (expected us, gs or pa)");
}

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::us: return "us";
    case Protocol::gs: return "gs";
    case Protocol::pa: return "pa";
  }
  return "us";
}

geom::Pose3D align(const geom::Pose3D& pred, const geom::Pose3D& gt, Protocol p) {
  check_pair(pred, gt);
  switch (p) {
    case Protocol::us: return pred;
    case Protocol::gs: return geom::optimal_global_scale(pred, gt);
    case Protocol::pa: return geom::procrustes_align(pred, gt);
  }
  return pred;
}

Metrics evaluate(std::span<const geom::Pose3D> preds, std::span<const geom::Pose3D> gts, Protocol p) {
  check_sets(preds.size(), gts.size());
  const auto th = auc_thresholds();
  std::array<std::size_t, 30> hits{};
  std::size_t within = 0, joints = 0;
  double err = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto e = joint_errors(align(preds[i], gts[i], p), gts[i]);
    for (double v : e) {
      err += v;
      within += v <= kPckThreshold ? 1 : 0;
      for (std::size_t k = 0; k < th.size(); ++k) hits[k] += v <= th[k] ? 1 : 0;
    }
    joints += e.size();
  }
  Metrics m;
  const double n = static_cast<double>(joints);
  m.mpjpe = err / n;
  m.pck = 100.0 * static_cast<double>(within) / n;
  double a = 0.0;
  for (auto h : hits) a += 100.0 * static_cast<double>(h) / n;
  m.auc = a / static_cast<double>(th.size());
  return m;
}

std::array<double, geom::kPartCount> per_part_pck(std::span<const geom::Pose3D> preds,
                                                  std::span<const geom::Pose3D> gts,
                                                  const geom::SkeletonTopology& topo, Protocol p, double threshold) {
  check_sets(preds.size(), gts.size());
  std::array<std::size_t, geom::kPartCount> hit{}, count{};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].rows() != topo.joints()) throw ShapeError("pose does not match the skeleton");
    const auto e = joint_errors(align(preds[i], gts[i], p), gts[i]);
    for (int j = 0; j < topo.joints(); ++j) {
      const int part = topo.part_of(j);
      if (part < 0) continue;
      const auto up = static_cast<std::size_t>(part);
      ++count[up];
      hit[up] += e[static_cast<std::size_t>(j)] <= threshold ? 1 : 0;
    }
  }
  std::array<double, geom::kPartCount> out{};
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (count[k] == 0)
      throw ConfigError("part '" + std::string(geom::part_name(static_cast<geom::Part>(k))) + "' has no joints");
    out[k] = 100.0 * static_cast<double>(hit[k]) / static_cast<double>(count[k]);
  }
  return out;
}

std::size_t Histogram::bin_of(double v) const {
  const auto n = counts.size();
  const double pos = (v - lo) / (hi - lo) * static_cast<double>(n);
  if (!(pos >= 0.0)) return 0;
  return std::min(n - 1, static_cast<std::size_t>(pos));
}

Histogram make_histogram(std::span<const double> values, std::size_t bins, double lo, double hi) {
  if (bins == 0 || !(hi > lo)) throw ConfigError("histogram needs bins > 0 and hi > lo");
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(bins, 0);
  h.total = values.size();
  if (values.empty()) return h;
  double s = 0.0;
  for (double v : values) {
    ++h.counts[h.bin_of(v)];
    s += v;
  }
  h.mean = s / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - h.mean) * (v - h.mean);
  h.stddev = std::sqrt(ss / static_cast<double>(values.size()));
  return h;
}

LimbRatioReport limb_ratio_report(std::span<const geom::Pose3D> poses, const geom::SkeletonTopology& topo,
                                  std::size_t bins, double lo, double hi) {
  std::array<std::vector<double>, 5> values;
  for (const auto& p : poses) {
    const auto r = geom::limb_ratios(p, topo);
    for (std::size_t k = 0; k < 5; ++k) values[k].push_back(r.values[k]);
  }
  LimbRatioReport rep;
  for (std::size_t k = 0; k < 5; ++k) rep.ratios[k] = make_histogram(values[k], bins, lo, hi);
  return rep;
}

EvalReport evaluate_protocol(std::span<const geom::Pose3D> preds, std::span<const geom::Pose3D> gts, Protocol p,
                             const geom::SkeletonTopology& topo, bool full) {
  EvalReport r;
  r.protocol = p;
  r.metrics = evaluate(preds, gts, p);
  if (full) {
    r.pa_mpjpe = p == Protocol::pa ? r.metrics.mpjpe : evaluate(preds, gts, Protocol::pa).mpjpe;
    r.parts = per_part_pck(preds, gts, topo, p);
    r.limbs = limb_ratio_report(preds, topo);
  }
  return r;
}

std::vector<geom::Pose3D> to_poses(const std::vector<std::vector<float>>& rows, int joints) {
  std::vector<geom::Pose3D> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    if (r.size() != static_cast<std::size_t>(3 * joints)) throw ShapeError("pose row has the wrong length");
    out.push_back(geom::unflatten<3>(r.data(), joints));
  }
  return out;
}

}  // namespace iso::eval
