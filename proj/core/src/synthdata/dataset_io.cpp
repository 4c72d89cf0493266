#include "iso/synthdata/dataset_io.hpp"

#include <cstdio>
#include <fstream>

#include "iso/common/binary_io.hpp"

namespace iso::synth {
namespace {

constexpr std::size_t kMagicLen = 8;

void put_f64(io::BinaryWriter& w, double v) { w.raw(&v, sizeof v); }

double get_f64(io::BinaryReader& r) {
  std::string b = r.bytes(sizeof(double));
  double v;
  std::memcpy(&v, b.data(), sizeof v);
  return v;
}

}  // namespace

std::vector<char> encode_dataset(const Dataset& ds) {
  const int J = ds.joints();
  io::BinaryWriter w;
  w.bytes(std::string_view(kDatasetMagic, kMagicLen));
  w.u32(kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(J));
  for (const auto& n : ds.topology.names()) w.str(n);
  for (int p : ds.topology.parents()) w.i32(p);
  for (int m : ds.topology.mirrors()) w.i32(m);
  for (int p : ds.topology.parts()) w.i32(p);
  put_f64(w, ds.camera.focal);
  put_f64(w, ds.camera.root_depth);
  w.str(ds.config_echo);
  w.u64(ds.samples.size());
  const auto record_bytes = static_cast<std::uint32_t>(5 * J * sizeof(float));
  for (const auto& s : ds.samples) {
    if (s.pose3d.size() != static_cast<std::size_t>(3 * J) || s.pose2d.size() != static_cast<std::size_t>(2 * J))
      throw ShapeError("dataset record does not match the joint count");
    w.u32(record_bytes);
    w.f32s(s.pose3d);
    w.f32s(s.pose2d);
  }
  return w.buffer();
}

Dataset decode_dataset(std::span<const char> bytes) {
  io::BinaryReader r(bytes);
  r.require(kMagicLen, "magic");
  if (r.bytes(kMagicLen) != std::string_view(kDatasetMagic, kMagicLen))
    throw MagicError("not a dataset file: magic mismatch", 0);
  const auto version_at = r.offset();
  const auto version = r.u32();
  if (version != kDatasetVersion) throw VersionError(version, kDatasetVersion, version_at);
  const auto j_at = r.offset();
  const auto J = r.u32();
  if (J < 1 || J > 4096) throw FormatError("implausible joint count " + std::to_string(J), j_at);
  std::vector<std::string> names(J);
  for (auto& n : names) n = r.str(256);
  std::vector<int> parent(J), mirror(J), part(J);
  for (auto& v : parent) v = r.i32();
  for (auto& v : mirror) v = r.i32();
  for (auto& v : part) v = r.i32();
  const auto topo_at = r.offset();
  Dataset ds;
  try {
    ds.topology = geom::SkeletonTopology(std::move(names), std::move(parent), std::move(mirror), std::move(part));
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid topology: ") + e.what(), topo_at);
  }
  ds.camera.focal = get_f64(r);
  ds.camera.root_depth = get_f64(r);
  ds.config_echo = r.str();
  const auto count_at = r.offset();
  const auto count = r.u64();
  const auto expected = static_cast<std::uint32_t>(5 * J * sizeof(float));
  if (count > r.remaining() / (expected + 4) + 1)
    throw FormatError("record count " + std::to_string(count) + " exceeds file size", count_at);
  ds.samples.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto at = r.offset();
    const auto len = r.u32();
    if (len != expected)
      throw FormatError("record " + std::to_string(i) + " has length " + std::to_string(len) + ", expected " +
                            std::to_string(expected),
                        at);
    r.require(len, "record " + std::to_string(i));
    auto& s = ds.samples[i];
    s.pose3d.resize(3 * J);
    s.pose2d.resize(2 * J);
    r.f32s(s.pose3d);
    r.f32s(s.pose2d);
  }
  if (!r.at_end()) throw FormatError("trailing bytes after last record", r.offset());
  return ds;
}

void write_dataset(const std::filesystem::path& path, const Dataset& ds) {
  io::write_file(path, encode_dataset(ds));
}

Dataset read_dataset(const std::filesystem::path& path, std::optional<int> expected_joints) {
  Dataset ds = decode_dataset(io::read_file(path));
  if (expected_joints && ds.joints() != *expected_joints)
    throw CompatibilityError(path.string() + " has " + std::to_string(ds.joints()) + " joints, expected " +
                             std::to_string(*expected_joints));
  return ds;
}

void require_compatible(const Dataset& ds, const geom::SkeletonTopology& topo) {
  if (ds.joints() != topo.joints())
    throw CompatibilityError("dataset has " + std::to_string(ds.joints()) + " joints, model expects " +
                             std::to_string(topo.joints()));
  if (!(ds.topology == topo)) throw CompatibilityError("dataset skeleton differs from the model's skeleton");
}

void export_tsv(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  char buf[32];
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    os << i;
    for (float v : ds.samples[i].pose3d) {
      std::snprintf(buf, sizeof buf, "\t%.9g", static_cast<double>(v));
      os << buf;
    }
    for (float v : ds.samples[i].pose2d) {
      std::snprintf(buf, sizeof buf, "\t%.9g", static_cast<double>(v));
      os << buf;
    }
    os << '\n';
  }
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace iso::synth
