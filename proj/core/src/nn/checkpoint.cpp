#include "iso/nn/checkpoint.hpp"

#include <charconv>
#include <cstdio>
#include <cstring>

#include "iso/common/binary_io.hpp"

namespace iso::nn {
namespace {

constexpr std::string_view kMetaPrefix = "meta/";
constexpr std::size_t kMagicLen = 8;

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::string& need(const CheckpointData& d, const std::string& key) {
  auto it = d.meta.find(key);
  if (it == d.meta.end()) throw CompatibilityError("checkpoint lacks metadata '" + key + "'");
  return it->second;
}

double to_double(const std::string& key, const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw CompatibilityError("bad number for '" + key + "': " + s);
  return v;
}

int to_int(const std::string& key, const std::string& s) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw CompatibilityError("bad integer for '" + key + "': " + s);
  return v;
}

void put_hyper(std::map<std::string, std::string>& m, const std::string& p, const LayerHyper& h) {
  m[p + ".slope"] = fmt_double(h.slope);
  m[p + ".dropout"] = fmt_double(h.dropout);
  m[p + ".bn_momentum"] = fmt_double(h.bn_momentum);
  m[p + ".bn_eps"] = fmt_double(h.bn_eps);
}

LayerHyper get_hyper(const CheckpointData& d, const std::string& p) {
  LayerHyper h;
  h.slope = to_double(p + ".slope", need(d, p + ".slope"));
  h.dropout = to_double(p + ".dropout", need(d, p + ".dropout"));
  h.bn_momentum = to_double(p + ".bn_momentum", need(d, p + ".bn_momentum"));
  h.bn_eps = to_double(p + ".bn_eps", need(d, p + ".bn_eps"));
  return h;
}

ad::Tensor<float> int_tensor(const std::vector<int>& v) {
  std::vector<float> f(v.begin(), v.end());
  return ad::Tensor<float>(ad::Shape{v.size()}, std::move(f));
}

std::vector<int> tensor_ints(const CheckpointData& d, const std::string& name) {
  const auto* t = d.find(name);
  if (!t) throw CompatibilityError("checkpoint lacks '" + name + "'");
  std::vector<int> out;
  for (float f : t->data()) out.push_back(static_cast<int>(f));
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto p = s.find(sep, start);
    out.push_back(s.substr(start, p - start));
    if (p == std::string::npos) break;
    start = p + 1;
  }
  return out;
}

template <typename Net>
void load_tensors(const CheckpointData& d, Net& net) {
  net.visit_tensors([&](const std::string& name, ad::Tensor<float>& t, TensorRole) {
    const auto* src = d.find(name);
    if (!src) throw CompatibilityError("checkpoint lacks tensor '" + name + "'");
    if (src->shape() != t.shape())
      throw CompatibilityError("tensor '" + name + "' has shape " + ad::to_string(src->shape()) +
                               ", network expects " + ad::to_string(t.shape()));
    std::copy(src->data().begin(), src->data().end(), t.data().begin());
  });
}

}  // namespace

const ad::Tensor<float>* CheckpointData::find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

std::optional<std::string> CheckpointData::meta_value(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) return std::nullopt;
  return it->second;
}

std::vector<char> encode_checkpoint(const CheckpointData& data) {
  io::BinaryWriter w;
  w.bytes(std::string_view(kCheckpointMagic, kMagicLen));
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(data.meta.size() + data.tensors.size()));
  for (const auto& [k, v] : data.meta) {
    if (k.find('=') != std::string::npos) throw ConfigError("metadata key may not contain '=': " + k);
    w.str(std::string(kMetaPrefix) + k + "=" + v);
    w.u32(1);
    w.u64(0);
  }
  for (const auto& [name, t] : data.tensors) {
    if (name.starts_with(kMetaPrefix)) throw ConfigError("tensor name collides with metadata: " + name);
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) w.u64(d);
    w.f32s(t.data());
  }
  return w.buffer();
}

CheckpointData decode_checkpoint(std::span<const char> bytes) {
  io::BinaryReader r(bytes);
  r.require(kMagicLen, "magic");
  if (r.bytes(kMagicLen) != std::string_view(kCheckpointMagic, kMagicLen))
    throw MagicError("not a checkpoint: magic mismatch", 0);
  const auto version_at = r.offset();
  const auto version = r.u32();
  if (version != kCheckpointVersion) throw VersionError(version, kCheckpointVersion, version_at);
  const auto count = r.u32();
  CheckpointData out;
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto entry_at = r.offset();
    std::string name = r.str(1u << 16);
    const auto rank = r.u32();
    if (rank > 2) throw FormatError("entry '" + name + "' has unsupported rank " + std::to_string(rank), entry_at);
    ad::Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(r.u64());
    const auto n = ad::element_count(shape);
    if (name.starts_with(kMetaPrefix)) {
      const auto eq = name.find('=');
      if (eq == std::string::npos || n != 0)
        throw FormatError("malformed metadata entry '" + name + "'", entry_at);
      out.meta[name.substr(kMetaPrefix.size(), eq - kMetaPrefix.size())] = name.substr(eq + 1);
      continue;
    }
    r.require(n * sizeof(float), "values of '" + name + "'");
    std::vector<float> values(n);
    r.f32s(values);
    out.tensors.emplace_back(std::move(name), ad::Tensor<float>(std::move(shape), std::move(values)));
  }
  if (!r.at_end()) throw FormatError("trailing bytes after last entry", r.offset());
  return out;
}

void write_checkpoint(const std::filesystem::path& path, const CheckpointData& data) {
  io::write_file(path, encode_checkpoint(data));
}

CheckpointData read_checkpoint(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  return decode_checkpoint(bytes);
}

CheckpointData to_checkpoint(const ModelBundle& b) {
  CheckpointData d;
  d.meta = b.meta;
  const auto& lc = b.lifter.config();
  d.meta["lifter.joints"] = std::to_string(lc.joints);
  d.meta["lifter.width"] = std::to_string(lc.width);
  d.meta["lifter.shared_blocks"] = std::to_string(lc.shared_blocks);
  d.meta["lifter.head_blocks"] = std::to_string(lc.head_blocks);
  d.meta["lifter.ssl_head"] = lc.ssl_head ? "1" : "0";
  d.meta["lifter.mm_per_unit"] = fmt_double(lc.mm_per_unit);
  put_hyper(d.meta, "lifter", lc.hyper);
  if (b.disc) {
    const auto& dc = b.disc->config();
    d.meta["disc.joints"] = std::to_string(dc.joints);
    d.meta["disc.width"] = std::to_string(dc.width);
    d.meta["disc.blocks"] = std::to_string(dc.blocks);
    put_hyper(d.meta, "disc", dc.hyper);
  }
  d.meta["camera.focal"] = fmt_double(b.camera.focal);
  d.meta["camera.root_depth"] = fmt_double(b.camera.root_depth);
  d.meta["ssl_kind"] = b.ssl_kind;
  std::string names;
  for (const auto& n : b.topology.names()) {
    if (n.find(',') != std::string::npos) throw ConfigError("joint names may not contain ','");
    names += (names.empty() ? "" : ",") + n;
  }
  d.meta["topology.names"] = names;
  d.tensors.emplace_back("topology/parent", int_tensor(b.topology.parents()));
  d.tensors.emplace_back("topology/mirror", int_tensor(b.topology.mirrors()));
  d.tensors.emplace_back("topology/part", int_tensor(b.topology.parts()));
  b.lifter.visit_tensors([&](const std::string& name, const ad::Tensor<float>& t, TensorRole) {
    d.tensors.emplace_back(name, ad::Tensor<float>(t.shape(), t.storage()));
  });
  if (b.disc)
    b.disc->visit_tensors([&](const std::string& name, const ad::Tensor<float>& t, TensorRole) {
      d.tensors.emplace_back(name, ad::Tensor<float>(t.shape(), t.storage()));
    });
  for (const auto& e : b.extra) d.tensors.push_back(e);
  return d;
}

ModelBundle from_checkpoint(const CheckpointData& d) {
  LifterConfig lc;
  lc.joints = to_int("lifter.joints", need(d, "lifter.joints"));
  lc.width = to_int("lifter.width", need(d, "lifter.width"));
  lc.shared_blocks = to_int("lifter.shared_blocks", need(d, "lifter.shared_blocks"));
  lc.head_blocks = to_int("lifter.head_blocks", need(d, "lifter.head_blocks"));
  lc.ssl_head = need(d, "lifter.ssl_head") == "1";
  lc.mm_per_unit = to_double("lifter.mm_per_unit", need(d, "lifter.mm_per_unit"));
  lc.hyper = get_hyper(d, "lifter");

  geom::SkeletonTopology topo(split(need(d, "topology.names"), ','), tensor_ints(d, "topology/parent"),
                              tensor_ints(d, "topology/mirror"), tensor_ints(d, "topology/part"));
  if (topo.joints() != lc.joints) throw CompatibilityError("topology joint count disagrees with lifter");

  Lifter<float> lifter = Lifter<float>::zeros(lc);
  load_tensors(d, lifter);

  std::optional<Discriminator<float>> disc;
  if (d.meta.count("disc.width")) {
    DiscriminatorConfig dc;
    dc.joints = to_int("disc.joints", need(d, "disc.joints"));
    dc.width = to_int("disc.width", need(d, "disc.width"));
    dc.blocks = to_int("disc.blocks", need(d, "disc.blocks"));
    dc.hyper = get_hyper(d, "disc");
    disc.emplace(Discriminator<float>::zeros(dc));
    load_tensors(d, *disc);
  }

  geom::CameraModel cam;
  cam.focal = to_double("camera.focal", need(d, "camera.focal"));
  cam.root_depth = to_double("camera.root_depth", need(d, "camera.root_depth"));

  ModelBundle b{std::move(lifter), std::move(disc), std::move(topo), cam, need(d, "ssl_kind"), {}, {}};
  static const char* kReserved[] = {"lifter.", "disc.", "camera.", "topology.", "ssl_kind"};
  for (const auto& [k, v] : d.meta) {
    bool reserved = false;
    for (const char* p : kReserved) reserved = reserved || k.starts_with(p);
    if (!reserved) b.meta[k] = v;
  }
  for (const auto& [name, t] : d.tensors)
    if (name.starts_with("adam/")) b.extra.emplace_back(name, t);
  return b;
}

void save_model(const std::filesystem::path& path, const ModelBundle& bundle) {
  write_checkpoint(path, to_checkpoint(bundle));
}

ModelBundle load_model(const std::filesystem::path& path) {
  return from_checkpoint(read_checkpoint(path));
}

}  // namespace iso::nn
