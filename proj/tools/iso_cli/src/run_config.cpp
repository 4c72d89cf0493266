#include "iso_cli/run_config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "iso/common/error.hpp"
#include "iso/common/rng.hpp"

namespace iso::cli {
namespace {

using K = ValueKind;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

const KeySpec* find_spec(const std::string& key) {
  for (const auto& s : key_specs())
    if (s.key == key) return &s;
  return nullptr;
}

bool parse_bool(const std::string& v, bool& out) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") {
    out = true;
    return true;
  }
  if (v == "false" || v == "0" || v == "no" || v == "off") {
    out = false;
    return true;
  }
  return false;
}

bool parse_int(const std::string& v, long long& out) {
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  return ec == std::errc{} && p == end;
}

bool parse_real(const std::string& v, double& out) {
  if (v.empty()) return false;
  char* end = nullptr;
  out = std::strtod(v.c_str(), &end);
  return end == v.c_str() + v.size();
}

// Values that may stay symbolic until resolve().
bool is_auto(const std::string& key, const std::string& v) {
  return v == "auto" && (key == "iso.T" || key == "data.source_seed" || key == "data.target_seed" ||
                         key == "arch.disc_width");
}

void check_value(const KeySpec& spec, const std::string& v) {
  if (is_auto(spec.key, v)) return;
  bool ok = true;
  switch (spec.kind) {
    case K::integer: {
      long long i;
      ok = parse_int(v, i);
      break;
    }
    case K::real: {
      double d;
      ok = parse_real(v, d);
      break;
    }
    case K::boolean: {
      bool b;
      ok = parse_bool(v, b);
      break;
    }
    case K::path:
      ok = !v.empty();
      break;
    case K::text:
      break;
  }
  if (!ok) throw ConfigError("bad value '" + v + "' for " + spec.key);
}

int as_int(long long v, const std::string& key) {
  if (v < INT32_MIN || v > INT32_MAX) throw ConfigError(key + " is out of range");
  return static_cast<int>(v);
}

}  // namespace

const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = {
      {"seed", K::integer, "0", "run seed; ISO_SEED overrides"},
      {"out_dir", K::path, ".", "directory for every relative output path"},
      {"data.profile", K::text, "desk-shift", "shift profile"},
      {"data.source", K::path, "source.isod", "source dataset file"},
      {"data.target", K::path, "target.isod", "target dataset file"},
      {"data.source_samples", K::integer, "20000", ""},
      {"data.target_samples", K::integer, "2000", ""},
      {"data.source_seed", K::integer, "auto", "defaults to a value derived from seed"},
      {"data.target_seed", K::integer, "auto", "defaults to a value derived from seed"},
      {"camera.focal", K::real, "1", ""},
      {"camera.root_depth", K::real, "5500", "mm"},
      {"arch.width", K::integer, "1024", ""},
      {"arch.shared_blocks", K::integer, "3", ""},
      {"arch.head_blocks", K::integer, "1", ""},
      {"arch.disc_width", K::integer, "auto", "defaults to arch.width"},
      {"arch.disc_blocks", K::integer, "3", ""},
      {"arch.dropout", K::real, "0.5", ""},
      {"arch.slope", K::real, "0.01", "leaky ReLU slope"},
      {"arch.bn_momentum", K::real, "0.1", ""},
      {"arch.bn_eps", K::real, "1e-5", ""},
      {"train.epochs", K::integer, "30", ""},
      {"train.batch_size", K::integer, "64", ""},
      {"train.lr", K::real, "2e-4", ""},
      {"train.gamma", K::real, "0.96", "per-epoch decay"},
      {"train.ssl", K::text, "cycle", "none, adversary or cycle"},
      {"train.flip", K::boolean, "true", ""},
      {"train.views_per_sample", K::integer, "1", ""},
      {"train.auto_unit", K::boolean, "true", "standardize 3D targets by their RMS"},
      {"train.save_optimizer", K::boolean, "false", ""},
      {"train.beta1", K::real, "0.9", ""},
      {"train.beta2", K::real, "0.999", ""},
      {"train.adam_eps", K::real, "1e-8", ""},
      {"train.clip_norm", K::real, "0", "0 disables"},
      {"train.checkpoint", K::path, "model.ckpt", ""},
      {"train.log", K::path, "train_log.tsv", ""},
      {"loss.lambda", K::real, "0.1", ""},
      {"loss.lambda_2d", K::real, "10", ""},
      {"loss.lambda_3d", K::real, "0.1", ""},
      {"iso.mode", K::text, "online", "off, vanilla or online"},
      {"iso.T", K::integer, "auto", "10 for vanilla, 1 for online"},
      {"iso.alpha", K::real, "2e-5", ""},
      {"iso.copies", K::integer, "32", ""},
      {"iso.views_per_copy", K::integer, "1", ""},
      {"iso.skip", K::integer, "1", ""},
      {"iso.freeze_bn", K::boolean, "true", ""},
      {"iso.sgd", K::boolean, "false", "plain gradient descent instead of Adam"},
      {"iso.workers", K::integer, "1", "vanilla mode threads"},
      {"iso.sigma", K::real, "0", "2D noise in pixels"},
      {"iso.limit", K::integer, "0", "use only the first N target samples; 0 = all"},
      {"iso.predictions", K::path, "predictions.isod", ""},
      {"iso.timing", K::path, "timing.tsv", ""},
      {"eval.protocol", K::text, "us", "us, gs or pa"},
      {"eval.full", K::boolean, "false", ""},
      {"eval.report", K::path, "eval.tsv", ""},
      {"eval.sweep_report", K::path, "sweep.tsv", ""},
  };
  return specs;
}

RunConfig::RunConfig() : base_dir_(std::filesystem::current_path()) {
  for (const auto& s : key_specs()) values_[s.key] = s.fallback;
}

RunConfig RunConfig::from_file(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw IoError("cannot read config " + file.string());
  std::stringstream ss;
  ss << is.rdbuf();
  const auto dir = std::filesystem::absolute(file).parent_path();
  return parse(ss.str(), dir, file.string());
}

RunConfig RunConfig::parse(std::string_view text, const std::filesystem::path& base_dir, const std::string& origin) {
  RunConfig rc;
  rc.base_dir_ = base_dir;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    try {
      rc.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rc;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const KeySpec* spec = find_spec(key);
  if (!spec) throw ConfigError("unknown config key '" + key + "'");
  check_value(*spec, value);
  values_[key] = value;
  explicit_.insert(key);
}

void RunConfig::assign(std::string_view kv) {
  const auto eq = kv.find('=');
  if (eq == std::string_view::npos) throw ConfigError("expected key=value, got '" + std::string(kv) + "'");
  set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
}

const std::string& RunConfig::text(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

long long RunConfig::integer(const std::string& key) const {
  long long v;
  if (!parse_int(text(key), v)) throw ConfigError(key + " is not an integer: '" + text(key) + "'");
  return v;
}

double RunConfig::real(const std::string& key) const {
  double v;
  if (!parse_real(text(key), v)) throw ConfigError(key + " is not a number: '" + text(key) + "'");
  return v;
}

bool RunConfig::boolean(const std::string& key) const {
  bool v;
  if (!parse_bool(text(key), v)) throw ConfigError(key + " is not a boolean: '" + text(key) + "'");
  return v;
}

std::filesystem::path RunConfig::path(const std::string& key) const {
  std::filesystem::path out = base_dir_ / std::filesystem::path(text("out_dir"));
  if (key == "out_dir") return out.lexically_normal();
  const std::filesystem::path p(text(key));
  return (p.is_absolute() ? p : out / p).lexically_normal();
}

void RunConfig::apply_environment() {
  if (const char* s = std::getenv("ISO_SEED"); s && *s) {
    try {
      set("seed", s);
    } catch (const ConfigError&) {
      throw ConfigError(std::string("ISO_SEED is not an integer: '") + s + "'");
    }
  }
}

void RunConfig::resolve() {
  const auto seed = static_cast<std::uint64_t>(integer("seed"));
  if (text("data.source_seed") == "auto") values_["data.source_seed"] = std::to_string(derive_seed(seed, 1) >> 1);
  if (text("data.target_seed") == "auto") values_["data.target_seed"] = std::to_string(derive_seed(seed, 2) >> 1);
  if (text("arch.disc_width") == "auto") values_["arch.disc_width"] = text("arch.width");
  if (text("iso.T") == "auto") values_["iso.T"] = text("iso.mode") == "vanilla" ? "10" : "1";
}

std::string RunConfig::manifest() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) {
    const KeySpec* spec = find_spec(k);
    os << k << " = " << (spec && spec->kind == K::path ? path(k).string() : v) << '\n';
  }
  return os.str();
}

geom::CameraModel camera_model(const RunConfig& rc) {
  geom::CameraModel cam;
  cam.focal = rc.real("camera.focal");
  cam.root_depth = rc.real("camera.root_depth");
  cam.validate();
  return cam;
}

namespace {

void check_profile(const RunConfig& rc) {
  if (rc.text("data.profile") != "desk-shift")
    throw ConfigError("unknown data.profile '" + rc.text("data.profile") + "' (expected desk-shift)");
}

std::size_t sample_count(const RunConfig& rc, const std::string& key) {
  const long long n = rc.integer(key);
  if (n < 1) throw ConfigError(key + " must be >= 1");
  return static_cast<std::size_t>(n);
}

}  // namespace

synth::DistributionConfig source_profile(const RunConfig& rc) {
  check_profile(rc);
  auto c = synth::DistributionConfig::desk_shift_source();
  c.samples = sample_count(rc, "data.source_samples");
  c.seed = static_cast<std::uint64_t>(rc.integer("data.source_seed"));
  return c;
}

synth::DistributionConfig target_profile(const RunConfig& rc) {
  check_profile(rc);
  auto c = synth::DistributionConfig::desk_shift_target();
  c.samples = sample_count(rc, "data.target_samples");
  c.seed = static_cast<std::uint64_t>(rc.integer("data.target_seed"));
  return c;
}

train::TrainConfig train_config(const RunConfig& rc) {
  train::TrainConfig c;
  c.epochs = as_int(rc.integer("train.epochs"), "train.epochs");
  c.batch_size = as_int(rc.integer("train.batch_size"), "train.batch_size");
  c.lr = {rc.real("train.lr"), rc.real("train.gamma")};
  c.adam.beta1 = rc.real("train.beta1");
  c.adam.beta2 = rc.real("train.beta2");
  c.adam.eps = rc.real("train.adam_eps");
  c.adam.clip_norm = rc.real("train.clip_norm");
  c.weights = {rc.real("loss.lambda"), rc.real("loss.lambda_2d"), rc.real("loss.lambda_3d")};
  c.ssl = losses::parse_ssl_kind(rc.text("train.ssl"));
  c.seed = static_cast<std::uint64_t>(rc.integer("seed"));
  c.flip = rc.boolean("train.flip");
  c.views_per_sample = as_int(rc.integer("train.views_per_sample"), "train.views_per_sample");
  c.auto_unit = rc.boolean("train.auto_unit");
  c.save_optimizer = rc.boolean("train.save_optimizer");
  nn::LayerHyper h;
  h.slope = rc.real("arch.slope");
  h.dropout = rc.real("arch.dropout");
  h.bn_momentum = rc.real("arch.bn_momentum");
  h.bn_eps = rc.real("arch.bn_eps");
  c.lifter.width = as_int(rc.integer("arch.width"), "arch.width");
  c.lifter.shared_blocks = as_int(rc.integer("arch.shared_blocks"), "arch.shared_blocks");
  c.lifter.head_blocks = as_int(rc.integer("arch.head_blocks"), "arch.head_blocks");
  c.lifter.hyper = h;
  c.disc.width = as_int(rc.integer("arch.disc_width"), "arch.disc_width");
  c.disc.blocks = as_int(rc.integer("arch.disc_blocks"), "arch.disc_blocks");
  c.disc.hyper = h;
  c.validate();
  return c;
}

adapt::IsoConfig iso_config(const RunConfig& rc) {
  adapt::IsoConfig c;
  c.mode = adapt::parse_iso_mode(rc.text("iso.mode"));
  c.T = as_int(rc.integer("iso.T"), "iso.T");
  c.alpha = rc.real("iso.alpha");
  c.copies = as_int(rc.integer("iso.copies"), "iso.copies");
  c.views_per_copy = as_int(rc.integer("iso.views_per_copy"), "iso.views_per_copy");
  c.skip = as_int(rc.integer("iso.skip"), "iso.skip");
  c.freeze_bn = rc.boolean("iso.freeze_bn");
  c.seed = static_cast<std::uint64_t>(rc.integer("seed"));
  c.weights = {rc.real("loss.lambda"), rc.real("loss.lambda_2d"), rc.real("loss.lambda_3d")};
  c.adam.beta1 = rc.real("train.beta1");
  c.adam.beta2 = rc.real("train.beta2");
  c.adam.eps = rc.real("train.adam_eps");
  c.adam.sgd = rc.boolean("iso.sgd");
  c.workers = as_int(rc.integer("iso.workers"), "iso.workers");
  c.validate();
  return c;
}

eval::Protocol eval_protocol(const RunConfig& rc) { return eval::parse_protocol(rc.text("eval.protocol")); }

std::filesystem::path write_manifest(const std::filesystem::path& output, const std::string& command,
                                     const RunConfig& rc) {
  std::filesystem::path p = output;
  p += ".manifest.txt";
  std::ofstream os(p);
  if (!os) throw IoError("cannot open " + p.string() + " for writing");
  os << "# " << command << '\n' << rc.manifest();
  if (!os) throw IoError("failed writing " + p.string());
  return p;
}

}  // namespace iso::cli
