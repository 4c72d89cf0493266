#include "iso_cli/commands.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "iso/common/error.hpp"
#include "iso/common/rng.hpp"
#include "iso/eval/report.hpp"
#include "iso/nn/checkpoint.hpp"
#include "iso/synthdata/dataset_io.hpp"

namespace iso::cli {
namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kNoiseStream = 0x6e6f697365;

void require_parent(const fs::path& file) {
  const fs::path dir = file.parent_path();
  if (!dir.empty() && !fs::is_directory(dir))
    throw IoError("output directory " + dir.string() + " does not exist");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

struct InferOutcome {
  std::vector<std::vector<float>> inputs;
  adapt::SequenceResult result;
};

InferOutcome run_inference(const nn::ModelBundle& model, const synth::Dataset& data, const RunConfig& rc) {
  synth::require_compatible(data, model.topology);
  InferOutcome o;
  o.inputs = prepare_inputs(data, rc);
  adapt::IsoEngine engine(model, iso_config(rc));
  o.result = engine.infer_sequence(o.inputs);
  return o;
}

double mean_seconds(const adapt::SequenceResult& r) {
  double s = 0.0;
  for (const auto& t : r.timing) s += t.seconds;
  return r.timing.empty() ? 0.0 : s / static_cast<double>(r.timing.size());
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kConfigError;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const FormatError*>(&e)) return kIoError;
  if (dynamic_cast<const CompatibilityError*>(&e)) return kCompatibilityError;
  return kFailure;
}

std::vector<std::vector<float>> prepare_inputs(const synth::Dataset& data, const RunConfig& rc) {
  const long long limit = rc.integer("iso.limit");
  if (limit < 0) throw ConfigError("iso.limit must be >= 0");
  const double sigma = rc.real("iso.sigma");
  if (!(sigma >= 0.0)) throw ConfigError("iso.sigma must be >= 0");
  const std::size_t n = limit == 0 ? data.size() : std::min(data.size(), static_cast<std::size_t>(limit));
  const std::uint64_t noise_seed = derive_seed(static_cast<std::uint64_t>(rc.integer("seed")), kNoiseStream);
  std::vector<std::vector<float>> xs(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (sigma == 0.0) {
      xs[i] = data.samples[i].pose2d;
      continue;
    }
    Rng rng(derive_seed(noise_seed, i));
    const geom::Pose2D noisy = synth::add_noise2d(data.pose2d(i), sigma, rng, data.topology.root());
    xs[i].resize(static_cast<std::size_t>(noisy.size()));
    for (Eigen::Index j = 0; j < noisy.rows(); ++j)
      for (Eigen::Index c = 0; c < 2; ++c) xs[i][static_cast<std::size_t>(2 * j + c)] = static_cast<float>(noisy(j, c));
  }
  return xs;
}

void cmd_gen_data(const RunConfig& rc, bool create, std::ostream& out) {
  const fs::path dir = rc.path("out_dir");
  if (!fs::is_directory(dir)) {
    if (!create) throw IoError("output directory " + dir.string() + " does not exist (pass --create)");
    fs::create_directories(dir);
  }
  const geom::CameraModel cam = camera_model(rc);
  for (const auto& [key, profile] : {std::pair{"data.source", source_profile(rc)},
                                     std::pair{"data.target", target_profile(rc)}}) {
    const fs::path p = rc.path(key);
    require_parent(p);
    const synth::Dataset ds = synth::make_dataset(profile, cam);
    synth::write_dataset(p, ds);
    write_manifest(p, "gen-data", rc);
    out << "wrote " << ds.size() << " " << profile.name << " samples to " << p.string() << '\n';
  }
}

void cmd_train(const RunConfig& rc, std::ostream& out) {
  const train::TrainConfig tc = train_config(rc);
  const fs::path ckpt = rc.path("train.checkpoint"), log = rc.path("train.log");
  require_parent(ckpt);
  require_parent(log);
  const synth::Dataset data = synth::read_dataset(rc.path("data.source"), tc.lifter.joints);
  out << "training " << (tc.ssl == losses::SslKind::none ? "baseline" : "joint-" + std::string(to_string(tc.ssl)))
      << " on " << data.size() << " samples for " << tc.epochs << " epochs\n";
  train::TrainResult res = train::train(data, tc);
  for (const auto& e : res.report.epochs) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "epoch %d lr %.4g fsl %.6g ssl %.6g disc %.6g (%.1fs)\n", e.epoch, e.lr, e.fsl,
                  e.ssl, e.disc, e.seconds);
    out << buf;
  }
  nn::save_model(ckpt, res.model);
  train::write_metrics_log(log, res.report);
  write_manifest(ckpt, "train", rc);
  out << "wrote " << ckpt.string() << " and " << log.string() << '\n';
}

void cmd_infer(const RunConfig& rc, std::ostream& out) {
  const fs::path pred_path = rc.path("iso.predictions"), timing_path = rc.path("iso.timing");
  require_parent(pred_path);
  require_parent(timing_path);
  const nn::ModelBundle model = nn::load_model(rc.path("train.checkpoint"));
  const synth::Dataset data = synth::read_dataset(rc.path("data.target"), model.topology.joints());
  const InferOutcome o = run_inference(model, data, rc);

  synth::Dataset preds;
  preds.topology = data.topology;
  preds.camera = data.camera;
  preds.config_echo = "predictions\niso.mode=" + rc.text("iso.mode") + "\n";
  preds.samples.resize(o.inputs.size());
  for (std::size_t i = 0; i < o.inputs.size(); ++i) preds.samples[i] = {o.result.predictions[i], o.inputs[i]};
  synth::write_dataset(pred_path, preds);
  adapt::write_timing(timing_path, o.result.timing);
  write_manifest(pred_path, "infer", rc);
  char buf[200];
  std::snprintf(buf, sizeof buf, "%zu samples, %zu adaptations, %.6f s/sample\n", o.inputs.size(),
                o.result.adaptations, mean_seconds(o.result));
  out << buf << "wrote " << pred_path.string() << " and " << timing_path.string() << '\n';
}

void cmd_eval(const RunConfig& rc, std::ostream& out) {
  const fs::path report_path = rc.path("eval.report");
  require_parent(report_path);
  const synth::Dataset preds = synth::read_dataset(rc.path("iso.predictions"));
  const synth::Dataset gt = synth::read_dataset(rc.path("data.target"), preds.joints());
  synth::require_compatible(preds, gt.topology);
  if (preds.size() > gt.size())
    throw CompatibilityError("predictions file has " + std::to_string(preds.size()) + " records, ground truth only " +
                             std::to_string(gt.size()));
  std::vector<geom::Pose3D> P, G;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    P.push_back(preds.pose3d(i));
    G.push_back(gt.pose3d(i));
  }
  const eval::EvalReport r = eval::evaluate_protocol(P, G, eval_protocol(rc), gt.topology, rc.boolean("eval.full"));
  eval::write_text_file(report_path, [&](std::ostream& os) { eval::write_eval_report(os, r); });
  write_manifest(report_path, "eval", rc);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s: PCK %.2f AUC %.2f MPJPE %.2f over %zu samples\n",
                std::string(eval::to_string(r.protocol)).c_str(), r.metrics.pck, r.metrics.auc, r.metrics.mpjpe,
                P.size());
  out << buf << "wrote " << report_path.string() << '\n';
}

void cmd_sweep(const RunConfig& rc, const std::string& param, const std::vector<std::string>& values,
               const std::vector<std::string>& modes, std::ostream& out) {
  if (param != "T" && param != "alpha") throw ConfigError("unknown sweep parameter '" + param + "' (expected T or alpha)");
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (modes.empty()) throw ConfigError("sweep needs at least one mode");
  const fs::path report_path = rc.path("eval.sweep_report");
  require_parent(report_path);
  const nn::ModelBundle model = nn::load_model(rc.path("train.checkpoint"));
  const synth::Dataset data = synth::read_dataset(rc.path("data.target"), model.topology.joints());
  std::vector<geom::Pose3D> G;
  const eval::Protocol protocol = eval_protocol(rc);

  std::vector<eval::SweepRow> rows;
  for (const auto& mode : modes) {
    for (const auto& v : values) {
      RunConfig local = rc;
      local.set("iso.mode", mode);
      if (!rc.is_set("iso.T") || param == "T") local.set("iso.T", "auto");
      local.set(param == "T" ? "iso.T" : "iso.alpha", v);
      local.resolve();
      const InferOutcome o = run_inference(model, data, local);
      if (G.empty())
        for (std::size_t i = 0; i < o.inputs.size(); ++i) G.push_back(data.pose3d(i));
      const auto P = eval::to_poses(o.result.predictions, data.joints());
      eval::SweepRow row{param, param == "T" ? static_cast<double>(local.integer("iso.T")) : local.real("iso.alpha"),
                         mode, eval::evaluate(P, G, protocol)};
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s=%s %s: PCK %.2f AUC %.2f MPJPE %.2f\n", param.c_str(), v.c_str(),
                    mode.c_str(), row.metrics.pck, row.metrics.auc, row.metrics.mpjpe);
      out << buf;
      rows.push_back(std::move(row));
    }
  }
  eval::write_text_file(report_path, [&](std::ostream& os) { eval::write_sweep_table(os, rows); });
  write_manifest(report_path, "sweep", rc);
  out << "wrote " << report_path.string() << '\n';
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Inference-stage optimization for 2D-to-3D pose lifting", "iso"};
  app.require_subcommand(1);

  std::string config_file, out_dir, seed;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config,-c", config_file, "key = value experiment file")->check(CLI::ExistingFile);
    sub->add_option("--out-dir", out_dir, "overrides out_dir");
    sub->add_option("--seed", seed, "overrides seed");
    sub->add_option("--set", sets, "key=value override, repeatable");
  };
  auto flag = [&](CLI::App* sub, const std::string& name, const std::string& key, const std::string& help) {
    sub->add_option(name, flags[key], help);
  };

  bool create = false;
  auto* gen = app.add_subcommand("gen-data", "write source and target datasets");
  common(gen);
  gen->add_flag("--create", create, "create the output directory when missing");

  auto* tr = app.add_subcommand("train", "train a baseline or joint model");
  common(tr);
  flag(tr, "--epochs", "train.epochs", "overrides train.epochs");
  flag(tr, "--ssl", "train.ssl", "none, adversary or cycle");
  flag(tr, "--data", "data.source", "source dataset");
  flag(tr, "--checkpoint", "train.checkpoint", "output checkpoint");

  auto* inf = app.add_subcommand("infer", "predict target poses, optionally with inference-stage optimization");
  common(inf);
  flag(inf, "--checkpoint", "train.checkpoint", "model checkpoint");
  flag(inf, "--data", "data.target", "target dataset");
  flag(inf, "--iso", "iso.mode", "off, vanilla or online");
  flag(inf, "--T", "iso.T", "updates per adapted instance");
  flag(inf, "--alpha", "iso.alpha", "adaptation learning rate");
  flag(inf, "--skip", "iso.skip", "adapt every k-th instance");
  flag(inf, "--sigma", "iso.sigma", "2D noise in pixels");
  flag(inf, "--workers", "iso.workers", "vanilla mode threads");
  flag(inf, "--limit", "iso.limit", "first N samples only");
  flag(inf, "--out", "iso.predictions", "predictions file");
  flag(inf, "--timing", "iso.timing", "timing TSV");

  bool full = false;
  auto* ev = app.add_subcommand("eval", "score predictions against ground truth");
  common(ev);
  flag(ev, "--predictions", "iso.predictions", "predictions file");
  flag(ev, "--data", "data.target", "ground-truth dataset");
  flag(ev, "--protocol", "eval.protocol", "us, gs or pa");
  flag(ev, "--out", "eval.report", "report TSV");
  ev->add_flag("--full", full, "add PA-MPJPE, per-part PCK and limb ratios");

  std::string param, values, modes = "vanilla,online";
  auto* sw = app.add_subcommand("sweep", "PCK as a function of T or alpha");
  common(sw);
  sw->add_option("--param", param, "T or alpha")->required();
  sw->add_option("--values", values, "comma-separated values")->required();
  sw->add_option("--modes", modes, "comma-separated iso modes");
  flag(sw, "--checkpoint", "train.checkpoint", "model checkpoint");
  flag(sw, "--data", "data.target", "target dataset");
  flag(sw, "--protocol", "eval.protocol", "us, gs or pa");
  flag(sw, "--sigma", "iso.sigma", "2D noise in pixels");
  flag(sw, "--limit", "iso.limit", "first N samples only");
  flag(sw, "--out", "eval.sweep_report", "sweep TSV");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  if (!argv_rev.empty()) argv_rev.pop_back();
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    RunConfig rc = config_file.empty() ? RunConfig() : RunConfig::from_file(config_file);
    rc.apply_environment();
    for (const auto& kv : sets) rc.assign(kv);
    if (!seed.empty()) rc.set("seed", seed);
    if (!out_dir.empty()) {
      rc.set_base_dir(fs::current_path());
      rc.set("out_dir", fs::absolute(out_dir).string());
    }
    for (const auto& [key, value] : flags)
      if (!value.empty()) rc.set(key, value);
    if (full) rc.set("eval.full", "true");
    rc.resolve();

    if (*gen) cmd_gen_data(rc, create, out);
    if (*tr) cmd_train(rc, out);
    if (*inf) cmd_infer(rc, out);
    if (*ev) cmd_eval(rc, out);
    if (*sw) cmd_sweep(rc, param, split_list(values), split_list(modes), out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kOk;
}

}  // namespace iso::cli
