#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "iso/eval/metrics.hpp"

namespace iso::eval {

/// One method row with optional per-sample time (seconds).
struct MethodRow {
  std::string method;
  Metrics metrics;
  std::optional<double> seconds;
};

/// method, PCK, AUC, MPJPE[, Time]
void write_method_table(std::ostream& os, const std::vector<MethodRow>& rows, bool with_time = false);

struct NoiseRow {
  double sigma = 0.0;
  std::string method;
  Metrics metrics;
};

/// sigma, method, PCK, AUC, MPJPE
void write_noise_table(std::ostream& os, const std::vector<NoiseRow>& rows);

struct SweepRow {
  std::string param;
  double value = 0.0;
  std::string mode;
  Metrics metrics;
};

/// param, value, mode, PCK, AUC, MPJPE
void write_sweep_table(std::ostream& os, const std::vector<SweepRow>& rows);

/// Metric summary plus, when present, per-part PCK and limb-ratio sections.
void write_eval_report(std::ostream& os, const EvalReport& report);

/// label, ratio, mean, std, then the bin counts.
void write_limb_table(std::ostream& os, const std::vector<std::pair<std::string, LimbRatioReport>>& reports);

/// Writes `body` to a file through a stream callback.
template <typename F>
void write_text_file(const std::filesystem::path& path, F&& body);

}  // namespace iso::eval

#include <fstream>

#include "iso/common/error.hpp"

template <typename F>
void iso::eval::write_text_file(const std::filesystem::path& path, F&& body) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  body(os);
  if (!os) throw IoError("failed writing " + path.string());
}
