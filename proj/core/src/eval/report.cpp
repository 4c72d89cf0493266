#include "iso/eval/report.hpp"

#include <cstdio>

namespace iso::eval {
namespace {

std::string num(double v, int precision = 2) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string metric_cols(const Metrics& m) {
  return num(m.pck) + "\t" + num(m.auc) + "\t" + num(m.mpjpe);
}

}  // namespace

void write_method_table(std::ostream& os, const std::vector<MethodRow>& rows, bool with_time) {
  os << "method\tPCK\tAUC\tMPJPE" << (with_time ? "\tTime[s]" : "") << '\n';
  for (const auto& r : rows) {
    os << r.method << '\t' << metric_cols(r.metrics);
    if (with_time) os << '\t' << (r.seconds ? num(*r.seconds, 6) : std::string("-"));
    os << '\n';
  }
}

void write_noise_table(std::ostream& os, const std::vector<NoiseRow>& rows) {
  os << "sigma\tmethod\tPCK\tAUC\tMPJPE\n";
  for (const auto& r : rows) os << num(r.sigma, 1) << '\t' << r.method << '\t' << metric_cols(r.metrics) << '\n';
}

void write_sweep_table(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "param\tvalue\tmode\tPCK\tAUC\tMPJPE\n";
  char buf[48];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%g", r.value);
    os << r.param << '\t' << buf << '\t' << r.mode << '\t' << metric_cols(r.metrics) << '\n';
  }
}

void write_limb_table(std::ostream& os, const std::vector<std::pair<std::string, LimbRatioReport>>& reports) {
  os << "label\tratio\tmean\tstd\tlo\thi\tcounts\n";
  for (const auto& [label, rep] : reports) {
    for (std::size_t k = 0; k < rep.ratios.size(); ++k) {
      const auto& h = rep.ratios[k];
      os << label << '\t' << geom::LimbRatios::kNames[k] << '\t' << num(h.mean, 4) << '\t' << num(h.stddev, 4)
         << '\t' << num(h.lo, 3) << '\t' << num(h.hi, 3) << '\t';
      for (std::size_t b = 0; b < h.counts.size(); ++b) os << (b ? "," : "") << h.counts[b];
      os << '\n';
    }
  }
}

void write_eval_report(std::ostream& os, const EvalReport& r) {
  os << "protocol\tPCK\tAUC\tMPJPE";
  if (r.pa_mpjpe) os << "\tPA-MPJPE";
  os << '\n' << to_string(r.protocol) << '\t' << metric_cols(r.metrics);
  if (r.pa_mpjpe) os << '\t' << num(*r.pa_mpjpe);
  os << '\n';
  if (r.parts) {
    os << "\npart\tPCK\n";
    for (int k = 0; k < geom::kPartCount; ++k)
      os << geom::part_name(static_cast<geom::Part>(k)) << '\t' << num((*r.parts)[static_cast<std::size_t>(k)])
         << '\n';
  }
  if (r.limbs) {
    os << '\n';
    write_limb_table(os, {{"prediction", *r.limbs}});
  }
}

}  // namespace iso::eval
