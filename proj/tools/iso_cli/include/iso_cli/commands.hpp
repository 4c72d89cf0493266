#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "iso/adapt/iso_engine.hpp"
#include "iso/synthdata/generator.hpp"
#include "iso_cli/run_config.hpp"

namespace iso::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kIoError = 3, kCompatibilityError = 4 };

/// Entry point of the `iso` tool; args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Maps the library's exception types onto exit codes.
int exit_code_for(const std::exception& e);

void cmd_gen_data(const RunConfig& rc, bool create, std::ostream& out);
void cmd_train(const RunConfig& rc, std::ostream& out);
void cmd_infer(const RunConfig& rc, std::ostream& out);
void cmd_eval(const RunConfig& rc, std::ostream& out);
void cmd_sweep(const RunConfig& rc, const std::string& param, const std::vector<std::string>& values,
               const std::vector<std::string>& modes, std::ostream& out);

/// Target inputs after iso.limit and the iso.sigma pixel noise; noise is seeded per sample.
std::vector<std::vector<float>> prepare_inputs(const synth::Dataset& data, const RunConfig& rc);

}  // namespace iso::cli
