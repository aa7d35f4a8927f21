#pragma once

#include <string>

#include "pdfool/config.hpp"
#include "pdfool/manifest.hpp"

namespace pdfool {

// Commands write their artifacts plus a manifest.txt under out_dir and never
// touch their inputs. Errors surface as ConfigError / DataError /
// NumericError, mapped to exit codes 1 / 2 / 3 by the binary.
void cmd_simulate(const RunConfig& config, const std::string& out_dir);
void cmd_train(const RunConfig& config, const std::string& out_dir);
void cmd_attack(const RunConfig& config, const std::string& out_dir);
void cmd_evaluate(const RunConfig& config, const std::string& out_dir);
void cmd_sweep(const RunConfig& config, const std::string& out_dir);
void cmd_plot(const RunConfig& config, const std::string& out_dir);

void run_command(const std::string& command, const RunConfig& config, const std::string& out_dir);
void cmd_rerun(const std::string& manifest_path, const std::string& out_dir);

}  // namespace pdfool
