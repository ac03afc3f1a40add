#ifndef WINDNBM_TOOLS_COMMANDS_HPP
#define WINDNBM_TOOLS_COMMANDS_HPP

#include "run_config.hpp"

namespace windnbm::tools {

// Subcommand bodies. Each writes its artifacts under cfg.output_dir and
// throws windnbm::Error on failure; exit-code mapping lives in main.

void cmd_synth(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg);
void cmd_report(const RunConfig& cfg);

}  // namespace windnbm::tools

#endif
