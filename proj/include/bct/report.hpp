#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "bct/pairspec.hpp"

namespace bct {

struct RunConfig {
    std::string command;
    std::optional<int> grid_override;
    std::optional<double> tol_override;
    std::optional<double> horizon_override;
    std::string out_dir = ".";
    bool emit_csv = false;
    bool print_json = false;
    ExecPolicy policy = ExecPolicy::Parallel;
    bool with_timing = true;
};

struct RunResult {
    int exit_code = 0;  // 0 pass, 1 math check failed, 2 input/config error
    nlohmann::ordered_json report;
};

// Executes one CLI command against a parsed spec, writes the report (and CSV
// dumps) under cfg.out_dir, and returns the exit code with the report.
RunResult run_command(const PairSpec& spec, const RunConfig& cfg);

// Full CLI: parse args, load the spec, dispatch. Returns the process exit
// code; never throws.
int run_cli(int argc, const char* const* argv);

}  // namespace bct
