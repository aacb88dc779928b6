#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mudet/errors.hpp"

namespace mudet::cli {

/// Command-line misuse; maps to exit status 2.
struct UsageError : Error {
    using Error::Error;
};

/// Fully resolved invocation: defaults, then config-file values, then flags.
struct RunConfig {
    std::string command;

    std::uint64_t seed = 1;
    int workers = 1;
    std::string out;
    std::string format = "csv";

    std::string scenario = "light";
    std::string k_spec;  // "K" or "MIN:MAX"; empty = scenario default
    int n = 0;           // 0 = scenario default (light 64, heavy 128; codes 32)
    std::vector<double> ebn0 = {6.0};
    std::int64_t symbols = 10000;
    std::vector<std::string> detectors = {"conv", "zf", "ml", "nd", "tm"};
    double tau = 1.0;
    int s_max = 10;
    std::optional<int> pilot_period;
    std::string code_kind = "pseudo-random";

    std::string profile = "ml,nd,tm";
    double c = 1.0;
    std::string phi2 = "fixed:0.5";
    double nd_a = 1.0;
    double nd_p = 2.0;
    double nd_iters = 3.5;

    double target_db = 0.0;
    int fig = 3;
    std::string policy = "calibrated";
};

/// Parses argv (flags override config-file values override defaults).
/// Throws UsageError on misuse; help requests throw HelpRequested.
struct HelpRequested {
    std::string text;
};
RunConfig parse_config(const std::vector<std::string>& args);

/// Executes a resolved config.  Returns the process exit status (0 success).
int run(const RunConfig& config);

/// Full entry point: parse + run + error-to-exit-status mapping
/// (0 success, 1 domain error, 2 usage error).
int run_main(int argc, const char* const* argv);

}  // namespace mudet::cli
