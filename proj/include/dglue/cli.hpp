#ifndef DGLUE_CLI_HPP
#define DGLUE_CLI_HPP

#include "dglue/bundle.hpp"
#include "dglue/presentation.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dglue::cli {

struct Options {
    std::uint64_t seed = 1;
    int samples = 64;
    double tol = 1e-9;
    std::string report_path;
    ComplementChoice complement;
};

struct CheckResult {
    std::string name;
    bool pass = false;
    double worst = 0.0;      // worst residual (or the certified scalar)
    std::string location;
    int samples = 0;
    std::uint64_t seed = 0;
    double wall_ms = 0.0;    // text output only; kept out of the machine report
};

struct RunReport {
    std::string command;
    std::uint64_t seed = 0;
    int samples = 0;
    double tol = 0.0;
    std::vector<CheckResult> checks; // sorted by name on finalize

    bool all_pass() const;
    void finalize(); // order by check name
    std::string to_json_text() const; // deterministic for fixed seed and inputs
    std::string to_text() const;
};

RunReport run_check(const std::string& path, const Options& opts);
RunReport run_induce(const std::string& path, const Options& opts,
                     std::string* formula_out = nullptr);
RunReport run_demo(const std::string& which, const Options& opts,
                   std::string* table_out = nullptr);
RunReport run_suite(const std::string& which, const Options& opts);

/// Full CLI entry point; returns the process exit code.
int run(const std::vector<std::string>& args);

} // namespace dglue::cli

#endif
