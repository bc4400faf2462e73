#ifndef MESO_RUNNER_HPP
#define MESO_RUNNER_HPP

#include <string>
#include <vector>

#include "meso/error.hpp"
#include "meso/scenario.hpp"

namespace meso::io {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes by error category (0 = success).
int exit_code(ErrorCategory category);

struct RunOptions {
    std::optional<std::uint64_t> seed;      // overrides the scenario seed
    std::optional<std::string> output_dir;  // overrides scenario / environment
    bool quiet = false;
};

struct RunManifest {
    std::string tool_version;
    std::string config_hash;  // 64-bit FNV-1a of the config bytes, hex
    std::uint64_t seed = 0;
    std::string started;   // ISO-8601 UTC
    std::string finished;
    std::vector<std::string> outputs;   // file names relative to the output dir
    std::vector<std::string> defaults;  // defaulted parameters echoed from the loader
    std::vector<std::string> warnings;
};

// Runs one subcommand (fit-idea | propagate | evolve | risk | sample | center),
// writes its CSV outputs plus manifest.json into the output directory and
// returns the manifest.  Output files are written atomically; on error,
// nothing is left half-written (the manifest is only written on success).
RunManifest run(const std::string& subcommand, const Scenario& scenario,
                const RunOptions& options = {});

std::string manifest_json(const RunManifest& manifest);

}  // namespace meso::io

#endif
