// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "otrack/config.hpp"

namespace otrack::app {

namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kManifestName = "manifest.json";

/// Bad invocation; maps to exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A fully resolved command. Everything needed to reproduce a run is in here
/// and in the manifest written from it.
struct CommandSpec {
    std::string command;
    std::vector<std::string> inputs;
    std::map<std::string, std::string> options;
    std::optional<std::uint64_t> seed;
    RunConfig config;
    fs::path out;
    bool force = false;
};

/// Runs one command. Writes the manifest into `spec.out` before any other
/// output. Returns the names of the files written (manifest first).
std::vector<std::string> execute(const CommandSpec& spec, std::ostream& log);

std::string manifest_json(const CommandSpec& spec, const std::vector<std::string>& outputs);
/// Rebuilds the command from a manifest; `out` replaces the recorded directory.
CommandSpec spec_from_manifest(const std::string& json, const fs::path& out, bool force);

/// Maximum worker threads for multi-sequence evaluation (OTRACK_THREADS, default 1).
int thread_limit();

/// Full command line entry point. Exit codes: 0 ok, 1 runtime or data error, 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace otrack::app
