// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "otrack/embedder.hpp"
#include "otrack/simulator.hpp"
#include "otrack/tracker.hpp"

namespace otrack {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EmbedderSpec {
    int output_dim = 32;
    int hidden = 0;  ///< 0: single affine layer
    Activation activation = Activation::None;
};

/// Everything a command can be configured with. Keys are grouped by prefix:
/// `sim.`, `track.`, `train.` and `embed.`.
struct RunConfig {
    SimConfig sim;
    TrackerConfig tracker;
    TrainConfig train;
    EmbedderSpec embedder;
};

/// `key = value` lines; `#` starts a comment. Duplicate keys and lines
/// without `=` are errors that name the line.
std::map<std::string, std::string> parse_key_values(const std::string& text);

/// Applies parsed values on top of `base`. Unknown keys and badly typed
/// values raise ConfigError naming the key.
RunConfig apply_config(const std::map<std::string, std::string>& values, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Every key with its current value, sorted; parses back to the same config.
std::string dump_config(const RunConfig& config);
std::vector<std::string> config_keys();

}  // namespace otrack
