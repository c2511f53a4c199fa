// SPDX-License-Identifier: Apache-2.0
#include "otrack/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>

namespace otrack {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError(fmt::format("config key '{}': cannot parse '{}'", key, text));
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "on" || text == "true" || text == "1") {
        return true;
    }
    if (text == "off" || text == "false" || text == "0") {
        return false;
    }
    throw ConfigError(fmt::format("config key '{}': expected on/off, got '{}'", key, text));
}

struct Entry {
    std::function<void(RunConfig&, const std::string& key, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <typename T, typename Access>
Entry number(Access access) {
    return {[access](RunConfig& c, const std::string& key, const std::string& v) {
                access(c) = parse_number<T>(key, v);
            },
            [access](const RunConfig& c) { return fmt::format("{}", access(c)); }};
}

template <typename Access>
Entry boolean(Access access) {
    return {[access](RunConfig& c, const std::string& key, const std::string& v) { access(c) = parse_bool(key, v); },
            [access](const RunConfig& c) { return std::string(access(c) ? "on" : "off"); }};
}

template <typename Access, typename Parse>
Entry enumeration(Access access, Parse parse) {
    return {[access, parse](RunConfig& c, const std::string& key, const std::string& v) {
                try {
                    access(c) = parse(v);
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(fmt::format("config key '{}': {}", key, e.what()));
                }
            },
            [access](const RunConfig& c) { return std::string(to_string(access(c))); }};
}

#define OT_FIELD(expr) [](auto& c) -> auto& { return c.expr; }

const std::map<std::string, Entry>& table() {
    static const std::map<std::string, Entry> entries = {
        {"sim.width", number<int>(OT_FIELD(sim.width))},
        {"sim.height", number<int>(OT_FIELD(sim.height))},
        {"sim.objects", number<int>(OT_FIELD(sim.objects))},
        {"sim.frames", number<int>(OT_FIELD(sim.frames))},
        {"sim.speed_min", number<double>(OT_FIELD(sim.speed_min))},
        {"sim.speed_max", number<double>(OT_FIELD(sim.speed_max))},
        {"sim.accel_std", number<double>(OT_FIELD(sim.accel_std))},
        {"sim.spawn_rate", number<double>(OT_FIELD(sim.spawn_rate))},
        {"sim.despawn_rate", number<double>(OT_FIELD(sim.despawn_rate))},
        {"sim.box_width_min", number<double>(OT_FIELD(sim.box_width_min))},
        {"sim.box_width_max", number<double>(OT_FIELD(sim.box_width_max))},
        {"sim.aspect_min", number<double>(OT_FIELD(sim.aspect_min))},
        {"sim.aspect_max", number<double>(OT_FIELD(sim.aspect_max))},
        {"sim.visibility_threshold", number<double>(OT_FIELD(sim.visibility_threshold))},
        {"sim.det_noise_std", number<double>(OT_FIELD(sim.det_noise_std))},
        {"sim.fp_rate", number<double>(OT_FIELD(sim.fp_rate))},
        {"sim.descriptor_dim", number<int>(OT_FIELD(sim.descriptor_dim))},
        {"sim.signature_dim", number<int>(OT_FIELD(sim.signature_dim))},
        {"sim.signature_scale", number<double>(OT_FIELD(sim.signature_scale))},
        {"sim.descriptor_jitter", number<double>(OT_FIELD(sim.descriptor_jitter))},
        {"sim.descriptor_offset", number<double>(OT_FIELD(sim.descriptor_offset))},
        {"sim.appearance_seed", number<std::uint64_t>(OT_FIELD(sim.appearance_seed))},
        {"sim.nuisance_std", number<double>(OT_FIELD(sim.nuisance_std))},
        {"sim.occlusion_corruption", number<double>(OT_FIELD(sim.occlusion_corruption))},
        {"sim.occlusion_mode", enumeration(OT_FIELD(sim.occlusion_mode), parse_channel_mode)},
        {"sim.occlusion_noise", number<double>(OT_FIELD(sim.occlusion_noise))},
        {"sim.occlusion_dropout", number<double>(OT_FIELD(sim.occlusion_dropout))},
        {"sim.stride", number<int>(OT_FIELD(sim.stride))},
        {"sim.tau", number<double>(OT_FIELD(sim.tau))},

        {"track.lambda", number<double>(OT_FIELD(tracker.association.lambda))},
        {"track.iou_gate", number<double>(OT_FIELD(tracker.association.iou_gate))},
        {"track.cos_gate", number<double>(OT_FIELD(tracker.association.cos_gate))},
        {"track.tau_w", number<int>(OT_FIELD(tracker.tau_w))},
        {"track.tau_o", number<double>(OT_FIELD(tracker.tau_o))},
        {"track.new_track_confidence", number<double>(OT_FIELD(tracker.new_track_confidence))},
        {"track.feature_alpha", number<double>(OT_FIELD(tracker.feature_alpha))},
        {"track.refind", boolean(OT_FIELD(tracker.refind))},
        {"track.refind_noise_scale", number<double>(OT_FIELD(tracker.refind_noise_scale))},
        {"track.reset_lost_on_refind", boolean(OT_FIELD(tracker.reset_lost_on_refind))},
        {"track.score_stride", number<int>(OT_FIELD(tracker.score_stride))},
        {"track.sigma_min_overlap", number<double>(OT_FIELD(tracker.sigma_rule.min_overlap))},
        {"track.sigma_min", number<double>(OT_FIELD(tracker.sigma_rule.sigma_min))},
        {"track.kalman_std_position", number<double>(OT_FIELD(tracker.kalman.std_weight_position))},
        {"track.kalman_std_velocity", number<double>(OT_FIELD(tracker.kalman.std_weight_velocity))},
        {"track.kalman_std_measurement", number<double>(OT_FIELD(tracker.kalman.std_weight_measurement))},

        {"train.learning_rate", number<double>(OT_FIELD(train.learning_rate))},
        {"train.steps", number<int>(OT_FIELD(train.steps))},
        {"train.margin", number<double>(OT_FIELD(train.margin))},
        {"train.negative_ratio", number<double>(OT_FIELD(train.negative_ratio))},
        {"train.optimizer", enumeration(OT_FIELD(train.optimizer), parse_optimizer)},
        {"train.placeholder", enumeration(OT_FIELD(train.placeholder), parse_placeholder)},
        {"train.batch_size", number<int>(OT_FIELD(train.batch_size))},
        {"train.gap", number<int>(OT_FIELD(train.gap))},
        {"train.mode", enumeration(OT_FIELD(train.mode), parse_pair_mode)},
        {"train.image_jitter", number<double>(OT_FIELD(train.image_jitter))},

        {"embed.dim", number<int>(OT_FIELD(embedder.output_dim))},
        {"embed.hidden", number<int>(OT_FIELD(embedder.hidden))},
        {"embed.activation", enumeration(OT_FIELD(embedder.activation), parse_activation)},
    };
    return entries;
}

#undef OT_FIELD

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(fmt::format("config line {}: expected key = value", number));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(fmt::format("config line {}: empty key", number));
        }
        if (!out.emplace(key, value).second) {
            throw ConfigError(fmt::format("config line {}: duplicate key '{}'", number, key));
        }
    }
    return out;
}

RunConfig apply_config(const std::map<std::string, std::string>& values, RunConfig base) {
    const auto& entries = table();
    for (const auto& [key, value] : values) {
        const auto it = entries.find(key);
        if (it == entries.end()) {
            throw ConfigError(fmt::format("unknown config key '{}'", key));
        }
        it->second.set(base, key, value);
    }
    try {
        base.sim.validate();
        base.train.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    if (base.embedder.output_dim < 2 || base.embedder.hidden < 0) {
        throw ConfigError("invalid config: embed.dim must be >= 2 and embed.hidden >= 0");
    }
    return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return apply_config(parse_key_values(ss.str()), std::move(base));
}

std::string dump_config(const RunConfig& config) {
    std::string out;
    for (const auto& [key, entry] : table()) {
        out += key + " = " + entry.get(config) + "\n";
    }
    return out;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& [key, _] : table()) {
        keys.push_back(key);
    }
    return keys;
}

}  // namespace otrack
