// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "otrack/config.hpp"

namespace otrack {
namespace {

TEST(ParseKeyValues, CommentsAndWhitespace) {
    const auto kv = parse_key_values("# header\n sim.objects = 5  # trailing\n\ntrain.steps=10\n");
    ASSERT_EQ(kv.size(), 2u);
    EXPECT_EQ(kv.at("sim.objects"), "5");
    EXPECT_EQ(kv.at("train.steps"), "10");
}

TEST(ParseKeyValues, ErrorsNameTheLine) {
    try {
        parse_key_values("a=1\nb=2\na=3\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    try {
        parse_key_values("a=1\nno equals here\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
}

TEST(ApplyConfig, TypedValues) {
    const RunConfig c = apply_config({{"sim.objects", "7"},
                                      {"sim.fp_rate", "0.25"},
                                      {"sim.occlusion_mode", "noisy"},
                                      {"track.refind", "false"},
                                      {"train.optimizer", "adam"},
                                      {"embed.activation", "tanh"}});
    EXPECT_EQ(c.sim.objects, 7);
    EXPECT_DOUBLE_EQ(c.sim.fp_rate, 0.25);
    EXPECT_EQ(c.sim.occlusion_mode, OcclusionChannelMode::Noisy);
    EXPECT_FALSE(c.tracker.refind);
    EXPECT_EQ(c.train.optimizer, OptimizerKind::Adam);
    EXPECT_EQ(c.embedder.activation, Activation::Tanh);
}

TEST(ApplyConfig, UnknownKeyNamed) {
    try {
        apply_config({{"sim.bogus", "1"}});
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("sim.bogus"), std::string::npos);
    }
}

TEST(ApplyConfig, BadValuesNamed) {
    for (const auto& [k, v] : std::vector<std::pair<std::string, std::string>>{
             {"sim.objects", "many"}, {"sim.objects", "3.5"}, {"sim.fp_rate", "x"}, {"track.refind", "maybe"}}) {
        try {
            apply_config({{k, v}});
            ADD_FAILURE() << k << "=" << v;
        } catch (const ConfigError& e) {
            EXPECT_NE(std::string(e.what()).find(k), std::string::npos) << e.what();
        }
    }
    EXPECT_THROW(apply_config({{"sim.visibility_threshold", "2"}}), ConfigError);
}

TEST(DumpConfig, RoundTrips) {
    RunConfig c;
    c.sim.objects = 3;
    c.sim.det_noise_std = 0.1234567890123;
    c.train.learning_rate = 1e-3;
    c.tracker.tau_o = 0.55;
    const std::string text = dump_config(c);
    const RunConfig back = apply_config(parse_key_values(text));
    EXPECT_EQ(dump_config(back), text);
    EXPECT_EQ(back.sim.det_noise_std, c.sim.det_noise_std);
}

TEST(ConfigKeys, SortedAndPrefixed) {
    const auto keys = config_keys();
    EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
    for (const auto& k : keys) {
        const bool ok = k.rfind("sim.", 0) == 0 || k.rfind("track.", 0) == 0 || k.rfind("train.", 0) == 0 ||
                        k.rfind("embed.", 0) == 0;
        EXPECT_TRUE(ok) << k;
    }
}

}  // namespace
}  // namespace otrack
