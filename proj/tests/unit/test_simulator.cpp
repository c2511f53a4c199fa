// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "otrack/app/sequence_io.hpp"
#include "otrack/geometry.hpp"
#include "otrack/simulator.hpp"

namespace otrack {
namespace {

bool same_sequence(const SyntheticSequence& a, const SyntheticSequence& b) {
    if (a.frames.size() != b.frames.size()) {
        return false;
    }
    for (std::size_t t = 0; t < a.frames.size(); ++t) {
        const SimFrame& x = a.frames[t];
        const SimFrame& y = b.frames[t];
        if (x.gt.size() != y.gt.size() || x.detections.size() != y.detections.size() ||
            x.detection_truth != y.detection_truth || x.descriptors != y.descriptors) {
            return false;
        }
        for (std::size_t i = 0; i < x.gt.size(); ++i) {
            if (x.gt[i].box != y.gt[i].box || x.gt[i].id != y.gt[i].id) {
                return false;
            }
        }
        for (std::size_t i = 0; i < x.detections.size(); ++i) {
            if (x.detections[i].box != y.detections[i].box) {
                return false;
            }
        }
    }
    return true;
}

TEST(UnionArea, OverlappingRectangles) {
    EXPECT_DOUBLE_EQ(union_area({}), 0.0);
    EXPECT_DOUBLE_EQ(union_area({{0, 0, 10, 10}, {5, 5, 15, 15}}), 175.0);
    EXPECT_DOUBLE_EQ(union_area({{0, 0, 10, 10}, {2, 2, 8, 8}}), 100.0);
}

TEST(Visibility, CoveredFraction) {
    EXPECT_DOUBLE_EQ(visibility({0, 0, 10, 10}, {}), 1.0);
    EXPECT_DOUBLE_EQ(visibility({0, 0, 10, 10}, {{5, 0, 20, 10}}), 0.5);
    EXPECT_DOUBLE_EQ(visibility({0, 0, 10, 10}, {{5, 0, 20, 10}, {0, 0, 6, 10}}), 0.0);
}

TEST(Simulator, SameSeedSameSequence) {
    SimConfig cfg;
    cfg.seed = 7;
    cfg.fp_rate = 0.5;
    EXPECT_TRUE(same_sequence(generate(cfg), generate(cfg)));
    SimConfig other = cfg;
    other.seed = 8;
    EXPECT_FALSE(same_sequence(generate(cfg), generate(other)));
}

TEST(Simulator, PerfectDetectorReturnsGroundTruth) {
    SimConfig cfg;
    cfg.det_noise_std = 0.0;
    cfg.visibility_threshold = 0.0;
    cfg.fp_rate = 0.0;
    cfg.seed = 3;
    const SyntheticSequence s = generate(cfg);
    for (const SimFrame& f : s.frames) {
        ASSERT_EQ(f.detections.size(), f.gt.size());
        for (std::size_t i = 0; i < f.detections.size(); ++i) {
            bool found = false;
            for (const auto& g : f.gt) {
                found = found || (g.id == f.detection_truth[i] && g.box == f.detections[i].box);
            }
            EXPECT_TRUE(found);
        }
    }
}

TEST(Simulator, CrossingObjectsProduceOcclusion) {
    SimConfig cfg;
    cfg.frames = 40;
    std::vector<std::vector<GtObject>> traj(static_cast<std::size_t>(cfg.frames));
    for (int t = 0; t < cfg.frames; ++t) {
        traj[static_cast<std::size_t>(t)].push_back({1, BBox::from_xywh(100.0 + 5.0 * t, 100, 40, 100), 0, 1.0});
        traj[static_cast<std::size_t>(t)].push_back({2, BBox::from_xywh(300.0 - 5.0 * t, 100, 40, 100), 1, 1.0});
    }
    const SyntheticSequence s = observe(cfg, traj);
    int frames_with_event = 0;
    for (const SimFrame& f : s.frames) {
        for (const auto& o : f.occlusions) {
            EXPECT_TRUE(occlusion_valid(f.gt[0].box, f.gt[1].box, cfg.tau));
            EXPECT_EQ(o.center, intersect(f.gt[0].box, f.gt[1].box)->center());
        }
        frames_with_event += f.occlusions.empty() ? 0 : 1;
    }
    EXPECT_GT(frames_with_event, 0);
}

TEST(Simulator, ObjectsZeroGivesEmptyFrames) {
    SimConfig cfg;
    cfg.objects = 0;
    const SyntheticSequence s = generate(cfg);
    ASSERT_EQ(static_cast<int>(s.frames.size()), cfg.frames);
    for (const SimFrame& f : s.frames) {
        EXPECT_TRUE(f.gt.empty());
        EXPECT_TRUE(f.detections.empty());
    }
}

TEST(Simulator, InvalidConfigRejected) {
    SimConfig cfg;
    cfg.box_width_max = 1000.0;
    EXPECT_THROW(generate(cfg), std::invalid_argument);
    SimConfig neg;
    neg.nuisance_std = -1.0;
    EXPECT_THROW(neg.validate(), std::invalid_argument);
}

TEST(Simulator, DroppedDetectionsCoOccurWithOcclusion) {
    // Threshold 0.3 <= 1 - tau. Checked for objects hidden by a single front object.
    SimConfig cfg;
    cfg.objects = 20;
    cfg.visibility_threshold = 0.3;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        cfg.seed = seed;
        const SyntheticSequence s = generate(cfg);
        for (const SimFrame& f : s.frames) {
            for (const GtObject& g : f.gt) {
                if (g.visibility >= cfg.visibility_threshold) {
                    continue;
                }
                int front = 0;
                for (const GtObject& h : f.gt) {
                    front += h.id != g.id && h.depth > g.depth && intersect(g.box, h.box) ? 1 : 0;
                }
                if (front != 1) {
                    continue;
                }
                bool event = false;
                for (const auto& o : f.occlusions) {
                    event = event || o.id_a == g.id || o.id_b == g.id;
                }
                EXPECT_TRUE(event) << "seed " << seed << " frame " << f.index << " id " << g.id;
            }
        }
    }
}

TEST(Simulator, IdentityCosineExceedsCrossIdentity) {
    SimConfig cfg;
    cfg.objects = 15;
    cfg.seed = 4;
    const SyntheticSequence s = generate(cfg);
    double same = 0.0;
    double cross = 0.0;
    int n_same = 0;
    int n_cross = 0;
    const SimFrame& a = s.frames[10];
    const SimFrame& b = s.frames[40];
    for (Eigen::Index i = 0; i < a.descriptors.rows(); ++i) {
        for (Eigen::Index j = 0; j < b.descriptors.rows(); ++j) {
            const int ti = a.detection_truth[static_cast<std::size_t>(i)];
            const int tj = b.detection_truth[static_cast<std::size_t>(j)];
            if (ti < 0 || tj < 0) {
                continue;
            }
            const auto u = a.oracle_features.row(i);
            const auto v = b.oracle_features.row(j);
            const double c = u.dot(v) / (u.norm() * v.norm());
            (ti == tj ? same : cross) += c;
            ++(ti == tj ? n_same : n_cross);
        }
    }
    ASSERT_GT(n_same, 0);
    ASSERT_GT(n_cross, 0);
    EXPECT_GT(same / n_same, cross / n_cross + 0.1);
}

TEST(OcclusionChannel, OracleAndDropout) {
    SimConfig cfg;
    cfg.objects = 20;
    cfg.seed = 2;
    const SyntheticSequence s = generate(cfg);
    ChannelParams p = channel_params(cfg);
    p.mode = OcclusionChannelMode::Oracle;
    const auto oracle = occlusion_channel(s, p);
    ASSERT_EQ(oracle.size(), s.frames.size());
    for (std::size_t t = 0; t < s.frames.size(); ++t) {
        ASSERT_EQ(oracle[t].size(), s.frames[t].occlusions.size());
        for (std::size_t k = 0; k < oracle[t].size(); ++k) {
            EXPECT_EQ(oracle[t][k].center, s.frames[t].occlusions[k].center);
        }
    }
    p.mode = OcclusionChannelMode::Noisy;
    p.dropout = 1.0;
    for (const auto& f : occlusion_channel(s, p)) {
        EXPECT_TRUE(f.empty());
    }
}

TEST(OcclusionChannel, RenderedNearOracleWhenSeparated) {
    SimConfig cfg;
    cfg.frames = 1;
    std::vector<std::vector<GtObject>> traj(1);
    traj[0].push_back({1, {100, 100, 140, 200}, 0, 1.0});
    traj[0].push_back({2, {104, 104, 144, 204}, 1, 1.0});
    traj[0].push_back({3, {400, 200, 450, 320}, 0, 1.0});
    traj[0].push_back({4, {397, 203, 449, 322}, 1, 1.0});
    const SyntheticSequence s = observe(cfg, traj);
    ASSERT_EQ(s.frames[0].occlusions.size(), 2u);
    ChannelParams p = channel_params(cfg);
    p.mode = OcclusionChannelMode::Rendered;
    const auto rendered = occlusion_channel(s, p);
    ASSERT_EQ(rendered[0].size(), 2u);
    for (const auto& o : s.frames[0].occlusions) {
        double best = 1e9;
        for (const auto& q : rendered[0]) {
            best = std::min(best, std::max(std::abs(q.center.x - o.center.x), std::abs(q.center.y - o.center.y)));
        }
        EXPECT_LE(best, cfg.stride / 2.0);
    }
}

TEST(ChannelMode, Names) {
    for (const auto m : {OcclusionChannelMode::Oracle, OcclusionChannelMode::Noisy, OcclusionChannelMode::Rendered}) {
        EXPECT_EQ(parse_channel_mode(to_string(m)), m);
    }
    EXPECT_THROW(parse_channel_mode("psychic"), std::invalid_argument);
}

}  // namespace
}  // namespace otrack
