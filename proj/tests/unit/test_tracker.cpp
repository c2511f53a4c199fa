// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <set>
#include <vector>

#include "otrack/app/sequence_io.hpp"
#include "otrack/geometry.hpp"
#include "otrack/metrics.hpp"
#include "otrack/simulator.hpp"
#include "otrack/tracker.hpp"

namespace otrack {
namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double d : v) {
        x(i++) = d;
    }
    return x;
}

FrameInput frame(std::vector<BBox> boxes, std::vector<Eigen::VectorXd> feats = {}, std::vector<Point2> centers = {}) {
    FrameInput in;
    for (const auto& b : boxes) {
        in.detections.push_back({b, 1.0, b.center()});
    }
    if (!feats.empty()) {
        in.features.resize(static_cast<Eigen::Index>(feats.size()), feats[0].size());
        for (std::size_t i = 0; i < feats.size(); ++i) {
            in.features.row(static_cast<Eigen::Index>(i)) = feats[i].transpose();
        }
    }
    for (const auto& c : centers) {
        in.occlusion_centers.push_back({c, 1.0});
    }
    return in;
}

TEST(Tracker, FirstDetectionStartsTrack) {
    Tracker t;
    const FrameOutput out = t.step(frame({{0, 0, 10, 20}}));
    ASSERT_EQ(out.results.size(), 1u);
    EXPECT_EQ(out.results[0].id, 1);
    EXPECT_EQ(out.results[0].provenance, Provenance::Detected);
    EXPECT_EQ(t.state().next_id, 2);
}

TEST(Tracker, MissedTrackletIsCachedNotEmitted) {
    Tracker t;
    t.step(frame({{0, 0, 10, 20}}));
    const FrameOutput out = t.step(frame({}));
    EXPECT_TRUE(out.results.empty());
    ASSERT_EQ(t.state().tracklets.size(), 1u);
    const Tracklet& tr = t.state().tracklets[0];
    EXPECT_EQ(tr.lost_count, 1);
    EXPECT_EQ(tr.status, TrackStatus::Lost);
    EXPECT_EQ(tr.box, (BBox{0, 0, 10, 20}));
}

TEST(Tracker, DroppedAfterTimeWindowAndIdsNotReused) {
    TrackerConfig cfg;
    cfg.tau_w = 3;
    Tracker t(cfg);
    t.step(frame({{0, 0, 10, 20}}));
    for (int i = 0; i < 4; ++i) {
        t.step(frame({}));
    }
    EXPECT_TRUE(t.state().tracklets.empty());
    const FrameOutput out = t.step(frame({{0, 0, 10, 20}}));
    ASSERT_EQ(out.results.size(), 1u);
    EXPECT_EQ(out.results[0].id, 2);
}

TEST(Tracker, LowConfidenceDoesNotSpawn) {
    Tracker t;
    FrameInput in = frame({{0, 0, 10, 20}});
    in.detections[0].confidence = 0.2;
    EXPECT_TRUE(t.step(in).results.empty());
}

TEST(Tracker, StepIsPure) {
    TrackerState s;
    s = step(s, frame({{0, 0, 10, 20}, {50, 0, 60, 20}})).first;
    const FrameInput in = frame({{1, 0, 11, 20}});
    const auto a = step(s, in);
    const auto b = step(s, in);
    ASSERT_EQ(a.second.results.size(), b.second.results.size());
    for (std::size_t i = 0; i < a.second.results.size(); ++i) {
        EXPECT_EQ(a.second.results[i].box, b.second.results[i].box);
        EXPECT_EQ(a.second.results[i].id, b.second.results[i].id);
    }
    EXPECT_EQ(s.tracklets.size(), 2u);
    EXPECT_EQ(s.tracklets[0].lost_count, 0);
}

TEST(Tracker, MisalignedFeaturesThrow) {
    Tracker t;
    FrameInput in = frame({{0, 0, 10, 20}});
    in.features = Eigen::MatrixXd::Ones(2, 3);
    EXPECT_THROW(t.step(in), std::invalid_argument);
}

TEST(Tracker, RefindsFullyOccludedObject) {
    // A stands still; B parks in front of it for three frames.
    const BBox a{100, 100, 140, 200};
    const BBox b_near{104, 102, 144, 202};
    const BBox b_far{300, 102, 340, 202};
    const auto fa = vec({1, 0});
    const auto fb = vec({0, 1});
    Tracker t;
    t.step(frame({a, b_far}, {fa, fb}));
    t.step(frame({a, b_far}, {fa, fb}));
    const int id_a = 1;
    const Point2 occ = intersect(a, b_near)->center();
    for (int k = 0; k < 3; ++k) {
        const FrameOutput out = t.step(frame({b_near}, {fb}, {occ}));
        bool seen = false;
        for (const auto& r : out.results) {
            if (r.id == id_a) {
                seen = true;
                EXPECT_EQ(r.provenance, Provenance::Refound);
                EXPECT_GT(iou(r.box, a), 0.9);
            }
        }
        EXPECT_TRUE(seen) << "frame " << k;
    }
    const FrameOutput back = t.step(frame({a, b_near}, {fa, fb}));
    std::set<int> ids;
    for (const auto& r : back.results) {
        ids.insert(r.id);
    }
    EXPECT_TRUE(ids.count(id_a));
}

TEST(Tracker, RefindOffLeavesObjectLost) {
    const BBox a{100, 100, 140, 200};
    const BBox b{104, 102, 144, 202};
    TrackerConfig cfg;
    cfg.refind = false;
    Tracker t(cfg);
    t.step(frame({a, {300, 102, 340, 202}}, {vec({1, 0}), vec({0, 1})}));
    const FrameOutput out = t.step(frame({b}, {vec({0, 1})}, {intersect(a, b)->center()}));
    for (const auto& r : out.results) {
        EXPECT_NE(r.id, 1);
    }
    EXPECT_EQ(t.state().tracklets[0].status, TrackStatus::Lost);
}

TEST(Refind, NoCentersMeansNoCandidate) {
    const std::vector<BBox> dets{{5, 0, 15, 10}};
    EXPECT_FALSE(refind({0, 0, 10, 10}, dets, {}, 0.7));
}

TEST(Refind, ExactCenterRecoversExactly) {
    const BBox truth{0, 0, 10, 10};
    const std::vector<BBox> dets{{6, 0, 16, 10}};
    const std::vector<Point2> centers{{8, 5}};
    const auto c = refind(truth, dets, centers, 0.7);
    ASSERT_TRUE(c);
    EXPECT_DOUBLE_EQ(c->score, 1.0);
    EXPECT_EQ(c->box, truth);
}

TEST(Refind, PicksHighestScoringPair) {
    const BBox pred{0, 0, 40, 80};
    const std::vector<BBox> dets{{20, 0, 60, 80}};
    const BBox region = *intersect(pred, dets[0]);
    const Point2 c = region.center();
    // Two centres at different distances from the exact midpoint.
    const std::vector<Point2> centers{{c.x, c.y + 6.0}, {c.x + 1.0, c.y}};
    const double s0 = refind_score(region, centers[0], 4.0);
    const double s1 = refind_score(region, centers[1], 4.0);
    ASSERT_GT(s1, s0);
    const auto found = refind(pred, dets, centers, 0.0);
    ASSERT_TRUE(found);
    EXPECT_EQ(found->center, 1);
    EXPECT_DOUBLE_EQ(found->score, s1);
    EXPECT_FALSE(refind(pred, dets, centers, s1));
}

TEST(SmoothFeature, Examples) {
    const Eigen::VectorXd old = vec({1, 0});
    const Eigen::VectorXd fresh = vec({0, 2});
    EXPECT_EQ(smooth_feature(old, fresh, 1.0), old);
    EXPECT_TRUE(smooth_feature(old, fresh, 0.0).isApprox(vec({0, 1})));
    EXPECT_TRUE(smooth_feature(old, old, 0.9).isApprox(old));
    EXPECT_EQ(smooth_feature(old, vec({-1, 0}), 0.5), old);
    EXPECT_THROW(smooth_feature(old, vec({1, 0, 0}), 0.5), std::invalid_argument);
}

TEST(Tracker, NoIdentitySwitchesWithPerfectInputs) {
    SimConfig sim;
    sim.frames = 100;
    sim.det_noise_std = 0.0;
    sim.visibility_threshold = 0.0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        sim.seed = seed;
        const SyntheticSequence seq = generate(sim);
        Tracker t;
        std::vector<MotRecord> pred;
        for (const SimFrame& f : seq.frames) {
            FrameInput in;
            for (const auto& d : f.detections) {
                in.detections.push_back({d.box, d.confidence, d.box.center()});
            }
            in.features = f.oracle_features;
            for (const auto& r : t.step(in).results) {
                pred.push_back({f.index, r.id, r.box, 1.0, -1, -1, -1});
            }
        }
        const MetricsReport rep = evaluate(app::gt_records(seq), pred);
        EXPECT_EQ(rep.ids, 0) << "seed " << seed;
        EXPECT_EQ(rep.fn, 0) << "seed " << seed;
    }
}

}  // namespace
}  // namespace otrack
