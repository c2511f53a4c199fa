// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "otrack/occlusion_heatmap.hpp"
#include "otrack/rng.hpp"

namespace otrack {
namespace {

TEST(Heatmap, DimensionsRoundUp) {
    const Heatmap h = Heatmap::for_image(641, 480, 4);
    EXPECT_EQ(h.width(), 161);
    EXPECT_EQ(h.height(), 120);
    EXPECT_EQ(h.stride(), 4);
}

TEST(RenderTargets, NoOverlapGivesZeroMap) {
    const std::vector<BBox> boxes{{0, 0, 10, 10}, {100, 100, 120, 120}};
    const auto t = render_targets(boxes, 0.7, 160, 160, 4);
    EXPECT_EQ(t.valid_count, 0);
    EXPECT_EQ(t.offsets.masked_count(), 0u);
    for (double v : t.heatmap.values()) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(RenderTargets, EmptyBoxList) {
    const auto t = render_targets({}, 0.7, 64, 64, 4);
    EXPECT_EQ(t.valid_count, 0);
    EXPECT_EQ(t.heatmap.width(), 16);
}

TEST(RenderTargets, SingleOcclusionOnCellCorner) {
    // Overlap centre (40, 40): cell (10, 10), zero offset.
    const std::vector<BBox> boxes{{30, 30, 50, 50}, {31, 31, 49, 49}};
    const auto t = render_targets(boxes, 0.7, 160, 160, 4);
    ASSERT_EQ(t.valid_count, 1);
    EXPECT_DOUBLE_EQ(t.heatmap.at(10, 10), 1.0);
    EXPECT_EQ(t.offsets.masked_count(), 1u);
    EXPECT_TRUE(t.offsets.masked(10, 10));
    EXPECT_DOUBLE_EQ(t.offsets.dx(10, 10), 0.0);
    EXPECT_DOUBLE_EQ(t.offsets.dy(10, 10), 0.0);
}

TEST(RenderTargets, OverlappingKernelsTakeMaximum) {
    const std::vector<BBox> boxes{{30, 30, 50, 70}, {31, 31, 49, 69}, {46, 30, 66, 70}, {47, 31, 65, 69}};
    const auto t = render_targets(boxes, 0.7, 160, 160, 4);
    ASSERT_GE(t.valid_count, 2);
    int contested = 0;
    for (int y = 0; y < t.heatmap.height(); ++y) {
        for (int x = 0; x < t.heatmap.width(); ++x) {
            double expected = 0.0;
            int positive = 0;
            for (const auto& e : t.events) {
                const double s = gaussian_score(e.region, {double(x), double(y)}, 4.0);
                positive += s > 1e-3 ? 1 : 0;
                expected = std::max(expected, s);
            }
            contested += positive >= 2 ? 1 : 0;
            EXPECT_DOUBLE_EQ(t.heatmap.at(x, y), expected);
        }
    }
    EXPECT_GT(contested, 0);
}

TEST(RenderTargets, InvariantToBoxOrder) {
    std::vector<BBox> boxes{{30, 30, 50, 70}, {31, 31, 49, 69}, {100, 40, 130, 100}, {104, 42, 131, 99}};
    const auto a = render_targets(boxes, 0.7, 200, 160, 4);
    std::reverse(boxes.begin(), boxes.end());
    const auto b = render_targets(boxes, 0.7, 200, 160, 4);
    EXPECT_EQ(a.valid_count, b.valid_count);
    EXPECT_TRUE(std::equal(a.heatmap.values().begin(), a.heatmap.values().end(), b.heatmap.values().begin()));
    EXPECT_EQ(a.offsets.masked_count(), b.offsets.masked_count());
}

TEST(FocalLoss, PointValues) {
    Heatmap t(1, 1, 4);
    Heatmap p(1, 1, 4);
    t.at(0, 0) = 1.0;
    p.at(0, 0) = 1.0;
    EXPECT_NEAR(focal_center_loss(t, p), 0.0, 1e-12);
    p.at(0, 0) = 0.5;
    EXPECT_NEAR(focal_center_loss(t, p), 0.25 * std::log(2.0), 1e-12);
    EXPECT_NEAR(focal_center_loss(t, p), 0.173287, 1e-6);
    t.at(0, 0) = 0.0;
    p.at(0, 0) = 0.0;
    EXPECT_NEAR(focal_center_loss(t, p), 0.0, 1e-12);
}

TEST(FocalLoss, SelfConsistentOnValidTarget) {
    // Cells at 0 and at the peak vanish as the clamp tightens; the Gaussian
    // skirt keeps its own (1 - y)^4 y^2 log(1 - y) terms.
    const std::vector<BBox> boxes{{30, 30, 50, 70}, {31, 31, 49, 69}};
    const auto t = render_targets(boxes, 0.7, 160, 160, 4);
    double skirt = 0.0;
    for (double y : t.heatmap.values()) {
        if (y > 0.0 && y < 1.0) {
            skirt -= std::pow(1.0 - y, 4) * y * y * std::log(1.0 - y);
        }
    }
    const double loose = focal_center_loss(t.heatmap, t.heatmap, {}, 1e-4);
    const double tight = focal_center_loss(t.heatmap, t.heatmap, {}, 1e-12);
    EXPECT_LT(std::abs(tight - skirt), std::abs(loose - skirt));
    EXPECT_NEAR(tight, skirt, 1e-9);

    Heatmap binary(3, 3, 4);
    binary.at(1, 1) = 1.0;
    EXPECT_LT(focal_center_loss(binary, binary, {}, 1e-12), 1e-9);
}

TEST(FocalLoss, DimensionMismatchThrows) {
    EXPECT_ANY_THROW(focal_center_loss(Heatmap(2, 2, 4), Heatmap(3, 2, 4)));
}

TEST(OffsetLoss, Examples) {
    OffsetMap target(4, 4);
    target.set(1, 2, 0.25, 0.5);
    EXPECT_DOUBLE_EQ(offset_loss(target, target), 0.0);
    EXPECT_DOUBLE_EQ(offset_loss(target, OffsetMap(4, 4)), 0.75);
    OffsetMap noisy(4, 4);
    noisy.set(0, 0, 0.9, 0.9);
    EXPECT_DOUBLE_EQ(offset_loss(OffsetMap(4, 4), noisy), 0.0);
    EXPECT_ANY_THROW(offset_loss(OffsetMap(4, 4), OffsetMap(4, 5)));
}

TEST(OcclusionLoss, Examples) {
    EXPECT_DOUBLE_EQ(occlusion_loss(2.0, 1.0, 3), 1.0);
    EXPECT_DOUBLE_EQ(occlusion_loss(0.0, 0.0, 0), 0.0);
    EXPECT_DOUBLE_EQ(occlusion_loss(0.6, 0.4, 1), 1.0);
    EXPECT_DOUBLE_EQ(occlusion_loss(2 * 1.7, 2 * 0.3, 2 * 5), occlusion_loss(1.7, 0.3, 5));
}

TEST(OcclusionLoss, BatchMeanOfFrames) {
    const std::vector<OcclusionFrameLoss> frames{{2.0, 1.0, 3, 1.0}, {0.0, 0.0, 0, 0.0}};
    EXPECT_DOUBLE_EQ(occlusion_batch_loss(frames), 0.5);
}

TEST(DecodePeaks, Examples) {
    Heatmap h(32, 32, 4);
    OffsetMap off(32, 32);
    EXPECT_TRUE(decode_peaks(h, off).empty());
    h.at(10, 10) = 1.0;
    off.set(10, 10, 0.5, 0.5);
    const auto peaks = decode_peaks(h, off);
    ASSERT_EQ(peaks.size(), 1u);
    EXPECT_EQ(peaks[0].center, (Point2{42, 42}));
    EXPECT_EQ(peaks[0].score, 1.0);
}

TEST(DecodePeaks, AdjacentCellsSuppressed) {
    Heatmap h(8, 8, 4);
    const OffsetMap off(8, 8);
    h.at(3, 3) = 0.9;
    h.at(4, 3) = 0.8;
    const auto peaks = decode_peaks(h, off);
    ASSERT_EQ(peaks.size(), 1u);
    EXPECT_EQ(peaks[0].center, (Point2{12, 12}));
}

TEST(DecodePeaks, PlateauKeepsLowestCell) {
    Heatmap h(8, 8, 4);
    const OffsetMap off(8, 8);
    h.at(3, 3) = 0.9;
    h.at(4, 3) = 0.9;
    const auto peaks = decode_peaks(h, off);
    ASSERT_EQ(peaks.size(), 1u);
    EXPECT_EQ(peaks[0].center, (Point2{12, 12}));
}

TEST(DecodePeaks, ThresholdAndCap) {
    Heatmap h(20, 20, 1);
    const OffsetMap off(20, 20);
    for (int i = 0; i < 5; ++i) {
        h.at(3 * i + 1, 1) = 0.5 + 0.1 * i;
    }
    h.at(10, 10) = 0.2;
    EXPECT_EQ(decode_peaks(h, off).size(), 5u);
    const auto capped = decode_peaks(h, off, {0.3, 2});
    ASSERT_EQ(capped.size(), 2u);
    EXPECT_GE(capped[0].score, 0.8);
    EXPECT_GE(capped[1].score, 0.8);
}

TEST(ToPgm, HeaderAndScaling) {
    Heatmap h(3, 2, 4);
    h.at(0, 0) = 1.0;
    h.at(1, 0) = 0.5;
    h.at(2, 1) = 0.001;
    const std::string pgm = to_pgm(h);
    const std::string header = "P5\n3 2\n255\n";
    ASSERT_EQ(pgm.substr(0, header.size()), header);
    ASSERT_EQ(pgm.size(), header.size() + 6);
    EXPECT_EQ(static_cast<unsigned char>(pgm[header.size()]), 255);
    EXPECT_EQ(static_cast<unsigned char>(pgm[header.size() + 1]), 128);  // 127.5 rounds up
    EXPECT_EQ(static_cast<unsigned char>(pgm[header.size() + 5]), 0);
}

}  // namespace
}  // namespace otrack
