// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <set>
#include <vector>

#include "otrack/association.hpp"
#include "otrack/rng.hpp"
#include "support/oracles.hpp"

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

TEST(Cosine, Basics) {
    EXPECT_DOUBLE_EQ(cosine_similarity(vec({1, 0}), vec({3, 0})), 1.0);
    EXPECT_DOUBLE_EQ(cosine_similarity(vec({1, 0}), vec({0, 2})), 0.0);
}

TEST(BuildCost, Examples) {
    const BBox box{0, 0, 10, 20};
    std::vector<TrackView> tracks{{box, vec({1, 0}), false}};
    Eigen::MatrixXd feats(2, 2);
    feats << 1, 0, 0, 1;
    const std::vector<BBox> dets{box, {100, 100, 110, 120}};
    const CostMatrix c = build_cost(tracks, dets, feats, {0.5, 0.1, 0.3});
    EXPECT_DOUBLE_EQ(c.at(0, 0), 0.0);
    EXPECT_TRUE(c.gated(0, 1));
}

TEST(BuildCost, LambdaZeroIsIouCost) {
    std::vector<TrackView> tracks{{{0, 0, 10, 10}, Eigen::VectorXd(), false}};
    const std::vector<BBox> dets{{5, 0, 15, 10}, {0, 0, 10, 10}};
    const CostMatrix c = build_cost(tracks, dets, Eigen::MatrixXd(2, 0), {0.0, 0.1, 0.3});
    EXPECT_DOUBLE_EQ(c.at(0, 0), 1.0 - 50.0 / 150.0);
    EXPECT_DOUBLE_EQ(c.at(0, 1), 0.0);
}

TEST(BuildCost, LostTracksSkipIouGate) {
    std::vector<TrackView> tracks{{{0, 0, 10, 10}, vec({1, 0}), true}};
    Eigen::MatrixXd feats(1, 2);
    feats << 1, 0;
    const std::vector<BBox> dets{{100, 100, 110, 110}};
    const CostMatrix c = build_cost(tracks, dets, feats, {0.6, 0.1, 0.3});
    EXPECT_FALSE(c.gated(0, 0));
    EXPECT_DOUBLE_EQ(c.at(0, 0), 0.4);
}

TEST(BuildCost, Errors) {
    std::vector<TrackView> tracks{{{0, 0, 10, 10}, vec({1, 0}), false}};
    const std::vector<BBox> dets{{0, 0, 10, 10}};
    EXPECT_THROW(build_cost(tracks, dets, Eigen::MatrixXd::Ones(1, 3), {}), std::invalid_argument);
    EXPECT_THROW(build_cost(tracks, dets, Eigen::MatrixXd::Ones(2, 2), {}), std::invalid_argument);
}

TEST(Solve, Examples) {
    const AssignmentResult r = solve(CostMatrix::from_rows({{1, 2}, {2, 1}}));
    EXPECT_EQ(r.matches, (std::vector<std::pair<int, int>>{{0, 0}, {1, 1}}));
    EXPECT_DOUBLE_EQ(r.total_cost(CostMatrix::from_rows({{1, 2}, {2, 1}})), 2.0);

    const AssignmentResult g = solve(CostMatrix::from_rows({{kGatedCost, kGatedCost}, {kGatedCost, kGatedCost}}));
    EXPECT_TRUE(g.matches.empty());
    EXPECT_EQ(g.unmatched_rows, (std::vector<int>{0, 1}));
    EXPECT_EQ(g.unmatched_cols, (std::vector<int>{0, 1}));

    const AssignmentResult w = solve(CostMatrix::from_rows({{0.3, 0.1}}));
    EXPECT_EQ(w.matches, (std::vector<std::pair<int, int>>{{0, 1}}));
    EXPECT_EQ(w.unmatched_cols, (std::vector<int>{0}));

    const AssignmentResult e = solve(CostMatrix(0, 3));
    EXPECT_TRUE(e.matches.empty());
    EXPECT_EQ(e.unmatched_cols.size(), 3u);
}

TEST(Solve, PrefersCardinalityOverCost) {
    // Matching (0,0) alone is cheaper but leaves row 1 out.
    const CostMatrix c = CostMatrix::from_rows({{0.0, 5.0}, {1.0, kGatedCost}});
    const AssignmentResult r = solve(c);
    EXPECT_EQ(r.matches, (std::vector<std::pair<int, int>>{{0, 1}, {1, 0}}));
}

TEST(Solve, RejectsNan) {
    EXPECT_THROW(solve(CostMatrix::from_rows({{std::nan(""), 1.0}})), std::invalid_argument);
}

TEST(Solve, MatchesBruteForceAndPartitions) {
    Rng rng(31);
    for (int k = 0; k < 300; ++k) {
        const int rows = static_cast<int>(rng.uniform_int(1, 6));
        const int cols = static_cast<int>(rng.uniform_int(1, 6));
        CostMatrix c(rows, cols);
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j) {
                c.at(i, j) = rng.bernoulli(0.3) ? kGatedCost : rng.uniform(0.0, 3.0);
            }
        }
        const AssignmentResult r = solve(c);
        const auto b = oracle::brute_force_assignment(c);
        EXPECT_EQ(static_cast<int>(r.matches.size()), b.cardinality);
        EXPECT_NEAR(r.total_cost(c), b.cost, 1e-9);

        std::set<int> rs(r.unmatched_rows.begin(), r.unmatched_rows.end());
        std::set<int> cs(r.unmatched_cols.begin(), r.unmatched_cols.end());
        for (const auto& [i, j] : r.matches) {
            EXPECT_TRUE(rs.insert(i).second);
            EXPECT_TRUE(cs.insert(j).second);
            EXPECT_FALSE(c.gated(i, j));
        }
        EXPECT_EQ(static_cast<int>(rs.size()), rows);
        EXPECT_EQ(static_cast<int>(cs.size()), cols);

        // Adding a constant to finite entries keeps the matching.
        CostMatrix shifted = c;
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j) {
                if (!c.gated(i, j)) {
                    shifted.at(i, j) += 7.0;
                }
            }
        }
        EXPECT_NEAR(solve(shifted).total_cost(c), r.total_cost(c), 1e-9);
    }
}

}  // namespace
}  // namespace otrack
