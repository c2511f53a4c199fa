// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "otrack/geometry.hpp"

namespace otrack {

inline constexpr double kGatedCost = std::numeric_limits<double>::infinity();

/// Rows are tracklets, columns detections. Gated pairs hold kGatedCost.
class CostMatrix {
public:
    CostMatrix() = default;
    CostMatrix(int rows, int cols, double fill = 0.0);
    static CostMatrix from_rows(const std::vector<std::vector<double>>& rows);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    bool gated(int r, int c) const { return at(r, c) == kGatedCost; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

struct AssignmentResult {
    std::vector<std::pair<int, int>> matches;  ///< sorted by row
    std::vector<int> unmatched_rows;
    std::vector<int> unmatched_cols;

    double total_cost(const CostMatrix& cost) const;
};

struct TrackView {
    BBox predicted;
    Eigen::VectorXd feature;
    bool lost = false;
};

struct AssociationParams {
    double lambda = 0.6;
    double iou_gate = 0.1;
    double cos_gate = 0.3;
};

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// cost = lambda (1 - cos) + (1 - lambda)(1 - IoU). The IoU gate applies to
/// tracked (non-lost) tracklets only; the cosine gate applies when lambda > 0.
CostMatrix build_cost(std::span<const TrackView> tracks, std::span<const BBox> detections,
                      const Eigen::MatrixXd& det_features, const AssociationParams& params = {});

/// Maximum-cardinality matching over non-gated entries, minimum total cost
/// among those (rectangular Hungarian with shortest augmenting paths).
AssignmentResult solve(const CostMatrix& cost);

}  // namespace otrack
