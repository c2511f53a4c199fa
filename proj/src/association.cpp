// SPDX-License-Identifier: Apache-2.0
#include "otrack/association.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace otrack {

CostMatrix::CostMatrix(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) {
        throw std::invalid_argument("CostMatrix: negative dimension");
    }
}

CostMatrix CostMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    const int r = static_cast<int>(rows.size());
    const int c = r > 0 ? static_cast<int>(rows.front().size()) : 0;
    CostMatrix m(r, c);
    for (int i = 0; i < r; ++i) {
        if (static_cast<int>(rows[i].size()) != c) {
            throw std::invalid_argument("CostMatrix: ragged rows");
        }
        for (int j = 0; j < c; ++j) {
            m.at(i, j) = rows[i][j];
        }
    }
    return m;
}

double AssignmentResult::total_cost(const CostMatrix& cost) const {
    double sum = 0.0;
    for (const auto& [r, c] : matches) {
        sum += cost.at(r, c);
    }
    return sum;
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na <= 0.0 || nb <= 0.0) {
        return 0.0;
    }
    return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

CostMatrix build_cost(std::span<const TrackView> tracks, std::span<const BBox> detections,
                      const Eigen::MatrixXd& det_features, const AssociationParams& params) {
    if (params.lambda < 0.0 || params.lambda > 1.0) {
        throw std::invalid_argument("build_cost: lambda must lie in [0, 1]");
    }
    const bool use_appearance = params.lambda > 0.0;
    if (use_appearance && static_cast<std::size_t>(det_features.rows()) != detections.size()) {
        throw std::invalid_argument("build_cost: detections and features are not aligned");
    }
    CostMatrix cost(static_cast<int>(tracks.size()), static_cast<int>(detections.size()));
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        const TrackView& t = tracks[i];
        if (use_appearance && t.feature.size() != det_features.cols()) {
            throw std::invalid_argument("build_cost: feature dimension mismatch");
        }
        for (std::size_t j = 0; j < detections.size(); ++j) {
            const double overlap = iou(t.predicted, detections[j]);
            double cos = 1.0;
            if (use_appearance) {
                cos = cosine_similarity(t.feature, det_features.row(static_cast<Eigen::Index>(j)).transpose());
            }
            const bool gated = (!t.lost && overlap < params.iou_gate) || (use_appearance && cos < params.cos_gate);
            cost.at(static_cast<int>(i), static_cast<int>(j)) =
                gated ? kGatedCost : params.lambda * (1.0 - cos) + (1.0 - params.lambda) * (1.0 - overlap);
        }
    }
    return cost;
}

namespace {

/// Hungarian algorithm with potentials for n <= m; returns the column of each
/// row (every row is assigned).
std::vector<int> hungarian(const std::vector<double>& a, int n, int m) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0);
    std::vector<double> v(m + 1, 0.0);
    std::vector<int> p(m + 1, 0);
    std::vector<int> way(m + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) {
                    continue;
                }
                const double cur = a[static_cast<std::size_t>(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= m; ++j) {
        if (p[j] != 0) {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    return row_to_col;
}

}  // namespace

AssignmentResult solve(const CostMatrix& cost) {
    AssignmentResult out;
    const int rows = cost.rows();
    const int cols = cost.cols();

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            if (!cost.gated(r, c)) {
                if (!std::isfinite(cost.at(r, c))) {
                    throw std::invalid_argument("solve: cost entries must be finite or gated");
                }
                lo = std::min(lo, cost.at(r, c));
                hi = std::max(hi, cost.at(r, c));
            }
        }
    }

    if (std::isfinite(lo)) {
        // Shift finite costs to >= 0 and price gated pairs above any sum of
        // finite ones, so the optimum first maximizes the number of
        // non-gated matches and then minimizes their cost.
        const bool transposed = rows > cols;
        const int n = transposed ? cols : rows;
        const int m = transposed ? rows : cols;
        const double big = (hi - lo + 1.0) * (n + 1);
        std::vector<double> a(static_cast<std::size_t>(n) * m);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < m; ++j) {
                const int r = transposed ? j : i;
                const int c = transposed ? i : j;
                a[static_cast<std::size_t>(i) * m + j] = cost.gated(r, c) ? big : cost.at(r, c) - lo;
            }
        }
        const std::vector<int> assigned = hungarian(a, n, m);
        for (int i = 0; i < n; ++i) {
            const int r = transposed ? assigned[i] : i;
            const int c = transposed ? i : assigned[i];
            if (!cost.gated(r, c)) {
                out.matches.emplace_back(r, c);
            }
        }
        std::sort(out.matches.begin(), out.matches.end());
    }

    std::vector<char> row_used(rows, 0);
    std::vector<char> col_used(cols, 0);
    for (const auto& [r, c] : out.matches) {
        row_used[r] = 1;
        col_used[c] = 1;
    }
    for (int r = 0; r < rows; ++r) {
        if (!row_used[r]) {
            out.unmatched_rows.push_back(r);
        }
    }
    for (int c = 0; c < cols; ++c) {
        if (!col_used[c]) {
            out.unmatched_cols.push_back(c);
        }
    }
    return out;
}

}  // namespace otrack
