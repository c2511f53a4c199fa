// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace otrack {

/// Appearance features, one row per object.
using FeatureSet = Eigen::MatrixXd;

enum class PairKind { Positive, Negative };

/// Two frames of features. Rows of `prev` come first in every matrix built
/// from the pair, rows of `cur` follow.
struct PairBatch {
    FeatureSet prev;
    FeatureSet cur;
    PairKind kind = PairKind::Positive;

    int n_prev() const { return static_cast<int>(prev.rows()); }
    int n_cur() const { return static_cast<int>(cur.rows()); }
    int size() const { return n_prev() + n_cur(); }
    FeatureSet stacked() const;
};

enum class PlaceholderMode {
    None,         ///< no placeholder column
    Zero,         ///< p = 0
    DynamicMean,  ///< p = mean of the off-diagonal similarities, no gradient through p
};

struct ReidLossConfig {
    double margin = 0.5;
    PlaceholderMode placeholder = PlaceholderMode::DynamicMean;
    /// Freezes p at this value (ignored with PlaceholderMode::None). Since no
    /// gradient flows through p, the loss with p frozen at its current value
    /// has the same gradient as the dynamic one; finite differences need it.
    std::optional<double> fixed_placeholder;
};

inline constexpr double kMinFeatureNorm = 1e-12;
/// Finite stand-in for the -inf diagonal inside the softmax.
inline constexpr double kDiagonalSentinel = -1e4;

struct SimilarityMatrix {
    /// Cosine similarities; the diagonal holds -infinity.
    Eigen::MatrixXd square;
    std::optional<double> placeholder;
    int n_prev = 0;
    int n_cur = 0;

    int size() const { return n_prev + n_cur; }
    int columns() const { return size() + (placeholder ? 1 : 0); }
    /// Square part padded with the placeholder column, diagonal as the finite sentinel.
    Eigen::MatrixXd padded() const;
};

/// Row-stochastic assignment over the padded similarity matrix.
struct AssignmentMatrix {
    Eigen::MatrixXd values;
    double temperature = 0.0;
    int n_prev = 0;
    int n_cur = 0;
    bool has_placeholder = false;

    int size() const { return n_prev + n_cur; }
};

struct LossReport {
    double intra = 0.0;
    double inter = 0.0;
    double cycle = 0.0;
    double negative = 0.0;
    double total = 0.0;
    /// d total / d features, rows aligned with PairBatch::stacked().
    Eigen::MatrixXd gradient;
};

struct BatchLossReport {
    double positive = 0.0;  ///< mean positive-pair loss
    double negative = 0.0;  ///< mean negative-pair loss
    double total = 0.0;
    double positive_weight = 0.0;
    double negative_weight = 0.0;
    std::vector<Eigen::MatrixXd> positive_gradients;
    std::vector<Eigen::MatrixXd> negative_gradients;
};

/// 2 log(C + 1) for a matrix with C columns.
double adaptive_temperature(int columns);

SimilarityMatrix similarity(const PairBatch& pair, PlaceholderMode mode = PlaceholderMode::DynamicMean);
AssignmentMatrix assignment(const SimilarityMatrix& s);

/// Mass on the two same-frame blocks.
double loss_intra(const AssignmentMatrix& m);
/// Sum over rows of max(second_max + margin - max, 0); every column counts.
double loss_inter(const AssignmentMatrix& m, double margin);
/// Sum over current rows i and previous columns j of |M[i,j] - M[j,i]|.
double loss_cycle(const AssignmentMatrix& m);
/// Sum of all non-placeholder entries.
double loss_negative_value(const AssignmentMatrix& m);

LossReport loss_positive(const PairBatch& pair, const ReidLossConfig& config = {});
LossReport loss_negative(const PairBatch& pair, const ReidLossConfig& config = {});

/// Weighted combination of the mean positive and mean negative losses,
/// weights N_pos / (N_pos + N_neg) and N_neg / (N_pos + N_neg).
BatchLossReport loss_batch(std::span<const PairBatch> positives, std::span<const PairBatch> negatives,
                           const ReidLossConfig& config = {});

}  // namespace otrack
