// SPDX-License-Identifier: Apache-2.0
#include "otrack/reid_loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace otrack {

namespace {

struct Forward {
    Eigen::MatrixXd normalized;  // unit rows
    Eigen::VectorXd norms;
    SimilarityMatrix s;
    AssignmentMatrix m;
};

void check_pair(const PairBatch& pair) {
    if (pair.size() < 2) {
        throw std::invalid_argument("PairBatch: need at least two objects in total");
    }
    if (pair.n_prev() > 0 && pair.n_cur() > 0 && pair.prev.cols() != pair.cur.cols()) {
        throw std::invalid_argument("PairBatch: feature dimension differs between frames");
    }
}

Forward forward(const PairBatch& pair, PlaceholderMode mode, std::optional<double> fixed = std::nullopt) {
    check_pair(pair);
    Forward f;
    const FeatureSet x = pair.stacked();
    const Eigen::Index n = x.rows();
    f.norms = x.rowwise().norm();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(f.norms(i) >= kMinFeatureNorm)) {
            throw std::invalid_argument("similarity: feature row " + std::to_string(i) + " has zero norm");
        }
    }
    f.normalized = f.norms.cwiseInverse().asDiagonal() * x;

    f.s.n_prev = pair.n_prev();
    f.s.n_cur = pair.n_cur();
    f.s.square = f.normalized * f.normalized.transpose();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) {
                f.s.square(i, j) = -std::numeric_limits<double>::infinity();
            } else {
                // Round-off can push |cos| slightly past 1.
                f.s.square(i, j) = std::clamp(f.s.square(i, j), -1.0, 1.0);
                sum += f.s.square(i, j);
            }
        }
    }
    switch (mode) {
        case PlaceholderMode::None:
            break;
        case PlaceholderMode::Zero:
            f.s.placeholder = 0.0;
            break;
        case PlaceholderMode::DynamicMean:
            f.s.placeholder = sum / static_cast<double>(n * (n - 1));
            break;
    }
    if (fixed && f.s.placeholder) {
        f.s.placeholder = *fixed;
    }
    f.m = assignment(f.s);
    return f;
}

/// Back-propagates dL/dM through the softmax, the cosine similarities and the
/// row normalization. The placeholder column and the diagonal are constants.
Eigen::MatrixXd backward(const Forward& f, const Eigen::MatrixXd& grad_m) {
    const Eigen::MatrixXd& m = f.m.values;
    const Eigen::Index n = f.m.size();
    Eigen::MatrixXd grad_s = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double dot = grad_m.row(i).dot(m.row(i));
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i != j) {
                grad_s(i, j) = f.m.temperature * m(i, j) * (grad_m(i, j) - dot);
            }
        }
    }
    const Eigen::MatrixXd grad_u = (grad_s + grad_s.transpose()) * f.normalized;
    Eigen::MatrixXd grad_x(n, f.normalized.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto u = f.normalized.row(i);
        const auto g = grad_u.row(i);
        grad_x.row(i) = (g - u * u.dot(g)) / f.norms(i);
    }
    return grad_x;
}

void add_intra_grad(const AssignmentMatrix& m, Eigen::MatrixXd& g, double w) {
    const int np = m.n_prev;
    const int n = m.size();
    g.topLeftCorner(np, np).array() += w;
    g.block(np, np, n - np, n - np).array() += w;
}

struct RowHinge {
    Eigen::Index best;
    Eigen::Index second;
    double value;
};

RowHinge row_hinge(const Eigen::MatrixXd& values, Eigen::Index row, double margin) {
    const Eigen::Index cols = values.cols();
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < cols; ++j) {
        if (values(row, j) > values(row, best)) {
            best = j;
        }
    }
    Eigen::Index second = best == 0 ? 1 : 0;
    for (Eigen::Index j = 0; j < cols; ++j) {
        if (j != best && values(row, j) > values(row, second)) {
            second = j;
        }
    }
    return {best, second, std::max(values(row, second) + margin - values(row, best), 0.0)};
}

void add_inter_grad(const AssignmentMatrix& m, double margin, Eigen::MatrixXd& g, double w) {
    for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
        const RowHinge h = row_hinge(m.values, i, margin);
        if (h.value > 0.0) {
            g(i, h.second) += w;
            g(i, h.best) -= w;
        }
    }
}

void add_cycle_grad(const AssignmentMatrix& m, Eigen::MatrixXd& g, double w) {
    const int np = m.n_prev;
    const int n = m.size();
    for (int i = np; i < n; ++i) {
        for (int j = 0; j < np; ++j) {
            const double d = m.values(i, j) - m.values(j, i);
            const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
            g(i, j) += w * sign;
            g(j, i) -= w * sign;
        }
    }
}

}  // namespace

FeatureSet PairBatch::stacked() const {
    const Eigen::Index d = n_prev() > 0 ? prev.cols() : cur.cols();
    FeatureSet x(size(), d);
    if (n_prev() > 0) {
        x.topRows(n_prev()) = prev;
    }
    if (n_cur() > 0) {
        x.bottomRows(n_cur()) = cur;
    }
    return x;
}

Eigen::MatrixXd SimilarityMatrix::padded() const {
    const int n = size();
    Eigen::MatrixXd out(n, columns());
    out.leftCols(n) = square;
    for (int i = 0; i < n; ++i) {
        out(i, i) = kDiagonalSentinel;
    }
    if (placeholder) {
        out.col(n).setConstant(*placeholder);
    }
    return out;
}

double adaptive_temperature(int columns) {
    return 2.0 * std::log(static_cast<double>(columns) + 1.0);
}

SimilarityMatrix similarity(const PairBatch& pair, PlaceholderMode mode) {
    return forward(pair, mode).s;
}

AssignmentMatrix assignment(const SimilarityMatrix& s) {
    AssignmentMatrix m;
    m.n_prev = s.n_prev;
    m.n_cur = s.n_cur;
    m.has_placeholder = s.placeholder.has_value();
    m.temperature = adaptive_temperature(s.columns());
    const Eigen::MatrixXd logits = m.temperature * s.padded();
    m.values.resize(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double mx = logits.row(i).maxCoeff();
        const Eigen::RowVectorXd e = (logits.row(i).array() - mx).exp().matrix();
        m.values.row(i) = e / e.sum();
    }
    return m;
}

double loss_intra(const AssignmentMatrix& m) {
    const int np = m.n_prev;
    const int n = m.size();
    return m.values.topLeftCorner(np, np).sum() + m.values.block(np, np, n - np, n - np).sum();
}

double loss_inter(const AssignmentMatrix& m, double margin) {
    double loss = 0.0;
    if (m.values.cols() < 2) {
        return loss;
    }
    for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
        loss += row_hinge(m.values, i, margin).value;
    }
    return loss;
}

double loss_cycle(const AssignmentMatrix& m) {
    double loss = 0.0;
    for (int i = m.n_prev; i < m.size(); ++i) {
        for (int j = 0; j < m.n_prev; ++j) {
            loss += std::abs(m.values(i, j) - m.values(j, i));
        }
    }
    return loss;
}

double loss_negative_value(const AssignmentMatrix& m) {
    return m.values.leftCols(m.size()).sum();
}

LossReport loss_positive(const PairBatch& pair, const ReidLossConfig& config) {
    if (pair.kind != PairKind::Positive) {
        throw std::invalid_argument("loss_positive: pair is not positive");
    }
    const Forward f = forward(pair, config.placeholder, config.fixed_placeholder);
    LossReport r;
    r.intra = loss_intra(f.m);
    r.inter = loss_inter(f.m, config.margin);
    r.cycle = loss_cycle(f.m);
    const double scale = 1.0 / static_cast<double>(f.m.size());
    r.total = scale * (r.intra + r.inter + r.cycle);

    Eigen::MatrixXd grad_m = Eigen::MatrixXd::Zero(f.m.values.rows(), f.m.values.cols());
    add_intra_grad(f.m, grad_m, scale);
    if (grad_m.cols() >= 2) {
        add_inter_grad(f.m, config.margin, grad_m, scale);
    }
    add_cycle_grad(f.m, grad_m, scale);
    r.gradient = backward(f, grad_m);
    return r;
}

LossReport loss_negative(const PairBatch& pair, const ReidLossConfig& config) {
    if (pair.kind != PairKind::Negative) {
        throw std::invalid_argument("loss_negative: pair is not negative");
    }
    const Forward f = forward(pair, config.placeholder, config.fixed_placeholder);
    LossReport r;
    r.negative = loss_negative_value(f.m);
    r.total = r.negative;
    Eigen::MatrixXd grad_m = Eigen::MatrixXd::Zero(f.m.values.rows(), f.m.values.cols());
    grad_m.leftCols(f.m.size()).setOnes();
    r.gradient = backward(f, grad_m);
    return r;
}

BatchLossReport loss_batch(std::span<const PairBatch> positives, std::span<const PairBatch> negatives,
                           const ReidLossConfig& config) {
    const double n_pos = static_cast<double>(positives.size());
    const double n_neg = static_cast<double>(negatives.size());
    if (n_pos + n_neg < 1.0) {
        throw std::invalid_argument("loss_batch: empty batch");
    }
    BatchLossReport out;
    out.positive_weight = n_pos / (n_pos + n_neg);
    out.negative_weight = n_neg / (n_pos + n_neg);
    // Each pair's share of the total: component weight times 1 / list size.
    for (const auto& p : positives) {
        LossReport r = loss_positive(p, config);
        out.positive += r.total / n_pos;
        out.positive_gradients.push_back(r.gradient * (out.positive_weight / n_pos));
    }
    for (const auto& p : negatives) {
        LossReport r = loss_negative(p, config);
        out.negative += r.total / n_neg;
        out.negative_gradients.push_back(r.gradient * (out.negative_weight / n_neg));
    }
    out.total = out.positive_weight * out.positive + out.negative_weight * out.negative;
    return out;
}

}  // namespace otrack
