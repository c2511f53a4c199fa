// SPDX-License-Identifier: Apache-2.0
#include "otrack/tracker.hpp"

#include <algorithm>
#include <stdexcept>

namespace otrack {

std::optional<RefindCandidate> refind(const BBox& predicted, std::span<const BBox> detections,
                                      std::span<const Point2> occ_centers, double tau_o, int stride,
                                      const SigmaRule& rule) {
    std::optional<RefindCandidate> best;
    for (std::size_t j = 0; j < detections.size(); ++j) {
        const auto overlap = intersect(predicted, detections[j]);
        if (!overlap) {
            continue;
        }
        for (std::size_t k = 0; k < occ_centers.size(); ++k) {
            const Point2 p = occ_centers[k];
            if (p.x < predicted.x_l || p.x > predicted.x_r || p.y < predicted.y_t || p.y > predicted.y_b) {
                continue;
            }
            const double score = refind_score(*overlap, p, static_cast<double>(stride), rule);
            if (!best || score > best->score) {
                best = RefindCandidate{{}, static_cast<int>(j), static_cast<int>(k), score};
            }
        }
    }
    if (!best || !(best->score > tau_o)) {
        return std::nullopt;
    }
    best->box = recover_box(predicted, detections[static_cast<std::size_t>(best->detection)],
                            occ_centers[static_cast<std::size_t>(best->center)]);
    return best;
}

Eigen::VectorXd smooth_feature(const Eigen::VectorXd& old_feature, const Eigen::VectorXd& new_feature, double alpha) {
    if (old_feature.size() != new_feature.size()) {
        throw std::invalid_argument("smooth_feature: dimension mismatch");
    }
    const Eigen::VectorXd blend = alpha * old_feature + (1.0 - alpha) * new_feature;
    const double norm = blend.norm();
    if (!(norm > 0.0)) {
        return old_feature;
    }
    return blend / norm;
}

namespace {

Eigen::VectorXd unit(const Eigen::VectorXd& v) {
    const double n = v.norm();
    return n > 0.0 ? Eigen::VectorXd(v / n) : v;
}

}  // namespace

std::pair<TrackerState, FrameOutput> step(const TrackerState& state, const FrameInput& input) {
    const TrackerConfig& cfg = state.config;
    const std::size_t n_det = input.detections.size();
    const bool has_features = input.features.cols() > 0;
    if (has_features && static_cast<std::size_t>(input.features.rows()) != n_det) {
        throw std::invalid_argument("tracker step: detections and features are not aligned");
    }
    AssociationParams assoc = cfg.association;
    if (!has_features) {
        assoc.lambda = 0.0;
    }

    const KalmanBoxFilter kf(cfg.kalman);
    std::vector<KalmanState> predicted;
    std::vector<TrackView> views;
    predicted.reserve(state.tracklets.size());
    views.reserve(state.tracklets.size());
    for (const Tracklet& t : state.tracklets) {
        predicted.push_back(kf.predict(t.kalman));
        views.push_back({predicted.back().box(), t.feature, t.status == TrackStatus::Lost});
    }
    std::vector<BBox> det_boxes;
    det_boxes.reserve(n_det);
    for (const auto& d : input.detections) {
        det_boxes.push_back(d.box);
    }

    // Step 2: assignment.
    const CostMatrix cost = build_cost(views, det_boxes, input.features, assoc);
    const AssignmentResult assigned = solve(cost);

    TrackerState next;
    next.config = cfg;
    next.next_id = state.next_id;
    FrameOutput out;

    // Step 3: matched tracklets.
    for (const auto& [row, col] : assigned.matches) {
        Tracklet t = state.tracklets[static_cast<std::size_t>(row)];
        const Detection& d = input.detections[static_cast<std::size_t>(col)];
        t.lost_count = 0;
        t.status = TrackStatus::Tracked;
        t.box = d.box;
        t.center = d.box.center();
        t.kalman = kf.update(predicted[static_cast<std::size_t>(row)], d.box);
        if (has_features) {
            const Eigen::VectorXd f = input.features.row(static_cast<Eigen::Index>(col)).transpose();
            t.feature = t.feature.size() == f.size() ? smooth_feature(t.feature, unit(f), cfg.feature_alpha) : unit(f);
        }
        out.results.push_back({t.box, t.id, Provenance::Detected});
        next.tracklets.push_back(std::move(t));
    }

    // Step 4: new tracklets from unassigned confident detections.
    for (const int col : assigned.unmatched_cols) {
        const Detection& d = input.detections[static_cast<std::size_t>(col)];
        if (d.confidence < cfg.new_track_confidence || area(d.box) <= 0.0) {
            continue;
        }
        Tracklet t;
        t.id = next.next_id++;
        t.box = d.box;
        t.center = d.box.center();
        t.kalman = kf.init(d.box);
        t.status = TrackStatus::Tracked;
        if (has_features) {
            t.feature = unit(input.features.row(static_cast<Eigen::Index>(col)).transpose());
        }
        out.results.push_back({t.box, t.id, Provenance::Detected});
        next.tracklets.push_back(std::move(t));
    }

    // Step 5: lost tracklets, ascending id (rows are already id-sorted).
    std::vector<Point2> centers;
    centers.reserve(input.occlusion_centers.size());
    for (const auto& p : input.occlusion_centers) {
        centers.push_back(p.center);
    }
    for (const int row : assigned.unmatched_rows) {
        const Tracklet& prev = state.tracklets[static_cast<std::size_t>(row)];
        if (prev.lost_count >= cfg.tau_w) {
            continue;
        }
        Tracklet t = prev;
        const KalmanState& pred = predicted[static_cast<std::size_t>(row)];
        const BBox b_pred = pred.box();
        std::optional<RefindCandidate> found;
        if (cfg.refind) {
            found = refind(b_pred, det_boxes, centers, cfg.tau_o, cfg.score_stride, cfg.sigma_rule);
        }
        if (found) {
            t.box = found->box;
            t.center = t.box.center();
            t.kalman = kf.update(pred, found->box, cfg.refind_noise_scale);
            t.status = TrackStatus::Tracked;
            if (cfg.reset_lost_on_refind) {
                t.lost_count = 0;
            }
            out.results.push_back({t.box, t.id, Provenance::Refound});
        } else {
            t.lost_count += 1;
            t.box = b_pred;
            t.center = b_pred.center();
            t.kalman = pred;
            t.status = TrackStatus::Lost;
        }
        next.tracklets.push_back(std::move(t));
    }

    std::sort(next.tracklets.begin(), next.tracklets.end(),
              [](const Tracklet& a, const Tracklet& b) { return a.id < b.id; });
    std::sort(out.results.begin(), out.results.end(),
              [](const TrackResult& a, const TrackResult& b) { return a.id < b.id; });
    return {std::move(next), std::move(out)};
}

FrameOutput Tracker::step(const FrameInput& input) {
    auto [next, out] = otrack::step(state_, input);
    state_ = std::move(next);
    return out;
}

}  // namespace otrack
