// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "otrack/association.hpp"
#include "otrack/geometry.hpp"
#include "otrack/kalman.hpp"
#include "otrack/occlusion_heatmap.hpp"

namespace otrack {

enum class TrackStatus { Tracked, Lost };
enum class Provenance { Detected, Refound };

struct Tracklet {
    int id = 0;
    BBox box;
    /// Consecutive frames in which the tracklet was neither matched nor refound.
    int lost_count = 0;
    Point2 center;
    Eigen::VectorXd feature;
    KalmanState kalman;
    TrackStatus status = TrackStatus::Tracked;
};

struct TrackerConfig {
    AssociationParams association;
    /// Time window: lost tracklets with lost_count >= tau_w are dropped.
    int tau_w = 30;
    /// Minimum kernel score for accepting a refind candidate.
    double tau_o = 0.7;
    double new_track_confidence = 0.5;
    double feature_alpha = 0.9;
    bool refind = true;
    /// Measurement noise multiplier applied when a refound box updates the filter.
    double refind_noise_scale = 4.0;
    /// Off reproduces the literal pseudocode (a refind leaves lost_count as is).
    bool reset_lost_on_refind = false;
    /// Heatmap stride that sets the width of the refind scoring kernel.
    int score_stride = 4;
    SigmaRule sigma_rule;
    KalmanParams kalman;
};

struct Detection {
    BBox box;
    double confidence = 1.0;
    Point2 center;
};

struct FrameInput {
    std::vector<Detection> detections;
    /// One row per detection; may have zero columns when lambda == 0.
    Eigen::MatrixXd features;
    std::vector<Peak> occlusion_centers;
};

struct TrackResult {
    BBox box;
    int id = 0;
    Provenance provenance = Provenance::Detected;
};

struct FrameOutput {
    std::vector<TrackResult> results;  ///< sorted by id
};

struct TrackerState {
    std::vector<Tracklet> tracklets;  ///< sorted by id
    int next_id = 1;
    TrackerConfig config;
};

struct RefindCandidate {
    BBox box;
    int detection = -1;
    int center = -1;
    double score = 0.0;
};

/// Best (detection, occlusion centre) pair for a lost tracklet's predicted
/// box. Only detections overlapping the prediction and centres inside it are
/// considered. Returns the recovered box when the best score exceeds tau_o.
std::optional<RefindCandidate> refind(const BBox& predicted, std::span<const BBox> detections,
                                      std::span<const Point2> occ_centers, double tau_o, int stride = 4,
                                      const SigmaRule& rule = {});

/// alpha * old + (1 - alpha) * new, renormalized. Keeps `old` if the blend
/// vanishes.
Eigen::VectorXd smooth_feature(const Eigen::VectorXd& old_feature, const Eigen::VectorXd& new_feature, double alpha);

/// One frame of online tracking. Pure: the input state is not modified.
std::pair<TrackerState, FrameOutput> step(const TrackerState& state, const FrameInput& input);

/// Owns a TrackerState and advances it frame by frame.
class Tracker {
public:
    explicit Tracker(TrackerConfig config = {}) { state_.config = config; }

    FrameOutput step(const FrameInput& input);
    const TrackerState& state() const { return state_; }

private:
    TrackerState state_;
};

}  // namespace otrack
