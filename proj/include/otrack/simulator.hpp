// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "otrack/geometry.hpp"
#include "otrack/occlusion_heatmap.hpp"
#include "otrack/rng.hpp"

namespace otrack {

enum class OcclusionChannelMode { Oracle, Noisy, Rendered };

struct SimConfig {
    int width = 640;
    int height = 480;
    int objects = 12;
    int frames = 100;
    double speed_min = 0.5;  ///< px / frame
    double speed_max = 3.0;
    double accel_std = 0.05;
    double spawn_rate = 0.0;    ///< probability of a new object per frame
    double despawn_rate = 0.0;  ///< per-object probability of leaving per frame
    double box_width_min = 30.0;
    double box_width_max = 60.0;
    double aspect_min = 2.0;  ///< height / width
    double aspect_max = 2.6;
    double visibility_threshold = 0.3;
    double det_noise_std = 1.0;  ///< px, per box coordinate
    double fp_rate = 0.0;        ///< mean false positives per frame
    int descriptor_dim = 32;
    int signature_dim = 8;
    double signature_scale = 1.0;
    double descriptor_jitter = 0.2;
    double descriptor_offset = 4.0;
    /// Per-observation variation outside the identity subspace (pose, light).
    double nuisance_std = 1.5;
    double occlusion_corruption = 0.3;
    OcclusionChannelMode occlusion_mode = OcclusionChannelMode::Oracle;
    double occlusion_noise = 1.0;  ///< px, noisy channel
    double occlusion_dropout = 0.0;
    int stride = 4;
    double tau = kDefaultOcclusionTau;
    std::uint64_t seed = 0;
    /// Fixes the descriptor space; scenes with the same value are comparable.
    std::uint64_t appearance_seed = 0;

    void validate() const;
};

struct GtObject {
    int id = 0;
    BBox box;
    int depth = 0;  ///< larger is nearer the camera
    double visibility = 1.0;
};

struct SimDetection {
    BBox box;
    double confidence = 1.0;
};

struct SimOcclusion {
    BBox region;
    Point2 center;
    int id_a = 0;
    int id_b = 0;
};

struct SimFrame {
    int index = 0;  ///< 1-based
    std::vector<GtObject> gt;
    std::vector<SimDetection> detections;
    Eigen::MatrixXd descriptors;  ///< one row per detection
    std::vector<SimOcclusion> occlusions;
    /// Hidden from the tracker: the gt id behind each detection, -1 for false positives.
    std::vector<int> detection_truth;
    /// Hidden from the tracker: noiseless identity features per detection.
    Eigen::MatrixXd oracle_features;
};

struct SyntheticSequence {
    SimConfig config;
    std::vector<SimFrame> frames;
};

/// Exact area of the union of rectangles (coordinate compression).
double union_area(const std::vector<BBox>& boxes);

/// Fraction of `self` not covered by the given occluders.
double visibility(const BBox& self, const std::vector<BBox>& occluders);

/// Ground-truth motion only: per frame, the objects present.
std::vector<std::vector<GtObject>> generate_trajectories(const SimConfig& config);

/// Visibility, detector, descriptors and occlusion events for given
/// trajectories. Deterministic in (config.seed, trajectories).
SyntheticSequence observe(const SimConfig& config, const std::vector<std::vector<GtObject>>& trajectories);

SyntheticSequence generate(const SimConfig& config);

struct ChannelParams {
    OcclusionChannelMode mode = OcclusionChannelMode::Oracle;
    double noise_std = 1.0;
    double dropout = 0.0;
    DecodeParams decode;
    std::uint64_t seed = 0;
};

/// Per-frame occlusion centres as seen by the tracker.
std::vector<std::vector<Peak>> occlusion_channel(const SyntheticSequence& sequence, const ChannelParams& params);
ChannelParams channel_params(const SimConfig& config);

const char* to_string(OcclusionChannelMode mode);
OcclusionChannelMode parse_channel_mode(const std::string& text);

}  // namespace otrack
