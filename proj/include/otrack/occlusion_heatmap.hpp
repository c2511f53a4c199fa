// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "otrack/geometry.hpp"

namespace otrack {

/// Dense grid of occlusion-centre scores at 1/stride resolution, row-major.
class Heatmap {
public:
    Heatmap() = default;
    Heatmap(int width, int height, int stride);
    /// Grid sized ceil(image_dim / stride) on each axis.
    static Heatmap for_image(int image_width, int image_height, int stride);

    int width() const { return width_; }
    int height() const { return height_; }
    int stride() const { return stride_; }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    double at(int x, int y) const { return values_[index(x, y)]; }
    double& at(int x, int y) { return values_[index(x, y)]; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

private:
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

    int width_ = 0;
    int height_ = 0;
    int stride_ = 1;
    std::vector<double> values_;
};

/// Two-channel sub-cell offsets plus the mask of supervised cells. When used
/// as a prediction the mask is ignored.
class OffsetMap {
public:
    OffsetMap() = default;
    OffsetMap(int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }

    double dx(int x, int y) const { return dx_[index(x, y)]; }
    double dy(int x, int y) const { return dy_[index(x, y)]; }
    bool masked(int x, int y) const { return mask_[index(x, y)] != 0; }
    void set(int x, int y, double dx, double dy, bool mask = true);
    std::size_t masked_count() const;

private:
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> dx_;
    std::vector<double> dy_;
    std::vector<std::uint8_t> mask_;
};

struct FocalParams {
    double alpha = 2.0;
    double beta = 4.0;
};

inline constexpr double kFocalClampEps = 1e-7;

struct OcclusionTargets {
    Heatmap heatmap;
    OffsetMap offsets;
    int valid_count = 0;
    std::vector<OcclusionEvent> events;
};

struct Peak {
    Point2 center;
    double score = 0.0;
};

struct DecodeParams {
    double score_threshold = 0.3;
    int max_peaks = 128;
};

/// Renders the target heatmap (max over valid occlusion kernels) and the
/// offset targets at each quantized centre. Pairs are enumerated i < j.
OcclusionTargets render_targets(std::span<const BBox> boxes, double tau, int image_width, int image_height,
                                int stride, const SigmaRule& rule = {});

/// Sum over cells of the penalty-reduced focal loss. Predictions are clamped
/// to [eps, 1 - eps] before the logarithms.
double focal_center_loss(const Heatmap& target, const Heatmap& pred, const FocalParams& params = {},
                         double eps = kFocalClampEps);

/// Sum over masked target cells of the L1 offset error on both channels.
double offset_loss(const OffsetMap& target, const OffsetMap& pred);

/// (center + offset) / max(1, valid_count).
double occlusion_loss(double center_loss, double offset_loss, int valid_count);

struct OcclusionFrameLoss {
    double center = 0.0;
    double offset = 0.0;
    int valid_count = 0;
    double total = 0.0;
};

OcclusionFrameLoss occlusion_frame_loss(const OcclusionTargets& target, const Heatmap& pred_heatmap,
                                        const OffsetMap& pred_offsets, const FocalParams& params = {});
/// Mean of per-frame normalized losses over a batch.
double occlusion_batch_loss(std::span<const OcclusionFrameLoss> frames);

/// Strict 3x3 local maxima above the threshold, ties resolved in favour of
/// the lowest (y, x) cell. Centres are stride * (cell + offset).
std::vector<Peak> decode_peaks(const Heatmap& pred, const OffsetMap& offsets, const DecodeParams& params = {});

/// Binary PGM (P5), values scaled by 255 and rounded half-up.
std::string to_pgm(const Heatmap& heatmap);

}  // namespace otrack
