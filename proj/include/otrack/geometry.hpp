// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <utility>

namespace otrack {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

/// Axis-aligned box in image coordinates (y grows downward). Half-open in
/// continuous coordinates: width is `x_r - x_l`, no +1 pixel convention.
struct BBox {
    double x_l = 0.0;
    double y_t = 0.0;
    double x_r = 0.0;
    double y_b = 0.0;

    double width() const { return x_r - x_l; }
    double height() const { return y_b - y_t; }
    Point2 center() const { return {0.5 * (x_l + x_r), 0.5 * (y_t + y_b)}; }
    bool valid() const;

    static BBox from_xywh(double x, double y, double w, double h) { return {x, y, x + w, y + h}; }
    static BBox from_center(Point2 c, double w, double h) {
        return {c.x - 0.5 * w, c.y - 0.5 * h, c.x + 0.5 * w, c.y + 0.5 * h};
    }

    friend bool operator==(const BBox&, const BBox&) = default;
};

/// A valid occlusion between two boxes: the overlap region, its midpoint and
/// the indices of the boxes that produced it.
struct OcclusionEvent {
    BBox region;
    Point2 center;
    std::pair<int, int> source_pair{0, 1};
};

/// Parameters of the Gaussian width rule for occlusion kernels.
///
/// The radius is the largest corner shift r for which a box of the overlap's
/// size, shifted by r on both axes, keeps IoU >= `min_overlap` with the
/// unshifted one. sigma = r / 3, floored at `sigma_min` heatmap cells.
struct SigmaRule {
    double min_overlap = 0.7;
    double sigma_min = 1.0;
};

inline constexpr double kDefaultOcclusionTau = 0.7;

std::optional<BBox> intersect(const BBox& a, const BBox& b);
double area(const BBox& b);
double iou(const BBox& a, const BBox& b);

/// Returns the occlusion event iff the overlap covers more than `tau` of the
/// smaller box. Boxes of zero area never produce an event.
std::optional<OcclusionEvent> occlusion_valid(const BBox& a, const BBox& b,
                                              double tau = kDefaultOcclusionTau,
                                              std::pair<int, int> source_pair = {0, 1});

/// exp(-|query - center|^2 / (2 sigma^2)).
double gaussian_kernel(Point2 center, Point2 query, double sigma);

/// Radius (in the units of w and h) of the shift rule described in SigmaRule.
double gaussian_radius(double w, double h, double min_overlap);
/// Kernel standard deviation in heatmap cells for an overlap region.
double occlusion_sigma(const BBox& region, double stride, const SigmaRule& rule = {});

/// Heatmap kernel value at `query` (heatmap cell coordinates), centred on the
/// quantized region midpoint floor(p / stride).
double gaussian_score(const BBox& region, Point2 query, double stride, const SigmaRule& rule = {});

/// Kernel value used to rank refinding candidates: same width rule as
/// gaussian_score, but evaluated in image coordinates around the exact region
/// midpoint, so an exact midpoint scores 1.
double refind_score(const BBox& region, Point2 point, double stride, const SigmaRule& rule = {});

/// Recovers the leading coordinate of the lost interval [a1, a2] from the
/// occluder interval [b1, b2] and the overlap midpoint z.
double recover_coordinate(double a1, double a2, double b1, double b2, double z);

/// Lost box recovery: leading coordinates from recover_coordinate on each
/// axis, size copied from `predicted`.
BBox recover_box(const BBox& predicted, const BBox& neighbor, Point2 occ_center);

}  // namespace otrack
