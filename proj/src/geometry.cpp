// SPDX-License-Identifier: Apache-2.0
#include "otrack/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace otrack {

bool BBox::valid() const {
    return std::isfinite(x_l) && std::isfinite(y_t) && std::isfinite(x_r) && std::isfinite(y_b) &&
           x_l <= x_r && y_t <= y_b;
}

std::optional<BBox> intersect(const BBox& a, const BBox& b) {
    const BBox o{std::max(a.x_l, b.x_l), std::max(a.y_t, b.y_t), std::min(a.x_r, b.x_r),
                 std::min(a.y_b, b.y_b)};
    if (o.x_r > o.x_l && o.y_b > o.y_t) {
        return o;
    }
    return std::nullopt;
}

double area(const BBox& b) {
    return std::max(0.0, b.width()) * std::max(0.0, b.height());
}

double iou(const BBox& a, const BBox& b) {
    const auto o = intersect(a, b);
    if (!o) {
        return 0.0;
    }
    const double inter = area(*o);
    const double uni = area(a) + area(b) - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

std::optional<OcclusionEvent> occlusion_valid(const BBox& a, const BBox& b, double tau,
                                              std::pair<int, int> source_pair) {
    const auto o = intersect(a, b);
    if (!o) {
        return std::nullopt;
    }
    const double min_area = std::min(area(a), area(b));
    if (min_area <= 0.0) {
        return std::nullopt;
    }
    if (area(*o) / min_area > tau) {
        return OcclusionEvent{*o, o->center(), source_pair};
    }
    return std::nullopt;
}

double gaussian_kernel(Point2 center, Point2 query, double sigma) {
    const double dx = query.x - center.x;
    const double dy = query.y - center.y;
    return std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
}

double gaussian_radius(double w, double h, double min_overlap) {
    // (w - r)(h - r) / (2wh - (w - r)(h - r)) = min_overlap, smaller root.
    const double b = w + h;
    const double c = w * h * (1.0 - min_overlap) / (1.0 + min_overlap);
    const double disc = std::max(0.0, b * b - 4.0 * c);
    return 0.5 * (b - std::sqrt(disc));
}

double occlusion_sigma(const BBox& region, double stride, const SigmaRule& rule) {
    const double r = gaussian_radius(region.width() / stride, region.height() / stride, rule.min_overlap);
    return std::max(r / 3.0, rule.sigma_min);
}

double gaussian_score(const BBox& region, Point2 query, double stride, const SigmaRule& rule) {
    const Point2 p = region.center();
    const Point2 cell{std::floor(p.x / stride), std::floor(p.y / stride)};
    return gaussian_kernel(cell, query, occlusion_sigma(region, stride, rule));
}

double refind_score(const BBox& region, Point2 point, double stride, const SigmaRule& rule) {
    return gaussian_kernel(region.center(), point, occlusion_sigma(region, stride, rule) * stride);
}

double recover_coordinate(double a1, double a2, double b1, double b2, double z) {
    if (a1 <= b1 && a2 <= b2) {
        return 2.0 * z - b1 - (a2 - a1);
    }
    if (a1 > b1 && a2 <= b2) {
        return z - (a2 - a1) / 2.0;
    }
    if (a1 > b1 && a2 > b2) {
        return 2.0 * z - b2;
    }
    return a1;
}

BBox recover_box(const BBox& predicted, const BBox& neighbor, Point2 occ_center) {
    const double x_l = recover_coordinate(predicted.x_l, predicted.x_r, neighbor.x_l, neighbor.x_r, occ_center.x);
    const double y_t = recover_coordinate(predicted.y_t, predicted.y_b, neighbor.y_t, neighbor.y_b, occ_center.y);
    return {x_l, y_t, x_l + predicted.width(), y_t + predicted.height()};
}

}  // namespace otrack
