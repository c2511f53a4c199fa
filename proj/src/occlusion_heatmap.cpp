// SPDX-License-Identifier: Apache-2.0
#include "otrack/occlusion_heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace otrack {

Heatmap::Heatmap(int width, int height, int stride)
    : width_(width), height_(height), stride_(stride),
      values_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), 0.0) {
    if (width < 0 || height < 0 || stride < 1) {
        throw std::invalid_argument("Heatmap: invalid dimensions or stride");
    }
}

Heatmap Heatmap::for_image(int image_width, int image_height, int stride) {
    if (stride < 1) {
        throw std::invalid_argument("Heatmap: stride must be >= 1");
    }
    return Heatmap((image_width + stride - 1) / stride, (image_height + stride - 1) / stride, stride);
}

OffsetMap::OffsetMap(int width, int height)
    : width_(width), height_(height),
      dx_(static_cast<std::size_t>(width) * height, 0.0),
      dy_(static_cast<std::size_t>(width) * height, 0.0),
      mask_(static_cast<std::size_t>(width) * height, 0) {}

void OffsetMap::set(int x, int y, double dx, double dy, bool mask) {
    const auto i = index(x, y);
    dx_[i] = dx;
    dy_[i] = dy;
    mask_[i] = mask ? 1 : 0;
}

std::size_t OffsetMap::masked_count() const {
    return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

OcclusionTargets render_targets(std::span<const BBox> boxes, double tau, int image_width, int image_height,
                                int stride, const SigmaRule& rule) {
    OcclusionTargets out;
    out.heatmap = Heatmap::for_image(image_width, image_height, stride);
    out.offsets = OffsetMap(out.heatmap.width(), out.heatmap.height());

    const int n = static_cast<int>(boxes.size());
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (auto ev = occlusion_valid(boxes[i], boxes[j], tau, {i, j})) {
                out.events.push_back(*ev);
            }
        }
    }
    out.valid_count = static_cast<int>(out.events.size());

    Heatmap& hm = out.heatmap;
    const double r = static_cast<double>(stride);
    for (const auto& ev : out.events) {
        for (int y = 0; y < hm.height(); ++y) {
            for (int x = 0; x < hm.width(); ++x) {
                const double g = gaussian_score(ev.region, {static_cast<double>(x), static_cast<double>(y)}, r, rule);
                hm.at(x, y) = std::max(hm.at(x, y), g);
            }
        }
    }

    // Offsets: when two centres fall in one cell, the larger overlap wins,
    // then the smaller offset, so the result is independent of box order.
    struct CellClaim {
        double region_area;
        double dx;
        double dy;
    };
    std::vector<std::optional<CellClaim>> claims(static_cast<std::size_t>(hm.width()) * hm.height());
    for (const auto& ev : out.events) {
        const double qx = ev.center.x / r;
        const double qy = ev.center.y / r;
        const int cx = static_cast<int>(std::floor(qx));
        const int cy = static_cast<int>(std::floor(qy));
        if (!hm.contains(cx, cy)) {
            continue;
        }
        const CellClaim claim{area(ev.region), qx - cx, qy - cy};
        auto& slot = claims[static_cast<std::size_t>(cy) * hm.width() + cx];
        const auto key = [](const CellClaim& c) { return std::make_tuple(-c.region_area, c.dx, c.dy); };
        if (!slot || key(claim) < key(*slot)) {
            slot = claim;
        }
    }
    for (int y = 0; y < hm.height(); ++y) {
        for (int x = 0; x < hm.width(); ++x) {
            if (const auto& c = claims[static_cast<std::size_t>(y) * hm.width() + x]) {
                out.offsets.set(x, y, c->dx, c->dy);
            }
        }
    }
    return out;
}

double focal_center_loss(const Heatmap& target, const Heatmap& pred, const FocalParams& params, double eps) {
    if (target.width() != pred.width() || target.height() != pred.height()) {
        throw std::invalid_argument("focal_center_loss: dimension mismatch");
    }
    const auto t = target.values();
    const auto p = pred.values();
    double loss = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double y = t[i];
        const double yh = std::clamp(p[i], eps, 1.0 - eps);
        if (y == 1.0) {
            loss -= std::pow(1.0 - yh, params.alpha) * std::log(yh);
        } else {
            loss -= std::pow(1.0 - y, params.beta) * std::pow(yh, params.alpha) * std::log(1.0 - yh);
        }
    }
    return loss;
}

double offset_loss(const OffsetMap& target, const OffsetMap& pred) {
    if (target.width() != pred.width() || target.height() != pred.height()) {
        throw std::invalid_argument("offset_loss: dimension mismatch");
    }
    double loss = 0.0;
    for (int y = 0; y < target.height(); ++y) {
        for (int x = 0; x < target.width(); ++x) {
            if (target.masked(x, y)) {
                loss += std::abs(pred.dx(x, y) - target.dx(x, y)) + std::abs(pred.dy(x, y) - target.dy(x, y));
            }
        }
    }
    return loss;
}

double occlusion_loss(double center_loss, double offset_loss, int valid_count) {
    return (center_loss + offset_loss) / static_cast<double>(std::max(1, valid_count));
}

OcclusionFrameLoss occlusion_frame_loss(const OcclusionTargets& target, const Heatmap& pred_heatmap,
                                        const OffsetMap& pred_offsets, const FocalParams& params) {
    OcclusionFrameLoss out;
    out.center = focal_center_loss(target.heatmap, pred_heatmap, params);
    out.offset = offset_loss(target.offsets, pred_offsets);
    out.valid_count = target.valid_count;
    out.total = occlusion_loss(out.center, out.offset, out.valid_count);
    return out;
}

double occlusion_batch_loss(std::span<const OcclusionFrameLoss> frames) {
    if (frames.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const auto& f : frames) {
        sum += f.total;
    }
    return sum / static_cast<double>(frames.size());
}

std::vector<Peak> decode_peaks(const Heatmap& pred, const OffsetMap& offsets, const DecodeParams& params) {
    struct Cell {
        int x;
        int y;
        double score;
    };
    std::vector<Cell> cells;
    for (int y = 0; y < pred.height(); ++y) {
        for (int x = 0; x < pred.width(); ++x) {
            const double v = pred.at(x, y);
            if (!(v > params.score_threshold)) {
                continue;
            }
            bool is_peak = true;
            for (int dy = -1; dy <= 1 && is_peak; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if ((dx == 0 && dy == 0) || !pred.contains(x + dx, y + dy)) {
                        continue;
                    }
                    const double nv = pred.at(x + dx, y + dy);
                    // A tied neighbour wins only if it comes first in (y, x) order.
                    const bool neighbour_first = dy < 0 || (dy == 0 && dx < 0);
                    if (nv > v || (nv == v && neighbour_first)) {
                        is_peak = false;
                        break;
                    }
                }
            }
            if (is_peak) {
                cells.push_back({x, y, v});
            }
        }
    }
    std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) { return a.score > b.score; });
    if (static_cast<int>(cells.size()) > params.max_peaks) {
        cells.resize(static_cast<std::size_t>(std::max(0, params.max_peaks)));
    }
    std::vector<Peak> peaks;
    peaks.reserve(cells.size());
    const double r = static_cast<double>(pred.stride());
    const bool has_offsets = offsets.width() == pred.width() && offsets.height() == pred.height();
    for (const auto& c : cells) {
        const double ox = has_offsets ? offsets.dx(c.x, c.y) : 0.0;
        const double oy = has_offsets ? offsets.dy(c.x, c.y) : 0.0;
        peaks.push_back({{r * (c.x + ox), r * (c.y + oy)}, c.score});
    }
    return peaks;
}

std::string to_pgm(const Heatmap& heatmap) {
    std::string out = "P5\n" + std::to_string(heatmap.width()) + " " + std::to_string(heatmap.height()) + "\n255\n";
    out.reserve(out.size() + heatmap.values().size());
    for (const double v : heatmap.values()) {
        const double scaled = std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
        out.push_back(static_cast<char>(static_cast<unsigned char>(scaled)));
    }
    return out;
}

}  // namespace otrack
