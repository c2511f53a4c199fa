// SPDX-License-Identifier: Apache-2.0
#include "otrack/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace otrack {

namespace {

// Independent random streams per purpose, so e.g. changing the detector
// noise does not perturb the trajectories.
enum Stream : std::uint64_t {
    kMotion = 1,
    kDetector = 2,
    kAppearance = 3,
    kFalsePositives = 4,
    kChannel = 5,
};

struct Mover {
    int id;
    int depth;
    Point2 center;
    double w;
    double h;
    Point2 velocity;
};

Mover spawn(const SimConfig& cfg, Rng& rng, int id) {
    Mover m;
    m.id = id;
    m.depth = id;
    m.w = rng.uniform(cfg.box_width_min, cfg.box_width_max);
    m.h = m.w * rng.uniform(cfg.aspect_min, cfg.aspect_max);
    m.center = {rng.uniform(0.5 * m.w, cfg.width - 0.5 * m.w), rng.uniform(0.5 * m.h, cfg.height - 0.5 * m.h)};
    const double speed = rng.uniform(cfg.speed_min, cfg.speed_max);
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    m.velocity = {speed * std::cos(angle), speed * std::sin(angle)};
    return m;
}

void advance(const SimConfig& cfg, Rng& rng, Mover& m) {
    m.velocity.x += rng.normal(0.0, cfg.accel_std);
    m.velocity.y += rng.normal(0.0, cfg.accel_std);
    const double speed = std::hypot(m.velocity.x, m.velocity.y);
    const double clamped = std::clamp(speed, cfg.speed_min, cfg.speed_max);
    if (speed > 0.0) {
        m.velocity.x *= clamped / speed;
        m.velocity.y *= clamped / speed;
    }
    m.center.x += m.velocity.x;
    m.center.y += m.velocity.y;
    // Reflect off the arena walls.
    const double hw = 0.5 * m.w;
    const double hh = 0.5 * m.h;
    if (m.center.x - hw < 0.0) {
        m.center.x = 2.0 * hw - m.center.x;
        m.velocity.x = std::abs(m.velocity.x);
    } else if (m.center.x + hw > cfg.width) {
        m.center.x = 2.0 * (cfg.width - hw) - m.center.x;
        m.velocity.x = -std::abs(m.velocity.x);
    }
    if (m.center.y - hh < 0.0) {
        m.center.y = 2.0 * hh - m.center.y;
        m.velocity.y = std::abs(m.velocity.y);
    } else if (m.center.y + hh > cfg.height) {
        m.center.y = 2.0 * (cfg.height - hh) - m.center.y;
        m.velocity.y = -std::abs(m.velocity.y);
    }
}

BBox clean_box(BBox b) {
    if (b.x_r < b.x_l + 1.0) {
        const double c = 0.5 * (b.x_l + b.x_r);
        b.x_l = c - 0.5;
        b.x_r = c + 0.5;
    }
    if (b.y_b < b.y_t + 1.0) {
        const double c = 0.5 * (b.y_t + b.y_b);
        b.y_t = c - 0.5;
        b.y_b = c + 0.5;
    }
    return b;
}

struct Appearance {
    Eigen::MatrixXd basis;       // descriptor_dim x signature_dim, orthonormal columns
    Eigen::MatrixXd complement;  // the remaining orthonormal directions
    Eigen::VectorXd offset;
    std::map<int, Eigen::VectorXd> signatures;
    Rng rng;

    // The descriptor space (basis, offset) belongs to the appearance seed and
    // is shared by every scene using it; identities and noise come from `r`.
    Appearance(const SimConfig& cfg, Rng r) : rng(r) {
        Rng space(cfg.appearance_seed);
        Eigen::MatrixXd g(cfg.descriptor_dim, cfg.signature_dim);
        for (Eigen::Index i = 0; i < g.size(); ++i) {
            g.data()[i] = space.normal();
        }
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
        const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(cfg.descriptor_dim, cfg.descriptor_dim);
        basis = q.leftCols(cfg.signature_dim);
        complement = q.rightCols(cfg.descriptor_dim - cfg.signature_dim);
        offset.resize(cfg.descriptor_dim);
        for (Eigen::Index i = 0; i < offset.size(); ++i) {
            offset(i) = space.normal();
        }
        const double n = offset.norm();
        offset *= n > 0.0 ? cfg.descriptor_offset / n : 0.0;
    }

    Eigen::VectorXd random_signature(const SimConfig& cfg) {
        Eigen::VectorXd s(cfg.signature_dim);
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            s(i) = rng.normal(0.0, cfg.signature_scale);
        }
        return s;
    }

    const Eigen::VectorXd& signature(const SimConfig& cfg, int id) {
        auto it = signatures.find(id);
        if (it == signatures.end()) {
            it = signatures.emplace(id, random_signature(cfg)).first;
        }
        return it->second;
    }
};

}  // namespace

void SimConfig::validate() const {
    auto rate = [](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument(std::string("SimConfig: ") + name + " must lie in [0, 1]");
        }
    };
    rate(spawn_rate, "spawn_rate");
    rate(despawn_rate, "despawn_rate");
    rate(visibility_threshold, "visibility_threshold");
    rate(fp_rate, "fp_rate");
    rate(occlusion_dropout, "occlusion_dropout");
    if (width <= 0 || height <= 0) {
        throw std::invalid_argument("SimConfig: arena size must be positive");
    }
    if (objects < 0 || frames < 0) {
        throw std::invalid_argument("SimConfig: objects and frames must be non-negative");
    }
    if (!(box_width_min > 0.0 && box_width_min <= box_width_max && aspect_min > 0.0 && aspect_min <= aspect_max)) {
        throw std::invalid_argument("SimConfig: invalid box size range");
    }
    if (box_width_max > width || box_width_max * aspect_max > height) {
        throw std::invalid_argument("SimConfig: objects can be larger than the arena");
    }
    if (!(speed_min >= 0.0 && speed_min <= speed_max)) {
        throw std::invalid_argument("SimConfig: invalid speed range");
    }
    if (descriptor_dim < 1 || signature_dim < 1 || signature_dim > descriptor_dim) {
        throw std::invalid_argument("SimConfig: need 1 <= signature_dim <= descriptor_dim");
    }
    if (stride < 1) {
        throw std::invalid_argument("SimConfig: stride must be >= 1");
    }
    if (!(tau > 0.0 && tau <= 1.0)) {
        throw std::invalid_argument("SimConfig: tau must lie in (0, 1]");
    }
    if (det_noise_std < 0.0 || accel_std < 0.0 || descriptor_jitter < 0.0 || nuisance_std < 0.0 || occlusion_noise < 0.0) {
        throw std::invalid_argument("SimConfig: noise levels must be non-negative");
    }
}

double union_area(const std::vector<BBox>& boxes) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& b : boxes) {
        if (area(b) > 0.0) {
            xs.insert(xs.end(), {b.x_l, b.x_r});
            ys.insert(ys.end(), {b.y_t, b.y_b});
        }
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
            const double cx = 0.5 * (xs[i] + xs[i + 1]);
            const double cy = 0.5 * (ys[j] + ys[j + 1]);
            const bool covered = std::any_of(boxes.begin(), boxes.end(), [&](const BBox& b) {
                return cx > b.x_l && cx < b.x_r && cy > b.y_t && cy < b.y_b;
            });
            if (covered) {
                total += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
            }
        }
    }
    return total;
}

double visibility(const BBox& self, const std::vector<BBox>& occluders) {
    const double own = area(self);
    if (own <= 0.0) {
        return 0.0;
    }
    std::vector<BBox> clipped;
    for (const auto& o : occluders) {
        if (auto c = intersect(self, o)) {
            clipped.push_back(*c);
        }
    }
    return std::clamp(1.0 - union_area(clipped) / own, 0.0, 1.0);
}

std::vector<std::vector<GtObject>> generate_trajectories(const SimConfig& config) {
    config.validate();
    Rng rng = Rng(config.seed).fork(kMotion);
    std::vector<Mover> alive;
    int next_id = 1;
    for (int i = 0; i < config.objects; ++i) {
        alive.push_back(spawn(config, rng, next_id++));
    }
    std::vector<std::vector<GtObject>> frames;
    frames.reserve(static_cast<std::size_t>(config.frames));
    for (int f = 0; f < config.frames; ++f) {
        if (f > 0) {
            std::vector<Mover> kept;
            for (auto& m : alive) {
                if (!rng.bernoulli(config.despawn_rate)) {
                    advance(config, rng, m);
                    kept.push_back(m);
                }
            }
            alive = std::move(kept);
            if (rng.bernoulli(config.spawn_rate)) {
                alive.push_back(spawn(config, rng, next_id++));
            }
        }
        std::vector<GtObject> gt;
        for (const auto& m : alive) {
            gt.push_back({m.id, BBox::from_center(m.center, m.w, m.h), m.depth, 1.0});
        }
        frames.push_back(std::move(gt));
    }
    return frames;
}

SyntheticSequence observe(const SimConfig& config, const std::vector<std::vector<GtObject>>& trajectories) {
    config.validate();
    SyntheticSequence seq;
    seq.config = config;
    const Rng root(config.seed);
    Rng det_rng = root.fork(kDetector);
    Rng fp_rng = root.fork(kFalsePositives);
    Appearance app(config, root.fork(kAppearance));

    for (std::size_t f = 0; f < trajectories.size(); ++f) {
        SimFrame frame;
        frame.index = static_cast<int>(f) + 1;
        frame.gt = trajectories[f];
        auto& gt = frame.gt;

        for (auto& obj : gt) {
            std::vector<BBox> front;
            for (const auto& other : gt) {
                if (other.depth > obj.depth) {
                    front.push_back(other.box);
                }
            }
            obj.visibility = visibility(obj.box, front);
        }

        for (std::size_t i = 0; i < gt.size(); ++i) {
            for (std::size_t j = i + 1; j < gt.size(); ++j) {
                if (auto ev = occlusion_valid(gt[i].box, gt[j].box, config.tau)) {
                    frame.occlusions.push_back({ev->region, ev->center, gt[i].id, gt[j].id});
                }
            }
        }

        std::vector<Eigen::VectorXd> descriptors;
        std::vector<Eigen::VectorXd> oracle;
        auto descriptor_for = [&](const Eigen::VectorXd& signature) {
            Eigen::VectorXd d = app.offset + app.basis * signature;
            for (Eigen::Index k = 0; k < d.size(); ++k) {
                d(k) += app.rng.normal(0.0, config.descriptor_jitter);
            }
            if (config.nuisance_std > 0.0) {
                for (Eigen::Index k = 0; k < app.complement.cols(); ++k) {
                    d += app.complement.col(k) * app.rng.normal(0.0, config.nuisance_std);
                }
            }
            return d;
        };

        for (const auto& obj : gt) {
            if (obj.visibility < config.visibility_threshold) {
                continue;
            }
            BBox b = obj.box;
            if (config.det_noise_std > 0.0) {
                b.x_l += det_rng.normal(0.0, config.det_noise_std);
                b.y_t += det_rng.normal(0.0, config.det_noise_std);
                b.x_r += det_rng.normal(0.0, config.det_noise_std);
                b.y_b += det_rng.normal(0.0, config.det_noise_std);
                b = clean_box(b);
            }
            const double conf = std::clamp(0.55 + 0.45 * obj.visibility + det_rng.normal(0.0, 0.02), 0.0, 1.0);
            frame.detections.push_back({b, conf});
            frame.detection_truth.push_back(obj.id);

            // Partially hidden objects pick up the look of their main occluder.
            Eigen::VectorXd sig = app.signature(config, obj.id);
            const double hidden = 1.0 - obj.visibility;
            if (hidden > 0.0 && config.occlusion_corruption > 0.0) {
                const GtObject* occluder = nullptr;
                double best = 0.0;
                for (const auto& other : gt) {
                    if (other.depth > obj.depth) {
                        if (auto o = intersect(obj.box, other.box); o && area(*o) > best) {
                            best = area(*o);
                            occluder = &other;
                        }
                    }
                }
                if (occluder != nullptr) {
                    const double mix = config.occlusion_corruption * hidden;
                    sig = (1.0 - mix) * sig + mix * app.signature(config, occluder->id);
                }
            }
            descriptors.push_back(descriptor_for(sig));
            oracle.push_back(app.basis * app.signature(config, obj.id));
        }

        const int n_fp = fp_rng.poisson(config.fp_rate);
        for (int k = 0; k < n_fp; ++k) {
            const double w = fp_rng.uniform(config.box_width_min, config.box_width_max);
            const double h = w * fp_rng.uniform(config.aspect_min, config.aspect_max);
            const Point2 c{fp_rng.uniform(0.5 * w, config.width - 0.5 * w),
                           fp_rng.uniform(0.5 * h, config.height - 0.5 * h)};
            frame.detections.push_back({BBox::from_center(c, w, h), fp_rng.uniform(0.3, 0.9)});
            frame.detection_truth.push_back(-1);
            const Eigen::VectorXd sig = app.random_signature(config);
            descriptors.push_back(descriptor_for(sig));
            oracle.push_back(app.basis * sig);
        }

        frame.descriptors.resize(static_cast<Eigen::Index>(descriptors.size()), config.descriptor_dim);
        frame.oracle_features.resize(static_cast<Eigen::Index>(oracle.size()), config.descriptor_dim);
        for (std::size_t k = 0; k < descriptors.size(); ++k) {
            frame.descriptors.row(static_cast<Eigen::Index>(k)) = descriptors[k].transpose();
            frame.oracle_features.row(static_cast<Eigen::Index>(k)) = oracle[k].transpose();
        }
        seq.frames.push_back(std::move(frame));
    }
    return seq;
}

SyntheticSequence generate(const SimConfig& config) {
    return observe(config, generate_trajectories(config));
}

ChannelParams channel_params(const SimConfig& config) {
    ChannelParams p;
    p.mode = config.occlusion_mode;
    p.noise_std = config.occlusion_noise;
    p.dropout = config.occlusion_dropout;
    p.seed = config.seed;
    return p;
}

std::vector<std::vector<Peak>> occlusion_channel(const SyntheticSequence& sequence, const ChannelParams& params) {
    Rng rng = Rng(params.seed).fork(kChannel);
    const SimConfig& cfg = sequence.config;
    std::vector<std::vector<Peak>> out;
    out.reserve(sequence.frames.size());
    for (const auto& frame : sequence.frames) {
        std::vector<Peak> peaks;
        switch (params.mode) {
            case OcclusionChannelMode::Oracle:
                for (const auto& o : frame.occlusions) {
                    peaks.push_back({o.center, 1.0});
                }
                break;
            case OcclusionChannelMode::Noisy:
                for (const auto& o : frame.occlusions) {
                    if (rng.bernoulli(params.dropout)) {
                        continue;
                    }
                    peaks.push_back({{o.center.x + rng.normal(0.0, params.noise_std),
                                      o.center.y + rng.normal(0.0, params.noise_std)},
                                     1.0});
                }
                break;
            case OcclusionChannelMode::Rendered: {
                std::vector<BBox> boxes;
                for (const auto& g : frame.gt) {
                    boxes.push_back(g.box);
                }
                const OcclusionTargets t = render_targets(boxes, cfg.tau, cfg.width, cfg.height, cfg.stride);
                peaks = decode_peaks(t.heatmap, t.offsets, params.decode);
                break;
            }
        }
        out.push_back(std::move(peaks));
    }
    return out;
}

const char* to_string(OcclusionChannelMode mode) {
    switch (mode) {
        case OcclusionChannelMode::Oracle:
            return "oracle";
        case OcclusionChannelMode::Noisy:
            return "noisy";
        case OcclusionChannelMode::Rendered:
            return "rendered";
    }
    return "oracle";
}

OcclusionChannelMode parse_channel_mode(const std::string& text) {
    if (text == "oracle") {
        return OcclusionChannelMode::Oracle;
    }
    if (text == "noisy") {
        return OcclusionChannelMode::Noisy;
    }
    if (text == "rendered") {
        return OcclusionChannelMode::Rendered;
    }
    throw std::invalid_argument("unknown occlusion channel mode '" + text + "'");
}

}  // namespace otrack
