// SPDX-License-Identifier: Apache-2.0
#include "otrack/embedder.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <fmt/format.h>

namespace otrack {

int EmbedderModel::input_dim() const {
    return weights.empty() ? 0 : static_cast<int>(weights.front().cols());
}

int EmbedderModel::output_dim() const {
    return weights.empty() ? 0 : static_cast<int>(weights.back().rows());
}

void EmbedderModel::validate() const {
    if (weights.empty() || weights.size() > 2 || biases.size() != weights.size()) {
        throw std::invalid_argument("EmbedderModel: need one or two layers with biases");
    }
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (biases[l].size() != weights[l].rows()) {
            throw std::invalid_argument("EmbedderModel: bias size mismatch");
        }
        if (l > 0 && weights[l].cols() != weights[l - 1].rows()) {
            throw std::invalid_argument("EmbedderModel: layer dimensions do not chain");
        }
        if (!weights[l].allFinite() || !biases[l].allFinite()) {
            throw std::invalid_argument("EmbedderModel: non-finite parameters");
        }
    }
    if (output_dim() < 2) {
        throw std::invalid_argument("EmbedderModel: output dimension must be at least 2");
    }
}

EmbedderModel EmbedderModel::identity(int dim) {
    EmbedderModel m;
    m.weights.push_back(Eigen::MatrixXd::Identity(dim, dim));
    m.biases.push_back(Eigen::VectorXd::Zero(dim));
    m.validate();
    return m;
}

EmbedderModel EmbedderModel::random(int d_in, int d_out, int hidden, Activation activation, std::uint64_t seed) {
    if (d_in < 1 || hidden < 0) {
        throw std::invalid_argument("EmbedderModel::random: bad dimensions");
    }
    Rng rng(seed);
    auto layer = [&](int out, int in) {
        Eigen::MatrixXd w(out, in);
        const double std = 1.0 / std::sqrt(static_cast<double>(in));
        for (int r = 0; r < out; ++r) {
            for (int c = 0; c < in; ++c) {
                w(r, c) = rng.normal(0.0, std);
            }
        }
        return w;
    };
    EmbedderModel m;
    m.activation = activation;
    if (hidden > 0) {
        m.weights.push_back(layer(hidden, d_in));
        m.biases.push_back(Eigen::VectorXd::Zero(hidden));
        m.weights.push_back(layer(d_out, hidden));
    } else {
        m.weights.push_back(layer(d_out, d_in));
    }
    m.biases.push_back(Eigen::VectorXd::Zero(d_out));
    m.validate();
    return m;
}

bool operator==(const EmbedderModel& a, const EmbedderModel& b) {
    if (a.activation != b.activation || a.weights.size() != b.weights.size()) {
        return false;
    }
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
        if (a.weights[l].rows() != b.weights[l].rows() || a.weights[l].cols() != b.weights[l].cols() ||
            a.weights[l] != b.weights[l] || a.biases[l] != b.biases[l]) {
            return false;
        }
    }
    return true;
}

namespace {

/// Activations of every layer; [0] is the input.
std::vector<Eigen::MatrixXd> forward_all(const EmbedderModel& model, const Eigen::MatrixXd& x) {
    if (x.rows() > 0 && x.cols() != model.input_dim()) {
        throw std::invalid_argument(
            fmt::format("embed: descriptor length {} does not match model input {}", x.cols(), model.input_dim()));
    }
    std::vector<Eigen::MatrixXd> h{x};
    for (int l = 0; l < model.layers(); ++l) {
        Eigen::MatrixXd z = h.back() * model.weights[l].transpose();
        z.rowwise() += model.biases[l].transpose();
        const bool hidden = l + 1 < model.layers();
        if (hidden && model.activation == Activation::Tanh) {
            z = z.array().tanh().matrix();
        }
        h.push_back(std::move(z));
    }
    return h;
}

}  // namespace

FeatureSet embed(const EmbedderModel& model, const Eigen::MatrixXd& descriptors) {
    if (descriptors.rows() == 0) {
        return FeatureSet(0, model.output_dim());
    }
    return forward_all(model, descriptors).back();
}

EmbedderGradient embed_backward(const EmbedderModel& model, const Eigen::MatrixXd& descriptors,
                                const Eigen::MatrixXd& grad_features) {
    EmbedderGradient g;
    for (int l = 0; l < model.layers(); ++l) {
        g.weights.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
        g.biases.push_back(Eigen::VectorXd::Zero(model.biases[l].size()));
    }
    if (descriptors.rows() == 0) {
        return g;
    }
    const auto h = forward_all(model, descriptors);
    Eigen::MatrixXd grad = grad_features;
    for (int l = model.layers() - 1; l >= 0; --l) {
        g.weights[l] = grad.transpose() * h[l];
        g.biases[l] = grad.colwise().sum().transpose();
        if (l > 0) {
            grad = grad * model.weights[l];
            if (model.activation == Activation::Tanh) {
                grad = (grad.array() * (1.0 - h[l].array().square())).matrix();
            }
        }
    }
    return g;
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("TrainConfig: learning rate must be finite and >= 0");
    }
    if (steps < 0 || batch_size < 1 || gap < 1) {
        throw std::invalid_argument("TrainConfig: steps >= 0, batch_size >= 1 and gap >= 1 required");
    }
    if (!(negative_ratio >= 0.0) || !(margin >= 0.0) || !(image_jitter >= 0.0)) {
        throw std::invalid_argument("TrainConfig: ratio, margin and jitter must be >= 0");
    }
}

ReidScene scene_from_sequence(const SyntheticSequence& sequence) {
    ReidScene s;
    for (const auto& f : sequence.frames) {
        s.frames.push_back(f.descriptors);
        s.labels.push_back(f.detection_truth);
    }
    return s;
}

ReidScene slice_scene(const ReidScene& scene, int first, int last) {
    first = std::clamp(first, 0, static_cast<int>(scene.frames.size()));
    last = std::clamp(last, first, static_cast<int>(scene.frames.size()));
    ReidScene s;
    s.frames.assign(scene.frames.begin() + first, scene.frames.begin() + last);
    s.labels.assign(scene.labels.begin() + first, scene.labels.begin() + last);
    return s;
}

namespace {

std::vector<std::pair<int, int>> positive_index_pairs(const ReidScene& scene, int gap) {
    if (scene.frames.size() < 2) {
        throw std::invalid_argument("make_pairs: need a scene with at least two frames");
    }
    if (gap < 1) {
        throw std::invalid_argument("make_pairs: gap must be >= 1");
    }
    const int n = static_cast<int>(scene.frames.size());
    std::vector<std::pair<int, int>> out;
    for (int t = 0; t < n; ++t) {
        if (scene.frames[t].rows() == 0) {
            continue;
        }
        for (int k = 1; k <= gap && t + k < n; ++k) {
            if (scene.frames[t + k].rows() > 0) {
                out.emplace_back(t, t + k);
            }
        }
    }
    return out;
}

Eigen::MatrixXd jittered(const Eigen::MatrixXd& frame, double jitter, Rng& rng) {
    Eigen::MatrixXd out = frame;
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        for (Eigen::Index c = 0; c < out.cols(); ++c) {
            out(r, c) += rng.normal(0.0, jitter);
        }
    }
    return out;
}

std::vector<int> non_empty_frames(const ReidScene& scene) {
    std::vector<int> out;
    for (std::size_t t = 0; t < scene.frames.size(); ++t) {
        if (scene.frames[t].rows() > 0) {
            out.push_back(static_cast<int>(t));
        }
    }
    return out;
}

template <typename T>
const T& pick(const std::vector<T>& items, Rng& rng) {
    return items[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(items.size()) - 1))];
}

}  // namespace

std::vector<PairBatch> make_pairs(const ReidScene& scene, int gap) {
    std::vector<PairBatch> out;
    for (const auto& [a, b] : positive_index_pairs(scene, gap)) {
        out.push_back(PairBatch{scene.frames[a], scene.frames[b], PairKind::Positive});
    }
    return out;
}

PairBatch make_image_pair(const Eigen::MatrixXd& frame, double jitter, Rng& rng) {
    PairBatch p;
    p.prev = jittered(frame, jitter, rng);
    p.cur = jittered(frame, jitter, rng);
    p.kind = PairKind::Positive;
    return p;
}

PairBatch make_negative_pair(const ReidScene& a, const ReidScene& b, Rng& rng) {
    const auto fa = non_empty_frames(a);
    const auto fb = non_empty_frames(b);
    if (fa.empty() || fb.empty()) {
        throw std::invalid_argument("make_negative_pair: scene without detections");
    }
    PairBatch p;
    p.prev = a.frames[pick(fa, rng)];
    p.cur = b.frames[pick(fb, rng)];
    p.kind = PairKind::Negative;
    return p;
}

namespace {

struct Adam {
    EmbedderGradient m;
    EmbedderGradient v;
    int t = 0;
};

void zero_like(const EmbedderModel& model, EmbedderGradient& g) {
    g.weights.clear();
    g.biases.clear();
    for (int l = 0; l < model.layers(); ++l) {
        g.weights.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
        g.biases.push_back(Eigen::VectorXd::Zero(model.biases[l].size()));
    }
}

void accumulate(const EmbedderModel& model, const PairBatch& descriptors, const Eigen::MatrixXd& grad,
                EmbedderGradient& total) {
    const auto gp = embed_backward(model, descriptors.prev, grad.topRows(descriptors.n_prev()));
    const auto gc = embed_backward(model, descriptors.cur, grad.bottomRows(descriptors.n_cur()));
    for (int l = 0; l < model.layers(); ++l) {
        total.weights[l] += gp.weights[l] + gc.weights[l];
        total.biases[l] += gp.biases[l] + gc.biases[l];
    }
}

template <typename M>
void adam_update(M& param, const M& grad, M& m, M& v, const TrainConfig& c, double bc1, double bc2) {
    m = c.adam_beta1 * m + (1.0 - c.adam_beta1) * grad;
    v = c.adam_beta2 * v + (1.0 - c.adam_beta2) * grad.cwiseProduct(grad);
    const auto step = ((m.array() / bc1) / ((v.array() / bc2).sqrt() + c.adam_eps)).matrix();
    param -= c.learning_rate * step;
}

}  // namespace

TrainResult train(EmbedderModel model, std::span<const ReidScene> scenes, const TrainConfig& config) {
    config.validate();
    model.validate();
    if (scenes.empty()) {
        throw std::invalid_argument("train: empty dataset");
    }
    // Candidate positives: (scene, frame a, frame b); image mode uses a == b.
    std::vector<std::array<int, 3>> pool;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
        if (config.mode == PairMode::Video) {
            if (scenes[s].frames.size() < 2) {
                continue;
            }
            for (const auto& [a, b] : positive_index_pairs(scenes[s], config.gap)) {
                pool.push_back({static_cast<int>(s), a, b});
            }
        } else {
            for (const int t : non_empty_frames(scenes[s])) {
                pool.push_back({static_cast<int>(s), t, t});
            }
        }
    }
    if (pool.empty()) {
        throw std::invalid_argument("train: dataset has no usable positive pairs");
    }
    std::vector<int> negative_scenes;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
        if (!non_empty_frames(scenes[s]).empty()) {
            negative_scenes.push_back(static_cast<int>(s));
        }
    }
    const int n_neg = negative_scenes.size() >= 2
                          ? static_cast<int>(std::lround(config.negative_ratio * config.batch_size))
                          : 0;

    ReidLossConfig loss_config;
    loss_config.margin = config.margin;
    loss_config.placeholder = config.placeholder;
    Rng rng(config.seed);
    Adam adam;
    zero_like(model, adam.m);
    zero_like(model, adam.v);

    TrainResult result;
    result.loss_history.reserve(static_cast<std::size_t>(config.steps));
    for (int step = 0; step < config.steps; ++step) {
        std::vector<PairBatch> pos_desc;
        std::vector<PairBatch> neg_desc;
        for (int b = 0; b < config.batch_size; ++b) {
            const auto& [s, a, c] = pick(pool, rng);
            const ReidScene& scene = scenes[s];
            if (config.mode == PairMode::Video) {
                pos_desc.push_back(PairBatch{scene.frames[a], scene.frames[c], PairKind::Positive});
            } else {
                pos_desc.push_back(make_image_pair(scene.frames[a], config.image_jitter, rng));
            }
        }
        for (int b = 0; b < n_neg; ++b) {
            const int sa = pick(negative_scenes, rng);
            int sb = sa;
            while (sb == sa) {
                sb = pick(negative_scenes, rng);
            }
            neg_desc.push_back(make_negative_pair(scenes[sa], scenes[sb], rng));
        }

        auto features = [&](const std::vector<PairBatch>& desc) {
            std::vector<PairBatch> out;
            for (const auto& d : desc) {
                out.push_back(PairBatch{embed(model, d.prev), embed(model, d.cur), d.kind});
            }
            return out;
        };
        const auto pos = features(pos_desc);
        const auto neg = features(neg_desc);
        BatchLossReport report;
        try {
            report = loss_batch(pos, neg, loss_config);
        } catch (const std::invalid_argument& e) {
            throw TrainingError(fmt::format("train: step {}: {}", step, e.what()));
        }
        if (!std::isfinite(report.total)) {
            throw TrainingError(fmt::format("train: non-finite loss at step {}", step));
        }
        result.loss_history.push_back(report.total);

        EmbedderGradient grad;
        zero_like(model, grad);
        for (std::size_t i = 0; i < pos_desc.size(); ++i) {
            accumulate(model, pos_desc[i], report.positive_gradients[i], grad);
        }
        for (std::size_t i = 0; i < neg_desc.size(); ++i) {
            accumulate(model, neg_desc[i], report.negative_gradients[i], grad);
        }
        if (config.optimizer == OptimizerKind::Sgd) {
            for (int l = 0; l < model.layers(); ++l) {
                model.weights[l] -= config.learning_rate * grad.weights[l];
                model.biases[l] -= config.learning_rate * grad.biases[l];
            }
        } else {
            ++adam.t;
            const double bc1 = 1.0 - std::pow(config.adam_beta1, adam.t);
            const double bc2 = 1.0 - std::pow(config.adam_beta2, adam.t);
            for (int l = 0; l < model.layers(); ++l) {
                adam_update(model.weights[l], grad.weights[l], adam.m.weights[l], adam.v.weights[l], config, bc1, bc2);
                adam_update(model.biases[l], grad.biases[l], adam.m.biases[l], adam.v.biases[l], config, bc1, bc2);
            }
        }
        if (!model.weights.back().allFinite()) {
            throw TrainingError(fmt::format("train: parameters diverged at step {}", step));
        }
    }
    result.model = std::move(model);
    return result;
}

RetrievalScore eval_retrieval(const FeatureSet& features, std::span<const int> labels) {
    if (static_cast<std::size_t>(features.rows()) != labels.size()) {
        throw std::invalid_argument("eval_retrieval: one label per feature row required");
    }
    std::map<int, std::vector<int>> by_id;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= 0) {
            by_id[labels[i]].push_back(static_cast<int>(i));
        }
    }
    std::vector<int> queries;
    std::vector<int> gallery;
    for (const auto& [id, rows] : by_id) {
        const std::size_t half = rows.size() / 2;
        queries.insert(queries.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(half));
        gallery.insert(gallery.end(), rows.begin() + static_cast<std::ptrdiff_t>(half), rows.end());
    }
    std::sort(gallery.begin(), gallery.end());
    RetrievalScore score;
    if (queries.empty()) {
        return score;
    }
    Eigen::MatrixXd unit = features;
    for (Eigen::Index r = 0; r < unit.rows(); ++r) {
        const double n = unit.row(r).norm();
        unit.row(r) = n > 0.0 ? (unit.row(r) / n).eval() : Eigen::RowVectorXd::Zero(unit.cols()).eval();
    }
    std::vector<std::pair<double, int>> ranked(gallery.size());
    double r1 = 0.0;
    double ap_sum = 0.0;
    for (const int q : queries) {
        for (std::size_t g = 0; g < gallery.size(); ++g) {
            ranked[g] = {unit.row(q).dot(unit.row(gallery[g])), gallery[g]};
        }
        std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        if (labels[ranked.front().second] == labels[q]) {
            r1 += 1.0;
        }
        int hits = 0;
        double ap = 0.0;
        for (std::size_t k = 0; k < ranked.size(); ++k) {
            if (labels[ranked[k].second] == labels[q]) {
                ++hits;
                ap += static_cast<double>(hits) / static_cast<double>(k + 1);
            }
        }
        ap_sum += hits > 0 ? ap / hits : 0.0;
    }
    score.queries = static_cast<int>(queries.size());
    score.rank1 = r1 / score.queries;
    score.mean_ap = ap_sum / score.queries;
    return score;
}

RetrievalScore eval_retrieval(const EmbedderModel& model, const ReidScene& scene) {
    std::vector<int> labels;
    Eigen::Index rows = 0;
    for (const auto& f : scene.frames) {
        rows += f.rows();
    }
    FeatureSet all(rows, model.output_dim());
    Eigen::Index r = 0;
    for (std::size_t t = 0; t < scene.frames.size(); ++t) {
        if (scene.frames[t].rows() == 0) {
            continue;
        }
        all.middleRows(r, scene.frames[t].rows()) = embed(model, scene.frames[t]);
        r += scene.frames[t].rows();
        labels.insert(labels.end(), scene.labels[t].begin(), scene.labels[t].end());
    }
    return eval_retrieval(all, labels);
}

MatchingScore matching_accuracy(const EmbedderModel& model, const ReidScene& scene, int gap, MatchRule rule) {
    if (gap < 1) {
        throw std::invalid_argument("matching_accuracy: gap must be >= 1");
    }
    std::vector<FeatureSet> feats;
    for (const auto& f : scene.frames) {
        feats.push_back(embed(model, f));
    }
    int correct = 0;
    int decisions = 0;
    for (std::size_t t = 0; t + gap < scene.frames.size(); ++t) {
        const std::size_t u = t + gap;
        const auto& lp = scene.labels[t];
        const auto& lc = scene.labels[u];
        if (lc.empty() || (lp.empty() && rule == MatchRule::Argmax)) {
            continue;
        }
        const PairBatch pair{feats[t], feats[u], PairKind::Positive};
        if (pair.size() < 2) {
            continue;
        }
        const SimilarityMatrix s = similarity(pair, PlaceholderMode::DynamicMean);
        const int np = pair.n_prev();
        for (int i = 0; i < pair.n_cur(); ++i) {
            if (lc[i] < 0) {
                continue;
            }
            const bool present = std::find(lp.begin(), lp.end(), lc[i]) != lp.end();
            if (rule == MatchRule::Argmax && !present) {
                continue;
            }
            int best = -1;
            double best_sim = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < np; ++j) {
                const double v = s.square(np + i, j);
                if (v > best_sim) {
                    best_sim = v;
                    best = j;
                }
            }
            if (rule == MatchRule::Threshold && best >= 0 && !(best_sim > *s.placeholder)) {
                best = -1;
            }
            const bool ok = best >= 0 ? lp[best] == lc[i] : !present;
            correct += ok ? 1 : 0;
            ++decisions;
        }
    }
    MatchingScore out;
    out.decisions = decisions;
    out.accuracy = decisions > 0 ? static_cast<double>(correct) / decisions : 0.0;
    return out;
}

namespace {

constexpr char kMagic[4] = {'O', 'T', 'E', 'M'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
    }
}

void put_f64(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffU));
    }
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
    double f64() { return std::bit_cast<double>(take(8)); }
    bool done() const { return pos_ == bytes_.size(); }

private:
    std::uint64_t take(int n) {
        if (pos_ + static_cast<std::size_t>(n) > bytes_.size()) {
            throw std::runtime_error("checkpoint: truncated file");
        }
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
        }
        return v;
    }

    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const EmbedderModel& model) {
    model.validate();
    std::string out(kMagic, 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, model.activation == Activation::Tanh ? 1U : 0U);
    put_u32(out, static_cast<std::uint32_t>(model.layers()));
    for (int l = 0; l < model.layers(); ++l) {
        const auto& w = model.weights[l];
        put_u32(out, static_cast<std::uint32_t>(w.rows()));
        put_u32(out, static_cast<std::uint32_t>(w.cols()));
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                put_f64(out, w(r, c));
            }
        }
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            put_f64(out, model.biases[l](r));
        }
    }
    return out;
}

EmbedderModel decode_checkpoint(const std::string& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw std::runtime_error("checkpoint: bad magic");
    }
    const std::string body = bytes.substr(4);
    Reader in(body);
    const std::uint32_t version = in.u32();
    if (version != kCheckpointVersion) {
        throw std::runtime_error(fmt::format("checkpoint: unsupported version {}", version));
    }
    const std::uint32_t act = in.u32();
    if (act > 1) {
        throw std::runtime_error("checkpoint: unknown activation");
    }
    const std::uint32_t layers = in.u32();
    if (layers < 1 || layers > 2) {
        throw std::runtime_error("checkpoint: layer count must be 1 or 2");
    }
    EmbedderModel m;
    m.activation = act == 1 ? Activation::Tanh : Activation::None;
    for (std::uint32_t l = 0; l < layers; ++l) {
        const std::uint32_t rows = in.u32();
        const std::uint32_t cols = in.u32();
        if (rows == 0 || cols == 0 || static_cast<std::uint64_t>(rows) * cols * 8 > bytes.size()) {
            throw std::runtime_error("checkpoint: bad layer shape");
        }
        Eigen::MatrixXd w(rows, cols);
        for (std::uint32_t r = 0; r < rows; ++r) {
            for (std::uint32_t c = 0; c < cols; ++c) {
                w(r, c) = in.f64();
            }
        }
        Eigen::VectorXd b(rows);
        for (std::uint32_t r = 0; r < rows; ++r) {
            b(r) = in.f64();
        }
        m.weights.push_back(std::move(w));
        m.biases.push_back(std::move(b));
    }
    if (!in.done()) {
        throw std::runtime_error("checkpoint: trailing bytes");
    }
    try {
        m.validate();
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("checkpoint: ") + e.what());
    }
    return m;
}

void save_checkpoint(const EmbedderModel& model, const std::filesystem::path& path) {
    const std::string bytes = encode_checkpoint(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write checkpoint " + path.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error("failed writing checkpoint " + path.string());
    }
}

EmbedderModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read checkpoint " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return decode_checkpoint(ss.str());
}

std::string loss_csv(std::span<const double> history) {
    std::string out = "step,loss\n";
    for (std::size_t i = 0; i < history.size(); ++i) {
        out += fmt::format("{},{:.17g}\n", i + 1, history[i]);
    }
    return out;
}

const char* to_string(OptimizerKind kind) {
    return kind == OptimizerKind::Sgd ? "sgd" : "adam";
}

const char* to_string(PairMode mode) {
    return mode == PairMode::Video ? "video" : "image";
}

const char* to_string(PlaceholderMode mode) {
    switch (mode) {
        case PlaceholderMode::None:
            return "none";
        case PlaceholderMode::Zero:
            return "zero";
        case PlaceholderMode::DynamicMean:
            return "dynamic";
    }
    return "dynamic";
}

const char* to_string(Activation activation) {
    return activation == Activation::Tanh ? "tanh" : "none";
}

OptimizerKind parse_optimizer(const std::string& text) {
    if (text == "sgd") {
        return OptimizerKind::Sgd;
    }
    if (text == "adam") {
        return OptimizerKind::Adam;
    }
    throw std::invalid_argument("unknown optimizer '" + text + "' (expected sgd or adam)");
}

PairMode parse_pair_mode(const std::string& text) {
    if (text == "video") {
        return PairMode::Video;
    }
    if (text == "image") {
        return PairMode::Image;
    }
    throw std::invalid_argument("unknown pair mode '" + text + "' (expected video or image)");
}

PlaceholderMode parse_placeholder(const std::string& text) {
    if (text == "none") {
        return PlaceholderMode::None;
    }
    if (text == "zero") {
        return PlaceholderMode::Zero;
    }
    if (text == "dynamic") {
        return PlaceholderMode::DynamicMean;
    }
    throw std::invalid_argument("unknown placeholder '" + text + "' (expected none, zero or dynamic)");
}

Activation parse_activation(const std::string& text) {
    if (text == "none") {
        return Activation::None;
    }
    if (text == "tanh") {
        return Activation::Tanh;
    }
    throw std::invalid_argument("unknown activation '" + text + "' (expected none or tanh)");
}

}  // namespace otrack
