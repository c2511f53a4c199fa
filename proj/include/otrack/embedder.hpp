// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "otrack/reid_loss.hpp"
#include "otrack/rng.hpp"
#include "otrack/simulator.hpp"

namespace otrack {

enum class Activation { None, Tanh };

/// One or two affine layers. With two layers the activation is applied to
/// the hidden units only.
struct EmbedderModel {
    std::vector<Eigen::MatrixXd> weights;  ///< layer l: out x in
    std::vector<Eigen::VectorXd> biases;
    Activation activation = Activation::None;

    int input_dim() const;
    int output_dim() const;
    int layers() const { return static_cast<int>(weights.size()); }
    void validate() const;

    static EmbedderModel identity(int dim);
    /// hidden == 0 gives a single layer. Weights ~ N(0, 1/fan_in), zero biases.
    static EmbedderModel random(int d_in, int d_out, int hidden, Activation activation, std::uint64_t seed);
};

bool operator==(const EmbedderModel& a, const EmbedderModel& b);

/// One feature row per descriptor row.
FeatureSet embed(const EmbedderModel& model, const Eigen::MatrixXd& descriptors);

/// Parameter gradients, laid out like the model.
struct EmbedderGradient {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
};

/// d loss / d parameters given d loss / d features for `descriptors`.
EmbedderGradient embed_backward(const EmbedderModel& model, const Eigen::MatrixXd& descriptors,
                                const Eigen::MatrixXd& grad_features);

enum class OptimizerKind { Sgd, Adam };
enum class PairMode { Video, Image };

struct TrainConfig {
    double learning_rate = 0.5;
    int steps = 2000;
    double margin = 0.5;
    double negative_ratio = 0.25;  ///< negative pairs per positive pair
    std::uint64_t seed = 0;
    OptimizerKind optimizer = OptimizerKind::Sgd;
    PlaceholderMode placeholder = PlaceholderMode::DynamicMean;
    int batch_size = 8;  ///< positive pairs per step
    int gap = 20;        ///< max frame distance of a positive pair
    PairMode mode = PairMode::Video;
    double image_jitter = 0.5;  ///< image mode: descriptor noise of each augmented copy
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
    /// Ratios >= 1 are accepted but known to train poorly.
    bool ratio_warning() const { return negative_ratio >= 1.0; }
};

/// Descriptor frames of one scene, empty frames included.
struct ReidScene {
    std::vector<Eigen::MatrixXd> frames;
    std::vector<std::vector<int>> labels;  ///< identity per row, -1 if unknown
};

ReidScene scene_from_sequence(const SyntheticSequence& sequence);
/// Restricts a scene to frames [first, last) (0-based).
ReidScene slice_scene(const ReidScene& scene, int first, int last);

/// Positive pairs: frames at most `gap` apart within the scene (both
/// non-empty). Throws if the scene has fewer than two frames.
std::vector<PairBatch> make_pairs(const ReidScene& scene, int gap);
/// Positive pair built from two jittered copies of one frame.
PairBatch make_image_pair(const Eigen::MatrixXd& frame, double jitter, Rng& rng);
/// Negative pair from frames of two different scenes.
PairBatch make_negative_pair(const ReidScene& a, const ReidScene& b, Rng& rng);

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainResult {
    EmbedderModel model;
    std::vector<double> loss_history;
};

/// Deterministic given (model, scenes, config). Negative pairs need two or
/// more scenes; with a single scene training uses positives only. Throws
/// TrainingError on a non-finite loss.
TrainResult train(EmbedderModel model, std::span<const ReidScene> scenes, const TrainConfig& config);

struct RetrievalScore {
    double rank1 = 0.0;
    double mean_ap = 0.0;
    int queries = 0;
};

/// Observations in temporal order with identity labels. For each identity the
/// first half of its observations are queries and the rest the gallery; an
/// identity with a single observation only enters the gallery.
RetrievalScore eval_retrieval(const FeatureSet& features, std::span<const int> labels);
RetrievalScore eval_retrieval(const EmbedderModel& model, const ReidScene& scene);

enum class MatchRule {
    Argmax,     ///< every current object picks its most similar previous object
    Threshold,  ///< no match unless the best cosine exceeds the mean off-diagonal similarity
};

struct MatchingScore {
    double accuracy = 0.0;
    int decisions = 0;
};

/// Cross-frame matching between frames t and t + gap. Only labelled rows are
/// scored. Under Argmax only rows whose identity exists in the earlier frame
/// count; under Threshold every labelled row counts and a row without a
/// counterpart is correct when it is left unmatched.
MatchingScore matching_accuracy(const EmbedderModel& model, const ReidScene& scene, int gap,
                                MatchRule rule = MatchRule::Argmax);

void save_checkpoint(const EmbedderModel& model, const std::filesystem::path& path);
EmbedderModel load_checkpoint(const std::filesystem::path& path);
std::string encode_checkpoint(const EmbedderModel& model);
EmbedderModel decode_checkpoint(const std::string& bytes);

std::string loss_csv(std::span<const double> history);

const char* to_string(OptimizerKind kind);
const char* to_string(PairMode mode);
const char* to_string(PlaceholderMode mode);
OptimizerKind parse_optimizer(const std::string& text);
PairMode parse_pair_mode(const std::string& text);
PlaceholderMode parse_placeholder(const std::string& text);
Activation parse_activation(const std::string& text);
const char* to_string(Activation activation);

}  // namespace otrack
