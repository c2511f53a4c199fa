// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "otrack/config.hpp"
#include "otrack/mot_io.hpp"
#include "otrack/occlusion_heatmap.hpp"
#include "otrack/simulator.hpp"

namespace otrack::app {

namespace fs = std::filesystem;

/// File names inside a sequence directory.
struct SequenceFiles {
    static constexpr const char* kConfig = "sequence.cfg";
    static constexpr const char* kGt = "gt.txt";
    static constexpr const char* kDet = "det.txt";
    static constexpr const char* kDescriptors = "descriptors.bin";
    static constexpr const char* kOracle = "oracle_features.bin";
    static constexpr const char* kTruth = "det_truth.txt";
    static constexpr const char* kOcclusion = "occlusion.txt";
};

/// Per-frame row blocks: "OTDS", u32 version, u32 frames, u32 dim, then per
/// frame a u32 row count followed by row-major f64 values. Little-endian.
std::string encode_frame_matrices(const std::vector<Eigen::MatrixXd>& frames, int dim);
std::vector<Eigen::MatrixXd> decode_frame_matrices(const std::string& bytes);

/// Occlusion channel as text, one `frame,cx,cy,score` line per centre.
std::string encode_occlusion_channel(const std::vector<std::vector<Peak>>& channel);
std::vector<std::vector<Peak>> decode_occlusion_channel(const std::string& text, int frames);

/// `frame,index,id` per detection, id -1 for false positives.
std::string encode_truth(const SyntheticSequence& sequence);
std::vector<std::vector<int>> decode_truth(const std::string& text, int frames);

std::vector<MotRecord> gt_records(const SyntheticSequence& sequence);
std::vector<MotRecord> det_records(const SyntheticSequence& sequence);

/// Only the `sim.` keys of a config.
std::string sim_config_text(const RunConfig& config);

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, const std::string& content);

/// Everything the tracker and the trainer read back from a sequence dir.
struct LoadedSequence {
    SimConfig sim;
    int frames = 0;
    std::vector<std::vector<MotRecord>> gt;          ///< per frame
    std::vector<std::vector<MotRecord>> detections;  ///< per frame, file order
    std::vector<Eigen::MatrixXd> descriptors;        ///< empty if absent
    std::vector<Eigen::MatrixXd> oracle;             ///< empty if absent
    std::vector<std::vector<int>> truth;             ///< empty if absent
    std::vector<std::vector<Peak>> occlusion;        ///< empty if absent
    bool has_occlusion = false;
};

LoadedSequence load_sequence(const fs::path& dir);

}  // namespace otrack::app
