// SPDX-License-Identifier: Apache-2.0
#include "otrack/app/sequence_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace otrack::app {

namespace {

constexpr char kMagic[4] = {'O', 'T', 'D', 'S'};
constexpr std::uint32_t kVersion = 1;

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

std::uint64_t take(const std::string& bytes, std::size_t& pos, int n) {
    if (pos + static_cast<std::size_t>(n) > bytes.size()) {
        throw std::runtime_error("frame matrices: truncated file");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos++])) << (8 * i);
    }
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        out.push_back(field);
    }
    return out;
}

template <typename T>
T number(const std::string& text, const char* what, int line) {
    T v{};
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw std::runtime_error(fmt::format("{}: line {}: bad number '{}'", what, line, text));
    }
    return v;
}

template <typename F>
void for_each_line(const std::string& text, F&& f) {
    std::istringstream in(text);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!line.empty()) {
            f(split_csv(line), n);
        }
    }
}

}  // namespace

std::string encode_frame_matrices(const std::vector<Eigen::MatrixXd>& frames, int dim) {
    std::string out(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(frames.size()));
    put_u32(out, static_cast<std::uint32_t>(dim));
    for (const auto& f : frames) {
        if (f.rows() > 0 && f.cols() != dim) {
            throw std::invalid_argument("encode_frame_matrices: inconsistent dimension");
        }
        put_u32(out, static_cast<std::uint32_t>(f.rows()));
        for (Eigen::Index r = 0; r < f.rows(); ++r) {
            for (Eigen::Index c = 0; c < f.cols(); ++c) {
                put_f64(out, f(r, c));
            }
        }
    }
    return out;
}

std::vector<Eigen::MatrixXd> decode_frame_matrices(const std::string& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw std::runtime_error("frame matrices: bad magic");
    }
    std::size_t pos = 4;
    const auto version = take(bytes, pos, 4);
    if (version != kVersion) {
        throw std::runtime_error(fmt::format("frame matrices: unsupported version {}", version));
    }
    const auto frames = take(bytes, pos, 4);
    const auto dim = static_cast<Eigen::Index>(take(bytes, pos, 4));
    std::vector<Eigen::MatrixXd> out;
    for (std::uint64_t t = 0; t < frames; ++t) {
        const auto rows = static_cast<Eigen::Index>(take(bytes, pos, 4));
        if (static_cast<std::size_t>(rows * dim * 8) > bytes.size() - pos) {
            throw std::runtime_error("frame matrices: truncated file");
        }
        Eigen::MatrixXd m(rows, dim);
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < dim; ++c) {
                m(r, c) = std::bit_cast<double>(take(bytes, pos, 8));
            }
        }
        out.push_back(std::move(m));
    }
    if (pos != bytes.size()) {
        throw std::runtime_error("frame matrices: trailing bytes");
    }
    return out;
}

std::string encode_occlusion_channel(const std::vector<std::vector<Peak>>& channel) {
    std::string out;
    for (std::size_t t = 0; t < channel.size(); ++t) {
        for (const auto& p : channel[t]) {
            out += fmt::format("{},{},{},{}\n", t + 1, p.center.x, p.center.y, p.score);
        }
    }
    return out;
}

std::vector<std::vector<Peak>> decode_occlusion_channel(const std::string& text, int frames) {
    std::vector<std::vector<Peak>> out(static_cast<std::size_t>(frames));
    for_each_line(text, [&](const std::vector<std::string>& f, int line) {
        if (f.size() != 4) {
            throw std::runtime_error(fmt::format("occlusion channel: line {}: expected 4 fields", line));
        }
        const int frame = number<int>(f[0], "occlusion channel", line);
        if (frame < 1 || frame > frames) {
            throw std::runtime_error(fmt::format("occlusion channel: line {}: frame out of range", line));
        }
        Peak p;
        p.center = {number<double>(f[1], "occlusion channel", line), number<double>(f[2], "occlusion channel", line)};
        p.score = number<double>(f[3], "occlusion channel", line);
        out[static_cast<std::size_t>(frame - 1)].push_back(p);
    });
    return out;
}

std::string encode_truth(const SyntheticSequence& sequence) {
    std::string out;
    for (const auto& f : sequence.frames) {
        for (std::size_t i = 0; i < f.detection_truth.size(); ++i) {
            out += fmt::format("{},{},{}\n", f.index, i, f.detection_truth[i]);
        }
    }
    return out;
}

std::vector<std::vector<int>> decode_truth(const std::string& text, int frames) {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(frames));
    for_each_line(text, [&](const std::vector<std::string>& f, int line) {
        if (f.size() != 3) {
            throw std::runtime_error(fmt::format("detection truth: line {}: expected 3 fields", line));
        }
        const int frame = number<int>(f[0], "detection truth", line);
        const auto index = number<std::size_t>(f[1], "detection truth", line);
        if (frame < 1 || frame > frames) {
            throw std::runtime_error(fmt::format("detection truth: line {}: frame out of range", line));
        }
        auto& v = out[static_cast<std::size_t>(frame - 1)];
        if (index != v.size()) {
            throw std::runtime_error(fmt::format("detection truth: line {}: indices out of order", line));
        }
        v.push_back(number<int>(f[2], "detection truth", line));
    });
    return out;
}

std::vector<MotRecord> gt_records(const SyntheticSequence& sequence) {
    std::vector<MotRecord> out;
    for (const auto& f : sequence.frames) {
        for (const auto& g : f.gt) {
            out.push_back(MotRecord{f.index, g.id, g.box, 1.0, -1.0, -1.0, -1.0});
        }
    }
    return out;
}

std::vector<MotRecord> det_records(const SyntheticSequence& sequence) {
    std::vector<MotRecord> out;
    for (const auto& f : sequence.frames) {
        for (const auto& d : f.detections) {
            out.push_back(MotRecord{f.index, -1, d.box, d.confidence, -1.0, -1.0, -1.0});
        }
    }
    return out;
}

std::string sim_config_text(const RunConfig& config) {
    std::istringstream in(dump_config(config));
    std::string line;
    std::string out;
    while (std::getline(in, line)) {
        if (line.rfind("sim.", 0) == 0) {
            out += line + "\n";
        }
    }
    return out;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

LoadedSequence load_sequence(const fs::path& dir) {
    LoadedSequence s;
    const fs::path cfg = dir / SequenceFiles::kConfig;
    if (fs::exists(cfg)) {
        s.sim = load_config(cfg).sim;
    }
    const auto gt = fs::exists(dir / SequenceFiles::kGt) ? read_mot_file((dir / SequenceFiles::kGt).string())
                                                         : std::vector<MotRecord>{};
    const auto det = read_mot_file((dir / SequenceFiles::kDet).string());
    int frames = fs::exists(cfg) ? s.sim.frames : 0;
    for (const auto& r : gt) {
        frames = std::max(frames, r.frame);
    }
    for (const auto& r : det) {
        frames = std::max(frames, r.frame);
    }
    s.frames = frames;
    s.gt.resize(static_cast<std::size_t>(frames));
    s.detections.resize(static_cast<std::size_t>(frames));
    for (const auto& r : gt) {
        s.gt[static_cast<std::size_t>(r.frame - 1)].push_back(r);
    }
    for (const auto& r : det) {
        s.detections[static_cast<std::size_t>(r.frame - 1)].push_back(r);
    }

    auto load_matrices = [&](const char* name) {
        std::vector<Eigen::MatrixXd> m;
        if (fs::exists(dir / name)) {
            m = decode_frame_matrices(read_file(dir / name));
            if (static_cast<int>(m.size()) != frames) {
                throw std::runtime_error(fmt::format("{}: frame count {} differs from {}", name, m.size(), frames));
            }
            for (int t = 0; t < frames; ++t) {
                if (m[t].rows() != static_cast<Eigen::Index>(s.detections[t].size())) {
                    throw std::runtime_error(fmt::format("{}: frame {} row count differs from det.txt", name, t + 1));
                }
            }
        }
        return m;
    };
    s.descriptors = load_matrices(SequenceFiles::kDescriptors);
    s.oracle = load_matrices(SequenceFiles::kOracle);
    if (fs::exists(dir / SequenceFiles::kTruth)) {
        s.truth = decode_truth(read_file(dir / SequenceFiles::kTruth), frames);
    }
    if (fs::exists(dir / SequenceFiles::kOcclusion)) {
        s.occlusion = decode_occlusion_channel(read_file(dir / SequenceFiles::kOcclusion), frames);
        s.has_occlusion = true;
    }
    return s;
}

}  // namespace otrack::app
