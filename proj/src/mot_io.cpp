// SPDX-License-Identifier: Apache-2.0
#include "otrack/mot_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace otrack {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_real(std::string_view token, std::size_t line, int field) {
    token = trim(token);
    double value = 0.0;
    const auto* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (token.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        throw MotParseError(line, fmt::format("field {} is not a number: '{}'", field, token));
    }
    return value;
}

int parse_integral(std::string_view token, std::size_t line, int field) {
    const double v = parse_real(token, line, field);
    if (v != std::floor(v) || std::abs(v) > 2.0e9) {
        throw MotParseError(line, fmt::format("field {} is not an integer: '{}'", field, trim(token)));
    }
    return static_cast<int>(v);
}

std::string format_real(double v) {
    if (v == std::floor(v) && std::abs(v) < 1e15 && v < 0.0) {
        return fmt::format("{}", static_cast<long long>(v));
    }
    std::string s = fmt::format("{:.2f}", v);
    return s == "-0.00" ? "0.00" : s;
}

}  // namespace

MotParseError::MotParseError(std::size_t line, const std::string& what)
    : std::runtime_error(fmt::format("line {}: {}", line, what)), line_(line) {}

std::vector<MotRecord> parse_mot(std::string_view content) {
    std::vector<MotRecord> records;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
        auto nl = content.find('\n', pos);
        if (nl == std::string_view::npos) {
            nl = content.size();
        }
        const std::string_view line = trim(content.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
            if (comma == std::string_view::npos) {
                break;
            }
            start = comma + 1;
        }
        if (fields.size() < 7) {
            throw MotParseError(line_no, fmt::format("expected at least 7 fields, got {}", fields.size()));
        }
        if (fields.size() > 10) {
            throw MotParseError(line_no, fmt::format("expected at most 10 fields, got {}", fields.size()));
        }
        MotRecord r;
        r.frame = parse_integral(fields[0], line_no, 1);
        if (r.frame < 1) {
            throw MotParseError(line_no, "frame must be >= 1");
        }
        r.id = parse_integral(fields[1], line_no, 2);
        const double x = parse_real(fields[2], line_no, 3);
        const double y = parse_real(fields[3], line_no, 4);
        const double w = parse_real(fields[4], line_no, 5);
        const double h = parse_real(fields[5], line_no, 6);
        if (w < 0.0 || h < 0.0) {
            throw MotParseError(line_no, "negative box size");
        }
        r.box = BBox::from_xywh(x, y, w, h);
        r.conf = parse_real(fields[6], line_no, 7);
        if (fields.size() > 7) {
            r.x = parse_real(fields[7], line_no, 8);
        }
        if (fields.size() > 8) {
            r.y = parse_real(fields[8], line_no, 9);
        }
        if (fields.size() > 9) {
            r.z = parse_real(fields[9], line_no, 10);
        }
        records.push_back(r);
    }
    return records;
}

std::string write_mot(std::vector<MotRecord> records) {
    std::stable_sort(records.begin(), records.end(), [](const MotRecord& a, const MotRecord& b) {
        return a.frame != b.frame ? a.frame < b.frame : a.id < b.id;
    });
    std::string out;
    for (const auto& r : records) {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.frame, r.id, format_real(r.box.x_l),
                           format_real(r.box.y_t), format_real(r.box.width()), format_real(r.box.height()),
                           format_real(r.conf), format_real(r.x), format_real(r.y), format_real(r.z));
    }
    return out;
}

std::vector<MotRecord> read_mot_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_mot(ss.str());
}

void write_mot_file(const std::string& path, const std::vector<MotRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << write_mot(records);
}

}  // namespace otrack
