// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "otrack/geometry.hpp"

namespace otrack {

/// One line of a MOTChallenge text file. The box is kept in corner form.
struct MotRecord {
    int frame = 1;
    int id = -1;
    BBox box;
    double conf = -1.0;
    double x = -1.0;
    double y = -1.0;
    double z = -1.0;

    friend bool operator==(const MotRecord&, const MotRecord&) = default;
};

class MotParseError : public std::runtime_error {
public:
    MotParseError(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Parses `frame,id,x,y,w,h,conf[,x,y,z]`. Blank lines are skipped.
std::vector<MotRecord> parse_mot(std::string_view content);
/// Records sorted by (frame, id), reals with two decimals.
std::string write_mot(std::vector<MotRecord> records);

std::vector<MotRecord> read_mot_file(const std::string& path);
void write_mot_file(const std::string& path, const std::vector<MotRecord>& records);

}  // namespace otrack
