// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "otrack/mot_io.hpp"

namespace otrack {

struct MetricsReport {
    double mota = 0.0;
    double motp = 0.0;  ///< mean IoU distance (1 - IoU) over matches
    double idf1 = 0.0;
    double recall = 0.0;
    double precision = 0.0;
    int mt = 0;
    int ml = 0;
    int fp = 0;
    int fn = 0;
    int ids = 0;
    int frag = 0;

    // Raw counts, kept so reports over several sequences can be merged.
    int num_gt = 0;
    int num_pred = 0;
    int matches = 0;
    double distance_sum = 0.0;
    int gt_tracks = 0;
    int idtp = 0;
};

struct ClearMotParams {
    double iou_threshold = 0.5;
    double mostly_tracked = 0.8;
    double mostly_lost = 0.2;
};

/// CLEAR-MOT counts. Per frame, correspondences from earlier frames are kept
/// while their IoU stays above threshold; the rest is matched by minimum
/// IoU distance. Throws if gt is empty.
MetricsReport clear_mot(std::span<const MotRecord> gt, std::span<const MotRecord> pred,
                        const ClearMotParams& params = {});

struct IdentityScore {
    int idtp = 0;
    int idfp = 0;
    int idfn = 0;
    double idf1 = 0.0;
};

/// Global identity bijection maximizing the number of frame-level overlaps
/// (IoU >= threshold). Throws if gt is empty.
IdentityScore identity_score(std::span<const MotRecord> gt, std::span<const MotRecord> pred,
                             double iou_threshold = 0.5);
double idf1(std::span<const MotRecord> gt, std::span<const MotRecord> pred, double iou_threshold = 0.5);

/// clear_mot plus idf1 in one report.
MetricsReport evaluate(std::span<const MotRecord> gt, std::span<const MotRecord> pred,
                       const ClearMotParams& params = {});

/// Sums raw counts and recomputes the ratios.
MetricsReport merge_reports(std::span<const MetricsReport> reports);

std::string report_csv_header();
std::string report_csv_row(const std::string& name, const MetricsReport& r);
std::string report_table(const std::vector<std::string>& names, const std::vector<MetricsReport>& reports);

struct CsvReportRow {
    std::string name;
    MetricsReport report;
};
std::vector<CsvReportRow> parse_report_csv(const std::string& content);

}  // namespace otrack
