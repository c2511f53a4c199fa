// SPDX-License-Identifier: Apache-2.0
#include "otrack/metrics.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "otrack/association.hpp"

namespace otrack {

namespace {

using FrameIndex = std::map<int, std::vector<const MotRecord*>>;

FrameIndex by_frame(std::span<const MotRecord> records) {
    FrameIndex out;
    for (const auto& r : records) {
        out[r.frame].push_back(&r);
    }
    return out;
}

void finish_ratios(MetricsReport& r) {
    r.mota = r.num_gt > 0 ? 1.0 - static_cast<double>(r.fn + r.fp + r.ids) / r.num_gt : 0.0;
    r.motp = r.matches > 0 ? r.distance_sum / r.matches : 0.0;
    r.recall = r.num_gt > 0 ? static_cast<double>(r.matches) / r.num_gt : 0.0;
    r.precision = r.num_pred > 0 ? static_cast<double>(r.matches) / r.num_pred : 0.0;
    const int denom = r.num_gt + r.num_pred;
    r.idf1 = denom > 0 ? 2.0 * r.idtp / denom : 0.0;
}

}  // namespace

MetricsReport clear_mot(std::span<const MotRecord> gt, std::span<const MotRecord> pred,
                        const ClearMotParams& params) {
    if (gt.empty()) {
        throw std::invalid_argument("clear_mot: ground truth is empty");
    }
    const FrameIndex gt_frames = by_frame(gt);
    const FrameIndex pred_frames = by_frame(pred);
    std::set<int> frames;
    for (const auto& [f, _] : gt_frames) {
        frames.insert(f);
    }
    for (const auto& [f, _] : pred_frames) {
        frames.insert(f);
    }

    MetricsReport r;
    r.num_gt = static_cast<int>(gt.size());
    r.num_pred = static_cast<int>(pred.size());
    const double max_distance = 1.0 - params.iou_threshold;

    std::map<int, int> current;        // gt id -> pred id matched in the previous frame
    std::map<int, int> last_match;     // gt id -> last pred id it was matched to
    std::map<int, std::vector<char>> history;  // gt id -> tracked flag per annotated frame
    const std::vector<const MotRecord*> none;

    for (const int f : frames) {
        const auto git = gt_frames.find(f);
        const auto pit = pred_frames.find(f);
        const auto& g = git != gt_frames.end() ? git->second : none;
        const auto& p = pit != pred_frames.end() ? pit->second : none;

        std::vector<int> g_match(g.size(), -1);
        std::vector<char> p_used(p.size(), 0);
        std::vector<double> g_dist(g.size(), 0.0);

        // Keep earlier correspondences that are still valid.
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto it = current.find(g[i]->id);
            if (it == current.end()) {
                continue;
            }
            for (std::size_t j = 0; j < p.size(); ++j) {
                if (!p_used[j] && p[j]->id == it->second) {
                    const double d = 1.0 - iou(g[i]->box, p[j]->box);
                    if (d <= max_distance) {
                        g_match[i] = static_cast<int>(j);
                        g_dist[i] = d;
                        p_used[j] = 1;
                    }
                    break;
                }
            }
        }

        std::vector<int> free_g;
        std::vector<int> free_p;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g_match[i] < 0) {
                free_g.push_back(static_cast<int>(i));
            }
        }
        for (std::size_t j = 0; j < p.size(); ++j) {
            if (!p_used[j]) {
                free_p.push_back(static_cast<int>(j));
            }
        }
        CostMatrix cost(static_cast<int>(free_g.size()), static_cast<int>(free_p.size()));
        for (std::size_t a = 0; a < free_g.size(); ++a) {
            for (std::size_t b = 0; b < free_p.size(); ++b) {
                const double d = 1.0 - iou(g[free_g[a]]->box, p[free_p[b]]->box);
                cost.at(static_cast<int>(a), static_cast<int>(b)) = d <= max_distance ? d : kGatedCost;
            }
        }
        const AssignmentResult res = solve(cost);
        for (const auto& [a, b] : res.matches) {
            const int i = free_g[a];
            const int j = free_p[b];
            g_match[i] = j;
            g_dist[i] = cost.at(a, b);
            p_used[j] = 1;
            const auto last = last_match.find(g[i]->id);
            if (last != last_match.end() && last->second != p[j]->id) {
                ++r.ids;
            }
        }

        std::map<int, int> next;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const bool tracked = g_match[i] >= 0;
            history[g[i]->id].push_back(tracked ? 1 : 0);
            if (tracked) {
                const int pid = p[g_match[i]]->id;
                next[g[i]->id] = pid;
                last_match[g[i]->id] = pid;
                ++r.matches;
                r.distance_sum += g_dist[i];
            } else {
                ++r.fn;
            }
        }
        for (std::size_t j = 0; j < p.size(); ++j) {
            if (!p_used[j]) {
                ++r.fp;
            }
        }
        current = std::move(next);
    }

    r.gt_tracks = static_cast<int>(history.size());
    for (const auto& [id, flags] : history) {
        const auto tracked = std::count(flags.begin(), flags.end(), char{1});
        const double coverage = static_cast<double>(tracked) / static_cast<double>(flags.size());
        if (coverage >= params.mostly_tracked) {
            ++r.mt;
        } else if (coverage <= params.mostly_lost) {
            ++r.ml;
        }
        // Interruptions between the first and the last tracked frame.
        const auto first = std::find(flags.begin(), flags.end(), char{1});
        const auto last = std::find(flags.rbegin(), flags.rend(), char{1});
        if (first != flags.end()) {
            const auto end = last.base();
            for (auto it = first; it + 1 < end; ++it) {
                if (*it == 1 && *(it + 1) == 0) {
                    ++r.frag;
                }
            }
        }
    }
    finish_ratios(r);
    return r;
}

IdentityScore identity_score(std::span<const MotRecord> gt, std::span<const MotRecord> pred, double iou_threshold) {
    if (gt.empty()) {
        throw std::invalid_argument("idf1: ground truth is empty");
    }
    std::vector<int> gt_ids;
    std::vector<int> pred_ids;
    for (const auto& r : gt) {
        gt_ids.push_back(r.id);
    }
    for (const auto& r : pred) {
        pred_ids.push_back(r.id);
    }
    std::sort(gt_ids.begin(), gt_ids.end());
    gt_ids.erase(std::unique(gt_ids.begin(), gt_ids.end()), gt_ids.end());
    std::sort(pred_ids.begin(), pred_ids.end());
    pred_ids.erase(std::unique(pred_ids.begin(), pred_ids.end()), pred_ids.end());
    auto index_of = [](const std::vector<int>& ids, int id) {
        return static_cast<int>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
    };

    std::vector<int> overlap(gt_ids.size() * pred_ids.size(), 0);
    const FrameIndex gt_frames = by_frame(gt);
    const FrameIndex pred_frames = by_frame(pred);
    for (const auto& [f, gs] : gt_frames) {
        const auto pit = pred_frames.find(f);
        if (pit == pred_frames.end()) {
            continue;
        }
        for (const auto* g : gs) {
            for (const auto* p : pit->second) {
                if (iou(g->box, p->box) >= iou_threshold) {
                    ++overlap[static_cast<std::size_t>(index_of(gt_ids, g->id)) * pred_ids.size() +
                              index_of(pred_ids, p->id)];
                }
            }
        }
    }

    const int max_overlap = overlap.empty() ? 0 : *std::max_element(overlap.begin(), overlap.end());
    CostMatrix cost(static_cast<int>(gt_ids.size()), static_cast<int>(pred_ids.size()));
    for (std::size_t i = 0; i < gt_ids.size(); ++i) {
        for (std::size_t j = 0; j < pred_ids.size(); ++j) {
            cost.at(static_cast<int>(i), static_cast<int>(j)) = max_overlap - overlap[i * pred_ids.size() + j];
        }
    }
    IdentityScore s;
    for (const auto& [i, j] : solve(cost).matches) {
        s.idtp += overlap[static_cast<std::size_t>(i) * pred_ids.size() + j];
    }
    s.idfp = static_cast<int>(pred.size()) - s.idtp;
    s.idfn = static_cast<int>(gt.size()) - s.idtp;
    s.idf1 = 2.0 * s.idtp / static_cast<double>(2 * s.idtp + s.idfp + s.idfn);
    return s;
}

double idf1(std::span<const MotRecord> gt, std::span<const MotRecord> pred, double iou_threshold) {
    return identity_score(gt, pred, iou_threshold).idf1;
}

MetricsReport evaluate(std::span<const MotRecord> gt, std::span<const MotRecord> pred, const ClearMotParams& params) {
    MetricsReport r = clear_mot(gt, pred, params);
    r.idtp = identity_score(gt, pred, params.iou_threshold).idtp;
    finish_ratios(r);
    return r;
}

MetricsReport merge_reports(std::span<const MetricsReport> reports) {
    MetricsReport m;
    for (const auto& r : reports) {
        m.mt += r.mt;
        m.ml += r.ml;
        m.fp += r.fp;
        m.fn += r.fn;
        m.ids += r.ids;
        m.frag += r.frag;
        m.num_gt += r.num_gt;
        m.num_pred += r.num_pred;
        m.matches += r.matches;
        m.distance_sum += r.distance_sum;
        m.gt_tracks += r.gt_tracks;
        m.idtp += r.idtp;
    }
    finish_ratios(m);
    return m;
}

std::string report_csv_header() {
    return "name,MOTA,MOTP,IDF1,Recall,Precision,MT,ML,FP,FN,IDS,Frag,num_gt,num_pred,matches,idtp\n";
}

std::string report_csv_row(const std::string& name, const MetricsReport& r) {
    return fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{},{},{},{},{},{},{},{},{},{}\n", name, r.mota, r.motp,
                       r.idf1, r.recall, r.precision, r.mt, r.ml, r.fp, r.fn, r.ids, r.frag, r.num_gt, r.num_pred,
                       r.matches, r.idtp);
}

std::string report_table(const std::vector<std::string>& names, const std::vector<MetricsReport>& reports) {
    std::string out = fmt::format("{:<16} {:>7} {:>7} {:>7} {:>7} {:>5} {:>5} {:>6} {:>6} {:>5} {:>5}\n", "sequence",
                                  "MOTA", "MOTP", "IDF1", "Recall", "MT", "ML", "FP", "FN", "IDS", "Frag");
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        out += fmt::format("{:<16} {:>7.3f} {:>7.3f} {:>7.3f} {:>7.3f} {:>5} {:>5} {:>6} {:>6} {:>5} {:>5}\n", names[i],
                           r.mota, r.motp, r.idf1, r.recall, r.mt, r.ml, r.fp, r.fn, r.ids, r.frag);
    }
    return out;
}

std::vector<CsvReportRow> parse_report_csv(const std::string& content) {
    std::istringstream in(content);
    std::string line;
    std::vector<CsvReportRow> rows;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        if (header) {
            header = false;
            if (line + "\n" != report_csv_header()) {
                throw std::runtime_error("report csv: unexpected header");
            }
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string tok;
        while (std::getline(ls, tok, ',')) {
            f.push_back(tok);
        }
        if (f.size() != 16) {
            throw std::runtime_error("report csv: expected 16 fields");
        }
        CsvReportRow row;
        row.name = f[0];
        MetricsReport& r = row.report;
        r.mota = std::stod(f[1]);
        r.motp = std::stod(f[2]);
        r.idf1 = std::stod(f[3]);
        r.recall = std::stod(f[4]);
        r.precision = std::stod(f[5]);
        r.mt = std::stoi(f[6]);
        r.ml = std::stoi(f[7]);
        r.fp = std::stoi(f[8]);
        r.fn = std::stoi(f[9]);
        r.ids = std::stoi(f[10]);
        r.frag = std::stoi(f[11]);
        r.num_gt = std::stoi(f[12]);
        r.num_pred = std::stoi(f[13]);
        r.matches = std::stoi(f[14]);
        r.idtp = std::stoi(f[15]);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace otrack
