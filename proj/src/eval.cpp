#include "facetrack/eval.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace facetrack {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// strips '#' comments; returns false for blank lines
bool clean_line(std::string& line) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    return line.find_first_not_of(" \t\r\n") != std::string::npos;
}

} // namespace

FaceCenter gt_face_center(const GroundTruthRecord& rec, double offset_y) {
    return {rec.x1 + (rec.x2 - rec.x1) / 2.0, rec.y1 + (rec.y2 - rec.y1) / 2.0 + offset_y};
}

FrameMatch match_frame(const std::vector<FaceCenter>& detections,
                       const std::optional<FaceCenter>& gt, double match_px) {
    FrameMatch m;
    if (detections.empty()) {
        m.false_negative = gt ? 1 : 0;
        return m;
    }
    if (!gt) {
        m.false_positives = static_cast<int>(detections.size());
        return m;
    }

    int nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(detections.size()); ++i) {
        const double d = std::hypot(detections[i].x - gt->x, detections[i].y - gt->y);
        if (d < best) {
            best = d;
            nearest = i;
        }
    }

    if (best < match_px) {
        m.valid = 1;
        m.distance = best;
        m.valid_index = nearest;
        m.false_positives = static_cast<int>(detections.size()) - 1;
    } else {
        m.false_positives = static_cast<int>(detections.size());
    }
    return m;
}

double detection_rate(const std::vector<int>& per_frame_valid) {
    if (per_frame_valid.empty()) throw std::invalid_argument("detection_rate: empty input");
    long long sum = 0;
    for (int v : per_frame_valid) sum += v;
    return static_cast<double>(sum) / static_cast<double>(per_frame_valid.size());
}

std::vector<double> stability(const std::vector<std::pair<int, FaceCenter>>& centers) {
    std::vector<double> out;
    for (std::size_t i = 1; i < centers.size(); ++i) {
        if (centers[i].first != centers[i - 1].first + 1) continue;
        out.push_back(std::hypot(centers[i].second.x - centers[i - 1].second.x,
                                 centers[i].second.y - centers[i - 1].second.y));
    }
    return out;
}

MetricsReport evaluate(const std::vector<std::vector<FaceCenter>>& detections,
                       const std::vector<std::optional<FaceCenter>>& gt_centers,
                       const std::vector<FrameTimings>& timings, double match_px) {
    if (detections.size() != gt_centers.size())
        throw std::invalid_argument("evaluate: detections and ground truth frame counts differ");
    if (detections.empty()) throw std::invalid_argument("evaluate: no frames");
    if (!timings.empty() && timings.size() != detections.size())
        throw std::invalid_argument("evaluate: timing frame count differs");

    MetricsReport report;
    report.per_frame.resize(detections.size());

    std::vector<int> valid_flags(detections.size(), 0);
    std::vector<std::pair<int, FaceCenter>> valid_centers;
    double accuracy_sum = 0;
    long long accuracy_n = 0;

    for (std::size_t i = 0; i < detections.size(); ++i) {
        const FrameMatch m = match_frame(detections[i], gt_centers[i], match_px);
        valid_flags[i] = m.valid;
        report.false_positives += m.false_positives;
        report.false_negatives += m.false_negative;
        report.per_frame[i].valid = m.valid;
        report.per_frame[i].distance = m.distance;
        if (m.valid) {
            accuracy_sum += *m.distance;
            ++accuracy_n;
            valid_centers.emplace_back(static_cast<int>(i), detections[i][*m.valid_index]);
        }
    }

    report.detection_rate = detection_rate(valid_flags);
    report.mean_accuracy_px = accuracy_n ? accuracy_sum / accuracy_n : 0.0;

    const std::vector<double> e = stability(valid_centers);
    if (!e.empty()) {
        double s = 0;
        for (double v : e) s += v;
        report.mean_stability_px = s / static_cast<double>(e.size());
    }
    // attach each e value to the later frame of its pair
    std::size_t ei = 0;
    for (std::size_t i = 1; i < valid_centers.size() && ei < e.size(); ++i) {
        if (valid_centers[i].first != valid_centers[i - 1].first + 1) continue;
        report.per_frame[valid_centers[i].first].stability = e[ei++];
    }

    if (!timings.empty()) {
        double f = 0, d = 0, o = 0;
        for (const FrameTimings& t : timings) {
            f += t.flow_ms;
            d += t.detect_ms;
            o += t.other_ms;
        }
        const double n = static_cast<double>(timings.size());
        report.mean_flow_ms = f / n;
        report.mean_detect_ms = d / n;
        report.mean_other_ms = o / n;
    }
    return report;
}

std::vector<GroundTruthRecord> parse_ground_truth(const std::string& text) {
    std::vector<GroundTruthRecord> out;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!clean_line(line)) continue;
        std::istringstream ls(line);
        GroundTruthRecord rec;
        if (!(ls >> rec.frame_index >> rec.x1 >> rec.y1 >> rec.x2 >> rec.y2))
            throw std::runtime_error("ground truth line " + std::to_string(line_no) +
                                     ": expected `frameIndex x1 y1 x2 y2`");
        out.push_back(rec);
    }
    return out;
}

std::vector<GroundTruthRecord> load_ground_truth(const std::string& path) {
    return parse_ground_truth(read_file(path));
}

std::vector<std::vector<DetectionRecord>> parse_detections(const std::string& text) {
    std::vector<std::vector<DetectionRecord>> out;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!clean_line(line)) continue;
        std::istringstream ls(line);
        long long frame_index;
        if (!(ls >> frame_index))
            throw std::runtime_error("detections line " + std::to_string(line_no) +
                                     ": missing frame index");
        std::vector<DetectionRecord> dets;
        DetectionRecord d;
        while (ls >> d.cx) {
            if (!(ls >> d.cy >> d.w >> d.h >> d.peak))
                throw std::runtime_error("detections line " + std::to_string(line_no) +
                                         ": truncated 5-tuple");
            dets.push_back(d);
        }
        out.push_back(std::move(dets));
    }
    return out;
}

std::vector<std::vector<DetectionRecord>> load_detections(const std::string& path) {
    return parse_detections(read_file(path));
}

std::string format_detections(const std::vector<std::vector<DetectionRecord>>& frames) {
    std::ostringstream out;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        out << i;
        for (const DetectionRecord& d : frames[i]) {
            char buf[160];
            std::snprintf(buf, sizeof buf, " %.3f %.3f %d %d %.3f", d.cx, d.cy, d.w, d.h, d.peak);
            out << buf;
        }
        out << "\n";
    }
    return out.str();
}

std::string format_report(const MetricsReport& r) {
    std::ostringstream out;
    out << "detection_rate " << r.detection_rate << "\n"
        << "mean_accuracy_px " << r.mean_accuracy_px << "\n"
        << "false_positives " << r.false_positives << "\n"
        << "false_negatives " << r.false_negatives << "\n"
        << "mean_stability_px " << r.mean_stability_px << "\n"
        << "mean_flow_ms " << r.mean_flow_ms << "\n"
        << "mean_detect_ms " << r.mean_detect_ms << "\n"
        << "mean_other_ms " << r.mean_other_ms << "\n";
    return out.str();
}

std::string format_report_json(const MetricsReport& r) {
    nlohmann::json j{{"detection_rate", r.detection_rate},
                     {"mean_accuracy_px", r.mean_accuracy_px},
                     {"false_positives", r.false_positives},
                     {"false_negatives", r.false_negatives},
                     {"mean_stability_px", r.mean_stability_px},
                     {"mean_flow_ms", r.mean_flow_ms},
                     {"mean_detect_ms", r.mean_detect_ms},
                     {"mean_other_ms", r.mean_other_ms}};
    return j.dump(2) + "\n";
}

} // namespace facetrack
