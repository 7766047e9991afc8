#pragma once

#include <optional>
#include <string>
#include <vector>

#include "facetrack/tracker.hpp"

namespace facetrack {

// One line of the normalized ground-truth format:
// frameIndex eyeLeftX eyeLeftY eyeRightX eyeRightY
struct GroundTruthRecord {
    int frame_index = 0;
    double x1 = 0, y1 = 0; // first eye
    double x2 = 0, y2 = 0; // second eye
};

struct FaceCenter {
    double x = 0;
    double y = 0;
};

// Outcome of matching one frame's detections against its ground truth.
struct FrameMatch {
    int valid = 0;                       // 1 when the nearest detection is within the radius
    std::optional<double> distance;      // distance of the valid detection
    std::optional<int> valid_index;      // which detection was accepted
    int false_positives = 0;
    int false_negative = 0;
};

struct PerFrameMetrics {
    int valid = 0;
    std::optional<double> distance;
    std::optional<double> stability; // e vs the previous frame, when both valid
};

struct MetricsReport {
    double detection_rate = 0;
    double mean_accuracy_px = 0; // over valid detections only
    long long false_positives = 0;
    long long false_negatives = 0;
    double mean_stability_px = 0;
    double mean_flow_ms = 0;
    double mean_detect_ms = 0;
    double mean_other_ms = 0;
    std::vector<PerFrameMetrics> per_frame;
};

// Midpoint of the eyes plus a fixed vertical offset (default 10 px),
// origin at the top-left corner.
FaceCenter gt_face_center(const GroundTruthRecord& rec, double offset_y = 10.0);

// Nearest detection below the (strict) match radius is the single valid one;
// everything else is a false positive. No detections at all is one false
// negative. Ties on distance go to the lowest detection index.
FrameMatch match_frame(const std::vector<FaceCenter>& detections,
                       const std::optional<FaceCenter>& gt, double match_px = 20.0);

// Mean of the per-frame valid indicators. Errors on an empty list.
double detection_rate(const std::vector<int>& per_frame_valid);

// Euclidean distances between face centers of consecutive frames
// (frame index difference exactly 1) that are both valid.
std::vector<double> stability(const std::vector<std::pair<int, FaceCenter>>& centers);

MetricsReport evaluate(const std::vector<std::vector<FaceCenter>>& detections,
                       const std::vector<std::optional<FaceCenter>>& gt_centers,
                       const std::vector<FrameTimings>& timings = {},
                       double match_px = 20.0);

// --- file formats ---------------------------------------------------------

// Ground truth: one `frameIndex x1 y1 x2 y2` line per frame, '#' comments.
std::vector<GroundTruthRecord> parse_ground_truth(const std::string& text);
std::vector<GroundTruthRecord> load_ground_truth(const std::string& path);

// Detections interchange: one line per frame, frameIndex followed by zero or
// more `cx cy w h peak` 5-tuples.
struct DetectionRecord {
    double cx = 0, cy = 0;
    int w = 0, h = 0;
    double peak = 0;
};

std::vector<std::vector<DetectionRecord>> parse_detections(const std::string& text);
std::vector<std::vector<DetectionRecord>> load_detections(const std::string& path);
std::string format_detections(const std::vector<std::vector<DetectionRecord>>& frames);

// Flat key-value text report / JSON rendering of the same keys.
std::string format_report(const MetricsReport& report);
std::string format_report_json(const MetricsReport& report);

} // namespace facetrack
