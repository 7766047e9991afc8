#pragma once

#include <vector>

#include "facetrack/cascade.hpp"
#include "facetrack/image.hpp"

namespace facetrack {

struct DetectionWindow {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;
    int stages_passed = 0;
};

struct FaceRect {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;
    int neighbors = 0; // grouped window count
};

struct ScanConfig {
    double scale_factor = 1.1;   // ratio between consecutive scan scales
    int min_window = 0;          // 0 = cascade base window
    int max_window = 0;          // 0 = min(frame dims)
    double step_fraction = 0.05; // step = max(1, round(fraction * window width))
};

// Multi-scale sliding-window scan. Returns every lattice window with
// stages_passed >= min_stages, scale-major then row-major.
std::vector<DetectionWindow> scan(const CascadeModel& model, const Frame& frame,
                                  const ScanConfig& cfg, int min_stages);

// Same scan over a prebuilt integral image (the frame dims are taken from it).
std::vector<DetectionWindow> scan(const CascadeModel& model, const IntegralImage& ii,
                                  const ScanConfig& cfg, int min_stages);

// Grouping predicate for the classic detector: rectangles are neighbors when
// sizes and corners agree within 20% of the smaller rectangle.
bool rects_are_neighbors(const DetectionWindow& a, const DetectionWindow& b);

// Classic detection: full-cascade scan, then overlap grouping. Groups with at
// least min_neighbors + 1 members are emitted as their mean rectangle.
std::vector<FaceRect> classic_detect(const CascadeModel& model, const Frame& frame,
                                     const ScanConfig& cfg, int min_neighbors);

std::vector<FaceRect> group_windows(const std::vector<DetectionWindow>& windows,
                                    int min_neighbors);

} // namespace facetrack
