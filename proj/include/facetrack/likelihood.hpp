#pragma once

#include <vector>

#include "facetrack/detector.hpp"
#include "facetrack/image.hpp"

namespace facetrack {

// Per-pixel accumulation of stages-passed counts; same layout as the frame.
using LikelihoodMap = FloatImage;

struct FaceBox {
    double center_x = 0; // component centroid
    double center_y = 0;
    int width = 0;  // component bbox stretched by 1/shrink, clipped to frame
    int height = 0;
    float peak = 0.f; // max map value inside the component
};

// Sums stages_passed over every window with stages_passed >= tau, each window
// first shrunk about its center to shrink * original size.
LikelihoodMap build_refresh_map(const std::vector<DetectionWindow>& windows, int frame_w,
                                int frame_h, int tau, double shrink);

// Eq.-style recursive refresh: out = (1 - alpha) * refresh + alpha * warped_prev.
LikelihoodMap blend(const LikelihoodMap& refresh, const LikelihoodMap& warped_prev, float alpha);

// Threshold at c, 8-connected component labeling, centroid + bbox stretched by
// 1/shrink about the centroid. Components under min_area pixels are dropped.
// Result is sorted by descending peak.
std::vector<FaceBox> extract_faces(const LikelihoodMap& map, float c, double shrink,
                                   int min_area = 9);

} // namespace facetrack
