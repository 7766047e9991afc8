#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "facetrack/cascade.hpp"
#include "facetrack/detector.hpp"
#include "facetrack/flow.hpp"
#include "facetrack/likelihood.hpp"

namespace facetrack {

struct TrackerConfig {
    int refresh_interval = 20;  // n: frames between scheduled detector refreshes
    float alpha = 0.5f;         // weight of the warped previous map in the blend
    int tau = 15;               // reject-level gate for map contributions
    double shrink = 1.0 / 3.0;  // window shrink before accumulation
    float threshold_c = 65.f;   // binarization threshold for face extraction
    ScanConfig scan;
    FlowParams flow;
};

struct FrameTimings {
    double flow_ms = 0;
    double detect_ms = 0;
    double other_ms = 0;
};

struct FrameResult {
    std::vector<FaceBox> faces;
    bool refreshed = false;          // detector ran on this frame
    bool refresh_succeeded = false;  // and its map alone yielded a face
    FrameTimings timings;
};

// Per-frame driver: detector refresh every n frames (retrying every frame
// after a miss until a face is found again), dense-flow propagation of the
// likelihood map in between, face extraction from the blended map.
class Tracker {
public:
    using DetectorFn = std::function<std::vector<DetectionWindow>(const Frame&)>;

    Tracker(CascadeModel model, TrackerConfig cfg);

    // Replaces the scan-based detector; used to script refresh outcomes.
    void set_detector(DetectorFn fn) { detector_ = std::move(fn); }

    FrameResult step(const Frame& frame);

    int frame_index() const { return frame_index_; }
    const std::optional<LikelihoodMap>& map() const { return map_; }
    const std::optional<FlowField>& last_flow() const { return last_flow_; }

private:
    CascadeModel model_;
    TrackerConfig cfg_;
    DetectorFn detector_;

    std::optional<LikelihoodMap> map_;   // absent until the first successful refresh
    std::optional<Frame> prev_frame_;
    std::optional<FlowField> last_flow_;
    int frame_index_ = 0;
    int frames_since_refresh_ = 0;
    bool last_refresh_succeeded_ = true;
};

std::vector<FrameResult> run_sequence(const CascadeModel& model,
                                      const std::vector<Frame>& frames,
                                      const TrackerConfig& cfg);

} // namespace facetrack
