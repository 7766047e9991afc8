#include "facetrack/tracker.hpp"

#include <chrono>
#include <stdexcept>

namespace facetrack {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

} // namespace

Tracker::Tracker(CascadeModel model, TrackerConfig cfg)
    : model_(std::move(model)), cfg_(cfg) {
    if (cfg_.refresh_interval < 1)
        throw std::invalid_argument("Tracker: refresh_interval must be >= 1");
    if (cfg_.alpha < 0.f || cfg_.alpha > 1.f)
        throw std::invalid_argument("Tracker: alpha must be in [0, 1]");
    detector_ = [this](const Frame& frame) {
        return scan(model_, frame, cfg_.scan, cfg_.tau);
    };
}

FrameResult Tracker::step(const Frame& frame) {
    const auto step_start = Clock::now();
    FrameResult result;

    if (prev_frame_ && (prev_frame_->width != frame.width || prev_frame_->height != frame.height))
        throw std::invalid_argument("Tracker::step: frame dimensions changed mid-session");

    if (frame_index_ > 0) ++frames_since_refresh_;

    // propagate the previous map to the current frame
    std::optional<LikelihoodMap> warped;
    last_flow_.reset();
    if (map_ && prev_frame_) {
        const auto flow_start = Clock::now();
        // flow from the current frame to the previous one, so that the warp
        // samples the previous map at p + flow(p)
        FlowField flow = compute_flow(frame, *prev_frame_, cfg_.flow);
        result.timings.flow_ms = ms_since(flow_start);
        warped = warp_by_flow(*map_, flow);
        last_flow_ = std::move(flow);
    }

    const bool refresh = frame_index_ == 0 || !last_refresh_succeeded_ ||
                         frames_since_refresh_ >= cfg_.refresh_interval;
    result.refreshed = refresh;

    if (refresh) {
        const auto detect_start = Clock::now();
        const std::vector<DetectionWindow> windows = detector_(frame);
        result.timings.detect_ms = ms_since(detect_start);

        LikelihoodMap fresh =
            build_refresh_map(windows, frame.width, frame.height, cfg_.tau, cfg_.shrink);
        const bool succeeded =
            !extract_faces(fresh, cfg_.threshold_c, cfg_.shrink).empty();
        result.refresh_succeeded = succeeded;
        last_refresh_succeeded_ = succeeded;

        if (succeeded) {
            map_ = warped ? blend(fresh, *warped, cfg_.alpha) : std::move(fresh);
            frames_since_refresh_ = 0;
        } else if (warped) {
            // detector came up empty: keep tracking on flow alone and retry
            // the detector next frame
            map_ = std::move(*warped);
        }
    } else if (warped) {
        map_ = std::move(*warped);
    }

    if (map_) result.faces = extract_faces(*map_, cfg_.threshold_c, cfg_.shrink);

    prev_frame_ = frame;
    ++frame_index_;

    result.timings.other_ms =
        std::max(0.0, ms_since(step_start) - result.timings.flow_ms - result.timings.detect_ms);
    return result;
}

std::vector<FrameResult> run_sequence(const CascadeModel& model,
                                      const std::vector<Frame>& frames,
                                      const TrackerConfig& cfg) {
    if (frames.empty()) throw std::invalid_argument("run_sequence: no frames");
    Tracker tracker(model, cfg);
    std::vector<FrameResult> results;
    results.reserve(frames.size());
    for (const Frame& frame : frames) results.push_back(tracker.step(frame));
    return results;
}

} // namespace facetrack
