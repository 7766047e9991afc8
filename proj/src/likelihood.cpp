#include "facetrack/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace facetrack {

namespace {

int iround(double v) {
    return static_cast<int>(v >= 0 ? std::floor(v + 0.5) : std::ceil(v - 0.5));
}

} // namespace

LikelihoodMap build_refresh_map(const std::vector<DetectionWindow>& windows, int frame_w,
                                int frame_h, int tau, double shrink) {
    if (frame_w < 1 || frame_h < 1)
        throw std::invalid_argument("build_refresh_map: empty frame");
    if (shrink <= 0.0 || shrink > 1.0)
        throw std::invalid_argument("build_refresh_map: shrink must be in (0, 1]");

    LikelihoodMap map(frame_w, frame_h);
    for (const DetectionWindow& win : windows) {
        if (win.stages_passed < tau) continue;

        const int sw = std::max(1, iround(win.width * shrink));
        const int sh = std::max(1, iround(win.height * shrink));
        const int sx = iround(win.x + (win.width - sw) / 2.0);
        const int sy = iround(win.y + (win.height - sh) / 2.0);

        const int x0 = std::max(0, sx);
        const int y0 = std::max(0, sy);
        const int x1 = std::min(frame_w, sx + sw);
        const int y1 = std::min(frame_h, sy + sh);
        const float add = static_cast<float>(win.stages_passed);
        for (int y = y0; y < y1; ++y) {
            float* row = map.data.data() + static_cast<std::size_t>(y) * frame_w;
            for (int x = x0; x < x1; ++x) row[x] += add;
        }
    }
    return map;
}

LikelihoodMap blend(const LikelihoodMap& refresh, const LikelihoodMap& warped_prev, float alpha) {
    if (refresh.width != warped_prev.width || refresh.height != warped_prev.height)
        throw std::invalid_argument("blend: map dimensions differ");
    if (alpha < 0.f || alpha > 1.f)
        throw std::invalid_argument("blend: alpha must be in [0, 1]");

    LikelihoodMap out(refresh.width, refresh.height);
    const float beta = 1.f - alpha;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = beta * refresh.data[i] + alpha * warped_prev.data[i];
    return out;
}

std::vector<FaceBox> extract_faces(const LikelihoodMap& map, float c, double shrink,
                                   int min_area) {
    if (c <= 0.f) throw std::invalid_argument("extract_faces: threshold must be > 0");
    if (shrink <= 0.0 || shrink > 1.0)
        throw std::invalid_argument("extract_faces: shrink must be in (0, 1]");

    const int w = map.width, h = map.height;
    std::vector<std::int32_t> label(static_cast<std::size_t>(w) * h, -1);
    std::vector<FaceBox> boxes;
    std::vector<std::size_t> stack;

    auto idx = [&](int x, int y) { return static_cast<std::size_t>(y) * w + x; };

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (map.data[idx(x, y)] < c || label[idx(x, y)] >= 0) continue;

            // flood one 8-connected component
            const std::int32_t id = static_cast<std::int32_t>(boxes.size());
            long long sum_x = 0, sum_y = 0, area = 0;
            int min_x = x, max_x = x, min_y = y, max_y = y;
            float peak = 0.f;
            stack.clear();
            stack.push_back(idx(x, y));
            label[idx(x, y)] = id;
            while (!stack.empty()) {
                const std::size_t p = stack.back();
                stack.pop_back();
                const int px = static_cast<int>(p % w);
                const int py = static_cast<int>(p / w);
                sum_x += px;
                sum_y += py;
                ++area;
                min_x = std::min(min_x, px);
                max_x = std::max(max_x, px);
                min_y = std::min(min_y, py);
                max_y = std::max(max_y, py);
                peak = std::max(peak, map.data[p]);
                for (int ny = std::max(0, py - 1); ny <= std::min(h - 1, py + 1); ++ny)
                    for (int nx = std::max(0, px - 1); nx <= std::min(w - 1, px + 1); ++nx) {
                        const std::size_t q = idx(nx, ny);
                        if (label[q] < 0 && map.data[q] >= c) {
                            label[q] = id;
                            stack.push_back(q);
                        }
                    }
            }

            if (area < min_area) {
                boxes.push_back(FaceBox{}); // placeholder keeps label ids aligned
                boxes.back().peak = -1.f;
                continue;
            }

            FaceBox box;
            box.center_x = static_cast<double>(sum_x) / static_cast<double>(area);
            box.center_y = static_cast<double>(sum_y) / static_cast<double>(area);
            box.peak = peak;

            // stretch the bbox by 1/shrink about the centroid, then clip
            const double inv = 1.0 / shrink;
            const double x0 = box.center_x + (min_x - box.center_x) * inv;
            const double x1 = box.center_x + (max_x + 1 - box.center_x) * inv;
            const double y0 = box.center_y + (min_y - box.center_y) * inv;
            const double y1 = box.center_y + (max_y + 1 - box.center_y) * inv;
            const int cx0 = std::max(0, iround(x0));
            const int cx1 = std::min(w, iround(x1));
            const int cy0 = std::max(0, iround(y0));
            const int cy1 = std::min(h, iround(y1));
            box.width = std::max(1, cx1 - cx0);
            box.height = std::max(1, cy1 - cy0);
            boxes.push_back(box);
        }
    }

    std::erase_if(boxes, [](const FaceBox& b) { return b.peak < 0.f; });
    std::stable_sort(boxes.begin(), boxes.end(),
                     [](const FaceBox& a, const FaceBox& b) { return a.peak > b.peak; });
    return boxes;
}

} // namespace facetrack
