#include "facetrack/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace facetrack {

namespace {

int iround(double v) {
    return static_cast<int>(v >= 0 ? std::floor(v + 0.5) : std::ceil(v - 0.5));
}

} // namespace

std::vector<DetectionWindow> scan(const CascadeModel& model, const IntegralImage& ii,
                                  const ScanConfig& cfg, int min_stages) {
    if (min_stages < 0 || min_stages > model.num_stages())
        throw std::invalid_argument("scan: min_stages out of range");
    if (cfg.scale_factor <= 1.0)
        throw std::invalid_argument("scan: scale_factor must be > 1");

    const int min_win = cfg.min_window > 0 ? cfg.min_window : model.base_width;
    const int max_win = cfg.max_window > 0 ? cfg.max_window : std::min(ii.width, ii.height);

    std::vector<DetectionWindow> out;
    for (int k = 0;; ++k) {
        const double scale =
            (static_cast<double>(min_win) / model.base_width) * std::pow(cfg.scale_factor, k);
        const int win_w = std::max(1, iround(model.base_width * scale));
        const int win_h = std::max(1, iround(model.base_height * scale));
        if (win_w > max_win || win_h > max_win) break;
        if (win_w > ii.width || win_h > ii.height) break;

        const int step = std::max(1, iround(cfg.step_fraction * win_w));
        for (int y = 0; y + win_h <= ii.height; y += step) {
            for (int x = 0; x + win_w <= ii.width; x += step) {
                const int passed = evaluate_window(model, ii, x, y, scale);
                if (passed >= min_stages)
                    out.push_back({x, y, win_w, win_h, passed});
            }
        }
    }
    return out;
}

std::vector<DetectionWindow> scan(const CascadeModel& model, const Frame& frame,
                                  const ScanConfig& cfg, int min_stages) {
    return scan(model, integral(frame), cfg, min_stages);
}

bool rects_are_neighbors(const DetectionWindow& a, const DetectionWindow& b) {
    const double dw = 0.2 * std::min(a.width, b.width);
    const double dh = 0.2 * std::min(a.height, b.height);
    return std::abs(a.width - b.width) <= dw && std::abs(a.height - b.height) <= dh &&
           std::abs(a.x - b.x) <= dw && std::abs(a.y - b.y) <= dh;
}

std::vector<FaceRect> group_windows(const std::vector<DetectionWindow>& windows,
                                    int min_neighbors) {
    const std::size_t n = windows.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);

    auto find = [&](std::size_t i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    };

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (rects_are_neighbors(windows[i], windows[j])) {
                const std::size_t ri = find(i), rj = find(j);
                if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
            }

    // accumulate per root, keyed by first member so output order is stable
    std::vector<FaceRect> out;
    std::vector<long long> sx(n, 0), sy(n, 0), sw(n, 0), sh(n, 0);
    std::vector<int> count(n, 0);
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = find(i);
        if (count[r] == 0) order.push_back(r);
        ++count[r];
        sx[r] += windows[i].x;
        sy[r] += windows[i].y;
        sw[r] += windows[i].width;
        sh[r] += windows[i].height;
    }
    for (std::size_t r : order) {
        if (count[r] < min_neighbors + 1) continue;
        const double c = count[r];
        out.push_back({iround(sx[r] / c), iround(sy[r] / c), iround(sw[r] / c), iround(sh[r] / c),
                       count[r]});
    }
    return out;
}

std::vector<FaceRect> classic_detect(const CascadeModel& model, const Frame& frame,
                                     const ScanConfig& cfg, int min_neighbors) {
    if (min_neighbors < 0) throw std::invalid_argument("classic_detect: min_neighbors < 0");
    return group_windows(scan(model, frame, cfg, model.num_stages()), min_neighbors);
}

} // namespace facetrack
