#pragma once

#include <cstdint>
#include <vector>

namespace facetrack {

// 8-bit grayscale frame, row-major.
struct Frame {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    Frame() = default;
    Frame(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

// Single-channel float grid with the same layout as Frame. Used for
// likelihood maps and other per-pixel real-valued quantities.
struct FloatImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    FloatImage() = default;
    FloatImage(int w, int h, float fill = 0.f)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
};

// Per-pixel displacement between two frames. dx/dy have width*height entries.
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<float> dx;
    std::vector<float> dy;

    FlowField() = default;
    FlowField(int w, int h)
        : width(w), height(h),
          dx(static_cast<std::size_t>(w) * h, 0.f),
          dy(static_cast<std::size_t>(w) * h, 0.f) {}
};

// Summed-area table. sums is (width+1) x (height+1); sums(x, y) holds the sum
// of all intensities in [0, x) x [0, y), so the first row and column are zero.
struct IntegralImage {
    int width = 0;   // source frame width
    int height = 0;  // source frame height
    std::vector<std::uint64_t> sums;

    std::uint64_t at(int x, int y) const {
        return sums[static_cast<std::size_t>(y) * (width + 1) + x];
    }

    // Sum over the w x h rectangle whose top-left pixel is (x, y).
    std::uint64_t rect_sum(int x, int y, int w, int h) const {
        return at(x + w, y + h) - at(x, y + h) - at(x + w, y) + at(x, y);
    }
};

IntegralImage integral(const Frame& frame);

// Bilinear lookup with a constant-zero border: anything sampled outside the
// grid contributes 0. Exact at integer in-bounds coordinates.
float bilinear_sample(const FloatImage& map, float x, float y);

// Backward warp: out(p) = bilinear_sample(map, p + flow(p)).
// Throws std::invalid_argument on dimension mismatch.
FloatImage warp_by_flow(const FloatImage& map, const FlowField& flow);

} // namespace facetrack
