#include "facetrack/image.hpp"

#include <cmath>
#include <stdexcept>

namespace facetrack {

IntegralImage integral(const Frame& frame) {
    IntegralImage ii;
    ii.width = frame.width;
    ii.height = frame.height;
    ii.sums.assign(static_cast<std::size_t>(frame.width + 1) * (frame.height + 1), 0);

    const int stride = frame.width + 1;
    for (int y = 0; y < frame.height; ++y) {
        std::uint64_t row = 0;
        const std::uint8_t* src = frame.data.data() + static_cast<std::size_t>(y) * frame.width;
        std::uint64_t* above = ii.sums.data() + static_cast<std::size_t>(y) * stride;
        std::uint64_t* cur = above + stride;
        cur[0] = 0;
        for (int x = 0; x < frame.width; ++x) {
            row += src[x];
            cur[x + 1] = above[x + 1] + row;
        }
    }
    return ii;
}

float bilinear_sample(const FloatImage& map, float x, float y) {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const float fx = x - static_cast<float>(x0);
    const float fy = y - static_cast<float>(y0);

    auto value = [&](int xi, int yi) -> float {
        if (xi < 0 || yi < 0 || xi >= map.width || yi >= map.height) return 0.f;
        return map.at(xi, yi);
    };

    // Integer lattice points return the stored value bit-exactly.
    if (fx == 0.f && fy == 0.f) return value(x0, y0);

    const float v00 = value(x0, y0);
    const float v10 = value(x0 + 1, y0);
    const float v01 = value(x0, y0 + 1);
    const float v11 = value(x0 + 1, y0 + 1);

    return (1.f - fy) * ((1.f - fx) * v00 + fx * v10) + fy * ((1.f - fx) * v01 + fx * v11);
}

FloatImage warp_by_flow(const FloatImage& map, const FlowField& flow) {
    if (map.width != flow.width || map.height != flow.height)
        throw std::invalid_argument("warp_by_flow: map and flow dimensions differ");

    FloatImage out(map.width, map.height);
    for (int y = 0; y < map.height; ++y) {
        const std::size_t row = static_cast<std::size_t>(y) * map.width;
        for (int x = 0; x < map.width; ++x) {
            out.data[row + x] = bilinear_sample(map,
                                                static_cast<float>(x) + flow.dx[row + x],
                                                static_cast<float>(y) + flow.dy[row + x]);
        }
    }
    return out;
}

} // namespace facetrack
