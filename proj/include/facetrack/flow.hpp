#pragma once

#include "facetrack/image.hpp"

namespace facetrack {

// Per-pixel quadratic model f(d) ~ c + bx*x + by*y + axx*x^2 + ayy*y^2 + axy*xy
// fitted over a Gaussian-weighted poly_n x poly_n neighborhood. The constant
// term is not kept; displacement estimation does not use it.
struct PolyExpansion {
    int width = 0;
    int height = 0;
    std::vector<float> bx, by, axx, ayy, axy;
};

struct FlowParams {
    double pyramid_scale = 0.5; // size ratio between pyramid levels, in (0, 1)
    int levels = 3;
    int window_size = 15; // box window for the displacement least squares
    int iterations = 3;   // refinement passes per level
    int poly_n = 5;       // expansion neighborhood, 5 or 7
    double poly_sigma = 1.1;
};

PolyExpansion poly_expand(const FloatImage& img, int poly_n, double poly_sigma);
PolyExpansion poly_expand(const Frame& frame, int poly_n, double poly_sigma);

// Dense displacement, coarse to fine: prev(p) ~ next(p + flow(p)).
// Throws std::invalid_argument on dimension mismatch or bad params.
FlowField compute_flow(const Frame& prev, const Frame& next, const FlowParams& params);

} // namespace facetrack
