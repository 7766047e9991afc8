#pragma once

#include <stdexcept>
#include <string>

#include "facetrack/image.hpp"

namespace facetrack {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Loads an 8-bit grayscale or RGB image (PNG or binary PGM). RGB input is
// converted with the integer luma y = (299*r + 587*g + 114*b + 500) / 1000.
Frame load_frame(const std::string& path);

void save_pgm(const Frame& frame, const std::string& path);
void save_png_gray(const Frame& frame, const std::string& path);
void save_png_rgb(int width, int height, const std::vector<std::uint8_t>& rgb,
                  const std::string& path);

// Debug dump of a float map as 8-bit PGM, [0, max] rescaled to [0, 255].
void save_map_pgm(const FloatImage& map, const std::string& path);

// Little-endian flow dump: magic "FLOW", u32 width, u32 height, then
// width*height (f32 dx, f32 dy) pairs row-major.
void save_flow(const FlowField& flow, const std::string& path);
FlowField load_flow(const std::string& path);

} // namespace facetrack
