#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "facetrack/image.hpp"

namespace facetrack {

// Raised by the cascade file readers. offset is a byte offset for the native
// text format; for XML input, `where` carries the element path instead.
struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, std::size_t byte_offset = 0, std::string element = "")
        : std::runtime_error(msg), offset(byte_offset), where(std::move(element)) {}
    std::size_t offset;
    std::string where;
};

struct UnsupportedFeatureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Top-left block of the 3x3 block grid, in base-window coordinates.
// The full feature spans 3*block_w x 3*block_h pixels.
struct MBLBPFeature {
    int x = 0;
    int y = 0;
    int block_w = 1;
    int block_h = 1;
};

// Decision stump on one MB-LBP feature. The LUT holds one bit per 8-bit
// code, packed 32 codes per word: code c -> bit (c & 31) of word (c >> 5).
// A set bit selects left_val, a clear bit right_val.
struct WeakClassifier {
    MBLBPFeature feature;
    std::array<std::uint32_t, 8> lut{};
    float left_val = 0.f;
    float right_val = 0.f;

    bool lut_bit(int code) const { return (lut[code >> 5] >> (code & 31)) & 1u; }
};

struct Stage {
    std::vector<WeakClassifier> weak;
    float threshold = 0.f;
};

struct CascadeModel {
    int base_width = 0;
    int base_height = 0;
    std::vector<Stage> stages;

    int num_stages() const { return static_cast<int>(stages.size()); }
};

// Native text format (FTCASCADE 1). Errors carry the byte offset of the
// offending token.
CascadeModel parse_native(const std::string& bytes);
std::string serialize_native(const CascadeModel& model);

// OpenCV "new format" cascade XML, featureType LBP only. Stage thresholds
// are loaded minus 1e-5, matching the OpenCV loader, so that window verdicts
// agree with it bit for bit.
CascadeModel parse_standard_xml(const std::string& text);

// Convenience: sniffs FTCASCADE vs XML content and reads the file.
CascadeModel load_cascade_file(const std::string& path);

// Multiplies the feature rect by scale (round half away from zero) and nudges
// it so the 3x3 grid stays inside the window_w x window_h scan window.
MBLBPFeature scale_feature(const MBLBPFeature& f, double scale, int window_w, int window_h);

// 8-bit MB-LBP code at offset (ox, oy); bit layout, MSB first:
// top-left, top-center, top-right, middle-right, bottom-right,
// bottom-center, bottom-left, middle-left. Neighbor >= center sets the bit.
// The scaled feature's 3x3 grid must lie inside the integral image.
int lbp_code(const IntegralImage& ii, const MBLBPFeature& scaled, int ox, int oy);

// Number of consecutive stages passed, starting at stage 0, by the window of
// size round(base * scale) whose top-left corner is (x, y). Evaluation stops
// at the first failing stage; num_stages() means full acceptance.
// Throws std::invalid_argument if the window falls outside the image.
int evaluate_window(const CascadeModel& model, const IntegralImage& ii, int x, int y, double scale);

} // namespace facetrack
