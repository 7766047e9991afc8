#include "facetrack/cascade.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace facetrack {

namespace {

int iround_away(double v) {
    return static_cast<int>(v >= 0 ? std::floor(v + 0.5) : std::ceil(v - 0.5));
}

// Whitespace-separated token scanner that remembers byte offsets.
class Tokens {
public:
    explicit Tokens(const std::string& text) : text_(text) {}

    std::size_t offset() const { return token_start_; }

    std::string next(const char* what) {
        skip_ws();
        if (pos_ >= text_.size())
            throw ParseError(std::string("unexpected end of input, expected ") + what, pos_);
        token_start_ = pos_;
        std::size_t end = pos_;
        while (end < text_.size() && !std::isspace(static_cast<unsigned char>(text_[end]))) ++end;
        std::string tok = text_.substr(pos_, end - pos_);
        pos_ = end;
        return tok;
    }

    long next_int(const char* what) {
        const std::string tok = next(what);
        long value = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (ec != std::errc() || p != tok.data() + tok.size())
            throw ParseError(std::string("expected integer for ") + what + ", got '" + tok + "'",
                             token_start_);
        return value;
    }

    float next_float(const char* what) {
        const std::string tok = next(what);
        try {
            std::size_t used = 0;
            float value = std::stof(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            return value;
        } catch (const std::exception&) {
            throw ParseError(std::string("expected real for ") + what + ", got '" + tok + "'",
                             token_start_);
        }
    }

    void expect(const char* literal) {
        const std::string tok = next(literal);
        if (tok != literal)
            throw ParseError(std::string("expected '") + literal + "', got '" + tok + "'",
                             token_start_);
    }

    bool at_end() {
        skip_ws();
        return pos_ >= text_.size();
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    std::size_t token_start_ = 0;
};

int hex_digit(char c, std::size_t offset) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw ParseError(std::string("invalid hex digit '") + c + "' in LUT", offset);
}

void check_feature_fits(const MBLBPFeature& f, int base_w, int base_h, int stage_index,
                        std::size_t offset) {
    if (f.x < 0 || f.y < 0 || f.block_w < 1 || f.block_h < 1 ||
        f.x + 3 * f.block_w > base_w || f.y + 3 * f.block_h > base_h) {
        std::ostringstream msg;
        msg << "feature rect (" << f.x << "," << f.y << "," << f.block_w << "," << f.block_h
            << ") exceeds base window " << base_w << "x" << base_h << " in stage " << stage_index;
        throw ParseError(msg.str(), offset);
    }
}

} // namespace

CascadeModel parse_native(const std::string& bytes) {
    Tokens t(bytes);
    t.expect("FTCASCADE");
    const long version = t.next_int("format version");
    if (version != 1)
        throw ParseError("unsupported FTCASCADE version " + std::to_string(version), t.offset());

    CascadeModel model;
    model.base_width = static_cast<int>(t.next_int("base window width"));
    model.base_height = static_cast<int>(t.next_int("base window height"));
    const long num_stages = t.next_int("stage count");
    if (model.base_width < 1 || model.base_height < 1 || num_stages < 1)
        throw ParseError("malformed header values", t.offset());

    model.stages.reserve(static_cast<std::size_t>(num_stages));
    for (long s = 0; s < num_stages; ++s) {
        t.expect("STAGE");
        Stage stage;
        const long num_weak = t.next_int("weak classifier count");
        if (num_weak < 1)
            throw ParseError("stage " + std::to_string(s) + " has no weak classifiers", t.offset());
        stage.threshold = t.next_float("stage threshold");
        stage.weak.reserve(static_cast<std::size_t>(num_weak));
        for (long w = 0; w < num_weak; ++w) {
            t.expect("WEAK");
            WeakClassifier wc;
            wc.feature.x = static_cast<int>(t.next_int("feature x"));
            wc.feature.y = static_cast<int>(t.next_int("feature y"));
            wc.feature.block_w = static_cast<int>(t.next_int("feature block width"));
            wc.feature.block_h = static_cast<int>(t.next_int("feature block height"));
            check_feature_fits(wc.feature, model.base_width, model.base_height,
                               static_cast<int>(s), t.offset());
            wc.left_val = t.next_float("left leaf value");
            wc.right_val = t.next_float("right leaf value");

            const std::size_t lut_offset = t.offset();
            const std::string hex = t.next("LUT hex");
            if (hex.size() != 64)
                throw ParseError("LUT must be 64 hex characters, got " +
                                     std::to_string(hex.size()),
                                 lut_offset);
            // bit i lives in nibble i/4, MSB of the nibble first
            for (int i = 0; i < 256; ++i) {
                const int nib = hex_digit(hex[i / 4], lut_offset);
                if ((nib >> (3 - (i & 3))) & 1)
                    wc.lut[i >> 5] |= (1u << (i & 31));
            }
            stage.weak.push_back(std::move(wc));
        }
        model.stages.push_back(std::move(stage));
    }
    if (!t.at_end()) {
        t.next("end of file");
        throw ParseError("trailing data after last stage", t.offset());
    }
    return model;
}

std::string serialize_native(const CascadeModel& model) {
    std::ostringstream out;
    char buf[64];
    auto put_float = [&](float v) {
        std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
        out << buf;
    };

    out << "FTCASCADE 1 " << model.base_width << " " << model.base_height << " "
        << model.stages.size() << "\n";
    for (const Stage& stage : model.stages) {
        out << "STAGE " << stage.weak.size() << " ";
        put_float(stage.threshold);
        out << "\n";
        for (const WeakClassifier& wc : stage.weak) {
            out << "WEAK " << wc.feature.x << " " << wc.feature.y << " " << wc.feature.block_w
                << " " << wc.feature.block_h << " ";
            put_float(wc.left_val);
            out << " ";
            put_float(wc.right_val);
            out << " ";
            for (int n = 0; n < 64; ++n) {
                int nib = 0;
                for (int b = 0; b < 4; ++b) {
                    const int i = n * 4 + b;
                    if (wc.lut_bit(i)) nib |= 1 << (3 - b);
                }
                out << "0123456789abcdef"[nib];
            }
            out << "\n";
        }
    }
    return out.str();
}

CascadeModel load_cascade_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open cascade file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    if (text.rfind("FTCASCADE", 0) == 0) return parse_native(text);
    return parse_standard_xml(text);
}

MBLBPFeature scale_feature(const MBLBPFeature& f, double scale, int window_w, int window_h) {
    MBLBPFeature s;
    s.block_w = std::max(1, iround_away(f.block_w * scale));
    s.block_h = std::max(1, iround_away(f.block_h * scale));
    // rounding can push the grid past the window edge; clamp position (and, as
    // a last resort, the block size) so it stays inside
    if (3 * s.block_w > window_w) s.block_w = std::max(1, window_w / 3);
    if (3 * s.block_h > window_h) s.block_h = std::max(1, window_h / 3);
    s.x = std::clamp(iround_away(f.x * scale), 0, window_w - 3 * s.block_w);
    s.y = std::clamp(iround_away(f.y * scale), 0, window_h - 3 * s.block_h);
    return s;
}

int lbp_code(const IntegralImage& ii, const MBLBPFeature& scaled, int ox, int oy) {
    const int bw = scaled.block_w;
    const int bh = scaled.block_h;
    const int x0 = ox + scaled.x;
    const int y0 = oy + scaled.y;

    // 4x4 lattice of integral values covering the 3x3 block grid
    std::uint64_t s[4][4];
    for (int gy = 0; gy < 4; ++gy)
        for (int gx = 0; gx < 4; ++gx)
            s[gy][gx] = ii.at(x0 + gx * bw, y0 + gy * bh);

    auto block = [&](int bx, int by) -> std::uint64_t {
        return s[by + 1][bx + 1] - s[by][bx + 1] - s[by + 1][bx] + s[by][bx];
    };

    const std::uint64_t center = block(1, 1);
    int code = 0;
    if (block(0, 0) >= center) code |= 0x80; // top-left
    if (block(1, 0) >= center) code |= 0x40; // top-center
    if (block(2, 0) >= center) code |= 0x20; // top-right
    if (block(2, 1) >= center) code |= 0x10; // middle-right
    if (block(2, 2) >= center) code |= 0x08; // bottom-right
    if (block(1, 2) >= center) code |= 0x04; // bottom-center
    if (block(0, 2) >= center) code |= 0x02; // bottom-left
    if (block(0, 1) >= center) code |= 0x01; // middle-left
    return code;
}

int evaluate_window(const CascadeModel& model, const IntegralImage& ii, int x, int y,
                    double scale) {
    const int win_w = std::max(1, iround_away(model.base_width * scale));
    const int win_h = std::max(1, iround_away(model.base_height * scale));
    if (x < 0 || y < 0 || x + win_w > ii.width || y + win_h > ii.height)
        throw std::invalid_argument("evaluate_window: window outside image");

    const int n = model.num_stages();
    for (int si = 0; si < n; ++si) {
        const Stage& stage = model.stages[si];
        double sum = 0;
        for (const WeakClassifier& wc : stage.weak) {
            const MBLBPFeature sf = scale_feature(wc.feature, scale, win_w, win_h);
            const int code = lbp_code(ii, sf, x, y);
            sum += wc.lut_bit(code) ? wc.left_val : wc.right_val;
        }
        if (sum < stage.threshold) return si;
    }
    return n;
}

} // namespace facetrack
