#include "facetrack/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace facetrack {

namespace {

std::uint8_t luma(int r, int g, int b) {
    return static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

bool has_suffix(const std::string& s, const char* suffix) {
    const std::size_t n = std::strlen(suffix);
    if (s.size() < n) return false;
    std::string tail = s.substr(s.size() - n);
    std::transform(tail.begin(), tail.end(), tail.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return tail == suffix;
}

Frame load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    std::string magic;
    in >> magic;
    if (magic != "P5") throw IoError(path + ": not a binary PGM (P5) file");

    auto next_value = [&](int& out) {
        // skip whitespace and '#' comment lines
        for (;;) {
            int c = in.peek();
            if (c == '#') {
                std::string line;
                std::getline(in, line);
            } else if (std::isspace(c)) {
                in.get();
            } else {
                break;
            }
        }
        if (!(in >> out)) throw IoError(path + ": malformed PGM header");
    };

    int w = 0, h = 0, maxval = 0;
    next_value(w);
    next_value(h);
    next_value(maxval);
    if (w < 1 || h < 1 || maxval != 255) throw IoError(path + ": unsupported PGM header");
    in.get(); // single whitespace after maxval

    Frame frame(w, h);
    in.read(reinterpret_cast<char*>(frame.data.data()), static_cast<std::streamsize>(frame.data.size()));
    if (in.gcount() != static_cast<std::streamsize>(frame.data.size()))
        throw IoError(path + ": truncated PGM data");
    return frame;
}

Frame load_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open " + path);

    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
        throw IoError(path + ": not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError(path + ": libpng init failed");
    }

    std::vector<std::uint8_t> pixels;
    std::vector<png_bytep> rows;
    int w = 0, h = 0, channels = 0;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError(path + ": PNG decode error");
    }

    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    // normalize to 8-bit gray / gray+alpha / rgb / rgba
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_packing(png);
    png_read_update_info(png, info);

    w = static_cast<int>(png_get_image_width(png, info));
    h = static_cast<int>(png_get_image_height(png, info));
    channels = png_get_channels(png, info);
    if (w < 1 || h < 1 || channels < 1 || channels > 4) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError(path + ": unsupported PNG layout");
    }

    pixels.resize(static_cast<std::size_t>(w) * h * channels);
    rows.resize(h);
    for (int y = 0; y < h; ++y)
        rows[y] = pixels.data() + static_cast<std::size_t>(y) * w * channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Frame frame(w, h);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* src = pixels.data() + static_cast<std::size_t>(y) * w * channels;
        for (int x = 0; x < w; ++x) {
            const std::uint8_t* px = src + static_cast<std::size_t>(x) * channels;
            frame.at(x, y) = (channels <= 2) ? px[0] : luma(px[0], px[1], px[2]);
        }
    }
    return frame;
}

void write_png(const std::string& path, int w, int h, int channels, const std::uint8_t* data) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open " + path + " for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError(path + ": libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError(path + ": PNG encode error");
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, w, h, 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < h; ++y)
        png_write_row(png, const_cast<png_bytep>(data + static_cast<std::size_t>(y) * w * channels));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace

Frame load_frame(const std::string& path) {
    if (has_suffix(path, ".pgm")) return load_pgm(path);
    if (has_suffix(path, ".png")) return load_png(path);
    // fall back to content sniffing
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open " + path);
    char head[2] = {0, 0};
    probe.read(head, 2);
    if (head[0] == 'P' && head[1] == '5') return load_pgm(path);
    return load_png(path);
}

void save_pgm(const Frame& frame, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "P5\n" << frame.width << " " << frame.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(frame.data.data()),
              static_cast<std::streamsize>(frame.data.size()));
    if (!out) throw IoError("write failed: " + path);
}

void save_png_gray(const Frame& frame, const std::string& path) {
    write_png(path, frame.width, frame.height, 1, frame.data.data());
}

void save_png_rgb(int width, int height, const std::vector<std::uint8_t>& rgb,
                  const std::string& path) {
    if (rgb.size() != static_cast<std::size_t>(width) * height * 3)
        throw std::invalid_argument("save_png_rgb: buffer size mismatch");
    write_png(path, width, height, 3, rgb.data());
}

void save_map_pgm(const FloatImage& map, const std::string& path) {
    float maxv = 0.f;
    for (float v : map.data) maxv = std::max(maxv, v);
    Frame frame(map.width, map.height);
    if (maxv > 0.f) {
        for (std::size_t i = 0; i < map.data.size(); ++i) {
            float scaled = map.data[i] / maxv * 255.f;
            frame.data[i] = static_cast<std::uint8_t>(std::clamp(scaled + 0.5f, 0.f, 255.f));
        }
    }
    save_pgm(frame, path);
}

void save_flow(const FlowField& flow, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write("FLOW", 4);
    const std::uint32_t w = static_cast<std::uint32_t>(flow.width);
    const std::uint32_t h = static_cast<std::uint32_t>(flow.height);
    out.write(reinterpret_cast<const char*>(&w), 4);
    out.write(reinterpret_cast<const char*>(&h), 4);
    for (std::size_t i = 0; i < flow.dx.size(); ++i) {
        out.write(reinterpret_cast<const char*>(&flow.dx[i]), 4);
        out.write(reinterpret_cast<const char*>(&flow.dy[i]), 4);
    }
    if (!out) throw IoError("write failed: " + path);
}

FlowField load_flow(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, "FLOW", 4) != 0)
        throw IoError(path + ": bad flow file magic");
    std::uint32_t w = 0, h = 0;
    in.read(reinterpret_cast<char*>(&w), 4);
    in.read(reinterpret_cast<char*>(&h), 4);
    if (!in || w == 0 || h == 0) throw IoError(path + ": bad flow file header");
    FlowField flow(static_cast<int>(w), static_cast<int>(h));
    for (std::size_t i = 0; i < flow.dx.size(); ++i) {
        in.read(reinterpret_cast<char*>(&flow.dx[i]), 4);
        in.read(reinterpret_cast<char*>(&flow.dy[i]), 4);
    }
    if (!in) throw IoError(path + ": truncated flow file");
    return flow;
}

} // namespace facetrack
