#include "facetrack/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace facetrack {

namespace {

FloatImage to_float(const Frame& frame) {
    FloatImage img(frame.width, frame.height);
    for (std::size_t i = 0; i < frame.data.size(); ++i)
        img.data[i] = static_cast<float>(frame.data[i]);
    return img;
}

// separable Gaussian with edge replication
FloatImage gaussian_blur(const FloatImage& img, double sigma) {
    if (sigma <= 0.0) return img;
    const int radius = std::max(1, static_cast<int>(std::ceil(sigma * 2.5)));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += kernel[i + radius];
    }
    for (double& k : kernel) k /= sum;

    const int w = img.width, h = img.height;
    FloatImage tmp(w, h), out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * img.at(std::clamp(x + i, 0, w - 1), y);
            tmp.at(x, y) = static_cast<float>(acc);
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * tmp.at(x, std::clamp(y + i, 0, h - 1));
            out.at(x, y) = static_cast<float>(acc);
        }
    return out;
}

// bilinear resize with edge clamp, pixel-center aligned
FloatImage resize_bilinear(const FloatImage& img, int out_w, int out_h) {
    FloatImage out(out_w, out_h);
    const double rx = static_cast<double>(img.width) / out_w;
    const double ry = static_cast<double>(img.height) / out_h;
    for (int y = 0; y < out_h; ++y) {
        const double sy = std::clamp((y + 0.5) * ry - 0.5, 0.0, img.height - 1.0);
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double fy = sy - y0;
        for (int x = 0; x < out_w; ++x) {
            const double sx = std::clamp((x + 0.5) * rx - 0.5, 0.0, img.width - 1.0);
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double fx = sx - x0;
            const double v = (1 - fy) * ((1 - fx) * img.at(x0, y0) + fx * img.at(x1, y0)) +
                             fy * ((1 - fx) * img.at(x0, y1) + fx * img.at(x1, y1));
            out.at(x, y) = static_cast<float>(v);
        }
    }
    return out;
}

// moving box sum over [x-r, x+r] x [y-r, y+r] clamped to the image; columns
// first would work equally, normalization cancels in the 2x2 solve
void box_sum(std::vector<float>& plane, int w, int h, int r, std::vector<float>& scratch) {
    scratch.resize(plane.size());
    for (int y = 0; y < h; ++y) {
        const float* in = plane.data() + static_cast<std::size_t>(y) * w;
        float* out = scratch.data() + static_cast<std::size_t>(y) * w;
        double acc = 0.0;
        for (int x = 0; x <= std::min(r, w - 1); ++x) acc += in[x];
        for (int x = 0; x < w; ++x) {
            out[x] = static_cast<float>(acc);
            const int add = x + r + 1;
            const int sub = x - r;
            if (add < w) acc += in[add];
            if (sub >= 0) acc -= in[sub];
        }
    }
    for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int y = 0; y <= std::min(r, h - 1); ++y)
            acc += scratch[static_cast<std::size_t>(y) * w + x];
        for (int y = 0; y < h; ++y) {
            plane[static_cast<std::size_t>(y) * w + x] = static_cast<float>(acc);
            const int add = y + r + 1;
            const int sub = y - r;
            if (add < h) acc += scratch[static_cast<std::size_t>(add) * w + x];
            if (sub >= 0) acc -= scratch[static_cast<std::size_t>(sub) * w + x];
        }
    }
}

// One least-squares displacement update from a pair of expansions and the
// prior flow. Accumulates G = sum w A^T A and g = sum w A^T db over a box
// window, then solves the 2x2 system per pixel.
void update_flow(const PolyExpansion& r1, const PolyExpansion& r2, FlowField& flow,
                 int window_size) {
    const int w = r1.width, h = r1.height;
    const std::size_t n = static_cast<std::size_t>(w) * h;
    std::vector<float> g11(n), g12(n), g22(n), h1(n), h2(n);

    constexpr int kBorder = 5; // linear downweight of equations near the edge

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const float u0 = flow.dx[i];
            const float v0 = flow.dy[i];

            // averaged quadratic part and b-difference, frame2 sampled at p + d0
            const float qx = static_cast<float>(x) + u0;
            const float qy = static_cast<float>(y) + v0;
            double a11, a12, a22, db1, db2;
            const int x0 = static_cast<int>(std::floor(qx));
            const int y0 = static_cast<int>(std::floor(qy));
            if (x0 >= 0 && y0 >= 0 && x0 + 1 < w && y0 + 1 < h) {
                const float fx = qx - x0, fy = qy - y0;
                const double w00 = (1.0 - fx) * (1.0 - fy), w10 = fx * (1.0 - fy);
                const double w01 = (1.0 - fx) * fy, w11 = fx * fy;
                const std::size_t j = static_cast<std::size_t>(y0) * w + x0;
                auto sample = [&](const std::vector<float>& p) {
                    return w00 * p[j] + w10 * p[j + 1] + w01 * p[j + w] + w11 * p[j + w + 1];
                };
                a11 = 0.5 * (r1.axx[i] + sample(r2.axx));
                a22 = 0.5 * (r1.ayy[i] + sample(r2.ayy));
                a12 = 0.25 * (r1.axy[i] + sample(r2.axy)); // off-diagonal of A
                db1 = -0.5 * (sample(r2.bx) - r1.bx[i]);
                db2 = -0.5 * (sample(r2.by) - r1.by[i]);
            } else {
                // no counterpart in the second frame; vote for the prior
                a11 = r1.axx[i];
                a22 = r1.ayy[i];
                a12 = 0.5 * r1.axy[i];
                db1 = 0.0;
                db2 = 0.0;
            }
            db1 += a11 * u0 + a12 * v0;
            db2 += a12 * u0 + a22 * v0;

            double scale = 1.0;
            const int dist = std::min(std::min(x, y), std::min(w - 1 - x, h - 1 - y));
            if (dist < kBorder) scale = (dist + 1.0) / (kBorder + 1.0);

            g11[i] = static_cast<float>(scale * (a11 * a11 + a12 * a12));
            g12[i] = static_cast<float>(scale * (a12 * (a11 + a22)));
            g22[i] = static_cast<float>(scale * (a12 * a12 + a22 * a22));
            h1[i] = static_cast<float>(scale * (a11 * db1 + a12 * db2));
            h2[i] = static_cast<float>(scale * (a12 * db1 + a22 * db2));
        }
    }

    std::vector<float> scratch;
    const int r = window_size / 2;
    box_sum(g11, w, h, r, scratch);
    box_sum(g12, w, h, r, scratch);
    box_sum(g22, w, h, r, scratch);
    box_sum(h1, w, h, r, scratch);
    box_sum(h2, w, h, r, scratch);

    for (std::size_t i = 0; i < n; ++i) {
        const double det = static_cast<double>(g11[i]) * g22[i] -
                           static_cast<double>(g12[i]) * g12[i];
        if (std::abs(det) > 1e-9) {
            flow.dx[i] = static_cast<float>((g22[i] * static_cast<double>(h1[i]) -
                                             g12[i] * static_cast<double>(h2[i])) / det);
            flow.dy[i] = static_cast<float>((g11[i] * static_cast<double>(h2[i]) -
                                             g12[i] * static_cast<double>(h1[i])) / det);
        }
        // singular window: keep the prior displacement
    }
}

void validate(const FlowParams& p) {
    if (p.pyramid_scale <= 0.0 || p.pyramid_scale >= 1.0)
        throw std::invalid_argument("compute_flow: pyramid_scale must be in (0, 1)");
    if (p.levels < 1) throw std::invalid_argument("compute_flow: levels must be >= 1");
    if (p.window_size < 3 || p.window_size % 2 == 0)
        throw std::invalid_argument("compute_flow: window_size must be odd and >= 3");
    if (p.iterations < 1) throw std::invalid_argument("compute_flow: iterations must be >= 1");
    if (p.poly_n != 5 && p.poly_n != 7)
        throw std::invalid_argument("compute_flow: poly_n must be 5 or 7");
    if (p.poly_sigma <= 0.0) throw std::invalid_argument("compute_flow: poly_sigma must be > 0");
}

} // namespace

PolyExpansion poly_expand(const FloatImage& img, int poly_n, double poly_sigma) {
    if (poly_n != 5 && poly_n != 7)
        throw std::invalid_argument("poly_expand: poly_n must be 5 or 7");
    if (poly_sigma <= 0.0) throw std::invalid_argument("poly_expand: poly_sigma must be > 0");
    if (img.width < poly_n || img.height < poly_n)
        throw std::invalid_argument("poly_expand: image smaller than poly_n");

    const int rad = poly_n / 2;
    std::vector<double> g(2 * rad + 1);
    double sum = 0.0;
    for (int i = -rad; i <= rad; ++i) {
        g[i + rad] = std::exp(-(i * i) / (2.0 * poly_sigma * poly_sigma));
        sum += g[i + rad];
    }
    for (double& v : g) v /= sum;

    // 1-D moments of the normalized weight; the 6x6 normal matrix of the
    // separable basis reduces to these
    double a = 0.0, b = 0.0;
    for (int i = -rad; i <= rad; ++i) {
        a += g[i + rad] * i * i;
        b += g[i + rad] * i * i * i * i;
    }
    const double d = b - a * a;

    const int w = img.width, h = img.height;
    const std::size_t n = static_cast<std::size_t>(w) * h;

    // vertical pass: correlate columns with g, g*y, g*y^2
    std::vector<double> c0(n), c1(n), c2(n);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double m0 = 0, m1 = 0, m2 = 0;
            for (int i = -rad; i <= rad; ++i) {
                const double v = g[i + rad] * img.at(x, std::clamp(y + i, 0, h - 1));
                m0 += v;
                m1 += v * i;
                m2 += v * i * i;
            }
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            c0[idx] = m0;
            c1[idx] = m1;
            c2[idx] = m2;
        }
    }

    PolyExpansion out;
    out.width = w;
    out.height = h;
    out.bx.resize(n);
    out.by.resize(n);
    out.axx.resize(n);
    out.ayy.resize(n);
    out.axy.resize(n);

    // horizontal pass combines with g, g*x, g*x^2 into the six projections
    for (int y = 0; y < h; ++y) {
        const std::size_t row = static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            double m00 = 0, m10 = 0, m20 = 0, m01 = 0, m11 = 0, m02 = 0;
            for (int i = -rad; i <= rad; ++i) {
                const std::size_t idx = row + std::clamp(x + i, 0, w - 1);
                const double gk = g[i + rad];
                m00 += gk * c0[idx];
                m10 += gk * i * c0[idx];
                m20 += gk * i * i * c0[idx];
                m01 += gk * c1[idx];
                m11 += gk * i * c1[idx];
                m02 += gk * c2[idx];
            }
            const std::size_t idx = row + x;
            out.bx[idx] = static_cast<float>(m10 / a);
            out.by[idx] = static_cast<float>(m01 / a);
            out.axy[idx] = static_cast<float>(m11 / (a * a));
            const double s = (m20 + m02 - 2.0 * a * m00) / d;
            const double t = (m20 - m02) / d;
            out.axx[idx] = static_cast<float>(0.5 * (s + t));
            out.ayy[idx] = static_cast<float>(0.5 * (s - t));
        }
    }
    return out;
}

PolyExpansion poly_expand(const Frame& frame, int poly_n, double poly_sigma) {
    return poly_expand(to_float(frame), poly_n, poly_sigma);
}

FlowField compute_flow(const Frame& prev, const Frame& next, const FlowParams& params) {
    if (prev.width != next.width || prev.height != next.height)
        throw std::invalid_argument("compute_flow: frame dimensions differ");
    validate(params);

    const FloatImage img1 = to_float(prev);
    const FloatImage img2 = to_float(next);

    // drop levels that would be smaller than the expansion window allows
    const int min_dim = std::max(8, params.poly_n + 3);
    int levels = 1;
    for (int k = 1; k < params.levels; ++k) {
        const double s = std::pow(params.pyramid_scale, k);
        if (static_cast<int>(std::lround(prev.width * s)) < min_dim ||
            static_cast<int>(std::lround(prev.height * s)) < min_dim)
            break;
        levels = k + 1;
    }

    FlowField flow;
    for (int level = levels - 1; level >= 0; --level) {
        const double s = std::pow(params.pyramid_scale, level);
        const int lw = std::max(min_dim, static_cast<int>(std::lround(prev.width * s)));
        const int lh = std::max(min_dim, static_cast<int>(std::lround(prev.height * s)));

        FloatImage l1, l2;
        if (level == 0) {
            l1 = img1;
            l2 = img2;
        } else {
            const double sigma = (1.0 / s - 1.0) * 0.5;
            l1 = resize_bilinear(gaussian_blur(img1, sigma), lw, lh);
            l2 = resize_bilinear(gaussian_blur(img2, sigma), lw, lh);
        }

        if (flow.width == 0) {
            flow = FlowField(lw, lh);
        } else {
            const double rx = static_cast<double>(lw) / flow.width;
            const double ry = static_cast<double>(lh) / flow.height;
            FloatImage fx, fy;
            fx.width = fy.width = flow.width;
            fx.height = fy.height = flow.height;
            fx.data = std::move(flow.dx);
            fy.data = std::move(flow.dy);
            FloatImage ux = resize_bilinear(fx, lw, lh);
            FloatImage uy = resize_bilinear(fy, lw, lh);
            flow = FlowField(lw, lh);
            for (std::size_t i = 0; i < flow.dx.size(); ++i) {
                flow.dx[i] = static_cast<float>(ux.data[i] * rx);
                flow.dy[i] = static_cast<float>(uy.data[i] * ry);
            }
        }

        const PolyExpansion r1 = poly_expand(l1, params.poly_n, params.poly_sigma);
        const PolyExpansion r2 = poly_expand(l2, params.poly_n, params.poly_sigma);
        for (int it = 0; it < params.iterations; ++it)
            update_flow(r1, r2, flow, params.window_size);
    }
    return flow;
}

} // namespace facetrack
