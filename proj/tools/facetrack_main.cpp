// facetrack: likelihood-map face tracker with a dense-flow propagation stage,
// plus the classic per-frame cascade detector, an evaluation harness and
// cascade file conversion.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fnmatch.h>
#include <fstream>
#include <iostream>
#include <optional>

#include "facetrack/cascade.hpp"
#include "facetrack/detector.hpp"
#include "facetrack/eval.hpp"
#include "facetrack/image_io.hpp"
#include "facetrack/likelihood.hpp"
#include "facetrack/tracker.hpp"

namespace fs = std::filesystem;
using namespace facetrack;

namespace {

constexpr int kExitBadInput = 2;      // missing cascade or frames
constexpr int kExitBadFrame = 3;      // unreadable frame file
constexpr int kExitFrameMismatch = 4; // eval frame-count mismatch
constexpr int kExitUnsupported = 5;   // non-LBP cascade

struct FrameSource {
    std::vector<fs::path> paths;
};

FrameSource list_frames(const std::string& dir, const std::vector<std::string>& patterns) {
    FrameSource src;
    if (!fs::is_directory(dir)) return src;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        for (const std::string& pat : patterns) {
            if (fnmatch(pat.c_str(), name.c_str(), 0) == 0) {
                src.paths.push_back(entry.path());
                break;
            }
        }
    }
    std::sort(src.paths.begin(), src.paths.end());
    return src;
}

std::optional<CascadeModel> load_model(const std::string& path, int& exit_code) {
    try {
        return load_cascade_file(path);
    } catch (const UnsupportedFeatureError& e) {
        std::cerr << "facetrack: " << e.what() << "\n";
        exit_code = kExitUnsupported;
    } catch (const std::exception& e) {
        std::cerr << "facetrack: cannot load cascade " << path << ": " << e.what() << "\n";
        exit_code = kExitBadInput;
    }
    return std::nullopt;
}

struct Rgb {
    std::uint8_t r, g, b;
};

void put_px(std::vector<std::uint8_t>& img, int w, int h, int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3;
    img[i] = c.r;
    img[i + 1] = c.g;
    img[i + 2] = c.b;
}

void draw_rect(std::vector<std::uint8_t>& img, int w, int h, int x0, int y0, int x1, int y1,
               Rgb c) {
    for (int x = x0; x <= x1; ++x) {
        put_px(img, w, h, x, y0, c);
        put_px(img, w, h, x, y1, c);
    }
    for (int y = y0; y <= y1; ++y) {
        put_px(img, w, h, x0, y, c);
        put_px(img, w, h, x1, y, c);
    }
}

void draw_dot(std::vector<std::uint8_t>& img, int w, int h, int cx, int cy, Rgb c) {
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) put_px(img, w, h, cx + dx, cy + dy, c);
}

void write_annotated(const Frame& frame, const std::vector<DetectionRecord>& dets, bool refreshed,
                     const fs::path& out_path) {
    const int w = frame.width, h = frame.height;
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w) * h * 3);
    for (std::size_t i = 0; i < frame.data.size(); ++i)
        rgb[i * 3] = rgb[i * 3 + 1] = rgb[i * 3 + 2] = frame.data[i];

    for (const DetectionRecord& d : dets) {
        const int x0 = static_cast<int>(std::lround(d.cx - d.w / 2.0));
        const int y0 = static_cast<int>(std::lround(d.cy - d.h / 2.0));
        draw_rect(rgb, w, h, x0, y0, x0 + d.w - 1, y0 + d.h - 1, {0, 255, 0});
        draw_dot(rgb, w, h, static_cast<int>(std::lround(d.cx)),
                 static_cast<int>(std::lround(d.cy)), {255, 0, 0});
    }
    if (refreshed) draw_rect(rgb, w, h, 0, 0, w - 1, h - 1, {255, 255, 255});
    save_png_rgb(w, h, rgb, out_path.string());
}

bool write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    return static_cast<bool>(out);
}

struct RunOptions {
    std::string cascade_path;
    std::string frames_dir;
    std::vector<std::string> patterns{"*.png", "*.pgm"};
    std::string out_path = "detections.txt";
    std::string annotate_dir;
    std::string timings_path;
    std::string dump_flow_dir;
    std::string dump_map_dir;
    TrackerConfig tracker;
    int min_neighbors = 3;
};

void add_scan_flags(CLI::App* cmd, RunOptions& opt) {
    cmd->add_option("--cascade", opt.cascade_path, "cascade file (FTCASCADE or OpenCV LBP XML)")
        ->required();
    cmd->add_option("--frames", opt.frames_dir, "directory holding the frame images")->required();
    cmd->add_option("--pattern", opt.patterns, "frame filename patterns (default: *.png *.pgm)");
    cmd->add_option("--scale-factor", opt.tracker.scan.scale_factor, "scan scale ratio");
    cmd->add_option("--step", opt.tracker.scan.step_fraction,
                    "scan step as a fraction of the window width");
}

int run_session(const RunOptions& opt, bool classic_mode, bool bench_only) {
    int exit_code = 0;
    auto model = load_model(opt.cascade_path, exit_code);
    if (!model) return exit_code;

    const FrameSource frames = list_frames(opt.frames_dir, opt.patterns);
    if (frames.paths.empty()) {
        std::cerr << "facetrack: no frames in '" << opt.frames_dir << "' match the pattern(s)\n";
        return kExitBadInput;
    }

    if (classic_mode) {
        std::printf("facetrack classic: min_neighbors=%d scale_factor=%g step=%g frames=%zu\n",
                    opt.min_neighbors, opt.tracker.scan.scale_factor,
                    opt.tracker.scan.step_fraction, frames.paths.size());
    } else {
        std::printf("facetrack %s: n=%d alpha=%g tau=%d shrink=%g c=%g scale_factor=%g step=%g "
                    "frames=%zu\n",
                    bench_only ? "bench" : "track", opt.tracker.refresh_interval,
                    opt.tracker.alpha, opt.tracker.tau, opt.tracker.shrink,
                    opt.tracker.threshold_c, opt.tracker.scan.scale_factor,
                    opt.tracker.scan.step_fraction, frames.paths.size());
    }

    std::optional<Tracker> tracker;
    if (!classic_mode) tracker.emplace(*model, opt.tracker);

    std::vector<std::vector<DetectionRecord>> all_dets;
    std::vector<FrameTimings> all_timings;
    std::vector<bool> refreshed_flags;
    double wall_ms = 0;

    for (std::size_t i = 0; i < frames.paths.size(); ++i) {
        Frame frame;
        try {
            frame = load_frame(frames.paths[i].string());
        } catch (const std::exception& e) {
            std::cerr << "facetrack: cannot read frame " << frames.paths[i] << ": " << e.what()
                      << "\n";
            return kExitBadFrame;
        }

        std::vector<DetectionRecord> dets;
        bool refreshed = false;
        const auto t0 = std::chrono::steady_clock::now();
        if (classic_mode) {
            const auto faces = classic_detect(*model, frame, opt.tracker.scan, opt.min_neighbors);
            FrameTimings t;
            t.detect_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
            all_timings.push_back(t);
            for (const FaceRect& f : faces)
                dets.push_back({f.x + f.width / 2.0, f.y + f.height / 2.0, f.width, f.height,
                                static_cast<double>(f.neighbors)});
        } else {
            const FrameResult result = tracker->step(frame);
            all_timings.push_back(result.timings);
            refreshed = result.refreshed;
            for (const FaceBox& f : result.faces)
                dets.push_back({f.center_x, f.center_y, f.width, f.height,
                                static_cast<double>(f.peak)});
            if (!opt.dump_flow_dir.empty() && tracker->last_flow()) {
                char name[32];
                std::snprintf(name, sizeof name, "flow_%05zu.flo", i);
                save_flow(*tracker->last_flow(), (fs::path(opt.dump_flow_dir) / name).string());
            }
            if (!opt.dump_map_dir.empty() && tracker->map()) {
                char name[32];
                std::snprintf(name, sizeof name, "map_%05zu.pgm", i);
                save_map_pgm(*tracker->map(), (fs::path(opt.dump_map_dir) / name).string());
            }
        }
        wall_ms +=
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        refreshed_flags.push_back(refreshed);
        all_dets.push_back(dets);

        if (!opt.annotate_dir.empty()) {
            fs::create_directories(opt.annotate_dir);
            const fs::path out =
                fs::path(opt.annotate_dir) / (frames.paths[i].stem().string() + ".png");
            write_annotated(frame, dets, refreshed, out);
        }
    }

    const double n = static_cast<double>(frames.paths.size());
    double mean_flow = 0, mean_detect = 0, mean_other = 0;
    for (const FrameTimings& t : all_timings) {
        mean_flow += t.flow_ms / n;
        mean_detect += t.detect_ms / n;
        mean_other += t.other_ms / n;
    }

    if (bench_only) {
        std::printf("frames %zu\n", frames.paths.size());
        std::printf("mean_flow_ms %.3f\n", mean_flow);
        std::printf("mean_detect_ms %.3f\n", mean_detect);
        std::printf("mean_other_ms %.3f\n", mean_other);
        std::printf("mean_total_ms %.3f\n", mean_flow + mean_detect + mean_other);
        std::printf("mean_wall_ms %.3f\n", wall_ms / n);
        return 0;
    }

    if (!write_text_file(opt.out_path, format_detections(all_dets))) {
        std::cerr << "facetrack: cannot write " << opt.out_path << "\n";
        return kExitBadInput;
    }

    const std::string timings_path =
        opt.timings_path.empty() ? opt.out_path + ".timings" : opt.timings_path;
    std::ostringstream tbuf;
    tbuf << "# frame flow_ms detect_ms other_ms refreshed\n";
    for (std::size_t i = 0; i < all_timings.size(); ++i) {
        char line[160];
        std::snprintf(line, sizeof line, "%zu %.3f %.3f %.3f %d\n", i, all_timings[i].flow_ms,
                      all_timings[i].detect_ms, all_timings[i].other_ms,
                      refreshed_flags[i] ? 1 : 0);
        tbuf << line;
    }
    if (!write_text_file(timings_path, tbuf.str())) {
        std::cerr << "facetrack: cannot write " << timings_path << "\n";
        return kExitBadInput;
    }

    std::printf("wrote %s (%zu frames), timings in %s\n", opt.out_path.c_str(),
                frames.paths.size(), timings_path.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Likelihood-map face tracker and evaluation harness"};
    app.require_subcommand(1);

    RunOptions track_opt;
    CLI::App* track = app.add_subcommand("track", "run the flow-propagated tracker");
    add_scan_flags(track, track_opt);
    track->add_option("--out", track_opt.out_path, "detections output file");
    track->add_option("--annotate-dir", track_opt.annotate_dir, "write annotated PNG frames here");
    track->add_option("--n", track_opt.tracker.refresh_interval, "frames between refreshes");
    track->add_option("--alpha", track_opt.tracker.alpha, "blend weight of the warped map");
    track->add_option("--tau", track_opt.tracker.tau, "reject-level gate");
    track->add_option("--shrink", track_opt.tracker.shrink, "window shrink factor");
    track->add_option("--c", track_opt.tracker.threshold_c, "binarization threshold");
    track->add_option("--timings-out", track_opt.timings_path, "timings output file");
    track->add_option("--dump-flow-dir", track_opt.dump_flow_dir, "dump per-frame flow fields");
    track->add_option("--dump-map-dir", track_opt.dump_map_dir, "dump per-frame likelihood maps");

    RunOptions classic_opt;
    CLI::App* classic = app.add_subcommand("classic", "per-frame full-cascade baseline");
    add_scan_flags(classic, classic_opt);
    classic->add_option("--out", classic_opt.out_path, "detections output file");
    classic->add_option("--annotate-dir", classic_opt.annotate_dir,
                        "write annotated PNG frames here");
    classic->add_option("--min-neighbors", classic_opt.min_neighbors,
                        "grouping threshold for accepted windows");

    std::string eval_detections, eval_gt, eval_report, eval_json;
    double match_px = 20.0, gt_offset_y = 10.0;
    CLI::App* evalc = app.add_subcommand("eval", "score detections against ground truth");
    evalc->add_option("detections", eval_detections, "detections interchange file")->required();
    evalc->add_option("gt", eval_gt, "ground truth file (frameIndex x1 y1 x2 y2)")->required();
    evalc->add_option("--match-px", match_px, "valid-detection radius in pixels");
    evalc->add_option("--gt-offset-y", gt_offset_y, "vertical face-center offset from the eyes");
    evalc->add_option("--report", eval_report, "also write the text report here");
    evalc->add_option("--json", eval_json, "also write the report as JSON here");

    std::string convert_in, convert_out;
    CLI::App* convert = app.add_subcommand("convert", "OpenCV LBP XML -> native FTCASCADE");
    convert->add_option("xml", convert_in, "input cascade XML")->required();
    convert->add_option("native", convert_out, "output native cascade")->required();

    RunOptions bench_opt;
    CLI::App* bench = app.add_subcommand("bench", "per-frame timing split of the tracker");
    add_scan_flags(bench, bench_opt);
    bench->add_option("--n", bench_opt.tracker.refresh_interval, "frames between refreshes");
    bench->add_option("--alpha", bench_opt.tracker.alpha, "blend weight of the warped map");
    bench->add_option("--tau", bench_opt.tracker.tau, "reject-level gate");
    bench->add_option("--shrink", bench_opt.tracker.shrink, "window shrink factor");
    bench->add_option("--c", bench_opt.tracker.threshold_c, "binarization threshold");

    CLI11_PARSE(app, argc, argv);

    try {
        if (track->parsed()) return run_session(track_opt, false, false);
        if (classic->parsed()) return run_session(classic_opt, true, false);
        if (bench->parsed()) return run_session(bench_opt, false, true);

        if (convert->parsed()) {
            std::ifstream in(convert_in, std::ios::binary);
            if (!in) {
                std::cerr << "facetrack: cannot open " << convert_in << "\n";
                return kExitBadInput;
            }
            std::ostringstream buf;
            buf << in.rdbuf();
            CascadeModel model;
            try {
                model = parse_standard_xml(buf.str());
            } catch (const UnsupportedFeatureError& e) {
                std::cerr << "facetrack: " << e.what() << "\n";
                return kExitUnsupported;
            }
            if (!write_text_file(convert_out, serialize_native(model))) {
                std::cerr << "facetrack: cannot write " << convert_out << "\n";
                return kExitBadInput;
            }
            std::printf("wrote %s (%d stages, base window %dx%d)\n", convert_out.c_str(),
                        model.num_stages(), model.base_width, model.base_height);
            return 0;
        }

        if (evalc->parsed()) {
            std::vector<std::vector<DetectionRecord>> det_frames;
            std::vector<GroundTruthRecord> gt_records;
            try {
                det_frames = load_detections(eval_detections);
                gt_records = load_ground_truth(eval_gt);
            } catch (const std::exception& e) {
                std::cerr << "facetrack: " << e.what() << "\n";
                return kExitBadInput;
            }
            if (det_frames.size() != gt_records.size()) {
                std::cerr << "facetrack: frame count mismatch: " << det_frames.size()
                          << " detection lines vs " << gt_records.size()
                          << " ground truth records\n";
                return kExitFrameMismatch;
            }

            std::vector<std::vector<FaceCenter>> centers(det_frames.size());
            std::vector<std::optional<FaceCenter>> gt_centers(det_frames.size());
            for (std::size_t i = 0; i < det_frames.size(); ++i) {
                for (const DetectionRecord& d : det_frames[i])
                    centers[i].push_back({d.cx, d.cy});
                gt_centers[i] = gt_face_center(gt_records[i], gt_offset_y);
            }

            const MetricsReport report = evaluate(centers, gt_centers, {}, match_px);
            const std::string text = format_report(report);
            std::fputs(text.c_str(), stdout);
            if (!eval_report.empty() && !write_text_file(eval_report, text)) {
                std::cerr << "facetrack: cannot write " << eval_report << "\n";
                return kExitBadInput;
            }
            if (!eval_json.empty() && !write_text_file(eval_json, format_report_json(report))) {
                std::cerr << "facetrack: cannot write " << eval_json << "\n";
                return kExitBadInput;
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "facetrack: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
