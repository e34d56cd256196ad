#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "mtga/binio.hpp"
#include "mtga/errors.hpp"
#include "mtga/events.hpp"

namespace mtga {

inline constexpr std::uint16_t kEfrVersion = 1;

struct FrameConfig {
    int bins = 60;
    SensorGeometry geometry{128, 128};
    // Off by default: polarities are summed with sign into one channel.  When
    // set, channel 0 accumulates positive weights and channel 1 negative ones.
    bool split_polarity = false;
};

// T x C x H x W polarity-weighted raster.  Accumulated in double; the EFR1
// file stores 32-bit reals.
struct EventFrameTensor {
    int bins = 0;
    int channels = 1;
    int height = 0;
    int width = 0;
    std::uint64_t t_start = 0;
    std::uint64_t t_end = 0;
    std::vector<double> data;  // ((t*C + c)*H + y)*W + x

    double& at(int t, int c, int y, int x) {
        return data[((static_cast<std::size_t>(t) * channels + c) * height + y) * width + x];
    }
    double at(int t, int c, int y, int x) const {
        return data[((static_cast<std::size_t>(t) * channels + c) * height + y) * width + x];
    }
};

namespace detail {

inline void validate_frame_config(const FrameConfig& cfg) {
    if (cfg.bins < 2) throw ConfigError("frame bins must be >= 2, got " + std::to_string(cfg.bins));
    validate_geometry(cfg.geometry);
}

// Normalized timestamp in [0, T-1].  The subtraction stays in integer space so
// shifting every timestamp by a constant reproduces the exact same double.
inline double normalized_time(std::uint64_t t, std::uint64_t t0, std::uint64_t t1, int bins) {
    if (t1 == t0) return 0.0;
    return static_cast<double>(bins - 1) * (static_cast<double>(t - t0) / static_cast<double>(t1 - t0));
}

inline void accumulate_bilinear(const FrameConfig& cfg, const Event& e, std::uint64_t t0,
                                std::uint64_t t1, std::vector<double>& buf) {
    const int T = cfg.bins;
    const int H = cfg.geometry.height;
    const int W = cfg.geometry.width;
    const int C = cfg.split_polarity ? 2 : 1;
    const double ts = normalized_time(e.t, t0, t1, T);
    const int b0 = static_cast<int>(ts);  // ts >= 0, so truncation == floor
    const double w1 = ts - b0;
    const double w0 = 1.0 - w1;
    const int c = (cfg.split_polarity && e.p < 0) ? 1 : 0;
    const double v = cfg.split_polarity ? 1.0 : static_cast<double>(e.p);
    const std::size_t pix = static_cast<std::size_t>(e.y) * W + e.x;
    buf[(static_cast<std::size_t>(b0) * C + c) * H * W + pix] += v * w0;
    if (b0 + 1 < T && w1 > 0.0) {
        buf[(static_cast<std::size_t>(b0 + 1) * C + c) * H * W + pix] += v * w1;
    }
}

}  // namespace detail

// Bins a stream into T frames with temporal bilinear weighting: each event
// splits its polarity between the two bins bracketing its normalized time.
// A stream whose events all share one timestamp lands fully in bin 0.
// With threads > 1, workers fill private buffers over disjoint event ranges
// and the buffers are reduced in worker order, so a given thread count is
// deterministic and any two thread counts agree within accumulation jitter.
inline EventFrameTensor build_frames(const EventStream& stream, const FrameConfig& cfg,
                                     int threads = 1) {
    detail::validate_frame_config(cfg);
    if (stream.geometry.width > cfg.geometry.width || stream.geometry.height > cfg.geometry.height) {
        throw ConfigError("stream geometry " + std::to_string(stream.geometry.width) + "x" +
                          std::to_string(stream.geometry.height) + " exceeds frame geometry " +
                          std::to_string(cfg.geometry.width) + "x" + std::to_string(cfg.geometry.height));
    }

    EventFrameTensor out;
    out.bins = cfg.bins;
    out.channels = cfg.split_polarity ? 2 : 1;
    out.height = cfg.geometry.height;
    out.width = cfg.geometry.width;
    const std::size_t total =
        static_cast<std::size_t>(cfg.bins) * out.channels * out.height * out.width;
    out.data.assign(total, 0.0);
    if (stream.events.empty()) return out;

    const std::uint64_t t0 = stream.events.front().t;
    const std::uint64_t t1 = stream.events.back().t;
    out.t_start = t0;
    out.t_end = t1;

    const std::size_t n = stream.events.size();
    if (threads <= 1 || n < 4096) {
        for (const Event& e : stream.events) detail::accumulate_bilinear(cfg, e, t0, t1, out.data);
        return out;
    }

    const int nw = std::min<int>(threads, static_cast<int>((n + 4095) / 4096));
    std::vector<std::vector<double>> partial(nw, std::vector<double>(total, 0.0));
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (int w = 0; w < nw; ++w) {
        pool.emplace_back([&, w]() {
            const std::size_t lo = n * w / nw;
            const std::size_t hi = n * (w + 1) / nw;
            for (std::size_t i = lo; i < hi; ++i) {
                detail::accumulate_bilinear(cfg, stream.events[i], t0, t1, partial[w]);
            }
        });
    }
    for (auto& th : pool) th.join();
    for (int w = 0; w < nw; ++w) {
        for (std::size_t i = 0; i < total; ++i) out.data[i] += partial[w][i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rendering: one signed frame -> 8-bit binary PGM via min-max normalization.
// A constant frame maps to mid-gray 128.
// ---------------------------------------------------------------------------

inline std::vector<std::uint8_t> normalize_frame_u8(const EventFrameTensor& frames, int index) {
    if (frames.channels != 1) throw ArgumentError("render expects a single-channel frame tensor");
    if (index < 0 || index >= frames.bins) {
        throw ArgumentError("frame index " + std::to_string(index) + " outside [0," +
                            std::to_string(frames.bins) + ")");
    }
    const std::size_t hw = static_cast<std::size_t>(frames.height) * frames.width;
    const double* f = frames.data.data() + static_cast<std::size_t>(index) * hw;
    const auto [mn_it, mx_it] = std::minmax_element(f, f + hw);
    const double mn = *mn_it, mx = *mx_it;
    std::vector<std::uint8_t> img(hw);
    if (mx == mn) {
        std::fill(img.begin(), img.end(), std::uint8_t{128});
        return img;
    }
    for (std::size_t i = 0; i < hw; ++i) {
        img[i] = static_cast<std::uint8_t>(std::lround(255.0 * (f[i] - mn) / (mx - mn)));
    }
    return img;
}

inline void render_frame(const EventFrameTensor& frames, int index, const std::string& path) {
    std::vector<std::uint8_t> img = normalize_frame_u8(frames, index);
    std::string out = "P5\n" + std::to_string(frames.width) + " " + std::to_string(frames.height) +
                      "\n255\n";
    out.append(reinterpret_cast<const char*>(img.data()), img.size());
    binio::write_file(path, out);
}

// ---------------------------------------------------------------------------
// EFR1 file: magic "EFR1" | u16 version=1 | u16 T | u16 H | u16 W | T*H*W f32,
// index ((t*H)+y)*W + x.  Single-channel tensors only.
// ---------------------------------------------------------------------------

inline std::string encode_frames(const EventFrameTensor& frames) {
    if (frames.channels != 1) throw ArgumentError("EFR1 stores single-channel tensors only");
    std::string out = "EFR1";
    binio::put_u16(out, kEfrVersion);
    binio::put_u16(out, static_cast<std::uint16_t>(frames.bins));
    binio::put_u16(out, static_cast<std::uint16_t>(frames.height));
    binio::put_u16(out, static_cast<std::uint16_t>(frames.width));
    for (double v : frames.data) binio::put_f32(out, static_cast<float>(v));
    return out;
}

inline EventFrameTensor decode_frames(const std::uint8_t* data, std::size_t size,
                                      const std::string& source) {
    binio::Reader r(data, size, source);
    char magic[4];
    r.bytes(magic, 4);
    if (std::string_view(magic, 4) != "EFR1") throw FormatError(source + ": bad magic, expected EFR1");
    std::uint16_t version = r.u16();
    if (version != kEfrVersion) {
        throw FormatError(source + ": unsupported EFR version " + std::to_string(version));
    }
    EventFrameTensor f;
    f.bins = r.u16();
    f.height = r.u16();
    f.width = r.u16();
    const std::size_t total = static_cast<std::size_t>(f.bins) * f.height * f.width;
    if (r.remaining() != total * 4) {
        throw FormatError(source + ": payload holds " + std::to_string(r.remaining()) +
                          " bytes, header promises " + std::to_string(total * 4));
    }
    f.data.resize(total);
    for (std::size_t i = 0; i < total; ++i) f.data[i] = r.f32();
    return f;
}

inline void write_frames(const EventFrameTensor& frames, const std::string& path) {
    binio::write_file(path, encode_frames(frames));
}

inline EventFrameTensor read_frames(const std::string& path) {
    std::vector<std::uint8_t> raw = binio::read_file(path);
    return decode_frames(raw.data(), raw.size(), path);
}

}  // namespace mtga
