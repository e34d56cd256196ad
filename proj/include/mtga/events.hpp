#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mtga/binio.hpp"
#include "mtga/errors.hpp"

namespace mtga {

inline constexpr std::uint16_t kEvsVersion = 1;

// One sensor event: microsecond timestamp, pixel coordinates, polarity (+1 / -1).
struct Event {
    std::uint64_t t = 0;
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    std::int8_t p = 1;

    friend bool operator==(const Event&, const Event&) = default;
};

struct SensorGeometry {
    std::uint16_t width = 128;
    std::uint16_t height = 128;

    friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

// Time-sorted event sequence together with the sensor extent it was captured on.
// Immutable after construction; readers may share it freely across threads.
struct EventStream {
    SensorGeometry geometry;
    std::vector<Event> events;

    friend bool operator==(const EventStream&, const EventStream&) = default;
};

enum class StreamFormat { binary, csv };

namespace detail {

inline void validate_event(const Event& e, const SensorGeometry& g, std::size_t index) {
    if (e.p != 1 && e.p != -1) {
        throw ValidationError("record " + std::to_string(index) + ": polarity " +
                              std::to_string(static_cast<int>(e.p)) + " is not +1/-1");
    }
    if (e.x >= g.width || e.y >= g.height) {
        throw ValidationError("record " + std::to_string(index) + ": coordinate (" +
                              std::to_string(e.x) + "," + std::to_string(e.y) + ") outside " +
                              std::to_string(g.width) + "x" + std::to_string(g.height));
    }
}

inline void validate_geometry(const SensorGeometry& g) {
    if (g.width < 1 || g.height < 1) {
        throw ValidationError("sensor geometry must be at least 1x1");
    }
}

// Sorts in place (stable, so same-timestamp events keep file order) and validates
// every record against the geometry.
inline void finalize_stream(EventStream& s) {
    validate_geometry(s.geometry);
    std::stable_sort(s.events.begin(), s.events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
    for (std::size_t i = 0; i < s.events.size(); ++i) validate_event(s.events[i], s.geometry, i);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// EVS1 binary format.
//
// Header (24 bytes): magic "EVS1" | u16 version=1 | u16 width | u16 height |
// u16 reserved=0 | 4 pad bytes | u64 count.  The pad keeps the count (and the
// record array) 8-byte aligned so a mapped file can be scanned in place.
// Records (14 bytes, packed): u64 t_us | u16 x | u16 y | i8 p | u8 pad=0.
// ---------------------------------------------------------------------------

inline constexpr std::size_t kEvsHeaderBytes = 24;
inline constexpr std::size_t kEvsRecordBytes = 14;

inline std::string encode_stream_binary(const EventStream& s) {
    std::string out;
    out.reserve(kEvsHeaderBytes + kEvsRecordBytes * s.events.size());
    out.append("EVS1");
    binio::put_u16(out, kEvsVersion);
    binio::put_u16(out, s.geometry.width);
    binio::put_u16(out, s.geometry.height);
    binio::put_u16(out, 0);  // reserved
    binio::put_u32(out, 0);  // alignment pad
    binio::put_u64(out, s.events.size());
    for (const Event& e : s.events) {
        binio::put_u64(out, e.t);
        binio::put_u16(out, e.x);
        binio::put_u16(out, e.y);
        out.push_back(static_cast<char>(e.p));
        out.push_back('\0');
    }
    return out;
}

inline EventStream decode_stream_binary(const std::uint8_t* data, std::size_t size,
                                        const std::string& source) {
    binio::Reader r(data, size, source);
    char magic[4];
    r.bytes(magic, 4);
    if (std::string_view(magic, 4) != "EVS1") throw FormatError(source + ": bad magic, expected EVS1");
    std::uint16_t version = r.u16();
    if (version != kEvsVersion) {
        throw FormatError(source + ": unsupported EVS version " + std::to_string(version));
    }
    EventStream s;
    s.geometry.width = r.u16();
    s.geometry.height = r.u16();
    r.u16();  // reserved
    r.u32();  // pad
    std::uint64_t count = r.u64();
    if (r.remaining() != count * kEvsRecordBytes) {
        throw FormatError(source + ": payload holds " + std::to_string(r.remaining()) +
                          " bytes, header promises " + std::to_string(count * kEvsRecordBytes));
    }
    s.events.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        Event& e = s.events[i];
        e.t = r.u64();
        e.x = r.u16();
        e.y = r.u16();
        e.p = static_cast<std::int8_t>(r.u8());
        r.u8();  // record pad
    }
    detail::finalize_stream(s);
    return s;
}

// ---------------------------------------------------------------------------
// CSV format: header line "t_us,x,y,p", one decimal-integer record per line.
// CSV carries no geometry, so the caller supplies it.
// ---------------------------------------------------------------------------

inline std::string encode_stream_csv(const EventStream& s) {
    std::string out = "t_us,x,y,p\n";
    for (const Event& e : s.events) {
        out += std::to_string(e.t) + ',' + std::to_string(e.x) + ',' + std::to_string(e.y) + ',' +
               std::to_string(static_cast<int>(e.p)) + '\n';
    }
    return out;
}

namespace detail {

inline long long parse_int_field(const std::string& field, std::size_t line, const std::string& source) {
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(field, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != field.size()) {
        throw FormatError(source + ": line " + std::to_string(line) + ": '" + field +
                          "' is not a decimal integer");
    }
    return v;
}

}  // namespace detail

inline EventStream decode_stream_csv(const std::string& text, SensorGeometry geometry,
                                     const std::string& source) {
    EventStream s;
    s.geometry = geometry;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw FormatError(source + ": empty file, expected t_us,x,y,p header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t_us,x,y,p") throw FormatError(source + ": bad header '" + line + "'");
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::string fields[4];
        std::size_t start = 0;
        int nf = 0;
        for (; nf < 4; ++nf) {
            std::size_t comma = line.find(',', start);
            if (comma == std::string::npos) {
                fields[nf] = line.substr(start);
                start = std::string::npos;
                ++nf;
                break;
            }
            fields[nf] = line.substr(start, comma - start);
            start = comma + 1;
        }
        if (nf != 4 || start != std::string::npos) {
            throw FormatError(source + ": line " + std::to_string(line_no) + ": expected 4 fields");
        }
        long long t = detail::parse_int_field(fields[0], line_no, source);
        long long x = detail::parse_int_field(fields[1], line_no, source);
        long long y = detail::parse_int_field(fields[2], line_no, source);
        long long p = detail::parse_int_field(fields[3], line_no, source);
        if (t < 0) throw ValidationError("record " + std::to_string(line_no - 2) + ": negative timestamp");
        if (x < 0 || y < 0 || x > 0xffff || y > 0xffff) {
            throw ValidationError("record " + std::to_string(line_no - 2) + ": coordinate out of range");
        }
        if (p != 1 && p != -1) {
            throw ValidationError("record " + std::to_string(line_no - 2) + ": polarity " +
                                  std::to_string(p) + " is not +1/-1");
        }
        s.events.push_back(Event{static_cast<std::uint64_t>(t), static_cast<std::uint16_t>(x),
                                 static_cast<std::uint16_t>(y), static_cast<std::int8_t>(p)});
    }
    detail::finalize_stream(s);
    return s;
}

// Reads a stream from disk, sorting out-of-order records and validating every
// event.  `csv_geometry` supplies the sensor extent for the geometry-less CSV
// format; it is ignored for binary files.
inline EventStream read_stream(const std::string& path, StreamFormat format,
                               SensorGeometry csv_geometry = SensorGeometry{}) {
    std::vector<std::uint8_t> raw = binio::read_file(path);
    if (format == StreamFormat::binary) return decode_stream_binary(raw.data(), raw.size(), path);
    return decode_stream_csv(std::string(raw.begin(), raw.end()), csv_geometry, path);
}

inline void write_stream(const EventStream& s, const std::string& path, StreamFormat format) {
    detail::validate_geometry(s.geometry);
    binio::write_file(path, format == StreamFormat::binary ? encode_stream_binary(s)
                                                           : encode_stream_csv(s));
}

// ---------------------------------------------------------------------------
// Synthetic stream generator.
//
// The pattern is an elliptical contour whose radius oscillates at a
// class-dependent frequency, over a uniform background of noise events.
// Polarity of a contour event follows the sign of the radial velocity.
// Deterministic for a fixed (spec, seed) pair.
// ---------------------------------------------------------------------------

struct SyntheticSpec {
    SensorGeometry geometry{128, 128};
    int class_id = 0;
    double duration_ms = 500.0;
    double pattern_rate_hz = 20000.0;  // contour events per second
    double noise_rate_hz = 2000.0;     // background events per second
    double base_freq_hz = 2.0;         // oscillation frequency of class 0
    double radius_x = 0.0;             // 0 means "quarter of width"
    double radius_y = 0.0;             // 0 means "sixth of height"
};

namespace detail {

// mt19937_64 output mapped to [0,1) by hand; the standard distributions are
// not bit-stable across library implementations.
inline double unit_double(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

inline EventStream generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    detail::validate_geometry(spec.geometry);
    if (!(spec.duration_ms > 0)) throw ParameterError("duration_ms must be positive");
    if (spec.pattern_rate_hz < 0 || spec.noise_rate_hz < 0) {
        throw ParameterError("event rates must be non-negative");
    }
    if (spec.class_id < 0) throw ParameterError("class_id must be non-negative");

    const double w = spec.geometry.width;
    const double h = spec.geometry.height;
    const double rx = spec.radius_x > 0 ? spec.radius_x : w / 4.0;
    const double ry = spec.radius_y > 0 ? spec.radius_y : h / 6.0;
    if (spec.pattern_rate_hz > 0 && (rx <= 0 || ry <= 0)) {
        throw ParameterError("pattern ellipse has zero area");
    }

    const double duration_s = spec.duration_ms / 1000.0;
    const std::uint64_t duration_us = static_cast<std::uint64_t>(std::llround(spec.duration_ms * 1000.0));
    const double freq = spec.base_freq_hz * (1.0 + spec.class_id);
    const double cx = w / 2.0;
    const double cy = h / 2.0;

    std::mt19937_64 rng(seed);
    EventStream s;
    s.geometry = spec.geometry;

    const auto n_pattern = static_cast<std::uint64_t>(std::llround(spec.pattern_rate_hz * duration_s));
    const auto n_noise = static_cast<std::uint64_t>(std::llround(spec.noise_rate_hz * duration_s));
    s.events.reserve(n_pattern + n_noise);

    const double two_pi = 6.283185307179586476925286766559;
    for (std::uint64_t i = 0; i < n_pattern; ++i) {
        const double u_t = detail::unit_double(rng);
        const double theta = two_pi * detail::unit_double(rng);
        const double t_s = u_t * duration_s;
        const double phase = two_pi * freq * t_s;
        const double scale = 1.0 + 0.4 * std::sin(phase);
        const double px = cx + rx * scale * std::cos(theta);
        const double py = cy + ry * scale * std::sin(theta);
        const auto x = static_cast<long long>(std::llround(px));
        const auto y = static_cast<long long>(std::llround(py));
        if (x < 0 || y < 0 || x >= spec.geometry.width || y >= spec.geometry.height) continue;
        Event e;
        e.t = static_cast<std::uint64_t>(u_t * static_cast<double>(duration_us));
        e.x = static_cast<std::uint16_t>(x);
        e.y = static_cast<std::uint16_t>(y);
        e.p = std::cos(phase) >= 0 ? std::int8_t{1} : std::int8_t{-1};
        s.events.push_back(e);
    }
    for (std::uint64_t i = 0; i < n_noise; ++i) {
        Event e;
        e.t = static_cast<std::uint64_t>(detail::unit_double(rng) * static_cast<double>(duration_us));
        e.x = static_cast<std::uint16_t>(detail::unit_double(rng) * w);
        e.y = static_cast<std::uint16_t>(detail::unit_double(rng) * h);
        e.p = (rng() & 1) ? std::int8_t{1} : std::int8_t{-1};
        s.events.push_back(e);
    }
    detail::finalize_stream(s);
    return s;
}

}  // namespace mtga
