#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mtga/binio.hpp"
#include "mtga/errors.hpp"
#include "mtga/events.hpp"

namespace mtga {

struct GraphConfig {
    int bins = 60;            // T, shared with the frame view
    int slices_per_bin = 3;   // n
    int voxel_h = 4;
    int voxel_w = 4;
    int top_k = 32;
    int points_per_voxel = 16;  // K
    double radius = 2.0;        // R, in voxel-index units

    friend bool operator==(const GraphConfig&, const GraphConfig&) = default;
};

struct GraphNode {
    // (t_slice, x_vox, y_vox) voxel indices
    std::array<int, 3> coord{0, 0, 0};
    // polarities of the first K events in the voxel, zero-padded
    std::vector<double> feat;

    friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct VoxelGraph {
    std::vector<GraphNode> nodes;
    // both directions stored; weights[e] is the Euclidean distance of edges[e]
    std::vector<std::array<int, 2>> edges;
    std::vector<double> weights;

    friend bool operator==(const VoxelGraph&, const VoxelGraph&) = default;
};

struct VoxelGraphList {
    GraphConfig cfg;
    SensorGeometry geometry;
    std::vector<VoxelGraph> graphs;  // length T; graph i holds slices [n*i, n*i + n)

    friend bool operator==(const VoxelGraphList&, const VoxelGraphList&) = default;
};

// Voxel grid extents for a config/geometry pair.
struct VoxelGrid {
    int slices = 0;  // n*T
    int nx = 0;      // ceil(W / voxel_w)
    int ny = 0;      // ceil(H / voxel_h)

    std::uint64_t key(int slice, int yv, int xv) const {
        return (static_cast<std::uint64_t>(slice) * ny + yv) * nx + xv;
    }
    std::array<int, 3> coord(std::uint64_t key) const {
        const int xv = static_cast<int>(key % nx);
        const int yv = static_cast<int>((key / nx) % ny);
        const int slice = static_cast<int>(key / (static_cast<std::uint64_t>(nx) * ny));
        return {slice, xv, yv};
    }
};

namespace detail {

inline void validate_graph_config(const GraphConfig& cfg) {
    if (cfg.bins < 1) throw ConfigError("graph bins must be >= 1");
    if (cfg.slices_per_bin < 1) throw ConfigError("slices_per_bin must be >= 1");
    if (cfg.voxel_h < 1 || cfg.voxel_w < 1) throw ConfigError("voxel size must be >= 1");
    if (cfg.top_k < 1) throw ConfigError("top_k must be >= 1");
    if (cfg.points_per_voxel < 1) throw ConfigError("points_per_voxel must be >= 1");
    if (!(cfg.radius > 0)) throw ConfigError("radius must be > 0");
}

inline VoxelGrid make_grid(const GraphConfig& cfg, const SensorGeometry& g) {
    VoxelGrid grid;
    grid.slices = cfg.slices_per_bin * cfg.bins;
    grid.nx = (g.width + cfg.voxel_w - 1) / cfg.voxel_w;
    grid.ny = (g.height + cfg.voxel_h - 1) / cfg.voxel_h;
    const double cells = static_cast<double>(grid.slices) * grid.nx * grid.ny;
    if (cells >= 9.2e18) throw ConfigError("voxel grid too large to index");
    return grid;
}

}  // namespace detail

// Events of one voxel, in stream order (non-decreasing t).
struct VoxelOccupancy {
    VoxelGrid grid;
    std::uint64_t t_start = 0;
    std::uint64_t t_end = 0;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells;  // key -> event indices
};

// Partitions every event into exactly one (t_slice, x_vox, y_vox) voxel.  The
// time axis reuses the frame normalization scaled to [0, T), sliced n-fold.
inline VoxelOccupancy voxelize(const EventStream& stream, const GraphConfig& cfg) {
    detail::validate_graph_config(cfg);
    VoxelOccupancy occ;
    occ.grid = detail::make_grid(cfg, stream.geometry);
    if (stream.events.empty()) return occ;

    const std::uint64_t t0 = stream.events.front().t;
    const std::uint64_t t1 = stream.events.back().t;
    occ.t_start = t0;
    occ.t_end = t1;
    const int max_slice = occ.grid.slices - 1;
    const double slice_scale = static_cast<double>(occ.grid.slices);
    for (std::uint32_t i = 0; i < stream.events.size(); ++i) {
        const Event& e = stream.events[i];
        double q = 0.0;
        if (t1 != t0) q = static_cast<double>(e.t - t0) / static_cast<double>(t1 - t0);
        int slice = static_cast<int>(std::floor(q * slice_scale));
        slice = std::clamp(slice, 0, max_slice);
        const int xv = e.x / cfg.voxel_w;
        const int yv = e.y / cfg.voxel_h;
        occ.cells[occ.grid.key(slice, yv, xv)].push_back(i);
    }
    return occ;
}

// Picks the frame's k most populated voxels (ties: ascending (t_slice, y_vox,
// x_vox)) and reads off their first-K polarity features.  Under-full frames
// simply return fewer nodes.  Returned nodes are in ascending coordinate order.
inline std::vector<GraphNode> select_top_k(const VoxelOccupancy& occ, const EventStream& stream,
                                           int frame_index, const GraphConfig& cfg) {
    if (frame_index < 0 || frame_index >= cfg.bins) {
        throw ArgumentError("frame index " + std::to_string(frame_index) + " outside [0," +
                            std::to_string(cfg.bins) + ")");
    }
    const std::uint64_t lo = occ.grid.key(cfg.slices_per_bin * frame_index, 0, 0);
    const std::uint64_t hi = occ.grid.key(cfg.slices_per_bin * (frame_index + 1), 0, 0);

    // key encodes (slice, y_vox, x_vox) lexicographically, so ascending key is
    // exactly the stated tie order
    std::vector<std::pair<std::uint64_t, const std::vector<std::uint32_t>*>> candidates;
    for (const auto& [key, list] : occ.cells) {
        if (key >= lo && key < hi) candidates.emplace_back(key, &list);
    }
    std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        if (a.second->size() != b.second->size()) return a.second->size() > b.second->size();
        return a.first < b.first;
    });
    if (static_cast<int>(candidates.size()) > cfg.top_k) candidates.resize(cfg.top_k);
    std::sort(candidates.begin(), candidates.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<GraphNode> nodes;
    nodes.reserve(candidates.size());
    for (const auto& [key, list] : candidates) {
        GraphNode node;
        node.coord = occ.grid.coord(key);
        node.feat.assign(cfg.points_per_voxel, 0.0);
        const std::size_t take = std::min<std::size_t>(list->size(), cfg.points_per_voxel);
        for (std::size_t j = 0; j < take; ++j) {
            node.feat[j] = static_cast<double>(stream.events[(*list)[j]].p);
        }
        nodes.push_back(std::move(node));
    }
    return nodes;
}

// Connects every node pair strictly closer than R (Euclidean distance over the
// integer voxel coordinates); both directions are stored with equal weight.
inline void build_edges(const std::vector<GraphNode>& nodes, const GraphConfig& cfg,
                        std::vector<std::array<int, 2>>& edges, std::vector<double>& weights) {
    edges.clear();
    weights.clear();
    const double r2 = cfg.radius * cfg.radius;
    const int n = static_cast<int>(nodes.size());
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double dt = nodes[i].coord[0] - nodes[j].coord[0];
            const double dx = nodes[i].coord[1] - nodes[j].coord[1];
            const double dy = nodes[i].coord[2] - nodes[j].coord[2];
            const double d2 = dt * dt + dx * dx + dy * dy;
            if (d2 > 0.0 && d2 < r2) {
                const double w = std::sqrt(d2);
                edges.push_back({i, j});
                weights.push_back(w);
                edges.push_back({j, i});
                weights.push_back(w);
            }
        }
    }
}

// voxelize -> select_top_k -> build_edges per frame.  Frames are independent,
// so the optional fan-out is bit-identical for any worker count.
inline VoxelGraphList build_graph_list(const EventStream& stream, const GraphConfig& cfg,
                                       int threads = 1) {
    detail::validate_graph_config(cfg);
    VoxelGraphList list;
    list.cfg = cfg;
    list.geometry = stream.geometry;
    list.graphs.resize(cfg.bins);
    const VoxelOccupancy occ = voxelize(stream, cfg);

    auto build_frame = [&](int f) {
        VoxelGraph& g = list.graphs[f];
        g.nodes = select_top_k(occ, stream, f, cfg);
        build_edges(g.nodes, cfg, g.edges, g.weights);
    };

    if (threads <= 1 || cfg.bins == 1) {
        for (int f = 0; f < cfg.bins; ++f) build_frame(f);
        return list;
    }
    const int nw = std::min(threads, cfg.bins);
    std::vector<std::thread> pool;
    pool.reserve(nw);
    std::atomic<int> next{0};
    for (int w = 0; w < nw; ++w) {
        pool.emplace_back([&]() {
            for (int f = next.fetch_add(1); f < cfg.bins; f = next.fetch_add(1)) build_frame(f);
        });
    }
    for (auto& th : pool) th.join();
    return list;
}

// ---------------------------------------------------------------------------
// Structured-text (JSON, UTF-8) serialization.
// ---------------------------------------------------------------------------

inline std::string encode_graph_list(const VoxelGraphList& list) {
    nlohmann::ordered_json j;
    j["cfg"] = {{"bins", list.cfg.bins},
                {"slices_per_bin", list.cfg.slices_per_bin},
                {"voxel_h", list.cfg.voxel_h},
                {"voxel_w", list.cfg.voxel_w},
                {"top_k", list.cfg.top_k},
                {"points_per_voxel", list.cfg.points_per_voxel},
                {"radius", list.cfg.radius},
                {"width", list.geometry.width},
                {"height", list.geometry.height}};
    nlohmann::ordered_json frames = nlohmann::ordered_json::array();
    for (const VoxelGraph& g : list.graphs) {
        nlohmann::ordered_json jg;
        nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
        for (const GraphNode& node : g.nodes) {
            nodes.push_back({{"coord", node.coord}, {"feat", node.feat}});
        }
        jg["nodes"] = std::move(nodes);
        jg["edges"] = g.edges;
        jg["weights"] = g.weights;
        frames.push_back(std::move(jg));
    }
    j["frames"] = std::move(frames);
    return j.dump();
}

inline VoxelGraphList decode_graph_list(const std::string& text, const std::string& source) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(source + ": " + e.what());
    }
    try {
        VoxelGraphList list;
        const auto& jc = j.at("cfg");
        list.cfg.bins = jc.at("bins").get<int>();
        list.cfg.slices_per_bin = jc.at("slices_per_bin").get<int>();
        list.cfg.voxel_h = jc.at("voxel_h").get<int>();
        list.cfg.voxel_w = jc.at("voxel_w").get<int>();
        list.cfg.top_k = jc.at("top_k").get<int>();
        list.cfg.points_per_voxel = jc.at("points_per_voxel").get<int>();
        list.cfg.radius = jc.at("radius").get<double>();
        list.geometry.width = jc.at("width").get<std::uint16_t>();
        list.geometry.height = jc.at("height").get<std::uint16_t>();
        detail::validate_graph_config(list.cfg);
        for (const auto& jg : j.at("frames")) {
            VoxelGraph g;
            for (const auto& jn : jg.at("nodes")) {
                GraphNode node;
                node.coord = jn.at("coord").get<std::array<int, 3>>();
                node.feat = jn.at("feat").get<std::vector<double>>();
                g.nodes.push_back(std::move(node));
            }
            g.edges = jg.at("edges").get<std::vector<std::array<int, 2>>>();
            g.weights = jg.at("weights").get<std::vector<double>>();
            if (g.edges.size() != g.weights.size()) {
                throw FormatError(source + ": edge/weight count mismatch");
            }
            const int n = static_cast<int>(g.nodes.size());
            for (const auto& e : g.edges) {
                if (e[0] < 0 || e[0] >= n || e[1] < 0 || e[1] >= n || e[0] == e[1]) {
                    throw FormatError(source + ": edge [" + std::to_string(e[0]) + "," +
                                      std::to_string(e[1]) + "] invalid for " + std::to_string(n) +
                                      " nodes");
                }
            }
            list.graphs.push_back(std::move(g));
        }
        if (static_cast<int>(list.graphs.size()) != list.cfg.bins) {
            throw FormatError(source + ": " + std::to_string(list.graphs.size()) +
                              " frames but cfg.bins=" + std::to_string(list.cfg.bins));
        }
        return list;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(source + ": " + e.what());
    }
}

inline void write_graph_list(const VoxelGraphList& list, const std::string& path) {
    binio::write_file(path, encode_graph_list(list));
}

inline VoxelGraphList read_graph_list(const std::string& path) {
    std::vector<std::uint8_t> raw = binio::read_file(path);
    return decode_graph_list(std::string(raw.begin(), raw.end()), path);
}

}  // namespace mtga
