#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <tuple>
#include <vector>

#include "mtga/errors.hpp"
#include "mtga/events.hpp"
#include "mtga/frames.hpp"
#include "mtga/voxel_graph.hpp"

// Brute-force reference implementations for the nontrivial kernels.  Used only
// by tests, the acceptance suite, and the CLI's --oracle mode.  Each reference
// is written as its own arithmetic formulation: scalar loops, dense arrays and
// full sorts instead of the incremental / hashed production paths.  All
// arithmetic is 64-bit.

namespace mtga::oracle {

// Per-event scalar loop over every bin; no bracketing, no parallelism.
inline EventFrameTensor naive_frames(const EventStream& stream, const FrameConfig& cfg) {
    detail::validate_frame_config(cfg);
    EventFrameTensor out;
    out.bins = cfg.bins;
    out.channels = cfg.split_polarity ? 2 : 1;
    out.height = cfg.geometry.height;
    out.width = cfg.geometry.width;
    out.data.assign(static_cast<std::size_t>(out.bins) * out.channels * out.height * out.width, 0.0);
    if (stream.events.empty()) return out;

    const std::uint64_t t0 = stream.events.front().t;
    const std::uint64_t t1 = stream.events.back().t;
    out.t_start = t0;
    out.t_end = t1;
    for (const Event& e : stream.events) {
        double ts = 0.0;
        if (t1 != t0) {
            ts = static_cast<double>(cfg.bins - 1) *
                 (static_cast<double>(e.t - t0) / static_cast<double>(t1 - t0));
        }
        const int c = (cfg.split_polarity && e.p < 0) ? 1 : 0;
        const double v = cfg.split_polarity ? 1.0 : static_cast<double>(e.p);
        for (int b = 0; b < cfg.bins; ++b) {
            const double w = 1.0 - std::abs(static_cast<double>(b) - ts);
            if (w > 0.0) out.at(b, c, e.y, e.x) += v * w;
        }
    }
    return out;
}

// Scalar re-normalization of one frame; mirrors the render contract.
inline std::vector<std::uint8_t> naive_normalize_u8(const EventFrameTensor& frames, int index) {
    const std::size_t hw = static_cast<std::size_t>(frames.height) * frames.width;
    double mn = frames.data[index * hw], mx = mn;
    for (std::size_t i = 0; i < hw; ++i) {
        const double v = frames.data[index * hw + i];
        if (v < mn) mn = v;
        if (v > mx) mx = v;
    }
    std::vector<std::uint8_t> img(hw);
    for (std::size_t i = 0; i < hw; ++i) {
        const double v = frames.data[index * hw + i];
        img[i] = (mx == mn) ? std::uint8_t{128}
                            : static_cast<std::uint8_t>(std::lround(255.0 * (v - mn) / (mx - mn)));
    }
    return img;
}

// Dense per-cell tally over the full voxel grid, full sort for top-k, and an
// all-ordered-pairs sqrt-distance scan for edges.
inline VoxelGraphList naive_graphs(const EventStream& stream, const GraphConfig& cfg) {
    detail::validate_graph_config(cfg);
    VoxelGraphList list;
    list.cfg = cfg;
    list.geometry = stream.geometry;
    list.graphs.resize(cfg.bins);

    const int n = cfg.slices_per_bin;
    const int slices = n * cfg.bins;
    const int nx = (stream.geometry.width + cfg.voxel_w - 1) / cfg.voxel_w;
    const int ny = (stream.geometry.height + cfg.voxel_h - 1) / cfg.voxel_h;
    const std::size_t cells = static_cast<std::size_t>(slices) * ny * nx;

    std::vector<std::vector<std::uint32_t>> by_cell(cells);
    if (!stream.events.empty()) {
        const std::uint64_t t0 = stream.events.front().t;
        const std::uint64_t t1 = stream.events.back().t;
        for (std::uint32_t i = 0; i < stream.events.size(); ++i) {
            const Event& e = stream.events[i];
            double q = 0.0;
            if (t1 != t0) q = static_cast<double>(e.t - t0) / static_cast<double>(t1 - t0);
            int slice = static_cast<int>(std::floor(q * slices));
            if (slice < 0) slice = 0;
            if (slice > slices - 1) slice = slices - 1;
            const std::size_t cell =
                (static_cast<std::size_t>(slice) * ny + e.y / cfg.voxel_h) * nx + e.x / cfg.voxel_w;
            by_cell[cell].push_back(i);
        }
    }

    for (int f = 0; f < cfg.bins; ++f) {
        // full sort of every non-empty candidate cell of this frame
        std::vector<std::tuple<std::size_t, int, int, int>> ranked;  // (count, slice, yv, xv)
        for (int s = n * f; s < n * (f + 1); ++s) {
            for (int yv = 0; yv < ny; ++yv) {
                for (int xv = 0; xv < nx; ++xv) {
                    const std::size_t cell = (static_cast<std::size_t>(s) * ny + yv) * nx + xv;
                    if (!by_cell[cell].empty()) ranked.emplace_back(by_cell[cell].size(), s, yv, xv);
                }
            }
        }
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
            return std::tie(std::get<1>(a), std::get<2>(a), std::get<3>(a)) <
                   std::tie(std::get<1>(b), std::get<2>(b), std::get<3>(b));
        });
        if (static_cast<int>(ranked.size()) > cfg.top_k) ranked.resize(cfg.top_k);
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            return std::tie(std::get<1>(a), std::get<2>(a), std::get<3>(a)) <
                   std::tie(std::get<1>(b), std::get<2>(b), std::get<3>(b));
        });

        VoxelGraph& g = list.graphs[f];
        for (const auto& [count, s, yv, xv] : ranked) {
            GraphNode node;
            node.coord = {s, xv, yv};
            node.feat.assign(cfg.points_per_voxel, 0.0);
            const std::size_t cell = (static_cast<std::size_t>(s) * ny + yv) * nx + xv;
            for (std::size_t j = 0; j < by_cell[cell].size() &&
                                    j < static_cast<std::size_t>(cfg.points_per_voxel); ++j) {
                node.feat[j] = static_cast<double>(stream.events[by_cell[cell][j]].p);
            }
            g.nodes.push_back(std::move(node));
        }
        const int m = static_cast<int>(g.nodes.size());
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                if (i == j) continue;
                const double dt = g.nodes[i].coord[0] - g.nodes[j].coord[0];
                const double dx = g.nodes[i].coord[1] - g.nodes[j].coord[1];
                const double dy = g.nodes[i].coord[2] - g.nodes[j].coord[2];
                const double d = std::sqrt(dt * dt + dx * dx + dy * dy);
                if (d > 0.0 && d < cfg.radius) {
                    g.edges.push_back({i, j});
                    g.weights.push_back(d);
                }
            }
        }
    }
    return list;
}

// Set-wise comparison: node lists exact, edge sets keyed by (src,dst) with
// weights within `weight_tol`.  Edge emission order is allowed to differ.
inline bool graph_lists_equivalent(const VoxelGraphList& a, const VoxelGraphList& b,
                                   double weight_tol) {
    if (a.cfg != b.cfg || a.geometry != b.geometry || a.graphs.size() != b.graphs.size()) {
        return false;
    }
    for (std::size_t f = 0; f < a.graphs.size(); ++f) {
        const VoxelGraph& ga = a.graphs[f];
        const VoxelGraph& gb = b.graphs[f];
        if (ga.nodes != gb.nodes) return false;
        if (ga.edges.size() != gb.edges.size()) return false;
        auto keyed = [](const VoxelGraph& g) {
            std::vector<std::tuple<int, int, double>> v;
            v.reserve(g.edges.size());
            for (std::size_t e = 0; e < g.edges.size(); ++e) {
                v.emplace_back(g.edges[e][0], g.edges[e][1], g.weights[e]);
            }
            std::sort(v.begin(), v.end());
            return v;
        };
        const auto ea = keyed(ga);
        const auto eb = keyed(gb);
        for (std::size_t e = 0; e < ea.size(); ++e) {
            if (std::get<0>(ea[e]) != std::get<0>(eb[e]) || std::get<1>(ea[e]) != std::get<1>(eb[e])) {
                return false;
            }
            if (std::abs(std::get<2>(ea[e]) - std::get<2>(eb[e])) > weight_tol) return false;
        }
    }
    return true;
}

// Materializes the full |nodes| x |nodes| x M Gaussian weight tensor and
// contracts it against per-kernel dense linear maps.  Edges are directed
// (src, dst) pairs; theta[m] is row-major c_out x c_in.
inline std::vector<double> dense_gmm_conv(const std::vector<double>& node_feats, int n_nodes,
                                          int c_in, const std::vector<std::array<int, 2>>& edges,
                                          const std::vector<double>& edge_attr,
                                          const std::vector<double>& mu,
                                          const std::vector<double>& sigma_inv,
                                          const std::vector<std::vector<double>>& theta,
                                          const std::vector<double>& bias, int c_out) {
    const int m_kernels = static_cast<int>(mu.size());
    std::vector<double> gauss(static_cast<std::size_t>(n_nodes) * n_nodes * m_kernels, 0.0);
    std::vector<char> adj(static_cast<std::size_t>(n_nodes) * n_nodes, 0);
    std::vector<int> deg(n_nodes, 0);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const int src = edges[e][0];
        const int dst = edges[e][1];
        if (src < 0 || src >= n_nodes || dst < 0 || dst >= n_nodes) {
            throw GraphError("edge references node outside graph");
        }
        adj[static_cast<std::size_t>(dst) * n_nodes + src] = 1;
        ++deg[dst];
        for (int m = 0; m < m_kernels; ++m) {
            const double d = edge_attr[e] - mu[m];
            gauss[(static_cast<std::size_t>(dst) * n_nodes + src) * m_kernels + m] =
                std::exp(-0.5 * sigma_inv[m] * d * d);
        }
    }
    std::vector<double> out(static_cast<std::size_t>(n_nodes) * c_out, 0.0);
    for (int i = 0; i < n_nodes; ++i) {
        for (int o = 0; o < c_out; ++o) out[static_cast<std::size_t>(i) * c_out + o] = bias[o];
        const double inv_deg = 1.0 / std::max(1, deg[i]);
        for (int j = 0; j < n_nodes; ++j) {
            if (!adj[static_cast<std::size_t>(i) * n_nodes + j]) continue;
            for (int m = 0; m < m_kernels; ++m) {
                const double gw = gauss[(static_cast<std::size_t>(i) * n_nodes + j) * m_kernels + m];
                for (int o = 0; o < c_out; ++o) {
                    double acc = 0.0;
                    for (int c = 0; c < c_in; ++c) {
                        acc += theta[m][static_cast<std::size_t>(o) * c_in + c] *
                               node_feats[static_cast<std::size_t>(j) * c_in + c];
                    }
                    out[static_cast<std::size_t>(i) * c_out + o] += inv_deg * gw * acc;
                }
            }
        }
    }
    return out;
}

}  // namespace mtga::oracle
