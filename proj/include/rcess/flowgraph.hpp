#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <vector>

#include "rcess/params.hpp"

namespace rcess {

/// Capacitated digraph of the dealer / party-in / party-out / user model.
/// Vertex 0 is the dealer D; 1..n are P_i^in; n+1..2n are P_i^out; users
/// follow. "Infinite" capacity is encoded as n*share_capacity + 1, strictly
/// above any feasible flow.
struct FlowGraph {
    struct Edge {
        std::uint32_t from = 0;
        std::uint32_t to = 0;
        std::uint64_t capacity = 0;
    };

    std::uint32_t parties = 0;
    std::uint64_t share_capacity = 0;  // alpha * v
    std::size_t vertex_count = 0;
    std::vector<Edge> edges;

    std::uint32_t dealer() const { return 0; }
    std::uint32_t party_in(std::uint32_t i) const { return i; }
    std::uint32_t party_out(std::uint32_t i) const { return parties + i; }
    std::uint32_t user(std::size_t j) const { return 2 * parties + 1 + static_cast<std::uint32_t>(j); }

    std::uint64_t infinite() const { return parties * share_capacity + 1; }
};

/// Builds the graph for n parties each storing share_capacity units, with
/// one terminal per contact set. The optional download_cap bounds each
/// party-to-user edge (the beta of the download-cost argument); otherwise
/// those edges are infinite.
inline FlowGraph build_graph(std::uint32_t n, std::uint64_t share_capacity,
                             std::span<const std::vector<std::uint32_t>> contact_sets,
                             std::optional<std::uint64_t> download_cap = std::nullopt) {
    if (n == 0) throw std::invalid_argument("need at least one party");
    if (share_capacity == 0) throw std::invalid_argument("share capacity must be positive");
    FlowGraph g;
    g.parties = n;
    g.share_capacity = share_capacity;
    g.vertex_count = 2 * static_cast<std::size_t>(n) + 1 + contact_sets.size();
    const std::uint64_t inf = g.infinite();
    for (std::uint32_t i = 1; i <= n; ++i) {
        g.edges.push_back({g.dealer(), g.party_in(i), inf});
        g.edges.push_back({g.party_in(i), g.party_out(i), share_capacity});
    }
    for (std::size_t j = 0; j < contact_sets.size(); ++j) {
        if (contact_sets[j].empty()) throw std::invalid_argument("empty contact set");
        for (const std::uint32_t i : contact_sets[j]) {
            if (i < 1 || i > n) throw std::invalid_argument("contact set names unknown party");
            g.edges.push_back({g.party_out(i), g.user(j), download_cap.value_or(inf)});
        }
    }
    return g;
}

/// Max-flow value from source to sink by repeated BFS augmentation
/// (Edmonds-Karp); equals the min-cut by duality.
inline std::uint64_t min_cut(const FlowGraph& g, std::uint32_t source, std::uint32_t sink) {
    if (source == sink) throw std::invalid_argument("source equals sink");
    const std::size_t n = g.vertex_count;
    // Residual adjacency: forward and reverse arcs per edge.
    struct Arc {
        std::uint32_t to;
        std::uint64_t residual;
        std::size_t partner;
    };
    std::vector<std::vector<Arc>> adj(n);
    for (const auto& e : g.edges) {
        adj[e.from].push_back({e.to, e.capacity, adj[e.to].size()});
        adj[e.to].push_back({e.from, 0, adj[e.from].size() - 1});
    }
    std::uint64_t flow = 0;
    for (;;) {
        std::vector<std::pair<std::uint32_t, std::size_t>> parent(n, {UINT32_MAX, 0});
        std::queue<std::uint32_t> bfs;
        bfs.push(source);
        parent[source] = {source, 0};
        while (!bfs.empty() && parent[sink].first == UINT32_MAX) {
            const std::uint32_t u = bfs.front();
            bfs.pop();
            for (std::size_t a = 0; a < adj[u].size(); ++a) {
                const Arc& arc = adj[u][a];
                if (arc.residual == 0 || parent[arc.to].first != UINT32_MAX) continue;
                parent[arc.to] = {u, a};
                bfs.push(arc.to);
            }
        }
        if (parent[sink].first == UINT32_MAX) break;
        std::uint64_t bottleneck = UINT64_MAX;
        for (std::uint32_t v = sink; v != source;) {
            const auto [u, a] = parent[v];
            bottleneck = std::min(bottleneck, adj[u][a].residual);
            v = u;
        }
        for (std::uint32_t v = sink; v != source;) {
            const auto [u, a] = parent[v];
            adj[u][a].residual -= bottleneck;
            adj[adj[u][a].to][adj[u][a].partner].residual += bottleneck;
            v = u;
        }
        flow += bottleneck;
    }
    return flow;
}

/// Capacity upper bound from the cut accounting: start from the min-cut of
/// a user contacting k parties (value k * alpha * v), discard the edges the
/// adversary can write to (twice over against an omniscient one), then
/// deduct the privacy requirement of the readable edges. Zero when the
/// model's positivity condition fails.
inline std::uint64_t converse_bound(std::uint32_t n, std::uint32_t k, const AdversaryCounts& z,
                                    std::uint64_t share_capacity, AdversaryModel model) {
    if (k < 1 || k > n) throw std::invalid_argument("need 1 <= k <= n");
    if (!capacity_condition(k, z, model)) return 0;

    std::vector<std::uint32_t> contacted(k);
    for (std::uint32_t i = 0; i < k; ++i) contacted[i] = i + 1;
    const std::vector<std::vector<std::uint32_t>> sets{contacted};
    const FlowGraph g = build_graph(n, share_capacity, sets);
    const std::uint64_t base = min_cut(g, g.dealer(), g.user(0));

    const std::uint64_t writer_discard =
        (model == AdversaryModel::limited_knowledge ? 1ull : 2ull) * z.writers() * share_capacity;
    const std::uint64_t privacy_deduction = static_cast<std::uint64_t>(z.readers()) * share_capacity;
    return base - writer_discard - privacy_deduction;
}

} // namespace rcess
