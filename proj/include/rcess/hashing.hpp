#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rcess/field.hpp"
#include "rcess/rng.hpp"
#include "rcess/staircase.hpp"

namespace rcess {

/// Which pairs of parties cross-check each other. Complete by default; the
/// sparse variant keeps the per-party hash storage near-logarithmic while
/// staying connected.
struct HashGraph {
    std::uint32_t parties = 0;
    bool sparse = false;
    std::uint64_t seed = 0;                                 // sparse mode only
    double edge_probability = 1.0;                          // sparse mode only
    std::uint32_t resamples = 0;                            // draws discarded before connectivity
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // i < j, sorted

    static HashGraph complete(std::uint32_t n) {
        HashGraph g;
        g.parties = n;
        for (std::uint32_t i = 1; i <= n; ++i)
            for (std::uint32_t j = i + 1; j <= n; ++j) g.edges.emplace_back(i, j);
        return g;
    }

    std::optional<std::size_t> edge_index(std::uint32_t i, std::uint32_t j) const {
        if (i > j) std::swap(i, j);
        const auto it = std::lower_bound(edges.begin(), edges.end(), std::make_pair(i, j));
        if (it == edges.end() || *it != std::make_pair(i, j)) return std::nullopt;
        return static_cast<std::size_t>(it - edges.begin());
    }
};

namespace detail {

inline bool is_connected(std::uint32_t n,
                         const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
    if (n == 0) return true;
    std::vector<std::uint32_t> parent(n + 1);
    std::iota(parent.begin(), parent.end(), 0u);
    auto find = [&](std::uint32_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::uint32_t components = n;
    for (const auto& [a, b] : edges) {
        const std::uint32_t ra = find(a), rb = find(b);
        if (ra != rb) {
            parent[ra] = rb;
            --components;
        }
    }
    return components == 1;
}

} // namespace detail

/// Random cross-check graph: every party links to every other with
/// probability p = (ln n + ln ln n)/n, so a pair is present when either
/// side drew it. Resamples with an incremented seed until connected;
/// deterministic given the seed. Tiny n (p >= 1) falls back to complete.
inline HashGraph build_sparse_graph(std::uint32_t n, std::uint64_t seed) {
    if (n < 3) throw std::invalid_argument("sparse hash graph needs at least 3 parties");
    const double p = (std::log(static_cast<double>(n)) + std::log(std::log(static_cast<double>(n)))) /
                     static_cast<double>(n);
    if (p >= 1.0) {
        HashGraph g = HashGraph::complete(n);
        g.seed = seed;
        g.edge_probability = 1.0;
        return g;
    }
    HashGraph g;
    g.parties = n;
    g.sparse = true;
    g.seed = seed;
    g.edge_probability = p;
    for (std::uint32_t attempt = 0;; ++attempt) {
        Rng rng(derive_seed(seed + attempt, 0x48475250 /* "HGRP" */));
        g.edges.clear();
        for (std::uint32_t i = 1; i <= n; ++i)
            for (std::uint32_t j = i + 1; j <= n; ++j) {
                const bool from_i = rng.unit() < p;
                const bool from_j = rng.unit() < p;
                if (from_i || from_j) g.edges.emplace_back(i, j);
            }
        if (detail::is_connected(n, g.edges)) {
            g.resamples = attempt;
            return g;
        }
    }
}

/// All pairwise hashes of a payload grid: one field element per (column,
/// edge), h[m][{i,j}] = <w_{i,m}, w_{j,m}>.
struct PairwiseHashes {
    std::size_t cols = 0;
    std::size_t edge_count = 0;
    std::vector<std::uint32_t> values;  // [col][edge]

    PairwiseHashes() = default;
    PairwiseHashes(std::size_t c, std::size_t e) : cols(c), edge_count(e), values(c * e, 0) {}

    std::uint32_t& at(std::size_t col, std::size_t edge) { return values[col * edge_count + edge]; }
    std::uint32_t at(std::size_t col, std::size_t edge) const {
        return values[col * edge_count + edge];
    }

    bool operator==(const PairwiseHashes&) const = default;
};

inline PairwiseHashes compute_hashes(const Field& f, const PacketGrid& payloads,
                                     const HashGraph& graph) {
    if (payloads.rows != graph.parties)
        throw std::invalid_argument("payload rows must match graph parties");
    PairwiseHashes h(payloads.cols, graph.edges.size());
    for (std::size_t m = 0; m < payloads.cols; ++m)
        for (std::size_t e = 0; e < graph.edges.size(); ++e) {
            const auto& [i, j] = graph.edges[e];
            h.at(m, e) = dot(f, payloads.packet(i - 1, m), payloads.packet(j - 1, m));
        }
    return h;
}

/// Per-party Shamir shares of every hash element: threshold privacy+1,
/// evaluation points 1..n. privacy = 0 degenerates to replication.
struct HashShares {
    std::uint32_t parties = 0;
    std::size_t cols = 0;
    std::size_t edge_count = 0;
    std::vector<std::uint32_t> values;  // [party-1][col][edge]

    std::uint32_t& at(std::uint32_t party, std::size_t col, std::size_t edge) {
        return values[(static_cast<std::size_t>(party - 1) * cols + col) * edge_count + edge];
    }
    std::uint32_t at(std::uint32_t party, std::size_t col, std::size_t edge) const {
        return values[(static_cast<std::size_t>(party - 1) * cols + col) * edge_count + edge];
    }

    /// One party's shares for the first `cols_wanted` columns, column-major.
    std::vector<std::uint32_t> party_prefix(std::uint32_t party, std::size_t cols_wanted) const {
        std::vector<std::uint32_t> out;
        out.reserve(cols_wanted * edge_count);
        for (std::size_t c = 0; c < cols_wanted; ++c)
            for (std::size_t e = 0; e < edge_count; ++e) out.push_back(at(party, c, e));
        return out;
    }
};

inline HashShares share_hashes(const Field& f, const PairwiseHashes& h, std::uint32_t n,
                               std::uint32_t privacy, Rng& rng) {
    if (f.modulus() < n + 1) throw std::invalid_argument("field too small for n share points");
    HashShares s;
    s.parties = n;
    s.cols = h.cols;
    s.edge_count = h.edge_count;
    s.values.assign(static_cast<std::size_t>(n) * h.cols * h.edge_count, 0);
    std::vector<std::uint32_t> masks(privacy);
    for (std::size_t c = 0; c < h.cols; ++c)
        for (std::size_t e = 0; e < h.edge_count; ++e) {
            for (auto& m : masks) m = f.random(rng);
            for (std::uint32_t party = 1; party <= n; ++party) {
                std::uint32_t acc = h.at(c, e);
                std::uint32_t xp = 1;
                for (std::uint32_t t = 0; t < privacy; ++t) {
                    xp = f.mul(xp, party);
                    acc = f.add(acc, f.mul(masks[t], xp));
                }
                s.at(party, c, e) = acc;
            }
        }
    return s;
}

/// Hash shares as served by one contacted party (possibly corrupted).
struct HashShareResponse {
    std::uint32_t party = 0;
    std::vector<std::uint32_t> shares;  // [col][edge], cols as downloaded
};

/// Recovers the true hashes from d parties' share responses, tolerating up
/// to write_count corrupted responses. Per element, every (privacy+1)-subset
/// is interpolated and a candidate is accepted only when it agrees with at
/// least d - write_count of the served shares and no conflicting candidate
/// does too. Returns nullopt on any ambiguity or shortfall.
inline std::optional<PairwiseHashes> recover_hashes(const Field& f,
                                                    std::span<const HashShareResponse> responses,
                                                    std::size_t cols, std::size_t edge_count,
                                                    std::uint32_t privacy, std::uint32_t write_count) {
    const std::size_t d = responses.size();
    const std::size_t k_h = privacy + 1;
    if (d < static_cast<std::size_t>(privacy) + write_count + 1)
        throw std::invalid_argument("too few hash share responses: need privacy + writers + 1");
    for (const auto& r : responses)
        if (r.shares.size() != cols * edge_count)
            throw std::invalid_argument("hash share response has wrong element count");

    // Precompute the k_h-subsets of response indices.
    std::vector<std::vector<std::size_t>> subsets;
    std::vector<std::size_t> pick(k_h);
    auto gen = [&](auto&& self, std::size_t start, std::size_t depth) -> void {
        if (depth == k_h) {
            subsets.push_back(pick);
            return;
        }
        for (std::size_t i = start; i + (k_h - depth) <= d; ++i) {
            pick[depth] = i;
            self(self, i + 1, depth + 1);
        }
    };
    gen(gen, 0, 0);

    PairwiseHashes out(cols, edge_count);
    std::vector<std::uint32_t> poly(k_h);
    std::vector<std::uint32_t> best_poly;
    for (std::size_t c = 0; c < cols; ++c)
        for (std::size_t e = 0; e < edge_count; ++e) {
            const std::size_t elem = c * edge_count + e;
            bool have = false;
            bool ambiguous = false;
            for (const auto& sub : subsets) {
                // Interpolate the degree-<k_h polynomial through the subset.
                Matrix a(k_h, k_h), b(k_h, 1);
                for (std::size_t r = 0; r < k_h; ++r) {
                    std::uint32_t xp = 1;
                    for (std::size_t t = 0; t < k_h; ++t) {
                        a.at(r, t) = xp;
                        xp = f.mul(xp, responses[sub[r]].party);
                    }
                    b.at(r, 0) = responses[sub[r]].shares[elem];
                }
                const Matrix x = solve_linear(f, std::move(a), std::move(b));
                for (std::size_t t = 0; t < k_h; ++t) poly[t] = x.at(t, 0);

                std::size_t agree = 0;
                for (const auto& resp : responses) {
                    std::uint32_t val = 0, xp = 1;
                    for (std::size_t t = 0; t < k_h; ++t) {
                        val = f.add(val, f.mul(poly[t], xp));
                        xp = f.mul(xp, resp.party);
                    }
                    if (val == resp.shares[elem]) ++agree;
                }
                if (agree + write_count < d) continue;
                if (have && poly != best_poly) {
                    ambiguous = true;
                    break;
                }
                best_poly = poly;
                have = true;
            }
            if (!have || ambiguous) return std::nullopt;
            out.at(c, e) = best_poly[0];
        }
    return out;
}

/// The d x d comparison table between recomputed and verified hashes.
struct MatchTable {
    enum class Pair : std::uint8_t { match, mismatch, untested };

    std::vector<std::uint32_t> parties;  // contacted ids, ascending
    std::vector<Pair> cells;             // row-major d x d; diagonal matches

    Pair at(std::size_t i, std::size_t j) const { return cells[i * parties.size() + j]; }
};

/// Recomputes every tested pair's hashes from the downloaded payload
/// prefixes and compares with the verified values across all downloaded
/// columns.
inline MatchTable build_match_table(const Field& f, std::span<const LevelResponse> payloads,
                                    const PairwiseHashes& verified, const HashGraph& graph,
                                    std::size_t cols) {
    MatchTable t;
    const std::size_t d = payloads.size();
    for (const auto& r : payloads) t.parties.push_back(r.party);
    if (!std::is_sorted(t.parties.begin(), t.parties.end()))
        throw std::invalid_argument("responses must be sorted by party id");
    t.cells.assign(d * d, MatchTable::Pair::match);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) {
            const auto edge = graph.edge_index(t.parties[i], t.parties[j]);
            MatchTable::Pair cell = MatchTable::Pair::untested;
            if (edge) {
                cell = MatchTable::Pair::match;
                for (std::size_t c = 0; c < cols; ++c) {
                    const std::uint32_t recomputed =
                        dot(f, payloads[i].prefix.packet(c), payloads[j].prefix.packet(c));
                    if (recomputed != verified.at(c, *edge)) {
                        cell = MatchTable::Pair::mismatch;
                        break;
                    }
                }
            }
            t.cells[i * d + j] = cell;
            t.cells[j * d + i] = cell;
        }
    return t;
}

struct DetectionResult {
    std::vector<std::uint32_t> honest;   // party ids cleared for decoding
    std::vector<std::uint32_t> removed;  // party ids discarded
};

/// Iteratively removes the party with the most mismatches (ties to the
/// smallest id) until the surviving table is clean; in sparse mode the
/// survivors must additionally contain a connected matching component of
/// size at least d - write_count. Returns nullopt when more than
/// write_count removals would be needed or the component is short.
inline std::optional<DetectionResult> detect_corrupt(const MatchTable& t, std::uint32_t write_count,
                                                     bool sparse_graph) {
    const std::size_t d = t.parties.size();
    std::vector<bool> alive(d, true);
    std::vector<std::uint32_t> removed;

    for (;;) {
        std::size_t worst = d;
        std::size_t worst_count = 0;
        for (std::size_t i = 0; i < d; ++i) {
            if (!alive[i]) continue;
            std::size_t count = 0;
            for (std::size_t j = 0; j < d; ++j)
                if (alive[j] && j != i && t.at(i, j) == MatchTable::Pair::mismatch) ++count;
            if (count > worst_count) {
                worst = i;
                worst_count = count;
            }
        }
        if (worst == d || worst_count == 0) break;
        alive[worst] = false;
        removed.push_back(t.parties[worst]);
        if (removed.size() > write_count) return std::nullopt;
    }

    DetectionResult res;
    std::sort(removed.begin(), removed.end());
    res.removed = std::move(removed);

    const std::size_t needed = d - write_count;
    if (sparse_graph) {
        // Survivors must include one connected component of tested, matching
        // edges large enough to decode from.
        std::vector<std::size_t> comp(d, d);
        std::size_t best_root = d, best_size = 0;
        for (std::size_t i = 0; i < d; ++i) {
            if (!alive[i] || comp[i] != d) continue;
            std::vector<std::size_t> stack{i};
            comp[i] = i;
            std::size_t size = 0;
            while (!stack.empty()) {
                const std::size_t u = stack.back();
                stack.pop_back();
                ++size;
                for (std::size_t w = 0; w < d; ++w)
                    if (alive[w] && comp[w] == d && t.at(u, w) == MatchTable::Pair::match && u != w) {
                        comp[w] = i;
                        stack.push_back(w);
                    }
            }
            if (size > best_size) {
                best_size = size;
                best_root = i;
            }
        }
        if (best_size < needed) return std::nullopt;
        for (std::size_t i = 0; i < d; ++i)
            if (alive[i] && comp[i] == best_root) res.honest.push_back(t.parties[i]);
    } else {
        for (std::size_t i = 0; i < d; ++i)
            if (alive[i]) res.honest.push_back(t.parties[i]);
        if (res.honest.size() < needed) return std::nullopt;
    }
    return res;
}

/// Exact ratio type for overhead reporting.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
        if (den == 0) throw std::invalid_argument("zero denominator");
        const std::int64_t g = std::gcd(num, den);
        if (g != 0) {
            num /= g;
            den /= g;
        }
    }

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    bool operator==(const Rational&) const = default;
};

/// Stored-hash-per-party over payload-per-party. Every party keeps one
/// share of each of the alpha * |edges| hash elements while its payload is
/// alpha * v elements, so the ratio is |edges| / v; the complete graph
/// gives exactly n(n-1)/(2v).
inline Rational hash_overhead(const HashGraph& graph, std::uint32_t packet_width) {
    if (packet_width == 0) throw std::invalid_argument("packet width must be positive");
    return Rational(static_cast<std::int64_t>(graph.edges.size()), packet_width);
}

} // namespace rcess
