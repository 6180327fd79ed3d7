#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rcess/field.hpp"

namespace rcess {

/// Thrown when an error-correcting decode cannot find a codeword within
/// the allowed error budget.
struct DecodingFailure : std::runtime_error {
    DecodingFailure() : std::runtime_error("decoding failure") {}
};

/// A rows x cols grid of packets, each packet holding `width` field
/// elements. Storage is row-major with packet lanes contiguous.
struct PacketGrid {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t width = 0;
    std::vector<std::uint32_t> data;

    PacketGrid() = default;
    PacketGrid(std::size_t r, std::size_t c, std::size_t w)
        : rows(r), cols(c), width(w), data(r * c * w, 0) {}

    std::span<std::uint32_t> packet(std::size_t r, std::size_t c) {
        return {data.data() + (r * cols + c) * width, width};
    }
    std::span<const std::uint32_t> packet(std::size_t r, std::size_t c) const {
        return {data.data() + (r * cols + c) * width, width};
    }

    bool operator==(const PacketGrid&) const = default;
};

/// A flat sequence of packets (secrets, keys, one party's payload).
struct PacketSeq {
    std::size_t count = 0;
    std::size_t width = 0;
    std::vector<std::uint32_t> data;

    PacketSeq() = default;
    PacketSeq(std::size_t n, std::size_t w) : count(n), width(w), data(n * w, 0) {}

    std::span<std::uint32_t> packet(std::size_t i) { return {data.data() + i * width, width}; }
    std::span<const std::uint32_t> packet(std::size_t i) const {
        return {data.data() + i * width, width};
    }

    bool operator==(const PacketSeq&) const = default;
};

/// Parameters of a universal Staircase code with `shares` parties, any
/// `threshold`..`max_contact` of which can decode with minimal download.
///
/// Level j (0-based) serves users contacting level_contact[j] parties;
/// level_contact runs from max_contact down to threshold in steps of one.
/// A share holds packets_per_share packets; a level-j user downloads the
/// first prefix_packets[j] of them. block_width[j] is the number of
/// message-matrix columns owned by level j.
struct StaircaseParams {
    std::uint32_t shares = 0;       // parties
    std::uint32_t threshold = 0;    // minimum contact count
    std::uint32_t privacy = 0;      // colluding parties that learn nothing
    std::uint32_t max_contact = 0;

    std::uint64_t packets_per_share = 0;
    std::vector<std::uint32_t> level_contact;
    std::vector<std::uint64_t> prefix_packets;
    std::vector<std::uint64_t> block_width;

    std::size_t level_count() const { return level_contact.size(); }

    std::uint64_t secret_packets() const {
        return static_cast<std::uint64_t>(threshold - privacy) * packets_per_share;
    }
    std::uint64_t key_packets() const {
        return static_cast<std::uint64_t>(privacy) * packets_per_share;
    }

    /// Level index serving a given contact count, if supported.
    std::optional<std::size_t> level_for_contact(std::uint32_t d) const {
        if (d < threshold || d > max_contact) return std::nullopt;
        return static_cast<std::size_t>(max_contact - d);
    }
};

inline StaircaseParams derive_params(std::uint32_t shares, std::uint32_t threshold,
                                     std::uint32_t privacy, std::uint32_t max_contact) {
    if (threshold <= privacy) throw std::invalid_argument("no secret capacity: threshold <= privacy");
    if (threshold < 1 || max_contact < threshold)
        throw std::invalid_argument("invalid contact range: need max_contact >= threshold >= 1");
    if (max_contact > shares)
        throw std::invalid_argument("max_contact exceeds share count");

    StaircaseParams p;
    p.shares = shares;
    p.threshold = threshold;
    p.privacy = privacy;
    p.max_contact = max_contact;

    std::uint64_t alpha = 1;
    for (std::uint32_t d = threshold + 1; d <= max_contact; ++d)
        alpha = std::lcm(alpha, static_cast<std::uint64_t>(d - privacy));
    p.packets_per_share = alpha;

    std::uint64_t prev = 0;
    for (std::uint32_t d = max_contact; d >= threshold; --d) {
        p.level_contact.push_back(d);
        const std::uint64_t num = static_cast<std::uint64_t>(threshold - privacy) * alpha;
        const std::uint64_t cum = num / (d - privacy);
        p.prefix_packets.push_back(cum);
        p.block_width.push_back(cum - prev);
        prev = cum;
    }
    return p;
}

namespace detail {

// Column-major walk over a row range of an early-column region; used for
// both placing and revealing staircase overflow entries.
template <typename Fn>
void for_overflow(std::uint64_t first_cols, std::uint32_t row_begin, std::uint32_t row_end, Fn&& fn) {
    for (std::uint64_t c = 0; c < first_cols; ++c)
        for (std::uint32_t r = row_begin; r < row_end; ++r) fn(r, c);
}

} // namespace detail

/// Lays out the staircase message matrix: block 0 carries the secret atop
/// fresh keys; every later block relocates the rows that its own level can
/// no longer reach ("overflow") and appends fresh keys below.
inline PacketGrid build_message_matrix(const StaircaseParams& p, const PacketSeq& secret,
                                       const PacketSeq& keys) {
    if (secret.count != p.secret_packets())
        throw std::invalid_argument("secret packet count mismatch");
    if (keys.count != p.key_packets()) throw std::invalid_argument("key packet count mismatch");
    if (keys.count > 0 && secret.width != keys.width)
        throw std::invalid_argument("secret/key packet width mismatch");
    if (secret.width == 0) throw std::invalid_argument("packet width must be positive");

    const std::size_t width = secret.width;
    PacketGrid m(p.shares, p.packets_per_share, width);

    auto copy_packet = [&](std::span<const std::uint32_t> src, std::size_t r, std::size_t c) {
        std::copy(src.begin(), src.end(), m.packet(r, c).begin());
    };

    std::size_t next_secret = 0, next_key = 0;
    std::uint64_t col_base = 0;
    for (std::size_t j = 0; j < p.level_count(); ++j) {
        const std::uint32_t d_j = p.level_contact[j];
        const std::uint32_t top_rows = d_j - p.privacy;
        // Data rows: the secret for block 0, relocated overflow afterwards.
        if (j == 0) {
            for (std::uint64_t c = 0; c < p.block_width[0]; ++c)
                for (std::uint32_t r = 0; r < top_rows; ++r)
                    copy_packet(secret.packet(next_secret++), r, c);
        } else {
            std::uint64_t cc = col_base;
            std::uint32_t rr = 0;
            detail::for_overflow(p.prefix_packets[j - 1], d_j, p.level_contact[j - 1],
                                 [&](std::uint32_t src_r, std::uint64_t src_c) {
                                     copy_packet(m.packet(src_r, src_c), rr, cc);
                                     if (++rr == top_rows) {
                                         rr = 0;
                                         ++cc;
                                     }
                                 });
        }
        // Key rows.
        for (std::uint64_t c = col_base; c < col_base + p.block_width[j]; ++c)
            for (std::uint32_t r = top_rows; r < d_j; ++r)
                copy_packet(keys.packet(next_key++), r, c);
        col_base += p.block_width[j];
    }
    return m;
}

/// Evaluates every message column at points 1..n; row i-1 of the result is
/// party i's share.
inline PacketGrid encode(const Field& f, const StaircaseParams& p, const PacketGrid& message) {
    if (message.rows != p.shares || message.cols != p.packets_per_share)
        throw std::invalid_argument("message matrix shape mismatch");
    if (f.modulus() < p.shares + 1)
        throw std::invalid_argument("field too small: need q >= shares + 1");

    PacketGrid out(p.shares, p.packets_per_share, message.width);
    for (std::uint32_t party = 1; party <= p.shares; ++party) {
        std::uint32_t power = 1;
        auto* acc = out.data.data() + static_cast<std::size_t>(party - 1) * p.packets_per_share * message.width;
        for (std::uint32_t r = 0; r < p.shares; ++r) {
            const auto* src = message.data.data() + static_cast<std::size_t>(r) * p.packets_per_share * message.width;
            for (std::size_t i = 0; i < p.packets_per_share * message.width; ++i)
                acc[i] = f.add(acc[i], f.mul(power, src[i]));
            power = f.mul(power, party);
        }
    }
    return out;
}

/// One party's contribution to a decode: its id and the first
/// prefix_packets[level] packets of its share.
struct LevelResponse {
    std::uint32_t party = 0;   // 1-based id; the evaluation point
    PacketSeq prefix;
};

struct ErrorDecodeResult {
    PacketSeq secret;
    std::vector<std::uint32_t> error_parties;  // ids with at least one corrected symbol
};

namespace detail {

inline void check_responses(const StaircaseParams& p, std::span<const LevelResponse> responses,
                            std::size_t level, std::size_t expected_count) {
    if (responses.size() != expected_count)
        throw std::invalid_argument("response count does not match decode level");
    for (std::size_t i = 0; i < responses.size(); ++i) {
        const auto& r = responses[i];
        if (r.party < 1 || r.party > p.shares)
            throw std::invalid_argument("response from unknown party id");
        if (r.prefix.count != p.prefix_packets[level])
            throw std::invalid_argument("response carries wrong packet count for level");
        for (std::size_t j = i + 1; j < responses.size(); ++j)
            if (responses[j].party == r.party)
                throw std::invalid_argument("duplicate party id in responses");
    }
}

// Shared cascade skeleton. solve_block(block, col_begin, col_end, rows_unknown,
// rhs) fills message rows [0, rows_unknown) of those columns and reports
// error locations, if any. rhs(i, c) yields response i's residual for
// column c after known rows have been subtracted.
template <typename SolveBlock>
PacketSeq run_cascade(const StaircaseParams& p, std::size_t level, PacketGrid& m,
                      SolveBlock&& solve_block) {
    const std::size_t width = m.width;

    for (std::size_t t = level + 1; t-- > 0;) {
        const std::uint64_t col_begin = t == 0 ? 0 : p.prefix_packets[t - 1];
        const std::uint64_t col_end = p.prefix_packets[t];
        const std::uint32_t support = p.level_contact[t];

        solve_block(col_begin, col_end, support);

        // Everything on rows [0, support) of this block is now known, so
        // the originals of its relocated entries are revealed.
        if (t > 0) {
            std::uint64_t cc = col_begin;
            std::uint32_t rr = 0;
            const std::uint32_t top_rows = support - p.privacy;
            detail::for_overflow(p.prefix_packets[t - 1], support, p.level_contact[t - 1],
                                 [&](std::uint32_t src_r, std::uint64_t src_c) {
                                     std::copy(m.packet(rr, cc).begin(), m.packet(rr, cc).end(),
                                               m.packet(src_r, src_c).begin());
                                     if (++rr == top_rows) {
                                         rr = 0;
                                         ++cc;
                                     }
                                 });
        }
    }

    // Secret sits in block 0's data rows, column-major.
    PacketSeq secret(p.secret_packets(), width);
    std::size_t next = 0;
    const std::uint32_t secret_rows = p.level_contact[0] - p.privacy;
    for (std::uint64_t c = 0; c < p.block_width[0]; ++c)
        for (std::uint32_t r = 0; r < secret_rows; ++r) {
            auto dst = secret.packet(next++);
            std::copy(m.packet(r, c).begin(), m.packet(r, c).end(), dst.begin());
        }
    return secret;
}

} // namespace detail

/// Cascade decode from exactly D honest responses, where D must be a
/// supported level contact count. Returns the secret packets.
inline PacketSeq decode_erasure(const Field& f, const StaircaseParams& p,
                                std::uint32_t contact_count,
                                std::span<const LevelResponse> responses) {
    const auto level_opt = p.level_for_contact(contact_count);
    if (!level_opt) throw std::invalid_argument("contact count is not a supported level");
    const std::size_t level = *level_opt;
    detail::check_responses(p, responses, level, contact_count);

    const std::uint32_t unknown = contact_count;
    std::vector<std::uint32_t> points;
    points.reserve(responses.size());
    for (const auto& r : responses) points.push_back(r.party);
    const Matrix vm = vandermonde(f, points, unknown);

    PacketGrid m(p.shares, p.prefix_packets[level], responses[0].prefix.width);
    const std::size_t width = m.width;

    auto solve_block = [&](std::uint64_t col_begin, std::uint64_t col_end, std::uint32_t support) {
        const std::size_t ncols = col_end - col_begin;
        Matrix rhs(unknown, ncols * width);
        for (std::size_t i = 0; i < responses.size(); ++i) {
            const auto& resp = responses[i];
            for (std::uint64_t c = col_begin; c < col_end; ++c) {
                auto pkt = resp.prefix.packet(c);
                for (std::size_t lane = 0; lane < width; ++lane) {
                    std::uint32_t val = pkt[lane];
                    // Subtract contributions of rows already revealed.
                    for (std::uint32_t r = unknown; r < support; ++r)
                        val = f.sub(val, f.mul(f.pow(resp.party, r), m.packet(r, c)[lane]));
                    rhs.at(i, (c - col_begin) * width + lane) = val;
                }
            }
        }
        const Matrix x = solve_linear(f, vm, std::move(rhs));
        for (std::uint32_t r = 0; r < unknown; ++r)
            for (std::uint64_t c = col_begin; c < col_end; ++c)
                for (std::size_t lane = 0; lane < width; ++lane)
                    m.packet(r, c)[lane] = x.at(r, (c - col_begin) * width + lane);
    };

    return detail::run_cascade(p, level, m, solve_block);
}

namespace detail {

/// Berlekamp-Welch: recovers the coefficients of a polynomial of degree
/// < deg_bound from values at distinct points xs, at most `budget` of
/// which are wrong. Requires xs.size() >= deg_bound + 2*budget. Returns
/// the coefficients and the indices (into xs) of disagreeing points.
inline std::optional<std::pair<std::vector<std::uint32_t>, std::vector<std::size_t>>>
berlekamp_welch(const Field& f, std::span<const std::uint32_t> xs,
                std::span<const std::uint32_t> ys, std::size_t deg_bound, std::size_t budget) {
    const std::size_t n = xs.size();
    for (std::size_t errs = 0; errs <= budget; ++errs) {
        // Unknowns: Q of degree < deg_bound + errs, E monic of degree errs.
        // Constraint per point: Q(x) - y * (E_low(x)) = y * x^errs.
        const std::size_t nq = deg_bound + errs;
        const std::size_t nvars = nq + errs;
        // Row-reduce the augmented system, allowing free variables (set to 0).
        Matrix sys(n, nvars + 1);
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t xp = 1;
            for (std::size_t t = 0; t < nq; ++t) {
                sys.at(i, t) = xp;
                xp = f.mul(xp, xs[i]);
            }
            xp = 1;
            for (std::size_t t = 0; t < errs; ++t) {
                sys.at(i, nq + t) = f.neg(f.mul(ys[i], xp));
                xp = f.mul(xp, xs[i]);
            }
            sys.at(i, nvars) = f.mul(ys[i], f.pow(xs[i], errs));
        }
        // Gauss-Jordan with column pivots; detect inconsistency.
        std::vector<std::size_t> pivot_col;
        std::size_t row = 0;
        for (std::size_t col = 0; col < nvars && row < n; ++col) {
            std::size_t pr = row;
            while (pr < n && sys.at(pr, col) == 0) ++pr;
            if (pr == n) continue;
            if (pr != row)
                for (std::size_t c = 0; c <= nvars; ++c) std::swap(sys.at(pr, c), sys.at(row, c));
            const std::uint32_t piv_inv = f.inv(sys.at(row, col));
            for (std::size_t c = col; c <= nvars; ++c) sys.at(row, c) = f.mul(sys.at(row, c), piv_inv);
            for (std::size_t r2 = 0; r2 < n; ++r2) {
                if (r2 == row) continue;
                const std::uint32_t factor = sys.at(r2, col);
                if (factor == 0) continue;
                for (std::size_t c = col; c <= nvars; ++c)
                    sys.at(r2, c) = f.sub(sys.at(r2, c), f.mul(factor, sys.at(row, c)));
            }
            pivot_col.push_back(col);
            ++row;
        }
        bool inconsistent = false;
        for (std::size_t r2 = row; r2 < n; ++r2)
            if (sys.at(r2, nvars) != 0) inconsistent = true;
        if (inconsistent) continue;

        std::vector<std::uint32_t> sol(nvars, 0);  // free variables fixed to 0
        for (std::size_t r2 = 0; r2 < pivot_col.size(); ++r2) sol[pivot_col[r2]] = sys.at(r2, nvars);

        std::vector<std::uint32_t> qpoly(sol.begin(), sol.begin() + nq);
        std::vector<std::uint32_t> epoly(sol.begin() + nq, sol.end());
        epoly.push_back(1);  // monic

        // Divide Q by E; remainder must vanish.
        std::vector<std::uint32_t> rem = qpoly;
        std::vector<std::uint32_t> quot(deg_bound, 0);
        bool exact = true;
        for (std::size_t t = nq; t-- > errs;) {
            const std::uint32_t coef = rem[t];
            if (coef == 0) continue;
            quot[t - errs] = coef;
            for (std::size_t u = 0; u <= errs; ++u)
                rem[t - errs + u] = f.sub(rem[t - errs + u], f.mul(coef, epoly[u]));
        }
        if (!exact) continue;
        for (std::size_t t = 0; t < errs; ++t)
            if (rem[t] != 0) exact = false;
        if (!exact) continue;

        std::vector<std::size_t> bad;
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t val = 0, xp = 1;
            for (std::size_t t = 0; t < deg_bound; ++t) {
                val = f.add(val, f.mul(quot[t], xp));
                xp = f.mul(xp, xs[i]);
            }
            if (val != ys[i]) bad.push_back(i);
        }
        if (bad.size() > errs) continue;
        return std::make_pair(std::move(quot), std::move(bad));
    }
    return std::nullopt;
}

} // namespace detail

/// Cascade decode tolerating up to `error_budget` arbitrarily corrupted
/// responses. Requires responses.size() == D_level + 2*error_budget.
/// Each column is recovered per lane with Berlekamp-Welch.
inline ErrorDecodeResult decode_with_errors(const Field& f, const StaircaseParams& p,
                                            std::span<const LevelResponse> responses,
                                            std::size_t error_budget) {
    if (responses.empty()) throw std::invalid_argument("no responses");
    std::optional<std::size_t> level_opt;
    for (std::size_t j = 0; j < p.level_count(); ++j)
        if (p.level_contact[j] + 2 * error_budget == responses.size()) level_opt = j;
    if (!level_opt)
        throw std::invalid_argument("response count does not equal level contact + 2*budget");
    const std::size_t level = *level_opt;
    const std::uint32_t unknown = p.level_contact[level];
    detail::check_responses(p, responses, level, unknown + 2 * error_budget);

    std::vector<std::uint32_t> points;
    points.reserve(responses.size());
    for (const auto& r : responses) points.push_back(r.party);
    vandermonde(f, points, 1);  // validates distinct nonzero ids

    PacketGrid m(p.shares, p.prefix_packets[level], responses[0].prefix.width);
    const std::size_t width = m.width;
    std::vector<bool> flagged(responses.size(), false);

    auto solve_block = [&](std::uint64_t col_begin, std::uint64_t col_end, std::uint32_t support) {
        std::vector<std::uint32_t> ys(responses.size());
        for (std::uint64_t c = col_begin; c < col_end; ++c) {
            for (std::size_t lane = 0; lane < width; ++lane) {
                for (std::size_t i = 0; i < responses.size(); ++i) {
                    std::uint32_t val = responses[i].prefix.packet(c)[lane];
                    for (std::uint32_t r = unknown; r < support; ++r)
                        val = f.sub(val, f.mul(f.pow(responses[i].party, r), m.packet(r, c)[lane]));
                    ys[i] = val;
                }
                auto decoded = detail::berlekamp_welch(f, points, ys, unknown, error_budget);
                if (!decoded) throw DecodingFailure{};
                for (std::uint32_t r = 0; r < unknown; ++r) m.packet(r, c)[lane] = decoded->first[r];
                for (std::size_t idx : decoded->second) flagged[idx] = true;
            }
        }
    };

    ErrorDecodeResult result;
    result.secret = detail::run_cascade(p, level, m, solve_block);
    for (std::size_t i = 0; i < responses.size(); ++i)
        if (flagged[i]) result.error_parties.push_back(responses[i].party);
    std::sort(result.error_parties.begin(), result.error_parties.end());
    return result;
}

} // namespace rcess
