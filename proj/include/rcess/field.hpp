#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcess/rng.hpp"

namespace rcess {

/// Thrown when a linear system has no unique solution.
struct SingularSystemError : std::runtime_error {
    SingularSystemError() : std::runtime_error("singular system") {}
};

/// Prime field F_q with q <= 2^31 - 1 so that products fit in 64-bit
/// intermediates. Elements are uint32_t values in [0, q).
class Field {
public:
    explicit Field(std::uint32_t q) : q_(q) {
        if (q < 3 || q > 0x7fffffffu || !is_prime(q))
            throw std::invalid_argument("field modulus must be an odd prime in [3, 2^31-1], got " +
                                        std::to_string(q));
    }

    std::uint32_t modulus() const { return q_; }

    std::uint32_t add(std::uint32_t a, std::uint32_t b) const {
        std::uint32_t s = a + b;  // < 2^32, both < 2^31
        return s >= q_ ? s - q_ : s;
    }

    std::uint32_t sub(std::uint32_t a, std::uint32_t b) const {
        return a >= b ? a - b : a + q_ - b;
    }

    std::uint32_t neg(std::uint32_t a) const { return a == 0 ? 0 : q_ - a; }

    std::uint32_t mul(std::uint32_t a, std::uint32_t b) const {
        return static_cast<std::uint32_t>((static_cast<std::uint64_t>(a) * b) % q_);
    }

    std::uint32_t pow(std::uint32_t a, std::uint64_t e) const {
        std::uint64_t base = a % q_, acc = 1;
        while (e != 0) {
            if (e & 1) acc = acc * base % q_;
            base = base * base % q_;
            e >>= 1;
        }
        return static_cast<std::uint32_t>(acc);
    }

    std::uint32_t inv(std::uint32_t a) const {
        if (a == 0) throw std::domain_error("division by zero in field");
        return pow(a, q_ - 2);
    }

    std::uint32_t reduce(std::uint64_t x) const { return static_cast<std::uint32_t>(x % q_); }

    /// Uniform field element.
    std::uint32_t random(Rng& rng) const { return rng.below(q_); }

    bool operator==(const Field& other) const { return q_ == other.q_; }

private:
    static bool is_prime(std::uint32_t n) {
        if (n % 2 == 0) return n == 2;
        for (std::uint32_t d = 3; static_cast<std::uint64_t>(d) * d <= n; d += 2)
            if (n % d == 0) return false;
        return true;
    }

    std::uint32_t q_;
};

/// Inner product of two equal-length element sequences.
inline std::uint32_t dot(const Field& f, std::span<const std::uint32_t> a,
                         std::span<const std::uint32_t> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("dot: length mismatch");
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += static_cast<std::uint64_t>(a[i]) * b[i] % f.modulus();
        if (acc >= (1ULL << 62)) acc %= f.modulus();
    }
    return f.reduce(acc);
}

/// Dense row-major matrix over a prime field. The field is supplied per
/// operation; entries are expected to be reduced.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint32_t> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0) {}

    std::uint32_t& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    std::uint32_t at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

    std::span<std::uint32_t> row(std::size_t r) { return {a.data() + r * cols, cols}; }
    std::span<const std::uint32_t> row(std::size_t r) const { return {a.data() + r * cols, cols}; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1;
        return m;
    }

    bool operator==(const Matrix&) const = default;
};

/// Vandermonde matrix: row i is (p_i^0, p_i^1, ..., p_i^{w-1}) for the
/// given evaluation points, which must be distinct and nonzero.
inline Matrix vandermonde(const Field& f, std::span<const std::uint32_t> points, std::size_t width) {
    if (width == 0) throw std::invalid_argument("vandermonde: width must be positive");
    if (points.size() > f.modulus() - 1)
        throw std::invalid_argument("vandermonde: more points than nonzero field elements");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i] == 0 || points[i] >= f.modulus())
            throw std::invalid_argument("vandermonde: points must be nonzero field elements");
        for (std::size_t j = i + 1; j < points.size(); ++j)
            if (points[i] == points[j])
                throw std::invalid_argument("vandermonde: duplicate evaluation point");
    }
    Matrix m(points.size(), width);
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::uint32_t p = 1;
        for (std::size_t c = 0; c < width; ++c) {
            m.at(i, c) = p;
            p = f.mul(p, points[i]);
        }
    }
    return m;
}

/// Solves A * X = B for square A, where B carries one column per lane.
/// Gaussian elimination with partial pivoting; throws SingularSystemError
/// when A has no inverse.
inline Matrix solve_linear(const Field& f, Matrix a, Matrix b) {
    if (a.rows != a.cols) throw std::invalid_argument("solve_linear: matrix not square");
    if (b.rows != a.rows) throw std::invalid_argument("solve_linear: dimension mismatch");
    const std::size_t n = a.rows, w = b.cols;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        while (pivot < n && a.at(pivot, col) == 0) ++pivot;
        if (pivot == n) throw SingularSystemError{};
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a.at(pivot, c), a.at(col, c));
            for (std::size_t c = 0; c < w; ++c) std::swap(b.at(pivot, c), b.at(col, c));
        }
        const std::uint32_t piv_inv = f.inv(a.at(col, col));
        for (std::size_t c = col; c < n; ++c) a.at(col, c) = f.mul(a.at(col, c), piv_inv);
        for (std::size_t c = 0; c < w; ++c) b.at(col, c) = f.mul(b.at(col, c), piv_inv);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const std::uint32_t factor = a.at(r, col);
            if (factor == 0) continue;
            for (std::size_t c = col; c < n; ++c)
                a.at(r, c) = f.sub(a.at(r, c), f.mul(factor, a.at(col, c)));
            for (std::size_t c = 0; c < w; ++c)
                b.at(r, c) = f.sub(b.at(r, c), f.mul(factor, b.at(col, c)));
        }
    }
    return b;
}

/// Rank over F_q by row elimination.
inline std::size_t rank(const Field& f, Matrix m) {
    std::size_t r = 0;
    for (std::size_t col = 0; col < m.cols && r < m.rows; ++col) {
        std::size_t pivot = r;
        while (pivot < m.rows && m.at(pivot, col) == 0) ++pivot;
        if (pivot == m.rows) continue;
        if (pivot != r)
            for (std::size_t c = 0; c < m.cols; ++c) std::swap(m.at(pivot, c), m.at(r, c));
        const std::uint32_t piv_inv = f.inv(m.at(r, col));
        for (std::size_t c = col; c < m.cols; ++c) m.at(r, c) = f.mul(m.at(r, c), piv_inv);
        for (std::size_t row2 = 0; row2 < m.rows; ++row2) {
            if (row2 == r) continue;
            const std::uint32_t factor = m.at(row2, col);
            if (factor == 0) continue;
            for (std::size_t c = col; c < m.cols; ++c)
                m.at(row2, c) = f.sub(m.at(row2, c), f.mul(factor, m.at(r, c)));
        }
        ++r;
    }
    return r;
}

} // namespace rcess
