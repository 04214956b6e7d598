#pragma once

#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpn/rng.hpp"

namespace lpn {

// Bit-packed vector over GF(2). Little-endian bit order within 64-bit words:
// bit i lives at word i/64, position i%64. Bits past size() in the last word
// are kept zero.
class BitVector {
public:
    BitVector() = default;
    explicit BitVector(size_t len) : len_(len), w_((len + 63) / 64, 0) {}

    static BitVector random(size_t len, Rng& rng) {
        BitVector v(len);
        for (auto& w : v.w_) w = rng.next_u64();
        v.mask_tail();
        return v;
    }

    // Parses "0101..." with index 0 first.
    static BitVector from_string(std::string_view bits) {
        BitVector v(bits.size());
        for (size_t i = 0; i < bits.size(); ++i)
            if (bits[i] == '1') v.set(i, true);
        return v;
    }

    size_t size() const { return len_; }
    size_t word_count() const { return w_.size(); }
    std::span<const uint64_t> words() const { return w_; }
    std::span<uint64_t> words() { return w_; }

    bool get(size_t i) const { return (w_[i >> 6] >> (i & 63)) & 1; }
    void set(size_t i, bool v) {
        const uint64_t m = uint64_t(1) << (i & 63);
        if (v)
            w_[i >> 6] |= m;
        else
            w_[i >> 6] &= ~m;
    }
    void flip(size_t i) { w_[i >> 6] ^= uint64_t(1) << (i & 63); }

    size_t popcount() const {
        size_t c = 0;
        for (uint64_t w : w_) c += static_cast<size_t>(__builtin_popcountll(w));
        return c;
    }

    bool any() const {
        for (uint64_t w : w_)
            if (w) return true;
        return false;
    }

    BitVector& operator^=(const BitVector& o) {
        if (o.len_ != len_) throw std::invalid_argument("BitVector xor: length mismatch");
        for (size_t i = 0; i < w_.size(); ++i) w_[i] ^= o.w_[i];
        return *this;
    }
    friend BitVector operator^(BitVector a, const BitVector& b) { return a ^= b; }

    bool operator==(const BitVector&) const = default;

    std::string to_string() const {
        std::string s(len_, '0');
        for (size_t i = 0; i < len_; ++i)
            if (get(i)) s[i] = '1';
        return s;
    }

    // Hex of the packed little-endian bytes, low byte first.
    std::string to_hex() const {
        static const char* digits = "0123456789abcdef";
        std::string s;
        const size_t nbytes = (len_ + 7) / 8;
        for (size_t b = 0; b < nbytes; ++b) {
            const uint8_t byte = static_cast<uint8_t>(w_[b / 8] >> (8 * (b % 8)));
            s.push_back(digits[byte >> 4]);
            s.push_back(digits[byte & 15]);
        }
        return s;
    }

    void mask_tail() {
        if (len_ % 64) w_.back() &= (uint64_t(1) << (len_ % 64)) - 1;
    }

private:
    size_t len_ = 0;
    std::vector<uint64_t> w_;
};

inline int parity_of_and(std::span<const uint64_t> a, std::span<const uint64_t> b) {
    uint64_t acc = 0;
    for (size_t i = 0; i < a.size(); ++i) acc ^= a[i] & b[i];
    return __builtin_parityll(acc);
}

// <a, b> over GF(2): popcount(a AND b) mod 2.
inline int dot_parity(const BitVector& a, const BitVector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot_parity: length mismatch");
    return parity_of_and(a.words(), b.words());
}

// Row-major bit-packed matrix over GF(2). Each row is stored in
// words_per_row() contiguous words and obeys the BitVector tail invariant.
class BitMatrix {
public:
    BitMatrix() = default;
    BitMatrix(size_t rows, size_t cols)
        : rows_(rows), cols_(cols), wpr_((cols + 63) / 64), w_(rows * wpr_, 0) {}

    static BitMatrix identity(size_t n) {
        BitMatrix m(n, n);
        for (size_t i = 0; i < n; ++i) m.set(i, i, true);
        return m;
    }

    static BitMatrix random(size_t rows, size_t cols, Rng& rng) {
        BitMatrix m(rows, cols);
        for (size_t r = 0; r < rows; ++r) {
            auto w = m.row_words(r);
            for (auto& x : w) x = rng.next_u64();
            m.mask_row_tail(r);
        }
        return m;
    }

    size_t rows() const { return rows_; }
    size_t cols() const { return cols_; }
    size_t words_per_row() const { return wpr_; }

    bool get(size_t r, size_t c) const { return (w_[r * wpr_ + (c >> 6)] >> (c & 63)) & 1; }
    void set(size_t r, size_t c, bool v) {
        const uint64_t m = uint64_t(1) << (c & 63);
        if (v)
            w_[r * wpr_ + (c >> 6)] |= m;
        else
            w_[r * wpr_ + (c >> 6)] &= ~m;
    }

    std::span<const uint64_t> row_words(size_t r) const { return {w_.data() + r * wpr_, wpr_}; }
    std::span<uint64_t> row_words(size_t r) { return {w_.data() + r * wpr_, wpr_}; }

    BitVector row(size_t r) const {
        BitVector v(cols_);
        std::memcpy(v.words().data(), w_.data() + r * wpr_, wpr_ * sizeof(uint64_t));
        return v;
    }

    void set_row(size_t r, const BitVector& v) {
        if (v.size() != cols_) throw std::invalid_argument("set_row: width mismatch");
        std::memcpy(w_.data() + r * wpr_, v.words().data(), wpr_ * sizeof(uint64_t));
    }

    void xor_row_into(size_t dst, std::span<const uint64_t> src) {
        uint64_t* d = w_.data() + dst * wpr_;
        for (size_t i = 0; i < wpr_; ++i) d[i] ^= src[i];
    }

    void swap_rows(size_t a, size_t b) {
        if (a == b) return;
        uint64_t* pa = w_.data() + a * wpr_;
        uint64_t* pb = w_.data() + b * wpr_;
        for (size_t i = 0; i < wpr_; ++i) std::swap(pa[i], pb[i]);
    }

    BitMatrix transposed() const {
        BitMatrix t(cols_, rows_);
        for (size_t r = 0; r < rows_; ++r) {
            auto w = row_words(r);
            for (size_t wi = 0; wi < wpr_; ++wi) {
                uint64_t x = w[wi];
                while (x) {
                    const size_t c = wi * 64 + static_cast<size_t>(__builtin_ctzll(x));
                    x &= x - 1;
                    t.set(c, r, true);
                }
            }
        }
        return t;
    }

    // A * x as a column vector: out_r = <row_r(A), x>.
    BitVector mul(const BitVector& x) const {
        if (x.size() != cols_) throw std::invalid_argument("mul: width mismatch");
        BitVector out(rows_);
        for (size_t r = 0; r < rows_; ++r)
            if (parity_of_and(row_words(r), x.words())) out.set(r, true);
        return out;
    }

    bool operator==(const BitMatrix&) const = default;

    void mask_row_tail(size_t r) {
        if (cols_ % 64) w_[r * wpr_ + wpr_ - 1] &= (uint64_t(1) << (cols_ % 64)) - 1;
    }

private:
    size_t rows_ = 0, cols_ = 0, wpr_ = 0;
    std::vector<uint64_t> w_;
};

// C = A * B over GF(2): row_i(C) = XOR of rows of B selected by bits of row_i(A).
inline BitMatrix operator*(const BitMatrix& a, const BitMatrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
    BitMatrix c(a.rows(), b.cols());
    for (size_t r = 0; r < a.rows(); ++r) {
        auto arw = a.row_words(r);
        for (size_t wi = 0; wi < a.words_per_row(); ++wi) {
            uint64_t x = arw[wi];
            while (x) {
                const size_t k = wi * 64 + static_cast<size_t>(__builtin_ctzll(x));
                x &= x - 1;
                c.xor_row_into(r, b.row_words(k));
            }
        }
    }
    return c;
}

// Solves M * s = y (rows of M are equations) by Gauss-Jordan elimination with
// pivoting on the first set bit of each column. Returns nullopt when M is
// singular. Deterministic for a given input.
inline std::optional<BitVector> solve_linear_system(BitMatrix m, BitVector y) {
    const size_t n = m.rows();
    if (m.cols() != n || y.size() != n) throw std::invalid_argument("solve_linear_system: not square");
    size_t piv = 0;
    std::vector<size_t> pivot_row(n, 0);
    for (size_t col = 0; col < n; ++col) {
        size_t sel = piv;
        while (sel < n && !m.get(sel, col)) ++sel;
        if (sel == n) return std::nullopt;
        m.swap_rows(piv, sel);
        if (y.get(piv) != y.get(sel)) {
            y.flip(piv);
            y.flip(sel);
        }
        auto pw = m.row_words(piv);
        for (size_t r = 0; r < n; ++r) {
            if (r != piv && m.get(r, col)) {
                m.xor_row_into(r, pw);
                if (y.get(piv)) y.flip(r);
            }
        }
        pivot_row[col] = piv;
        ++piv;
    }
    BitVector s(n);
    for (size_t col = 0; col < n; ++col) s.set(col, y.get(pivot_row[col]));
    return s;
}

// Solve with re-multiplication check; a mismatch would mean elimination broke.
inline std::optional<BitVector> solve_linear_system_checked(const BitMatrix& m, const BitVector& y) {
    auto s = solve_linear_system(m, y);
    if (s && m.mul(*s) != y) throw std::logic_error("solve_linear_system: verification failed");
    return s;
}

// Solves s^t A = y^t. This is the column-combination convention: s weights the
// rows of A to produce the row vector y^t, i.e. A^t s = y.
inline std::optional<BitVector> gauss_solve(const BitMatrix& a, const BitVector& y) {
    if (a.rows() != a.cols()) throw std::invalid_argument("gauss_solve: matrix not square");
    if (y.size() != a.cols()) throw std::invalid_argument("gauss_solve: rhs size mismatch");
    return solve_linear_system_checked(a.transposed(), y);
}

// Gauss-Jordan inversion. Returns nullopt when singular.
inline std::optional<BitMatrix> invert(BitMatrix m) {
    const size_t n = m.rows();
    if (m.cols() != n) throw std::invalid_argument("invert: matrix not square");
    BitMatrix inv = BitMatrix::identity(n);
    for (size_t col = 0; col < n; ++col) {
        size_t sel = col;
        while (sel < n && !m.get(sel, col)) ++sel;
        if (sel == n) return std::nullopt;
        m.swap_rows(col, sel);
        inv.swap_rows(col, sel);
        auto pw = m.row_words(col);
        auto iw = inv.row_words(col);
        for (size_t r = 0; r < n; ++r) {
            if (r != col && m.get(r, col)) {
                m.xor_row_into(r, pw);
                inv.xor_row_into(r, iw);
            }
        }
    }
    return inv;
}

inline size_t rank(BitMatrix m) {
    const size_t n = m.rows();
    size_t piv = 0;
    for (size_t col = 0; col < m.cols() && piv < n; ++col) {
        size_t sel = piv;
        while (sel < n && !m.get(sel, col)) ++sel;
        if (sel == n) continue;
        m.swap_rows(piv, sel);
        auto pw = m.row_words(piv);
        for (size_t r = piv + 1; r < n; ++r)
            if (m.get(r, col)) m.xor_row_into(r, pw);
        ++piv;
    }
    return piv;
}

// Greedy left-to-right scan keeping rows that grow the rank, until `want`
// independent rows are found. Returns their indices, or nullopt if the matrix
// has rank below `want`.
inline std::optional<std::vector<size_t>> select_independent_rows(const BitMatrix& m, size_t want) {
    if (want > m.cols()) return std::nullopt;
    std::vector<BitVector> basis;          // reduced representatives
    std::vector<size_t> pivot_bit;         // first set bit of each basis vector
    std::vector<size_t> chosen;
    for (size_t r = 0; r < m.rows() && chosen.size() < want; ++r) {
        BitVector v = m.row(r);
        for (size_t k = 0; k < basis.size(); ++k)
            if (v.get(pivot_bit[k])) v ^= basis[k];
        if (!v.any()) continue;
        size_t p = 0;
        while (!v.get(p)) ++p;
        // keep basis reduced against the new pivot
        for (size_t k = 0; k < basis.size(); ++k)
            if (basis[k].get(p)) basis[k] ^= v;
        basis.push_back(std::move(v));
        pivot_bit.push_back(p);
        chosen.push_back(r);
    }
    if (chosen.size() < want) return std::nullopt;
    return chosen;
}

struct ColumnBlock {
    std::vector<size_t> cols;  // indices of the selected columns, ascending
    BitMatrix inverse;         // inverse of the n x n block they form
};

// Picks the first n linearly independent columns of an n x m matrix (m >= n)
// and returns them with the inverse of the block. Rank-deficient inputs give
// nullopt.
inline std::optional<ColumnBlock> select_invertible_block(const BitMatrix& a) {
    const size_t n = a.rows();
    if (a.cols() < n) throw std::invalid_argument("select_invertible_block: fewer columns than rows");
    const BitMatrix at = a.transposed();
    auto rows = select_independent_rows(at, n);
    if (!rows) return std::nullopt;
    // Block B has the selected columns of A as its columns; gathered rows of
    // A^t form B^t, so B^{-1} = (gathered^{-1})^t.
    BitMatrix gathered(n, n);
    for (size_t i = 0; i < n; ++i) gathered.set_row(i, at.row((*rows)[i]));
    auto gi = invert(gathered);
    if (!gi) return std::nullopt;
    return ColumnBlock{std::move(*rows), gi->transposed()};
}

}  // namespace lpn
