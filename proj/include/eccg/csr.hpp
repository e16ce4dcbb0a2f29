#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "eccg/errors.hpp"

namespace eccg {

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Sparse matrix in compressed-row form.
///
/// Invariants: row offsets start at 0, end at nnz, and are nondecreasing;
/// column indices are strictly increasing within each row. Matrices meant to
/// be symmetric are stored fully expanded (both triangles present); see
/// is_symmetric() for the exact-storage check.
class CsrMatrix {
public:
    CsrMatrix() = default;

    /// Builds a CSR matrix from coordinate entries. Entries may arrive in any
    /// order; duplicates at the same (row, col) are summed in input order.
    static CsrMatrix from_triplets(std::size_t n_rows, std::size_t n_cols,
                                   std::vector<Triplet> entries) {
        for (const Triplet& t : entries) {
            if (t.row >= n_rows || t.col >= n_cols)
                throw BoundsError("CsrMatrix: entry index out of bounds");
        }
        std::stable_sort(entries.begin(), entries.end(),
                         [](const Triplet& a, const Triplet& b) {
                             return a.row != b.row ? a.row < b.row : a.col < b.col;
                         });

        CsrMatrix m;
        m.n_rows_ = n_rows;
        m.n_cols_ = n_cols;
        m.row_offsets_.assign(n_rows + 1, 0);
        m.col_indices_.reserve(entries.size());
        m.values_.reserve(entries.size());
        for (std::size_t i = 0; i < entries.size();) {
            const std::size_t row = entries[i].row;
            const std::size_t col = entries[i].col;
            double sum = 0.0;
            for (; i < entries.size() && entries[i].row == row && entries[i].col == col; ++i)
                sum += entries[i].value;
            m.col_indices_.push_back(col);
            m.values_.push_back(sum);
            m.row_offsets_[row + 1] = m.col_indices_.size();
        }
        for (std::size_t r = 1; r <= n_rows; ++r)
            m.row_offsets_[r] = std::max(m.row_offsets_[r], m.row_offsets_[r - 1]);
        return m;
    }

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return n_cols_; }
    std::size_t nnz() const { return values_.size(); }

    std::span<const std::size_t> row_offsets() const { return row_offsets_; }
    std::span<const std::size_t> col_indices() const { return col_indices_; }
    std::span<const double> values() const { return values_; }

    /// Column indices of stored entries in row r, ascending.
    std::span<const std::size_t> row_cols(std::size_t r) const {
        return {col_indices_.data() + row_offsets_[r],
                row_offsets_[r + 1] - row_offsets_[r]};
    }
    std::span<const double> row_values(std::size_t r) const {
        return {values_.data() + row_offsets_[r],
                row_offsets_[r + 1] - row_offsets_[r]};
    }

    /// Value at (r, c); zero when the entry is not stored.
    double at(std::size_t r, std::size_t c) const {
        const auto cols = row_cols(r);
        const auto it = std::lower_bound(cols.begin(), cols.end(), c);
        if (it == cols.end() || *it != c) return 0.0;
        return row_values(r)[static_cast<std::size_t>(it - cols.begin())];
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    std::size_t n_rows_ = 0;
    std::size_t n_cols_ = 0;
    std::vector<std::size_t> row_offsets_{0};
    std::vector<std::size_t> col_indices_;
    std::vector<double> values_;
};

/// 1-D model problem: tridiagonal matrix with stencil [-1 2 -1]; SPD.
inline CsrMatrix gen_ltridiag(std::size_t n) {
    if (n < 2) throw InvalidArgumentError("gen_ltridiag: n must be at least 2");
    std::vector<Triplet> entries;
    entries.reserve(3 * n - 2);
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) entries.push_back({i, i - 1, -1.0});
        entries.push_back({i, i, 2.0});
        if (i + 1 < n) entries.push_back({i, i + 1, -1.0});
    }
    return CsrMatrix::from_triplets(n, n, std::move(entries));
}

/// True iff the stored pattern and values are exactly symmetric.
inline bool is_symmetric(const CsrMatrix& a) {
    if (a.n_rows() != a.n_cols()) return false;
    for (std::size_t i = 0; i < a.n_rows(); ++i) {
        const auto cols = a.row_cols(i);
        const auto vals = a.row_values(i);
        for (std::size_t e = 0; e < cols.size(); ++e) {
            if (a.at(cols[e], i) != vals[e]) return false;
        }
    }
    return true;
}

} // namespace eccg
