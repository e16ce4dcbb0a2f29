#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "eccg/csr.hpp"
#include "eccg/errors.hpp"
#include "eccg/mask.hpp"

// Masked aggregation kernels. All reductions accumulate in fixed ascending
// index order so identical inputs give bitwise-identical results.

namespace eccg {

/// Row-wise sparse matrix-vector product skipping masked columns.
/// Rows excluded by out_rows are returned as 0 and carry no defined value;
/// callers treat them as frozen/absent.
inline std::vector<double> spmv_masked(const CsrMatrix& a, std::span<const double> p,
                                       const IndexMask& mask, const IndexMask& out_rows) {
    if (p.size() != a.n_cols())
        throw DimensionError("spmv_masked: vector length does not match columns");
    if (mask.universe_size() != a.n_cols())
        throw DimensionError("spmv_masked: column mask universe mismatch");
    if (out_rows.universe_size() != a.n_rows())
        throw DimensionError("spmv_masked: row mask universe mismatch");

    std::vector<double> out(a.n_rows(), 0.0);
    for (std::size_t i = 0; i < a.n_rows(); ++i) {
        if (out_rows.excludes(i)) continue;
        const auto cols = a.row_cols(i);
        const auto vals = a.row_values(i);
        double acc = 0.0;
        for (std::size_t e = 0; e < cols.size(); ++e) {
            if (mask.excludes(cols[e])) continue;
            acc += vals[e] * p[cols[e]];
        }
        out[i] = acc;
    }
    return out;
}

/// Masked inner product: sum of u_i * v_i over indices not excluded.
inline double inner_masked(std::span<const double> u, std::span<const double> v,
                           const IndexMask& mask) {
    if (u.size() != v.size())
        throw DimensionError("inner_masked: vector lengths differ");
    if (mask.universe_size() != u.size())
        throw DimensionError("inner_masked: mask universe mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (mask.excludes(i)) continue;
        acc += u[i] * v[i];
    }
    return acc;
}

/// Masked Euclidean norm.
inline double norm2_masked(std::span<const double> v, const IndexMask& mask) {
    return std::sqrt(inner_masked(v, v, mask));
}

} // namespace eccg
