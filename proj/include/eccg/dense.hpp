#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "eccg/errors.hpp"

// Small dense helpers used by the encoding, diagnostics, and recovery
// modules. Intentionally dependency-free; everything here runs at desk
// scale (a few hundred rows) where O(n^3) dense work is cheap. The scalar
// type is a template parameter so the purified-system oracle can run in
// extended precision; double is the default everywhere else.

namespace eccg {

/// Row-major dense matrix.
template <typename Scalar>
class DenseMatrixT {
public:
    DenseMatrixT() = default;
    DenseMatrixT(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, Scalar(0)) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    Scalar& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    Scalar operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<const Scalar> data() const { return data_; }
    std::span<Scalar> data() { return data_; }

    static DenseMatrixT identity(std::size_t n) {
        DenseMatrixT m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = Scalar(1);
        return m;
    }

    DenseMatrixT transposed() const {
        DenseMatrixT t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    Scalar max_abs() const {
        Scalar m(0);
        for (Scalar v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    Scalar frobenius_norm() const {
        Scalar acc(0);
        for (Scalar v : data_) acc += v * v;
        return std::sqrt(acc);
    }

    friend bool operator==(const DenseMatrixT& a, const DenseMatrixT& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Scalar> data_;
};

using DenseMatrix = DenseMatrixT<double>;

template <typename Scalar>
struct EigenDecompositionT {
    std::vector<Scalar> values;    // ascending
    DenseMatrixT<Scalar> vectors;  // column j pairs with values[j]
};

using EigenDecomposition = EigenDecompositionT<double>;

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Converges when the off-diagonal Frobenius norm drops below
/// 1e-12 times the matrix Frobenius norm.
template <typename Scalar>
EigenDecompositionT<Scalar> jacobi_eigensolve(DenseMatrixT<Scalar> a,
                                              std::size_t max_sweeps = 100) {
    if (a.rows() != a.cols())
        throw DimensionError("jacobi_eigensolve: matrix must be square");
    const std::size_t n = a.rows();
    DenseMatrixT<Scalar> v = DenseMatrixT<Scalar>::identity(n);
    const Scalar scale = a.frobenius_norm();

    auto off_norm = [&]() {
        Scalar acc(0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) acc += Scalar(2) * a(i, j) * a(i, j);
        return std::sqrt(acc);
    };

    if (scale > Scalar(0)) {
        for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
            if (off_norm() <= Scalar(1e-12) * scale) break;
            for (std::size_t p = 0; p + 1 < n; ++p) {
                for (std::size_t q = p + 1; q < n; ++q) {
                    const Scalar apq = a(p, q);
                    if (std::abs(apq) <= Scalar(1e-300)) continue;
                    const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
                    const Scalar t = (theta >= Scalar(0) ? Scalar(1) : Scalar(-1)) /
                                     (std::abs(theta) + std::sqrt(theta * theta + Scalar(1)));
                    const Scalar c = Scalar(1) / std::sqrt(t * t + Scalar(1));
                    const Scalar s = t * c;
                    const Scalar tau = s / (Scalar(1) + c);

                    const Scalar app = a(p, p);
                    const Scalar aqq = a(q, q);
                    a(p, p) = app - t * apq;
                    a(q, q) = aqq + t * apq;
                    a(p, q) = Scalar(0);
                    a(q, p) = Scalar(0);
                    for (std::size_t i = 0; i < n; ++i) {
                        if (i == p || i == q) continue;
                        const Scalar aip = a(i, p);
                        const Scalar aiq = a(i, q);
                        a(i, p) = aip - s * (aiq + tau * aip);
                        a(p, i) = a(i, p);
                        a(i, q) = aiq + s * (aip - tau * aiq);
                        a(q, i) = a(i, q);
                    }
                    for (std::size_t i = 0; i < n; ++i) {
                        const Scalar vip = v(i, p);
                        const Scalar viq = v(i, q);
                        v(i, p) = vip - s * (viq + tau * vip);
                        v(i, q) = viq + s * (vip - tau * viq);
                    }
                }
            }
        }
    }

    EigenDecompositionT<Scalar> result;
    result.values.resize(n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<Scalar> diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = a(i, i);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return diag[x] < diag[y]; });
    result.vectors = DenseMatrixT<Scalar>(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        result.values[j] = diag[order[j]];
        for (std::size_t i = 0; i < n; ++i) result.vectors(i, j) = v(i, order[j]);
    }
    return result;
}

/// Minimum-norm least-squares solution of a symmetric system via the
/// eigendecomposition pseudoinverse. Eigenvalues with magnitude at or below
/// rel_cutoff times the largest magnitude are treated as zero.
template <typename Scalar>
std::vector<Scalar> sym_pinv_solve(const DenseMatrixT<Scalar>& m, std::span<const Scalar> rhs,
                                   double rel_cutoff = 1e-10) {
    if (m.rows() != rhs.size())
        throw DimensionError("sym_pinv_solve: rhs length mismatch");
    const std::size_t n = m.rows();
    const EigenDecompositionT<Scalar> eig = jacobi_eigensolve(m);
    Scalar max_mag(0);
    for (Scalar lambda : eig.values) max_mag = std::max(max_mag, std::abs(lambda));
    const Scalar cutoff = Scalar(rel_cutoff) * max_mag;

    // x = V diag(1/lambda restricted to the numerical range) V^T rhs
    std::vector<Scalar> coeffs(n, Scalar(0));
    for (std::size_t j = 0; j < n; ++j) {
        if (std::abs(eig.values[j]) <= cutoff) continue;
        Scalar dot(0);
        for (std::size_t i = 0; i < n; ++i) dot += eig.vectors(i, j) * rhs[i];
        coeffs[j] = dot / eig.values[j];
    }
    std::vector<Scalar> x(n, Scalar(0));
    for (std::size_t i = 0; i < n; ++i) {
        Scalar acc(0);
        for (std::size_t j = 0; j < n; ++j) acc += eig.vectors(i, j) * coeffs[j];
        x[i] = acc;
    }
    return x;
}

} // namespace eccg
