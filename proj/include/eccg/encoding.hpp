#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "eccg/csr.hpp"
#include "eccg/dense.hpp"
#include "eccg/errors.hpp"
#include "eccg/kernels.hpp"
#include "eccg/mask.hpp"
#include "eccg/rng.hpp"

// Encoding of a raw SPD system A x = b into the singular-but-consistent
// augmented system
//
//     [ A      A E    ] [ y ]   [ b     ]
//     [ E^T A  E^T A E] [ z ] = [ E^T b ]
//
// whose null space is spanned by the columns of [E; -I_k]. The augmented
// matrix keeps A sparse and stores the border blocks A*E and E^T A E dense,
// so a masked row-wise product costs O(nnz + n*k + k^2).

namespace eccg {

/// Dense n-by-k encoder. Entries are N(0, 1)/sqrt(n) draws generated in
/// column-major order from a seeded stream; the same (n, k, seed) triple
/// reproduces the matrix bitwise.
class EncodingMatrix {
public:
    EncodingMatrix() = default;
    EncodingMatrix(std::size_t n, std::size_t k, std::uint64_t seed, std::vector<double> entries)
        : n_(n), k_(k), seed_(seed), entries_(std::move(entries)) {}

    std::size_t n() const { return n_; }
    std::size_t k() const { return k_; }
    std::uint64_t seed() const { return seed_; }

    double operator()(std::size_t i, std::size_t c) const { return entries_[i * k_ + c]; }
    std::span<const double> entries() const { return entries_; }

    DenseMatrix as_dense() const {
        DenseMatrix m(n_, k_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t c = 0; c < k_; ++c) m(i, c) = (*this)(i, c);
        return m;
    }

    /// k-by-n transpose, the matrix whose Kruskal rank matters.
    DenseMatrix transposed_dense() const {
        DenseMatrix m(k_, n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t c = 0; c < k_; ++c) m(c, i) = (*this)(i, c);
        return m;
    }

    friend bool operator==(const EncodingMatrix& a, const EncodingMatrix& b) {
        return a.n_ == b.n_ && a.k_ == b.k_ && a.entries_ == b.entries_;
    }

private:
    std::size_t n_ = 0;
    std::size_t k_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<double> entries_; // row-major storage, column-major generation
};

/// Gaussian encoder scaled by 1/sqrt(n). Such a matrix has Kruskal rank k
/// with high probability.
inline EncodingMatrix gen_gaussian_encoding(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k > n) throw DimensionError("gen_gaussian_encoding: k must not exceed n");
    std::vector<double> entries(n * k, 0.0);
    GaussianStream gauss(seed);
    const double scale = n > 0 ? 1.0 / std::sqrt(static_cast<double>(n)) : 1.0;
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t i = 0; i < n; ++i) entries[i * k + c] = gauss.next() * scale;
    return EncodingMatrix(n, k, seed, std::move(entries));
}

/// The augmented system in hybrid storage: raw A sparse, border blocks dense.
class EncodedSystem {
public:
    EncodedSystem() = default;

    std::size_t n() const { return n_; }
    std::size_t k() const { return k_; }
    std::size_t dim() const { return n_ + k_; }

    const CsrMatrix& raw() const { return raw_; }
    const EncodingMatrix& encoder() const { return encoder_; }
    const DenseMatrix& border() const { return border_; } // A*E, n-by-k
    const DenseMatrix& gram() const { return gram_; }     // E^T A E, k-by-k

    std::span<const double> rhs_raw() const { return rhs_raw_; }
    std::span<const double> rhs_augmented() const { return rhs_augmented_; }

    /// Largest entry magnitude of the augmented matrix.
    double max_abs() const { return max_abs_; }

    /// out[i] = (masked row i of the augmented matrix) . p for every row not
    /// excluded by row_mask; excluded rows are left untouched. Column and row
    /// masks both live over [0, n+k). Accumulation follows ascending global
    /// column order: stored raw entries first, then the dense border.
    void apply_masked(std::span<const double> p, const IndexMask& col_mask,
                      const IndexMask& row_mask, std::span<double> out) const {
        if (p.size() != dim() || out.size() != dim())
            throw DimensionError("EncodedSystem::apply_masked: vector length mismatch");
        if (col_mask.universe_size() != dim() || row_mask.universe_size() != dim())
            throw DimensionError("EncodedSystem::apply_masked: mask universe mismatch");

        for (std::size_t i = 0; i < n_; ++i) {
            if (row_mask.excludes(i)) continue;
            const auto cols = raw_.row_cols(i);
            const auto vals = raw_.row_values(i);
            double acc = 0.0;
            for (std::size_t e = 0; e < cols.size(); ++e) {
                if (col_mask.excludes(cols[e])) continue;
                acc += vals[e] * p[cols[e]];
            }
            for (std::size_t c = 0; c < k_; ++c) {
                if (col_mask.excludes(n_ + c)) continue;
                acc += border_(i, c) * p[n_ + c];
            }
            out[i] = acc;
        }
        for (std::size_t c = 0; c < k_; ++c) {
            if (row_mask.excludes(n_ + c)) continue;
            double acc = 0.0;
            // bottom-left block is (A*E)^T because A is symmetric
            for (std::size_t j = 0; j < n_; ++j) {
                if (col_mask.excludes(j)) continue;
                acc += border_(j, c) * p[j];
            }
            for (std::size_t c2 = 0; c2 < k_; ++c2) {
                if (col_mask.excludes(n_ + c2)) continue;
                acc += gram_(c, c2) * p[n_ + c2];
            }
            out[n_ + c] = acc;
        }
    }

    /// Unmasked product with the augmented matrix.
    std::vector<double> apply(std::span<const double> p) const {
        std::vector<double> out(dim(), 0.0);
        const IndexMask none(dim());
        apply_masked(p, none, none, out);
        return out;
    }

    friend EncodedSystem build_encoded_system(const CsrMatrix& a, std::span<const double> b,
                                              EncodingMatrix e);

private:
    std::size_t n_ = 0;
    std::size_t k_ = 0;
    CsrMatrix raw_;
    EncodingMatrix encoder_;
    DenseMatrix border_; // A*E
    DenseMatrix gram_;   // E^T A E, exactly symmetric by construction
    std::vector<double> rhs_raw_;
    std::vector<double> rhs_augmented_;
    double max_abs_ = 0.0;
};

/// Assembles the augmented system for a stored-symmetric A. The bottom-right
/// block is symmetrized explicitly (upper triangle mirrored) so the augmented
/// matrix is exactly symmetric. A cheap spot check of the null-space identity
/// Ã [E; -I] = 0 guards against assembly mistakes.
inline EncodedSystem build_encoded_system(const CsrMatrix& a, std::span<const double> b,
                                          EncodingMatrix e) {
    const std::size_t n = a.n_rows();
    const std::size_t k = e.k();
    if (a.n_cols() != n) throw DimensionError("build_encoded_system: A must be square");
    if (b.size() != n) throw DimensionError("build_encoded_system: rhs length mismatch");
    if (e.n() != n) throw DimensionError("build_encoded_system: encoder row count mismatch");
    if (!is_symmetric(a))
        throw InvalidArgumentError("build_encoded_system: stored A is not symmetric");

    EncodedSystem sys;
    sys.n_ = n;
    sys.k_ = k;
    sys.raw_ = a;

    // A*E: sparse rows against dense columns, ascending entry order.
    DenseMatrix border(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        const auto cols = a.row_cols(i);
        const auto vals = a.row_values(i);
        for (std::size_t c = 0; c < k; ++c) {
            double acc = 0.0;
            for (std::size_t t = 0; t < cols.size(); ++t) acc += vals[t] * e(cols[t], c);
            border(i, c) = acc;
        }
    }

    // E^T (A E): computed for c1 <= c2 and mirrored.
    DenseMatrix gram(k, k);
    for (std::size_t c1 = 0; c1 < k; ++c1) {
        for (std::size_t c2 = c1; c2 < k; ++c2) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += e(i, c1) * border(i, c2);
            gram(c1, c2) = acc;
            gram(c2, c1) = acc;
        }
    }

    sys.rhs_raw_.assign(b.begin(), b.end());
    sys.rhs_augmented_.assign(b.begin(), b.end());
    for (std::size_t c = 0; c < k; ++c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += e(i, c) * b[i];
        sys.rhs_augmented_.push_back(acc);
    }

    sys.max_abs_ = std::max({a.max_abs(), border.max_abs(), gram.max_abs()});
    sys.border_ = std::move(border);
    sys.gram_ = std::move(gram);
    sys.encoder_ = std::move(e);

    // Null-space spot check on up to three encoder columns.
    if (k > 0) {
        const std::size_t probe_cols[3] = {0, k / 2, k - 1};
        std::vector<double> basis_col(n + k, 0.0);
        for (std::size_t pc = 0; pc < 3; ++pc) {
            const std::size_t c = probe_cols[pc];
            for (std::size_t i = 0; i < n; ++i) basis_col[i] = sys.encoder_(i, c);
            for (std::size_t c2 = 0; c2 < k; ++c2) basis_col[n + c2] = (c2 == c) ? -1.0 : 0.0;
            const std::vector<double> image = sys.apply(basis_col);
            for (double entry : image) {
                if (!(std::abs(entry) <= 1e-10 * std::max(sys.max_abs_, 1.0)))
                    throw NumericalError(
                        "build_encoded_system: null-space identity check failed");
            }
            if (k == 1) break;
        }
    }
    return sys;
}

/// Exact Kruskal rank of a k-by-n matrix: the largest j such that every
/// j-column subset has full column rank. Rank tests use singular values with
/// a 1e-10 relative threshold. Desk-scale only: refuses subset sizes with
/// more than 10^6 combinations and points the caller at
/// kruskal_rank_operative instead.
inline std::size_t kruskal_rank_exact(const DenseMatrix& et) {
    const std::size_t k = et.rows();
    const std::size_t n = et.cols();
    constexpr double kBudget = 1e6;

    auto subset_full_rank = [&](const std::vector<std::size_t>& cols) {
        const std::size_t j = cols.size();
        // Gram matrix of the selected columns; sigma^2 = its eigenvalues.
        DenseMatrix gram(j, j);
        for (std::size_t a = 0; a < j; ++a) {
            for (std::size_t b = a; b < j; ++b) {
                double acc = 0.0;
                for (std::size_t r = 0; r < k; ++r) acc += et(r, cols[a]) * et(r, cols[b]);
                gram(a, b) = acc;
                gram(b, a) = acc;
            }
        }
        const EigenDecomposition eig = jacobi_eigensolve(gram);
        const double lambda_max = std::max(eig.values.back(), 0.0);
        const double lambda_min = eig.values.front();
        // sigma_min > 1e-10 sigma_max  <=>  lambda_min > 1e-20 lambda_max
        return lambda_min > 1e-20 * lambda_max && lambda_max > 0.0;
    };

    std::size_t rank = 0;
    for (std::size_t j = 1; j <= k && j <= n; ++j) {
        double combos = 1.0;
        for (std::size_t i = 0; i < j; ++i)
            combos *= static_cast<double>(n - i) / static_cast<double>(i + 1);
        if (combos > kBudget)
            throw BudgetError(
                "kruskal_rank_exact: combinatorial budget exceeded; "
                "use kruskal_rank_operative for the realized fault set");

        std::vector<std::size_t> subset(j);
        for (std::size_t i = 0; i < j; ++i) subset[i] = i;
        bool all_independent = true;
        while (true) {
            if (!subset_full_rank(subset)) {
                all_independent = false;
                break;
            }
            // next lexicographic combination
            std::size_t pos = j;
            while (pos > 0 && subset[pos - 1] == n - j + pos - 1) --pos;
            if (pos == 0) break;
            ++subset[pos - 1];
            for (std::size_t i = pos; i < j; ++i) subset[i] = subset[i - 1] + 1;
        }
        if (!all_independent) return rank;
        rank = j;
    }
    return rank;
}

/// The operative recoverability condition for a realized fault set: the |F|
/// columns of E^T indexed by F (equivalently the rows E_2 of E) must be
/// linearly independent.
inline bool kruskal_rank_operative(const EncodingMatrix& e, std::span<const std::size_t> faulty) {
    if (faulty.empty()) return true;
    if (faulty.size() > e.k()) return false;
    for (std::size_t i : faulty) {
        if (i >= e.n()) throw BoundsError("kruskal_rank_operative: fault index out of range");
    }
    const std::size_t f = faulty.size();
    DenseMatrix gram(f, f);
    for (std::size_t a = 0; a < f; ++a) {
        for (std::size_t b = a; b < f; ++b) {
            double acc = 0.0;
            for (std::size_t c = 0; c < e.k(); ++c) acc += e(faulty[a], c) * e(faulty[b], c);
            gram(a, b) = acc;
            gram(b, a) = acc;
        }
    }
    const EigenDecomposition eig = jacobi_eigensolve(gram);
    const double lambda_max = std::max(eig.values.back(), 0.0);
    return eig.values.front() > 1e-20 * lambda_max && lambda_max > 0.0;
}

struct SpectrumDiagnostics {
    std::vector<double> raw_eigenvalues;       // eigenvalues of A, ascending
    std::vector<double> augmented_eigenvalues; // eigenvalues of the augmented matrix
    double kappa_e = 0.0;                      // lambda_{n+k} / lambda_{k+1}
    bool interlace_lower_ok = false;           // lambda_1(A) <= lambda_{k+1}
    bool interlace_upper_ok = false;           // lambda_n(A) <= lambda_{n+k}
};

/// Dense eigenvalue diagnostics of a constructed system. The augmented
/// matrix has k zero eigenvalues; the effective condition number is the
/// ratio of its extreme nonzero eigenvalues.
inline SpectrumDiagnostics spectrum_diagnostics(const EncodedSystem& system) {
    const std::size_t n = system.n();
    const std::size_t k = system.k();
    if (n + k > 2000)
        throw BudgetError("spectrum_diagnostics: dense eigenvalue budget is n + k <= 2000");

    DenseMatrix raw_dense(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto cols = system.raw().row_cols(i);
        const auto vals = system.raw().row_values(i);
        for (std::size_t e = 0; e < cols.size(); ++e) raw_dense(i, cols[e]) = vals[e];
    }
    DenseMatrix aug_dense(n + k, n + k);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) aug_dense(i, j) = raw_dense(i, j);
        for (std::size_t c = 0; c < k; ++c) {
            aug_dense(i, n + c) = system.border()(i, c);
            aug_dense(n + c, i) = system.border()(i, c);
        }
    }
    for (std::size_t c1 = 0; c1 < k; ++c1)
        for (std::size_t c2 = 0; c2 < k; ++c2) aug_dense(n + c1, n + c2) = system.gram()(c1, c2);

    SpectrumDiagnostics diag;
    diag.raw_eigenvalues = jacobi_eigensolve(std::move(raw_dense)).values;
    diag.augmented_eigenvalues = jacobi_eigensolve(std::move(aug_dense)).values;

    const double lambda_kp1 = diag.augmented_eigenvalues[k];
    const double lambda_top = diag.augmented_eigenvalues[n + k - 1];
    diag.kappa_e = lambda_kp1 != 0.0 ? lambda_top / lambda_kp1
                                     : std::numeric_limits<double>::infinity();

    const double slack = 1e-10 * std::max(std::abs(lambda_top), 1.0);
    diag.interlace_lower_ok = diag.raw_eigenvalues.front() <= lambda_kp1 + slack;
    diag.interlace_upper_ok = diag.raw_eigenvalues.back() <= lambda_top + slack;
    return diag;
}

} // namespace eccg
