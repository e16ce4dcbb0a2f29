#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include <json.hpp>

#include "eccg/dense.hpp"
#include "eccg/encoding.hpp"
#include "eccg/errors.hpp"
#include "eccg/fault.hpp"
#include "eccg/solver.hpp"

// Recovery of the raw solution from a converged augmented iterate. The
// augmented matrix's null space is spanned by [E; -I_k], so any solution
// [y; z] of the augmented system satisfies [x*; 0] = [y; z] + [E; -I_k] z,
// i.e. x* = y + E z. The faulty components of y are their frozen snapshots;
// the identity holds regardless, provided the encoder rows of the fault set
// are linearly independent (the operative Kruskal-rank condition).

namespace eccg {

struct RecoveredSolution {
    std::vector<double> x_star;
    double raw_relative_residual = 0.0;
    bool residual_is_absolute = false; // set when ||b|| = 0
    std::vector<std::size_t> faulty_indices_used;
    std::map<std::size_t, double> snapshots_used;
    bool converged = false;
    std::size_t iterations = 0;
    std::size_t n = 0;
    std::size_t k = 0;

    /// `{n, k, converged, iterations, raw_relative_residual, faulty_indices}`
    nlohmann::json to_json() const {
        return nlohmann::json{{"n", n},
                              {"k", k},
                              {"converged", converged},
                              {"iterations", iterations},
                              {"raw_relative_residual", raw_relative_residual},
                              {"faulty_indices", faulty_indices_used}};
    }
};

/// ||b - A x||_2 / ||b||_2 with unmasked kernels.
inline double raw_relative_residual(const CsrMatrix& a, std::span<const double> b,
                                    std::span<const double> x) {
    if (b.size() != a.n_rows() || x.size() != a.n_cols())
        throw DimensionError("raw_relative_residual: dimension mismatch");
    const IndexMask none_cols(a.n_cols());
    const IndexMask none_rows(a.n_rows());
    const std::vector<double> ax = spmv_masked(a, x, none_cols, none_rows);
    double res = 0.0;
    double bnorm = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double d = b[i] - ax[i];
        res += d * d;
        bnorm += b[i] * b[i];
    }
    if (bnorm == 0.0)
        throw InvalidArgumentError("raw_relative_residual: zero right-hand side");
    return std::sqrt(res) / std::sqrt(bnorm);
}

/// Applies the recovery equation x* = y + E z to the final iterate, where z
/// is the redundant tail of the augmented solution. Requires a terminated
/// solve; non-converged input is rejected unless allow_unconverged is set
/// (used to report residuals for max-iteration runs). The realized fault set
/// must satisfy the operative rank condition.
inline RecoveredSolution recover(const EncodedSystem& system, const SolverState& final_state,
                                 const FaultState& fault_state, Termination termination,
                                 bool allow_unconverged = false) {
    if (termination == Termination::breakdown)
        throw PreconditionError("recover: solver broke down; no solution to recover");
    if (termination != Termination::converged && !allow_unconverged)
        throw PreconditionError("recover: solver did not converge");
    if (final_state.x.size() != system.dim())
        throw DimensionError("recover: state dimension mismatch");
    if (!kruskal_rank_operative(system.encoder(), fault_state.faulty_indices()))
        throw UnrecoverableFaultError("recover: encoder rows of the fault set are dependent");

    const std::size_t n = system.n();
    const std::size_t k = system.k();
    const EncodingMatrix& e = system.encoder();

    RecoveredSolution sol;
    sol.n = n;
    sol.k = k;
    sol.converged = termination == Termination::converged;
    sol.iterations = final_state.t;
    sol.faulty_indices_used.assign(fault_state.faulty_indices().begin(),
                                   fault_state.faulty_indices().end());
    sol.snapshots_used = fault_state.snapshots();

    sol.x_star.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = final_state.x[i];
        for (std::size_t c = 0; c < k; ++c) acc += e(i, c) * final_state.x[n + c];
        sol.x_star[i] = acc;
    }

    double bnorm = 0.0;
    for (double v : system.rhs_raw()) bnorm += v * v;
    if (bnorm == 0.0) {
        const IndexMask none_cols(n);
        const IndexMask none_rows(n);
        const std::vector<double> ax = spmv_masked(system.raw(), sol.x_star, none_cols, none_rows);
        double res = 0.0;
        for (double v : ax) res += v * v;
        sol.raw_relative_residual = std::sqrt(res);
        sol.residual_is_absolute = true;
    } else {
        sol.raw_relative_residual =
            raw_relative_residual(system.raw(), system.rhs_raw(), sol.x_star);
    }
    return sol;
}

/// Dense oracle for the purified system: permutes the augmented system into
/// (correct, faulty, redundant) blocks, moves the frozen faulty values to the
/// right-hand side, and solves
///
///   [ A11  Z1 ] [ c ]   [ b1    ]   [ A12  ]
///   [ Z1^T R  ] [ r ] = [ E^T b ] - [ Z2^T ] f
///
/// by minimum-norm least squares (eigendecomposition pseudoinverse with a
/// relative cutoff). Returns the full augmented vector [c; f; r] un-permuted.
/// Every block is assembled densely from A and E, independent of the hybrid
/// operator the solver uses. Internals run in extended precision: when the
/// encoder rows of the fault set are nearly dependent the purified system is
/// badly conditioned, and the solution components grow like the inverse of
/// that near-dependency.
inline std::vector<double> purified_oracle(const EncodedSystem& system,
                                           std::span<const std::size_t> faulty,
                                           std::span<const double> snapshots,
                                           double svd_rel_cutoff = 1e-10) {
    using Wide = long double;
    const std::size_t n = system.n();
    const std::size_t k = system.k();
    if (n + k > 200)
        throw BudgetError("purified_oracle: dense budget is n + k <= 200");
    if (faulty.size() > k)
        throw InvalidArgumentError("purified_oracle: more faults than capacity k");
    if (snapshots.size() != faulty.size())
        throw DimensionError("purified_oracle: snapshot count mismatch");
    for (std::size_t idx : faulty) {
        if (idx >= n) throw BoundsError("purified_oracle: fault index out of range");
    }

    std::vector<std::size_t> faulty_sorted(faulty.begin(), faulty.end());
    std::vector<Wide> snap_sorted(snapshots.begin(), snapshots.end());
    {
        std::vector<std::size_t> order(faulty_sorted.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return faulty_sorted[a] < faulty_sorted[b];
        });
        std::vector<std::size_t> fs(order.size());
        std::vector<Wide> ss(order.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            fs[i] = faulty_sorted[order[i]];
            ss[i] = snap_sorted[order[i]];
        }
        faulty_sorted = std::move(fs);
        snap_sorted = std::move(ss);
    }

    std::vector<std::uint8_t> is_faulty(n, 0);
    for (std::size_t idx : faulty_sorted) is_faulty[idx] = 1;
    std::vector<std::size_t> correct;
    correct.reserve(n - faulty_sorted.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (!is_faulty[i]) correct.push_back(i);
    }
    const std::size_t nc = correct.size();
    const std::size_t nf = faulty_sorted.size();

    // dense A and E for block extraction
    DenseMatrixT<Wide> a_dense(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto cols = system.raw().row_cols(i);
        const auto vals = system.raw().row_values(i);
        for (std::size_t e = 0; e < cols.size(); ++e) a_dense(i, cols[e]) = vals[e];
    }
    const EncodingMatrix& enc = system.encoder();

    DenseMatrixT<Wide> a11(nc, nc), a12(nc, nf), a22(nf, nf), e1(nc, k), e2(nf, k);
    for (std::size_t i = 0; i < nc; ++i) {
        for (std::size_t j = 0; j < nc; ++j) a11(i, j) = a_dense(correct[i], correct[j]);
        for (std::size_t j = 0; j < nf; ++j) a12(i, j) = a_dense(correct[i], faulty_sorted[j]);
        for (std::size_t c = 0; c < k; ++c) e1(i, c) = enc(correct[i], c);
    }
    for (std::size_t i = 0; i < nf; ++i) {
        for (std::size_t j = 0; j < nf; ++j) a22(i, j) = a_dense(faulty_sorted[i], faulty_sorted[j]);
        for (std::size_t c = 0; c < k; ++c) e2(i, c) = enc(faulty_sorted[i], c);
    }

    // Z1 = A11 E1 + A12 E2, Z2 = A12^T E1 + A22 E2, R = E^T A E
    DenseMatrixT<Wide> z1(nc, k), z2(nf, k);
    for (std::size_t i = 0; i < nc; ++i) {
        for (std::size_t c = 0; c < k; ++c) {
            Wide acc = 0;
            for (std::size_t j = 0; j < nc; ++j) acc += a11(i, j) * e1(j, c);
            for (std::size_t j = 0; j < nf; ++j) acc += a12(i, j) * e2(j, c);
            z1(i, c) = acc;
        }
    }
    for (std::size_t i = 0; i < nf; ++i) {
        for (std::size_t c = 0; c < k; ++c) {
            Wide acc = 0;
            for (std::size_t j = 0; j < nc; ++j) acc += a12(j, i) * e1(j, c);
            for (std::size_t j = 0; j < nf; ++j) acc += a22(i, j) * e2(j, c);
            z2(i, c) = acc;
        }
    }
    DenseMatrixT<Wide> big_r(k, k);
    {
        // E^T A E assembled from the raw blocks
        DenseMatrixT<Wide> ae(n, k);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < k; ++c) {
                Wide acc = 0;
                for (std::size_t j = 0; j < n; ++j) acc += a_dense(i, j) * Wide(enc(j, c));
                ae(i, c) = acc;
            }
        }
        for (std::size_t c1 = 0; c1 < k; ++c1) {
            for (std::size_t c2 = 0; c2 < k; ++c2) {
                Wide acc = 0;
                for (std::size_t i = 0; i < n; ++i) acc += Wide(enc(i, c1)) * ae(i, c2);
                big_r(c1, c2) = acc;
            }
        }
    }

    const std::size_t m = nc + k;
    DenseMatrixT<Wide> purified(m, m);
    for (std::size_t i = 0; i < nc; ++i) {
        for (std::size_t j = 0; j < nc; ++j) purified(i, j) = a11(i, j);
        for (std::size_t c = 0; c < k; ++c) {
            purified(i, nc + c) = z1(i, c);
            purified(nc + c, i) = z1(i, c);
        }
    }
    for (std::size_t c1 = 0; c1 < k; ++c1)
        for (std::size_t c2 = 0; c2 < k; ++c2) purified(nc + c1, nc + c2) = big_r(c1, c2);

    const auto b = system.rhs_raw();
    std::vector<Wide> rhs(m, 0);
    for (std::size_t i = 0; i < nc; ++i) {
        Wide acc = b[correct[i]];
        for (std::size_t j = 0; j < nf; ++j) acc -= a12(i, j) * snap_sorted[j];
        rhs[i] = acc;
    }
    for (std::size_t c = 0; c < k; ++c) {
        Wide acc = 0;
        for (std::size_t i = 0; i < n; ++i) acc += Wide(enc(i, c)) * Wide(b[i]);
        for (std::size_t j = 0; j < nf; ++j) acc -= z2(j, c) * snap_sorted[j];
        rhs[nc + c] = acc;
    }

    const std::vector<Wide> cr = sym_pinv_solve<Wide>(purified, rhs, svd_rel_cutoff);

    std::vector<double> augmented(n + k, 0.0);
    for (std::size_t i = 0; i < nc; ++i) augmented[correct[i]] = static_cast<double>(cr[i]);
    for (std::size_t j = 0; j < nf; ++j)
        augmented[faulty_sorted[j]] = static_cast<double>(snap_sorted[j]);
    for (std::size_t c = 0; c < k; ++c) augmented[n + c] = static_cast<double>(cr[nc + c]);
    return augmented;
}

} // namespace eccg
