#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "eccg/encoding.hpp"
#include "eccg/errors.hpp"
#include "eccg/fault.hpp"
#include "eccg/kernels.hpp"
#include "eccg/mask.hpp"

// Erasure-coded conjugate gradient: the two-term recurrence
//
//   beta_t = (r_t, r_t) / (r_{t-1}, r_{t-1})      (beta_0 = 0)
//   p_t    = r_t + beta_t p_{t-1}
//   q_t    = A p_t
//   alpha_t = (r_t, r_t) / (q_t, p_t)
//   x_{t+1} = x_t + alpha_t p_t
//   r_{t+1} = r_t - alpha_t q_t
//
// run on the augmented system with every aggregation (inner products and the
// row-wise product) skipping the current faulty set. Aggregation results are
// never reused across a mask change: the (r, r) feeding alpha_t is recomputed
// together with (q, p), and the (r_{t-1}, r_{t-1}) feeding beta_t is
// recomputed together with (r_t, r_t), which is why both residuals are kept.
// When new faults land, the next direction update is truncated to p = r;
// orthogonality of r_t and p_{t-1} does not survive a mask change, so the
// beta-weighted history is abandoned for that one step.

namespace eccg {

struct SolverConfig {
    double tol_abs = 1e-10;   // absolute masked residual 2-norm threshold
    std::size_t max_iters = 1000;
    bool recompute_residual_on_fault = true;
    bool relative_tol = false; // optional mode: threshold scales with ||b~||

    void validate() const {
        if (!(tol_abs > 0.0)) throw InvalidArgumentError("SolverConfig: tol_abs must be positive");
        if (max_iters < 1) throw InvalidArgumentError("SolverConfig: max_iters must be >= 1");
    }
};

enum class Termination { converged, max_iters, breakdown };

inline std::string to_string(Termination t) {
    switch (t) {
        case Termination::converged: return "converged";
        case Termination::max_iters: return "max_iters";
        case Termination::breakdown: return "breakdown";
    }
    return "unknown";
}

struct TraceRecord {
    std::size_t iteration;
    double residual_norm; // masked 2-norm over all viable rows, raw + redundant
    std::size_t n_faulty;
    bool fault_event;
    bool truncated;
};

struct SolveTrace {
    std::vector<TraceRecord> records;
    Termination termination = Termination::max_iters;

    std::size_t iterations() const { return records.empty() ? 0 : records.back().iteration; }

    /// CSV export: `iter,res_norm,n_faulty,fault_event,truncated`.
    void write_csv(std::ostream& out) const {
        out << "iter,res_norm,n_faulty,fault_event,truncated\n";
        char buf[32];
        for (const TraceRecord& rec : records) {
            std::snprintf(buf, sizeof(buf), "%.17g", rec.residual_norm);
            out << rec.iteration << ',' << buf << ',' << rec.n_faulty << ','
                << (rec.fault_event ? 1 : 0) << ',' << (rec.truncated ? 1 : 0) << '\n';
        }
    }

    /// Termination sidecar for the CSV trace.
    nlohmann::json termination_json() const {
        return nlohmann::json{{"termination", to_string(termination)},
                              {"iterations", iterations()}};
    }
};

/// Live solver state. Components of x at faulty indices equal their
/// snapshots at all times after capture; r, p, q freeze there too since
/// no aggregation ever reads them.
struct SolverState {
    std::vector<double> x;
    std::vector<double> r_curr;
    std::vector<double> r_prev;
    std::vector<double> p;
    std::vector<double> q;
    std::size_t t = 0;
    double alpha = 0.0;
    double beta = 0.0;
    bool omit_beta_next = true; // beta_0 = 0; also set by fault truncation
};

struct StepFlags {
    bool converged_zero_residual = false;
    bool breakdown = false;
    bool truncated = false; // beta term omitted this step
};

namespace detail {

inline void check_finite(double value, const char* what) {
    if (!std::isfinite(value))
        throw NumericalError(std::string("ec_cg: non-finite aggregate in ") + what);
}

} // namespace detail

/// One full iteration under the masked semantics; mutates `state` in place.
/// Returns without touching the state when the masked residual is exactly
/// zero or when curvature on the viable subspace is lost (breakdown).
inline StepFlags step_inplace(SolverState& state, const EncodedSystem& system,
                              const IndexMask& mask) {
    constexpr double kBreakdownEps = 1e-14;
    const std::size_t dim = system.dim();
    if (state.x.size() != dim)
        throw DimensionError("step: state dimension does not match system");

    StepFlags flags;
    const double rr = inner_masked(state.r_curr, state.r_curr, mask);
    detail::check_finite(rr, "(r, r)");
    if (rr == 0.0) {
        flags.converged_zero_residual = true;
        return flags;
    }

    if (state.omit_beta_next) {
        state.beta = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            if (mask.excludes(i)) continue;
            state.p[i] = state.r_curr[i];
        }
        state.omit_beta_next = false;
        flags.truncated = true;
    } else {
        // no-reuse rule: the pair feeding beta is evaluated under one mask
        const double rr_prev = inner_masked(state.r_prev, state.r_prev, mask);
        detail::check_finite(rr_prev, "(r_prev, r_prev)");
        if (rr_prev == 0.0)
            throw NumericalError("ec_cg: zero previous residual in beta");
        state.beta = rr / rr_prev;
        detail::check_finite(state.beta, "beta");
        for (std::size_t i = 0; i < dim; ++i) {
            if (mask.excludes(i)) continue;
            state.p[i] = state.r_curr[i] + state.beta * state.p[i];
        }
    }

    system.apply_masked(state.p, mask, mask, state.q);

    // no-reuse rule: (r, r) for alpha is recomputed together with (q, p)
    const double qp = inner_masked(state.q, state.p, mask);
    const double rr_alpha = inner_masked(state.r_curr, state.r_curr, mask);
    detail::check_finite(qp, "(q, p)");
    detail::check_finite(rr_alpha, "(r, r)");
    const double pp = inner_masked(state.p, state.p, mask);
    if (qp <= kBreakdownEps * pp) {
        flags.breakdown = true;
        return flags;
    }
    state.alpha = rr_alpha / qp;
    detail::check_finite(state.alpha, "alpha");

    for (std::size_t i = 0; i < dim; ++i) {
        if (mask.excludes(i)) continue;
        state.x[i] += state.alpha * state.p[i];
    }
    state.r_prev = state.r_curr;
    for (std::size_t i = 0; i < dim; ++i) {
        if (mask.excludes(i)) continue;
        state.r_curr[i] = state.r_prev[i] - state.alpha * state.q[i];
    }
    state.t += 1;
    return flags;
}

/// Value-semantics face of step_inplace.
inline std::pair<SolverState, StepFlags> step(SolverState state, const EncodedSystem& system,
                                              const IndexMask& mask) {
    const StepFlags flags = step_inplace(state, system, mask);
    return {std::move(state), flags};
}

namespace detail {

/// Fresh masked residual of the purified system: for every viable row,
/// b~ - (row . x~) over ALL columns; frozen faulty components enter through
/// their snapshot values held in x. Faulty rows of r keep their stale values.
inline void recompute_residual(SolverState& state, const EncodedSystem& system,
                               const IndexMask& mask) {
    const IndexMask no_cols(system.dim());
    std::vector<double> ax(system.dim(), 0.0);
    system.apply_masked(state.x, no_cols, mask, ax);
    const auto rhs = system.rhs_augmented();
    for (std::size_t i = 0; i < system.dim(); ++i) {
        if (mask.excludes(i)) continue;
        state.r_curr[i] = rhs[i] - ax[i];
    }
}

} // namespace detail

struct SolveResult {
    SolverState state;
    SolveTrace trace;
    FaultState fault_state;
};

/// Runs erasure-coded CG from x0 = 0 on the augmented system, injecting the
/// planned faults at iteration boundaries. Returns the final state, the
/// per-iteration trace, and the realized fault state.
inline SolveResult solve(const EncodedSystem& system, const FaultPlan& plan,
                         const ProcessTopology& topology, const SolverConfig& config) {
    config.validate();
    plan.validate_against(topology);
    if (topology.n() != system.n() || topology.k() != system.k())
        throw DimensionError("solve: topology does not match system dimensions");

    const std::size_t dim = system.dim();
    SolverState state;
    state.x.assign(dim, 0.0);
    state.r_curr.assign(system.rhs_augmented().begin(), system.rhs_augmented().end());
    state.r_prev.assign(dim, 0.0);
    state.p.assign(dim, 0.0);
    state.q.assign(dim, 0.0);

    FaultState fault_state(system.n(), system.k());
    SolveTrace trace;

    double tol = config.tol_abs;
    if (config.relative_tol) {
        const double rhs_norm = norm2_masked(state.r_curr, fault_state.mask());
        tol = config.tol_abs * (rhs_norm > 0.0 ? rhs_norm : 1.0);
    }

    const double r0_norm = norm2_masked(state.r_curr, fault_state.mask());
    detail::check_finite(r0_norm, "initial residual norm");
    trace.records.push_back({0, r0_norm, 0, false, false});
    if (r0_norm <= tol) {
        trace.termination = Termination::converged;
        return {std::move(state), std::move(trace), std::move(fault_state)};
    }

    bool fault_truncation_pending = false;
    for (std::size_t t = 1; t <= config.max_iters; ++t) {
        const bool truncated_by_fault = fault_truncation_pending;
        fault_truncation_pending = false;

        const StepFlags flags = step_inplace(state, system, fault_state.mask());
        if (flags.converged_zero_residual) {
            trace.termination = Termination::converged;
            return {std::move(state), std::move(trace), std::move(fault_state)};
        }
        if (flags.breakdown) {
            trace.termination = Termination::breakdown;
            return {std::move(state), std::move(trace), std::move(fault_state)};
        }

        bool new_faults = false;
        std::tie(fault_state, new_faults) = advance(std::move(fault_state), plan, t, state.x);
        if (new_faults) {
            state.omit_beta_next = true;
            fault_truncation_pending = true;
            if (config.recompute_residual_on_fault) {
                detail::recompute_residual(state, system, fault_state.mask());
                // next beta must pair two same-mask residuals
                state.r_prev = state.r_curr;
            }
        }

        const double res_norm = norm2_masked(state.r_curr, fault_state.mask());
        detail::check_finite(res_norm, "residual norm");
        trace.records.push_back(
            {t, res_norm, fault_state.faulty_count(), new_faults, truncated_by_fault});

        if (res_norm <= tol) {
            trace.termination = Termination::converged;
            return {std::move(state), std::move(trace), std::move(fault_state)};
        }
    }
    trace.termination = Termination::max_iters;
    return {std::move(state), std::move(trace), std::move(fault_state)};
}

} // namespace eccg
