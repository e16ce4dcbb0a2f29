#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "eccg/errors.hpp"
#include "eccg/mask.hpp"
#include "eccg/rng.hpp"

// Deterministic fail-stop fault injection. Faults land at iteration
// boundaries: a scheduled event freezes the victims' solution components at
// their values at the end of that iteration (the snapshot), and the solver
// skips them in every aggregation from then on. Redundant components
// [n, n+k) belong to a reliable process and never fault; the scheme itself
// does not require this, it mirrors the simulation protocol.

namespace eccg {

/// Disjoint row-index ownership across simulated processes.
/// The index sets partition [0, n+k) exactly; every redundant index is owned
/// by a process in the reliable set.
class ProcessTopology {
public:
    ProcessTopology(std::size_t n, std::size_t k,
                    std::vector<std::vector<std::size_t>> assignments,
                    std::vector<std::size_t> reliable_processes)
        : n_(n), k_(k), assignments_(std::move(assignments)),
          reliable_(std::move(reliable_processes)) {
        owner_.assign(n + k, assignments_.size());
        for (std::size_t p = 0; p < assignments_.size(); ++p) {
            for (std::size_t idx : assignments_[p]) {
                if (idx >= n + k || owner_[idx] != assignments_.size())
                    throw InvalidArgumentError("ProcessTopology: assignments must partition indices");
                owner_[idx] = p;
            }
        }
        for (std::size_t idx = 0; idx < n + k; ++idx) {
            if (owner_[idx] == assignments_.size())
                throw InvalidArgumentError("ProcessTopology: unassigned index");
        }
        reliable_flags_.assign(assignments_.size(), 0);
        for (std::size_t p : reliable_) {
            if (p >= assignments_.size())
                throw InvalidArgumentError("ProcessTopology: reliable process out of range");
            reliable_flags_[p] = 1;
        }
        for (std::size_t idx = n; idx < n + k; ++idx) {
            if (!reliable_flags_[owner_[idx]])
                throw InvalidArgumentError(
                    "ProcessTopology: redundant indices must belong to a reliable process");
        }
    }

    std::size_t n() const { return n_; }
    std::size_t k() const { return k_; }
    std::size_t process_count() const { return assignments_.size(); }
    std::span<const std::size_t> owned(std::size_t process) const { return assignments_[process]; }
    std::size_t owner_of(std::size_t index) const { return owner_[index]; }
    bool is_reliable(std::size_t process) const { return reliable_flags_[process] != 0; }
    std::span<const std::size_t> reliable_processes() const { return reliable_; }

private:
    std::size_t n_;
    std::size_t k_;
    std::vector<std::vector<std::size_t>> assignments_;
    std::vector<std::size_t> reliable_;
    std::vector<std::size_t> owner_;
    std::vector<std::uint8_t> reliable_flags_;
};

struct ComponentGranularity {};
struct BlockGranularity {
    std::size_t processes;
};

/// Component granularity: one process per raw index, plus one reliable
/// process owning all redundant indices (present only when k > 0).
inline ProcessTopology build_topology(std::size_t n, std::size_t k, ComponentGranularity) {
    std::vector<std::vector<std::size_t>> assignments(n);
    for (std::size_t i = 0; i < n; ++i) assignments[i] = {i};
    std::vector<std::size_t> reliable;
    if (k > 0) {
        std::vector<std::size_t> redundant(k);
        std::iota(redundant.begin(), redundant.end(), n);
        assignments.push_back(std::move(redundant));
        reliable.push_back(n);
    }
    return ProcessTopology(n, k, std::move(assignments), std::move(reliable));
}

/// Block granularity: p contiguous raw blocks plus the reliable redundant
/// process. Earlier blocks take the remainder when p does not divide n.
inline ProcessTopology build_topology(std::size_t n, std::size_t k, BlockGranularity g) {
    if (g.processes < 1)
        throw InvalidArgumentError("build_topology: block granularity needs p >= 1");
    const std::size_t p = std::min(g.processes, n);
    std::vector<std::vector<std::size_t>> assignments;
    assignments.reserve(p + 1);
    const std::size_t base = n / p;
    const std::size_t extra = n % p;
    std::size_t next = 0;
    for (std::size_t blk = 0; blk < p; ++blk) {
        const std::size_t size = base + (blk < extra ? 1 : 0);
        std::vector<std::size_t> block(size);
        std::iota(block.begin(), block.end(), next);
        next += size;
        assignments.push_back(std::move(block));
    }
    std::vector<std::size_t> reliable;
    if (k > 0) {
        std::vector<std::size_t> redundant(k);
        std::iota(redundant.begin(), redundant.end(), n);
        assignments.push_back(std::move(redundant));
        reliable.push_back(p);
    }
    return ProcessTopology(n, k, std::move(assignments), std::move(reliable));
}

/// One scheduled fail-stop event: victims freeze at the end of `iteration`.
struct FaultEvent {
    std::size_t iteration;
    std::vector<std::size_t> victim_indices; // row indices, sorted
};

/// Scheduled fault events, sorted by iteration. Events are stored by victim
/// row index; use plan_from_process_faults to schedule whole processes.
class FaultPlan {
public:
    FaultPlan() = default;

    explicit FaultPlan(std::vector<FaultEvent> events) : events_(std::move(events)) {
        std::stable_sort(events_.begin(), events_.end(),
                         [](const FaultEvent& a, const FaultEvent& b) {
                             return a.iteration < b.iteration;
                         });
        for (FaultEvent& ev : events_) {
            std::sort(ev.victim_indices.begin(), ev.victim_indices.end());
            ev.victim_indices.erase(
                std::unique(ev.victim_indices.begin(), ev.victim_indices.end()),
                ev.victim_indices.end());
        }
        for (std::size_t i = 1; i < events_.size(); ++i) {
            if (events_[i].iteration == events_[i - 1].iteration)
                throw InvalidArgumentError("FaultPlan: duplicate event iteration");
        }
    }

    const std::vector<FaultEvent>& events() const { return events_; }
    bool empty() const { return events_.empty(); }

    std::size_t total_victims() const {
        std::size_t total = 0;
        for (const FaultEvent& ev : events_) total += ev.victim_indices.size();
        return total;
    }

    /// Checks victims against a topology: only fallible raw-owning processes
    /// may fault and the cumulative victim count must fit the capacity k.
    void validate_against(const ProcessTopology& topology) const {
        for (const FaultEvent& ev : events_) {
            for (std::size_t idx : ev.victim_indices) {
                if (idx >= topology.n() + topology.k())
                    throw BoundsError("FaultPlan: victim index out of range");
                if (topology.is_reliable(topology.owner_of(idx)))
                    throw InvalidArgumentError("FaultPlan: victim owned by a reliable process");
            }
        }
        if (total_victims() > topology.k())
            throw CapacityError("FaultPlan: cumulative faults exceed capacity k");
    }

    nlohmann::json to_json() const {
        nlohmann::json events = nlohmann::json::array();
        for (const FaultEvent& ev : events_) {
            events.push_back({{"iteration", ev.iteration},
                              {"victim_indices", ev.victim_indices}});
        }
        return nlohmann::json{{"events", events}};
    }

    static FaultPlan from_json(const nlohmann::json& j) {
        std::vector<FaultEvent> events;
        for (const auto& ev : j.at("events")) {
            FaultEvent event;
            event.iteration = ev.at("iteration").get<std::size_t>();
            event.victim_indices = ev.at("victim_indices").get<std::vector<std::size_t>>();
            events.push_back(std::move(event));
        }
        return FaultPlan(std::move(events));
    }

private:
    std::vector<FaultEvent> events_;
};

/// Expands process-level fault schedules into index-level events.
inline FaultPlan plan_from_process_faults(
    const ProcessTopology& topology,
    const std::vector<std::pair<std::size_t, std::vector<std::size_t>>>& process_events) {
    std::vector<FaultEvent> events;
    for (const auto& [iteration, processes] : process_events) {
        FaultEvent ev;
        ev.iteration = iteration;
        for (std::size_t p : processes) {
            if (p >= topology.process_count())
                throw BoundsError("plan_from_process_faults: process id out of range");
            if (topology.is_reliable(p))
                throw InvalidArgumentError("plan_from_process_faults: reliable process cannot fault");
            const auto owned = topology.owned(p);
            ev.victim_indices.insert(ev.victim_indices.end(), owned.begin(), owned.end());
        }
        events.push_back(std::move(ev));
    }
    return FaultPlan(std::move(events));
}

/// Simulation protocol sampler: one event at an iteration drawn uniformly
/// from [1, floor(max_iter_fraction * n)], hitting k distinct raw components
/// drawn without replacement. k = 0 gives an empty plan.
inline FaultPlan sample_fault_plan(std::size_t n, std::size_t k, double max_iter_fraction,
                                   std::uint64_t seed) {
    if (k > n) throw InvalidArgumentError("sample_fault_plan: k must not exceed n");
    if (!(max_iter_fraction > 0.0 && max_iter_fraction <= 1.0))
        throw InvalidArgumentError("sample_fault_plan: fraction must be in (0, 1]");
    if (k == 0) return FaultPlan();

    Xoshiro256PlusPlus rng(seed);
    const std::uint64_t hi = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(max_iter_fraction * static_cast<double>(n)));
    FaultEvent ev;
    ev.iteration = 1 + static_cast<std::size_t>(rng.below(hi));

    // partial Fisher-Yates: first k entries become the victim set
    std::vector<std::size_t> indices(n);
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t pick = j + static_cast<std::size_t>(rng.below(n - j));
        std::swap(indices[j], indices[pick]);
    }
    ev.victim_indices.assign(indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(k));
    return FaultPlan({std::move(ev)});
}

/// Live faulty-index set plus the frozen snapshot values f. The faulty set
/// only grows; snapshots never change after capture.
class FaultState {
public:
    FaultState(std::size_t n, std::size_t k) : n_(n), k_(k), mask_(n + k) {}

    const IndexMask& mask() const { return mask_; }
    std::span<const std::size_t> faulty_indices() const { return mask_.excluded(); }
    std::size_t faulty_count() const { return mask_.excluded_count(); }
    const std::map<std::size_t, double>& snapshots() const { return snapshots_; }
    std::optional<std::size_t> last_event_iteration() const { return last_event_iteration_; }
    std::size_t n() const { return n_; }
    std::size_t k() const { return k_; }

    friend std::pair<FaultState, bool> advance(FaultState state, const FaultPlan& plan,
                                               std::size_t iteration,
                                               std::span<const double> x_current);

private:
    std::size_t n_;
    std::size_t k_;
    IndexMask mask_;
    std::map<std::size_t, double> snapshots_;
    std::optional<std::size_t> last_event_iteration_;
    std::size_t consumed_events_ = 0;
};

/// Applies any event scheduled at `iteration`; snapshots capture x_current
/// at the victim indices. Iterations must be presented in increasing order.
inline std::pair<FaultState, bool> advance(FaultState state, const FaultPlan& plan,
                                           std::size_t iteration,
                                           std::span<const double> x_current) {
    const auto& events = plan.events();
    if (state.consumed_events_ < events.size() &&
        events[state.consumed_events_].iteration < iteration)
        throw PreconditionError("advance: iterations must be presented in increasing order");

    bool new_faults = false;
    while (state.consumed_events_ < events.size() &&
           events[state.consumed_events_].iteration == iteration) {
        const FaultEvent& ev = events[state.consumed_events_];
        if (x_current.size() != state.n_ + state.k_)
            throw DimensionError("advance: iterate length mismatch");
        for (std::size_t idx : ev.victim_indices) {
            if (idx >= state.n_)
                throw BoundsError("advance: victim index must be a raw component");
        }
        if (state.faulty_count() + ev.victim_indices.size() > state.k_)
            throw CapacityError("advance: cumulative faults exceed capacity k");
        for (std::size_t idx : ev.victim_indices) {
            if (!state.mask_.excludes(idx)) state.snapshots_.emplace(idx, x_current[idx]);
        }
        state.mask_.exclude(ev.victim_indices);
        state.last_event_iteration_ = iteration;
        ++state.consumed_events_;
        new_faults = true;
    }
    return {std::move(state), new_faults};
}

} // namespace eccg
