#include <gtest/gtest.h>

#include "eccg/fault.hpp"

using namespace eccg;

TEST(Topology, ComponentGranularity) {
    const ProcessTopology t = build_topology(4, 1, ComponentGranularity{});
    EXPECT_EQ(t.process_count(), 5u);
    EXPECT_FALSE(t.is_reliable(0));
    EXPECT_TRUE(t.is_reliable(4));
    EXPECT_EQ(std::vector<std::size_t>(t.owned(4).begin(), t.owned(4).end()),
              (std::vector<std::size_t>{4}));
    EXPECT_EQ(t.owner_of(2), 2u);
    EXPECT_EQ(t.owner_of(4), 4u);
}

TEST(Topology, BlockGranularity) {
    const ProcessTopology t = build_topology(6, 2, BlockGranularity{3});
    EXPECT_EQ(t.process_count(), 4u);
    EXPECT_EQ(std::vector<std::size_t>(t.owned(0).begin(), t.owned(0).end()),
              (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(std::vector<std::size_t>(t.owned(2).begin(), t.owned(2).end()),
              (std::vector<std::size_t>{4, 5}));
    EXPECT_TRUE(t.is_reliable(3));
    EXPECT_EQ(std::vector<std::size_t>(t.owned(3).begin(), t.owned(3).end()),
              (std::vector<std::size_t>{6, 7}));
}

TEST(Topology, KZeroNeedsNoReliableProcess) {
    const ProcessTopology t = build_topology(4, 0, BlockGranularity{2});
    EXPECT_EQ(t.process_count(), 2u);
    EXPECT_TRUE(t.reliable_processes().empty());
}

TEST(Topology, RejectsBrokenPartition) {
    EXPECT_THROW(ProcessTopology(2, 0, {{0}}, {}), InvalidArgumentError);       // gap
    EXPECT_THROW(ProcessTopology(2, 0, {{0, 1}, {1}}, {}), InvalidArgumentError); // overlap
    EXPECT_THROW(ProcessTopology(1, 1, {{0}, {1}}, {}), InvalidArgumentError);  // redundant not reliable
}

TEST(FaultPlan, SampleMatchesProtocol) {
    EXPECT_TRUE(sample_fault_plan(100, 0, 0.25, 1).empty());

    const FaultPlan plan = sample_fault_plan(500, 1, 0.25, 12);
    ASSERT_EQ(plan.events().size(), 1u);
    EXPECT_GE(plan.events()[0].iteration, 1u);
    EXPECT_LE(plan.events()[0].iteration, 125u);
    ASSERT_EQ(plan.events()[0].victim_indices.size(), 1u);
    EXPECT_LT(plan.events()[0].victim_indices[0], 500u);
}

TEST(FaultPlan, SampleIsDeterministicAndDistinct) {
    const FaultPlan a = sample_fault_plan(200, 40, 0.25, 9);
    const FaultPlan b = sample_fault_plan(200, 40, 0.25, 9);
    ASSERT_EQ(a.events().size(), 1u);
    EXPECT_EQ(a.events()[0].iteration, b.events()[0].iteration);
    EXPECT_EQ(a.events()[0].victim_indices, b.events()[0].victim_indices);
    // victims are distinct (sorted unique by construction, so size says it all)
    EXPECT_EQ(a.events()[0].victim_indices.size(), 40u);
    EXPECT_EQ(a.total_victims(), 40u);
}

TEST(FaultPlan, JsonRoundTrip) {
    const FaultPlan plan(
        {FaultEvent{5, {3, 1}}, FaultEvent{9, {7}}});
    const nlohmann::json j = plan.to_json();
    EXPECT_EQ(j.at("events").size(), 2u);
    EXPECT_EQ(j.at("events")[0].at("iteration").get<std::size_t>(), 5u);
    EXPECT_EQ(j.at("events")[0].at("victim_indices").get<std::vector<std::size_t>>(),
              (std::vector<std::size_t>{1, 3}));
    const FaultPlan back = FaultPlan::from_json(j);
    EXPECT_EQ(back.events().size(), 2u);
    EXPECT_EQ(back.events()[1].victim_indices, (std::vector<std::size_t>{7}));
}

TEST(FaultPlan, ValidatesAgainstTopology) {
    const ProcessTopology t = build_topology(6, 2, ComponentGranularity{});
    FaultPlan ok({FaultEvent{3, {0, 5}}});
    EXPECT_NO_THROW(ok.validate_against(t));

    FaultPlan redundant_victim({FaultEvent{3, {6}}});
    EXPECT_THROW(redundant_victim.validate_against(t), InvalidArgumentError);

    FaultPlan too_many({FaultEvent{3, {0, 1, 2}}});
    EXPECT_THROW(too_many.validate_against(t), CapacityError);
}

TEST(FaultPlan, ProcessLevelScheduling) {
    const ProcessTopology t = build_topology(6, 2, BlockGranularity{3});
    const FaultPlan plan = plan_from_process_faults(t, {{4, {1}}});
    ASSERT_EQ(plan.events().size(), 1u);
    EXPECT_EQ(plan.events()[0].victim_indices, (std::vector<std::size_t>{2, 3}));
    EXPECT_THROW(plan_from_process_faults(t, {{4, {3}}}), InvalidArgumentError);
}

TEST(FaultState, NoEventLeavesStateUnchanged) {
    const FaultPlan plan({FaultEvent{7, {3}}});
    FaultState state(5, 1);
    const std::vector<double> x(6, 0.5);
    auto [next, flag] = advance(std::move(state), plan, 3, x);
    EXPECT_FALSE(flag);
    EXPECT_EQ(next.faulty_count(), 0u);
    EXPECT_FALSE(next.last_event_iteration().has_value());
}

TEST(FaultState, EventCapturesSnapshot) {
    const FaultPlan plan({FaultEvent{7, {3}}});
    FaultState state(5, 1);
    std::vector<double> x(6, 0.0);
    x[3] = 0.42;
    bool flag = false;
    for (std::size_t iter = 1; iter <= 7; ++iter) {
        std::tie(state, flag) = advance(std::move(state), plan, iter, x);
    }
    EXPECT_TRUE(flag);
    EXPECT_EQ(state.faulty_count(), 1u);
    EXPECT_TRUE(state.mask().excludes(3));
    EXPECT_DOUBLE_EQ(state.snapshots().at(3), 0.42);
    EXPECT_EQ(state.last_event_iteration().value(), 7u);
}

// Two events at distinct iterations: the faulty set grows monotonically and
// each snapshot captures the iterate of its own fault iteration.
TEST(FaultState, TwoEventsHandStepped) {
    const FaultPlan plan({FaultEvent{5, {1}}, FaultEvent{9, {4}}});
    FaultState state(6, 2);
    bool flag = false;
    std::size_t previous_count = 0;
    for (std::size_t iter = 1; iter <= 10; ++iter) {
        std::vector<double> x(8, 0.0);
        x[1] = 0.1 * double(iter);
        x[4] = 1.0 + 0.1 * double(iter);
        std::tie(state, flag) = advance(std::move(state), plan, iter, x);
        EXPECT_GE(state.faulty_count(), previous_count); // monotone growth
        previous_count = state.faulty_count();
        if (iter == 5 || iter == 9) {
            EXPECT_TRUE(flag);
        }
    }
    EXPECT_EQ(state.faulty_count(), 2u);
    EXPECT_DOUBLE_EQ(state.snapshots().at(1), 0.5);
    EXPECT_DOUBLE_EQ(state.snapshots().at(4), 1.9);
    EXPECT_EQ(state.last_event_iteration().value(), 9u);
}

TEST(FaultState, CapacityErrorWhenPlanOverflows) {
    const FaultPlan plan({FaultEvent{2, {0, 1}}});
    FaultState state(4, 1);
    std::vector<double> x(5, 0.0);
    auto [s1, f1] = advance(std::move(state), plan, 1, x);
    EXPECT_FALSE(f1);
    EXPECT_THROW(advance(std::move(s1), plan, 2, x), CapacityError);
}

TEST(FaultState, OutOfOrderIterationsRejected) {
    const FaultPlan plan({FaultEvent{2, {0}}});
    FaultState state(4, 1);
    const std::vector<double> x(5, 0.0);
    EXPECT_THROW(advance(FaultState(state), plan, 3, x), PreconditionError);
}

TEST(FaultState, RedundantVictimRejected) {
    const FaultPlan plan({FaultEvent{1, {4}}});
    FaultState state(4, 1);
    const std::vector<double> x(5, 0.0);
    EXPECT_THROW(advance(std::move(state), plan, 1, x), BoundsError);
}

TEST(FaultPlan, DuplicateIterationRejected) {
    EXPECT_THROW(FaultPlan({FaultEvent{3, {0}}, FaultEvent{3, {1}}}), InvalidArgumentError);
}
