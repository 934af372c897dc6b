#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace aclsim;
using namespace aclsim::testing;

TEST(LoadScenario, CaseOneTopologyAndPriorities) {
    auto s = builtin("case1");
    EXPECT_EQ(s.name, "case1");
    ASSERT_EQ(s.nodes.size(), 3U);
    ASSERT_EQ(s.agents.size(), 2U);
    EXPECT_EQ(s.agents[0].id, "ACL1");
    EXPECT_EQ(s.agents[0].priority.value, 10);
    EXPECT_TRUE(s.agents[0].priority.preemption_enabled);
    EXPECT_EQ(s.agents[1].id, "ACL2");
    EXPECT_EQ(s.agents[1].priority.value, 5);
    std::set<RegionId> expected{"calgary", "toronto", "waterloo"};
    EXPECT_EQ(s.regions(), expected);
    EXPECT_EQ(s.agents[0].size, SizeClass::Micro);
}

TEST(LoadScenario, EveryBuiltinLoads) {
    for (const auto& [name, text] : builtin_scenarios()) {
        EXPECT_NO_THROW((void)load_scenario(std::string(text))) << name;
    }
    for (const char* file : {"coherency.yaml", "knowledge.yaml", "knowledge-untrusted.yaml",
                             "pingpong-control.yaml"}) {
        EXPECT_NO_THROW((void)load_scenario(read_scenario_file(file))) << file;
    }
}

TEST(LoadScenario, UndefinedPriorityIsAValidationError) {
    const std::string text = R"(ticks: 3
priority_levels:
  - {name: gold, value: 10}
agents:
  - {id: a, priority: silver, scope: [{node: core-toronto}]}
)";
    try {
        (void)load_scenario(text);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.reference(), "priority silver");
    }
}

TEST(LoadScenario, EmptyAgentListIsValid) {
    auto s = load_scenario("ticks: 5\nagents: []\n");
    EXPECT_TRUE(s.agents.empty());
    EXPECT_EQ(s.ticks, 5);
    EXPECT_EQ(s.nodes.size(), 3U);
}

TEST(LoadScenario, EmptyDocumentTakesDefaults) {
    auto s = load_scenario("");
    EXPECT_EQ(s.nodes.size(), 3U);
    EXPECT_EQ(s.e2e_period, 5);
    EXPECT_DOUBLE_EQ(s.icm.coherency.k_sigma, 3.0);
    EXPECT_EQ(s.icm.coherency.window, 50U);
    EXPECT_EQ(s.icm.coherency.min_history, 10U);
    EXPECT_EQ(s.icm.lifecycle.suspend_after, 3);
    EXPECT_EQ(s.icm.lifecycle.reinstate_after, 5);
    EXPECT_EQ(s.icm.interference.window_ticks, 10);
    EXPECT_EQ(s.icm.interference.toggle_threshold, 3);
    EXPECT_EQ(s.icm.interference.cooldown, 10);
    EXPECT_DOUBLE_EQ(s.icm.knowledge_bonus, 0.2);
}

TEST(LoadScenario, AgentDefaultsFollowThePolicyTable) {
    auto s = load_scenario(R"(priority_levels: [{name: d, value: 1, global_default: true}]
agents: [{id: a, scope: [{node: core-toronto}]}]
)");
    const auto& a = s.agents.front();
    EXPECT_DOUBLE_EQ(a.predictor.alpha, 0.3);
    EXPECT_DOUBLE_EQ(a.policy.high_watermark, 0.8);
    EXPECT_DOUBLE_EQ(a.policy.low_watermark, 0.3);
    EXPECT_EQ(a.policy.hysteresis_ticks, 3);
    EXPECT_EQ(a.policy.idle_ticks, 5);
    EXPECT_EQ(a.priority.name, "d");
}

TEST(LoadScenario, SyntaxErrorReportsItsLine) {
    const std::string text = "ticks: 3\nagents:\n  - {id: a, scope: [\n";
    try {
        (void)load_scenario(text);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_GE(e.line(), 3U);
    }
}

TEST(LoadScenario, UnknownKeyReportsItsLine) {
    try {
        (void)load_scenario("ticks: 3\ntopology:\n  - {id: n, region: r, cpu: 1, memory: 1, colour: red}\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3U);
    }
}

TEST(LoadScenario, DanglingReferencesAreRejected) {
    const char* bad[] = {
        // unknown scope node
        "priority_levels: [{name: d, value: 1, global_default: true}]\nagents: [{id: a, scope: [{node: x}]}]\n",
        // two global defaults
        "priority_levels: [{name: a, value: 1, global_default: true}, {name: b, value: 2, global_default: true}]\n",
        // pod owner missing
        "pods: [{id: p, owner: ghost}]\n",
        // taint on unknown node
        "events: [{tick: 1, type: taint, node: x, key: A, effect: NoExecute}]\n",
        // agent without priority and no default
        "agents: [{id: a, scope: [{node: core-toronto}]}]\n",
        // non-positive ticks
        "ticks: 0\n",
    };
    for (const char* text : bad) EXPECT_THROW((void)load_scenario(text), ValidationError) << text;
}

TEST(LoadScenario, RepeatedSliceRequestsExpand) {
    auto s = load_scenario(R"(ticks: 10
priority_levels: [{name: d, value: 1, global_default: true}]
agents: [{id: a, role: slice, scope: [{node: core-toronto}]}]
events:
  - {tick: 2, type: slice_request, acl: a, name: s, repeat: 3, pods: [{cpu: 100, memory: 128}]}
)");
    ASSERT_EQ(s.events.size(), 3U);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(s.events[i].tick, static_cast<std::int64_t>(2 + i));
        EXPECT_EQ(s.events[i].kind, InjectedKind::SliceRequest);
    }
    EXPECT_NE(s.events[0].slice.name, s.events[1].slice.name);
}

TEST(MergeEvents, AddsEventsAndChangesTheRunIdentity) {
    auto s = load_scenario(read_scenario_file("coherency.yaml"));
    const auto before = scenario_hash(s);
    const auto count = s.events.size();
    merge_events(s, read_scenario_file("coherency-release.yaml"));
    EXPECT_EQ(s.events.size(), count + 1);
    EXPECT_NE(scenario_hash(s), before);
    EXPECT_THROW(merge_events(s, "events: [{tick: 1, type: release, acl: nobody}]\n"), ValidationError);
}

TEST(ScenarioHash, DependsOnSeedAndTicks) {
    auto a = builtin("case1");
    auto b = a;
    b.seed += 1;
    auto c = a;
    c.ticks += 1;
    EXPECT_NE(scenario_hash(a), scenario_hash(b));
    EXPECT_NE(scenario_hash(a), scenario_hash(c));
    EXPECT_EQ(scenario_hash(a), scenario_hash(builtin("case1")));
}
