#include "scheduler_oracle.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace aclsim;
using namespace aclsim::testing;

namespace {

const PriorityLevel kAcl1 = level("acl1", 10);
const PriorityLevel kAcl2 = level("acl2", 5);
const PriorityLevel kAcl3 = level("acl3", 1);

Toleration own(const std::string& acl) { return Toleration{acl, EffectSet::all()}; }

Pod acl_pod(std::string id, const std::string& acl, const PriorityLevel& prio, std::int64_t cpu, std::int64_t mem) {
    return make_pod(std::move(id), acl, cpu, mem, prio, {own(acl)});
}

ClusterState with_bound(ClusterState s, Pod pod, const NodeId& node) {
    auto id = pod.id;
    s = add_pod(std::move(s), std::move(pod));
    return aclsim::bind(std::move(s), id, node);
}

// Case 2 starting point: edge-waterloo hosts an ACL2 and an ACL3 pod and has
// just been tainted NoExecute for ACL1; edge-calgary prefers ACL1 and ACL2 and
// runs a small ACL3 pod.
ClusterState case2_state() {
    auto s = default_cluster();
    s = apply_taint(std::move(s), "edge-calgary", {"ACL1", TaintEffect::PreferNoSchedule});
    s = apply_taint(std::move(s), "edge-calgary", {"ACL2", TaintEffect::PreferNoSchedule});
    s = with_bound(std::move(s), acl_pod("acl2-pod", "ACL2", kAcl2, 1000, 2048), "edge-waterloo");
    s = with_bound(std::move(s), acl_pod("acl3-pod", "ACL3", kAcl3, 1000, 2048), "edge-waterloo");
    s = with_bound(std::move(s), acl_pod("acl3-calgary", "ACL3", kAcl3, 500, 1024), "edge-calgary");
    s = apply_taint(std::move(s), "edge-waterloo", {"ACL1", TaintEffect::NoExecute});
    auto p = acl_pod("acl1-pod", "ACL1", kAcl1, 1500, 3072);
    p.preferred_node = "edge-waterloo";
    return add_pod(std::move(s), std::move(p));
}

std::vector<SchedulerUnit> three_units(std::vector<PodId> acl1_queue = {}, std::vector<PodId> acl2_queue = {}) {
    return {{"ACL1", kAcl1, std::move(acl1_queue)}, {"ACL2", kAcl2, std::move(acl2_queue)}, {"ACL3", kAcl3, {}}};
}

}  // namespace

// ------------------------------------------------------------------
// filter_nodes
// ------------------------------------------------------------------

TEST(FilterNodes, UntaintedTopologyKeepsEveryNode) {
    auto s = add_pod(default_cluster(), make_pod("p", "X", 1, 1, kAcl1));
    EXPECT_EQ(filter_nodes(s.pod("p"), s),
              (std::vector<NodeId>{"core-toronto", "edge-calgary", "edge-waterloo"}));
}

TEST(FilterNodes, NoExecuteTaintExcludesOtherAcls) {
    auto s = apply_taint(default_cluster(), "edge-waterloo", {"ACL1", TaintEffect::NoExecute});
    s = add_pod(std::move(s), acl_pod("p", "ACL2", kAcl2, 1, 1));
    EXPECT_EQ(filter_nodes(s.pod("p"), s), (std::vector<NodeId>{"core-toronto", "edge-calgary"}));
}

TEST(FilterNodes, OwnTaintsAreTolerated) {
    auto s = apply_taint(default_cluster(), "edge-waterloo", {"ACL1", TaintEffect::NoExecute});
    s = apply_taint(std::move(s), "edge-calgary", {"ACL1", TaintEffect::NoSchedule});
    s = add_pod(std::move(s), acl_pod("p", "ACL1", kAcl1, 1, 1));
    // Enumeration oracle: a node is kept iff every hard taint is keyed ACL1.
    std::vector<NodeId> expected;
    for (const auto& [id, node] : s.nodes) {
        bool ok = std::all_of(node.taints.begin(), node.taints.end(), [](const Taint& t) {
            return t.effect == TaintEffect::PreferNoSchedule || t.key == "ACL1";
        });
        if (ok) expected.push_back(id);
    }
    EXPECT_EQ(filter_nodes(s.pod("p"), s), expected);
    EXPECT_EQ(expected.size(), 3U);
}

TEST(FilterNodes, PoweredOffNodesAreSkipped) {
    auto s = set_power(default_cluster(), "edge-calgary", false);
    s = add_pod(std::move(s), make_pod("p", "X", 1, 1, kAcl1));
    EXPECT_EQ(filter_nodes(s.pod("p"), s), (std::vector<NodeId>{"core-toronto", "edge-waterloo"}));
}

// ------------------------------------------------------------------
// score_nodes
// ------------------------------------------------------------------

TEST(ScoreNodes, SingletonRanksItself) {
    auto s = add_pod(default_cluster(), make_pod("p", "X", 1, 1, kAcl1));
    EXPECT_EQ(score_nodes(s.pod("p"), {"edge-calgary"}, s), (std::vector<NodeId>{"edge-calgary"}));
}

TEST(ScoreNodes, ForeignPreferNoScheduleRanksBelowCleanNode) {
    auto s = case2_state();
    s = add_pod(std::move(s), acl_pod("acl3-new", "ACL3", kAcl3, 100, 100));
    auto ranked = score_nodes(s.pod("acl3-new"), {"core-toronto", "edge-calgary"}, s);
    EXPECT_EQ(ranked.front(), "core-toronto");
}

TEST(ScoreNodes, LargerFreeCapacityFirstAmongCleanNodes) {
    ClusterState s;
    s = add_node(std::move(s), make_node("a", "r", 2000, 4096));
    s = add_node(std::move(s), make_node("b", "r", 2000, 4096));
    s = with_bound(std::move(s), make_pod("fill-a", "X", 1500, 3072, kAcl3), "a");
    s = with_bound(std::move(s), make_pod("fill-b", "X", 500, 1024, kAcl3), "b");
    s = add_pod(std::move(s), make_pod("p", "Y", 1, 1, kAcl1));
    // b has (1500, 3072) free, a has (500, 1024).
    EXPECT_EQ(score_nodes(s.pod("p"), {"a", "b"}, s), (std::vector<NodeId>{"b", "a"}));
}

TEST(ScoreNodes, MatchingPreferNoScheduleMakesAPriorityHost) {
    auto s = case2_state();
    s = add_pod(std::move(s), acl_pod("acl2-new", "ACL2", kAcl2, 100, 100));
    auto ranked = score_nodes(s.pod("acl2-new"), {"core-toronto", "edge-calgary"}, s);
    EXPECT_EQ(ranked.front(), "edge-calgary");
}

TEST(ScoreNodes, TieBreaksOnNodeId) {
    ClusterState s;
    s = add_node(std::move(s), make_node("zeta", "r", 1000, 1000));
    s = add_node(std::move(s), make_node("alpha", "r", 1000, 1000));
    s = add_pod(std::move(s), make_pod("p", "Y", 1, 1, kAcl1));
    EXPECT_EQ(score_nodes(s.pod("p"), {"zeta", "alpha"}, s), (std::vector<NodeId>{"alpha", "zeta"}));
}

// ------------------------------------------------------------------
// schedule / select_preemption_victims
// ------------------------------------------------------------------

TEST(Schedule, OversizedPodStaysPending) {
    auto s = add_pod(default_cluster(), make_pod("huge", "X", 9000, 100, kAcl1));
    auto d = schedule(s.pod("huge"), s);
    ASSERT_TRUE(std::holds_alternative<PendingDecision>(d));
    EXPECT_EQ(std::get<PendingDecision>(d).reason, "unschedulable");
}

TEST(Schedule, HigherPriorityPreemptsOnFullNode) {
    ClusterState s;
    s = add_node(std::move(s), make_node("edge", "r", 2000, 4096));
    s = with_bound(std::move(s), acl_pod("acl2-pod", "ACL2", kAcl2, 1000, 2048), "edge");
    s = with_bound(std::move(s), acl_pod("acl3-pod", "ACL3", kAcl3, 1000, 2048), "edge");
    s = add_pod(std::move(s), acl_pod("acl1-pod", "ACL1", kAcl1, 1000, 2048));
    auto d = schedule(s.pod("acl1-pod"), s);
    ASSERT_TRUE(std::holds_alternative<PreemptDecision>(d));
    const auto& p = std::get<PreemptDecision>(d);
    EXPECT_EQ(p.node, "edge");
    EXPECT_EQ(p.victims, (std::vector<PodId>{"acl3-pod"}));
    EXPECT_EQ(oracle_victims(s.pod("acl1-pod"), "edge", s), p.victims);
}

TEST(Schedule, PreemptionDisabledLevelNeverPreempts) {
    ClusterState s;
    s = add_node(std::move(s), make_node("edge", "r", 1000, 1000));
    s = with_bound(std::move(s), make_pod("low", "B", 1000, 1000, kAcl3), "edge");
    s = add_pod(std::move(s), make_pod("high", "A", 1000, 1000, level("nopreempt", 100, false)));
    EXPECT_TRUE(std::holds_alternative<PendingDecision>(schedule(s.pod("high"), s)));
}

TEST(SelectVictims, EqualPriorityIsNeverAVictim) {
    ClusterState s;
    s = add_node(std::move(s), make_node("edge", "r", 2000, 4096));
    s = with_bound(std::move(s), acl_pod("a", "ACL2", kAcl2, 1000, 2048), "edge");
    s = with_bound(std::move(s), acl_pod("b", "ACL2", kAcl2, 1000, 2048), "edge");
    s = add_pod(std::move(s), acl_pod("c", "ACL2b", kAcl2, 1000, 2048));
    EXPECT_FALSE(select_preemption_victims(s.pod("c"), "edge", s).has_value());
}

TEST(SelectVictims, BothResidentsWhenMemoryRequiresIt) {
    ClusterState s;
    s = add_node(std::move(s), make_node("edge", "r", 2000, 4096));
    s = with_bound(std::move(s), acl_pod("a", "ACL2", kAcl2, 500, 2048), "edge");
    s = with_bound(std::move(s), acl_pod("b", "ACL3", kAcl3, 500, 2048), "edge");
    s = add_pod(std::move(s), acl_pod("big", "ACL1", kAcl1, 500, 4096));
    auto v = select_preemption_victims(s.pod("big"), "edge", s);
    ASSERT_TRUE(v.has_value());
    EXPECT_EQ(*v, (std::vector<PodId>{"a", "b"}));
    EXPECT_EQ(oracle_victims(s.pod("big"), "edge", s), v);
}

TEST(SelectVictims, MatchesSubsetEnumerationOnRandomNodes) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 300; ++trial) {
        ClusterState s;
        s = add_node(std::move(s), make_node("n", "r", 4000, 8192));
        const int residents = 1 + static_cast<int>(rng() % 6);
        for (int i = 0; i < residents; ++i) {
            auto p = make_pod("r" + std::to_string(i), "X", 250 * (1 + static_cast<std::int64_t>(rng() % 3)),
                              512 * (1 + static_cast<std::int64_t>(rng() % 3)),
                              level("l", 1 + static_cast<std::int64_t>(rng() % 5)));
            if (!fits(p, "n", add_pod(s, p))) continue;
            s = with_bound(std::move(s), std::move(p), "n");
        }
        s = add_pod(std::move(s), make_pod("in", "Y", 250 * (1 + static_cast<std::int64_t>(rng() % 12)),
                                           512 * (1 + static_cast<std::int64_t>(rng() % 12)),
                                           level("l", 1 + static_cast<std::int64_t>(rng() % 5))));
        const auto& in = s.pod("in");
        if (fits(in, "n", s)) continue;
        auto got = select_preemption_victims(in, "n", s);
        auto want = oracle_victims(in, "n", s);
        ASSERT_EQ(got, want) << "trial " << trial;
        if (!got) continue;
        // Strictness and necessity: every victim is lower priority and none
        // can be spared.
        for (const auto& v : *got) EXPECT_LT(s.pod(v).priority.value, in.priority.value);
        for (std::size_t skip = 0; skip < got->size(); ++skip) {
            auto freed = free_capacity("n", s);
            for (std::size_t i = 0; i < got->size(); ++i) {
                if (i != skip) freed += s.pod((*got)[i]).request;
            }
            EXPECT_FALSE(in.request <= freed) << "victim " << (*got)[skip] << " was unnecessary";
        }
    }
}

// ------------------------------------------------------------------
// enforce_no_execute
// ------------------------------------------------------------------

TEST(EnforceNoExecute, IdentityWithoutNoExecuteTaints) {
    auto s = with_bound(default_cluster(), acl_pod("p", "ACL2", kAcl2, 100, 100), "edge-waterloo");
    s = apply_taint(std::move(s), "edge-waterloo", {"ACL1", TaintEffect::NoSchedule});
    auto r = enforce_no_execute(s);
    EXPECT_TRUE(r.evicted.empty());
    EXPECT_EQ(r.state.bindings, s.bindings);
}

TEST(EnforceNoExecute, EvictsIntolerantResidents) {
    auto r = enforce_no_execute(case2_state());
    ASSERT_EQ(r.evicted.size(), 2U);
    EXPECT_EQ(r.evicted[0].pod, "acl2-pod");
    EXPECT_EQ(r.evicted[1].pod, "acl3-pod");
    for (const auto& e : r.evicted) {
        EXPECT_EQ(e.node, "edge-waterloo");
        EXPECT_EQ(e.reason, "no_execute");
        EXPECT_EQ(r.state.pod(e.pod).phase, PodPhase::Pending);
    }
    EXPECT_EQ(r.state.node_of("acl3-calgary"), std::optional<NodeId>("edge-calgary"));
}

TEST(EnforceNoExecute, TolerantResidentsStay) {
    auto s = with_bound(default_cluster(), acl_pod("p", "ACL1", kAcl1, 100, 100), "edge-waterloo");
    s = apply_taint(std::move(s), "edge-waterloo", {"ACL1", TaintEffect::NoExecute});
    EXPECT_TRUE(enforce_no_execute(s).evicted.empty());
}

// ------------------------------------------------------------------
// coordinate
// ------------------------------------------------------------------

TEST(Coordinate, CaseOneRound) {
    auto s = default_cluster();
    auto p1 = acl_pod("acl1-pod", "ACL1", kAcl1, 1500, 3072);
    auto p2 = acl_pod("acl2-pod", "ACL2", kAcl2, 1500, 3072);
    p1.preferred_node = p2.preferred_node = "edge-waterloo";
    s = add_pod(add_pod(std::move(s), p1), p2);
    // ACL2 is listed first to show that order comes from priority.
    std::vector<SchedulerUnit> units{{"ACL2", kAcl2, {"acl2-pod"}}, {"ACL1", kAcl1, {"acl1-pod"}}};
    auto r = coordinate(units, s);
    ASSERT_EQ(r.decisions.size(), 2U);
    EXPECT_EQ(to_oracle(r.decisions[0]), (OracleDecision{"bound", "acl1-pod", "edge-waterloo", {}}));
    EXPECT_EQ(to_oracle(r.decisions[1]), (OracleDecision{"bound", "acl2-pod", "core-toronto", {}}));
    EXPECT_TRUE(r.evictions.empty());
}

TEST(Coordinate, CaseTwoRound) {
    auto r = coordinate(three_units({"acl1-pod"}), case2_state());
    ASSERT_EQ(r.evictions.size(), 2U);
    EXPECT_EQ(r.state.node_of("acl1-pod"), std::optional<NodeId>("edge-waterloo"));
    EXPECT_EQ(r.state.node_of("acl2-pod"), std::optional<NodeId>("edge-calgary"));
    EXPECT_EQ(r.state.node_of("acl3-pod"), std::optional<NodeId>("core-toronto"));
    EXPECT_EQ(r.state.node_of("acl3-calgary"), std::optional<NodeId>("edge-calgary"));
    EXPECT_TRUE(check_invariants(r.state).empty());
}

TEST(Coordinate, EmptyQueuesLeaveStateUnchanged) {
    auto s = with_bound(default_cluster(), acl_pod("p", "ACL1", kAcl1, 100, 100), "edge-calgary");
    auto r = coordinate(three_units(), s);
    EXPECT_TRUE(r.decisions.empty());
    EXPECT_TRUE(r.evictions.empty());
    EXPECT_EQ(r.state.bindings, s.bindings);
}

TEST(Coordinate, PreemptionVictimIsRetriedInTheSameRound) {
    ClusterState s;
    s = add_node(std::move(s), make_node("edge", "r", 1000, 1000));
    s = add_node(std::move(s), make_node("core", "r", 4000, 4000));
    s = with_bound(std::move(s), acl_pod("low", "ACL3", kAcl3, 1000, 1000), "edge");
    s = with_bound(std::move(s), acl_pod("core-fill", "ACL2", kAcl2, 4000, 4000), "core");
    auto hi = acl_pod("high", "ACL1", kAcl1, 1000, 1000);
    hi.preferred_node = "edge";
    s = add_pod(std::move(s), hi);
    // Both nodes are full: high preempts low, and low is retried in the same
    // round but finds no room, so it stays queued.
    auto r = coordinate(three_units({"high"}), s);
    ASSERT_EQ(r.decisions.size(), 2U);
    EXPECT_EQ(to_oracle(r.decisions[0]), (OracleDecision{"preempt", "high", "edge", {"low"}}));
    EXPECT_EQ(to_oracle(r.decisions[1]), (OracleDecision{"pending", "low", {}, {}}));
    auto acl3 = std::find_if(r.units.begin(), r.units.end(), [](const auto& u) { return u.acl_id == "ACL3"; });
    ASSERT_NE(acl3, r.units.end());
    EXPECT_EQ(acl3->queue, (std::vector<PodId>{"low"}));
}

TEST(Coordinate, IsDeterministic) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 50; ++i) {
        auto inst = random_instance(rng);
        auto a = coordinate(inst.units, inst.state);
        auto b = coordinate(inst.units, inst.state);
        ASSERT_EQ(a.decisions.size(), b.decisions.size());
        for (std::size_t k = 0; k < a.decisions.size(); ++k) EXPECT_EQ(to_oracle(a.decisions[k]), to_oracle(b.decisions[k]));
        EXPECT_EQ(a.state.bindings, b.state.bindings);
    }
}

TEST(Coordinate, MatchesBruteForceReferenceOnRandomInstances) {
    std::mt19937_64 rng(31337);
    for (int i = 0; i < 200; ++i) {
        auto inst = random_instance(rng);
        auto got = coordinate(inst.units, inst.state);
        auto want = oracle_round(inst.units, inst.state);
        ASSERT_EQ(got.decisions.size(), want.decisions.size()) << "instance " << i;
        for (std::size_t k = 0; k < got.decisions.size(); ++k) {
            EXPECT_EQ(to_oracle(got.decisions[k]), want.decisions[k]) << "instance " << i << " decision " << k;
        }
        EXPECT_EQ(got.state.bindings, want.bindings) << "instance " << i;
        auto violations = check_invariants(got.state);
        EXPECT_TRUE(violations.empty()) << "instance " << i;
    }
}

TEST(Coordinate, NeverBindsAgainstTaintsOrCapacity) {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 200; ++i) {
        auto inst = random_instance(rng);
        auto r = coordinate(inst.units, inst.state);
        for (const auto& d : r.decisions) {
            if (std::holds_alternative<PendingDecision>(d)) continue;
            const auto& pod = r.state.pod(decision_pod(d));
            const auto& node = r.state.node(*r.state.node_of(pod.id));
            EXPECT_TRUE(tolerates(pod, node));
        }
        // Requeue liveness: every evicted pod is Bound or Pending after the round.
        for (const auto& e : r.evictions) {
            auto phase = r.state.pod(e.pod).phase;
            EXPECT_TRUE(phase == PodPhase::Bound || phase == PodPhase::Pending);
            if (e.reason == "preempted") {
                EXPECT_LT(r.state.pod(e.pod).priority.value, r.state.pod(e.by).priority.value);
            }
        }
        EXPECT_TRUE(check_invariants(r.state).empty());
    }
}
