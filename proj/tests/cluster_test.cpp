#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace aclsim;
using namespace aclsim::testing;

namespace {

Taint taint(std::string key, TaintEffect e) { return Taint{std::move(key), e}; }

Toleration tol(std::string key, EffectSet effects = EffectSet::all()) { return Toleration{std::move(key), effects}; }

// Independent oracle: capacity minus the sum of bound requests, computed from
// the raw bindings rather than the allocation cache.
ResourceVector free_oracle(const ClusterState& s, const NodeId& node) {
    std::int64_t cpu = s.node(node).capacity.cpu_millicores;
    std::int64_t mem = s.node(node).capacity.memory_mib;
    for (const auto& [pod, n] : s.bindings) {
        if (n != node) continue;
        cpu -= s.pod(pod).request.cpu_millicores;
        mem -= s.pod(pod).request.memory_mib;
    }
    return {cpu, mem};
}

}  // namespace

// ------------------------------------------------------------------
// ResourceVector
// ------------------------------------------------------------------

TEST(ResourceVector, ComparisonIsComponentWise) {
    ResourceVector a{100, 200};
    ResourceVector b{200, 100};
    EXPECT_FALSE(a <= b);
    EXPECT_FALSE(b <= a);
    EXPECT_TRUE((a <= ResourceVector{100, 200}));
    EXPECT_TRUE((ResourceVector{0, 0} <= a));
}

TEST(ResourceVector, SubtractionRefusesNegativeComponents) {
    ResourceVector a{1000, 512};
    EXPECT_EQ((a - ResourceVector{400, 512}), (ResourceVector{600, 0}));
    EXPECT_THROW((void)(a - ResourceVector{1001, 0}), std::domain_error);
    EXPECT_THROW((void)(a - ResourceVector{0, 513}), std::domain_error);
}

// ------------------------------------------------------------------
// tolerates
// ------------------------------------------------------------------

TEST(Tolerates, UntaintedNodeAcceptsAnyPod) {
    auto node = make_node("n", "r", 1000, 1000);
    auto pod = make_pod("p", "ACL1", 1, 1, level("x", 1));
    EXPECT_TRUE(tolerates(pod, node));
}

TEST(Tolerates, MatchingNoExecuteTolerationAccepts) {
    auto node = make_node("edge-waterloo", "waterloo", 2000, 4096, {taint("ACL1", TaintEffect::NoExecute)});
    auto pod = make_pod("p", "ACL1", 1, 1, level("x", 1), {tol("ACL1", {TaintEffect::NoExecute})});
    EXPECT_TRUE(tolerates(pod, node));
}

TEST(Tolerates, MissingTolerationRejectsNoExecute) {
    auto node = make_node("edge-waterloo", "waterloo", 2000, 4096, {taint("ACL1", TaintEffect::NoExecute)});
    auto pod = make_pod("p", "ACL2", 1, 1, level("x", 1));
    EXPECT_FALSE(tolerates(pod, node));
}

TEST(Tolerates, PreferNoScheduleNeverVetoes) {
    auto node = make_node("edge-calgary", "calgary", 2000, 4096, {taint("ACL1", TaintEffect::PreferNoSchedule)});
    auto pod = make_pod("p", "ACL3", 1, 1, level("x", 1));
    EXPECT_TRUE(tolerates(pod, node));
}

TEST(Tolerates, TolerationMustCoverTheTaintEffect) {
    auto node = make_node("n", "r", 1, 1, {taint("ACL1", TaintEffect::NoExecute)});
    auto only_noschedule = make_pod("p", "ACL1", 1, 1, level("x", 1), {tol("ACL1", {TaintEffect::NoSchedule})});
    EXPECT_FALSE(tolerates(only_noschedule, node));
    auto wrong_key = make_pod("q", "ACL2", 1, 1, level("x", 1), {tol("ACL2")});
    EXPECT_FALSE(tolerates(wrong_key, node));
}

TEST(Tolerates, IsMonotoneInTolerationsAndTaints) {
    std::mt19937_64 rng(11);
    const std::vector<std::string> keys{"A", "B", "C"};
    const std::vector<TaintEffect> effects{TaintEffect::NoSchedule, TaintEffect::PreferNoSchedule,
                                           TaintEffect::NoExecute};
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
    for (int trial = 0; trial < 2000; ++trial) {
        auto node = make_node("n", "r", 1, 1);
        for (std::size_t i = 0, k = pick(4); i < k; ++i) node.taints.push_back(taint(keys[pick(3)], effects[pick(3)]));
        std::sort(node.taints.begin(), node.taints.end());
        auto pod = make_pod("p", "A", 1, 1, level("x", 1));
        for (std::size_t i = 0, k = pick(3); i < k; ++i) {
            EffectSet es;
            es.insert(effects[pick(3)]);
            pod.tolerations.push_back(tol(keys[pick(3)], es));
        }
        const bool before = tolerates(pod, node);

        auto more_tol = pod;
        EffectSet es;
        es.insert(effects[pick(3)]);
        more_tol.tolerations.push_back(tol(keys[pick(3)], es));
        if (before) {
            EXPECT_TRUE(tolerates(more_tol, node));
        }

        auto more_taint = node;
        more_taint.taints.push_back(taint(keys[pick(3)], effects[pick(3)]));
        if (!before) {
            EXPECT_FALSE(tolerates(pod, more_taint));
        }
    }
}

// ------------------------------------------------------------------
// fits / free_capacity / bind
// ------------------------------------------------------------------

TEST(Fits, ZeroRequestAlwaysFits) {
    auto s = default_cluster();
    s = add_pod(std::move(s), make_pod("zero", "A", 0, 0, level("x", 1)));
    for (const auto& [id, node] : s.nodes) EXPECT_TRUE(fits(s.pod("zero"), id, s));
}

TEST(Fits, SlotSizedPodFitsEmptyEdge) {
    auto s = default_cluster();
    s = add_pod(std::move(s), make_pod("p", "A", 1500, 3072, level("x", 1)));
    EXPECT_TRUE(fits(s.pod("p"), "edge-waterloo", s));
}

TEST(Fits, SecondSlotSizedPodDoesNotFit) {
    auto s = default_cluster();
    s = add_pod(std::move(s), make_pod("first", "A", 1500, 3072, level("x", 1)));
    s = add_pod(std::move(s), make_pod("second", "B", 1500, 3072, level("x", 1)));
    s = aclsim::bind(std::move(s), "first", "edge-waterloo");
    EXPECT_EQ(free_capacity("edge-waterloo", s), free_oracle(s, "edge-waterloo"));
    EXPECT_FALSE(fits(s.pod("second"), "edge-waterloo", s));
}

TEST(Fits, UnknownNodeThrows) {
    auto s = default_cluster();
    s = add_pod(std::move(s), make_pod("p", "A", 1, 1, level("x", 1)));
    try {
        (void)fits(s.pod("p"), "nowhere", s);
        FAIL() << "expected ClusterError";
    } catch (const ClusterError& e) {
        EXPECT_EQ(e.kind(), ClusterError::Kind::UnknownNode);
    }
}

TEST(FreeCapacity, EmptyNodeReportsCapacity) {
    auto s = default_cluster();
    EXPECT_EQ(free_capacity("edge-calgary", s), (ResourceVector{2000, 4096}));
}

TEST(FreeCapacity, BindThenEvictRestoresCapacity) {
    auto s = default_cluster();
    s = add_pod(std::move(s), make_pod("p", "A", 500, 1024, level("x", 1)));
    s = aclsim::bind(std::move(s), "p", "edge-calgary");
    EXPECT_EQ(free_capacity("edge-calgary", s), (ResourceVector{1500, 3072}));
    EXPECT_EQ(free_capacity("edge-calgary", s), free_oracle(s, "edge-calgary"));
    s = evict(std::move(s), "p");
    EXPECT_EQ(free_capacity("edge-calgary", s), (ResourceVector{2000, 4096}));
}

TEST(Bind, SucceedsAndKeepsInvariants) {
    auto s = default_cluster();
    s = add_pod(std::move(s), make_pod("p", "A", 1000, 1000, level("x", 1)));
    s = aclsim::bind(std::move(s), "p", "core-toronto");
    EXPECT_EQ(s.pod("p").phase, PodPhase::Bound);
    EXPECT_EQ(s.node_of("p"), std::optional<NodeId>("core-toronto"));
    EXPECT_TRUE(check_invariants(s).empty());
}

TEST(Bind, MemoryOverflowIsCapacityExceededAndLeavesStateAlone) {
    auto s = default_cluster();
    s = add_pod(std::move(s), make_pod("big", "A", 100, 4097, level("x", 1)));
    const auto before = s;
    try {
        (void)aclsim::bind(s, "big", "edge-waterloo");
        FAIL() << "expected ClusterError";
    } catch (const ClusterError& e) {
        EXPECT_EQ(e.kind(), ClusterError::Kind::CapacityExceeded);
    }
    EXPECT_EQ(s.pod("big").phase, before.pod("big").phase);
    EXPECT_TRUE(s.bindings.empty());
}

TEST(Bind, AlreadyBoundIsInvalidPhase) {
    auto s = default_cluster();
    s = add_pod(std::move(s), make_pod("p", "A", 1, 1, level("x", 1)));
    s = aclsim::bind(std::move(s), "p", "edge-calgary");
    try {
        (void)aclsim::bind(s, "p", "core-toronto");
        FAIL() << "expected ClusterError";
    } catch (const ClusterError& e) {
        EXPECT_EQ(e.kind(), ClusterError::Kind::InvalidPhase);
    }
}

TEST(Bind, IntolerantPodIsTaintViolation) {
    auto s = default_cluster();
    s = apply_taint(std::move(s), "edge-waterloo", taint("ACL1", TaintEffect::NoSchedule));
    s = add_pod(std::move(s), make_pod("p", "ACL2", 1, 1, level("x", 1)));
    try {
        (void)aclsim::bind(s, "p", "edge-waterloo");
        FAIL() << "expected ClusterError";
    } catch (const ClusterError& e) {
        EXPECT_EQ(e.kind(), ClusterError::Kind::TaintViolation);
    }
}

TEST(Bind, PoweredOffNodeIsRejected) {
    auto s = set_power(default_cluster(), "edge-calgary", false);
    s = add_pod(std::move(s), make_pod("p", "A", 1, 1, level("x", 1)));
    try {
        (void)aclsim::bind(s, "p", "edge-calgary");
        FAIL() << "expected ClusterError";
    } catch (const ClusterError& e) {
        EXPECT_EQ(e.kind(), ClusterError::Kind::NodePoweredOff);
    }
}

TEST(SetPower, OccupiedNodeCannotBePoweredOff) {
    auto s = default_cluster();
    s = add_pod(std::move(s), make_pod("p", "A", 1, 1, level("x", 1)));
    s = aclsim::bind(std::move(s), "p", "edge-calgary");
    try {
        (void)set_power(s, "edge-calgary", false);
        FAIL() << "expected ClusterError";
    } catch (const ClusterError& e) {
        EXPECT_EQ(e.kind(), ClusterError::Kind::NodeNotEmpty);
    }
}

// ------------------------------------------------------------------
// apply_taint
// ------------------------------------------------------------------

TEST(ApplyTaint, LeavesBoundPodsUntouched) {
    auto s = default_cluster();
    s = add_pod(std::move(s), make_pod("acl2-pod", "ACL2", 1000, 2048, level("acl2", 5)));
    s = aclsim::bind(std::move(s), "acl2-pod", "edge-waterloo");
    s = apply_taint(std::move(s), "edge-waterloo", taint("ACL1", TaintEffect::NoExecute));
    EXPECT_TRUE(s.node("edge-waterloo").has_taint(taint("ACL1", TaintEffect::NoExecute)));
    EXPECT_EQ(s.pod("acl2-pod").phase, PodPhase::Bound);
    EXPECT_EQ(s.node_of("acl2-pod"), std::optional<NodeId>("edge-waterloo"));
}

TEST(ApplyTaint, DuplicateIsIdempotent) {
    auto s = apply_taint(default_cluster(), "edge-waterloo", taint("ACL1", TaintEffect::NoExecute));
    auto again = apply_taint(s, "edge-waterloo", taint("ACL1", TaintEffect::NoExecute));
    EXPECT_EQ(again.node("edge-waterloo").taints, s.node("edge-waterloo").taints);
    EXPECT_EQ(again.node("edge-waterloo").taints.size(), 1U);
}

TEST(ApplyTaint, NodesHoldSeveralTaints) {
    auto s = apply_taint(default_cluster(), "edge-calgary", taint("ACL1", TaintEffect::PreferNoSchedule));
    s = apply_taint(std::move(s), "edge-calgary", taint("ACL2", TaintEffect::PreferNoSchedule));
    const auto& node = s.node("edge-calgary");
    EXPECT_TRUE(node.has_taint(taint("ACL1", TaintEffect::PreferNoSchedule)));
    EXPECT_TRUE(node.has_taint(taint("ACL2", TaintEffect::PreferNoSchedule)));
}

TEST(ApplyTaint, UnknownNodeThrows) {
    EXPECT_THROW((void)apply_taint(default_cluster(), "nowhere", taint("A", TaintEffect::NoSchedule)), ClusterError);
}

// ------------------------------------------------------------------
// Properties
// ------------------------------------------------------------------

TEST(ClusterProperties, RandomOperationSequencesRespectPhaseMachineAndCapacity) {
    std::mt19937_64 rng(2024);
    for (int run = 0; run < 50; ++run) {
        auto s = default_cluster();
        for (int i = 0; i < 12; ++i) {
            auto cpu = static_cast<std::int64_t>(rng() % 2500);
            auto mem = static_cast<std::int64_t>(rng() % 5000);
            s = add_pod(std::move(s), make_pod("p" + std::to_string(i), "A", cpu, mem, level("x", 1)));
        }
        std::vector<NodeId> nodes;
        for (const auto& [id, n] : s.nodes) nodes.push_back(id);
        for (int step = 0; step < 200; ++step) {
            PodId pod = "p" + std::to_string(rng() % 12);
            const auto from = s.pod(pod).phase;
            const auto free_before = [&] {
                std::map<NodeId, ResourceVector> m;
                for (const auto& n : nodes) m[n] = free_capacity(n, s);
                return m;
            }();
            int op = static_cast<int>(rng() % 4);
            PodPhase target = PodPhase::Bound;
            try {
                switch (op) {
                case 0: target = PodPhase::Bound; s = aclsim::bind(s, pod, nodes[rng() % nodes.size()]); break;
                case 1: target = PodPhase::Evicted; s = evict(s, pod); break;
                case 2: target = PodPhase::Pending; s = requeue(s, pod); break;
                default: target = PodPhase::Terminated; s = terminate(s, pod); break;
                }
                EXPECT_TRUE(phase_transition_allowed(from, target))
                    << to_string(from) << " -> " << to_string(target);
                EXPECT_EQ(s.pod(pod).phase, target);
            } catch (const ClusterError&) {
                // A rejected operation must leave the state as it was.
                EXPECT_EQ(s.pod(pod).phase, from);
                for (const auto& n : nodes) EXPECT_EQ(free_capacity(n, s), free_before.at(n));
            }
            auto violations = check_invariants(s);
            ASSERT_TRUE(violations.empty()) << violations.front();
            for (const auto& n : nodes) EXPECT_EQ(free_capacity(n, s), free_oracle(s, n));
        }
    }
}

TEST(ClusterProperties, BindEvictRoundTripRestoresFreeCapacity) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 500; ++trial) {
        auto s = default_cluster();
        auto cpu = static_cast<std::int64_t>(rng() % 2001);
        auto mem = static_cast<std::int64_t>(rng() % 4097);
        s = add_pod(std::move(s), make_pod("p", "A", cpu, mem, level("x", 1)));
        const auto before = free_capacity("edge-calgary", s);
        auto after = evict(aclsim::bind(s, "p", "edge-calgary"), "p");
        EXPECT_EQ(free_capacity("edge-calgary", after), before);
    }
}
