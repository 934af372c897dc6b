#pragma once

#include <aclsim/cluster.hpp>

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

namespace aclsim {

/// One scheduling queue per ACL.
struct SchedulerUnit {
    AclId acl_id;
    PriorityLevel priority;
    std::vector<PodId> queue;
};

struct BoundDecision {
    PodId pod;
    NodeId node;
    friend bool operator==(const BoundDecision&, const BoundDecision&) = default;
};

struct PreemptDecision {
    PodId pod;
    NodeId node;
    std::vector<PodId> victims;  // sorted by id
    friend bool operator==(const PreemptDecision&, const PreemptDecision&) = default;
};

struct PendingDecision {
    PodId pod;
    std::string reason;
    friend bool operator==(const PendingDecision&, const PendingDecision&) = default;
};

using Decision = std::variant<BoundDecision, PreemptDecision, PendingDecision>;

inline const PodId& decision_pod(const Decision& d) {
    return std::visit([](const auto& v) -> const PodId& { return v.pod; }, d);
}

/// Nodes whose hard taints the pod tolerates. Capacity is deliberately not
/// checked here since preemption may still free room. Powered-off nodes are
/// never candidates.
inline std::vector<NodeId> filter_nodes(const Pod& pod, const ClusterState& state) {
    std::vector<NodeId> out;
    for (const auto& [id, node] : state.nodes) {
        if (node.powered_on && tolerates(pod, node)) out.push_back(id);
    }
    return out;
}

/// Soft-taint tier of a node for a pod: 0 when the node carries a
/// PreferNoSchedule taint the pod tolerates (a priority host), 1 when it
/// carries none, 2 when it carries only PreferNoSchedule taints for others.
inline int prefer_tier(const Pod& pod, const Node& node) {
    bool any_soft = false;
    for (const auto& t : node.taints) {
        if (t.effect != TaintEffect::PreferNoSchedule) continue;
        any_soft = true;
        for (const auto& tol : pod.tolerations) {
            if (tol.matches(t)) return 0;
        }
    }
    return any_soft ? 2 : 1;
}

/// Deterministic ranking: the pod's preferred node, then soft-taint tier,
/// then larger free capacity (cpu, then memory), then node id.
inline std::vector<NodeId> score_nodes(const Pod& pod, const std::vector<NodeId>& feasible,
                                       const ClusterState& state) {
    using Key = std::tuple<int, int, std::int64_t, std::int64_t, NodeId>;
    std::vector<Key> keys;
    keys.reserve(feasible.size());
    for (const auto& id : feasible) {
        const auto& node = state.node(id);
        auto free = free_capacity(id, state);
        int preferred = (pod.preferred_node && *pod.preferred_node == id) ? 0 : 1;
        keys.emplace_back(preferred, prefer_tier(pod, node), -free.cpu_millicores, -free.memory_mib, id);
    }
    std::sort(keys.begin(), keys.end());
    std::vector<NodeId> out;
    out.reserve(keys.size());
    for (auto& k : keys) out.push_back(std::move(std::get<4>(k)));
    return out;
}

namespace detail {

// Upper bound on subsets examined before falling back to the greedy pick.
inline constexpr std::size_t kMaxVictimSubsets = 2'000'000;

// Greedy fallback for very crowded nodes: lowest priority first, largest
// request first, id last; stops once the pod fits.
inline std::optional<std::vector<PodId>> greedy_victims(const std::vector<const Pod*>& cands,
                                                        ResourceVector free, const ResourceVector& need) {
    auto order = cands;
    std::sort(order.begin(), order.end(), [](const Pod* a, const Pod* b) {
        return std::tuple(a->priority.value, -a->request.memory_mib, -a->request.cpu_millicores, a->id) <
               std::tuple(b->priority.value, -b->request.memory_mib, -b->request.cpu_millicores, b->id);
    });
    std::vector<PodId> chosen;
    for (const Pod* p : order) {
        if (need <= free) break;
        free += p->request;
        chosen.push_back(p->id);
    }
    if (!(need <= free)) return std::nullopt;
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

}  // namespace detail

/// Smallest set of strictly-lower-priority pods on `node_id` whose eviction
/// lets `pod` fit. Ties on size break by summed priority value, then by the
/// lexicographic order of the sorted victim ids. Returns nullopt when no such
/// set exists.
inline std::optional<std::vector<PodId>> select_preemption_victims(const Pod& pod, const NodeId& node_id,
                                                                   const ClusterState& state) {
    const auto free = free_capacity(node_id, state);
    if (pod.request <= free) return std::vector<PodId>{};

    std::vector<const Pod*> cands;  // ordered by id (bindings map order)
    ResourceVector reclaimable = free;
    for (const auto& id : state.pods_on(node_id)) {
        const auto& p = state.pod(id);
        if (p.priority.value < pod.priority.value) {
            cands.push_back(&p);
            reclaimable += p.request;
        }
    }
    if (!(pod.request <= reclaimable)) return std::nullopt;

    const std::size_t n = cands.size();
    std::size_t examined = 0;
    std::vector<std::size_t> idx;
    for (std::size_t k = 1; k <= n; ++k) {
        idx.resize(k);
        std::iota(idx.begin(), idx.end(), 0);
        std::optional<std::vector<std::size_t>> best;
        std::int64_t best_sum = 0;
        while (true) {
            if (++examined > detail::kMaxVictimSubsets) return detail::greedy_victims(cands, free, pod.request);
            ResourceVector avail = free;
            std::int64_t sum = 0;
            for (auto i : idx) {
                avail += cands[i]->request;
                sum += cands[i]->priority.value;
            }
            // Index order equals id order, so the first subset found at a
            // given priority sum is the lexicographically smallest.
            if (pod.request <= avail && (!best || sum < best_sum)) {
                best = idx;
                best_sum = sum;
            }
            // next combination
            std::size_t i = k;
            while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
            if (i == 0) break;
            ++idx[i - 1];
            for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
        }
        if (best) {
            std::vector<PodId> out;
            for (auto i : *best) out.push_back(cands[i]->id);
            return out;
        }
    }
    return std::nullopt;
}

/// Decides where a pending pod goes: the first ranked node it fits on, else
/// the first ranked node where a victim set exists (if its priority level
/// allows preemption), else Pending.
inline Decision schedule(const Pod& pod, const ClusterState& state) {
    const auto ranked = score_nodes(pod, filter_nodes(pod, state), state);
    for (const auto& id : ranked) {
        if (fits(pod, id, state)) return BoundDecision{pod.id, id};
    }
    if (pod.priority.preemption_enabled) {
        for (const auto& id : ranked) {
            if (auto victims = select_preemption_victims(pod, id, state); victims && !victims->empty()) {
                return PreemptDecision{pod.id, id, std::move(*victims)};
            }
        }
    }
    return PendingDecision{pod.id, "unschedulable"};
}

struct Eviction {
    PodId pod;
    NodeId node;
    std::string reason;  // "no_execute" or "preempted"
    PodId by;            // preemptor, empty for no_execute

    friend bool operator==(const Eviction&, const Eviction&) = default;
};

struct NoExecuteResult {
    ClusterState state;
    std::vector<Eviction> evicted;
};

/// Evicts every bound pod that does not tolerate a NoExecute taint on its
/// node. Evicted pods come back as Pending; requeueing them is the caller's
/// job.
inline NoExecuteResult enforce_no_execute(ClusterState state) {
    std::vector<Eviction> evicted;
    const auto bindings = state.bindings;
    for (const auto& [pod_id, node_id] : bindings) {
        const auto& node = state.node(node_id);
        const auto& pod = state.pod(pod_id);
        bool violated = std::any_of(node.taints.begin(), node.taints.end(), [&](const Taint& t) {
            return t.effect == TaintEffect::NoExecute &&
                   std::none_of(pod.tolerations.begin(), pod.tolerations.end(),
                                [&](const Toleration& tol) { return tol.matches(t); });
        });
        if (violated) {
            state = requeue(evict(std::move(state), pod_id), pod_id);
            evicted.push_back({pod_id, node_id, "no_execute", {}});
        }
    }
    return {std::move(state), std::move(evicted)};
}

struct RoundResult {
    ClusterState state;
    std::vector<SchedulerUnit> units;
    std::vector<Eviction> evictions;  // in the order they happened
    std::vector<Decision> decisions;
};

namespace detail {

inline SchedulerUnit& unit_for(std::vector<SchedulerUnit>& units, const Pod& pod) {
    auto it = std::find_if(units.begin(), units.end(), [&](const auto& u) { return u.acl_id == pod.owner_acl; });
    if (it != units.end()) return *it;
    units.push_back({pod.owner_acl, pod.priority, {}});
    return units.back();
}

inline void sort_units(std::vector<SchedulerUnit>& units) {
    std::stable_sort(units.begin(), units.end(), [](const auto& a, const auto& b) {
        if (a.priority.value != b.priority.value) return a.priority.value > b.priority.value;
        return a.acl_id < b.acl_id;
    });
}

}  // namespace detail

/// One coordinator round. NoExecute enforcement runs first; units are then
/// drained by descending priority value (ACL id breaks ties). Preemption
/// victims are requeued to their owners before the next pod is considered,
/// so they are retried within the same round. Pods left Pending stay queued.
inline RoundResult coordinate(std::vector<SchedulerUnit> units, ClusterState state) {
    RoundResult out;
    auto ne = enforce_no_execute(std::move(state));
    state = std::move(ne.state);
    for (const auto& ev : ne.evicted) {
        detail::unit_for(units, state.pod(ev.pod)).queue.push_back(ev.pod);
    }
    out.evictions = std::move(ne.evicted);

    detail::sort_units(units);
    for (std::size_t u = 0; u < units.size(); ++u) {
        std::vector<PodId> still_pending;
        // The queue may grow while draining (victims of the same owner).
        for (std::size_t i = 0; i < units[u].queue.size(); ++i) {
            const PodId pod_id = units[u].queue[i];
            auto pit = state.pods.find(pod_id);
            if (pit == state.pods.end() || pit->second.phase != PodPhase::Pending) continue;
            const Pod pod = pit->second;
            auto decision = schedule(pod, state);
            if (auto* b = std::get_if<BoundDecision>(&decision)) {
                state = aclsim::bind(std::move(state), b->pod, b->node);
            } else if (auto* p = std::get_if<PreemptDecision>(&decision)) {
                for (const auto& victim : p->victims) {
                    state = requeue(evict(std::move(state), victim), victim);
                    out.evictions.push_back({victim, p->node, "preempted", p->pod});
                    auto& vu = detail::unit_for(units, state.pod(victim));
                    vu.queue.push_back(victim);
                }
                state = aclsim::bind(std::move(state), p->pod, p->node);
            } else {
                still_pending.push_back(pod_id);
            }
            out.decisions.push_back(std::move(decision));
        }
        units[u].queue = std::move(still_pending);
    }
    out.state = std::move(state);
    out.units = std::move(units);
    return out;
}

}  // namespace aclsim
