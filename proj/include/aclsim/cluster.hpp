#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace aclsim {

using NodeId = std::string;
using PodId = std::string;
using AclId = std::string;
using RegionId = std::string;

/// Two-dimensional resource amount: CPU in millicores and memory in MiB.
///
/// Comparison with `<=` is component-wise, so two vectors may be mutually
/// incomparable. Subtraction refuses to produce a negative component.
struct ResourceVector {
    std::int64_t cpu_millicores = 0;
    std::int64_t memory_mib = 0;

    friend constexpr bool operator==(const ResourceVector&, const ResourceVector&) = default;

    friend constexpr bool operator<=(const ResourceVector& a, const ResourceVector& b) {
        return a.cpu_millicores <= b.cpu_millicores && a.memory_mib <= b.memory_mib;
    }

    friend constexpr ResourceVector operator+(const ResourceVector& a, const ResourceVector& b) {
        return {a.cpu_millicores + b.cpu_millicores, a.memory_mib + b.memory_mib};
    }

    friend ResourceVector operator-(const ResourceVector& a, const ResourceVector& b) {
        if (!(b <= a)) {
            throw std::domain_error("resource subtraction would go negative");
        }
        return {a.cpu_millicores - b.cpu_millicores, a.memory_mib - b.memory_mib};
    }

    ResourceVector& operator+=(const ResourceVector& o) { return *this = *this + o; }
    ResourceVector& operator-=(const ResourceVector& o) { return *this = *this - o; }

    [[nodiscard]] constexpr bool is_zero() const noexcept {
        return cpu_millicores == 0 && memory_mib == 0;
    }
};

enum class TaintEffect : std::uint8_t { NoSchedule = 1, PreferNoSchedule = 2, NoExecute = 4 };

inline std::string_view to_string(TaintEffect e) {
    switch (e) {
    case TaintEffect::NoSchedule: return "NoSchedule";
    case TaintEffect::PreferNoSchedule: return "PreferNoSchedule";
    case TaintEffect::NoExecute: return "NoExecute";
    }
    return "?";
}

inline std::optional<TaintEffect> parse_taint_effect(std::string_view s) {
    if (s == "NoSchedule") return TaintEffect::NoSchedule;
    if (s == "PreferNoSchedule") return TaintEffect::PreferNoSchedule;
    if (s == "NoExecute") return TaintEffect::NoExecute;
    return std::nullopt;
}

/// Node-side repulsion marker. Keys are plain ACL identifiers.
struct Taint {
    std::string key;
    TaintEffect effect = TaintEffect::NoSchedule;

    friend bool operator==(const Taint&, const Taint&) = default;
    friend auto operator<=>(const Taint&, const Taint&) = default;
};

/// Bitmask of taint effects.
class EffectSet {
public:
    constexpr EffectSet() = default;
    constexpr EffectSet(std::initializer_list<TaintEffect> effects) {
        for (auto e : effects) insert(e);
    }

    static constexpr EffectSet all() {
        return {TaintEffect::NoSchedule, TaintEffect::PreferNoSchedule, TaintEffect::NoExecute};
    }

    constexpr void insert(TaintEffect e) { bits_ |= static_cast<std::uint8_t>(e); }
    [[nodiscard]] constexpr bool contains(TaintEffect e) const {
        return (bits_ & static_cast<std::uint8_t>(e)) != 0;
    }
    [[nodiscard]] constexpr bool empty() const { return bits_ == 0; }
    [[nodiscard]] constexpr std::uint8_t bits() const { return bits_; }

    friend constexpr bool operator==(EffectSet, EffectSet) = default;

private:
    std::uint8_t bits_ = 0;
};

/// Pod-side exemption. Matches a taint iff the keys are equal and the taint's
/// effect is one of `effects`.
struct Toleration {
    std::string key;
    EffectSet effects = EffectSet::all();

    [[nodiscard]] bool matches(const Taint& t) const {
        return key == t.key && effects.contains(t.effect);
    }

    friend bool operator==(const Toleration&, const Toleration&) = default;
};

struct PriorityLevel {
    std::string name;
    std::int64_t value = 0;
    bool preemption_enabled = false;
    bool global_default = false;

    friend bool operator==(const PriorityLevel&, const PriorityLevel&) = default;
};

struct Node {
    NodeId id;
    RegionId region;
    ResourceVector capacity;
    std::vector<Taint> taints;  // unique (key, effect), kept sorted
    bool powered_on = true;

    [[nodiscard]] bool has_taint(const Taint& t) const {
        return std::binary_search(taints.begin(), taints.end(), t);
    }
};

enum class PodPhase : std::uint8_t { Pending, Bound, Evicted, Terminated };

inline std::string_view to_string(PodPhase p) {
    switch (p) {
    case PodPhase::Pending: return "Pending";
    case PodPhase::Bound: return "Bound";
    case PodPhase::Evicted: return "Evicted";
    case PodPhase::Terminated: return "Terminated";
    }
    return "?";
}

/// Allowed edges of the pod phase machine.
inline bool phase_transition_allowed(PodPhase from, PodPhase to) {
    switch (to) {
    case PodPhase::Bound: return from == PodPhase::Pending;
    case PodPhase::Evicted: return from == PodPhase::Bound;
    case PodPhase::Pending: return from == PodPhase::Evicted;
    case PodPhase::Terminated: return from != PodPhase::Terminated;
    }
    return false;
}

struct Pod {
    PodId id;
    AclId owner_acl;
    ResourceVector request;
    std::vector<Toleration> tolerations;
    PriorityLevel priority;
    PodPhase phase = PodPhase::Pending;
    // Placement hint carried from the intent; ranks first when feasible.
    std::optional<NodeId> preferred_node;
    // Creation order, used to pick the newest pod on scale-down.
    std::uint64_t serial = 0;
};

class ClusterError : public std::runtime_error {
public:
    enum class Kind {
        UnknownNode,
        UnknownPod,
        DuplicateId,
        CapacityExceeded,
        TaintViolation,
        InvalidPhase,
        NodePoweredOff,
        NodeNotEmpty,
    };

    ClusterError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Whole-cluster snapshot. Every mutating free function below takes the state
/// by value and returns the successor, leaving the input untouched on error.
struct ClusterState {
    std::map<NodeId, Node> nodes;
    std::map<PodId, Pod> pods;
    std::map<PodId, NodeId> bindings;
    // Sum of bound requests per node; maintained by bind/evict/terminate.
    std::map<NodeId, ResourceVector> allocated;

    [[nodiscard]] const Node& node(const NodeId& id) const {
        auto it = nodes.find(id);
        if (it == nodes.end()) {
            throw ClusterError(ClusterError::Kind::UnknownNode, "unknown node '" + id + "'");
        }
        return it->second;
    }

    [[nodiscard]] const Pod& pod(const PodId& id) const {
        auto it = pods.find(id);
        if (it == pods.end()) {
            throw ClusterError(ClusterError::Kind::UnknownPod, "unknown pod '" + id + "'");
        }
        return it->second;
    }

    [[nodiscard]] std::optional<NodeId> node_of(const PodId& id) const {
        auto it = bindings.find(id);
        if (it == bindings.end()) return std::nullopt;
        return it->second;
    }

    /// Bound pods on `node_id`, in pod-id order.
    [[nodiscard]] std::vector<PodId> pods_on(const NodeId& node_id) const {
        std::vector<PodId> out;
        for (const auto& [pod_id, n] : bindings) {
            if (n == node_id) out.push_back(pod_id);
        }
        return out;
    }
};

/// True iff every NoSchedule / NoExecute taint on the node is matched by one
/// of the pod's tolerations. PreferNoSchedule taints never veto.
inline bool tolerates(const Pod& pod, const Node& node) {
    return std::all_of(node.taints.begin(), node.taints.end(), [&](const Taint& t) {
        if (t.effect == TaintEffect::PreferNoSchedule) return true;
        return std::any_of(pod.tolerations.begin(), pod.tolerations.end(),
                           [&](const Toleration& tol) { return tol.matches(t); });
    });
}

inline ResourceVector free_capacity(const NodeId& node_id, const ClusterState& state) {
    const auto& node = state.node(node_id);
    auto it = state.allocated.find(node_id);
    if (it == state.allocated.end()) return node.capacity;
    return node.capacity - it->second;
}

inline bool fits(const Pod& pod, const NodeId& node_id, const ClusterState& state) {
    return pod.request <= free_capacity(node_id, state);
}

[[nodiscard]] inline ClusterState add_node(ClusterState state, Node node) {
    if (state.nodes.contains(node.id)) {
        throw ClusterError(ClusterError::Kind::DuplicateId, "duplicate node '" + node.id + "'");
    }
    std::sort(node.taints.begin(), node.taints.end());
    node.taints.erase(std::unique(node.taints.begin(), node.taints.end()), node.taints.end());
    auto id = node.id;
    state.nodes.emplace(id, std::move(node));
    return state;
}

/// Registers a new pod in phase Pending.
[[nodiscard]] inline ClusterState add_pod(ClusterState state, Pod pod) {
    if (state.pods.contains(pod.id)) {
        throw ClusterError(ClusterError::Kind::DuplicateId, "duplicate pod '" + pod.id + "'");
    }
    pod.phase = PodPhase::Pending;
    auto id = pod.id;
    state.pods.emplace(id, std::move(pod));
    return state;
}

namespace detail {

inline Pod& pod_ref(ClusterState& state, const PodId& id) {
    auto it = state.pods.find(id);
    if (it == state.pods.end()) {
        throw ClusterError(ClusterError::Kind::UnknownPod, "unknown pod '" + id + "'");
    }
    return it->second;
}

inline Node& node_ref(ClusterState& state, const NodeId& id) {
    auto it = state.nodes.find(id);
    if (it == state.nodes.end()) {
        throw ClusterError(ClusterError::Kind::UnknownNode, "unknown node '" + id + "'");
    }
    return it->second;
}

inline void release_binding(ClusterState& state, const Pod& pod) {
    auto it = state.bindings.find(pod.id);
    if (it == state.bindings.end()) return;
    auto& used = state.allocated[it->second];
    used -= pod.request;
    if (used.is_zero()) state.allocated.erase(it->second);
    state.bindings.erase(it);
}

}  // namespace detail

[[nodiscard]] inline ClusterState bind(ClusterState state, const PodId& pod_id, const NodeId& node_id) {
    const auto& node = state.node(node_id);
    auto& pod = detail::pod_ref(state, pod_id);
    if (pod.phase != PodPhase::Pending) {
        throw ClusterError(ClusterError::Kind::InvalidPhase,
                           "pod '" + pod_id + "' is " + std::string(to_string(pod.phase)) + ", not Pending");
    }
    if (!node.powered_on) {
        throw ClusterError(ClusterError::Kind::NodePoweredOff, "node '" + node_id + "' is powered off");
    }
    if (!tolerates(pod, node)) {
        throw ClusterError(ClusterError::Kind::TaintViolation,
                           "pod '" + pod_id + "' does not tolerate taints of '" + node_id + "'");
    }
    if (!fits(pod, node_id, state)) {
        throw ClusterError(ClusterError::Kind::CapacityExceeded,
                           "pod '" + pod_id + "' does not fit on '" + node_id + "'");
    }
    pod.phase = PodPhase::Bound;
    state.bindings[pod_id] = node_id;
    state.allocated[node_id] += pod.request;
    return state;
}


/// Bound -> Evicted; frees the pod's request on its node.
[[nodiscard]] inline ClusterState evict(ClusterState state, const PodId& pod_id) {
    auto& pod = detail::pod_ref(state, pod_id);
    if (pod.phase != PodPhase::Bound) {
        throw ClusterError(ClusterError::Kind::InvalidPhase, "cannot evict non-bound pod '" + pod_id + "'");
    }
    detail::release_binding(state, pod);
    pod.phase = PodPhase::Evicted;
    return state;
}

/// Evicted -> Pending.
[[nodiscard]] inline ClusterState requeue(ClusterState state, const PodId& pod_id) {
    auto& pod = detail::pod_ref(state, pod_id);
    if (pod.phase != PodPhase::Evicted) {
        throw ClusterError(ClusterError::Kind::InvalidPhase, "cannot requeue non-evicted pod '" + pod_id + "'");
    }
    pod.phase = PodPhase::Pending;
    return state;
}

/// Any live phase -> Terminated.
[[nodiscard]] inline ClusterState terminate(ClusterState state, const PodId& pod_id) {
    auto& pod = detail::pod_ref(state, pod_id);
    if (pod.phase == PodPhase::Terminated) {
        throw ClusterError(ClusterError::Kind::InvalidPhase, "pod '" + pod_id + "' already terminated");
    }
    detail::release_binding(state, pod);
    pod.phase = PodPhase::Terminated;
    return state;
}

/// Adds a taint to a node; duplicates are ignored. Bound pods are not touched.
[[nodiscard]] inline ClusterState apply_taint(ClusterState state, const NodeId& node_id, const Taint& taint) {
    auto& node = detail::node_ref(state, node_id);
    auto pos = std::lower_bound(node.taints.begin(), node.taints.end(), taint);
    if (pos == node.taints.end() || *pos != taint) node.taints.insert(pos, taint);
    return state;
}

[[nodiscard]] inline ClusterState set_power(ClusterState state, const NodeId& node_id, bool on) {
    auto& node = detail::node_ref(state, node_id);
    if (!on && state.allocated.contains(node_id)) {
        throw ClusterError(ClusterError::Kind::NodeNotEmpty, "node '" + node_id + "' still hosts pods");
    }
    node.powered_on = on;
    return state;
}

/// Recomputes every derived quantity from scratch and reports inconsistencies.
/// An empty result means the state satisfies all cluster invariants.
inline std::vector<std::string> check_invariants(const ClusterState& state) {
    std::vector<std::string> violations;
    std::map<NodeId, ResourceVector> used;
    for (const auto& [pod_id, pod] : state.pods) {
        auto b = state.bindings.find(pod_id);
        bool bound = pod.phase == PodPhase::Bound;
        if (bound != (b != state.bindings.end())) {
            violations.push_back("pod " + pod_id + " phase/binding mismatch");
            continue;
        }
        if (bound) {
            if (!state.nodes.contains(b->second)) {
                violations.push_back("pod " + pod_id + " bound to unknown node " + b->second);
                continue;
            }
            auto& u = used[b->second];
            u = u + pod.request;
        }
    }
    for (const auto& [pod_id, node_id] : state.bindings) {
        if (!state.pods.contains(pod_id)) violations.push_back("binding for unknown pod " + pod_id);
    }
    for (const auto& [node_id, node] : state.nodes) {
        auto u = used.contains(node_id) ? used.at(node_id) : ResourceVector{};
        if (!(u <= node.capacity)) violations.push_back("node " + node_id + " over capacity");
        auto cached = state.allocated.contains(node_id) ? state.allocated.at(node_id) : ResourceVector{};
        if (cached != u) violations.push_back("node " + node_id + " allocation cache stale");
    }
    return violations;
}

}  // namespace aclsim
