#pragma once

#include <aclsim/cluster.hpp>
#include <aclsim/scheduler.hpp>
#include <aclsim/traffic.hpp>

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

namespace aclsim {

// ---------------------------------------------------------------------------
// Scope and size taxonomy
// ---------------------------------------------------------------------------

struct ScopeTarget {
    enum class Kind { Container, Node, Region, EndToEnd };

    Kind kind = Kind::Node;
    std::string id;  // empty for EndToEnd
    NodeId host;     // hosting node, Container targets only

    static ScopeTarget container(std::string id, NodeId host) { return {Kind::Container, std::move(id), std::move(host)}; }
    static ScopeTarget node(NodeId id) { return {Kind::Node, std::move(id), {}}; }
    static ScopeTarget region(RegionId id) { return {Kind::Region, std::move(id), {}}; }
    static ScopeTarget end_to_end() { return {Kind::EndToEnd, {}, {}}; }

    friend bool operator==(const ScopeTarget&, const ScopeTarget&) = default;
};

using Scope = std::vector<ScopeTarget>;

enum class SizeClass { Femto, Micro, Macro, Mega };

inline std::string_view to_string(SizeClass s) {
    switch (s) {
    case SizeClass::Femto: return "Femto";
    case SizeClass::Micro: return "Micro";
    case SizeClass::Macro: return "Macro";
    case SizeClass::Mega: return "Mega";
    }
    return "?";
}

class AgentError : public std::runtime_error {
public:
    enum class Kind { SuspendedAgent, EmptyScope, NoGrant };

    AgentError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    [[nodiscard]] Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

inline bool scope_is_end_to_end(const Scope& scope) {
    return std::any_of(scope.begin(), scope.end(),
                       [](const auto& t) { return t.kind == ScopeTarget::Kind::EndToEnd; });
}

/// Regions touched by a scope. The end-to-end marker maps to every region.
inline std::set<RegionId> scope_regions(const Scope& scope, const ClusterState& state) {
    std::set<RegionId> out;
    for (const auto& t : scope) {
        switch (t.kind) {
        case ScopeTarget::Kind::Container: out.insert(state.node(t.host).region); break;
        case ScopeTarget::Kind::Node: out.insert(state.node(t.id).region); break;
        case ScopeTarget::Kind::Region: out.insert(t.id); break;
        case ScopeTarget::Kind::EndToEnd:
            for (const auto& [id, n] : state.nodes) out.insert(n.region);
            break;
        }
    }
    return out;
}

/// Nodes a scope may act on: explicit nodes, container hosts and every node
/// of a listed region (all nodes for the end-to-end marker).
inline std::vector<NodeId> scope_nodes(const Scope& scope, const ClusterState& state) {
    std::set<NodeId> out;
    for (const auto& t : scope) {
        switch (t.kind) {
        case ScopeTarget::Kind::Container: out.insert(t.host); break;
        case ScopeTarget::Kind::Node: out.insert(t.id); break;
        case ScopeTarget::Kind::Region:
            for (const auto& [id, n] : state.nodes) {
                if (n.region == t.id) out.insert(id);
            }
            break;
        case ScopeTarget::Kind::EndToEnd:
            for (const auto& [id, n] : state.nodes) out.insert(id);
            break;
        }
    }
    return {out.begin(), out.end()};
}

/// Derives the size class from what the scope covers:
/// one container -> Femto; one node -> Micro; several entities or a whole
/// region, all in one region -> Macro; end-to-end or several regions -> Mega.
inline SizeClass classify_size(const Scope& scope, const ClusterState& state) {
    if (scope.empty()) throw AgentError(AgentError::Kind::EmptyScope, "scope is empty");
    if (scope_is_end_to_end(scope)) return SizeClass::Mega;
    if (scope_regions(scope, state).size() > 1) return SizeClass::Mega;
    if (scope.size() == 1 && scope.front().kind == ScopeTarget::Kind::Container) return SizeClass::Femto;

    std::set<NodeId> entities;
    for (const auto& t : scope) {
        if (t.kind == ScopeTarget::Kind::Region) return SizeClass::Macro;
        entities.insert(t.kind == ScopeTarget::Kind::Container ? t.host : t.id);
    }
    return entities.size() == 1 ? SizeClass::Micro : SizeClass::Macro;
}

// ---------------------------------------------------------------------------
// Monitoring and prediction
// ---------------------------------------------------------------------------

struct Sample {
    std::int64_t tick = 0;
    double traffic_units = 0.0;
    friend bool operator==(const Sample&, const Sample&) = default;
};

struct MetricWindow {
    std::string target;
    std::vector<Sample> samples;  // ascending tick
    std::int64_t span_ticks = 1;
};

/// Observed traffic per region, as produced by the traffic generator.
struct Environment {
    std::int64_t tick = 0;
    std::map<RegionId, std::deque<Sample>> history;
    std::size_t retention = 256;

    void record(const RegionId& region, Sample s) {
        auto& h = history[region];
        h.push_back(s);
        while (h.size() > retention) h.pop_front();
    }
};

struct PredictorState {
    enum class Kind { Ewma, SharedModel };

    Kind kind = Kind::Ewma;
    AclId source_acl;  // SharedModel only
    double alpha = 0.3;
    double level = 0.0;
    double accuracy_bonus = 0.0;  // > 0 only for SharedModel
    // Forecast shape received with a shared model.
    std::optional<TrafficProfile> shared_profile;
    // Samples at or before this tick have already been folded into `level`.
    std::optional<std::int64_t> folded_through;
};

struct Prediction {
    double value = 0.0;
    PredictorState state;
};

/// Folds the not-yet-seen samples of `window` into the EWMA level in tick
/// order. A shared model pulls the forecast toward the model's mean for the
/// latest tick, removing `accuracy_bonus` of the gap.
inline Prediction analyze(const MetricWindow& window, PredictorState predictor) {
    std::optional<std::int64_t> latest;
    for (const auto& s : window.samples) {
        if (predictor.folded_through && s.tick <= *predictor.folded_through) continue;
        predictor.level = predictor.alpha * s.traffic_units + (1.0 - predictor.alpha) * predictor.level;
        predictor.folded_through = s.tick;
        latest = s.tick;
    }
    if (!latest && !window.samples.empty()) latest = window.samples.back().tick;

    double value = predictor.level;
    if (predictor.kind == PredictorState::Kind::SharedModel && predictor.shared_profile && latest) {
        double forecast = predictor.shared_profile->mean_at(*latest);
        value = predictor.level + predictor.accuracy_bonus * (forecast - predictor.level);
    }
    return {std::max(0.0, value), std::move(predictor)};
}

// ---------------------------------------------------------------------------
// Actions
// ---------------------------------------------------------------------------

struct PodSpec {
    PodId id;
    ResourceVector request;
    std::optional<NodeId> node;  // placement hint

    friend bool operator==(const PodSpec&, const PodSpec&) = default;
};

struct ScaleUp { PodSpec pod; };
struct ScaleDown { PodId pod; };
struct Instantiate {
    std::string slice;
    std::vector<PodSpec> chain;
};
struct Terminate { PodId pod; };
struct PowerOff { NodeId node; };
struct PowerOn { NodeId node; };

using Action = std::variant<ScaleUp, ScaleDown, Instantiate, Terminate, PowerOff, PowerOn>;

inline std::string_view action_name(const Action& a) {
    static constexpr std::string_view names[] = {"ScaleUp", "ScaleDown", "Instantiate",
                                                 "Terminate", "PowerOff", "PowerOn"};
    return names[a.index()];
}

/// True for actions that add load (pods or powered capacity).
inline bool is_growth(const Action& a) {
    return std::holds_alternative<ScaleUp>(a) || std::holds_alternative<Instantiate>(a) ||
           std::holds_alternative<PowerOn>(a);
}

struct ActionIntent {
    std::string id;
    AclId acl_id;
    std::int64_t tick = 0;
    Action action;
    double rationale = 0.0;  // predicted demand behind the action
};

/// Size of an action in CPU cores: requested cores for new pods, the freed
/// cores for removed pods, node cores for power actions.
inline double intent_magnitude(const ActionIntent& intent, const ClusterState& state) {
    auto cores = [](const ResourceVector& r) { return static_cast<double>(r.cpu_millicores) / 1000.0; };
    auto pod_cores = [&](const PodId& id) {
        auto it = state.pods.find(id);
        return it == state.pods.end() ? 0.0 : cores(it->second.request);
    };
    auto node_cores = [&](const NodeId& id) {
        auto it = state.nodes.find(id);
        return it == state.nodes.end() ? 0.0 : cores(it->second.capacity);
    };
    return std::visit(
        [&](const auto& a) -> double {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, ScaleUp>) {
                return cores(a.pod.request);
            } else if constexpr (std::is_same_v<T, Instantiate>) {
                double sum = 0.0;
                for (const auto& p : a.chain) sum += cores(p.request);
                return sum;
            } else if constexpr (std::is_same_v<T, ScaleDown> || std::is_same_v<T, Terminate>) {
                return pod_cores(a.pod);
            } else {
                return node_cores(a.node);
            }
        },
        intent.action);
}

// ---------------------------------------------------------------------------
// Agents
// ---------------------------------------------------------------------------

enum class Lifecycle { Active, UnderObservation, Suspended };

inline std::string_view to_string(Lifecycle l) {
    switch (l) {
    case Lifecycle::Active: return "Active";
    case Lifecycle::UnderObservation: return "UnderObservation";
    case Lifecycle::Suspended: return "Suspended";
    }
    return "?";
}

/// Lifecycle plus the streak counters that drive its transitions.
struct LifecycleState {
    Lifecycle state = Lifecycle::Active;
    int consecutive_anomalous = 0;
    int normal_streak = 0;
};

enum class AgentRole { Resource, Slice, Energy, Balancer };

inline std::string_view to_string(AgentRole r) {
    switch (r) {
    case AgentRole::Resource: return "resource";
    case AgentRole::Slice: return "slice";
    case AgentRole::Energy: return "energy";
    case AgentRole::Balancer: return "balancer";
    }
    return "?";
}

inline std::optional<AgentRole> parse_role(std::string_view s) {
    if (s == "resource") return AgentRole::Resource;
    if (s == "slice") return AgentRole::Slice;
    if (s == "energy") return AgentRole::Energy;
    if (s == "balancer") return AgentRole::Balancer;
    return std::nullopt;
}

/// Planning knobs. Watermarks are fractions of served capacity.
struct AgentPolicy {
    AgentRole role = AgentRole::Resource;
    double high_watermark = 0.8;
    double low_watermark = 0.3;
    std::int64_t hysteresis_ticks = 3;
    std::int64_t idle_ticks = 5;
    std::int64_t period = 1;  // acts on ticks where (tick - offset) % period == 0
    std::int64_t offset = 0;
    ResourceVector pod_request{500, 1024};
    double pod_capacity_units = 10.0;  // traffic one pod serves
    int min_pods = 1;
    int max_pods = 8;
    double units_per_node = 100.0;  // traffic one powered node serves
    std::vector<PodSpec> chain;     // default slice chain
};

struct SliceRequest {
    std::string name;
    std::vector<PodSpec> pods;   // empty means use the policy chain
    std::int64_t duration = 0;   // 0 keeps the slice forever
};

struct ActiveSlice {
    std::string name;
    std::vector<PodId> pods;
    std::int64_t expires_at = 0;
};

enum class KnowledgeKind { Dataset, Model };

inline std::string_view to_string(KnowledgeKind k) {
    return k == KnowledgeKind::Dataset ? "Dataset" : "Model";
}

inline std::optional<KnowledgeKind> parse_knowledge_kind(std::string_view s) {
    if (s == "Dataset") return KnowledgeKind::Dataset;
    if (s == "Model") return KnowledgeKind::Model;
    return std::nullopt;
}

struct KnowledgeArtifact {
    std::string id;
    AclId source;
    KnowledgeKind kind = KnowledgeKind::Model;
    TrafficProfile profile;         // Model
    std::int64_t sample_count = 0;  // Dataset
};

class KnowledgeBroker;

/// Permission to absorb one artifact. Only the broker can mint one.
class Grant {
public:
    [[nodiscard]] const std::string& artifact_id() const { return artifact_id_; }
    [[nodiscard]] const AclId& source() const { return source_; }
    [[nodiscard]] const AclId& target() const { return target_; }
    [[nodiscard]] KnowledgeKind kind() const { return kind_; }

private:
    friend class KnowledgeBroker;
    Grant(std::string artifact_id, AclId source, AclId target, KnowledgeKind kind)
        : artifact_id_(std::move(artifact_id)), source_(std::move(source)), target_(std::move(target)), kind_(kind) {}

    std::string artifact_id_;
    AclId source_;
    AclId target_;
    KnowledgeKind kind_;
};

struct AclAgent {
    AclId id;
    Scope scope;
    SizeClass size = SizeClass::Micro;
    PriorityLevel priority;
    PredictorState predictor;
    bool predictor_primed = false;
    std::set<AclId> trust_list;
    LifecycleState lifecycle;
    std::set<std::string> knowledge;
    std::int64_t span_ticks = 20;
    AgentPolicy policy;

    // Planning memory.
    std::optional<std::pair<bool, std::int64_t>> last_scale;  // (up?, tick)
    std::uint64_t pod_counter = 0;
    std::deque<SliceRequest> pending_slices;
    std::vector<ActiveSlice> active_slices;
    std::map<NodeId, std::int64_t> idle_since;
    std::set<std::string> outstanding;  // submitted, not yet materialized or dropped
    double fault_factor = 1.0;
    std::int64_t fault_until = -1;

    [[nodiscard]] bool suspended() const { return lifecycle.state == Lifecycle::Suspended; }

    [[nodiscard]] bool acts_on(std::int64_t tick) const {
        return tick >= policy.offset && (tick - policy.offset) % policy.period == 0;
    }

    [[nodiscard]] Toleration own_toleration() const { return {id, EffectSet::all()}; }
};

/// Traffic samples of the agent's regions over the last `span_ticks` ticks,
/// summed per tick.
inline MetricWindow monitor(const Environment& env, const AclAgent& agent, const ClusterState& state) {
    if (agent.suspended()) {
        throw AgentError(AgentError::Kind::SuspendedAgent, "agent '" + agent.id + "' is suspended");
    }
    MetricWindow w{agent.id, {}, agent.span_ticks};
    std::map<std::int64_t, double> per_tick;
    for (const auto& region : scope_regions(agent.scope, state)) {
        auto it = env.history.find(region);
        if (it == env.history.end()) continue;
        for (const auto& s : it->second) {
            if (s.tick > env.tick - agent.span_ticks && s.tick <= env.tick) per_tick[s.tick] += s.traffic_units;
        }
    }
    for (const auto& [t, v] : per_tick) w.samples.push_back({t, v});
    return w;
}

/// Ground-truth mean over the agent's regions at a tick.
inline double scope_truth(const AclAgent& agent, const ClusterState& state, const TrafficGenerator& gen,
                          std::int64_t tick) {
    double sum = 0.0;
    for (const auto& region : scope_regions(agent.scope, state)) sum += gen.profile(region).mean_at(tick);
    return sum;
}

namespace detail {

inline std::vector<PodId> live_pods(const AclAgent& agent, const ClusterState& state) {
    std::vector<const Pod*> owned;
    for (const auto& [id, pod] : state.pods) {
        if (pod.owner_acl == agent.id && pod.phase != PodPhase::Terminated) owned.push_back(&pod);
    }
    std::sort(owned.begin(), owned.end(), [](const Pod* a, const Pod* b) {
        return std::tie(a->serial, a->id) < std::tie(b->serial, b->id);
    });
    std::vector<PodId> out;
    for (const Pod* p : owned) out.push_back(p->id);
    return out;
}

inline std::optional<NodeId> placement_hint(const AclAgent& agent, const ResourceVector& request,
                                            const ClusterState& state) {
    auto nodes = scope_nodes(agent.scope, state);
    if (nodes.empty() || scope_is_end_to_end(agent.scope)) return std::nullopt;
    Pod probe;
    probe.request = request;
    probe.tolerations = {agent.own_toleration()};
    std::vector<NodeId> feasible;
    for (const auto& id : filter_nodes(probe, state)) {
        if (std::binary_search(nodes.begin(), nodes.end(), id)) feasible.push_back(id);
    }
    auto ranked = score_nodes(probe, feasible, state);
    for (const auto& id : ranked) {
        if (fits(probe, id, state)) return id;
    }
    if (!ranked.empty()) return ranked.front();
    return std::nullopt;
}

inline ResourceVector scaled(const ResourceVector& r, double factor) {
    return {static_cast<std::int64_t>(static_cast<double>(r.cpu_millicores) * factor),
            static_cast<std::int64_t>(static_cast<double>(r.memory_mib) * factor)};
}

}  // namespace detail

/// Turns a demand prediction into intents according to the agent's role.
///
/// Resource agents scale on the per-pod load ratio with a watermark dead-band
/// and refuse to reverse direction within `hysteresis_ticks`. Slice agents
/// instantiate pending slice requests and terminate expired ones. Energy
/// agents power off nodes idle for `idle_ticks`; balancers power on a node
/// when the powered capacity of their scope is saturated.
inline std::vector<ActionIntent> plan(double prediction, AclAgent& agent, const ClusterState& state,
                                      std::int64_t tick) {
    std::vector<ActionIntent> out;
    if (agent.suspended()) return out;
    const auto& pol = agent.policy;
    const double fault = tick <= agent.fault_until ? agent.fault_factor : 1.0;
    auto emit = [&](Action a) {
        out.push_back({agent.id + "#" + std::to_string(tick) + "#" + std::to_string(out.size()), agent.id, tick,
                       std::move(a), prediction});
    };
    auto next_pod_id = [&] { return agent.id + "-p" + std::to_string(++agent.pod_counter); };

    switch (pol.role) {
    case AgentRole::Resource: {
        if (!agent.outstanding.empty()) break;
        auto pods = detail::live_pods(agent, state);
        const auto n = static_cast<double>(pods.size());
        const double ratio = n > 0 ? prediction / (n * pol.pod_capacity_units) : (prediction > 0 ? 1e9 : 0.0);
        auto blocked = [&](bool up) {
            return agent.last_scale && agent.last_scale->first != up &&
                   tick - agent.last_scale->second < pol.hysteresis_ticks;
        };
        if (ratio > pol.high_watermark && static_cast<int>(pods.size()) < pol.max_pods && !blocked(true)) {
            auto request = detail::scaled(pol.pod_request, fault);
            emit(ScaleUp{{next_pod_id(), request, detail::placement_hint(agent, request, state)}});
            agent.last_scale = {true, tick};
        } else if (ratio < pol.low_watermark && static_cast<int>(pods.size()) > pol.min_pods && !blocked(false)) {
            emit(ScaleDown{pods.back()});
            agent.last_scale = {false, tick};
        }
        break;
    }
    case AgentRole::Slice: {
        for (auto it = agent.active_slices.begin(); it != agent.active_slices.end();) {
            if (it->expires_at > 0 && tick >= it->expires_at) {
                for (const auto& pod : it->pods) {
                    auto p = state.pods.find(pod);
                    if (p != state.pods.end() && p->second.phase != PodPhase::Terminated) emit(Terminate{pod});
                }
                it = agent.active_slices.erase(it);
            } else {
                ++it;
            }
        }
        while (!agent.pending_slices.empty()) {
            auto req = std::move(agent.pending_slices.front());
            agent.pending_slices.pop_front();
            auto chain = req.pods.empty() ? pol.chain : req.pods;
            ActiveSlice active{req.name, {}, req.duration > 0 ? tick + req.duration : 0};
            for (std::size_t i = 0; i < chain.size(); ++i) {
                auto& spec = chain[i];
                if (spec.id.empty()) spec.id = chain.size() == 1 ? req.name : req.name + "-" + std::to_string(i);
                spec.request = detail::scaled(spec.request, fault);
                active.pods.push_back(spec.id);
            }
            agent.active_slices.push_back(std::move(active));
            emit(Instantiate{req.name, std::move(chain)});
        }
        break;
    }
    case AgentRole::Energy: {
        for (const auto& id : scope_nodes(agent.scope, state)) {
            const auto& node = state.node(id);
            bool idle = node.powered_on && !state.allocated.contains(id);
            if (!idle) {
                agent.idle_since.erase(id);
                continue;
            }
            auto [it, fresh] = agent.idle_since.emplace(id, tick);
            if (!fresh && tick - it->second >= pol.idle_ticks) emit(PowerOff{id});
        }
        break;
    }
    case AgentRole::Balancer: {
        if (!agent.outstanding.empty()) break;
        auto nodes = scope_nodes(agent.scope, state);
        double on = 0;
        std::optional<NodeId> first_off;
        for (const auto& id : nodes) {
            if (state.node(id).powered_on) {
                on += 1;
            } else if (!first_off) {
                first_off = id;
            }
        }
        double ratio = on > 0 ? prediction / (on * pol.units_per_node) : (prediction > 0 ? 1e9 : 0.0);
        if (first_off && ratio > pol.high_watermark) emit(PowerOn{*first_off});
        break;
    }
    }
    return out;
}

struct Receipt {
    std::string intent_id;
    std::int64_t check_tick = 0;  // tick at which the ICM examines the intent
    std::string level;

    friend bool operator==(const Receipt&, const Receipt&) = default;
};

/// Where executed intents go. The ICM implements this; agents never touch
/// the cluster directly.
class IntentSink {
public:
    virtual Receipt submit(const AclAgent& agent, const ActionIntent& intent) = 0;
    virtual ~IntentSink() = default;
};

inline std::vector<Receipt> execute(AclAgent& agent, const std::vector<ActionIntent>& intents, IntentSink& icm) {
    if (agent.suspended()) {
        throw AgentError(AgentError::Kind::SuspendedAgent, "agent '" + agent.id + "' is suspended");
    }
    std::vector<Receipt> receipts;
    receipts.reserve(intents.size());
    for (const auto& intent : intents) {
        receipts.push_back(icm.submit(agent, intent));
        agent.outstanding.insert(intent.id);
    }
    return receipts;
}

/// Applies a brokered artifact. A model turns the predictor into a shared
/// model with `bonus`; a dataset widens the monitoring window.
inline AclAgent absorb_knowledge(AclAgent agent, const Grant& grant, const KnowledgeArtifact& artifact,
                                 double bonus = 0.2) {
    if (grant.artifact_id() != artifact.id || grant.target() != agent.id || grant.source() != artifact.source ||
        grant.kind() != artifact.kind) {
        throw AgentError(AgentError::Kind::NoGrant, "no grant for artifact '" + artifact.id + "'");
    }
    if (agent.knowledge.contains(artifact.id)) return agent;
    if (artifact.kind == KnowledgeKind::Model) {
        agent.predictor.kind = PredictorState::Kind::SharedModel;
        agent.predictor.source_acl = artifact.source;
        agent.predictor.accuracy_bonus = bonus;
        agent.predictor.shared_profile = artifact.profile;
    } else {
        agent.span_ticks += artifact.sample_count;
    }
    agent.knowledge.insert(artifact.id);
    return agent;
}

inline AclAgent absorb_knowledge(AclAgent agent, const std::optional<Grant>& grant,
                                 const KnowledgeArtifact& artifact, double bonus = 0.2) {
    if (!grant) throw AgentError(AgentError::Kind::NoGrant, "no grant for artifact '" + artifact.id + "'");
    return absorb_knowledge(std::move(agent), *grant, artifact, bonus);
}

}  // namespace aclsim
