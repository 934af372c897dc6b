#pragma once

#include <aclsim/agent.hpp>
#include <aclsim/cluster.hpp>
#include <aclsim/icm.hpp>
#include <aclsim/rng.hpp>
#include <aclsim/traffic.hpp>

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace aclsim {

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string reference, const std::string& message)
        : std::runtime_error(reference + ": " + message), reference_(std::move(reference)) {}
    [[nodiscard]] const std::string& reference() const noexcept { return reference_; }

private:
    std::string reference_;
};

enum class InjectedKind { SliceRequest, Taint, Fault, Release, Exchange };

inline std::string_view to_string(InjectedKind k) {
    switch (k) {
    case InjectedKind::SliceRequest: return "slice_request";
    case InjectedKind::Taint: return "taint";
    case InjectedKind::Fault: return "fault";
    case InjectedKind::Release: return "release";
    case InjectedKind::Exchange: return "exchange";
    }
    return "?";
}

/// Something that happens to the world at a given tick, outside any agent.
struct InjectedEvent {
    std::int64_t tick = 0;
    InjectedKind kind = InjectedKind::SliceRequest;
    AclId acl;             // slice_request, fault, release
    SliceRequest slice;    // slice_request
    NodeId node;           // taint
    Taint taint;           // taint
    double factor = 1.0;   // fault: multiplier on requested resources
    std::int64_t duration = 1;
    AclId source;          // exchange
    AclId target;          // exchange
    KnowledgeKind knowledge = KnowledgeKind::Model;
    std::int64_t samples = 10;  // exchange of a dataset
};

/// A pod present before tick 0, optionally already placed.
struct InitialPod {
    PodId id;
    AclId owner;
    ResourceVector request;
    std::optional<NodeId> node;
};

struct Scenario {
    std::string name;
    std::string source_text;
    std::string extra_events_text;  // events merged from a separate file
    std::uint64_t seed = 1;
    std::int64_t ticks = 10;
    std::vector<Node> nodes;
    std::map<std::string, PriorityLevel> priority_levels;
    std::vector<AclAgent> agents;  // sorted by id
    std::map<AclId, TrustList> trust_lists;
    IcmConfig icm;
    std::int64_t e2e_period = 5;
    TrafficProfile traffic_default;
    std::map<RegionId, TrafficProfile> traffic_regions;
    std::vector<InitialPod> pods;
    std::vector<InjectedEvent> events;  // stable-sorted by tick

    [[nodiscard]] std::set<RegionId> regions() const {
        std::set<RegionId> out;
        for (const auto& n : nodes) out.insert(n.region);
        return out;
    }

    [[nodiscard]] const AclAgent* agent(const AclId& id) const {
        for (const auto& a : agents) {
            if (a.id == id) return &a;
        }
        return nullptr;
    }
};

/// Identity of a run input: scenario text, merged events, seed and horizon.
inline std::uint64_t scenario_hash(const Scenario& s) {
    auto h = fnv1a(s.source_text);
    h = fnv1a("\x1f" + s.extra_events_text, h);
    return fnv1a("\x1fseed=" + std::to_string(s.seed) + ";ticks=" + std::to_string(s.ticks), h);
}

/// The topology used when a scenario declares none: one core node and two
/// edge nodes, each in its own region.
inline std::vector<Node> default_topology() {
    return {
        {"core-toronto", "toronto", {8000, 16384}, {}, true},
        {"edge-calgary", "calgary", {2000, 4096}, {}, true},
        {"edge-waterloo", "waterloo", {2000, 4096}, {}, true},
    };
}

namespace detail {

inline std::size_t line_of(const YAML::Node& n) { return static_cast<std::size_t>(n.Mark().line) + 1; }

template <typename T>
T as(const YAML::Node& n, const std::string& what) {
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        throw ParseError(line_of(n), "invalid value for '" + what + "'");
    }
}

template <typename T>
T field(const YAML::Node& parent, const std::string& key, T fallback) {
    if (!parent.IsMap()) throw ParseError(line_of(parent), "expected a mapping");
    auto n = parent[key];
    if (!n || n.IsNull()) return fallback;
    return as<T>(n, key);
}

template <typename T>
T required(const YAML::Node& parent, const std::string& key) {
    if (!parent.IsMap()) throw ParseError(line_of(parent), "expected a mapping");
    auto n = parent[key];
    if (!n || n.IsNull()) throw ParseError(line_of(parent), "missing '" + key + "'");
    return as<T>(n, key);
}

inline YAML::Node sequence(const YAML::Node& parent, const std::string& key) {
    auto n = parent[key];
    if (n && !n.IsNull() && !n.IsSequence()) throw ParseError(line_of(n), "'" + key + "' must be a list");
    return n;
}

inline void check_keys(const YAML::Node& n, std::initializer_list<std::string_view> allowed) {
    if (!n.IsMap()) throw ParseError(line_of(n), "expected a mapping");
    for (const auto& kv : n) {
        auto key = kv.first.as<std::string>();
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ParseError(line_of(kv.first), "unknown key '" + key + "'");
        }
    }
}

inline ResourceVector resources(const YAML::Node& n, ResourceVector fallback = {}) {
    auto cpu = field<std::int64_t>(n, "cpu", fallback.cpu_millicores);
    auto mem = field<std::int64_t>(n, "memory", fallback.memory_mib);
    if (cpu < 0 || mem < 0) throw ParseError(line_of(n), "resources must be non-negative");
    return {cpu, mem};
}

inline TaintEffect effect(const YAML::Node& n) {
    auto name = required<std::string>(n, "effect");
    auto e = parse_taint_effect(name);
    if (!e) throw ParseError(line_of(n["effect"]), "unknown taint effect '" + name + "'");
    return *e;
}

inline TrafficProfile profile(const YAML::Node& n, TrafficProfile p) {
    check_keys(n, {"base", "amplitude", "period_ticks", "phase_ticks", "noise_stddev"});
    p.base = field(n, "base", p.base);
    p.amplitude = field(n, "amplitude", p.amplitude);
    p.period_ticks = field(n, "period_ticks", p.period_ticks);
    p.phase_ticks = field(n, "phase_ticks", p.phase_ticks);
    p.noise_stddev = field(n, "noise_stddev", p.noise_stddev);
    if (p.period_ticks <= 0) throw ParseError(line_of(n), "period_ticks must be positive");
    if (p.noise_stddev < 0) throw ParseError(line_of(n), "noise_stddev must be non-negative");
    return p;
}

inline std::vector<PodSpec> pod_specs(const YAML::Node& list, ResourceVector fallback) {
    std::vector<PodSpec> out;
    if (!list) return out;
    if (!list.IsSequence()) throw ParseError(line_of(list), "pod list must be a sequence");
    for (const auto& p : list) {
        check_keys(p, {"id", "cpu", "memory", "node"});
        PodSpec spec{field<std::string>(p, "id", ""), resources(p, fallback), std::nullopt};
        if (auto node = field<std::string>(p, "node", ""); !node.empty()) spec.node = node;
        out.push_back(std::move(spec));
    }
    return out;
}

inline Scope scope(const YAML::Node& n) {
    if (n.IsScalar()) {
        if (n.as<std::string>() == "e2e") return {ScopeTarget::end_to_end()};
        throw ParseError(line_of(n), "scope must be 'e2e' or a list");
    }
    if (!n.IsSequence()) throw ParseError(line_of(n), "scope must be 'e2e' or a list");
    Scope out;
    for (const auto& t : n) {
        if (t.IsScalar() && t.as<std::string>() == "e2e") {
            out.push_back(ScopeTarget::end_to_end());
        } else if (t.IsMap() && t["node"]) {
            check_keys(t, {"node"});
            out.push_back(ScopeTarget::node(as<std::string>(t["node"], "node")));
        } else if (t.IsMap() && t["region"]) {
            check_keys(t, {"region"});
            out.push_back(ScopeTarget::region(as<std::string>(t["region"], "region")));
        } else if (t.IsMap() && t["container"]) {
            check_keys(t, {"container", "host"});
            out.push_back(ScopeTarget::container(as<std::string>(t["container"], "container"),
                                                 required<std::string>(t, "host")));
        } else {
            throw ParseError(line_of(t), "scope entry must be node, region, container or e2e");
        }
    }
    return out;
}

inline std::vector<InjectedEvent> events(const YAML::Node& list) {
    std::vector<InjectedEvent> out;
    if (!list || list.IsNull()) return out;
    if (!list.IsSequence()) throw ParseError(line_of(list), "'events' must be a list");
    for (const auto& e : list) {
        InjectedEvent ev;
        ev.tick = required<std::int64_t>(e, "tick");
        if (ev.tick < 0) throw ParseError(line_of(e), "event tick must be non-negative");
        auto type = required<std::string>(e, "type");
        if (type == "slice_request") {
            check_keys(e, {"tick", "type", "acl", "name", "pods", "duration", "repeat"});
            ev.kind = InjectedKind::SliceRequest;
            ev.acl = required<std::string>(e, "acl");
            ev.slice.name = required<std::string>(e, "name");
            ev.slice.pods = pod_specs(e["pods"], {500, 1024});
            ev.slice.duration = field<std::int64_t>(e, "duration", 0);
            // `repeat: N` issues the request on N consecutive ticks, naming
            // each copy <name>-<k>.
            auto repeat = field<std::int64_t>(e, "repeat", 0);
            if (repeat < 0) throw ParseError(line_of(e), "repeat must be non-negative");
            if (repeat > 0) {
                for (std::int64_t k = 0; k < repeat; ++k) {
                    auto copy = ev;
                    copy.tick = ev.tick + k;
                    copy.slice.name = ev.slice.name + "-" + std::to_string(k);
                    for (auto& p : copy.slice.pods) {
                        if (!p.id.empty()) p.id += "-" + std::to_string(k);
                    }
                    out.push_back(std::move(copy));
                }
                continue;
            }
        } else if (type == "taint") {
            check_keys(e, {"tick", "type", "node", "key", "effect"});
            ev.kind = InjectedKind::Taint;
            ev.node = required<std::string>(e, "node");
            ev.taint = {required<std::string>(e, "key"), effect(e)};
        } else if (type == "fault") {
            check_keys(e, {"tick", "type", "acl", "factor", "duration"});
            ev.kind = InjectedKind::Fault;
            ev.acl = required<std::string>(e, "acl");
            ev.factor = field(e, "factor", 5.0);
            ev.duration = field<std::int64_t>(e, "duration", 1);
            if (ev.factor <= 0 || ev.duration < 1) throw ParseError(line_of(e), "fault needs factor > 0, duration >= 1");
        } else if (type == "release") {
            check_keys(e, {"tick", "type", "acl"});
            ev.kind = InjectedKind::Release;
            ev.acl = required<std::string>(e, "acl");
        } else if (type == "exchange") {
            check_keys(e, {"tick", "type", "source", "target", "kind", "samples"});
            ev.kind = InjectedKind::Exchange;
            ev.source = required<std::string>(e, "source");
            ev.target = required<std::string>(e, "target");
            auto kind = field<std::string>(e, "kind", "Model");
            auto k = parse_knowledge_kind(kind);
            if (!k) throw ParseError(line_of(e), "unknown knowledge kind '" + kind + "'");
            ev.knowledge = *k;
            ev.samples = field<std::int64_t>(e, "samples", 10);
        } else {
            throw ParseError(line_of(e), "unknown event type '" + type + "'");
        }
        out.push_back(std::move(ev));
    }
    return out;
}

inline YAML::Node parse_yaml(const std::string& text) {
    try {
        return YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ParseError(static_cast<std::size_t>(e.mark.line) + 1, e.msg);
    }
}

}  // namespace detail

/// Checks every cross-reference and fills derived agent fields (size class,
/// pod priorities). Throws ValidationError naming the bad reference.
inline void validate_scenario(Scenario& s) {
    if (s.ticks <= 0) throw ValidationError("ticks", "must be positive");
    if (s.e2e_period <= 0) throw ValidationError("icm.e2e_period", "must be positive");

    std::set<NodeId> node_ids;
    for (const auto& n : s.nodes) {
        if (!node_ids.insert(n.id).second) throw ValidationError("node " + n.id, "duplicate node id");
    }
    auto regions = s.regions();
    int defaults = 0;
    for (const auto& [name, level] : s.priority_levels) defaults += level.global_default ? 1 : 0;
    if (defaults > 1) throw ValidationError("priority_levels", "more than one global_default level");

    ClusterState probe;
    for (const auto& n : s.nodes) probe.nodes.emplace(n.id, n);

    std::set<AclId> acl_ids;
    for (auto& a : s.agents) {
        if (!acl_ids.insert(a.id).second) throw ValidationError("agent " + a.id, "duplicate agent id");
        if (a.scope.empty()) throw ValidationError("agent " + a.id, "empty scope");
        for (const auto& t : a.scope) {
            switch (t.kind) {
            case ScopeTarget::Kind::Node:
                if (!node_ids.contains(t.id)) throw ValidationError("node " + t.id, "unknown node in scope of " + a.id);
                break;
            case ScopeTarget::Kind::Container:
                if (!node_ids.contains(t.host)) {
                    throw ValidationError("node " + t.host, "unknown host in scope of " + a.id);
                }
                break;
            case ScopeTarget::Kind::Region:
                if (!regions.contains(t.id)) {
                    throw ValidationError("region " + t.id, "unknown region in scope of " + a.id);
                }
                break;
            case ScopeTarget::Kind::EndToEnd: break;
            }
        }
        a.size = classify_size(a.scope, probe);
        if (a.policy.period < 1) throw ValidationError("agent " + a.id, "period must be >= 1");
        if (a.span_ticks < 1) throw ValidationError("agent " + a.id, "span_ticks must be >= 1");
        for (const auto& p : a.policy.chain) {
            if (p.node && !node_ids.contains(*p.node)) throw ValidationError("node " + *p.node, "unknown chain node");
        }
    }
    std::sort(s.agents.begin(), s.agents.end(), [](const auto& x, const auto& y) { return x.id < y.id; });

    for (const auto& [owner, list] : s.trust_lists) {
        if (!acl_ids.contains(owner)) throw ValidationError("agent " + owner, "unknown trust list owner");
        for (const auto& [target, kind] : list.allowed) {
            if (!acl_ids.contains(target)) throw ValidationError("agent " + target, "unknown trust list entry");
        }
    }

    std::set<PodId> pod_ids;
    for (const auto& p : s.pods) {
        if (!pod_ids.insert(p.id).second) throw ValidationError("pod " + p.id, "duplicate pod id");
        if (!acl_ids.contains(p.owner)) throw ValidationError("agent " + p.owner, "unknown owner of pod " + p.id);
        if (p.node && !node_ids.contains(*p.node)) throw ValidationError("node " + *p.node, "unknown node for " + p.id);
    }

    for (const auto& e : s.events) {
        auto need_acl = [&](const AclId& id) {
            if (!acl_ids.contains(id)) throw ValidationError("agent " + id, "unknown agent in injected event");
        };
        switch (e.kind) {
        case InjectedKind::SliceRequest:
            need_acl(e.acl);
            for (const auto& p : e.slice.pods) {
                if (p.node && !node_ids.contains(*p.node)) throw ValidationError("node " + *p.node, "unknown node");
            }
            break;
        case InjectedKind::Taint:
            if (!node_ids.contains(e.node)) throw ValidationError("node " + e.node, "unknown node in taint event");
            break;
        case InjectedKind::Fault:
        case InjectedKind::Release: need_acl(e.acl); break;
        case InjectedKind::Exchange:
            need_acl(e.source);
            need_acl(e.target);
            if (e.source == e.target) throw ValidationError("agent " + e.source, "exchange with itself");
            break;
        }
    }
    std::stable_sort(s.events.begin(), s.events.end(),
                     [](const auto& x, const auto& y) { return x.tick < y.tick; });
}

/// Parses a scenario document. Absent sections take their defaults: the
/// three-node core/edge topology, no agents, default ICM thresholds and a
/// flat traffic profile.
inline Scenario load_scenario(const std::string& text) {
    using namespace detail;
    auto root = parse_yaml(text);
    Scenario s;
    s.source_text = text;
    if (!root || root.IsNull()) {
        s.nodes = default_topology();
        validate_scenario(s);
        return s;
    }
    check_keys(root, {"name", "seed", "ticks", "topology", "priority_levels", "agents", "trust_lists", "icm",
                      "traffic", "pods", "events"});
    s.name = field<std::string>(root, "name", "");
    s.seed = field<std::uint64_t>(root, "seed", 1);
    s.ticks = field<std::int64_t>(root, "ticks", 10);

    if (auto topo = sequence(root, "topology"); topo && !topo.IsNull()) {
        for (const auto& n : topo) {
            check_keys(n, {"id", "region", "cpu", "memory", "taints", "powered_on"});
            Node node{required<std::string>(n, "id"), required<std::string>(n, "region"), resources(n), {},
                      field(n, "powered_on", true)};
            if (auto taints = sequence(n, "taints"); taints) {
                for (const auto& t : taints) {
                    check_keys(t, {"key", "effect"});
                    Taint taint{required<std::string>(t, "key"), effect(t)};
                    if (node.has_taint(taint)) throw ParseError(line_of(t), "duplicate taint");
                    node.taints.insert(std::lower_bound(node.taints.begin(), node.taints.end(), taint), taint);
                }
            }
            s.nodes.push_back(std::move(node));
        }
    } else {
        s.nodes = default_topology();
    }

    for (const auto& p : sequence(root, "priority_levels")) {
        check_keys(p, {"name", "value", "preemption", "global_default"});
        PriorityLevel level{required<std::string>(p, "name"), required<std::int64_t>(p, "value"),
                            field(p, "preemption", false), field(p, "global_default", false)};
        if (!s.priority_levels.emplace(level.name, level).second) {
            throw ParseError(line_of(p), "duplicate priority level '" + level.name + "'");
        }
    }
    auto resolve_priority = [&](const YAML::Node& n, const std::string& who) -> PriorityLevel {
        auto name = field<std::string>(n, "priority", "");
        if (name.empty()) {
            for (const auto& [k, level] : s.priority_levels) {
                if (level.global_default) return level;
            }
            throw ValidationError(who, "no priority and no global_default level");
        }
        auto it = s.priority_levels.find(name);
        if (it == s.priority_levels.end()) throw ValidationError("priority " + name, "undefined priority level");
        return it->second;
    };

    for (const auto& a : sequence(root, "agents")) {
        check_keys(a, {"id", "role", "priority", "scope", "period", "offset", "span_ticks", "predictor", "policy",
                       "chain"});
        AclAgent agent;
        agent.id = required<std::string>(a, "id");
        auto role = field<std::string>(a, "role", "resource");
        auto r = parse_role(role);
        if (!r) throw ParseError(line_of(a), "unknown role '" + role + "'");
        agent.policy.role = *r;
        agent.priority = resolve_priority(a, "agent " + agent.id);
        if (!a["scope"]) throw ParseError(line_of(a), "agent '" + agent.id + "' needs a scope");
        agent.scope = scope(a["scope"]);
        agent.policy.period = field<std::int64_t>(a, "period", 1);
        agent.policy.offset = field<std::int64_t>(a, "offset", 0);
        agent.span_ticks = field<std::int64_t>(a, "span_ticks", 20);
        if (auto p = a["predictor"]; p) {
            check_keys(p, {"alpha", "level"});
            agent.predictor.alpha = field(p, "alpha", 0.3);
            if (agent.predictor.alpha <= 0 || agent.predictor.alpha > 1) {
                throw ParseError(line_of(p), "alpha must be in (0, 1]");
            }
            if (p["level"]) {
                agent.predictor.level = as<double>(p["level"], "level");
                agent.predictor_primed = true;
            }
        }
        if (auto p = a["policy"]; p) {
            check_keys(p, {"high_watermark", "low_watermark", "hysteresis_ticks", "idle_ticks", "cpu", "memory",
                           "pod_capacity_units", "min_pods", "max_pods", "units_per_node"});
            auto& pol = agent.policy;
            pol.high_watermark = field(p, "high_watermark", pol.high_watermark);
            pol.low_watermark = field(p, "low_watermark", pol.low_watermark);
            pol.hysteresis_ticks = field(p, "hysteresis_ticks", pol.hysteresis_ticks);
            pol.idle_ticks = field(p, "idle_ticks", pol.idle_ticks);
            pol.pod_request = resources(p, pol.pod_request);
            pol.pod_capacity_units = field(p, "pod_capacity_units", pol.pod_capacity_units);
            pol.min_pods = field(p, "min_pods", pol.min_pods);
            pol.max_pods = field(p, "max_pods", pol.max_pods);
            pol.units_per_node = field(p, "units_per_node", pol.units_per_node);
            if (pol.low_watermark > pol.high_watermark) throw ParseError(line_of(p), "low_watermark > high_watermark");
            if (pol.pod_capacity_units <= 0 || pol.units_per_node <= 0) {
                throw ParseError(line_of(p), "capacity units must be positive");
            }
        }
        agent.policy.chain = pod_specs(a["chain"], agent.policy.pod_request);
        s.agents.push_back(std::move(agent));
    }

    for (const auto& t : sequence(root, "trust_lists")) {
        check_keys(t, {"owner", "allow"});
        auto owner = required<std::string>(t, "owner");
        auto& list = s.trust_lists[owner];
        list.owner = owner;
        for (const auto& entry : sequence(t, "allow")) {
            check_keys(entry, {"target", "kind"});
            auto target = required<std::string>(entry, "target");
            auto kind_name = field<std::string>(entry, "kind", "Model");
            auto kind = parse_knowledge_kind(kind_name);
            if (!kind) throw ParseError(line_of(entry), "unknown knowledge kind '" + kind_name + "'");
            if (target == owner) throw ValidationError("agent " + owner, "trust list names its owner");
            list.allow(target, *kind);
        }
    }

    if (auto icm = root["icm"]; icm) {
        check_keys(icm, {"e2e_period", "k_sigma", "window", "min_history", "epsilon", "suspend_after",
                         "reinstate_after", "window_ticks", "toggle_threshold", "cooldown", "knowledge_bonus"});
        auto& c = s.icm;
        s.e2e_period = field(icm, "e2e_period", s.e2e_period);
        c.coherency.k_sigma = field(icm, "k_sigma", c.coherency.k_sigma);
        c.coherency.window = field(icm, "window", c.coherency.window);
        c.coherency.min_history = field(icm, "min_history", c.coherency.min_history);
        c.coherency.epsilon = field(icm, "epsilon", c.coherency.epsilon);
        c.lifecycle.suspend_after = field(icm, "suspend_after", c.lifecycle.suspend_after);
        c.lifecycle.reinstate_after = field(icm, "reinstate_after", c.lifecycle.reinstate_after);
        c.interference.window_ticks = field(icm, "window_ticks", c.interference.window_ticks);
        c.interference.toggle_threshold = field(icm, "toggle_threshold", c.interference.toggle_threshold);
        c.interference.cooldown = field(icm, "cooldown", c.interference.cooldown);
        c.knowledge_bonus = field(icm, "knowledge_bonus", c.knowledge_bonus);
        if (c.coherency.window == 0 || c.coherency.k_sigma <= 0) throw ParseError(line_of(icm), "bad coherency config");
        if (c.interference.window_ticks < 1 || c.interference.toggle_threshold < 1) {
            throw ParseError(line_of(icm), "bad interference config");
        }
    }

    if (auto traffic = root["traffic"]; traffic) {
        check_keys(traffic, {"default", "regions"});
        if (traffic["default"]) s.traffic_default = profile(traffic["default"], s.traffic_default);
        if (auto regions = traffic["regions"]; regions) {
            if (!regions.IsMap()) throw ParseError(line_of(regions), "'regions' must be a mapping");
            for (const auto& kv : regions) {
                s.traffic_regions[kv.first.as<std::string>()] = profile(kv.second, s.traffic_default);
            }
        }
    }

    for (const auto& p : sequence(root, "pods")) {
        check_keys(p, {"id", "owner", "cpu", "memory", "node"});
        InitialPod pod{required<std::string>(p, "id"), required<std::string>(p, "owner"), resources(p, {500, 1024}),
                       std::nullopt};
        if (auto node = field<std::string>(p, "node", ""); !node.empty()) pod.node = node;
        s.pods.push_back(std::move(pod));
    }

    s.events = events(root["events"]);
    for (const auto& [region, p] : s.traffic_regions) {
        if (!s.regions().contains(region)) throw ValidationError("region " + region, "traffic for unknown region");
    }
    validate_scenario(s);
    return s;
}

/// Merges the events of a standalone events document (a top-level `events`
/// list) into a loaded scenario. The text becomes part of the run identity.
inline void merge_events(Scenario& s, const std::string& text) {
    auto root = detail::parse_yaml(text);
    s.extra_events_text += text;
    if (!root || root.IsNull()) return;
    detail::check_keys(root, {"events"});
    for (auto& e : detail::events(root["events"])) s.events.push_back(std::move(e));
    validate_scenario(s);
}

}  // namespace aclsim
