#pragma once

#include <aclsim/agent.hpp>
#include <aclsim/cluster.hpp>
#include <aclsim/scheduler.hpp>
#include <aclsim/trace.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace aclsim {

// ---------------------------------------------------------------------------
// Conflict records
// ---------------------------------------------------------------------------

enum class ConflictKind { ResourceContention, Interference };

inline std::string_view to_string(ConflictKind k) {
    return k == ConflictKind::ResourceContention ? "ResourceContention" : "Interference";
}

struct ArbitratedFor {
    AclId acl;
    friend bool operator==(const ArbitratedFor&, const ArbitratedFor&) = default;
};
struct Frozen {
    AclId acl;
    std::int64_t until_tick = 0;
    friend bool operator==(const Frozen&, const Frozen&) = default;
};
struct Escalated {
    friend bool operator==(const Escalated&, const Escalated&) = default;
};

using Resolution = std::variant<std::monostate, ArbitratedFor, Frozen, Escalated>;

struct ConflictRecord {
    std::string id;
    std::int64_t tick = 0;
    ConflictKind kind = ConflictKind::ResourceContention;
    std::set<AclId> participants;
    std::set<std::string> targets;
    Resolution resolution;
    std::vector<std::string> intent_ids;  // contention only, in submission order

    [[nodiscard]] bool resolved() const {
        return std::holds_alternative<ArbitratedFor>(resolution) || std::holds_alternative<Frozen>(resolution);
    }
};

inline std::string join(const auto& items, char sep = ',') {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += sep;
        out += s;
    }
    return out.empty() ? "-" : out;
}

// ---------------------------------------------------------------------------
// Resource contention
// ---------------------------------------------------------------------------

/// A node an intent acts on, and whether it adds load there.
struct Touch {
    NodeId node;
    bool growth = false;
    ResourceVector request;  // pod requests only
};

/// Nodes touched by an intent. New pods land on their hint, or failing that
/// on the node the scheduler would rank first for them.
inline std::vector<Touch> intent_touches(const ActionIntent& intent, const ClusterState& state) {
    std::vector<Touch> out;
    auto pod_target = [&](const PodSpec& spec) -> std::optional<NodeId> {
        if (spec.node) return spec.node;
        Pod probe;
        probe.request = spec.request;
        probe.tolerations = {{intent.acl_id, EffectSet::all()}};
        auto ranked = score_nodes(probe, filter_nodes(probe, state), state);
        if (ranked.empty()) return std::nullopt;
        return ranked.front();
    };
    std::visit(
        [&](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, ScaleUp>) {
                if (auto n = pod_target(a.pod)) out.push_back({*n, true, a.pod.request});
            } else if constexpr (std::is_same_v<T, Instantiate>) {
                for (const auto& p : a.chain) {
                    if (auto n = pod_target(p)) out.push_back({*n, true, p.request});
                }
            } else if constexpr (std::is_same_v<T, ScaleDown> || std::is_same_v<T, Terminate>) {
                if (auto n = state.node_of(a.pod)) out.push_back({*n, false, {}});
            } else if constexpr (std::is_same_v<T, PowerOn>) {
                out.push_back({a.node, true, {}});
            } else {
                out.push_back({a.node, false, {}});
            }
        },
        intent.action);
    return out;
}

namespace detail {

struct DisjointSets {
    std::vector<std::size_t> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace detail

/// Groups same-tick intents from distinct ACLs that clash on a node: either
/// their new pods together overflow the node's free capacity, or one ACL
/// grows the node while another shrinks it. Overlapping clashes merge into
/// one maximal record.
inline std::vector<ConflictRecord> detect_resource_conflicts(const std::vector<ActionIntent>& intents,
                                                             const ClusterState& state) {
    struct NodeTouch {
        std::size_t intent;
        Touch touch;
    };
    std::map<NodeId, std::vector<NodeTouch>> by_node;
    for (std::size_t i = 0; i < intents.size(); ++i) {
        for (auto& t : intent_touches(intents[i], state)) {
            if (state.nodes.contains(t.node)) by_node[t.node].push_back({i, std::move(t)});
        }
    }

    detail::DisjointSets sets(intents.size());
    std::vector<bool> involved(intents.size(), false);
    std::map<std::size_t, std::set<NodeId>> clash_nodes;  // intent -> nodes
    for (const auto& [node, touches] : by_node) {
        std::set<AclId> growers;
        std::set<AclId> shrinkers;
        ResourceVector demand;
        for (const auto& nt : touches) {
            (nt.touch.growth ? growers : shrinkers).insert(intents[nt.intent].acl_id);
            if (nt.touch.growth) demand += nt.touch.request;
        }
        std::vector<std::size_t> linked;
        if (growers.size() >= 2 && !(demand <= free_capacity(node, state))) {
            for (const auto& nt : touches) {
                if (nt.touch.growth) linked.push_back(nt.intent);
            }
        }
        bool opposing = std::any_of(growers.begin(), growers.end(), [&](const AclId& g) {
            return std::any_of(shrinkers.begin(), shrinkers.end(), [&](const AclId& s) { return s != g; });
        });
        if (opposing) {
            linked.clear();
            for (const auto& nt : touches) linked.push_back(nt.intent);
        }
        for (auto i : linked) {
            involved[i] = true;
            sets.unite(linked.front(), i);
            clash_nodes[i].insert(node);
        }
    }

    std::map<std::size_t, ConflictRecord> groups;  // keyed by root = smallest index
    for (std::size_t i = 0; i < intents.size(); ++i) {
        if (!involved[i]) continue;
        auto& rec = groups[sets.find(i)];
        rec.kind = ConflictKind::ResourceContention;
        rec.tick = std::max(rec.tick, intents[i].tick);
        rec.participants.insert(intents[i].acl_id);
        rec.intent_ids.push_back(intents[i].id);
        rec.targets.insert(clash_nodes[i].begin(), clash_nodes[i].end());
    }
    std::vector<ConflictRecord> out;
    for (auto& [root, rec] : groups) {
        if (rec.participants.size() >= 2) out.push_back(std::move(rec));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Interference (ping-pong) detection
// ---------------------------------------------------------------------------

struct InterferenceConfig {
    std::int64_t window_ticks = 10;
    int toggle_threshold = 3;
    std::int64_t cooldown = 10;
};

struct HistoryEntry {
    std::int64_t tick = 0;
    AclId acl;
    std::string target;
    bool state = false;    // on / scaled-up
    bool toggled = false;  // changed the target's binary state
};

/// Materialized binary actions per target.
class ActionHistory {
public:
    /// `prior` is the known state before the action (power actions); scale
    /// actions compare against the previous recorded direction instead.
    void record(std::int64_t tick, const AclId& acl, const std::string& target, bool new_state,
                std::optional<bool> prior = std::nullopt) {
        auto& list = entries_[target];
        if (!prior && !list.empty()) prior = list.back().state;
        list.push_back({tick, acl, target, new_state, prior.has_value() && *prior != new_state});
    }

    void mark_flagged(const std::string& target, std::int64_t tick) { flagged_at_[target] = tick; }

    /// Drops entries that can no longer fall inside a detection window.
    void prune(std::int64_t now, std::int64_t window_ticks) {
        for (auto& [target, list] : entries_) {
            while (list.size() > 1 && list.front().tick <= now - window_ticks) list.pop_front();
        }
    }

    [[nodiscard]] const std::map<std::string, std::deque<HistoryEntry>>& entries() const { return entries_; }
    [[nodiscard]] std::optional<std::int64_t> flagged_at(const std::string& target) const {
        auto it = flagged_at_.find(target);
        if (it == flagged_at_.end()) return std::nullopt;
        return it->second;
    }

private:
    std::map<std::string, std::deque<HistoryEntry>> entries_;
    std::map<std::string, std::int64_t> flagged_at_;
};

/// Flags targets toggled at least `toggle_threshold` times within the last
/// `window_ticks` by two or more distinct ACLs. Toggles at or before the
/// target's previous flag are not counted again.
inline std::vector<ConflictRecord> detect_interference(const ActionHistory& history, std::int64_t window_ticks,
                                                       int toggle_threshold, std::int64_t now) {
    std::vector<ConflictRecord> out;
    for (const auto& [target, list] : history.entries()) {
        auto flagged = history.flagged_at(target);
        int toggles = 0;
        std::set<AclId> acls;
        for (const auto& e : list) {
            if (!e.toggled || e.tick <= now - window_ticks || e.tick > now) continue;
            if (flagged && e.tick <= *flagged) continue;
            ++toggles;
            acls.insert(e.acl);
        }
        if (toggles >= toggle_threshold && acls.size() >= 2) {
            ConflictRecord rec;
            rec.tick = now;
            rec.kind = ConflictKind::Interference;
            rec.participants = std::move(acls);
            rec.targets = {target};
            out.push_back(std::move(rec));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Arbitration
// ---------------------------------------------------------------------------

/// Contention goes to the highest priority value (smallest ACL id on ties).
/// Interference freezes the lowest-priority participant (largest id on ties)
/// until `tick + cooldown`.
inline ConflictRecord resolve(ConflictRecord conflict, const std::map<AclId, std::int64_t>& priorities,
                              std::int64_t tick, std::int64_t cooldown) {
    if (conflict.participants.empty()) throw std::invalid_argument("conflict without participants");
    auto prio = [&](const AclId& a) { return priorities.at(a); };
    if (conflict.kind == ConflictKind::ResourceContention) {
        const AclId* best = nullptr;
        for (const auto& a : conflict.participants) {
            if (!best || prio(a) > prio(*best)) best = &a;
        }
        conflict.resolution = ArbitratedFor{*best};
    } else {
        const AclId* worst = nullptr;
        for (const auto& a : conflict.participants) {
            if (!worst || prio(a) <= prio(*worst)) worst = &a;
        }
        conflict.resolution = Frozen{*worst, tick + cooldown};
    }
    return conflict;
}

// ---------------------------------------------------------------------------
// Coherency and lifecycle
// ---------------------------------------------------------------------------

struct CoherencyConfig {
    double k_sigma = 3.0;
    std::size_t window = 50;
    std::size_t min_history = 10;
    double epsilon = 1e-6;
};

enum class Verdict { Normal, Anomalous };

inline std::string_view to_string(Verdict v) { return v == Verdict::Normal ? "Normal" : "Anomalous"; }

/// Rolling window of an ACL's recent action magnitudes.
struct CoherencyBaseline {
    AclId acl_id;
    std::deque<double> window;
    double mean = 0.0;
    double stddev = 0.0;  // population

    void admit(double x, std::size_t capacity) {
        window.push_back(x);
        while (window.size() > capacity) window.pop_front();
        mean = std::accumulate(window.begin(), window.end(), 0.0) / static_cast<double>(window.size());
        double ss = 0.0;
        for (double v : window) ss += (v - mean) * (v - mean);
        stddev = std::sqrt(ss / static_cast<double>(window.size()));
    }
};

struct CoherencyOutcome {
    Verdict verdict = Verdict::Normal;
    double mean = 0.0;    // baseline before admitting the sample
    double stddev = 0.0;
};

/// Rolling z-score test. Fewer than `min_history` samples is always Normal.
/// The magnitude joins the baseline whatever the verdict.
inline CoherencyOutcome coherency_check(double magnitude, CoherencyBaseline& baseline, const CoherencyConfig& cfg) {
    CoherencyOutcome out{Verdict::Normal, baseline.mean, baseline.stddev};
    if (baseline.window.size() >= cfg.min_history) {
        double sd = std::max(baseline.stddev, cfg.epsilon);
        if (std::abs(magnitude - baseline.mean) > cfg.k_sigma * sd) out.verdict = Verdict::Anomalous;
    }
    baseline.admit(magnitude, cfg.window);
    return out;
}

struct LifecycleConfig {
    int suspend_after = 3;    // consecutive anomalies while observed
    int reinstate_after = 5;  // consecutive normals while observed
};

inline LifecycleState update_lifecycle(LifecycleState s, Verdict v, const LifecycleConfig& cfg) {
    switch (s.state) {
    case Lifecycle::Active:
        if (v == Verdict::Anomalous) {
            s.state = Lifecycle::UnderObservation;
            s.consecutive_anomalous = 1;
            s.normal_streak = 0;
        }
        break;
    case Lifecycle::UnderObservation:
        if (v == Verdict::Anomalous) {
            s.normal_streak = 0;
            if (++s.consecutive_anomalous >= cfg.suspend_after) s.state = Lifecycle::Suspended;
        } else {
            s.consecutive_anomalous = 0;
            if (++s.normal_streak >= cfg.reinstate_after) {
                s.state = Lifecycle::Active;
                s.normal_streak = 0;
            }
        }
        break;
    case Lifecycle::Suspended:
        break;
    }
    return s;
}

/// Operator reinstatement of a suspended agent.
inline LifecycleState release_lifecycle(LifecycleState) { return {}; }

// ---------------------------------------------------------------------------
// Knowledge brokering
// ---------------------------------------------------------------------------

struct TrustList {
    AclId owner;
    std::set<std::pair<AclId, KnowledgeKind>> allowed;

    void allow(const AclId& target, KnowledgeKind kind) {
        if (target == owner) throw std::invalid_argument("an ACL cannot trust itself");
        allowed.insert({target, kind});
    }
    void revoke(const AclId& target, KnowledgeKind kind) { allowed.erase({target, kind}); }
    [[nodiscard]] bool permits(const AclId& target, KnowledgeKind kind) const {
        return allowed.contains({target, kind});
    }
};

enum class DenialReason { NotTrusted, SourceSuspended };

inline std::string_view to_string(DenialReason r) {
    return r == DenialReason::NotTrusted ? "NotTrusted" : "SourceSuspended";
}

struct Denial {
    DenialReason reason;
};

struct ExchangeRequest {
    AclId source;
    AclId target;
    KnowledgeKind kind = KnowledgeKind::Model;
};

class KnowledgeBroker {
public:
    KnowledgeBroker() = default;
    explicit KnowledgeBroker(std::map<AclId, TrustList> lists) : lists_(std::move(lists)) {}

    TrustList& trust_list(const AclId& owner) {
        auto [it, fresh] = lists_.try_emplace(owner);
        if (fresh) it->second.owner = owner;
        return it->second;
    }

    /// Grants iff the source is not suspended and lists the target for this
    /// kind of artifact.
    std::variant<Grant, Denial> exchange(const ExchangeRequest& req, Lifecycle source_state) {
        if (req.source == req.target) throw std::invalid_argument("exchange source and target must differ");
        if (source_state == Lifecycle::Suspended) return Denial{DenialReason::SourceSuspended};
        auto it = lists_.find(req.source);
        if (it == lists_.end() || !it->second.permits(req.target, req.kind)) return Denial{DenialReason::NotTrusted};
        std::string id = req.source + ":" + std::string(to_string(req.kind)) + ":" + req.target + ":" +
                         std::to_string(++issued_);
        redeemed_[id] = false;
        return Grant(std::move(id), req.source, req.target, req.kind);
    }

    /// Consumes a grant; true only the first time.
    bool redeem(const Grant& grant) {
        auto it = redeemed_.find(grant.artifact_id());
        if (it == redeemed_.end() || it->second) return false;
        it->second = true;
        return true;
    }

private:
    std::map<AclId, TrustList> lists_;
    std::map<std::string, bool> redeemed_;
    std::uint64_t issued_ = 0;
};

// ---------------------------------------------------------------------------
// Hierarchy and routing
// ---------------------------------------------------------------------------

class RoutingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct IcmLevel {
    bool e2e = false;
    RegionId region;

    [[nodiscard]] std::string name() const { return e2e ? "e2e" : "regional:" + region; }
    friend bool operator==(const IcmLevel&, const IcmLevel&) = default;
    friend auto operator<=>(const IcmLevel& a, const IcmLevel& b) {
        return std::tie(a.e2e, a.region) <=> std::tie(b.e2e, b.region);
    }
};

/// One regional instance per region and a single end-to-end instance that
/// only processes on ticks divisible by `e2e_period`.
struct Hierarchy {
    std::set<RegionId> regions;
    std::int64_t e2e_period = 5;

    /// Items confined to one known region go to that region's instance;
    /// anything spanning regions or involving a Mega ACL goes end-to-end.
    [[nodiscard]] IcmLevel route(const std::set<RegionId>& item_regions, bool any_mega) const {
        for (const auto& r : item_regions) {
            if (!regions.contains(r)) throw RoutingError("unknown region '" + r + "'");
        }
        if (any_mega || item_regions.size() != 1) return {true, {}};
        return {false, *item_regions.begin()};
    }

    [[nodiscard]] bool e2e_due(std::int64_t tick) const { return tick % e2e_period == 0; }

    [[nodiscard]] std::int64_t processing_tick(const IcmLevel& level, std::int64_t tick) const {
        if (!level.e2e) return tick;
        return (tick + e2e_period - 1) / e2e_period * e2e_period;
    }
};

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

struct IcmConfig {
    CoherencyConfig coherency;
    LifecycleConfig lifecycle;
    InterferenceConfig interference;
    double knowledge_bonus = 0.2;
};

/// Stateful ICM front: takes executed intents, checks coherency, filters
/// freezes, detects conflicts, routes everything through the hierarchy and
/// releases surviving intents for materialization.
class IcmEngine : public IntentSink {
public:
    IcmEngine(IcmConfig cfg, Hierarchy hierarchy, KnowledgeBroker broker)
        : cfg_(cfg), hierarchy_(std::move(hierarchy)), broker_(std::move(broker)) {}

    /// Caches the routing facts of an agent; scopes are fixed for a run.
    void register_agent(const AclAgent& agent, const ClusterState& state) {
        agent_regions_[agent.id] = scope_regions(agent.scope, state);
        agent_mega_[agent.id] = agent.size == SizeClass::Mega;
    }

    Receipt submit(const AclAgent& agent, const ActionIntent& intent) override {
        auto level = agent_level(agent.id);
        intake_.push_back(intent);
        return {intent.id, hierarchy_.processing_tick(level, intent.tick), level.name()};
    }

    [[nodiscard]] IcmLevel agent_level(const AclId& acl) const {
        return hierarchy_.route(agent_regions_.at(acl), agent_mega_.at(acl));
    }

    [[nodiscard]] IcmLevel conflict_level(const ConflictRecord& rec) const {
        std::set<RegionId> regions;
        bool mega = false;
        for (const auto& a : rec.participants) {
            const auto& r = agent_regions_.at(a);
            regions.insert(r.begin(), r.end());
            mega = mega || agent_mega_.at(a);
        }
        return hierarchy_.route(regions, mega);
    }

    [[nodiscard]] bool frozen(const AclId& acl, const std::string& target, std::int64_t tick) const {
        auto it = freezes_.find({acl, target});
        return it != freezes_.end() && tick < it->second;
    }

    void record_action(std::int64_t tick, const AclId& acl, const std::string& target, bool state,
                       std::optional<bool> prior = std::nullopt) {
        history_.record(tick, acl, target, state, prior);
    }

    KnowledgeBroker& broker() { return broker_; }
    [[nodiscard]] const Hierarchy& hierarchy() const { return hierarchy_; }
    [[nodiscard]] const IcmConfig& config() const { return cfg_; }
    [[nodiscard]] const ActionHistory& history() const { return history_; }
    [[nodiscard]] const std::map<AclId, CoherencyBaseline>& baselines() const { return baselines_; }
    [[nodiscard]] std::size_t buffered() const { return e2e_buffer_.size(); }

    struct Context {
        std::int64_t tick;
        const ClusterState& state;
        std::map<AclId, AclAgent>& agents;
        EventLog& log;
    };

    /// Runs one ICM tick and returns the intents cleared for materialization,
    /// regional instances first (by region id), then the end-to-end instance.
    std::vector<ActionIntent> process(const Context& ctx) {
        auto fresh = std::exchange(intake_, {});
        auto survivors = std::exchange(deferred_, {});

        // Coherency, one batch per ACL in id order.
        std::map<AclId, std::vector<ActionIntent>> batches;
        for (auto& i : fresh) batches[i.acl_id].push_back(std::move(i));
        for (auto& [acl, batch] : batches) {
            auto& agent = ctx.agents.at(acl);
            double magnitude = 0.0;
            for (const auto& i : batch) magnitude += intent_magnitude(i, ctx.state);
            auto& baseline = baselines_[acl];
            baseline.acl_id = acl;
            auto outcome = coherency_check(magnitude, baseline, cfg_.coherency);
            ctx.log.emit(ctx.tick, "coherency",
                         {{"acl", acl},
                          {"level", agent_level(acl).name()},
                          {"magnitude", format_real(magnitude)},
                          {"mean", format_real(outcome.mean)},
                          {"stddev", format_real(outcome.stddev)},
                          {"verdict", std::string(to_string(outcome.verdict))}});
            auto before = agent.lifecycle.state;
            agent.lifecycle = update_lifecycle(agent.lifecycle, outcome.verdict, cfg_.lifecycle);
            if (agent.lifecycle.state != before) {
                ctx.log.emit(ctx.tick, "lifecycle",
                             {{"acl", acl},
                              {"from", std::string(to_string(before))},
                              {"to", std::string(to_string(agent.lifecycle.state))}});
            }
            if (outcome.verdict == Verdict::Anomalous) {
                for (const auto& i : batch) drop(ctx, i, "anomalous");
            } else {
                for (auto& i : batch) survivors.push_back(std::move(i));
            }
            if (agent.suspended()) purge(ctx, acl, survivors);
        }

        // Freezes.
        std::vector<ActionIntent> admitted;
        for (auto& i : survivors) {
            if (is_frozen(i, ctx)) {
                drop(ctx, i, "frozen");
            } else {
                admitted.push_back(std::move(i));
            }
        }

        // Detection.
        auto contention = detect_resource_conflicts(admitted, ctx.state);
        auto interference = detect_interference(history_, cfg_.interference.window_ticks,
                                                cfg_.interference.toggle_threshold, ctx.tick);
        for (const auto& rec : interference) history_.mark_flagged(*rec.targets.begin(), ctx.tick);
        history_.prune(ctx.tick, cfg_.interference.window_ticks);

        std::map<std::string, std::size_t> record_of;  // intent id -> contention index
        for (std::size_t r = 0; r < contention.size(); ++r) {
            for (const auto& id : contention[r].intent_ids) record_of[id] = r;
        }

        // Routing: a contention record is placed where its first intent sat.
        std::map<IcmLevel, std::vector<Item>> items;
        std::vector<bool> placed(contention.size(), false);
        std::vector<std::vector<ActionIntent>> grouped(contention.size());
        for (auto& i : admitted) {
            auto it = record_of.find(i.id);
            if (it != record_of.end()) grouped[it->second].push_back(i);
        }
        for (auto& i : admitted) {
            auto it = record_of.find(i.id);
            if (it == record_of.end()) {
                items[agent_level(i.acl_id)].push_back({std::nullopt, {std::move(i)}});
                continue;
            }
            auto r = it->second;
            if (placed[r]) continue;
            placed[r] = true;
            auto rec = std::move(contention[r]);
            rec.id = "c" + std::to_string(++conflict_counter_);
            rec.tick = ctx.tick;
            auto level = conflict_level(rec);
            announce(ctx, rec, level);
            items[level].push_back({std::move(rec), std::move(grouped[r])});
        }
        for (auto& rec : interference) {
            rec.id = "c" + std::to_string(++conflict_counter_);
            auto level = conflict_level(rec);
            announce(ctx, rec, level);
            items[level].push_back({std::move(rec), {}});
        }

        std::vector<ActionIntent> released;
        for (auto& [level, list] : items) {
            if (level.e2e) continue;
            run_instance(ctx, level, list, released);
        }
        const IcmLevel e2e{true, {}};
        if (auto it = items.find(e2e); it != items.end()) {
            for (auto& item : it->second) {
                if (item.record) item.record->resolution = Escalated{};
                e2e_buffer_.push_back(std::move(item));
            }
        }
        if (hierarchy_.e2e_due(ctx.tick)) {
            auto buffer = std::exchange(e2e_buffer_, {});
            run_instance(ctx, e2e, buffer, released);
        }
        return released;
    }

    /// Drops any buffered or deferred work of an agent (used on suspension).
    void purge(const Context& ctx, const AclId& acl, std::vector<ActionIntent>& pending) {
        auto strip = [&](std::vector<ActionIntent>& v) {
            std::vector<ActionIntent> keep;
            for (auto& i : v) {
                if (i.acl_id == acl) {
                    drop(ctx, i, "suspended");
                } else {
                    keep.push_back(std::move(i));
                }
            }
            v = std::move(keep);
        };
        strip(pending);
        strip(deferred_);
        for (auto& item : e2e_buffer_) strip(item.intents);
    }

private:
    struct Item {
        std::optional<ConflictRecord> record;
        std::vector<ActionIntent> intents;
    };

    void announce(const Context& ctx, const ConflictRecord& rec, const IcmLevel& level) {
        ctx.log.emit(ctx.tick, "conflict",
                     {{"id", rec.id},
                      {"type", std::string(to_string(rec.kind))},
                      {"level", level.name()},
                      {"participants", join(rec.participants)},
                      {"targets", join(rec.targets)}});
        if (level.e2e && !hierarchy_.e2e_due(ctx.tick)) {
            ctx.log.emit(ctx.tick, "escalate",
                         {{"id", rec.id},
                          {"level", level.name()},
                          {"due", std::to_string(hierarchy_.processing_tick(level, ctx.tick))}});
        }
    }

    bool is_frozen(const ActionIntent& intent, const Context& ctx) const {
        for (const auto& t : intent_touches(intent, ctx.state)) {
            if (frozen(intent.acl_id, t.node, ctx.tick)) return true;
        }
        return false;
    }

    void drop(const Context& ctx, const ActionIntent& intent, std::string_view reason) {
        ctx.log.emit(ctx.tick, "intent_dropped",
                     {{"acl", intent.acl_id}, {"intent", intent.id}, {"reason", std::string(reason)}});
        if (auto it = ctx.agents.find(intent.acl_id); it != ctx.agents.end()) it->second.outstanding.erase(intent.id);
    }

    void release(const Context& ctx, ActionIntent intent, std::vector<ActionIntent>& out) {
        auto& agent = ctx.agents.at(intent.acl_id);
        if (agent.suspended()) {
            drop(ctx, intent, "suspended");
        } else if (is_frozen(intent, ctx)) {
            drop(ctx, intent, "frozen");
        } else {
            out.push_back(std::move(intent));
        }
    }

    void run_instance(const Context& ctx, const IcmLevel& level, std::vector<Item>& items,
                      std::vector<ActionIntent>& released) {
        std::map<AclId, std::int64_t> priorities;
        for (const auto& [id, agent] : ctx.agents) priorities[id] = agent.priority.value;
        for (auto& item : items) {
            if (!item.record) {
                for (auto& i : item.intents) release(ctx, std::move(i), released);
                continue;
            }
            auto rec = resolve(std::move(*item.record), priorities, ctx.tick, cfg_.interference.cooldown);
            EventLog::Fields fields{{"id", rec.id}, {"type", std::string(to_string(rec.kind))}, {"level", level.name()}};
            if (auto* a = std::get_if<ArbitratedFor>(&rec.resolution)) {
                fields.push_back({"resolution", "ArbitratedFor"});
                fields.push_back({"acl", a->acl});
                ctx.log.emit(ctx.tick, "resolve", std::move(fields));
                for (auto& i : item.intents) {
                    if (i.acl_id == a->acl) {
                        release(ctx, std::move(i), released);
                    } else {
                        ctx.log.emit(ctx.tick, "intent_deferred",
                                     {{"acl", i.acl_id}, {"intent", i.id}, {"conflict", rec.id}});
                        deferred_.push_back(std::move(i));
                    }
                }
            } else if (auto* f = std::get_if<Frozen>(&rec.resolution)) {
                fields.push_back({"resolution", "Frozen"});
                fields.push_back({"acl", f->acl});
                fields.push_back({"until", std::to_string(f->until_tick)});
                ctx.log.emit(ctx.tick, "resolve", std::move(fields));
                for (const auto& target : rec.targets) freezes_[{f->acl, target}] = f->until_tick;
            }
        }
    }

    IcmConfig cfg_;
    Hierarchy hierarchy_;
    KnowledgeBroker broker_;
    ActionHistory history_;
    std::map<AclId, CoherencyBaseline> baselines_;
    std::map<AclId, std::set<RegionId>> agent_regions_;
    std::map<AclId, bool> agent_mega_;
    std::map<std::pair<AclId, std::string>, std::int64_t> freezes_;
    std::vector<ActionIntent> intake_;
    std::vector<ActionIntent> deferred_;
    std::vector<Item> e2e_buffer_;
    std::uint64_t conflict_counter_ = 0;
};

}  // namespace aclsim
