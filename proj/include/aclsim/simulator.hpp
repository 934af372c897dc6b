#pragma once

#include <aclsim/agent.hpp>
#include <aclsim/cluster.hpp>
#include <aclsim/icm.hpp>
#include <aclsim/scenario.hpp>
#include <aclsim/scheduler.hpp>
#include <aclsim/trace.hpp>
#include <aclsim/traffic.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace aclsim {

/// Run-level counters and series.
struct Metrics {
    std::map<std::string, std::int64_t> conflicts;  // by kind
    std::int64_t preemptions = 0;
    std::int64_t evictions = 0;
    std::int64_t reschedules = 0;  // binds of previously evicted pods
    std::int64_t bindings = 0;
    std::int64_t intents_submitted = 0;
    std::int64_t intents_released = 0;
    std::int64_t intents_dropped = 0;
    std::int64_t intents_deferred = 0;
    std::int64_t max_pending_ticks = 0;
    std::int64_t starved_pods = 0;  // pending for at least `starvation_ticks` at the end
    std::map<std::string, std::int64_t> verdicts;
    std::int64_t grants = 0;
    std::int64_t denials = 0;
    std::int64_t power_toggles = 0;  // node power flips, a measure of oscillation
    std::map<NodeId, std::vector<double>> cpu_utilization;  // one value per tick
    std::map<AclId, double> abs_error_sum;
    std::map<AclId, std::int64_t> predictions;
    std::map<AclId, std::int64_t> released_by_acl;

    [[nodiscard]] std::int64_t conflicts_of(const std::string& kind) const {
        auto it = conflicts.find(kind);
        return it == conflicts.end() ? 0 : it->second;
    }

    /// Mean absolute error of an agent's predictions against the noise-free
    /// traffic mean of its scope.
    [[nodiscard]] double mae(const AclId& acl) const {
        auto it = predictions.find(acl);
        if (it == predictions.end() || it->second == 0) return 0.0;
        return abs_error_sum.at(acl) / static_cast<double>(it->second);
    }
};

inline constexpr std::int64_t kStarvationTicks = 10;

/// Everything that evolves during a run.
class World {
public:
    explicit World(Scenario scenario)
        : scenario_(std::move(scenario)),
          icm_(scenario_.icm, Hierarchy{scenario_.regions(), scenario_.e2e_period},
               KnowledgeBroker(scenario_.trust_lists)),
          traffic_(scenario_.seed, scenario_.traffic_default, scenario_.traffic_regions) {
        for (const auto& n : scenario_.nodes) state_ = add_node(std::move(state_), n);
        for (const auto& a : scenario_.agents) {
            agents_.emplace(a.id, a);
            units_.emplace(a.id, SchedulerUnit{a.id, a.priority, {}});
            icm_.register_agent(a, state_);
        }
        for (const auto& p : scenario_.pods) {
            const auto& owner = agents_.at(p.owner);
            create_pod(p.id, owner, p.request, p.node);
            if (p.node) {
                try {
                    state_ = aclsim::bind(std::move(state_), p.id, *p.node);
                } catch (const ClusterError& e) {
                    throw ValidationError("pod " + p.id, e.what());
                }
                auto& q = units_.at(p.owner).queue;
                q.erase(std::remove(q.begin(), q.end(), p.id), q.end());
                pending_since_.erase(p.id);
                log_.emit(0, "place", {{"pod", p.id}, {"node", *p.node}});
            }
        }
    }

    [[nodiscard]] const Scenario& scenario() const { return scenario_; }
    [[nodiscard]] std::int64_t tick() const { return tick_; }
    [[nodiscard]] bool done() const { return tick_ >= scenario_.ticks; }
    [[nodiscard]] const ClusterState& state() const { return state_; }
    [[nodiscard]] const std::map<AclId, AclAgent>& agents() const { return agents_; }
    [[nodiscard]] const std::map<AclId, SchedulerUnit>& units() const { return units_; }
    [[nodiscard]] const IcmEngine& icm() const { return icm_; }
    [[nodiscard]] const Metrics& metrics() const { return metrics_; }
    [[nodiscard]] const std::vector<Event>& events() const { return log_.events(); }
    [[nodiscard]] std::int64_t pods_created() const { return created_; }
    [[nodiscard]] std::int64_t pods_terminated() const { return terminated_; }

    /// Advances one tick through the seven phases and returns its events.
    std::vector<Event> step() {
        if (done()) throw std::logic_error("world already ran all ticks");
        const auto first = log_.events().size();
        env_.tick = tick_;
        phase_environment();
        auto planned = phase_plan();
        phase_execute(planned);
        auto released = icm_.process({tick_, state_, agents_, log_});
        phase_materialize(released);
        phase_schedule();
        phase_metrics();
        ++tick_;
        const auto& all = log_.events();
        std::vector<Event> out(all.begin() + static_cast<std::ptrdiff_t>(first), all.end());
        for (const auto& e : out) observe(e);
        return out;
    }

    /// Closes the run: final starvation count.
    void finish() {
        metrics_.starved_pods = 0;
        for (const auto& [pod, since] : pending_since_) {
            if (tick_ - since >= kStarvationTicks) ++metrics_.starved_pods;
        }
    }

private:
    void create_pod(const PodId& id, const AclAgent& owner, const ResourceVector& request,
                    std::optional<NodeId> hint) {
        Pod pod;
        pod.id = id;
        pod.owner_acl = owner.id;
        pod.request = request;
        pod.tolerations = {owner.own_toleration()};
        pod.priority = owner.priority;
        pod.preferred_node = std::move(hint);
        pod.serial = ++serial_;
        state_ = add_pod(std::move(state_), pod);
        units_.at(owner.id).queue.push_back(id);
        pending_since_[id] = tick_;
        ++created_;
        log_.emit(tick_, "pod_created",
                  {{"pod", id},
                   {"acl", owner.id},
                   {"prio", std::to_string(owner.priority.value)},
                   {"cpu", std::to_string(request.cpu_millicores)},
                   {"mem", std::to_string(request.memory_mib)},
                   {"hint", pod.preferred_node.value_or("-")}});
    }

    // (1) traffic and injected events
    void phase_environment() {
        for (const auto& region : scenario_.regions()) {
            env_.record(region, {tick_, traffic_.sample(region, tick_)});
        }
        while (next_event_ < scenario_.events.size() && scenario_.events[next_event_].tick < tick_) ++next_event_;
        while (next_event_ < scenario_.events.size() && scenario_.events[next_event_].tick == tick_) {
            apply(scenario_.events[next_event_++]);
        }
    }

    void apply(const InjectedEvent& ev) {
        switch (ev.kind) {
        case InjectedKind::SliceRequest:
            log_.emit(tick_, "injected", {{"type", "slice_request"}, {"acl", ev.acl}, {"name", ev.slice.name}});
            agents_.at(ev.acl).pending_slices.push_back(ev.slice);
            break;
        case InjectedKind::Taint:
            state_ = apply_taint(std::move(state_), ev.node, ev.taint);
            log_.emit(tick_, "taint",
                      {{"node", ev.node}, {"key", ev.taint.key}, {"effect", std::string(to_string(ev.taint.effect))}});
            break;
        case InjectedKind::Fault: {
            auto& a = agents_.at(ev.acl);
            a.fault_factor = ev.factor;
            a.fault_until = tick_ + ev.duration - 1;
            log_.emit(tick_, "injected",
                      {{"type", "fault"}, {"acl", ev.acl}, {"factor", format_real(ev.factor)},
                       {"until", std::to_string(a.fault_until)}});
            break;
        }
        case InjectedKind::Release: {
            auto& a = agents_.at(ev.acl);
            auto before = a.lifecycle.state;
            a.lifecycle = release_lifecycle(a.lifecycle);
            log_.emit(tick_, "release",
                      {{"acl", ev.acl}, {"from", std::string(to_string(before))},
                       {"to", std::string(to_string(a.lifecycle.state))}});
            break;
        }
        case InjectedKind::Exchange: exchange(ev); break;
        }
    }

    void exchange(const InjectedEvent& ev) {
        const auto& source = agents_.at(ev.source);
        auto result = icm_.broker().exchange({ev.source, ev.target, ev.knowledge}, source.lifecycle.state);
        EventLog::Fields fields{{"source", ev.source},
                                {"target", ev.target},
                                {"artifact_kind", std::string(to_string(ev.knowledge))}};
        if (auto* denial = std::get_if<Denial>(&result)) {
            fields.push_back({"result", "denied"});
            fields.push_back({"reason", std::string(to_string(denial->reason))});
            log_.emit(tick_, "exchange", std::move(fields));
            return;
        }
        const auto& grant = std::get<Grant>(result);
        fields.push_back({"result", "granted"});
        fields.push_back({"artifact", grant.artifact_id()});
        log_.emit(tick_, "exchange", std::move(fields));
        if (!icm_.broker().redeem(grant)) return;

        KnowledgeArtifact artifact{grant.artifact_id(), ev.source, ev.knowledge, {}, ev.samples};
        auto regions = scope_regions(source.scope, state_);
        if (!regions.empty()) artifact.profile = traffic_.profile(*regions.begin());
        auto& target = agents_.at(ev.target);
        target = absorb_knowledge(std::move(target), grant, artifact, icm_.config().knowledge_bonus);
        log_.emit(tick_, "absorb", {{"acl", ev.target}, {"artifact", artifact.id}});
    }

    // (2) monitor, analyze, plan
    std::map<AclId, std::vector<ActionIntent>> phase_plan() {
        std::map<AclId, std::vector<ActionIntent>> planned;
        for (auto& [id, agent] : agents_) {
            if (agent.suspended() || !agent.acts_on(tick_)) continue;
            auto window = monitor(env_, agent, state_);
            if (!agent.predictor_primed && !window.samples.empty()) {
                agent.predictor.level = window.samples.front().traffic_units;
                agent.predictor_primed = true;
            }
            auto prediction = analyze(window, agent.predictor);
            agent.predictor = std::move(prediction.state);
            metrics_.abs_error_sum[id] += std::abs(prediction.value - scope_truth(agent, state_, traffic_, tick_));
            ++metrics_.predictions[id];
            auto intents = plan(prediction.value, agent, state_, tick_);
            if (!intents.empty()) planned.emplace(id, std::move(intents));
        }
        return planned;
    }

    // (3) execute into the ICM
    void phase_execute(const std::map<AclId, std::vector<ActionIntent>>& planned) {
        for (const auto& [id, intents] : planned) {
            auto& agent = agents_.at(id);
            auto receipts = execute(agent, intents, icm_);
            for (std::size_t i = 0; i < intents.size(); ++i) {
                auto fields = describe(intents[i]);
                fields.push_back({"level", receipts[i].level});
                fields.push_back({"check", std::to_string(receipts[i].check_tick)});
                log_.emit(tick_, "intent", std::move(fields));
            }
        }
    }

    static EventLog::Fields describe(const ActionIntent& intent) {
        EventLog::Fields f{{"acl", intent.acl_id}, {"intent", intent.id}, {"action", std::string(action_name(intent.action))}};
        std::visit(
            [&](const auto& a) {
                using T = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<T, ScaleUp>) {
                    f.push_back({"pod", a.pod.id});
                } else if constexpr (std::is_same_v<T, Instantiate>) {
                    std::vector<std::string> ids;
                    for (const auto& p : a.chain) ids.push_back(p.id);
                    f.push_back({"slice", a.slice});
                    f.push_back({"pods", join(ids)});
                } else if constexpr (std::is_same_v<T, ScaleDown> || std::is_same_v<T, Terminate>) {
                    f.push_back({"pod", a.pod});
                } else {
                    f.push_back({"node", a.node});
                }
            },
            intent.action);
        return f;
    }

    // (5) materialization of released intents
    void phase_materialize(const std::vector<ActionIntent>& released) {
        for (const auto& intent : released) {
            auto& agent = agents_.at(intent.acl_id);
            agent.outstanding.erase(intent.id);
            ++metrics_.released_by_acl[intent.acl_id];
            ++metrics_.intents_released;
            try {
                materialize(intent, agent);
            } catch (const ClusterError& e) {
                log_.emit(tick_, "intent_failed", {{"acl", intent.acl_id}, {"intent", intent.id}, {"error", e.what()}});
            }
        }
    }

    void materialize(const ActionIntent& intent, const AclAgent& agent) {
        std::visit(
            [&](const auto& a) {
                using T = std::decay_t<decltype(a)>;
                if constexpr (std::is_same_v<T, ScaleUp>) {
                    create_pod(a.pod.id, agent, a.pod.request, a.pod.node);
                    if (a.pod.node) icm_.record_action(tick_, agent.id, *a.pod.node, true);
                } else if constexpr (std::is_same_v<T, Instantiate>) {
                    for (const auto& p : a.chain) create_pod(p.id, agent, p.request, p.node);
                } else if constexpr (std::is_same_v<T, ScaleDown> || std::is_same_v<T, Terminate>) {
                    auto node = state_.node_of(a.pod);
                    remove_pod(a.pod);
                    if (std::is_same_v<T, ScaleDown> && node) icm_.record_action(tick_, agent.id, *node, false);
                } else {
                    constexpr bool on = std::is_same_v<T, PowerOn>;
                    bool prior = state_.node(a.node).powered_on;
                    state_ = set_power(std::move(state_), a.node, on);
                    icm_.record_action(tick_, agent.id, a.node, on, prior);
                    log_.emit(tick_, "power", {{"acl", agent.id}, {"node", a.node}, {"on", on ? "1" : "0"}});
                }
            },
            intent.action);
    }

    void remove_pod(const PodId& id) {
        auto node = state_.node_of(id);
        const auto owner = state_.pod(id).owner_acl;
        state_ = terminate(std::move(state_), id);
        auto& q = units_.at(owner).queue;
        q.erase(std::remove(q.begin(), q.end(), id), q.end());
        pending_since_.erase(id);
        reported_pending_.erase(id);
        ++terminated_;
        log_.emit(tick_, "pod_terminated", {{"pod", id}, {"acl", owner}, {"node", node.value_or("-")}});
    }

    // (6) scheduling round
    void phase_schedule() {
        std::vector<SchedulerUnit> units;
        for (auto& [id, u] : units_) units.push_back(std::move(u));
        auto round = coordinate(std::move(units), std::move(state_));
        state_ = std::move(round.state);
        units_.clear();
        for (auto& u : round.units) units_.emplace(u.acl_id, std::move(u));

        for (const auto& ev : round.evictions) {
            if (ev.reason != "no_execute") continue;
            on_evicted(ev.pod);
            log_.emit(tick_, "evict", {{"pod", ev.pod}, {"node", ev.node}, {"reason", ev.reason}});
        }
        for (const auto& d : round.decisions) {
            if (const auto* b = std::get_if<BoundDecision>(&d)) {
                on_bound(b->pod, b->node);
            } else if (const auto* p = std::get_if<PreemptDecision>(&d)) {
                log_.emit(tick_, "preempt", {{"pod", p->pod}, {"node", p->node}, {"victims", join(p->victims)}});
                for (const auto& v : p->victims) {
                    on_evicted(v);
                    log_.emit(tick_, "evict", {{"pod", v}, {"node", p->node}, {"reason", "preempted"}, {"by", p->pod}});
                }
                on_bound(p->pod, p->node);
            } else {
                const auto& pd = std::get<PendingDecision>(d);
                if (reported_pending_.insert(pd.pod).second) {
                    log_.emit(tick_, "pending", {{"pod", pd.pod}, {"reason", pd.reason}});
                }
            }
        }
    }

    void on_evicted(const PodId& pod) {
        evicted_.insert(pod);
        reported_pending_.erase(pod);
        pending_since_[pod] = tick_;
    }

    void on_bound(const PodId& pod, const NodeId& node) {
        reported_pending_.erase(pod);
        pending_since_.erase(pod);
        bool again = evicted_.erase(pod) > 0;
        log_.emit(tick_, "bind",
                  {{"pod", pod}, {"node", node}, {"acl", state_.pod(pod).owner_acl}, {"rescheduled", again ? "1" : "0"}});
    }

    // (7) metrics
    void phase_metrics() {
        std::int64_t bound = 0;
        std::int64_t pending = 0;
        for (const auto& [id, pod] : state_.pods) {
            if (pod.phase == PodPhase::Bound) ++bound;
            if (pod.phase == PodPhase::Pending) ++pending;
        }
        std::vector<std::string> util;
        for (const auto& [id, node] : state_.nodes) {
            double cap = static_cast<double>(node.capacity.cpu_millicores);
            auto it = state_.allocated.find(id);
            double used = it == state_.allocated.end() ? 0.0 : static_cast<double>(it->second.cpu_millicores);
            double u = cap > 0 ? used / cap : 0.0;
            metrics_.cpu_utilization[id].push_back(u);
            util.push_back(id + ":" + format_real(u));
        }
        for (const auto& [pod, since] : pending_since_) {
            metrics_.max_pending_ticks = std::max(metrics_.max_pending_ticks, tick_ - since);
        }
        log_.emit(tick_, "metrics",
                  {{"bound", std::to_string(bound)}, {"pending", std::to_string(pending)}, {"util", join(util)}});
    }

    void observe(const Event& e) {
        if (e.kind == "conflict") {
            ++metrics_.conflicts[e.at("type")];
        } else if (e.kind == "preempt") {
            ++metrics_.preemptions;
        } else if (e.kind == "evict") {
            ++metrics_.evictions;
        } else if (e.kind == "bind") {
            ++metrics_.bindings;
            if (e.at("rescheduled") == "1") ++metrics_.reschedules;
        } else if (e.kind == "intent") {
            ++metrics_.intents_submitted;
        } else if (e.kind == "intent_dropped") {
            ++metrics_.intents_dropped;
        } else if (e.kind == "intent_deferred") {
            ++metrics_.intents_deferred;
        } else if (e.kind == "coherency") {
            ++metrics_.verdicts[e.at("verdict")];
        } else if (e.kind == "power") {
            ++metrics_.power_toggles;
        } else if (e.kind == "exchange") {
            ++(e.at("result") == "granted" ? metrics_.grants : metrics_.denials);
        }
    }

    Scenario scenario_;
    std::int64_t tick_ = 0;
    ClusterState state_;
    std::map<AclId, AclAgent> agents_;
    std::map<AclId, SchedulerUnit> units_;
    IcmEngine icm_;
    TrafficGenerator traffic_;
    Environment env_;
    EventLog log_;
    Metrics metrics_;
    std::size_t next_event_ = 0;
    std::uint64_t serial_ = 0;
    std::int64_t created_ = 0;
    std::int64_t terminated_ = 0;
    std::map<PodId, std::int64_t> pending_since_;
    std::set<PodId> reported_pending_;
    std::set<PodId> evicted_;

    friend std::vector<std::string> check_world_invariants(const World&);
};

/// Structural invariants of the live world: cluster consistency and pod
/// conservation (created minus terminated equals live pods).
inline std::vector<std::string> check_world_invariants(const World& w) {
    auto out = check_invariants(w.state_);
    std::int64_t live = 0;
    for (const auto& [id, pod] : w.state_.pods) {
        if (pod.phase != PodPhase::Terminated) ++live;
    }
    if (w.created_ - w.terminated_ != live) {
        out.push_back("conservation: created " + std::to_string(w.created_) + " - terminated " +
                      std::to_string(w.terminated_) + " != live " + std::to_string(live));
    }
    return out;
}

struct RunResult {
    Trace trace;
    Metrics metrics;
};

inline RunResult run(const Scenario& scenario) {
    World world(scenario);
    while (!world.done()) world.step();
    world.finish();
    Trace trace;
    trace.header = {1, scenario_hash(scenario), scenario.seed, scenario.ticks};
    trace.events = world.events();
    return {std::move(trace), world.metrics()};
}

}  // namespace aclsim
