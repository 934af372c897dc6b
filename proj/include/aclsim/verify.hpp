#pragma once

#include <aclsim/scenario.hpp>
#include <aclsim/simulator.hpp>
#include <aclsim/trace.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace aclsim {

class HashMismatch : public std::runtime_error {
public:
    HashMismatch(std::uint64_t trace_hash, std::uint64_t scenario_hash)
        : std::runtime_error("trace was produced by scenario " + hash_hex(trace_hash) + ", not " +
                             hash_hex(scenario_hash)) {}
};

/// Event kinds emitted by the ICM phase and by the scheduling phase.
inline bool is_icm_event(std::string_view kind) {
    return kind == "coherency" || kind == "lifecycle" || kind == "conflict" || kind == "escalate" ||
           kind == "resolve" || kind == "intent_dropped" || kind == "intent_deferred";
}

inline bool is_scheduling_event(std::string_view kind) {
    return kind == "evict" || kind == "preempt" || kind == "bind" || kind == "pending";
}

/// Checks a recorded trace on its own: sequence and tick order, phase
/// ordering, node capacity, preemption strictness and requeue liveness.
inline std::vector<std::string> check_trace_invariants(const Trace& trace, const Scenario& scenario) {
    std::vector<std::string> out;
    auto where = [](const Event& e) { return "seq " + std::to_string(e.seq) + " (tick " + std::to_string(e.tick) + ")"; };

    std::map<NodeId, ResourceVector> capacity;
    for (const auto& n : scenario.nodes) capacity[n.id] = n.capacity;
    std::map<PodId, ResourceVector> request;
    std::map<PodId, std::int64_t> priority;
    std::map<PodId, NodeId> bound;
    std::map<NodeId, ResourceVector> used;

    auto unbind = [&](const PodId& pod) {
        auto it = bound.find(pod);
        if (it == bound.end()) return;
        auto& u = used[it->second];
        u = u - request[pod];
        bound.erase(it);
    };

    // Per tick bookkeeping.
    std::int64_t tick = trace.events.empty() ? 0 : trace.events.front().tick;
    bool seen_scheduling = false;
    std::set<PodId> awaiting_requeue;
    auto close_tick = [&](std::int64_t t) {
        for (const auto& pod : awaiting_requeue) {
            out.push_back("requeue liveness: pod " + pod + " evicted at tick " + std::to_string(t) +
                          " was neither rebound nor queued");
        }
        awaiting_requeue.clear();
        seen_scheduling = false;
    };

    std::optional<std::uint64_t> last_seq;
    for (const auto& e : trace.events) {
        if (last_seq && e.seq <= *last_seq) out.push_back("sequence not increasing at " + where(e));
        last_seq = e.seq;
        if (e.tick < tick) out.push_back("tick goes backwards at " + where(e));
        if (e.tick != tick) {
            close_tick(tick);
            tick = e.tick;
        }
        try {
            if (is_scheduling_event(e.kind)) seen_scheduling = true;
            if (is_icm_event(e.kind) && seen_scheduling) {
                out.push_back("phase ordering: " + e.kind + " after scheduling events at " + where(e));
            }
            if (e.kind == "pod_created") {
                auto pod = e.at("pod");
                request[pod] = {std::stoll(e.at("cpu")), std::stoll(e.at("mem"))};
                priority[pod] = std::stoll(e.at("prio"));
            } else if (e.kind == "bind" || e.kind == "place") {
                auto pod = e.at("pod");
                auto node = e.at("node");
                unbind(pod);
                bound[pod] = node;
                used[node] += request[pod];
                awaiting_requeue.erase(pod);
                if (!capacity.contains(node)) {
                    out.push_back("bind to unknown node " + node + " at " + where(e));
                } else if (!(used[node] <= capacity[node])) {
                    out.push_back("capacity exceeded on " + node + " at " + where(e));
                }
            } else if (e.kind == "evict") {
                auto pod = e.at("pod");
                unbind(pod);
                awaiting_requeue.insert(pod);
            } else if (e.kind == "pending") {
                awaiting_requeue.erase(e.at("pod"));
            } else if (e.kind == "pod_terminated") {
                auto pod = e.at("pod");
                unbind(pod);
                awaiting_requeue.erase(pod);
            } else if (e.kind == "preempt") {
                auto pod = e.at("pod");
                auto victims = e.at("victims");
                std::size_t pos = 0;
                while (pos <= victims.size()) {
                    auto end = victims.find(',', pos);
                    if (end == std::string::npos) end = victims.size();
                    auto v = victims.substr(pos, end - pos);
                    if (!v.empty() && v != "-" && priority[v] >= priority[pod]) {
                        out.push_back("preemption strictness: " + pod + " preempted " + v + " at " + where(e));
                    }
                    pos = end + 1;
                }
            }
        } catch (const std::exception& ex) {
            out.push_back("malformed " + e.kind + " event at " + where(e) + ": " + ex.what());
        }
    }
    close_tick(tick);
    return out;
}

struct VerifyReport {
    std::optional<std::uint64_t> divergence_seq;
    std::vector<std::string> violations;

    [[nodiscard]] bool ok() const { return violations.empty(); }
};

/// Re-runs the scenario, compares the recorded events line by line and
/// checks the invariant suite on the recorded trace.
inline VerifyReport verify_trace(const Trace& trace, const Scenario& scenario) {
    auto expected_hash = scenario_hash(scenario);
    if (trace.header.scenario_hash != expected_hash) throw HashMismatch(trace.header.scenario_hash, expected_hash);

    VerifyReport report;
    auto rerun = run(scenario).trace;
    const auto n = std::min(trace.events.size(), rerun.events.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (format_event(trace.events[i]) != format_event(rerun.events[i])) {
            report.divergence_seq = trace.events[i].seq;
            report.violations.push_back("divergence at seq " + std::to_string(trace.events[i].seq) + ": recorded '" +
                                        format_event(trace.events[i]) + "', replay '" +
                                        format_event(rerun.events[i]) + "'");
            break;
        }
    }
    if (!report.divergence_seq && trace.events.size() != rerun.events.size()) {
        report.divergence_seq = n;
        report.violations.push_back("event count differs: recorded " + std::to_string(trace.events.size()) +
                                    ", replay " + std::to_string(rerun.events.size()));
    }
    for (auto& v : check_trace_invariants(trace, scenario)) report.violations.push_back(std::move(v));
    return report;
}

}  // namespace aclsim
