#pragma once

#include <aclsim/trace.hpp>

#include <algorithm>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

namespace aclsim {

namespace detail {

struct PodRow {
    std::string owner = "-";
    std::string status = "Pending";
    std::string node = "<none>";
};

inline std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

inline std::string pod_table(const std::map<std::string, PodRow>& rows) {
    std::size_t w_name = 4, w_owner = 3, w_status = 6;
    for (const auto& [name, r] : rows) {
        w_name = std::max(w_name, name.size());
        w_owner = std::max(w_owner, r.owner.size());
        w_status = std::max(w_status, r.status.size());
    }
    std::string out = "  " + pad("NAME", w_name + 2) + pad("ACL", w_owner + 2) + pad("STATUS", w_status + 2) + "NODE\n";
    for (const auto& [name, r] : rows) {
        out += "  " + pad(name, w_name + 2) + pad(r.owner, w_owner + 2) + pad(r.status, w_status + 2) + r.node + "\n";
    }
    return out;
}

}  // namespace detail

/// Renders pod placement tables, one per tick whose placements changed, then
/// the conflict log.
inline std::string summarize(const Trace& trace) {
    std::map<std::string, detail::PodRow> rows;
    std::string out = "scenario " + hash_hex(trace.header.scenario_hash) + " seed " +
                      std::to_string(trace.header.seed) + " ticks " + std::to_string(trace.header.ticks) + "\n";
    std::vector<std::string> conflicts;

    bool changed = false;
    std::int64_t tick = trace.events.empty() ? 0 : trace.events.front().tick;
    auto flush = [&](std::int64_t t) {
        if (!changed) return;
        out += "\ntick " + std::to_string(t) + "\n" + detail::pod_table(rows);
        changed = false;
    };
    for (const auto& e : trace.events) {
        if (e.tick != tick) {
            flush(tick);
            tick = e.tick;
        }
        if (e.kind == "pod_created") {
            rows[e.at("pod")] = {e.at("acl"), "Pending", "<none>"};
            changed = true;
        } else if (e.kind == "bind" || e.kind == "place") {
            auto& r = rows[e.at("pod")];
            r.status = "Running";
            r.node = e.at("node");
            changed = true;
        } else if (e.kind == "evict") {
            auto& r = rows[e.at("pod")];
            r.status = "Evicted";
            r.node = "<none>";
            changed = true;
        } else if (e.kind == "pod_terminated") {
            rows[e.at("pod")].status = "Terminated";
            rows[e.at("pod")].node = "<none>";
            changed = true;
        } else if (e.kind == "conflict") {
            conflicts.push_back("  tick " + std::to_string(e.tick) + " " + e.at("id") + " " + e.at("type") + " at " +
                                e.at("level") + " participants " + e.at("participants") + " targets " +
                                e.at("targets"));
        } else if (e.kind == "resolve") {
            std::string line = "  tick " + std::to_string(e.tick) + " " + e.at("id") + " " + e.at("resolution") + "(" +
                               e.at("acl") + ")";
            if (auto until = e.get("until")) line += " until " + *until;
            conflicts.push_back(line + " at " + e.at("level"));
        }
    }
    flush(tick);
    if (!conflicts.empty()) {
        out += "\nconflicts\n";
        for (const auto& c : conflicts) out += c + "\n";
    }
    return out;
}

}  // namespace aclsim
