#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace aclsim {

// Two slice ACLs both want their pod on edge-waterloo, which only has room
// for one. ACL1 (priority 10) gets the node, ACL2 (priority 5) lands on the
// core.
inline constexpr std::string_view kCase1Scenario = R"(name: case1
seed: 1
ticks: 4
topology:
  - {id: core-toronto, region: toronto, cpu: 8000, memory: 16384}
  - {id: edge-calgary, region: calgary, cpu: 2000, memory: 4096}
  - {id: edge-waterloo, region: waterloo, cpu: 2000, memory: 4096}
priority_levels:
  - {name: acl1, value: 10, preemption: true}
  - {name: acl2, value: 5, preemption: true}
agents:
  - {id: ACL1, role: slice, priority: acl1, scope: [{node: edge-waterloo}]}
  - {id: ACL2, role: slice, priority: acl2, scope: [{node: edge-waterloo}]}
events:
  - tick: 1
    type: slice_request
    acl: ACL1
    name: acl1-pod
    pods: [{cpu: 1500, memory: 3072, node: edge-waterloo}]
  - tick: 1
    type: slice_request
    acl: ACL2
    name: acl2-pod
    pods: [{cpu: 1500, memory: 3072, node: edge-waterloo}]
)";

// edge-waterloo is full with ACL2 and ACL3 pods when it is tainted NoExecute
// for ACL1 and ACL1 asks for its pod there. edge-calgary prefers ACL1 and
// ACL2 pods but keeps its running ACL3 pod.
inline constexpr std::string_view kCase2Scenario = R"(name: case2
seed: 1
ticks: 4
topology:
  - {id: core-toronto, region: toronto, cpu: 8000, memory: 16384}
  - id: edge-calgary
    region: calgary
    cpu: 2000
    memory: 4096
    taints:
      - {key: ACL1, effect: PreferNoSchedule}
      - {key: ACL2, effect: PreferNoSchedule}
  - {id: edge-waterloo, region: waterloo, cpu: 2000, memory: 4096}
priority_levels:
  - {name: acl1, value: 10, preemption: true}
  - {name: acl2, value: 5, preemption: true}
  - {name: acl3, value: 1, preemption: true}
agents:
  - {id: ACL1, role: slice, priority: acl1, scope: [{node: edge-waterloo}]}
  - {id: ACL2, role: slice, priority: acl2, scope: [{node: edge-waterloo}]}
  - {id: ACL3, role: slice, priority: acl3, scope: [{node: edge-waterloo}]}
pods:
  - {id: acl2-pod, owner: ACL2, cpu: 1000, memory: 2048, node: edge-waterloo}
  - {id: acl3-pod, owner: ACL3, cpu: 1000, memory: 2048, node: edge-waterloo}
  - {id: acl3-calgary, owner: ACL3, cpu: 500, memory: 1024, node: edge-calgary}
events:
  - {tick: 1, type: taint, node: edge-waterloo, key: ACL1, effect: NoExecute}
  - tick: 1
    type: slice_request
    acl: ACL1
    name: acl1-pod
    pods: [{cpu: 1500, memory: 3072, node: edge-waterloo}]
)";

// RAN (Macro, two Calgary nodes) and Core (Micro, Toronto) scale down at
// tick 7 while the end-to-end slice ACL (Mega) instantiates a chain on the
// same nodes. Two container-level ACLs clash on edge-calgary-1 at tick 3, a
// purely regional conflict.
inline constexpr std::string_view kThreeAclConflictScenario = R"(name: three-acl-conflict
seed: 7
ticks: 15
topology:
  - {id: core-toronto, region: toronto, cpu: 8000, memory: 16384}
  - {id: edge-calgary-1, region: calgary, cpu: 2000, memory: 4096}
  - {id: edge-calgary-2, region: calgary, cpu: 2000, memory: 4096}
  - {id: edge-waterloo, region: waterloo, cpu: 2000, memory: 4096}
priority_levels:
  - {name: slice, value: 10, preemption: true}
  - {name: domain, value: 5, preemption: true, global_default: true}
  - {name: femto-high, value: 3}
  - {name: femto-low, value: 2}
agents:
  - id: core
    role: resource
    scope: [{node: core-toronto}]
    period: 10
    offset: 7
  - id: femto-a
    role: slice
    priority: femto-high
    scope: [{container: cnf-a, host: edge-calgary-1}]
  - id: femto-b
    role: slice
    priority: femto-low
    scope: [{container: cnf-b, host: edge-calgary-1}]
  - id: ran
    role: resource
    scope: [{node: edge-calgary-1}, {node: edge-calgary-2}]
    period: 10
    offset: 7
  - id: slice
    role: slice
    priority: slice
    scope: e2e
traffic:
  default: {base: 2}
pods:
  - {id: ran-a, owner: ran, cpu: 500, memory: 1024, node: edge-calgary-1}
  - {id: ran-b, owner: ran, cpu: 500, memory: 1024, node: edge-calgary-2}
  - {id: core-a, owner: core, cpu: 1000, memory: 2048, node: core-toronto}
  - {id: core-b, owner: core, cpu: 1000, memory: 2048, node: core-toronto}
events:
  - tick: 3
    type: slice_request
    acl: femto-a
    name: cnf-a
    pods: [{cpu: 1500, memory: 3072, node: edge-calgary-1}]
  - tick: 3
    type: slice_request
    acl: femto-b
    name: cnf-b
    pods: [{cpu: 1500, memory: 3072, node: edge-calgary-1}]
  - tick: 7
    type: slice_request
    acl: slice
    name: embb
    pods:
      - {id: embb-ran, cpu: 500, memory: 1024, node: edge-calgary-2}
      - {id: embb-core, cpu: 1000, memory: 2048, node: core-toronto}
)";

// An energy ACL powers off an idle node and a load balancer powers it back
// on, again and again.
inline constexpr std::string_view kPingpongScenario = R"(name: pingpong
seed: 3
ticks: 25
topology:
  - {id: edge-node, region: edge, cpu: 2000, memory: 4096}
priority_levels:
  - {name: energy, value: 3}
  - {name: balancer, value: 7}
agents:
  - id: balancer
    role: balancer
    priority: balancer
    scope: [{node: edge-node}]
    policy: {units_per_node: 100}
  - id: energy
    role: energy
    priority: energy
    scope: [{node: edge-node}]
    policy: {idle_ticks: 5}
traffic:
  default: {base: 50}
icm: {window_ticks: 10, toggle_threshold: 3, cooldown: 10}
)";

inline const std::map<std::string, std::string_view>& builtin_scenarios() {
    static const std::map<std::string, std::string_view> table{
        {"case1", kCase1Scenario},
        {"case2", kCase2Scenario},
        {"pingpong", kPingpongScenario},
        {"three-acl-conflict", kThreeAclConflictScenario},
    };
    return table;
}

inline std::optional<std::string> builtin_scenario(const std::string& name) {
    const auto& table = builtin_scenarios();
    auto it = table.find(name);
    if (it == table.end()) return std::nullopt;
    return std::string(it->second);
}

}  // namespace aclsim
