#pragma once

#include <aclsim/agent.hpp>
#include <aclsim/builtin_scenarios.hpp>
#include <aclsim/cluster.hpp>
#include <aclsim/icm.hpp>
#include <aclsim/rng.hpp>
#include <aclsim/scenario.hpp>
#include <aclsim/scheduler.hpp>
#include <aclsim/simulator.hpp>
#include <aclsim/summarize.hpp>
#include <aclsim/trace.hpp>
#include <aclsim/traffic.hpp>
#include <aclsim/verify.hpp>
