// Command-line front end: run, verify and summarize simulations.

#include <aclsim/aclsim.hpp>

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitScenario = 2;
constexpr int kExitVerify = 3;

struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct RunInputs {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> ticks;
    std::string events_file;
};

aclsim::Scenario load(const RunInputs& in) {
    auto text = aclsim::builtin_scenario(in.scenario);
    auto s = aclsim::load_scenario(text ? *text : read_file(in.scenario));
    if (s.name.empty()) s.name = in.scenario;
    if (in.seed) s.seed = *in.seed;
    if (in.ticks) {
        if (*in.ticks <= 0) throw aclsim::ValidationError("ticks", "must be positive");
        s.ticks = *in.ticks;
    }
    if (!in.events_file.empty()) aclsim::merge_events(s, read_file(in.events_file));
    return s;
}

void add_run_options(CLI::App* cmd, RunInputs& in) {
    cmd->add_option("--seed", in.seed, "Override the scenario seed");
    cmd->add_option("--ticks", in.ticks, "Override the number of ticks");
    cmd->add_option("--events", in.events_file, "YAML file with extra injected events");
}

int cmd_run(const RunInputs& in, const std::string& out_path) {
    auto scenario = load(in);
    auto result = aclsim::run(scenario);
    if (out_path.empty() || out_path == "-") {
        aclsim::write_trace(std::cout, result.trace);
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
        aclsim::write_trace(out, result.trace);
        const auto& m = result.metrics;
        std::cerr << "wrote " << result.trace.events.size() << " events to " << out_path << "\n"
                  << "conflicts: contention " << m.conflicts_of("ResourceContention") << ", interference "
                  << m.conflicts_of("Interference") << "; bindings " << m.bindings << ", evictions " << m.evictions
                  << ", reschedules " << m.reschedules << ", preemptions " << m.preemptions << "\n";
    }
    return 0;
}

int cmd_verify(const std::string& trace_path, const RunInputs& in) {
    auto scenario = load(in);
    std::ifstream file(trace_path, std::ios::binary);
    if (!file) throw ScenarioError("cannot read '" + trace_path + "'");
    auto trace = aclsim::read_trace(file);
    aclsim::VerifyReport report;
    try {
        report = aclsim::verify_trace(trace, scenario);
    } catch (const aclsim::HashMismatch& e) {
        std::cerr << "hash mismatch: " << e.what() << "\n";
        return kExitVerify;
    }
    if (report.ok()) {
        std::cout << "ok: " << trace.events.size() << " events replayed, no violations\n";
        return 0;
    }
    for (const auto& v : report.violations) std::cout << "violation: " << v << "\n";
    return kExitVerify;
}

int cmd_summarize(const std::string& trace_path) {
    std::ifstream file(trace_path, std::ios::binary);
    if (!file) throw ScenarioError("cannot read '" + trace_path + "'");
    std::cout << aclsim::summarize(aclsim::read_trace(file));
    return 0;
}

int cmd_release(const std::string& acl, std::int64_t tick, const std::string& events_path) {
    YAML::Node root;
    if (std::filesystem::exists(events_path)) root = YAML::LoadFile(events_path);
    if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
    YAML::Node entry;
    entry["tick"] = tick;
    entry["type"] = "release";
    entry["acl"] = acl;
    root["events"].push_back(entry);
    std::ofstream out(events_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + events_path + "'");
    out << root << "\n";
    std::cout << "release of " << acl << " at tick " << tick << " added to " << events_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-agent control loop simulator"};
    app.require_subcommand(1);

    RunInputs run_in;
    std::string out_path;
    auto* run = app.add_subcommand("run", "Run a scenario and write its trace");
    run->add_option("scenario", run_in.scenario, "Built-in scenario name or scenario file")->required();
    run->add_option("--out", out_path, "Trace output file (stdout when omitted)");
    add_run_options(run, run_in);

    RunInputs verify_in;
    std::string verify_trace_path;
    auto* verify = app.add_subcommand("verify", "Replay a scenario and compare against a trace");
    verify->add_option("trace", verify_trace_path, "Trace file")->required();
    verify->add_option("scenario", verify_in.scenario, "Built-in scenario name or scenario file")->required();
    add_run_options(verify, verify_in);

    std::string summary_path;
    auto* summarize = app.add_subcommand("summarize", "Print placement tables from a trace");
    summarize->add_option("trace", summary_path, "Trace file")->required();

    auto* list = app.add_subcommand("list-scenarios", "List built-in scenarios");

    std::string release_acl;
    std::int64_t release_tick = 0;
    std::string release_events;
    auto* release = app.add_subcommand("release", "Schedule reinstatement of a suspended agent");
    release->add_option("acl", release_acl, "Agent id")->required();
    release->add_option("--tick", release_tick, "Tick at which the release applies")->required();
    release->add_option("--events", release_events, "Events file to append to")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*run) return cmd_run(run_in, out_path);
        if (*verify) return cmd_verify(verify_trace_path, verify_in);
        if (*summarize) return cmd_summarize(summary_path);
        if (*list) {
            for (const auto& [name, text] : aclsim::builtin_scenarios()) std::cout << name << "\n";
            return 0;
        }
        if (*release) return cmd_release(release_acl, release_tick, release_events);
    } catch (const aclsim::ParseError& e) {
        std::cerr << "scenario parse error: " << e.what() << "\n";
        return kExitScenario;
    } catch (const aclsim::ValidationError& e) {
        std::cerr << "scenario validation error: " << e.what() << "\n";
        return kExitScenario;
    } catch (const ScenarioError& e) {
        std::cerr << e.what() << "\n";
        return kExitScenario;
    } catch (const aclsim::TraceFormatError& e) {
        std::cerr << "bad trace: " << e.what() << "\n";
        return kExitVerify;
    } catch (const YAML::Exception& e) {
        std::cerr << "events file error: " << e.what() << "\n";
        return kExitScenario;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
