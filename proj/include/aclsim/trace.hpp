#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace aclsim {

/// One trace record. Field order is part of the format and is preserved.
struct Event {
    std::int64_t tick = 0;
    std::uint64_t seq = 0;
    std::string kind;
    std::vector<std::pair<std::string, std::string>> fields;

    [[nodiscard]] std::optional<std::string> get(std::string_view key) const {
        for (const auto& [k, v] : fields) {
            if (k == key) return v;
        }
        return std::nullopt;
    }

    [[nodiscard]] std::string at(std::string_view key) const {
        auto v = get(key);
        if (!v) throw std::out_of_range("event '" + kind + "' has no field '" + std::string(key) + "'");
        return *v;
    }

    friend bool operator==(const Event&, const Event&) = default;
};

/// Fixed six-decimal rendering so traces compare byte-for-byte.
inline std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string s(buf);
    if (s == "-0.000000") s = "0.000000";
    return s;
}

namespace detail {

inline std::string sanitize(std::string_view v) {
    std::string out(v);
    for (auto& c : out) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '=') c = '_';
    }
    if (out.empty()) out = "-";
    return out;
}

}  // namespace detail

inline std::string format_event(const Event& e) {
    std::string line = "tick=" + std::to_string(e.tick) + " seq=" + std::to_string(e.seq) + " kind=" + e.kind;
    for (const auto& [k, v] : e.fields) {
        line += ' ';
        line += k;
        line += '=';
        line += detail::sanitize(v);
    }
    return line;
}

class TraceFormatError : public std::runtime_error {
public:
    TraceFormatError(std::size_t line, const std::string& what)
        : std::runtime_error("trace line " + std::to_string(line) + ": " + what), line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

namespace detail {

template <typename T>
T parse_number(std::string_view s, std::size_t line) {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw TraceFormatError(line, "bad number '" + std::string(s) + "'");
    }
    return v;
}

inline std::vector<std::pair<std::string, std::string>> split_pairs(std::string_view text, std::size_t line) {
    std::vector<std::pair<std::string, std::string>> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find(' ', pos);
        if (end == std::string_view::npos) end = text.size();
        auto token = text.substr(pos, end - pos);
        pos = end + 1;
        if (token.empty()) continue;
        auto eq = token.find('=');
        if (eq == std::string_view::npos) throw TraceFormatError(line, "token without '=': " + std::string(token));
        out.emplace_back(std::string(token.substr(0, eq)), std::string(token.substr(eq + 1)));
    }
    return out;
}

}  // namespace detail

inline Event parse_event(std::string_view text, std::size_t line = 0) {
    auto pairs = detail::split_pairs(text, line);
    if (pairs.size() < 3 || pairs[0].first != "tick" || pairs[1].first != "seq" || pairs[2].first != "kind") {
        throw TraceFormatError(line, "event must start with tick, seq, kind");
    }
    Event e;
    e.tick = detail::parse_number<std::int64_t>(pairs[0].second, line);
    e.seq = detail::parse_number<std::uint64_t>(pairs[1].second, line);
    e.kind = pairs[2].second;
    e.fields.assign(pairs.begin() + 3, pairs.end());
    return e;
}

struct TraceHeader {
    int version = 1;
    std::uint64_t scenario_hash = 0;
    std::uint64_t seed = 0;
    std::int64_t ticks = 0;

    friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

inline constexpr std::string_view kTraceMagic = "aclsim-trace";

inline std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string format_header(const TraceHeader& h) {
    return std::string(kTraceMagic) + " version=" + std::to_string(h.version) + " scenario=" +
           hash_hex(h.scenario_hash) + " seed=" + std::to_string(h.seed) + " ticks=" + std::to_string(h.ticks);
}

struct Trace {
    TraceHeader header;
    std::vector<Event> events;

    [[nodiscard]] std::vector<const Event*> of_kind(std::string_view kind) const {
        std::vector<const Event*> out;
        for (const auto& e : events) {
            if (e.kind == kind) out.push_back(&e);
        }
        return out;
    }
};

inline void write_trace(std::ostream& os, const Trace& trace) {
    os << format_header(trace.header) << '\n';
    for (const auto& e : trace.events) os << format_event(e) << '\n';
}

inline std::string trace_to_string(const Trace& trace) {
    std::ostringstream os;
    write_trace(os, trace);
    return os.str();
}

inline Trace read_trace(std::istream& is) {
    Trace trace;
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(is, line)) throw TraceFormatError(1, "empty trace");
    ++lineno;
    std::string_view sv(line);
    if (!sv.starts_with(kTraceMagic)) throw TraceFormatError(1, "missing trace header");
    sv.remove_prefix(kTraceMagic.size());
    for (const auto& [k, v] : detail::split_pairs(sv, 1)) {
        if (k == "version") {
            trace.header.version = detail::parse_number<int>(v, 1);
        } else if (k == "scenario") {
            std::uint64_t h = 0;
            auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), h, 16);
            if (ec != std::errc{} || p != v.data() + v.size()) throw TraceFormatError(1, "bad scenario hash");
            trace.header.scenario_hash = h;
        } else if (k == "seed") {
            trace.header.seed = detail::parse_number<std::uint64_t>(v, 1);
        } else if (k == "ticks") {
            trace.header.ticks = detail::parse_number<std::int64_t>(v, 1);
        }
    }
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        trace.events.push_back(parse_event(line, lineno));
    }
    return trace;
}

/// Append-only event sink assigning sequence numbers.
class EventLog {
public:
    using Fields = std::vector<std::pair<std::string, std::string>>;

    const Event& emit(std::int64_t tick, std::string kind, Fields fields = {}) {
        events_.push_back({tick, next_seq_++, std::move(kind), std::move(fields)});
        return events_.back();
    }

    [[nodiscard]] const std::vector<Event>& events() const { return events_; }
    std::vector<Event> take() { return std::move(events_); }

private:
    std::vector<Event> events_;
    std::uint64_t next_seq_ = 0;
};

}  // namespace aclsim
