#pragma once

#include <aclsim/cluster.hpp>
#include <aclsim/rng.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>

namespace aclsim {

/// Per-region offered load: a sinusoid around `base` plus gaussian noise.
struct TrafficProfile {
    double base = 10.0;
    double amplitude = 0.0;
    double period_ticks = 24.0;
    double phase_ticks = 0.0;
    double noise_stddev = 0.0;

    /// Noise-free mean at a tick; this is the ground truth predictors chase.
    [[nodiscard]] double mean_at(std::int64_t tick) const {
        double angle = 2.0 * std::numbers::pi * (static_cast<double>(tick) + phase_ticks) / period_ticks;
        return std::max(0.0, base + amplitude * std::sin(angle));
    }

    friend bool operator==(const TrafficProfile&, const TrafficProfile&) = default;
};

/// Generates one sample per region per tick from per-region substreams.
class TrafficGenerator {
public:
    TrafficGenerator(std::uint64_t seed, TrafficProfile fallback, std::map<RegionId, TrafficProfile> profiles)
        : seed_(seed), fallback_(fallback), profiles_(std::move(profiles)) {}

    [[nodiscard]] const TrafficProfile& profile(const RegionId& region) const {
        auto it = profiles_.find(region);
        return it == profiles_.end() ? fallback_ : it->second;
    }

    double sample(const RegionId& region, std::int64_t tick) {
        auto it = streams_.find(region);
        if (it == streams_.end()) {
            it = streams_.emplace(region, RandomStream::substream(seed_, "traffic:" + region)).first;
        }
        const auto& p = profile(region);
        double noise = p.noise_stddev > 0.0 ? p.noise_stddev * it->second.normal() : 0.0;
        return std::max(0.0, p.mean_at(tick) + noise);
    }

private:
    std::uint64_t seed_;
    TrafficProfile fallback_;
    std::map<RegionId, TrafficProfile> profiles_;
    std::map<RegionId, RandomStream> streams_;
};

}  // namespace aclsim
