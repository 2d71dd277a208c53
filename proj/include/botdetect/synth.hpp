#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "botdetect/dataset.hpp"

namespace botdetect {

// Log-normal marginal matched to a mean and a coefficient of variation.
struct FeatureDistribution {
    double mean = 1.0;
    double cv = 1.0;

    bool operator==(const FeatureDistribution&) const = default;
};

struct ClassProfile {
    // Keyed by one of sampled_fields(); every key must be present.
    std::map<std::string, FeatureDistribution> features;
    // Token -> relative weight.
    std::map<std::string, double> proto;
    std::map<std::string, double> state;

    bool operator==(const ClassProfile&) const = default;
};

struct TrafficProfile {
    ClassProfile normal;
    ClassProfile botnet;
    double class_ratio = 0.995;  // fraction of botnet rows
    std::size_t row_count = 50000;
    std::uint64_t seed = 0;

    // Throws ConfigError naming the first violated invariant.
    void validate() const;

    // Per-class BoT-IoT means for pkts, rate, srate, drate, dur, spkts and
    // dpkts; byte counts and token mixes are artifact choices. cv 1.0 throughout.
    static TrafficProfile default_profile();
    static TrafficProfile load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    bool operator==(const TrafficProfile&) const = default;
};

// Fields drawn directly; pkts and bytes are derived as sums.
std::span<const std::string_view> sampled_fields();
bool is_count_field(std::string_view name);

// Mean of the derived pkts/bytes field for a class (sum of its parts).
double derived_mean(const ClassProfile& profile, std::string_view field);

// Exactly round_half_up(class_ratio * row_count) botnet rows, placed by
// sequential sampling without replacement. Count fields are stochastically
// rounded to integers (unbiased). pkts = spkts + dpkts, bytes = sbytes + dbytes.
void generate(const TrafficProfile& profile, const std::function<void(const FlowRecord&)>& sink);
std::vector<FlowRecord> generate(const TrafficProfile& profile);

}  // namespace botdetect
