#include "botdetect/synth.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "botdetect/random.hpp"

namespace botdetect {

namespace {

constexpr std::array<std::string_view, 8> kSampled = {
    "dur", "spkts", "dpkts", "sbytes", "dbytes", "rate", "srate", "drate"};

struct ClassSampler {
    std::array<std::lognormal_distribution<double>, kSampled.size()> dists;
    std::vector<std::string> proto_tokens;
    std::discrete_distribution<std::size_t> proto;
    std::vector<std::string> state_tokens;
    std::discrete_distribution<std::size_t> state;

    explicit ClassSampler(const ClassProfile& p) {
        for (std::size_t f = 0; f < kSampled.size(); ++f) {
            const auto& spec = p.features.at(std::string(kSampled[f]));
            const double sigma2 = std::log1p(spec.cv * spec.cv);
            dists[f] = std::lognormal_distribution<double>(std::log(spec.mean) - 0.5 * sigma2,
                                                           std::sqrt(sigma2));
        }
        std::vector<double> w;
        for (const auto& [tok, weight] : p.proto) {
            proto_tokens.push_back(tok);
            w.push_back(weight);
        }
        proto = std::discrete_distribution<std::size_t>(w.begin(), w.end());
        w.clear();
        for (const auto& [tok, weight] : p.state) {
            state_tokens.push_back(tok);
            w.push_back(weight);
        }
        state = std::discrete_distribution<std::size_t>(w.begin(), w.end());
    }
};

double stochastic_round(double x, Rng& rng) {
    const double base = std::floor(x);
    return base + (uniform01(rng) < x - base ? 1.0 : 0.0);
}

void validate_class(const ClassProfile& p, const std::string& which) {
    for (auto f : kSampled) {
        const auto it = p.features.find(std::string(f));
        if (it == p.features.end())
            throw ConfigError(which + " profile lacks feature '" + std::string(f) + "'");
        if (!(it->second.mean > 0.0) || !std::isfinite(it->second.mean))
            throw ConfigError(which + " mean of '" + std::string(f) + "' must be positive");
        if (!(it->second.cv >= 0.0) || !std::isfinite(it->second.cv))
            throw ConfigError(which + " cv of '" + std::string(f) + "' must be non-negative");
    }
    for (const auto* tokens : {&p.proto, &p.state}) {
        double total = 0.0;
        for (const auto& [tok, w] : *tokens) {
            if (!(w >= 0.0)) throw ConfigError(which + " token weight for '" + tok + "' is negative");
            total += w;
        }
        if (!(total > 0.0)) throw ConfigError(which + " profile needs positive proto/state weights");
    }
}

nlohmann::json class_to_json(const ClassProfile& p) {
    nlohmann::json feats = nlohmann::json::object();
    for (const auto& [name, d] : p.features) feats[name] = {{"mean", d.mean}, {"cv", d.cv}};
    return {{"features", feats}, {"proto", p.proto}, {"state", p.state}};
}

ClassProfile class_from_json(const nlohmann::json& j, double default_cv) {
    ClassProfile p;
    for (const auto& [name, d] : j.at("features").items())
        p.features[name] = {d.at("mean").get<double>(), d.value("cv", default_cv)};
    p.proto = j.at("proto").get<std::map<std::string, double>>();
    p.state = j.at("state").get<std::map<std::string, double>>();
    return p;
}

}  // namespace

std::span<const std::string_view> sampled_fields() { return kSampled; }

bool is_count_field(std::string_view name) {
    return name == "spkts" || name == "dpkts" || name == "sbytes" || name == "dbytes";
}

double derived_mean(const ClassProfile& profile, std::string_view field) {
    if (field == "pkts") return profile.features.at("spkts").mean + profile.features.at("dpkts").mean;
    if (field == "bytes") return profile.features.at("sbytes").mean + profile.features.at("dbytes").mean;
    return profile.features.at(std::string(field)).mean;
}

void TrafficProfile::validate() const {
    if (!(class_ratio > 0.0 && class_ratio < 1.0))
        throw ConfigError("class_ratio must lie strictly between 0 and 1");
    validate_class(normal, "normal");
    validate_class(botnet, "botnet");
}

TrafficProfile TrafficProfile::default_profile() {
    TrafficProfile p;
    p.normal.features = {
        {"dur", {72.85, 1.0}},     {"spkts", {1106.28, 1.0}}, {"dpkts", {403.11, 1.0}},
        {"sbytes", {88502.0, 1.0}}, {"dbytes", {403110.0, 1.0}}, {"rate", {31.23, 1.0}},
        {"srate", {84.1, 1.0}},    {"drate", {0.40, 1.0}}};
    p.botnet.features = {
        {"dur", {6.79, 1.0}},    {"spkts", {2.15, 1.0}},   {"dpkts", {1.46, 1.0}},
        {"sbytes", {193.5, 1.0}}, {"dbytes", {87.6, 1.0}},  {"rate", {7450.0, 1.0}},
        {"srate", {598.38, 1.0}}, {"drate", {440.84, 1.0}}};
    p.normal.proto = {{"tcp", 0.60}, {"udp", 0.30}, {"arp", 0.05}, {"icmp", 0.05}};
    p.botnet.proto = {{"udp", 0.55}, {"tcp", 0.40}, {"icmp", 0.05}};
    p.normal.state = {{"CON", 0.50}, {"FIN", 0.25}, {"RST", 0.15}, {"INT", 0.10}};
    p.botnet.state = {{"INT", 0.45}, {"CON", 0.30}, {"REQ", 0.20}, {"RST", 0.05}};
    p.class_ratio = 0.995;
    p.row_count = 50000;
    p.seed = 13;
    return p;
}

TrafficProfile TrafficProfile::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open profile '" + path.string() + "'");
    TrafficProfile p;
    try {
        const auto j = nlohmann::json::parse(in);
        const double default_cv = j.value("default_cv", 1.0);
        p.normal = class_from_json(j.at("normal"), default_cv);
        p.botnet = class_from_json(j.at("botnet"), default_cv);
        p.class_ratio = j.at("class_ratio").get<double>();
        p.row_count = j.at("row_count").get<std::size_t>();
        p.seed = j.value("seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("profile '" + path.string() + "': " + e.what());
    }
    p.validate();
    return p;
}

void TrafficProfile::save(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["class_ratio"] = class_ratio;
    j["row_count"] = row_count;
    j["seed"] = seed;
    j["normal"] = class_to_json(normal);
    j["botnet"] = class_to_json(botnet);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

void generate(const TrafficProfile& profile, const std::function<void(const FlowRecord&)>& sink) {
    profile.validate();
    Rng rng(profile.seed);
    std::array<ClassSampler, 2> samplers = {ClassSampler(profile.normal), ClassSampler(profile.botnet)};

    std::size_t botnet_left = static_cast<std::size_t>(
        std::floor(profile.class_ratio * static_cast<double>(profile.row_count) + 0.5));
    for (std::size_t remaining = profile.row_count; remaining > 0; --remaining) {
        const bool botnet = uniform_index(rng, remaining) < botnet_left;
        if (botnet) --botnet_left;
        auto& s = samplers[botnet ? 1 : 0];

        std::array<double, kSampled.size()> v{};
        for (std::size_t f = 0; f < kSampled.size(); ++f) {
            v[f] = s.dists[f](rng);
            if (is_count_field(kSampled[f])) v[f] = stochastic_round(v[f], rng);
        }
        FlowRecord r;
        r.dur = v[0];
        r.spkts = v[1];
        r.dpkts = v[2];
        r.sbytes = v[3];
        r.dbytes = v[4];
        r.rate = v[5];
        r.srate = v[6];
        r.drate = v[7];
        r.pkts = v[1] + v[2];
        r.bytes = v[3] + v[4];
        r.proto = s.proto_tokens[s.proto(rng)];
        r.state = s.state_tokens[s.state(rng)];
        r.attack = botnet ? kBotnet : kNormal;
        sink(r);
    }
}

std::vector<FlowRecord> generate(const TrafficProfile& profile) {
    std::vector<FlowRecord> out;
    out.reserve(profile.row_count);
    generate(profile, [&](const FlowRecord& r) { out.push_back(r); });
    return out;
}

}  // namespace botdetect
