#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "botdetect/synth.hpp"
#include "test_support.hpp"

using namespace botdetect;

namespace {

TrafficProfile small_profile(std::size_t rows, double ratio, std::uint64_t seed) {
    auto p = TrafficProfile::default_profile();
    p.row_count = rows;
    p.class_ratio = ratio;
    p.seed = seed;
    return p;
}

}  // namespace

TEST(Synth, ExactBotnetCount) {
    const auto rows = generate(small_profile(10000, 0.995, 1));
    ASSERT_EQ(rows.size(), 10000u);
    std::size_t bot = 0;
    for (const auto& r : rows) bot += *r.attack == kBotnet;
    EXPECT_EQ(bot, 9950u);
    const auto odd = generate(small_profile(7, 0.5, 1));
    bot = 0;
    for (const auto& r : odd) bot += *r.attack == kBotnet;
    EXPECT_EQ(bot, 4u);  // 3.5 rounds half up
}

TEST(Synth, RecordInvariants) {
    const auto p = small_profile(3000, 0.7, 2);
    for (const auto& r : generate(p)) {
        ASSERT_TRUE(r.pkts && r.bytes && r.dur && r.spkts && r.dpkts && r.sbytes && r.dbytes && r.rate &&
                    r.srate && r.drate && r.proto && r.state && r.attack);
        EXPECT_EQ(*r.pkts, *r.spkts + *r.dpkts);
        EXPECT_EQ(*r.bytes, *r.sbytes + *r.dbytes);
        for (double v : {*r.spkts, *r.dpkts, *r.sbytes, *r.dbytes}) {
            EXPECT_EQ(v, std::floor(v));
            EXPECT_GE(v, 0.0);
        }
        EXPECT_GT(*r.dur, 0.0);
        const auto& cls = *r.attack == kBotnet ? p.botnet : p.normal;
        EXPECT_TRUE(cls.proto.contains(*r.proto));
        EXPECT_TRUE(cls.state.contains(*r.state));
    }
}

TEST(Synth, ClassMeansWithinThreeStandardErrors) {
    const auto p = small_profile(50000, 0.995, 3);
    std::map<std::string, double> sum[2], sumsq[2];
    std::size_t count[2] = {0, 0};
    for (const auto& r : generate(p)) {
        const int c = *r.attack;
        ++count[c];
        for (auto f : sampled_fields()) {
            const double v = std::get<double>(r.cell(f));
            sum[c][std::string(f)] += v;
        }
        sum[c]["pkts"] += *r.pkts;
        sum[c]["bytes"] += *r.bytes;
    }
    for (int c = 0; c < 2; ++c) {
        const auto& cls = c == kBotnet ? p.botnet : p.normal;
        const double n = static_cast<double>(count[c]);
        for (auto f : sampled_fields()) {
            const auto& dist = cls.features.at(std::string(f));
            // Stochastic rounding adds at most 1/4 to the variance.
            const double var = std::pow(dist.mean * dist.cv, 2) + (is_count_field(f) ? 0.25 : 0.0);
            const double se = std::sqrt(var / n);
            EXPECT_NEAR(sum[c][std::string(f)] / n, dist.mean, 3 * se) << f << " class " << c;
        }
        for (std::string f : {"pkts", "bytes"}) {
            const std::string a = f == "pkts" ? "spkts" : "sbytes";
            const std::string b = f == "pkts" ? "dpkts" : "dbytes";
            const double va = std::pow(cls.features.at(a).mean * cls.features.at(a).cv, 2) + 0.25;
            const double vb = std::pow(cls.features.at(b).mean * cls.features.at(b).cv, 2) + 0.25;
            EXPECT_EQ(derived_mean(cls, f), cls.features.at(a).mean + cls.features.at(b).mean);
            EXPECT_NEAR(sum[c][f] / n, derived_mean(cls, f), 3 * std::sqrt((va + vb) / n)) << f;
        }
    }
}

TEST(Synth, BundledProfileMatchesBuiltIn) {
    const auto p = TrafficProfile::load(std::filesystem::path(BOTDETECT_DATA_DIR) / "paper-fig13.profile");
    EXPECT_EQ(p, TrafficProfile::default_profile());
}

TEST(Synth, SeedControlsOutput) {
    const auto a = generate(small_profile(500, 0.9, 4));
    const auto b = generate(small_profile(500, 0.9, 4));
    const auto c = generate(small_profile(500, 0.9, 5));
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
    std::vector<FlowRecord> streamed;
    generate(small_profile(500, 0.9, 4), [&](const FlowRecord& r) { streamed.push_back(r); });
    EXPECT_EQ(streamed, a);
}

TEST(Synth, ProfileRoundTripAndDefaultCv) {
    botdetect::testing::TempDir dir("profile");
    const auto p = small_profile(123, 0.25, 77);
    p.save(dir / "p.json");
    EXPECT_EQ(TrafficProfile::load(dir / "p.json"), p);

    // A feature without an explicit cv takes default_cv.
    auto j = nlohmann::json::parse(botdetect::testing::read_file(dir / "p.json"));
    j["default_cv"] = 0.25;
    j["normal"]["features"]["dur"].erase("cv");
    botdetect::testing::write_file(dir / "q.json", j.dump());
    const auto q = TrafficProfile::load(dir / "q.json");
    EXPECT_EQ(q.normal.features.at("dur").cv, 0.25);
    EXPECT_EQ(q.normal.features.at("rate").cv, 1.0);
}

TEST(Synth, InvalidProfilesAreRejected) {
    auto p = TrafficProfile::default_profile();
    p.class_ratio = 1.0;
    EXPECT_THROW(p.validate(), ConfigError);
    p = TrafficProfile::default_profile();
    p.normal.features["dur"].mean = -1;
    EXPECT_THROW(p.validate(), ConfigError);
    p = TrafficProfile::default_profile();
    p.botnet.features.erase("rate");
    EXPECT_THROW(p.validate(), ConfigError);
    p = TrafficProfile::default_profile();
    p.botnet.proto = {{"tcp", 0.0}};
    EXPECT_THROW(p.validate(), ConfigError);
    p = TrafficProfile::default_profile();
    p.normal.features["srate"].cv = -0.5;
    EXPECT_THROW(generate(p), ConfigError);

    botdetect::testing::TempDir dir("badprofile");
    botdetect::testing::write_file(dir / "x.json", "{\"class_ratio\": 0.5}");
    EXPECT_THROW(TrafficProfile::load(dir / "x.json"), ConfigError);
    EXPECT_THROW(TrafficProfile::load(dir / "missing.json"), IoError);
}
