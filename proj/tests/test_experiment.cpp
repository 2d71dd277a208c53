#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "botdetect/experiment.hpp"
#include "test_support.hpp"

using namespace botdetect;
namespace fs = std::filesystem;
using botdetect::testing::TempDir;
using botdetect::testing::read_file;

namespace {

fs::path balanced_profile(const TempDir& dir, double ratio) {
    auto p = TrafficProfile::default_profile();
    p.class_ratio = ratio;
    const auto path = dir / "profile.json";
    p.save(path);
    return path;
}

ExperimentConfig small_config(const TempDir& dir, PipelineMode mode) {
    ExperimentConfig c;
    c.profile_path = balanced_profile(dir, 0.8);
    c.synth_rows = 600;
    c.mode = mode;
    c.models = {{.kind = ModelKind::Gnb}, {.kind = ModelKind::Knn, .knn_k = 3}};
    c.cv_folds = 3;
    c.output_dir = dir / "out";
    return c;
}

std::size_t position(const std::vector<std::string>& v, const std::string& s) {
    const auto it = std::find(v.begin(), v.end(), s);
    EXPECT_NE(it, v.end()) << s;
    return static_cast<std::size_t>(it - v.begin());
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = read_file(e.path());
    return files;
}

}  // namespace

TEST(Experiment, StageSeedsAreLabelledOffsets) {
    const auto s = StageSeeds::from_master(42);
    EXPECT_EQ(s.split, 43u);
    EXPECT_EQ(s.smote, 44u);
    EXPECT_EQ(s.cv, 45u);
    EXPECT_EQ(s.mlp, 46u);
    EXPECT_EQ(s.synth, 47u);
}

TEST(Experiment, PaperModeDatasetCounts) {
    TempDir dir("paper");
    ExperimentConfig c;
    c.profile_path = std::filesystem::path(BOTDETECT_DATA_DIR) / "paper-fig13.profile";
    c.synth_rows = 50000;
    c.mode = PipelineMode::Paper;
    c.models = {{.kind = ModelKind::Gnb}};
    c.cv_folds = 0;
    c.output_dir = dir / "out";
    const auto r = run_experiment(c);
    EXPECT_EQ(r.input_counts.botnet, 49750u);
    EXPECT_EQ(r.input_counts.normal, 250u);
    ASSERT_TRUE(r.balanced_counts);
    EXPECT_EQ(r.balanced_counts->botnet, 49750u);
    EXPECT_EQ(r.balanced_counts->normal, 49750u);
    const auto& order = r.stage_order;
    EXPECT_LT(position(order, "normalize:all"), position(order, "smote:all"));
    EXPECT_LT(position(order, "smote:all"), position(order, "split:D1"));
    ASSERT_EQ(r.reports.size(), 2u);
    EXPECT_EQ(r.reports[0].dataset, "D1");
    EXPECT_EQ(r.reports[1].dataset, "D2");
    const auto manifest = nlohmann::json::parse(read_file(dir / "out/manifest.json"));
    EXPECT_EQ(manifest["mode"], "paper");
    const auto counts = nlohmann::json::parse(read_file(dir / "out/class_counts.json"));
    EXPECT_EQ(counts["D1"]["botnet"], 49750);
    EXPECT_EQ(counts["D1"]["normal"], 250);
    EXPECT_EQ(counts["D2"]["botnet"], 49750);
    EXPECT_EQ(counts["D2"]["normal"], 49750);
}

TEST(Experiment, DefaultModeSplitsBeforeFitting) {
    TempDir dir("default");
    const auto c = small_config(dir, PipelineMode::Default);
    const auto r = run_experiment(c);
    const auto& order = r.stage_order;
    EXPECT_LT(position(order, "split"), position(order, "normalize:train"));
    EXPECT_LT(position(order, "normalize:train"), position(order, "score-features"));
    EXPECT_LT(position(order, "score-features"), position(order, "smote:train"));
    EXPECT_EQ(std::count(order.begin(), order.end(), "normalize:all"), 0);
    // Only the training split is balanced; the test split keeps its ratio.
    ASSERT_TRUE(r.balanced_counts);
    EXPECT_EQ(r.balanced_counts->normal, r.balanced_counts->botnet);
    EXPECT_EQ(r.balanced_counts->botnet, 384u);  // 480 botnet rows, 20% held out
    for (const auto& rep : r.reports) {
        ASSERT_TRUE(rep.cv);
        EXPECT_EQ(rep.cv->folds.size(), 3u);
        EXPECT_EQ(rep.confusion.total(), 120u);
    }
    const auto manifest = nlohmann::json::parse(read_file(dir / "out/manifest.json"));
    EXPECT_EQ(manifest["stage_order"].back(), "write-reports");
    for (const char* f : {"class_counts.json", "feature_scores.tsv", "encoding.json", "scaler.json", "summary.txt",
                          "reports/gnb_D1.json", "reports/knn_D2.json", "roc/knn_D1.tsv"})
        EXPECT_TRUE(fs::exists(dir / ("out/" + std::string(f)))) << f;
    EXPECT_FALSE(fs::exists(dir / "out.partial"));
}

TEST(Experiment, RerunIsByteIdentical) {
    TempDir dir("rerun");
    const auto c = small_config(dir, PipelineMode::Default);
    run_experiment(c);
    const auto first = snapshot(c.output_dir);
    run_experiment(c);
    EXPECT_EQ(snapshot(c.output_dir), first);
}

TEST(Experiment, EmptyModelListRejectedBeforeWork) {
    TempDir dir("nomodels");
    auto c = small_config(dir, PipelineMode::Default);
    c.models.clear();
    EXPECT_THROW(run_experiment(c), ConfigError);
    EXPECT_FALSE(fs::exists(c.output_dir));
    EXPECT_FALSE(fs::exists(dir / "out.partial"));
}

TEST(Experiment, FailedStageLeavesNoPartialBundle) {
    TempDir dir("failing");
    auto c = small_config(dir, PipelineMode::Default);
    // A single-class input passes loading but cannot be scored.
    auto profile = TrafficProfile::default_profile();
    profile.row_count = 50;
    auto records = generate(profile);
    for (auto& r : records) r.attack = kBotnet;
    write_csv(dir / "one-class.csv", records, Schema::botiot_default());
    c.profile_path.reset();
    c.input_csv = dir / "one-class.csv";
    fs::create_directories(c.output_dir);
    botdetect::testing::write_file(c.output_dir / "keep.txt", "old");
    try {
        run_experiment(c);
        FAIL() << "expected a stage error";
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), "score-features");
    }
    EXPECT_FALSE(fs::exists(dir / "out.partial"));
    EXPECT_EQ(read_file(c.output_dir / "keep.txt"), "old");
}

TEST(Experiment, ConfigJsonRoundTripAndRelativePaths) {
    TempDir dir("config");
    fs::create_directories(dir / "cfg");
    botdetect::testing::write_file(dir / "cfg/run.json", R"({
        "input": {"synth": {"profile": "../p.json", "rows": 100}},
        "mode": "paper",
        "smote": {"use": "on", "k_neighbors": 3},
        "models": [{"name": "knn", "k": 7}, {"name": "mlp", "hidden": 4, "epochs": 2}],
        "cv_folds": 0,
        "output_dir": "results"
    })");
    const auto c = ExperimentConfig::load(dir / "cfg/run.json");
    EXPECT_EQ(*c.profile_path, dir / "cfg/../p.json");
    EXPECT_EQ(c.output_dir, dir / "cfg/results");
    EXPECT_EQ(c.mode, PipelineMode::Paper);
    EXPECT_EQ(c.smote, SmoteUse::On);
    EXPECT_EQ(c.smote_k, 3u);
    ASSERT_EQ(c.models.size(), 2u);
    EXPECT_EQ(c.models[0].knn_k, 7u);
    EXPECT_EQ(c.models[1].mlp.hidden, 4u);
    const auto again = ExperimentConfig::from_json(c.to_json(), "/elsewhere");
    EXPECT_EQ(again.to_json(), c.to_json());

    botdetect::testing::write_file(dir / "bad.json", R"({"input": {"csv": "x.csv"}, "mode": "fast"})");
    EXPECT_THROW(ExperimentConfig::load(dir / "bad.json"), ConfigError);
}

TEST(Experiment, SummaryFootnoteOnlyWhenFlagged) {
    EvalReport r;
    r.model = "gnb";
    r.dataset = "D1";
    r.metrics.accuracy = 0.99527;
    auto table = summary_table({r}, false);
    EXPECT_NE(table.find("99.5"), std::string::npos);
    EXPECT_EQ(table.find("zero denominator"), std::string::npos);
    r.metrics.precision_undefined = true;
    table = summary_table({r}, false);
    EXPECT_NE(table.find("*"), std::string::npos);
    EXPECT_NE(table.find("zero denominator"), std::string::npos);
}
