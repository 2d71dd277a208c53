// botdetect: command-line front end for the flow-record botnet detection pipeline.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "botdetect/classifiers.hpp"
#include "botdetect/dataset.hpp"
#include "botdetect/evaluate.hpp"
#include "botdetect/experiment.hpp"
#include "botdetect/features.hpp"
#include "botdetect/preprocess.hpp"
#include "botdetect/resample.hpp"
#include "botdetect/synth.hpp"

namespace fs = std::filesystem;
using namespace botdetect;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr const char* kOutputEnv = "BOTDETECT_OUTPUT_DIR";

struct Common {
    std::uint64_t seed = 42;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c, const std::string& out_help) {
    cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
    cmd->add_option("--out", c.out, out_help);
}

// The output location: --out, else $BOTDETECT_OUTPUT_DIR, else `fallback`.
fs::path output_path(const Common& c, const std::string& fallback) {
    if (!c.out.empty()) return c.out;
    if (const char* env = std::getenv(kOutputEnv); env && *env) return env;
    return fallback;
}

Schema schema_or_default(const std::string& path) {
    return path.empty() ? Schema::botiot_default() : Schema::load(path);
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

nlohmann::json counts_json(const ClassCounts& c) {
    return {{"normal", c.normal}, {"botnet", c.botnet}, {"total", c.total()}};
}

struct ModelOptions {
    std::string name = "knn";
    std::size_t k = 5;
    MlpParams mlp;
};

void add_model_options(CLI::App* cmd, ModelOptions& m) {
    cmd->add_option("--model", m.name, "gnb, knn or mlp")->capture_default_str();
    cmd->add_option("--k", m.k, "KNN neighbour count (odd)")->capture_default_str();
    cmd->add_option("--hidden", m.mlp.hidden, "MLP hidden width")->capture_default_str();
    cmd->add_option("--learning-rate", m.mlp.learning_rate, "MLP learning rate")->capture_default_str();
    cmd->add_option("--epochs", m.mlp.epochs, "MLP epochs")->capture_default_str();
    cmd->add_option("--batch-size", m.mlp.batch_size, "MLP mini-batch size")->capture_default_str();
}

ModelSpec to_spec(const ModelOptions& m, std::uint64_t seed) {
    ModelSpec s;
    s.kind = parse_model_kind(m.name);
    s.knn_k = m.k;
    s.mlp = m.mlp;
    s.mlp.seed = seed;
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Botnet detection on network flow records"};
    app.set_config("--config", "", "Read options from a TOML/INI config file");
    app.require_subcommand(1);

    // ingest
    Common ingest_c;
    std::string ingest_input, ingest_schema;
    auto* ingest = app.add_subcommand("ingest", "Load a flow CSV, drop incomplete rows, encode categories");
    ingest->add_option("--input", ingest_input, "Flow-record CSV")->required()->check(CLI::ExistingFile);
    ingest->add_option("--schema", ingest_schema, "Column-role schema (JSON)")->check(CLI::ExistingFile);
    add_common(ingest, ingest_c, "Output directory");

    // profile-stats
    Common stats_c;
    std::string stats_input, stats_schema;
    auto* stats = app.add_subcommand("profile-stats", "Per-class counts and feature means");
    stats->add_option("--input", stats_input, "Flow-record CSV")->required()->check(CLI::ExistingFile);
    stats->add_option("--schema", stats_schema, "Column-role schema (JSON)")->check(CLI::ExistingFile);
    add_common(stats, stats_c, "Output JSON file");

    // score-features
    Common score_c;
    std::string score_input;
    bool score_no_scale = false;
    auto* score_cmd = app.add_subcommand("score-features", "Chi-square feature scores and mean-threshold selection");
    score_cmd->add_option("--input", score_input, "Dataset CSV (from ingest)")->required()->check(CLI::ExistingFile);
    score_cmd->add_flag("--no-scale", score_no_scale, "Score raw values instead of min-max scaled ones");
    add_common(score_cmd, score_c, "Output directory");

    // smote
    Common smote_c;
    std::string smote_input;
    std::size_t smote_k = 5;
    auto* smote_cmd = app.add_subcommand("smote", "Balance a dataset CSV by SMOTE oversampling");
    smote_cmd->add_option("--input", smote_input, "Dataset CSV")->required()->check(CLI::ExistingFile);
    smote_cmd->add_option("--k-neighbors", smote_k, "Neighbours per minority point")->capture_default_str();
    add_common(smote_cmd, smote_c, "Output CSV (with a synthetic flag column)");

    // train
    Common train_c;
    std::string train_input;
    ModelOptions train_m;
    auto* train_cmd = app.add_subcommand("train", "Fit one classifier and save it");
    train_cmd->add_option("--input", train_input, "Training dataset CSV")->required()->check(CLI::ExistingFile);
    add_model_options(train_cmd, train_m);
    add_common(train_cmd, train_c, "Output model file (JSON)");

    // evaluate
    Common eval_c;
    std::string eval_model, eval_input;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a saved model on a test dataset CSV");
    eval_cmd->add_option("--model-file", eval_model, "Saved model")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--input", eval_input, "Test dataset CSV")->required()->check(CLI::ExistingFile);
    add_common(eval_cmd, eval_c, "Output directory");

    // cross-validate
    Common cv_c;
    std::string cv_input;
    ModelOptions cv_m;
    std::size_t cv_folds = 5;
    bool cv_plain = false, cv_scale = false, cv_smote = false;
    auto* cv_cmd = app.add_subcommand("cross-validate", "k-fold cross-validation of one classifier");
    cv_cmd->add_option("--input", cv_input, "Dataset CSV")->required()->check(CLI::ExistingFile);
    add_model_options(cv_cmd, cv_m);
    cv_cmd->add_option("--folds", cv_folds, "Fold count")->capture_default_str();
    cv_cmd->add_flag("--plain", cv_plain, "Shuffled instead of stratified folds");
    cv_cmd->add_flag("--scale-in-fold", cv_scale, "Fit min-max scaling on each training fold");
    cv_cmd->add_flag("--smote-in-fold", cv_smote, "SMOTE-balance each training fold");
    add_common(cv_cmd, cv_c, "Output JSON file");

    // synth
    Common synth_c;
    std::string synth_profile;
    std::optional<std::size_t> synth_rows;
    auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic flow records from a traffic profile");
    synth_cmd->add_option("--profile", synth_profile, "Traffic profile (JSON)")->required()->check(CLI::ExistingFile);
    synth_cmd->add_option("--rows", synth_rows, "Row count (overrides the profile)");
    add_common(synth_cmd, synth_c, "Output CSV");

    // run
    Common run_c;
    std::string run_config;
    bool run_paper = false;
    auto* run_cmd = app.add_subcommand("run", "Full pipeline: D1 vs D2 benchmark for the configured models");
    run_cmd->add_option("experiment", run_config, "Experiment config (JSON)")->required();
    run_cmd->add_flag("--paper-mode", run_paper, "Normalize and SMOTE the whole dataset before splitting");
    add_common(run_cmd, run_c, "Output directory (overrides the config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (*ingest) {
            const Schema schema = schema_or_default(ingest_schema);
            const auto out = output_path(ingest_c, "ingested");
            auto records = cleanse(load_csv(ingest_input, schema), schema);
            const auto encoding = fit_encoding(records, schema);
            const auto data = apply_encoding(records, schema, encoding);
            fs::create_directories(out);
            write_dataset_csv(out / "dataset.csv", data);
            save_encoding(out / "encoding.json", encoding);
            write_json_file(out / "class_counts.json", counts_json(data.class_counts()));
            std::cout << data.row_count() << " rows (" << data.class_counts().normal << " normal, "
                      << data.class_counts().botnet << " botnet) -> " << (out / "dataset.csv").string() << '\n';
        } else if (*stats) {
            const auto summary = class_summary(load_csv(stats_input, schema_or_default(stats_schema)));
            nlohmann::json j;
            j["counts"] = counts_json(summary.counts);
            for (const auto& m : summary.means) {
                j["means"][m.name]["normal"] = m.normal ? nlohmann::json(*m.normal) : nlohmann::json();
                j["means"][m.name]["botnet"] = m.botnet ? nlohmann::json(*m.botnet) : nlohmann::json();
            }
            const auto out = output_path(stats_c, "");
            if (out.empty()) std::cout << j.dump(2) << '\n';
            else write_json_file(out, j);
        } else if (*score_cmd) {
            auto data = read_dataset_csv(score_input);
            if (!score_no_scale) data = apply_scaler(data, fit_scaler(data));
            const auto report = chi2_scores(data);
            const auto out = output_path(score_c, "feature-scores");
            fs::create_directories(out);
            write_score_table(out / "feature_scores.tsv", report);
            nlohmann::json j;
            j["candidate_features"] = report.names;
            j["scores"] = report.scores;
            j["mean_score"] = report.mean_score;
            j["selected"] = report.selected;
            j["ranked"] = report.ranked_names;
            j["scaled"] = !score_no_scale;
            write_json_file(out / "feature_scores.json", j);
            if (report.selected_count() > 0)
                write_dataset_csv(out / "selected.csv", select_features(data, report));
            std::cout << report.selected_count() << " of " << report.names.size()
                      << " features above the mean score\n";
        } else if (*smote_cmd) {
            const auto data = read_dataset_csv(smote_input);
            const auto balanced = smote(data, {smote_k, 1.0, smote_c.seed});
            const auto out = output_path(smote_c, "balanced.csv");
            write_dataset_csv(out, balanced, synthetic_mask(data.row_count(), balanced));
            std::cout << data.class_counts().normal << "/" << data.class_counts().botnet << " -> "
                      << balanced.class_counts().normal << "/" << balanced.class_counts().botnet
                      << " (normal/botnet)\n";
        } else if (*train_cmd) {
            const auto data = read_dataset_csv(train_input);
            const auto spec = to_spec(train_m, train_c.seed);
            const auto model = fit_model(spec, data);
            const auto out = output_path(train_c, train_m.name + ".model.json");
            save_model(out, model, data.feature_names(),
                       {{"training_file", fs::path(train_input).generic_string()},
                        {"training_rows", data.row_count()},
                        {"seed", train_c.seed}});
            std::cout << "saved " << train_m.name << " model -> " << out.string() << '\n';
        } else if (*eval_cmd) {
            const auto loaded = load_model(eval_model);
            const auto data = read_dataset_csv(eval_input);
            if (data.feature_names() != loaded.feature_names)
                throw ShapeError("test columns do not match the model's training columns");
            const auto name = std::string(to_string(kind_of(loaded.model)));
            const auto report = evaluate_model(loaded.model, data, name, "test",
                                               "file " + fs::path(eval_input).filename().string());
            const auto out = output_path(eval_c, "evaluation");
            fs::create_directories(out);
            write_json_file(out / "metrics.json", to_json(report));
            if (!report.metrics.auc_undefined) write_roc_file(out / "roc.tsv", report.roc);
            std::cout << summary_table({report}, false);
        } else if (*cv_cmd) {
            const auto data = read_dataset_csv(cv_input);
            CvOptions options{cv_folds, cv_c.seed, !cv_plain, cv_scale, std::nullopt};
            if (cv_smote) options.smote_in_fold = SmoteConfig{5, 1.0, cv_c.seed + 2};
            const auto result = cross_validate(data, to_spec(cv_m, cv_c.seed), options);
            const auto out = output_path(cv_c, "");
            if (out.empty()) std::cout << to_json(result).dump(2) << '\n';
            else write_json_file(out, to_json(result));
        } else if (*synth_cmd) {
            auto profile = TrafficProfile::load(synth_profile);
            profile.seed = synth_c.seed;
            if (synth_rows) profile.row_count = *synth_rows;
            const auto out = output_path(synth_c, "synthetic.csv");
            RecordWriter writer(out, Schema::botiot_default());
            generate(profile, [&](const FlowRecord& r) { writer.write(r); });
            writer.close();
            std::cout << profile.row_count << " rows -> " << out.string() << '\n';
        } else if (*run_cmd) {
            auto config = ExperimentConfig::load(run_config);
            if (run_paper) config.mode = PipelineMode::Paper;
            if (run_cmd->count("--seed")) config.seed = run_c.seed;
            if (!run_c.out.empty()) config.output_dir = run_c.out;
            else if (const char* env = std::getenv(kOutputEnv); env && *env) config.output_dir = env;
            config.validate();
            const auto result = run_experiment(config);
            std::cout << summary_table(result.reports, false);
            std::cout << "bundle -> " << config.output_dir.string() << '\n';
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
