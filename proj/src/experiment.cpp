#include "botdetect/experiment.hpp"

#include <fstream>
#include <sstream>

#include "botdetect/preprocess.hpp"

namespace botdetect {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSplitOffset = 1;
constexpr std::uint64_t kSmoteOffset = 2;
constexpr std::uint64_t kCvOffset = 3;
constexpr std::uint64_t kMlpOffset = 4;
constexpr std::uint64_t kSynthOffset = 5;

fs::path resolve(const fs::path& p, const fs::path& base) {
    return p.is_absolute() || base.empty() ? p : base / p;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    write_text(path, j.dump(2) + "\n");
}

nlohmann::json counts_json(const ClassCounts& c) {
    return {{"normal", c.normal}, {"botnet", c.botnet}, {"total", c.total()}};
}

nlohmann::json model_spec_json(const ModelSpec& m) {
    nlohmann::json j{{"name", to_string(m.kind)}};
    if (m.kind == ModelKind::Knn) j["k"] = m.knn_k;
    if (m.kind == ModelKind::Mlp) {
        j["hidden"] = m.mlp.hidden;
        j["learning_rate"] = m.mlp.learning_rate;
        j["epochs"] = m.mlp.epochs;
        j["batch_size"] = m.mlp.batch_size;
        j["init_range"] = m.mlp.init_range;
    }
    return j;
}

ModelSpec model_spec_from_json(const nlohmann::json& j) {
    ModelSpec m;
    m.kind = parse_model_kind(j.at("name").get<std::string>());
    m.knn_k = j.value("k", m.knn_k);
    m.mlp.hidden = j.value("hidden", m.mlp.hidden);
    m.mlp.learning_rate = j.value("learning_rate", m.mlp.learning_rate);
    m.mlp.epochs = j.value("epochs", m.mlp.epochs);
    m.mlp.batch_size = j.value("batch_size", m.mlp.batch_size);
    m.mlp.init_range = j.value("init_range", m.mlp.init_range);
    return m;
}

nlohmann::json feature_report_json(const FeatureScoreReport& r, bool applied) {
    nlohmann::json scores = nlohmann::json::array();
    for (std::size_t j = 0; j < r.names.size(); ++j)
        scores.push_back({{"feature", r.names[j]}, {"score", r.scores[j]}, {"selected", bool(r.selected[j])}});
    return {{"candidate_features", r.names},
            {"scores", scores},
            {"mean_score", r.mean_score},
            {"ranked", r.ranked_names},
            {"selection_applied", applied}};
}

class Runner {
public:
    Runner(const ExperimentConfig& config, fs::path bundle)
        : config_(config), bundle_(std::move(bundle)), seeds_(StageSeeds::from_master(config.seed)) {}

    ExperimentResult run();

private:
    template <class F>
    auto stage(const std::string& name, F&& f) {
        result_.stage_order.push_back(name);
        try {
            return f();
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(name, std::string(e.what()) + "; config: " + config_.to_json().dump());
        }
    }

    Dataset ingest();
    void score_features(const Dataset& scored);
    Dataset select(const Dataset& d) const {
        return config_.feature_selection ? select_features(d, result_.feature_scores) : d;
    }
    std::vector<std::string> variants() const;
    ModelSpec seeded(const ModelSpec& spec) const {
        ModelSpec s = spec;
        s.mlp.seed = seeds_.mlp;
        return s;
    }
    SmoteConfig smote_config() const { return {config_.smote_k, 1.0, seeds_.smote}; }
    void evaluate_variant(const std::string& variant, const Dataset& train, const Dataset& test,
                          const Dataset& cv_data, const CvOptions& cv_options);
    void write_bundle();

    const ExperimentConfig& config_;
    fs::path bundle_;
    StageSeeds seeds_;
    ExperimentResult result_;
    EncodingMap encoding_;
    ScalerParams scaler_;
    std::string scaler_scope_;
    std::string smote_scope_;
    nlohmann::json class_counts_ = nlohmann::json::object();
};

Dataset Runner::ingest() {
    const Schema schema = config_.schema_path ? Schema::load(*config_.schema_path) : Schema::botiot_default();
    std::vector<FlowRecord> records = stage("load", [&] {
        if (config_.input_csv) return load_csv(*config_.input_csv, schema);
        TrafficProfile profile = TrafficProfile::load(*config_.profile_path);
        profile.seed = seeds_.synth;
        if (config_.synth_rows) profile.row_count = *config_.synth_rows;
        return generate(profile);
    });
    records = stage("cleanse", [&] { return cleanse(records, schema); });
    return stage("encode", [&] {
        encoding_ = fit_encoding(records, schema);
        return apply_encoding(records, schema, encoding_);
    });
}

void Runner::score_features(const Dataset& scored) {
    result_.feature_scores = stage("score-features", [&] { return chi2_scores(scored); });
    if (config_.feature_selection)
        (void)stage("select-features", [&] { return select(scored).feature_count(); });
}

std::vector<std::string> Runner::variants() const {
    switch (config_.smote) {
        case SmoteUse::Off: return {"D1"};
        case SmoteUse::On: return {"D2"};
        case SmoteUse::Both: return {"D1", "D2"};
    }
    return {"D1"};
}

void Runner::evaluate_variant(const std::string& variant, const Dataset& train, const Dataset& test,
                              const Dataset& cv_data, const CvOptions& cv_options) {
    const std::string provenance = "held-out test split (" +
                                   format_percent(config_.test_fraction) + "% of rows)";
    for (const auto& spec : config_.models) {
        const auto name = std::string(to_string(spec.kind));
        const ModelSpec s = seeded(spec);
        auto model = stage("train:" + name + ":" + variant, [&] { return fit_model(s, train); });
        auto report = stage("evaluate:" + name + ":" + variant,
                            [&] { return evaluate_model(model, test, name, variant, provenance); });
        if (config_.cv_folds > 0)
            report.cv = stage("cross-validate:" + name + ":" + variant,
                              [&] { return cross_validate(cv_data, s, cv_options); });
        result_.reports.push_back(std::move(report));
    }
}

ExperimentResult Runner::run() {
    const Dataset data = ingest();
    result_.input_counts = data.class_counts();
    class_counts_["input"] = counts_json(data.class_counts());
    const SplitOptions split_options{config_.test_fraction, seeds_.split, config_.stratified};
    const auto names = variants();
    const bool wants_d2 = config_.smote != SmoteUse::Off;

    if (config_.mode == PipelineMode::Paper) {
        scaler_scope_ = "full dataset before splitting";
        smote_scope_ = "full dataset before splitting, after normalization and feature selection";
        const Dataset scaled = stage("normalize:all", [&] {
            scaler_ = fit_scaler(data);
            return apply_scaler(data, scaler_);
        });
        score_features(scaled);
        const Dataset d1 = select(scaled);
        std::optional<Dataset> d2;
        if (wants_d2) {
            d2 = stage("smote:all", [&] { return smote(d1, smote_config()); });
            result_.balanced_counts = d2->class_counts();
            class_counts_["D1"] = counts_json(d1.class_counts());
            class_counts_["D2"] = counts_json(d2->class_counts());
        } else {
            class_counts_["D1"] = counts_json(d1.class_counts());
        }
        CvOptions cv{config_.cv_folds, seeds_.cv, config_.stratified, false, std::nullopt};
        for (const auto& v : names) {
            const Dataset& source = v == "D1" ? d1 : *d2;
            const auto split = stage("split:" + v, [&] { return train_test_split(source, split_options); });
            class_counts_["train:" + v] = counts_json(split.train.class_counts());
            class_counts_["test:" + v] = counts_json(split.test.class_counts());
            evaluate_variant(v, split.train, split.test, split.train, cv);
        }
    } else {
        scaler_scope_ = "training split only";
        smote_scope_ = "training split (and each training fold) only, after normalization and feature selection";
        const auto split = stage("split", [&] { return train_test_split(data, split_options); });
        class_counts_["train"] = counts_json(split.train.class_counts());
        class_counts_["test"] = counts_json(split.test.class_counts());
        const auto scaled = stage("normalize:train", [&] {
            scaler_ = fit_scaler(split.train);
            return std::pair{apply_scaler(split.train, scaler_), apply_scaler(split.test, scaler_)};
        });
        score_features(scaled.first);
        const Dataset train = select(scaled.first);
        const Dataset test = select(scaled.second);
        // Cross-validation re-fits the scaler inside every fold.
        const Dataset cv_source = select(split.train);
        for (const auto& v : names) {
            const bool balanced = v == "D2";
            Dataset fit_on = balanced ? stage("smote:train", [&] { return smote(train, smote_config()); })
                                      : train;
            if (balanced) {
                result_.balanced_counts = fit_on.class_counts();
                class_counts_["train:D2"] = counts_json(fit_on.class_counts());
            } else {
                class_counts_["train:D1"] = counts_json(fit_on.class_counts());
            }
            CvOptions cv{config_.cv_folds, seeds_.cv, config_.stratified, true,
                         balanced ? std::optional<SmoteConfig>(smote_config()) : std::nullopt};
            evaluate_variant(v, fit_on, test, cv_source, cv);
        }
    }
    stage("write-reports", [&] {
        write_bundle();
        return 0;
    });
    return result_;
}

void Runner::write_bundle() {
    fs::create_directories(bundle_ / "reports");
    fs::create_directories(bundle_ / "roc");
    std::vector<std::string> files = {"manifest.json", "class_counts.json", "feature_scores.tsv",
                                      "feature_scores.json", "encoding.json", "scaler.json",
                                      "summary.txt"};
    for (const auto& r : result_.reports) {
        const std::string stem = r.model + "_" + r.dataset;
        write_json(bundle_ / "reports" / (stem + ".json"), to_json(r));
        files.push_back("reports/" + stem + ".json");
        if (!r.metrics.auc_undefined) {
            write_roc_file(bundle_ / "roc" / (stem + ".tsv"), r.roc);
            files.push_back("roc/" + stem + ".tsv");
        }
    }
    write_json(bundle_ / "class_counts.json", class_counts_);
    write_score_table(bundle_ / "feature_scores.tsv", result_.feature_scores);
    write_json(bundle_ / "feature_scores.json",
               feature_report_json(result_.feature_scores, config_.feature_selection));
    save_encoding(bundle_ / "encoding.json", encoding_);
    save_scaler(bundle_ / "scaler.json", scaler_);

    std::string summary = "Pipeline mode: " + std::string(to_string(config_.mode)) + "\n";
    summary += "D1 = data as loaded, D2 = SMOTE-balanced training data\n\n";
    summary += "Held-out test split:\n" + summary_table(result_.reports, false);
    if (config_.cv_folds > 0)
        summary += "\n" + std::to_string(config_.cv_folds) + "-fold cross-validation (mean):\n" +
                   summary_table(result_.reports, true);
    write_text(bundle_ / "summary.txt", summary);

    nlohmann::json selected = nlohmann::json::array();
    for (std::size_t j = 0; j < result_.feature_scores.names.size(); ++j)
        if (!config_.feature_selection || result_.feature_scores.selected[j])
            selected.push_back(result_.feature_scores.names[j]);
    nlohmann::json manifest;
    manifest["tool"] = "botdetect";
    manifest["config"] = config_.to_json();
    manifest["mode"] = to_string(config_.mode);
    manifest["seeds"] = {{"master", config_.seed},     {"split", seeds_.split},
                         {"smote", seeds_.smote},      {"cv", seeds_.cv},
                         {"mlp", seeds_.mlp},          {"synth", seeds_.synth}};
    manifest["seed_offsets"] = {{"split", kSplitOffset}, {"smote", kSmoteOffset}, {"cv", kCvOffset},
                                {"mlp", kMlpOffset},     {"synth", kSynthOffset}};
    manifest["stage_order"] = result_.stage_order;
    manifest["stage_order"].push_back("write-reports");
    manifest["scaler_fit_scope"] = scaler_scope_;
    manifest["smote_stage"] = config_.smote == SmoteUse::Off ? "not run" : smote_scope_;
    manifest["candidate_features"] = result_.feature_scores.names;
    manifest["selected_features"] = selected;
    manifest["files"] = files;
    write_json(bundle_ / "manifest.json", manifest);
}

}  // namespace

std::string_view to_string(PipelineMode mode) {
    return mode == PipelineMode::Paper ? "paper" : "default";
}

std::string_view to_string(SmoteUse use) {
    switch (use) {
        case SmoteUse::Off: return "off";
        case SmoteUse::On: return "on";
        case SmoteUse::Both: return "both";
    }
    return "both";
}

StageSeeds StageSeeds::from_master(std::uint64_t master) {
    return {master + kSplitOffset, master + kSmoteOffset, master + kCvOffset, master + kMlpOffset,
            master + kSynthOffset};
}

void ExperimentConfig::validate() const {
    if (models.empty()) throw ConfigError("at least one model must be listed");
    if (input_csv.has_value() == profile_path.has_value())
        throw ConfigError("exactly one input source (csv or synth profile) must be given");
    if (input_csv && !fs::exists(*input_csv))
        throw ConfigError("input file '" + input_csv->string() + "' does not exist");
    if (profile_path && !fs::exists(*profile_path))
        throw ConfigError("profile '" + profile_path->string() + "' does not exist");
    if (schema_path && !fs::exists(*schema_path))
        throw ConfigError("schema '" + schema_path->string() + "' does not exist");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ConfigError("test_fraction must lie strictly between 0 and 1");
    if (cv_folds == 1) throw ConfigError("cv_folds must be 0 (disabled) or at least 2");
    if (smote_k < 1) throw ConfigError("smote k_neighbors must be at least 1");
    for (const auto& m : models) {
        if (m.kind == ModelKind::Knn && (m.knn_k < 1 || m.knn_k % 2 == 0))
            throw ConfigError("knn k must be a positive odd number");
        if (m.kind == ModelKind::Mlp && (m.mlp.hidden < 1 || m.mlp.batch_size < 1))
            throw ConfigError("mlp hidden width and batch size must be positive");
    }
    if (output_dir.empty()) throw ConfigError("output directory must be set");
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, const fs::path& base_dir) {
    ExperimentConfig c;
    try {
        const auto& input = j.at("input");
        if (input.contains("csv")) c.input_csv = resolve(input.at("csv").get<std::string>(), base_dir);
        if (input.contains("synth")) {
            const auto& s = input.at("synth");
            c.profile_path = resolve(s.at("profile").get<std::string>(), base_dir);
            if (s.contains("rows")) c.synth_rows = s.at("rows").get<std::size_t>();
        }
        if (j.contains("schema")) c.schema_path = resolve(j.at("schema").get<std::string>(), base_dir);
        const auto mode = j.value("mode", std::string("default"));
        if (mode == "paper") c.mode = PipelineMode::Paper;
        else if (mode != "default") throw ConfigError("mode must be 'default' or 'paper'");
        if (j.contains("smote")) {
            const auto& s = j.at("smote");
            const auto use = s.value("use", std::string("both"));
            if (use == "off") c.smote = SmoteUse::Off;
            else if (use == "on") c.smote = SmoteUse::On;
            else if (use == "both") c.smote = SmoteUse::Both;
            else throw ConfigError("smote.use must be off, on or both");
            c.smote_k = s.value("k_neighbors", c.smote_k);
        }
        c.feature_selection = j.value("feature_selection", c.feature_selection);
        for (const auto& m : j.value("models", nlohmann::json::array())) c.models.push_back(model_spec_from_json(m));
        c.test_fraction = j.value("test_fraction", c.test_fraction);
        c.cv_folds = j.value("cv_folds", c.cv_folds);
        c.stratified = j.value("stratified", c.stratified);
        c.seed = j.value("seed", c.seed);
        if (j.contains("output_dir")) c.output_dir = resolve(j.at("output_dir").get<std::string>(), base_dir);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid experiment config: ") + e.what());
    }
    return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path.string() + "': " + e.what());
    }
    return from_json(j, path.parent_path());
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    if (input_csv) j["input"]["csv"] = input_csv->generic_string();
    if (profile_path) {
        j["input"]["synth"]["profile"] = profile_path->generic_string();
        if (synth_rows) j["input"]["synth"]["rows"] = *synth_rows;
    }
    if (schema_path) j["schema"] = schema_path->generic_string();
    j["mode"] = botdetect::to_string(mode);
    j["smote"] = {{"use", botdetect::to_string(smote)}, {"k_neighbors", smote_k}};
    j["feature_selection"] = feature_selection;
    j["models"] = nlohmann::json::array();
    for (const auto& m : models) j["models"].push_back(model_spec_json(m));
    j["test_fraction"] = test_fraction;
    j["cv_folds"] = cv_folds;
    j["stratified"] = stratified;
    j["seed"] = seed;
    j["output_dir"] = output_dir.generic_string();
    return j;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    fs::path out = config.output_dir;
    fs::path scratch = out;
    scratch += ".partial";
    fs::remove_all(scratch);
    fs::create_directories(scratch);
    try {
        Runner runner(config, scratch);
        auto result = runner.run();
        fs::remove_all(out);
        fs::rename(scratch, out);
        return result;
    } catch (...) {
        std::error_code ec;
        fs::remove_all(scratch, ec);
        throw;
    }
}

std::string summary_table(const std::vector<EvalReport>& reports, bool use_cv_mean) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-6s %-7s %9s %10s %8s %9s %8s\n", "Model", "Dataset",
                  "Accuracy", "Precision", "Recall", "F1-score", "ROC-AUC");
    out << line;
    bool flagged = false;
    for (const auto& r : reports) {
        if (use_cv_mean && !r.cv) continue;
        const Metrics& m = use_cv_mean ? r.cv->summary.mean : r.metrics;
        std::snprintf(line, sizeof line, "%-6s %-7s %9s %10s %8s %9s %8s%s\n", r.model.c_str(),
                      r.dataset.c_str(), format_percent(m.accuracy).c_str(),
                      format_percent(m.precision).c_str(), format_percent(m.recall).c_str(),
                      format_percent(m.f1).c_str(), format_percent(m.roc_auc).c_str(),
                      m.degenerate() ? "  *" : "");
        out << line;
        flagged |= m.degenerate();
    }
    if (flagged) out << "(* a metric had a zero denominator and is reported as 0)\n";
    return out.str();
}

}  // namespace botdetect
