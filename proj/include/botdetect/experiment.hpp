#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "botdetect/classifiers.hpp"
#include "botdetect/dataset.hpp"
#include "botdetect/evaluate.hpp"
#include "botdetect/features.hpp"
#include "botdetect/resample.hpp"
#include "botdetect/synth.hpp"

namespace botdetect {

// default: split -> per-split/per-fold normalize -> per-split/per-fold SMOTE.
// paper:   normalize everything -> SMOTE everything -> split.
enum class PipelineMode { Default, Paper };

// Which datasets to benchmark: raw (D1), SMOTE-balanced (D2) or both.
enum class SmoteUse { Off, On, Both };

std::string_view to_string(PipelineMode mode);
std::string_view to_string(SmoteUse use);

struct ExperimentConfig {
    std::optional<std::filesystem::path> input_csv;
    std::optional<std::filesystem::path> profile_path;  // synthetic input when set
    std::optional<std::size_t> synth_rows;               // overrides the profile's row count
    std::optional<std::filesystem::path> schema_path;   // built-in BoT-IoT schema when unset
    PipelineMode mode = PipelineMode::Default;
    SmoteUse smote = SmoteUse::Both;
    std::size_t smote_k = 5;
    bool feature_selection = true;
    std::vector<ModelSpec> models;
    double test_fraction = 0.2;
    std::size_t cv_folds = 5;  // 0 disables cross-validation
    bool stratified = true;
    std::uint64_t seed = 42;
    std::filesystem::path output_dir = "botdetect-out";

    // Throws ConfigError before any computation runs.
    void validate() const;

    // Relative paths in `j` resolve against `base_dir`.
    static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
    static ExperimentConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
};

// Every stage seed is the master seed plus a fixed labelled offset.
struct StageSeeds {
    std::uint64_t split;
    std::uint64_t smote;
    std::uint64_t cv;
    std::uint64_t mlp;
    std::uint64_t synth;

    static StageSeeds from_master(std::uint64_t master);
};

struct ExperimentResult {
    ClassCounts input_counts;
    std::optional<ClassCounts> balanced_counts;
    FeatureScoreReport feature_scores;
    std::vector<std::string> stage_order;
    std::vector<EvalReport> reports;
};

// Runs the configured pipeline and writes the report bundle to
// config.output_dir. The bundle is assembled in a sibling scratch directory
// and moved into place only on success. Stage failures raise StageError.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Models x datasets x the five metrics, percentages to one decimal.
std::string summary_table(const std::vector<EvalReport>& reports, bool use_cv_mean);

}  // namespace botdetect
