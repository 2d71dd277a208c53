#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "botdetect/classifiers.hpp"
#include "botdetect/dataset.hpp"
#include "botdetect/resample.hpp"

namespace botdetect {

// ---------------------------------------------------------------------------
// Splitting

struct SplitOptions {
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
    bool stratified = true;
};

struct Split {
    Dataset train;
    Dataset test;
    std::vector<std::size_t> train_rows;  // ascending source indices
    std::vector<std::size_t> test_rows;
};

std::size_t round_half_up(double x);

// |test| = round_half_up(n * test_fraction). Stratified mode allocates the
// test rows per class by largest remainder so the class ratio is kept.
Split train_test_split(const Dataset& data, const SplitOptions& options);

// Assigns every row to one of k folds. Sizes differ by at most one; in
// stratified mode each class's per-fold count also differs by at most one.
std::vector<std::vector<std::size_t>> make_folds(std::span<const int> labels, std::size_t k,
                                                 std::uint64_t seed, bool stratified);

// ---------------------------------------------------------------------------
// Metrics

// Positive class is botnet (label 1).
struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t tn = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    std::size_t total() const noexcept { return tp + tn + fp + fn; }
    bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    bool operator==(const RocPoint&) const = default;
};

struct RocCurve {
    std::vector<RocPoint> points;  // (0,0) first, (1,1) last
    double auc = 0.0;
};

// Sweeps every distinct score from high to low (score >= threshold is
// positive); tied scores move together. AUC is the trapezoid area, which
// equals P(score_pos > score_neg) + P(equal) / 2.
RocCurve roc_curve(std::span<const double> scores, std::span<const int> truth);

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double roc_auc = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
    // Set when the ratio had a zero denominator; the value is then reported as 0.
    bool precision_undefined = false;
    bool recall_undefined = false;
    bool f1_undefined = false;
    bool fpr_undefined = false;
    bool auc_undefined = false;

    bool degenerate() const noexcept {
        return precision_undefined || recall_undefined || f1_undefined || fpr_undefined ||
               auc_undefined;
    }
    std::vector<std::string> degenerate_fields() const;
};

Metrics metrics_from(const ConfusionMatrix& cm, std::span<const double> scores,
                     std::span<const int> truth);

// ---------------------------------------------------------------------------
// Cross-validation

struct CvOptions {
    std::size_t k = 5;
    std::uint64_t seed = 0;
    bool stratified = true;
    // Steps re-fitted on every training portion (the leakage-free protocol).
    bool scale_in_fold = false;
    std::optional<SmoteConfig> smote_in_fold;
};

struct MetricStats {
    Metrics mean;
    Metrics stddev;  // population formula (divide by k)
};

struct CvResult {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    bool stratified = true;
    std::vector<std::size_t> fold_sizes;
    std::vector<Metrics> folds;
    MetricStats summary;
};

CvResult cross_validate(const Dataset& data, const ModelSpec& spec, const CvOptions& options);

// ---------------------------------------------------------------------------
// Reports

struct EvalReport {
    std::string model;
    std::string dataset;     // e.g. "D1" or "D2"
    std::string provenance;  // where the numbers come from
    ConfusionMatrix confusion;
    Metrics metrics;
    RocCurve roc;
    std::optional<CvResult> cv;
};

EvalReport evaluate_model(const TrainedModel& model, const Dataset& test, std::string model_name,
                          std::string dataset, std::string provenance);

// Fraction -> percentage text with one decimal, rounded half to even.
std::string format_percent(double fraction);

nlohmann::json metrics_to_json(const Metrics& m);
nlohmann::json to_json(const CvResult& cv);
nlohmann::json to_json(const EvalReport& report);

// Two columns "fpr<TAB>tpr", one point per line.
void write_roc_file(const std::filesystem::path& path, const RocCurve& curve);

}  // namespace botdetect
