#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "botdetect/dataset.hpp"

namespace botdetect {

// ---------------------------------------------------------------------------
// Gaussian naive Bayes

struct GnbModel {
    std::array<double, 2> priors{};  // indexed by label
    Matrix means;                    // 2 x d
    Matrix variances;                // 2 x d, smoothed
    double epsilon = 0.0;            // smoothing added to every variance

    std::size_t feature_count() const noexcept { return means.cols(); }
    bool operator==(const GnbModel&) const = default;
};

// Priors are class frequencies; means and variances are per-class maximum
// likelihood estimates. Every variance gets 1e-9 x the largest per-feature
// variance of the whole training set added to it.
GnbModel gnb_fit(const Dataset& train);
// Class posteriors {P(normal|x), P(botnet|x)}, evaluated in log space.
std::array<double, 2> gnb_posteriors(const GnbModel& model, std::span<const double> row);
double gnb_score(const GnbModel& model, std::span<const double> row);

// ---------------------------------------------------------------------------
// k nearest neighbours

class KnnModel {
public:
    // k must be odd and no larger than the training row count.
    KnnModel(Matrix train, std::vector<int> labels, std::size_t k);
    KnnModel(const Dataset& train, std::size_t k);

    std::size_t k() const noexcept { return k_; }
    const Matrix& train() const noexcept { return train_; }
    const std::vector<int>& labels() const noexcept { return labels_; }
    std::size_t feature_count() const noexcept { return train_.cols(); }

    // Training row indices of the k nearest rows, nearest first; equal
    // distances rank the lower row index first.
    std::vector<std::size_t> neighbors(std::span<const double> row) const;

    bool operator==(const KnnModel&) const = default;

private:
    Matrix train_;
    std::vector<int> labels_;
    std::size_t k_;
};

// Majority label of neighbours given nearest first; a tied vote goes to the
// nearest neighbour's label.
int majority_vote(std::span<const int> labels_nearest_first);

int knn_predict(const KnnModel& model, std::span<const double> row);
// Fraction of the k nearest neighbours labelled botnet.
double knn_score(const KnnModel& model, std::span<const double> row);

// ---------------------------------------------------------------------------
// Multi-layer perceptron: input -> sigmoid hidden layer -> sigmoid output.

struct MlpParams {
    std::size_t hidden = 16;
    double learning_rate = 0.1;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    double init_range = 0.5;  // weights start uniform in [-init_range, init_range]

    bool operator==(const MlpParams&) const = default;
};

struct MlpModel {
    Matrix input_weights;                // d x h
    std::vector<double> hidden_bias;     // h
    std::vector<double> output_weights;  // h
    double output_bias = 0.0;
    MlpParams params;
    std::vector<double> epoch_loss;      // mean cross-entropy per epoch

    std::size_t feature_count() const noexcept { return input_weights.rows(); }
    std::size_t hidden_count() const noexcept { return input_weights.cols(); }
    bool operator==(const MlpModel&) const = default;
};

// Same shapes as the model's weights.
struct MlpGradient {
    Matrix input_weights;
    std::vector<double> hidden_bias;
    std::vector<double> output_weights;
    double output_bias = 0.0;
};

// Untrained network with seeded uniform weights.
MlpModel mlp_init(std::size_t features, const MlpParams& params);
// Mini-batch gradient descent on binary cross-entropy, reshuffling every
// epoch. Throws DivergenceError on a non-finite epoch loss.
MlpModel mlp_fit(const Dataset& train, const MlpParams& params);
// Continues training an existing network in place.
void mlp_train(MlpModel& model, const Dataset& train);
double mlp_score(const MlpModel& model, std::span<const double> row);
// Mean binary cross-entropy over `rows` and its analytic gradient.
double mlp_loss_and_gradient(const MlpModel& model, const Matrix& x, std::span<const int> y,
                             std::span<const std::size_t> rows, MlpGradient& grad);
double mlp_loss(const MlpModel& model, const Matrix& x, std::span<const int> y);

// ---------------------------------------------------------------------------
// Shared contract

enum class ModelKind { Gnb, Knn, Mlp };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

struct ModelSpec {
    ModelKind kind = ModelKind::Gnb;
    std::size_t knn_k = 5;
    MlpParams mlp;
};

using TrainedModel = std::variant<GnbModel, KnnModel, MlpModel>;

ModelKind kind_of(const TrainedModel& model);
std::size_t feature_count(const TrainedModel& model);

TrainedModel fit_model(const ModelSpec& spec, const Dataset& train);
// Probability-like botnet score in [0, 1].
double score(const TrainedModel& model, std::span<const double> row);

inline constexpr double kDecisionThreshold = 0.5;
inline int label_from_score(double s) { return s >= kDecisionThreshold ? kBotnet : kNormal; }

std::vector<double> score_batch(const TrainedModel& model, const Dataset& data);
std::vector<int> predict_batch(const TrainedModel& model, const Dataset& data);

// Structured text (JSON) with parameters, hyperparameters, the feature names
// the model expects and free-form provenance. Reload is bit-exact.
void save_model(const std::filesystem::path& path, const TrainedModel& model,
                const std::vector<std::string>& feature_names, const nlohmann::json& provenance);
struct LoadedModel {
    TrainedModel model;
    std::vector<std::string> feature_names;
};
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace botdetect
