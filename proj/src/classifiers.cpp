#include "botdetect/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include <nlohmann/json.hpp>

#include "botdetect/random.hpp"

namespace botdetect {

namespace {

constexpr double kVarSmoothing = 1e-9;
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kShuffleStream = 1;

void check_width(std::size_t expected, std::size_t got) {
    if (expected != got)
        throw ShapeError("model expects " + std::to_string(expected) + " features, got " +
                         std::to_string(got));
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

// Hidden activations and output pre-activation for one row.
double forward(const MlpModel& m, std::span<const double> x, std::span<double> hidden) {
    const std::size_t d = m.feature_count();
    const std::size_t h = m.hidden_count();
    for (std::size_t j = 0; j < h; ++j) hidden[j] = m.hidden_bias[j];
    for (std::size_t i = 0; i < d; ++i) {
        const auto w = m.input_weights.row(i);
        for (std::size_t j = 0; j < h; ++j) hidden[j] += x[i] * w[j];
    }
    double z = m.output_bias;
    for (std::size_t j = 0; j < h; ++j) {
        hidden[j] = sigmoid(hidden[j]);
        z += hidden[j] * m.output_weights[j];
    }
    return z;
}

nlohmann::json matrix_to_json(const Matrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
    return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                  j.at("data").get<std::vector<double>>());
}

nlohmann::json mlp_params_to_json(const MlpParams& p) {
    return {{"hidden", p.hidden},         {"learning_rate", p.learning_rate},
            {"epochs", p.epochs},         {"batch_size", p.batch_size},
            {"seed", p.seed},             {"init_range", p.init_range}};
}

MlpParams mlp_params_from_json(const nlohmann::json& j) {
    MlpParams p;
    p.hidden = j.at("hidden").get<std::size_t>();
    p.learning_rate = j.at("learning_rate").get<double>();
    p.epochs = j.at("epochs").get<std::size_t>();
    p.batch_size = j.at("batch_size").get<std::size_t>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.init_range = j.at("init_range").get<double>();
    return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Gaussian naive Bayes

GnbModel gnb_fit(const Dataset& train) {
    const auto counts = train.class_counts();
    if (counts.normal == 0 || counts.botnet == 0)
        throw DataError("naive Bayes training needs both classes present");
    const std::size_t d = train.feature_count();
    const std::size_t n = train.row_count();
    const std::array<double, 2> class_n = {static_cast<double>(counts.normal),
                                           static_cast<double>(counts.botnet)};

    GnbModel model;
    model.priors = {class_n[0] / static_cast<double>(n), class_n[1] / static_cast<double>(n)};
    model.means = Matrix(2, d);
    model.variances = Matrix(2, d);

    for (std::size_t i = 0; i < n; ++i) {
        const auto row = train.row(i);
        auto mean = model.means.row(static_cast<std::size_t>(train.label(i)));
        for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
    }
    for (std::size_t c = 0; c < 2; ++c)
        for (double& v : model.means.row(c)) v /= class_n[c];

    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(train.label(i));
        const auto row = train.row(i);
        const auto mean = model.means.row(c);
        auto var = model.variances.row(c);
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = row[j] - mean[j];
            var[j] += diff * diff;
        }
    }
    for (std::size_t c = 0; c < 2; ++c)
        for (double& v : model.variances.row(c)) v /= class_n[c];

    // Largest whole-set variance drives the smoothing term.
    double max_var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += train.features()(i, j);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double diff = train.features()(i, j) - mean;
            var += diff * diff;
        }
        max_var = std::max(max_var, var / static_cast<double>(n));
    }
    model.epsilon = kVarSmoothing * max_var;
    // An all-constant training set still needs positive variances.
    if (model.epsilon <= 0.0) model.epsilon = kVarSmoothing;
    for (std::size_t c = 0; c < 2; ++c)
        for (double& v : model.variances.row(c)) v += model.epsilon;
    return model;
}

std::array<double, 2> gnb_posteriors(const GnbModel& model, std::span<const double> row) {
    check_width(model.feature_count(), row.size());
    std::array<double, 2> log_joint{};
    for (std::size_t c = 0; c < 2; ++c) {
        double lj = std::log(model.priors[c]);
        const auto mean = model.means.row(c);
        const auto var = model.variances.row(c);
        for (std::size_t j = 0; j < row.size(); ++j) {
            const double diff = row[j] - mean[j];
            lj -= 0.5 * std::log(2.0 * std::numbers::pi * var[j]) + diff * diff / (2.0 * var[j]);
        }
        log_joint[c] = lj;
    }
    const double top = std::max(log_joint[0], log_joint[1]);
    const double e0 = std::exp(log_joint[0] - top);
    const double e1 = std::exp(log_joint[1] - top);
    const double total = e0 + e1;
    return {e0 / total, e1 / total};
}

double gnb_score(const GnbModel& model, std::span<const double> row) {
    return gnb_posteriors(model, row)[kBotnet];
}

// ---------------------------------------------------------------------------
// k nearest neighbours

KnnModel::KnnModel(Matrix train, std::vector<int> labels, std::size_t k)
    : train_(std::move(train)), labels_(std::move(labels)), k_(k) {
    if (labels_.size() != train_.rows()) throw ShapeError("KNN label count does not match rows");
    if (k_ < 1) throw ConfigError("KNN k must be at least 1");
    if (k_ % 2 == 0) throw ConfigError("KNN k must be odd for binary classification");
    if (k_ > train_.rows())
        throw ConfigError("KNN k=" + std::to_string(k_) + " exceeds training rows (" +
                          std::to_string(train_.rows()) + ")");
}

KnnModel::KnnModel(const Dataset& train, std::size_t k)
    : KnnModel(train.features(), train.labels(), k) {}

std::vector<std::size_t> KnnModel::neighbors(std::span<const double> row) const {
    check_width(feature_count(), row.size());
    using Entry = std::pair<double, std::size_t>;
    // Sorted ascending by (distance, index); holds at most k entries.
    std::vector<Entry> best;
    best.reserve(k_ + 1);
    const std::size_t d = row.size();
    for (std::size_t i = 0; i < train_.rows(); ++i) {
        const auto t = train_.row(i);
        const bool full = best.size() == k_;
        const double bound = full ? best.back().first : 0.0;
        double dist = 0.0;
        bool pruned = false;
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = t[j] - row[j];
            dist += diff * diff;
            if (full && dist > bound) {
                pruned = true;
                break;
            }
        }
        if (pruned) continue;
        const Entry e{dist, i};
        if (full && !(e < best.back())) continue;
        best.insert(std::upper_bound(best.begin(), best.end(), e), e);
        if (best.size() > k_) best.pop_back();
    }
    std::vector<std::size_t> out;
    out.reserve(best.size());
    for (const auto& e : best) out.push_back(e.second);
    return out;
}

int majority_vote(std::span<const int> labels_nearest_first) {
    if (labels_nearest_first.empty()) throw DataError("majority vote over no neighbours");
    const auto botnet = std::count(labels_nearest_first.begin(), labels_nearest_first.end(), kBotnet);
    const auto normal = static_cast<std::ptrdiff_t>(labels_nearest_first.size()) - botnet;
    if (botnet == normal) return labels_nearest_first.front();
    return botnet > normal ? kBotnet : kNormal;
}

int knn_predict(const KnnModel& model, std::span<const double> row) {
    std::vector<int> votes;
    for (auto i : model.neighbors(row)) votes.push_back(model.labels()[i]);
    return majority_vote(votes);
}

double knn_score(const KnnModel& model, std::span<const double> row) {
    const auto nb = model.neighbors(row);
    std::size_t botnet = 0;
    for (auto i : nb) botnet += model.labels()[i] == kBotnet;
    return static_cast<double>(botnet) / static_cast<double>(nb.size());
}

// ---------------------------------------------------------------------------
// Multi-layer perceptron

MlpModel mlp_init(std::size_t features, const MlpParams& params) {
    if (params.hidden < 1) throw ConfigError("MLP needs at least one hidden unit");
    if (params.batch_size < 1) throw ConfigError("MLP batch size must be at least 1");
    if (!(params.learning_rate >= 0.0)) throw ConfigError("MLP learning rate must be non-negative");
    MlpModel m;
    m.params = params;
    m.input_weights = Matrix(features, params.hidden);
    m.hidden_bias.assign(params.hidden, 0.0);
    m.output_weights.assign(params.hidden, 0.0);

    Rng rng(mix_seed(params.seed, kInitStream));
    auto draw = [&] { return (2.0 * uniform01(rng) - 1.0) * params.init_range; };
    for (std::size_t i = 0; i < features; ++i)
        for (double& w : m.input_weights.row(i)) w = draw();
    for (double& b : m.hidden_bias) b = draw();
    for (double& w : m.output_weights) w = draw();
    m.output_bias = draw();
    return m;
}

double mlp_loss_and_gradient(const MlpModel& model, const Matrix& x, std::span<const int> y,
                             std::span<const std::size_t> rows, MlpGradient& grad) {
    const std::size_t d = model.feature_count();
    const std::size_t h = model.hidden_count();
    check_width(d, x.cols());
    grad.input_weights = Matrix(d, h);
    grad.hidden_bias.assign(h, 0.0);
    grad.output_weights.assign(h, 0.0);
    grad.output_bias = 0.0;
    if (rows.empty()) return 0.0;

    std::vector<double> hidden(h);
    std::vector<double> delta(h);
    double loss = 0.0;
    for (auto r : rows) {
        const auto xr = x.row(r);
        const double z = forward(model, xr, hidden);
        const double target = static_cast<double>(y[r]);
        loss += softplus(z) - target * z;

        const double dz = sigmoid(z) - target;
        grad.output_bias += dz;
        for (std::size_t j = 0; j < h; ++j) {
            grad.output_weights[j] += dz * hidden[j];
            delta[j] = dz * model.output_weights[j] * hidden[j] * (1.0 - hidden[j]);
            grad.hidden_bias[j] += delta[j];
        }
        for (std::size_t i = 0; i < d; ++i) {
            auto g = grad.input_weights.row(i);
            for (std::size_t j = 0; j < h; ++j) g[j] += delta[j] * xr[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (std::size_t i = 0; i < d; ++i)
        for (double& g : grad.input_weights.row(i)) g *= inv;
    for (double& g : grad.hidden_bias) g *= inv;
    for (double& g : grad.output_weights) g *= inv;
    grad.output_bias *= inv;
    return loss * inv;
}

double mlp_loss(const MlpModel& model, const Matrix& x, std::span<const int> y) {
    check_width(model.feature_count(), x.cols());
    std::vector<double> hidden(model.hidden_count());
    double loss = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double z = forward(model, x.row(r), hidden);
        loss += softplus(z) - static_cast<double>(y[r]) * z;
    }
    return x.rows() ? loss / static_cast<double>(x.rows()) : 0.0;
}

void mlp_train(MlpModel& model, const Dataset& train) {
    check_width(model.feature_count(), train.feature_count());
    if (train.row_count() == 0) throw DataError("MLP training set is empty");
    const auto& p = model.params;
    const double lr = p.learning_rate;
    const std::size_t h = model.hidden_count();

    std::vector<std::size_t> order(train.row_count());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(p.seed, kShuffleStream));
    MlpGradient grad;
    for (std::size_t epoch = 0; epoch < p.epochs; ++epoch) {
        shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += p.batch_size) {
            const std::size_t len = std::min(p.batch_size, order.size() - start);
            const std::span<const std::size_t> batch(order.data() + start, len);
            const double loss =
                mlp_loss_and_gradient(model, train.features(), train.labels(), batch, grad);
            epoch_loss += loss * static_cast<double>(len);
            if (lr == 0.0) continue;
            for (std::size_t i = 0; i < model.feature_count(); ++i) {
                auto w = model.input_weights.row(i);
                const auto g = grad.input_weights.row(i);
                for (std::size_t j = 0; j < h; ++j) w[j] -= lr * g[j];
            }
            for (std::size_t j = 0; j < h; ++j) {
                model.hidden_bias[j] -= lr * grad.hidden_bias[j];
                model.output_weights[j] -= lr * grad.output_weights[j];
            }
            model.output_bias -= lr * grad.output_bias;
        }
        epoch_loss /= static_cast<double>(order.size());
        if (!std::isfinite(epoch_loss)) throw DivergenceError(epoch + 1);
        model.epoch_loss.push_back(epoch_loss);
    }
}

MlpModel mlp_fit(const Dataset& train, const MlpParams& params) {
    auto model = mlp_init(train.feature_count(), params);
    mlp_train(model, train);
    return model;
}

double mlp_score(const MlpModel& model, std::span<const double> row) {
    check_width(model.feature_count(), row.size());
    std::vector<double> hidden(model.hidden_count());
    return sigmoid(forward(model, row, hidden));
}

// ---------------------------------------------------------------------------
// Shared contract

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Gnb: return "gnb";
        case ModelKind::Knn: return "knn";
        case ModelKind::Mlp: return "mlp";
    }
    return "gnb";
}

ModelKind parse_model_kind(std::string_view text) {
    if (text == "gnb") return ModelKind::Gnb;
    if (text == "knn") return ModelKind::Knn;
    if (text == "mlp") return ModelKind::Mlp;
    throw ConfigError("unknown model '" + std::string(text) + "' (expected gnb, knn or mlp)");
}

ModelKind kind_of(const TrainedModel& model) {
    return static_cast<ModelKind>(model.index());
}

std::size_t feature_count(const TrainedModel& model) {
    return std::visit([](const auto& m) { return m.feature_count(); }, model);
}

TrainedModel fit_model(const ModelSpec& spec, const Dataset& train) {
    switch (spec.kind) {
        case ModelKind::Gnb: return gnb_fit(train);
        case ModelKind::Knn: return KnnModel(train, spec.knn_k);
        case ModelKind::Mlp: return mlp_fit(train, spec.mlp);
    }
    throw ConfigError("unknown model kind");
}

double score(const TrainedModel& model, std::span<const double> row) {
    switch (model.index()) {
        case 0: return gnb_score(std::get<GnbModel>(model), row);
        case 1: return knn_score(std::get<KnnModel>(model), row);
        default: return mlp_score(std::get<MlpModel>(model), row);
    }
}

std::vector<double> score_batch(const TrainedModel& model, const Dataset& data) {
    if (data.row_count() == 0) return {};
    check_width(feature_count(model), data.feature_count());
    std::vector<double> out(data.row_count());
    for (std::size_t i = 0; i < data.row_count(); ++i) out[i] = score(model, data.row(i));
    return out;
}

std::vector<int> predict_batch(const TrainedModel& model, const Dataset& data) {
    const auto scores = score_batch(model, data);
    std::vector<int> out(scores.size());
    std::transform(scores.begin(), scores.end(), out.begin(), label_from_score);
    return out;
}

void save_model(const std::filesystem::path& path, const TrainedModel& model,
                const std::vector<std::string>& feature_names, const nlohmann::json& provenance) {
    nlohmann::json j;
    j["model"] = to_string(kind_of(model));
    j["feature_names"] = feature_names;
    j["provenance"] = provenance;
    if (const auto* g = std::get_if<GnbModel>(&model)) {
        j["priors"] = g->priors;
        j["means"] = matrix_to_json(g->means);
        j["variances"] = matrix_to_json(g->variances);
        j["epsilon"] = g->epsilon;
    } else if (const auto* k = std::get_if<KnnModel>(&model)) {
        j["k"] = k->k();
        j["train"] = matrix_to_json(k->train());
        j["labels"] = k->labels();
    } else {
        const auto& m = std::get<MlpModel>(model);
        j["params"] = mlp_params_to_json(m.params);
        j["input_weights"] = matrix_to_json(m.input_weights);
        j["hidden_bias"] = m.hidden_bias;
        j["output_weights"] = m.output_weights;
        j["output_bias"] = m.output_bias;
        j["epoch_loss"] = m.epoch_loss;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << j.dump(1) << '\n';
}

LoadedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
        const auto kind = parse_model_kind(j.at("model").get<std::string>());
        auto names = j.at("feature_names").get<std::vector<std::string>>();
        switch (kind) {
            case ModelKind::Gnb: {
                GnbModel g;
                g.priors = j.at("priors").get<std::array<double, 2>>();
                g.means = matrix_from_json(j.at("means"));
                g.variances = matrix_from_json(j.at("variances"));
                g.epsilon = j.at("epsilon").get<double>();
                return {std::move(g), std::move(names)};
            }
            case ModelKind::Knn:
                return {KnnModel(matrix_from_json(j.at("train")), j.at("labels").get<std::vector<int>>(),
                                 j.at("k").get<std::size_t>()),
                        std::move(names)};
            case ModelKind::Mlp: {
                MlpModel m;
                m.params = mlp_params_from_json(j.at("params"));
                m.input_weights = matrix_from_json(j.at("input_weights"));
                m.hidden_bias = j.at("hidden_bias").get<std::vector<double>>();
                m.output_weights = j.at("output_weights").get<std::vector<double>>();
                m.output_bias = j.at("output_bias").get<double>();
                m.epoch_loss = j.at("epoch_loss").get<std::vector<double>>();
                return {std::move(m), std::move(names)};
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("model file '" + path.string() + "': " + e.what());
    }
    throw SchemaError("model file '" + path.string() + "' names no known model");
}

}  // namespace botdetect
