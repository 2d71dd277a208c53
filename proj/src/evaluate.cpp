#include "botdetect/evaluate.hpp"

#include <algorithm>
#include <array>
#include <cfenv>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "botdetect/preprocess.hpp"
#include "botdetect/random.hpp"

namespace botdetect {

namespace {

double ratio(std::size_t num, std::size_t den, bool& undefined) {
    undefined = den == 0;
    return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::size_t round_half_up(double x) {
    return static_cast<std::size_t>(std::floor(x + 0.5));
}

Split train_test_split(const Dataset& data, const SplitOptions& options) {
    const std::size_t n = data.row_count();
    if (!(options.test_fraction > 0.0 && options.test_fraction < 1.0))
        throw ConfigError("test fraction must lie strictly between 0 and 1");
    if (n < 2) throw DataError("splitting needs at least two rows");
    const std::size_t n_test = round_half_up(static_cast<double>(n) * options.test_fraction);
    if (n_test == 0 || n_test >= n)
        throw DataError("a test fraction of " + format_double(options.test_fraction) + " on " +
                        std::to_string(n) + " rows leaves one side empty");

    Rng rng(options.seed);
    std::vector<std::size_t> test_rows;
    if (options.stratified) {
        std::array<std::vector<std::size_t>, 2> by_class;
        for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(data.label(i))].push_back(i);
        std::array<std::size_t, 2> take{};
        std::array<double, 2> remainder{};
        std::size_t assigned = 0;
        for (std::size_t c = 0; c < 2; ++c) {
            const double exact = static_cast<double>(by_class[c].size()) * options.test_fraction;
            take[c] = static_cast<std::size_t>(std::floor(exact));
            remainder[c] = exact - static_cast<double>(take[c]);
            assigned += take[c];
        }
        // Largest remainder first; a tie favours the smaller class.
        std::array<std::size_t, 2> order{0, 1};
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
            return by_class[a].size() < by_class[b].size();
        });
        for (std::size_t t = 0; assigned < n_test; t = (t + 1) % 2) {
            const auto c = order[t];
            if (take[c] < by_class[c].size()) {
                ++take[c];
                ++assigned;
            }
        }
        for (std::size_t c = 0; c < 2; ++c) {
            shuffle(by_class[c].begin(), by_class[c].end(), rng);
            test_rows.insert(test_rows.end(), by_class[c].begin(),
                             by_class[c].begin() + static_cast<std::ptrdiff_t>(take[c]));
        }
    } else {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), 0);
        shuffle(all.begin(), all.end(), rng);
        test_rows.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_test));
    }
    std::sort(test_rows.begin(), test_rows.end());
    std::vector<std::size_t> train_rows;
    train_rows.reserve(n - test_rows.size());
    for (std::size_t i = 0, t = 0; i < n; ++i) {
        if (t < test_rows.size() && test_rows[t] == i) ++t;
        else train_rows.push_back(i);
    }
    Split s{data.subset(train_rows), data.subset(test_rows), std::move(train_rows), std::move(test_rows)};
    return s;
}

std::vector<std::vector<std::size_t>> make_folds(std::span<const int> labels, std::size_t k,
                                                 std::uint64_t seed, bool stratified) {
    if (k < 2) throw ConfigError("cross-validation needs k >= 2");
    if (k > labels.size())
        throw ConfigError("cannot make " + std::to_string(k) + " folds from " +
                          std::to_string(labels.size()) + " rows");
    Rng rng(seed);
    std::vector<std::size_t> deal;
    deal.reserve(labels.size());
    if (stratified) {
        for (int c : {kNormal, kBotnet}) {
            std::vector<std::size_t> rows;
            for (std::size_t i = 0; i < labels.size(); ++i)
                if (labels[i] == c) rows.push_back(i);
            shuffle(rows.begin(), rows.end(), rng);
            deal.insert(deal.end(), rows.begin(), rows.end());
        }
    } else {
        deal.resize(labels.size());
        std::iota(deal.begin(), deal.end(), 0);
        shuffle(deal.begin(), deal.end(), rng);
    }
    std::vector<std::vector<std::size_t>> folds(k);
    for (std::size_t p = 0; p < deal.size(); ++p) folds[p % k].push_back(deal[p]);
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted) {
    if (truth.size() != predicted.size())
        throw ShapeError("confusion: " + std::to_string(truth.size()) + " true labels vs " +
                         std::to_string(predicted.size()) + " predictions");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool actual = truth[i] == kBotnet;
        const bool pred = predicted[i] == kBotnet;
        if (actual && pred) ++cm.tp;
        else if (actual) ++cm.fn;
        else if (pred) ++cm.fp;
        else ++cm.tn;
    }
    return cm;
}

RocCurve roc_curve(std::span<const double> scores, std::span<const int> truth) {
    if (scores.size() != truth.size()) throw ShapeError("roc_curve: scores and labels differ in length");
    const auto positives = static_cast<std::size_t>(std::count(truth.begin(), truth.end(), kBotnet));
    const std::size_t negatives = truth.size() - positives;
    if (positives == 0 || negatives == 0)
        throw DataError("ROC curve is undefined when only one class is present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    // Twice the area times P*N, kept in integers so the result is exact.
    unsigned long long doubled_area = 0;
    const double p = static_cast<double>(positives), n = static_cast<double>(negatives);
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        const std::size_t prev_tp = tp, prev_fp = fp;
        for (; i < order.size() && scores[order[i]] == s; ++i) {
            if (truth[order[i]] == kBotnet) ++tp;
            else ++fp;
        }
        doubled_area += static_cast<unsigned long long>(fp - prev_fp) * (tp + prev_tp);
        curve.points.push_back({static_cast<double>(fp) / n, static_cast<double>(tp) / p});
    }
    curve.auc = static_cast<double>(doubled_area) / (2.0 * p * n);
    return curve;
}

std::vector<std::string> Metrics::degenerate_fields() const {
    std::vector<std::string> out;
    if (precision_undefined) out.emplace_back("precision");
    if (recall_undefined) out.emplace_back("recall");
    if (f1_undefined) out.emplace_back("f1");
    if (fpr_undefined) out.emplace_back("fpr");
    if (auc_undefined) out.emplace_back("roc_auc");
    return out;
}

Metrics metrics_from(const ConfusionMatrix& cm, std::span<const double> scores,
                     std::span<const int> truth) {
    if (cm.total() != scores.size() || scores.size() != truth.size())
        throw ShapeError("confusion matrix total does not match score/label counts");
    Metrics m;
    bool unused = false;
    m.accuracy = ratio(cm.tp + cm.tn, cm.total(), unused);
    m.precision = ratio(cm.tp, cm.tp + cm.fp, m.precision_undefined);
    m.recall = ratio(cm.tp, cm.tp + cm.fn, m.recall_undefined);
    m.tpr = m.recall;
    m.fpr = ratio(cm.fp, cm.fp + cm.tn, m.fpr_undefined);
    const double pr = m.precision + m.recall;
    m.f1_undefined = m.precision_undefined || m.recall_undefined || pr == 0.0;
    m.f1 = m.f1_undefined ? 0.0 : 2.0 * m.precision * m.recall / pr;
    const bool both = cm.tp + cm.fn > 0 && cm.tn + cm.fp > 0;
    if (both) m.roc_auc = roc_curve(scores, truth).auc;
    else m.auc_undefined = true;
    return m;
}

CvResult cross_validate(const Dataset& data, const ModelSpec& spec, const CvOptions& options) {
    const auto folds = make_folds(data.labels(), options.k, options.seed, options.stratified);
    CvResult result;
    result.k = options.k;
    result.seed = options.seed;
    result.stratified = options.stratified;

    std::vector<char> in_fold(data.row_count());
    for (std::size_t f = 0; f < folds.size(); ++f) {
        std::fill(in_fold.begin(), in_fold.end(), 0);
        for (auto r : folds[f]) in_fold[r] = 1;
        std::vector<std::size_t> train_rows;
        for (std::size_t i = 0; i < data.row_count(); ++i)
            if (!in_fold[i]) train_rows.push_back(i);

        Dataset train = data.subset(train_rows);
        Dataset test = data.subset(folds[f]);
        const auto counts = train.class_counts();
        if (counts.normal == 0 || counts.botnet == 0)
            throw DataError("fold " + std::to_string(f) +
                            " training portion holds a single class; use stratified folds");
        if (options.scale_in_fold) {
            const auto params = fit_scaler(train);
            train = apply_scaler(train, params);
            test = apply_scaler(test, params);
        }
        if (options.smote_in_fold) {
            auto cfg = *options.smote_in_fold;
            cfg.seed = mix_seed(cfg.seed, f);
            train = smote(train, cfg);
        }
        const auto model = fit_model(spec, train);
        const auto scores = score_batch(model, test);
        std::vector<int> pred(scores.size());
        std::transform(scores.begin(), scores.end(), pred.begin(), label_from_score);
        result.fold_sizes.push_back(folds[f].size());
        result.folds.push_back(metrics_from(confusion(test.labels(), pred), scores, test.labels()));
    }

    const double k = static_cast<double>(result.folds.size());
    auto stat = [&](double Metrics::*field) {
        double mean = 0.0;
        for (const auto& m : result.folds) mean += m.*field;
        mean /= k;
        double var = 0.0;
        for (const auto& m : result.folds) var += (m.*field - mean) * (m.*field - mean);
        result.summary.mean.*field = mean;
        result.summary.stddev.*field = std::sqrt(var / k);
    };
    for (auto field : {&Metrics::accuracy, &Metrics::precision, &Metrics::recall, &Metrics::f1,
                       &Metrics::roc_auc, &Metrics::tpr, &Metrics::fpr})
        stat(field);
    for (const auto& m : result.folds) {
        result.summary.mean.precision_undefined |= m.precision_undefined;
        result.summary.mean.recall_undefined |= m.recall_undefined;
        result.summary.mean.f1_undefined |= m.f1_undefined;
        result.summary.mean.fpr_undefined |= m.fpr_undefined;
        result.summary.mean.auc_undefined |= m.auc_undefined;
    }
    return result;
}

EvalReport evaluate_model(const TrainedModel& model, const Dataset& test, std::string model_name,
                          std::string dataset, std::string provenance) {
    EvalReport r;
    r.model = std::move(model_name);
    r.dataset = std::move(dataset);
    r.provenance = std::move(provenance);
    const auto scores = score_batch(model, test);
    std::vector<int> pred(scores.size());
    std::transform(scores.begin(), scores.end(), pred.begin(), label_from_score);
    r.confusion = confusion(test.labels(), pred);
    r.metrics = metrics_from(r.confusion, scores, test.labels());
    if (!r.metrics.auc_undefined) r.roc = roc_curve(scores, test.labels());
    return r;
}

std::string format_percent(double fraction) {
    const int saved = std::fegetround();
    std::fesetround(FE_TONEAREST);
    const auto tenths = static_cast<long long>(std::nearbyint(fraction * 1000.0));
    std::fesetround(saved);
    const long long whole = tenths / 10;
    const long long frac = tenths % 10;
    std::string out = (tenths < 0 && whole == 0) ? "-0" : std::to_string(whole);
    return out + "." + std::to_string(frac < 0 ? -frac : frac);
}

nlohmann::json metrics_to_json(const Metrics& m) {
    nlohmann::json j;
    j["accuracy"] = m.accuracy;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["roc_auc"] = m.roc_auc;
    j["tpr"] = m.tpr;
    j["fpr"] = m.fpr;
    j["percent"] = {{"accuracy", format_percent(m.accuracy)},
                    {"precision", format_percent(m.precision)},
                    {"recall", format_percent(m.recall)},
                    {"f1", format_percent(m.f1)},
                    {"roc_auc", format_percent(m.roc_auc)}};
    j["degenerate"] = m.degenerate_fields();
    return j;
}

nlohmann::json to_json(const CvResult& cv) {
    nlohmann::json j;
    j["k"] = cv.k;
    j["seed"] = cv.seed;
    j["stratified"] = cv.stratified;
    j["fold_sizes"] = cv.fold_sizes;
    j["folds"] = nlohmann::json::array();
    for (const auto& m : cv.folds) j["folds"].push_back(metrics_to_json(m));
    j["mean"] = metrics_to_json(cv.summary.mean);
    j["stddev"] = metrics_to_json(cv.summary.stddev);
    j["stddev"].erase("degenerate");
    j["stddev_formula"] = "population (divide by k)";
    return j;
}

nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json j;
    j["model"] = r.model;
    j["dataset"] = r.dataset;
    j["provenance"] = r.provenance;
    j["confusion"] = {{"tp", r.confusion.tp}, {"tn", r.confusion.tn},
                      {"fp", r.confusion.fp}, {"fn", r.confusion.fn}};
    j["metrics"] = metrics_to_json(r.metrics);
    j["roc_points"] = r.roc.points.size();
    if (r.cv) j["cross_validation"] = to_json(*r.cv);
    return j;
}

void write_roc_file(const std::filesystem::path& path, const RocCurve& curve) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << "fpr\ttpr\n";
    for (const auto& p : curve.points) out << format_double(p.fpr) << '\t' << format_double(p.tpr) << '\n';
}

}  // namespace botdetect
