#include "botdetect/features.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

namespace botdetect {

std::size_t FeatureScoreReport::selected_count() const {
    return static_cast<std::size_t>(std::count(selected.begin(), selected.end(), true));
}

FeatureScoreReport chi2_scores(const Dataset& data) {
    const auto counts = data.class_counts();
    if (counts.normal == 0 || counts.botnet == 0)
        throw DataError("chi-square scoring needs both classes present");

    const std::size_t d = data.feature_count();
    const double n = static_cast<double>(data.row_count());
    const double prior[2] = {static_cast<double>(counts.normal) / n,
                             static_cast<double>(counts.botnet) / n};

    std::vector<double> class_sum(2 * d, 0.0);
    // A constant column is independent of the label; its score is exactly 0
    // rather than whatever rounding leaves behind.
    std::vector<bool> constant(d, true);
    for (std::size_t i = 0; i < data.row_count(); ++i) {
        const auto row = data.row(i);
        double* acc = class_sum.data() + data.label(i) * d;
        for (std::size_t j = 0; j < d; ++j) {
            if (row[j] < 0.0)
                throw DataError("chi-square scoring needs non-negative features; '" +
                                data.feature_names()[j] + "' has a negative value");
            acc[j] += row[j];
            if (row[j] != data.row(0)[j]) constant[j] = false;
        }
    }

    FeatureScoreReport report;
    report.names = data.feature_names();
    report.scores.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        const double observed[2] = {class_sum[j], class_sum[d + j]};
        const double total = observed[0] + observed[1];
        if (total <= 0.0 || constant[j]) continue;
        double score = 0.0;
        for (int c = 0; c < 2; ++c) {
            const double expected = prior[c] * total;
            const double diff = observed[c] - expected;
            score += diff * diff / expected;
        }
        report.scores[j] = score;
    }

    report.mean_score = d ? std::accumulate(report.scores.begin(), report.scores.end(), 0.0) /
                                static_cast<double>(d)
                          : 0.0;
    report.selected.resize(d);
    for (std::size_t j = 0; j < d; ++j) report.selected[j] = report.scores[j] > report.mean_score;

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return report.scores[a] > report.scores[b]; });
    for (auto j : order) report.ranked_names.push_back(report.names[j]);
    return report;
}

Dataset select_features(const Dataset& data, const FeatureScoreReport& report) {
    if (data.feature_names() != report.names)
        throw ShapeError("score report was computed for different feature columns");
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < report.selected.size(); ++j)
        if (report.selected[j]) keep.push_back(j);
    if (keep.empty()) throw DataError("no feature scores above the mean (all scores equal)");
    return data.select_columns(keep);
}

void write_score_table(const std::filesystem::path& path, const FeatureScoreReport& report) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << "feature\tscore\n";
    for (const auto& name : report.ranked_names) {
        const auto j = static_cast<std::size_t>(
            std::find(report.names.begin(), report.names.end(), name) - report.names.begin());
        out << name << '\t' << format_double(report.scores[j]) << '\n';
    }
}

}  // namespace botdetect
