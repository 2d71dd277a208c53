#include "botdetect/resample.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "botdetect/random.hpp"

namespace botdetect {

namespace {

constexpr std::uint64_t kPermutationStream = 0xC0FFEEULL << 32;

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

// k nearest other points for each point; ties broken by lower index.
std::vector<std::vector<std::size_t>> nearest_neighbors(const Matrix& points, std::size_t k) {
    const std::size_t m = points.rows();
    std::vector<std::vector<std::size_t>> out(m);
    std::vector<std::pair<double, std::size_t>> cand;
    cand.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        cand.clear();
        for (std::size_t j = 0; j < m; ++j)
            if (j != i) cand.emplace_back(squared_distance(points.row(i), points.row(j)), j);
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
        out[i].reserve(k);
        for (std::size_t t = 0; t < k; ++t) out[i].push_back(cand[t].second);
    }
    return out;
}

}  // namespace

Dataset smote(const Dataset& data, const SmoteConfig& config) {
    const auto counts = data.class_counts();
    if (counts.normal == 0 || counts.botnet == 0)
        throw DataError("SMOTE needs both classes present");
    if (config.k_neighbors < 1) throw ConfigError("SMOTE k_neighbors must be at least 1");
    if (!(config.target_ratio > 0.0) || config.target_ratio > 1.0)
        throw ConfigError("SMOTE target_ratio must lie in (0, 1]");

    const int minority = counts.minority_label();
    const std::size_t m = counts.minority();
    if (m <= config.k_neighbors)
        throw ConfigError("SMOTE k_neighbors=" + std::to_string(config.k_neighbors) +
                          " needs more than that many minority rows, got " + std::to_string(m));

    const auto target = static_cast<std::size_t>(
        std::floor(config.target_ratio * static_cast<double>(counts.majority()) + 0.5));
    const std::size_t need = target > m ? target - m : 0;

    Matrix out = data.features();
    std::vector<int> labels = data.labels();
    if (need == 0) return Dataset(std::move(out), std::move(labels), data.feature_names());

    std::vector<std::size_t> minority_rows;
    for (std::size_t i = 0; i < data.row_count(); ++i)
        if (data.label(i) == minority) minority_rows.push_back(i);
    const Matrix points = data.subset(minority_rows).features();
    const auto neighbors = nearest_neighbors(points, config.k_neighbors);

    std::vector<std::size_t> quota(m, need / m);
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    Rng perm_rng(mix_seed(config.seed, kPermutationStream));
    shuffle(order.begin(), order.end(), perm_rng);
    for (std::size_t t = 0; t < need % m; ++t) ++quota[order[t]];

    const std::size_t d = data.feature_count();
    out.reserve_rows(data.row_count() + need);
    labels.reserve(data.row_count() + need);
    std::vector<double> sample(d);
    for (std::size_t i = 0; i < m; ++i) {
        Rng rng(mix_seed(config.seed, i));
        const auto p = points.row(i);
        for (std::size_t s = 0; s < quota[i]; ++s) {
            const auto q = points.row(neighbors[i][uniform_index(rng, config.k_neighbors)]);
            const double u = uniform01(rng);
            for (std::size_t j = 0; j < d; ++j) {
                const auto [lo, hi] = std::minmax(p[j], q[j]);
                sample[j] = std::clamp(p[j] + u * (q[j] - p[j]), lo, hi);
            }
            out.append_row(sample);
            labels.push_back(minority);
        }
    }
    return Dataset(std::move(out), std::move(labels), data.feature_names());
}

std::vector<bool> synthetic_mask(std::size_t original_rows, const Dataset& balanced) {
    std::vector<bool> mask(balanced.row_count(), false);
    for (std::size_t i = original_rows; i < mask.size(); ++i) mask[i] = true;
    return mask;
}

}  // namespace botdetect
