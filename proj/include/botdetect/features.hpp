#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "botdetect/dataset.hpp"

namespace botdetect {

struct FeatureScoreReport {
    std::vector<std::string> names;   // candidate features, dataset column order
    std::vector<double> scores;       // chi-square per candidate, >= 0
    double mean_score = 0.0;
    std::vector<bool> selected;       // scores[i] > mean_score
    std::vector<std::string> ranked_names;  // descending score, ties keep column order

    std::size_t selected_count() const;
};

// Chi-square association between each non-negative feature and the label.
// Observed per class is the class sum of the feature; expected is the class
// row fraction times the grand sum. All-zero features score 0.
FeatureScoreReport chi2_scores(const Dataset& data);

// Keeps exactly the columns selected in `report`. Throws DataError when
// nothing is selected (all scores equal).
Dataset select_features(const Dataset& data, const FeatureScoreReport& report);

// "feature<TAB>score" lines, descending by score, with a header row.
void write_score_table(const std::filesystem::path& path, const FeatureScoreReport& report);

}  // namespace botdetect
