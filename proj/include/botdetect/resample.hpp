#pragma once

#include <cstdint>
#include <vector>

#include "botdetect/dataset.hpp"

namespace botdetect {

struct SmoteConfig {
    std::size_t k_neighbors = 5;
    // Minority output count = round(target_ratio * majority count); 1.0 balances.
    double target_ratio = 1.0;
    std::uint64_t seed = 0;
};

// SMOTE oversampling of the minority class. Output holds every input row
// unchanged and in order, followed by the synthetic minority rows. Each
// synthetic row is p + u (q - p) for a minority point p, one of its
// k nearest minority neighbours q (Euclidean, ties to lower index) and
// u ~ U[0,1]. Per-point quotas are spread round-robin over a seeded
// permutation; every point draws from its own stream so results depend
// only on the seed.
Dataset smote(const Dataset& data, const SmoteConfig& config);

// Rows at index >= original_rows in a smote() output are synthetic.
std::vector<bool> synthetic_mask(std::size_t original_rows, const Dataset& balanced);

}  // namespace botdetect
