#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "botdetect/dataset.hpp"

namespace botdetect {

// Drops every record with a missing value in a declared feature column or
// the label. Order is preserved. Throws DataError if nothing survives.
std::vector<FlowRecord> cleanse(std::span<const FlowRecord> records, const Schema& schema);

// Integer codes for one categorical column, assigned base, base+1, ...
// in first-appearance order.
struct CategoryCodes {
    std::string field;
    int base = 1;
    std::vector<std::string> tokens;  // tokens[i] has code base + i

    bool operator==(const CategoryCodes&) const = default;
    int code_of(std::string_view token) const;  // throws UnknownCategoryError
};

struct EncodingMap {
    std::vector<CategoryCodes> fields;

    const CategoryCodes& codes(std::string_view field) const;
    bool operator==(const EncodingMap&) const = default;
};

// proto codes start at 1, state codes at 10, any other categorical column at 1.
int category_base(std::string_view field);

EncodingMap fit_encoding(std::span<const FlowRecord> records, const Schema& schema);

// Builds the model-ready Dataset: schema feature columns in declaration
// order, categorical tokens replaced by their codes. Records must be cleansed.
Dataset apply_encoding(std::span<const FlowRecord> records, const Schema& schema,
                       const EncodingMap& encoding);

struct ScalerParams {
    std::vector<double> minimum;
    std::vector<double> maximum;

    std::size_t feature_count() const noexcept { return minimum.size(); }
    bool operator==(const ScalerParams&) const = default;
};

ScalerParams fit_scaler(const Dataset& data);
// (x - min) / (max - min), clamped to [0, 1]; constant features map to 0.
Dataset apply_scaler(const Dataset& data, const ScalerParams& params);

void save_encoding(const std::filesystem::path& path, const EncodingMap& encoding);
EncodingMap load_encoding(const std::filesystem::path& path);
void save_scaler(const std::filesystem::path& path, const ScalerParams& params);
ScalerParams load_scaler(const std::filesystem::path& path);

}  // namespace botdetect
