#include "botdetect/preprocess.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

namespace botdetect {

namespace {

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("'" + path.string() + "': " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

}  // namespace

std::vector<FlowRecord> cleanse(std::span<const FlowRecord> records, const Schema& schema) {
    const auto features = schema.feature_columns();
    std::vector<FlowRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        if (!r.attack) continue;
        const bool complete = std::none_of(features.begin(), features.end(),
                                           [&](const std::string& f) { return is_missing(r.cell(f)); });
        if (complete) out.push_back(r);
    }
    if (out.empty() && !records.empty())
        throw DataError("cleansing dropped every row; no complete records remain");
    if (out.empty()) throw DataError("no records to cleanse");
    return out;
}

int CategoryCodes::code_of(std::string_view token) const {
    const auto it = std::find(tokens.begin(), tokens.end(), token);
    if (it == tokens.end()) throw UnknownCategoryError(field, std::string(token));
    return base + static_cast<int>(it - tokens.begin());
}

const CategoryCodes& EncodingMap::codes(std::string_view field) const {
    for (const auto& f : fields)
        if (f.field == field) return f;
    throw SchemaError("encoding has no codes for field '" + std::string(field) + "'");
}

int category_base(std::string_view field) {
    return field == "state" ? 10 : 1;
}

EncodingMap fit_encoding(std::span<const FlowRecord> records, const Schema& schema) {
    EncodingMap map;
    for (const auto& col : schema.columns) {
        if (col.role != ColumnRole::Categorical) continue;
        CategoryCodes codes{col.name, category_base(col.name), {}};
        for (const auto& r : records) {
            const Cell c = r.cell(col.name);
            std::string token;
            if (const auto* s = std::get_if<std::string>(&c)) token = *s;
            else if (const auto* d = std::get_if<double>(&c)) token = format_double(*d);
            else continue;
            if (std::find(codes.tokens.begin(), codes.tokens.end(), token) == codes.tokens.end())
                codes.tokens.push_back(std::move(token));
        }
        map.fields.push_back(std::move(codes));
    }
    return map;
}

Dataset apply_encoding(std::span<const FlowRecord> records, const Schema& schema,
                       const EncodingMap& encoding) {
    const auto names = schema.feature_columns();
    std::vector<const CategoryCodes*> codes(names.size(), nullptr);
    for (std::size_t j = 0; j < names.size(); ++j)
        if (schema.role_of(names[j]) == ColumnRole::Categorical) codes[j] = &encoding.codes(names[j]);

    Matrix m(records.size(), names.size());
    std::vector<int> labels(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!r.attack) throw DataError("record " + std::to_string(i) + " has no label; cleanse first");
        labels[i] = *r.attack;
        for (std::size_t j = 0; j < names.size(); ++j) {
            const Cell c = r.cell(names[j]);
            if (is_missing(c))
                throw DataError("record " + std::to_string(i) + " is missing '" + names[j] +
                                "'; cleanse first");
            if (codes[j]) {
                const auto* s = std::get_if<std::string>(&c);
                m(i, j) = codes[j]->code_of(s ? *s : format_double(std::get<double>(c)));
            } else if (const auto* d = std::get_if<double>(&c)) {
                m(i, j) = *d;
            } else {
                throw SchemaError("numeric column '" + names[j] + "' holds a token");
            }
        }
    }
    return Dataset(std::move(m), std::move(labels), names);
}

ScalerParams fit_scaler(const Dataset& data) {
    if (data.row_count() == 0) throw DataError("cannot fit a scaler on an empty dataset");
    const std::size_t d = data.feature_count();
    ScalerParams p{std::vector<double>(d), std::vector<double>(d)};
    for (std::size_t j = 0; j < d; ++j) p.minimum[j] = p.maximum[j] = data.features()(0, j);
    for (std::size_t i = 1; i < data.row_count(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double v = data.features()(i, j);
            p.minimum[j] = std::min(p.minimum[j], v);
            p.maximum[j] = std::max(p.maximum[j], v);
        }
    }
    return p;
}

Dataset apply_scaler(const Dataset& data, const ScalerParams& params) {
    const std::size_t d = data.feature_count();
    if (params.feature_count() != d || params.maximum.size() != d)
        throw ShapeError("scaler fitted on " + std::to_string(params.feature_count()) +
                         " features, dataset has " + std::to_string(d));
    Matrix m(data.row_count(), d);
    for (std::size_t i = 0; i < data.row_count(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double range = params.maximum[j] - params.minimum[j];
            if (range <= 0.0) {
                m(i, j) = 0.0;
                continue;
            }
            const double v = (data.features()(i, j) - params.minimum[j]) / range;
            m(i, j) = std::clamp(v, 0.0, 1.0);
        }
    }
    return Dataset(std::move(m), data.labels(), data.feature_names());
}

void save_encoding(const std::filesystem::path& path, const EncodingMap& encoding) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& f : encoding.fields)
        j.push_back({{"field", f.field}, {"base", f.base}, {"tokens", f.tokens}});
    write_json(path, {{"encoding", j}});
}

EncodingMap load_encoding(const std::filesystem::path& path) {
    const auto j = read_json(path);
    EncodingMap map;
    for (const auto& f : j.at("encoding"))
        map.fields.push_back({f.at("field").get<std::string>(), f.at("base").get<int>(),
                              f.at("tokens").get<std::vector<std::string>>()});
    return map;
}

void save_scaler(const std::filesystem::path& path, const ScalerParams& params) {
    write_json(path, {{"minimum", params.minimum}, {"maximum", params.maximum}});
}

ScalerParams load_scaler(const std::filesystem::path& path) {
    const auto j = read_json(path);
    ScalerParams p{j.at("minimum").get<std::vector<double>>(), j.at("maximum").get<std::vector<double>>()};
    if (p.minimum.size() != p.maximum.size()) throw SchemaError("scaler minimum/maximum length differ");
    return p;
}

}  // namespace botdetect
