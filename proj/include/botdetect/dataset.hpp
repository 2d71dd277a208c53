#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "botdetect/matrix.hpp"

namespace botdetect {

// Label convention: 1 = botnet (positive class), 0 = normal.
inline constexpr int kNormal = 0;
inline constexpr int kBotnet = 1;

// A single CSV cell after parsing: missing, numeric, or a token.
using Cell = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const Cell& c) { return std::holds_alternative<std::monostate>(c); }

// One raw flow row in the BoT-IoT column layout.
struct FlowRecord {
    std::optional<double> pkts;
    std::optional<double> bytes;
    std::optional<double> dur;
    std::optional<std::string> proto;
    std::optional<std::string> state;
    std::optional<double> spkts;
    std::optional<double> dpkts;
    std::optional<double> sbytes;
    std::optional<double> dbytes;
    std::optional<double> rate;
    std::optional<double> srate;
    std::optional<double> drate;
    std::optional<int> attack;
    // Any other non-ignored schema column, in header order.
    std::vector<std::pair<std::string, Cell>> extra;

    // Look up a column by name, known field or extra. Unknown names are missing.
    Cell cell(std::string_view name) const;
    // Store a value by name. Known numeric fields accept numbers only,
    // proto/state accept tokens only; anything else lands in `extra`.
    void set(std::string_view name, Cell value);

    bool operator==(const FlowRecord&) const = default;
};

// Names of the twelve fixed FlowRecord feature fields, in declaration order.
std::span<const std::string_view> flow_field_names();
bool is_token_field(std::string_view name);

enum class ColumnRole { Numeric, Categorical, Label, Ignore };

std::string_view to_string(ColumnRole role);
ColumnRole parse_role(std::string_view text);

struct ColumnSpec {
    std::string name;
    ColumnRole role;
};

// Column-role declaration. Columns absent from the schema get `default_role`.
struct Schema {
    std::vector<ColumnSpec> columns;
    ColumnRole default_role = ColumnRole::Ignore;

    ColumnRole role_of(std::string_view name) const;
    // Exactly one label column is required.
    const std::string& label_column() const;
    // Numeric and categorical columns, in declaration order.
    std::vector<std::string> feature_columns() const;

    // The twelve FlowRecord fields plus `attack` as label; proto/state categorical.
    static Schema botiot_default();
    static Schema load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

// Streams FlowRecords to CSV one row at a time with a fixed column list.
class RecordWriter {
public:
    RecordWriter(const std::filesystem::path& path, std::vector<std::string> columns,
                 std::string label_column);
    // Columns: the schema's non-ignored columns.
    RecordWriter(const std::filesystem::path& path, const Schema& schema);

    void write(const FlowRecord& record);
    // Flushes and reports stream failure.
    void close();

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::vector<std::string> columns_;
    std::string label_;
};

std::vector<FlowRecord> load_csv(const std::filesystem::path& path, const Schema& schema);
// Writes the schema's non-ignored columns (plus every extra column seen)
// with round-trip precision; missing values become empty cells.
void write_csv(const std::filesystem::path& path, std::span<const FlowRecord> records,
               const Schema& schema);

struct ClassCounts {
    std::size_t normal = 0;
    std::size_t botnet = 0;

    std::size_t total() const noexcept { return normal + botnet; }
    std::size_t minority() const noexcept { return normal < botnet ? normal : botnet; }
    std::size_t majority() const noexcept { return normal < botnet ? botnet : normal; }
    int minority_label() const noexcept { return normal <= botnet ? kNormal : kBotnet; }
    bool operator==(const ClassCounts&) const = default;
};

struct FeatureMeans {
    std::string name;
    std::optional<double> normal;  // absent when the class has no present value
    std::optional<double> botnet;
};

struct ClassSummary {
    ClassCounts counts;
    std::vector<FeatureMeans> means;
};

// Per-class means of every numeric column, over present values only.
ClassSummary class_summary(std::span<const FlowRecord> records);

// Numeric feature matrix + binary labels. Immutable once built.
class Dataset {
public:
    Dataset() = default;
    Dataset(Matrix features, std::vector<int> labels, std::vector<std::string> feature_names);

    const Matrix& features() const noexcept { return features_; }
    const std::vector<int>& labels() const noexcept { return labels_; }
    const std::vector<std::string>& feature_names() const noexcept { return names_; }
    std::size_t row_count() const noexcept { return labels_.size(); }
    std::size_t feature_count() const noexcept { return names_.size(); }
    ClassCounts class_counts() const noexcept { return counts_; }

    std::span<const double> row(std::size_t i) const { return features_.row(i); }
    int label(std::size_t i) const { return labels_[i]; }

    Dataset subset(std::span<const std::size_t> rows) const;
    Dataset select_columns(std::span<const std::size_t> cols) const;

    bool operator==(const Dataset&) const = default;

private:
    Matrix features_;
    std::vector<int> labels_;
    std::vector<std::string> names_;
    ClassCounts counts_;
};

// Dataset CSV: feature columns, then `attack`; an optional trailing
// `synthetic` 0/1 column flags rows created by oversampling.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data,
                       const std::vector<bool>& synthetic = {});
Dataset read_dataset_csv(const std::filesystem::path& path);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
// Strict full-cell parse; accepts scientific notation. Empty/garbage -> nullopt.
std::optional<double> parse_double(std::string_view text);

}  // namespace botdetect
