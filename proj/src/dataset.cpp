#include "botdetect/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace botdetect {

namespace {

constexpr std::array<std::string_view, 12> kFieldNames = {
    "pkts", "bytes", "dur", "proto", "state", "spkts",
    "dpkts", "sbytes", "dbytes", "rate", "srate", "drate"};

std::optional<double> FlowRecord::*numeric_member(std::string_view name) {
    if (name == "pkts") return &FlowRecord::pkts;
    if (name == "bytes") return &FlowRecord::bytes;
    if (name == "dur") return &FlowRecord::dur;
    if (name == "spkts") return &FlowRecord::spkts;
    if (name == "dpkts") return &FlowRecord::dpkts;
    if (name == "sbytes") return &FlowRecord::sbytes;
    if (name == "dbytes") return &FlowRecord::dbytes;
    if (name == "rate") return &FlowRecord::rate;
    if (name == "srate") return &FlowRecord::srate;
    if (name == "drate") return &FlowRecord::drate;
    return nullptr;
}

std::optional<std::string> FlowRecord::*token_member(std::string_view name) {
    if (name == "proto") return &FlowRecord::proto;
    if (name == "state") return &FlowRecord::state;
    return nullptr;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

// Splits one CSV line; double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.emplace_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.emplace_back(trim(cur));
    return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    return out;
}

std::optional<int> parse_label(std::string_view text, std::size_t line_no) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    if (text == "0") return 0;
    if (text == "1") return 1;
    throw SchemaError("label value '" + std::string(text) + "' on line " +
                      std::to_string(line_no) + " is not 0 or 1");
}

std::string cell_text(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
    if (const auto* s = std::get_if<std::string>(&c)) return *s;
    return {};
}

}  // namespace

std::span<const std::string_view> flow_field_names() { return kFieldNames; }

bool is_token_field(std::string_view name) { return token_member(name) != nullptr; }

Cell FlowRecord::cell(std::string_view name) const {
    if (auto m = numeric_member(name)) {
        const auto& v = this->*m;
        return v ? Cell{*v} : Cell{};
    }
    if (auto m = token_member(name)) {
        const auto& v = this->*m;
        return v ? Cell{*v} : Cell{};
    }
    if (name == "attack") return attack ? Cell{static_cast<double>(*attack)} : Cell{};
    for (const auto& [k, v] : extra)
        if (k == name) return v;
    return {};
}

void FlowRecord::set(std::string_view name, Cell value) {
    if (auto m = numeric_member(name)) {
        if (std::holds_alternative<std::string>(value))
            throw SchemaError("field '" + std::string(name) + "' is numeric");
        this->*m = is_missing(value) ? std::nullopt : std::optional<double>(std::get<double>(value));
        return;
    }
    if (auto m = token_member(name)) {
        if (std::holds_alternative<double>(value))
            throw SchemaError("field '" + std::string(name) + "' holds tokens");
        this->*m = is_missing(value) ? std::nullopt
                                     : std::optional<std::string>(std::get<std::string>(value));
        return;
    }
    for (auto& [k, v] : extra) {
        if (k == name) {
            v = std::move(value);
            return;
        }
    }
    extra.emplace_back(std::string(name), std::move(value));
}

std::string_view to_string(ColumnRole role) {
    switch (role) {
        case ColumnRole::Numeric: return "numeric";
        case ColumnRole::Categorical: return "categorical";
        case ColumnRole::Label: return "label";
        case ColumnRole::Ignore: return "ignore";
    }
    return "ignore";
}

ColumnRole parse_role(std::string_view text) {
    if (text == "numeric") return ColumnRole::Numeric;
    if (text == "categorical") return ColumnRole::Categorical;
    if (text == "label") return ColumnRole::Label;
    if (text == "ignore") return ColumnRole::Ignore;
    throw SchemaError("unknown column role '" + std::string(text) + "'");
}

ColumnRole Schema::role_of(std::string_view name) const {
    for (const auto& c : columns)
        if (c.name == name) return c.role;
    return default_role;
}

const std::string& Schema::label_column() const {
    const ColumnSpec* found = nullptr;
    for (const auto& c : columns) {
        if (c.role != ColumnRole::Label) continue;
        if (found) throw SchemaError("schema declares more than one label column");
        found = &c;
    }
    if (!found) throw SchemaError("schema declares no label column");
    return found->name;
}

std::vector<std::string> Schema::feature_columns() const {
    std::vector<std::string> out;
    for (const auto& c : columns)
        if (c.role == ColumnRole::Numeric || c.role == ColumnRole::Categorical)
            out.push_back(c.name);
    return out;
}

Schema Schema::botiot_default() {
    Schema s;
    for (auto name : kFieldNames) {
        const auto role = is_token_field(name) ? ColumnRole::Categorical : ColumnRole::Numeric;
        s.columns.push_back({std::string(name), role});
    }
    s.columns.push_back({"attack", ColumnRole::Label});
    s.default_role = ColumnRole::Ignore;
    return s;
}

Schema Schema::load(const std::filesystem::path& path) {
    auto in = open_input(path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("schema '" + path.string() + "': " + e.what());
    }
    Schema s;
    s.default_role = parse_role(j.value("default_role", std::string("ignore")));
    std::set<std::string> seen;
    for (const auto& col : j.at("columns")) {
        ColumnSpec spec{col.at("name").get<std::string>(),
                        parse_role(col.at("role").get<std::string>())};
        if (!seen.insert(spec.name).second)
            throw SchemaError("schema lists column '" + spec.name + "' twice");
        s.columns.push_back(std::move(spec));
    }
    (void)s.label_column();
    return s;
}

void Schema::save(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["default_role"] = to_string(default_role);
    j["columns"] = nlohmann::json::array();
    for (const auto& c : columns)
        j["columns"].push_back({{"name", c.name}, {"role", to_string(c.role)}});
    auto out = open_output(path);
    out << j.dump(2) << '\n';
}

std::vector<FlowRecord> load_csv(const std::filesystem::path& path, const Schema& schema) {
    auto in = open_input(path);
    const std::string& label = schema.label_column();

    std::string line;
    if (!std::getline(in, line)) throw SchemaError("'" + path.string() + "' has no header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_csv_line(line);

    struct Binding {
        std::size_t index;
        std::string name;
        ColumnRole role;
    };
    std::vector<Binding> bindings;
    std::optional<std::size_t> label_index;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const auto& name = header[i];
        const ColumnRole role = schema.role_of(name);
        if (role == ColumnRole::Label) {
            if (name == label) label_index = i;
            continue;
        }
        if (role == ColumnRole::Ignore) continue;
        if (numeric_member(name) && role != ColumnRole::Numeric)
            throw SchemaError("column '" + name + "' must be numeric or ignored");
        if (token_member(name) && role != ColumnRole::Categorical)
            throw SchemaError("column '" + name + "' must be categorical or ignored");
        bindings.push_back({i, name, role});
    }
    if (!label_index) throw SchemaError("header of '" + path.string() + "' lacks label column '" + label + "'");

    std::vector<FlowRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        auto at = [&](std::size_t i) -> std::string_view {
            return i < cells.size() ? std::string_view(cells[i]) : std::string_view{};
        };
        FlowRecord rec;
        rec.attack = parse_label(at(*label_index), line_no);
        for (const auto& b : bindings) {
            const auto text = at(b.index);
            Cell value;
            if (b.role == ColumnRole::Numeric) {
                if (auto d = parse_double(text)) value = *d;
            } else if (!text.empty()) {
                value = std::string(text);
            }
            rec.set(b.name, std::move(value));
        }
        records.push_back(std::move(rec));
    }
    return records;
}

RecordWriter::RecordWriter(const std::filesystem::path& path, std::vector<std::string> columns,
                           std::string label_column)
    : path_(path), out_(open_output(path)), columns_(std::move(columns)), label_(std::move(label_column)) {
    for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << columns_[i];
    out_ << '\n';
}

RecordWriter::RecordWriter(const std::filesystem::path& path, const Schema& schema)
    : RecordWriter(path,
                   [&] {
                       std::vector<std::string> cols;
                       for (const auto& c : schema.columns)
                           if (c.role != ColumnRole::Ignore) cols.push_back(c.name);
                       return cols;
                   }(),
                   schema.label_column()) {}

void RecordWriter::write(const FlowRecord& r) {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (i) out_ << ',';
        if (columns_[i] == label_) {
            if (r.attack) out_ << *r.attack;
        } else {
            out_ << cell_text(r.cell(columns_[i]));
        }
    }
    out_ << '\n';
}

void RecordWriter::close() {
    out_.flush();
    if (!out_) throw IoError("failed writing '" + path_.string() + "'");
    out_.close();
}

void write_csv(const std::filesystem::path& path, std::span<const FlowRecord> records,
               const Schema& schema) {
    std::vector<std::string> cols;
    std::unordered_set<std::string> known;
    for (const auto& c : schema.columns) {
        if (c.role == ColumnRole::Ignore) continue;
        cols.push_back(c.name);
        known.insert(c.name);
    }
    for (const auto& r : records)
        for (const auto& [k, v] : r.extra)
            if (known.insert(k).second) cols.push_back(k);

    RecordWriter writer(path, std::move(cols), schema.label_column());
    for (const auto& r : records) writer.write(r);
    writer.close();
}

ClassSummary class_summary(std::span<const FlowRecord> records) {
    if (records.empty()) throw DataError("class_summary needs at least one record");

    std::vector<std::string> names;
    for (auto n : kFieldNames)
        if (!is_token_field(n)) names.emplace_back(n);
    for (const auto& r : records)
        for (const auto& [k, v] : r.extra)
            if (std::holds_alternative<double>(v) &&
                std::find(names.begin(), names.end(), k) == names.end())
                names.push_back(k);

    ClassSummary s;
    std::vector<std::array<double, 2>> sums(names.size(), {0.0, 0.0});
    std::vector<std::array<std::size_t, 2>> counts(names.size(), {0, 0});
    for (const auto& r : records) {
        if (!r.attack) continue;
        const int c = *r.attack;
        (c == kBotnet ? s.counts.botnet : s.counts.normal)++;
        for (std::size_t f = 0; f < names.size(); ++f) {
            const Cell v = r.cell(names[f]);
            if (const auto* d = std::get_if<double>(&v)) {
                sums[f][c] += *d;
                ++counts[f][c];
            }
        }
    }
    for (std::size_t f = 0; f < names.size(); ++f) {
        FeatureMeans m{names[f], std::nullopt, std::nullopt};
        if (counts[f][kNormal]) m.normal = sums[f][kNormal] / static_cast<double>(counts[f][kNormal]);
        if (counts[f][kBotnet]) m.botnet = sums[f][kBotnet] / static_cast<double>(counts[f][kBotnet]);
        s.means.push_back(std::move(m));
    }
    return s;
}

Dataset::Dataset(Matrix features, std::vector<int> labels, std::vector<std::string> feature_names)
    : features_(std::move(features)), labels_(std::move(labels)), names_(std::move(feature_names)) {
    if (labels_.size() != features_.rows())
        throw ShapeError("label count " + std::to_string(labels_.size()) +
                         " does not match row count " + std::to_string(features_.rows()));
    if (features_.rows() == 0 && features_.cols() != names_.size()) features_ = Matrix(0, names_.size());
    if (names_.size() != features_.cols())
        throw ShapeError("feature name count does not match column count");
    std::unordered_set<std::string> unique(names_.begin(), names_.end());
    if (unique.size() != names_.size()) throw SchemaError("feature names must be unique");
    for (double v : features_.data())
        if (!std::isfinite(v)) throw DataError("dataset contains a missing or non-finite value");
    for (int l : labels_) {
        if (l == kNormal) ++counts_.normal;
        else if (l == kBotnet) ++counts_.botnet;
        else throw DataError("label " + std::to_string(l) + " is not 0 or 1");
    }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Matrix m(rows.size(), feature_count());
    std::vector<int> labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = features_.row(rows[i]);
        std::copy(src.begin(), src.end(), m.row(i).begin());
        labels[i] = labels_[rows[i]];
    }
    return Dataset(std::move(m), std::move(labels), names_);
}

Dataset Dataset::select_columns(std::span<const std::size_t> cols) const {
    Matrix m(row_count(), cols.size());
    std::vector<std::string> names;
    for (auto c : cols) {
        if (c >= feature_count()) throw ShapeError("column index out of range");
        names.push_back(names_[c]);
    }
    for (std::size_t i = 0; i < row_count(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) m(i, j) = features_(i, cols[j]);
    return Dataset(std::move(m), labels_, std::move(names));
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data,
                       const std::vector<bool>& synthetic) {
    if (!synthetic.empty() && synthetic.size() != data.row_count())
        throw ShapeError("synthetic flag count does not match row count");
    auto out = open_output(path);
    for (const auto& n : data.feature_names()) out << n << ',';
    out << "attack";
    if (!synthetic.empty()) out << ",synthetic";
    out << '\n';
    for (std::size_t i = 0; i < data.row_count(); ++i) {
        for (double v : data.row(i)) out << format_double(v) << ',';
        out << data.label(i);
        if (!synthetic.empty()) out << ',' << (synthetic[i] ? 1 : 0);
        out << '\n';
    }
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("'" + path.string() + "' has no header row");
    const auto header = split_csv_line(line);
    std::optional<std::size_t> label_index;
    std::vector<std::size_t> feature_index;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "attack") label_index = i;
        else if (header[i] != "synthetic") {
            feature_index.push_back(i);
            names.push_back(header[i]);
        }
    }
    if (!label_index) throw SchemaError("header of '" + path.string() + "' lacks label column 'attack'");

    std::vector<double> values;
    std::vector<int> labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw SchemaError("line " + std::to_string(line_no) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(header.size()));
        const auto label = parse_label(cells[*label_index], line_no);
        if (!label) throw DataError("line " + std::to_string(line_no) + " has no label");
        labels.push_back(*label);
        for (auto i : feature_index) {
            const auto v = parse_double(cells[i]);
            if (!v) throw DataError("line " + std::to_string(line_no) + " has a missing value in '" +
                                    header[i] + "'");
            values.push_back(*v);
        }
    }
    const std::size_t rows = labels.size();
    const std::size_t cols = names.size();
    Matrix features(rows, cols, std::move(values));
    return Dataset(std::move(features), std::move(labels), std::move(names));
}

std::string format_double(double v) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

std::optional<double> parse_double(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    if (text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

}  // namespace botdetect
