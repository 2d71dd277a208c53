#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "botdetect/dataset.hpp"
#include "test_support.hpp"

using namespace botdetect;
using botdetect::testing::TempDir;
using botdetect::testing::write_file;

namespace {

Schema small_schema() {
    Schema s;
    s.columns = {{"pkts", ColumnRole::Numeric},
                 {"dur", ColumnRole::Numeric},
                 {"proto", ColumnRole::Categorical},
                 {"attack", ColumnRole::Label}};
    return s;
}

}  // namespace

TEST(LoadCsv, ParsesRowsAndCountsClasses) {
    TempDir dir("load");
    write_file(dir / "a.csv", "pkts,proto,attack\n4,tcp,1\n2,udp,0\n9,tcp,1\n");
    const auto records = load_csv(dir / "a.csv", small_schema());
    ASSERT_EQ(records.size(), 3u);
    EXPECT_EQ(records[0].pkts, 4.0);
    EXPECT_EQ(records[1].proto, "udp");
    EXPECT_EQ(records[2].attack, 1);
    const auto summary = class_summary(records);
    EXPECT_EQ(summary.counts.normal, 1u);
    EXPECT_EQ(summary.counts.botnet, 2u);
}

TEST(LoadCsv, EmptyAndGarbageCellsBecomeMissing) {
    TempDir dir("missing");
    write_file(dir / "a.csv", "pkts,dur,proto,attack\n4,,tcp,1\nabc,1e-3,udp,0\n7,2.5E2,,0\n");
    const auto r = load_csv(dir / "a.csv", small_schema());
    ASSERT_EQ(r.size(), 3u);
    EXPECT_FALSE(r[0].dur.has_value());
    EXPECT_FALSE(r[1].pkts.has_value());
    EXPECT_DOUBLE_EQ(*r[1].dur, 1e-3);
    EXPECT_DOUBLE_EQ(*r[2].dur, 250.0);
    EXPECT_FALSE(r[2].proto.has_value());
}

TEST(LoadCsv, IgnoredAndExtraColumns) {
    TempDir dir("extra");
    Schema s = small_schema();
    s.columns.push_back({"seq", ColumnRole::Numeric});
    s.columns.push_back({"category", ColumnRole::Categorical});
    write_file(dir / "a.csv", "stime,pkts,seq,category,attack\n1.5,3,17,DDoS,1\n");
    const auto r = load_csv(dir / "a.csv", s);
    ASSERT_EQ(r.size(), 1u);
    ASSERT_EQ(r[0].extra.size(), 2u);
    EXPECT_EQ(r[0].cell("seq"), Cell{17.0});
    EXPECT_EQ(r[0].cell("category"), Cell{std::string("DDoS")});
    EXPECT_TRUE(is_missing(r[0].cell("stime")));
}

TEST(LoadCsv, QuotedFieldsAndCrLf) {
    TempDir dir("quoted");
    write_file(dir / "a.csv", "\"pkts\",\"proto\",\"attack\"\r\n\"4\",\"t,cp\",\"1\"\r\n");
    const auto r = load_csv(dir / "a.csv", small_schema());
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].proto, "t,cp");
    EXPECT_EQ(r[0].attack, 1);
}

TEST(LoadCsv, Errors) {
    TempDir dir("errors");
    EXPECT_THROW(load_csv(dir / "nope.csv", small_schema()), IoError);
    write_file(dir / "nolabel.csv", "pkts,proto\n1,tcp\n");
    EXPECT_THROW(load_csv(dir / "nolabel.csv", small_schema()), SchemaError);
    write_file(dir / "badlabel.csv", "pkts,proto,attack\n1,tcp,2\n");
    EXPECT_THROW(load_csv(dir / "badlabel.csv", small_schema()), SchemaError);
    write_file(dir / "textlabel.csv", "pkts,proto,attack\n1,tcp,DDoS\n");
    EXPECT_THROW(load_csv(dir / "textlabel.csv", small_schema()), SchemaError);
}

TEST(LoadCsv, RowOrderMatchesFileOrder) {
    TempDir dir("order");
    std::string text = "pkts,proto,attack\n";
    for (int i = 0; i < 200; ++i) text += std::to_string(i) + ",tcp," + std::to_string(i % 3 == 0) + "\n";
    write_file(dir / "a.csv", text);
    const auto r = load_csv(dir / "a.csv", small_schema());
    ASSERT_EQ(r.size(), 200u);
    for (int i = 0; i < 200; ++i) EXPECT_EQ(*r[i].pkts, i);
}

TEST(ClassSummary, MeansOverPresentValuesPerClass) {
    std::vector<FlowRecord> r(3);
    r[0].pkts = 10;
    r[0].attack = 0;
    r[1].pkts = 20;
    r[1].attack = 0;
    r[2].attack = 0;  // pkts missing: excluded from the mean
    const auto s = class_summary(r);
    EXPECT_EQ(s.counts.normal, 3u);
    EXPECT_EQ(s.counts.botnet, 0u);
    const auto it = std::find_if(s.means.begin(), s.means.end(), [](const auto& m) { return m.name == "pkts"; });
    ASSERT_NE(it, s.means.end());
    EXPECT_DOUBLE_EQ(*it->normal, 15.0);
    EXPECT_FALSE(it->botnet.has_value());
    EXPECT_THROW(class_summary(std::vector<FlowRecord>{}), DataError);
}

// Property: write -> read is the identity on finite values, so counts and
// means survive exactly.
TEST(LoadCsv, WriteReadRoundTripIsExact) {
    TempDir dir("roundtrip");
    std::mt19937_64 rng(7);
    std::lognormal_distribution<double> ln(2.0, 1.5);
    std::vector<FlowRecord> records(300);
    const char* protos[] = {"tcp", "udp", "icmp"};
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto& r = records[i];
        r.spkts = std::floor(ln(rng));
        r.dpkts = std::floor(ln(rng));
        r.pkts = *r.spkts + *r.dpkts;
        r.dur = ln(rng) * 1e-3;
        r.rate = ln(rng) * 1e5;
        if (i % 7 == 0) r.sbytes.reset();
        else r.sbytes = ln(rng);
        r.proto = protos[i % 3];
        r.state = i % 2 ? "CON" : "INT";
        r.attack = static_cast<int>(rng() % 2);
    }
    const Schema schema = Schema::botiot_default();
    write_csv(dir / "r.csv", records, schema);
    const auto back = load_csv(dir / "r.csv", schema);
    ASSERT_EQ(back.size(), records.size());
    for (std::size_t i = 0; i < records.size(); ++i) EXPECT_EQ(back[i], records[i]) << "row " << i;

    const auto a = class_summary(records);
    const auto b = class_summary(back);
    EXPECT_EQ(a.counts, b.counts);
    for (std::size_t f = 0; f < a.means.size(); ++f) {
        EXPECT_EQ(a.means[f].normal, b.means[f].normal);
        EXPECT_EQ(a.means[f].botnet, b.means[f].botnet);
    }
}

TEST(Schema, DefaultAndFileRoundTrip) {
    const Schema s = Schema::botiot_default();
    EXPECT_EQ(s.label_column(), "attack");
    EXPECT_EQ(s.feature_columns().size(), 12u);
    EXPECT_EQ(s.role_of("proto"), ColumnRole::Categorical);
    EXPECT_EQ(s.role_of("saddr"), ColumnRole::Ignore);

    TempDir dir("schema");
    s.save(dir / "s.json");
    const Schema back = Schema::load(dir / "s.json");
    ASSERT_EQ(back.columns.size(), s.columns.size());
    for (std::size_t i = 0; i < s.columns.size(); ++i) {
        EXPECT_EQ(back.columns[i].name, s.columns[i].name);
        EXPECT_EQ(back.columns[i].role, s.columns[i].role);
    }
    write_file(dir / "bad.json", R"({"columns":[{"name":"pkts","role":"numeric"}]})");
    EXPECT_THROW(Schema::load(dir / "bad.json"), SchemaError);
}

TEST(SchemaFile, BundledSchemaMatchesBuiltIn) {
    const Schema file = Schema::load(BOTDETECT_DATA_DIR "/botiot.schema.json");
    const Schema builtin = Schema::botiot_default();
    ASSERT_EQ(file.columns.size(), builtin.columns.size());
    for (std::size_t i = 0; i < file.columns.size(); ++i) {
        EXPECT_EQ(file.columns[i].name, builtin.columns[i].name);
        EXPECT_EQ(file.columns[i].role, builtin.columns[i].role);
    }
}

TEST(Dataset, Invariants) {
    Matrix m(2, 2, std::vector<double>{1, 2, 3, 4});
    EXPECT_THROW(Dataset(m, {0}, {"a", "b"}), ShapeError);
    EXPECT_THROW(Dataset(m, {0, 1}, {"a", "a"}), SchemaError);
    EXPECT_THROW(Dataset(m, {0, 2}, {"a", "b"}), DataError);
    Matrix bad(1, 1, std::vector<double>{std::nan("")});
    EXPECT_THROW(Dataset(bad, {0}, {"a"}), DataError);

    const Dataset d(m, {0, 1}, {"a", "b"});
    EXPECT_EQ(d.class_counts().total(), d.row_count());
    const std::vector<std::size_t> rows{1};
    const auto sub = d.subset(rows);
    EXPECT_EQ(sub.row(0)[0], 3.0);
    EXPECT_EQ(sub.class_counts().botnet, 1u);
    const std::vector<std::size_t> cols{1};
    const auto sel = d.select_columns(cols);
    EXPECT_EQ(sel.feature_names(), std::vector<std::string>{"b"});
    EXPECT_EQ(sel.labels(), d.labels());
}

TEST(DatasetCsv, RoundTripWithSyntheticFlag) {
    TempDir dir("dscsv");
    std::mt19937_64 rng(3);
    const auto d = botdetect::testing::random_dataset(rng, 50, 4, -1e6, 1e6);
    std::vector<bool> flags(50, false);
    flags[49] = true;
    write_dataset_csv(dir / "d.csv", d, flags);
    EXPECT_EQ(read_dataset_csv(dir / "d.csv"), d);
    EXPECT_NE(botdetect::testing::read_file(dir / "d.csv").find(",synthetic"), std::string::npos);
}

TEST(ParseDouble, StrictParsing) {
    EXPECT_EQ(parse_double("1.5e3"), 1500.0);
    EXPECT_EQ(parse_double(" 42 "), 42.0);
    EXPECT_EQ(parse_double("+3"), 3.0);
    EXPECT_FALSE(parse_double("").has_value());
    EXPECT_FALSE(parse_double("12abc").has_value());
    EXPECT_FALSE(parse_double("nan").has_value());
    EXPECT_EQ(parse_double(format_double(0.1 + 0.2)), 0.1 + 0.2);
}
