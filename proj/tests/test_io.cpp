#include "doob/io.hpp"

#include <cmath>

#include "gtest/gtest.h"

namespace {
using doob::io::json;

TEST(FullPrecision, RoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, 2.5, 1e-300, -7.0, 0.0886725})
        EXPECT_EQ(std::strtod(doob::io::full_precision(v).c_str(), nullptr), v);
    EXPECT_EQ(doob::io::full_precision(0.5), "0.5");
    EXPECT_EQ(doob::io::rounded(std::exp(1.0)), "2.71828");
}

TEST(TreeJson, ParsesAndRoundTrips) {
    const auto t = doob::io::parse_tree_text(
        R"({"value": 1, "children": [{"p": 0.5, "node": {"value": 2}}, {"p": 0.5, "node": {"value": 0, "children": []}}]})");
    EXPECT_EQ(t.node_count(), 3u);
    EXPECT_EQ(t.depth(), 1u);
    const auto again = doob::io::tree_from_json(doob::io::to_json(t));
    EXPECT_EQ(again.node_count(), 3u);
    EXPECT_EQ(again.node(1).value, 2);
}

TEST(TreeJson, ErrorsCarryJsonPaths) {
    auto where = [](const char* text) {
        try {
            doob::io::parse_tree_text(text);
        } catch (const doob::tree_format_error& e) {
            return e.where;
        }
        return std::string("no error");
    };
    EXPECT_EQ(where("{"), "$");
    EXPECT_EQ(where(R"({"children": []})"), "$");
    EXPECT_EQ(where(R"({"value": "a"})"), "$.value");
    EXPECT_EQ(where(R"({"value": 1, "children": [{"p": 1}]})"), "$.children[0]");
    EXPECT_EQ(where(R"({"value": 1, "children": [{"p": 1, "node": {"value": true}}]})"), "$.children[0].node.value");
    EXPECT_EQ(where(R"({"value": 1, "children": [{"p": 0.7, "node": {"value": 1}}]})"), "$.children");
    EXPECT_EQ(where(R"({"value": 1, "children": 3})"), "$.children");
}

TEST(ReportJson, Keys) {
    const auto j = doob::io::to_json(doob::eval_ineq1(doob::Path{1, 3, 2}, 2.5));
    for (const char* key : {"tag", "lhs", "rhs", "gap", "case", "crossing_index", "level", "exponent"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["tag"], "eq1");
    EXPECT_EQ(j["case"], "Crossing");
    EXPECT_EQ(j["crossing_index"], 1);
    EXPECT_TRUE(j["exponent"].is_null());

    const auto lp = doob::io::to_json(doob::eval_lp(doob::NonnegPath{1, 3, 2}, 2));
    EXPECT_EQ(lp["exponent"], 2.0);
    EXPECT_TRUE(lp["case"].is_null());
}

TEST(ChainCsv, LastRowIsFinalBound) {
    const auto csv = doob::io::to_csv(doob::chain_lp(doob::NonnegPath{1, 3, 2}, 2));
    EXPECT_EQ(csv.rfind("label,value\n", 0), 0u);
    EXPECT_NE(csv.find("\"eq5: final bound\",18\n"), std::string::npos);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(GeneratorJson, ParsesAndRejects) {
    const auto s = doob::io::generator_from_json(
        json::parse(R"({"kind": "MultiplicativePositive", "n": 50, "x0": 1, "step_scale": 0.3, "seed": 9})"));
    EXPECT_EQ(s.kind, doob::GeneratorKind::multiplicative_positive);
    EXPECT_EQ(s.steps, 50u);
    EXPECT_EQ(s.seed, 9u);
    EXPECT_EQ(doob::io::generator_from_json(doob::io::to_json(s)).step_scale, 0.3);
    EXPECT_EQ(doob::io::parse_generator_kind("abs"), doob::GeneratorKind::abs_walk);
    EXPECT_THROW(doob::io::parse_generator_kind("Brownian"), doob::parse_error);
    EXPECT_THROW(doob::io::generator_from_json(json::parse(R"({"n": "x"})")), doob::parse_error);
    EXPECT_THROW(doob::io::generator_from_json(json::parse(R"({"kind": "MultiplicativePositive", "x0": 0})")),
                 doob::domain_error);
}

TEST(McCsv, RowMatchesHeader) {
    doob::GeneratorSpec spec;
    spec.steps = 5;
    doob::SidesEstimate e;
    e.level = 1;
    const auto row = doob::io::to_csv_row(spec, e);
    EXPECT_EQ(std::count(row.begin(), row.end(), ','), 8);
    EXPECT_EQ(row.rfind("SymmetricWalk,5,1,eq3,", 0), 0u);
}

} // namespace
