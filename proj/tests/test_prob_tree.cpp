#include "doob/prob_tree.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "support/random_tree.hpp"

namespace {
using doob::ClassKind;
using doob::LevelIneq;
using doob::Path;
using doob::TreeBranch;
using doob::TreeModel;
using doob::TreeNode;
namespace fn = doob::functional;

const double E = std::exp(1.0);
const double C = E / (E - 1.0);

TreeModel leaf(double v) { return TreeModel(TreeNode{v, {}}); }

// 1 -> {2, 0} with equal probabilities
TreeModel coin_martingale() { return TreeModel(TreeNode{1, {{0.5, {2, {}}}, {0.5, {0, {}}}}}); }

// 1 -> {3, 0}: mean 1.5
TreeModel coin_submartingale() { return TreeModel(TreeNode{1, {{0.5, {3, {}}}, {0.5, {0, {}}}}}); }

// Recursive oracle on the nested form, independent of the flattened storage.
double nested_expectation(const TreeNode& node, std::vector<double>& prefix,
                          const std::function<double(const std::vector<double>&)>& f) {
    prefix.push_back(node.value);
    double total = 0.0;
    if (node.children.empty()) total = f(prefix);
    for (const auto& b : node.children) total += b.probability * nested_expectation(b.node, prefix, f);
    prefix.pop_back();
    return total;
}

double oracle(const TreeModel& tree, const std::function<double(const std::vector<double>&)>& f) {
    std::vector<double> prefix;
    return nested_expectation(tree.to_node(), prefix, f);
}

double max_of(const std::vector<double>& x) { return *std::max_element(x.begin(), x.end()); }

TEST(TreeModel, FlattensBreadthFirst) {
    const auto t = TreeModel(TreeNode{0, {{0.5, {1, {{1.0, {2, {}}}}}}, {0.5, {-1, {{1.0, {-2, {}}}}}}}});
    EXPECT_EQ(t.depth(), 2u);
    EXPECT_EQ(t.node_count(), 5u);
    EXPECT_EQ(t.node(1).value, 1);
    EXPECT_EQ(t.node(2).value, -1);
    EXPECT_EQ(t.node(3).value, 2);
    EXPECT_EQ(t.children(0).size(), 2u);
    EXPECT_TRUE(t.has_negative_values());
    EXPECT_EQ(leaf(3).depth(), 0u);
}

TEST(TreeModel, LeafPathsCarryProbabilities) {
    const auto t = coin_martingale();
    double total = 0.0;
    int leaves = 0;
    t.for_each_leaf_path([&](double p, std::span<const double> x) {
        total += p;
        ++leaves;
        EXPECT_EQ(x.size(), 2u);
        EXPECT_EQ(x[0], 1);
    });
    EXPECT_EQ(leaves, 2);
    EXPECT_DOUBLE_EQ(total, 1.0);
}

TEST(TreeModel, RejectsMalformedTrees) {
    auto where = [](const TreeNode& n) {
        try {
            TreeModel t(n);
        } catch (const doob::tree_format_error& e) {
            return e.where;
        }
        return std::string("no error");
    };
    EXPECT_EQ(where(TreeNode{1, {{0.5, {2, {}}}, {0.4, {0, {}}}}}), "$.children");
    EXPECT_EQ(where(TreeNode{1, {{1.5, {2, {}}}, {-0.5, {0, {}}}}}), "$.children[0].p");
    EXPECT_EQ(where(TreeNode{1, {{0.5, {2, {}}}, {0.5, {NAN, {}}}}}), "$.children[1].node.value");
    EXPECT_EQ(where(TreeNode{1, {{0.5, {2, {}}}, {0.5, {0, {{1.0, {0, {}}}}}}}}), "$.children[1].node.children[0].node");
    EXPECT_EQ(where(TreeNode{1, {{1.0, {2, {}}}}}), "no error");
}

TEST(TreeModel, NodeCap) {
    TreeNode root{0, {}};
    for (int i = 0; i < 10; ++i) root.children.push_back({0.1, {0, {}}});
    EXPECT_THROW(TreeModel(root, 5), doob::tree_format_error);
    EXPECT_NO_THROW(TreeModel(root, 11));
}

TEST(ChainTree, FollowsPath) {
    const auto t = doob::chain_tree(Path{1, 3, 2});
    EXPECT_EQ(t.depth(), 2u);
    EXPECT_DOUBLE_EQ(doob::expect_functional(t, fn::maximum{}), 3);
    EXPECT_DOUBLE_EQ(doob::expect_functional(t, fn::terminal{}), 2);
}

TEST(Classify, Examples) {
    EXPECT_EQ(doob::classify(coin_martingale()).kind, ClassKind::martingale);
    EXPECT_EQ(doob::classify(coin_submartingale()).kind, ClassKind::submartingale);
    EXPECT_DOUBLE_EQ(doob::classify(coin_submartingale()).max_defect, 0.0);
    const auto down = TreeModel(TreeNode{1, {{0.5, {1, {}}}, {0.5, {0, {}}}}});
    EXPECT_EQ(doob::classify(down).kind, ClassKind::supermartingale);
    EXPECT_EQ(doob::classify(doob::chain_tree(Path{2, 2, 2})).kind, ClassKind::both);
    EXPECT_EQ(doob::classify(leaf(5)).kind, ClassKind::both);
    const auto mixed = TreeModel(TreeNode{0, {{1.0, {1, {{1.0, {0, {}}}}}}}});
    const auto cls = doob::classify(mixed);
    EXPECT_EQ(cls.kind, ClassKind::none);
    EXPECT_DOUBLE_EQ(cls.max_defect, 1.0);
    EXPECT_TRUE(doob::classify(leaf(5)).is_submartingale());
    EXPECT_FALSE(doob::classify(coin_submartingale()).is_supermartingale());
}

TEST(Classify, ToleratesRoundingDrift) {
    const auto t = TreeModel(TreeNode{0.3, {{0.5, {0.1 + 0.2 + 0.1, {}}}, {0.5, {0.2, {}}}}});
    EXPECT_TRUE(doob::classify(t).is_martingale());
}

TEST(Expect, Examples) {
    const auto t = coin_martingale();
    EXPECT_DOUBLE_EQ(doob::expect_functional(t, fn::maximum{}), 1.5);
    EXPECT_DOUBLE_EQ(doob::expect(t, [](auto) { return 1.0; }), 1.0);
    EXPECT_DOUBLE_EQ(doob::expect_functional(t, fn::terminal_entropy{}), std::log(2.0));
    EXPECT_DOUBLE_EQ(doob::expect_functional(t, fn::hit_indicator{2}), 0.5);
    EXPECT_DOUBLE_EQ(doob::expect_functional(t, fn::terminal_below{2}), 0.0);
    EXPECT_DOUBLE_EQ(doob::expect_functional(t, fn::start_capped{0.25}), 0.25);
    EXPECT_THROW(doob::expect_functional(TreeModel(TreeNode{0, {{0.5, {1, {}}}, {0.5, {-1, {}}}}}),
                                         fn::terminal_entropy{}),
                 doob::domain_error);
}

TEST(Expect, MatchesNestedOracle) {
    doob::testing::RandomTreeFactory factory(7);
    for (int t = 0; t < 100; ++t) {
        const auto tree = factory.make(ClassKind::none, t % 2 == 0);
        const double level = 0.5 + 0.02 * t;
        EXPECT_NEAR(doob::expect_functional(tree, fn::maximum{}), oracle(tree, max_of), 1e-12);
        EXPECT_NEAR(doob::expect_functional(tree, fn::terminal_above{level}),
                    oracle(tree, [&](const auto& x) { return max_of(x) >= level ? x.back() : 0.0; }), 1e-12);
        EXPECT_NEAR(doob::expect(tree, [](auto) { return 1.0; }), 1.0, 1e-12);
    }
}

TEST(LevelBounds, Examples) {
    const auto r3 = doob::verify_ineq3(coin_martingale(), 0.5);
    EXPECT_EQ(r3.tag, "eq3");
    EXPECT_DOUBLE_EQ(r3.lhs, 0.5);
    EXPECT_DOUBLE_EQ(r3.rhs, 0.5);
    EXPECT_DOUBLE_EQ(r3.rhs_classical, 1.0);
    EXPECT_DOUBLE_EQ(r3.improvement, 0.5);
    EXPECT_TRUE(r3.holds());

    const auto r4 = doob::verify_ineq4(coin_submartingale(), 2);
    EXPECT_DOUBLE_EQ(r4.lhs, 1.0);
    EXPECT_DOUBLE_EQ(r4.rhs, 1.5);
    EXPECT_DOUBLE_EQ(r4.rhs_classical, 1.5);
    EXPECT_EQ(r4.improvement, 0.0);

    const auto r4b = doob::verify_ineq4(coin_submartingale(), 0.5);
    EXPECT_DOUBLE_EQ(r4b.rhs, -0.5 + 1.5);
    EXPECT_DOUBLE_EQ(r4b.improvement, 0.5);

    EXPECT_THROW(doob::verify_ineq3(coin_submartingale(), 1), doob::classification_error);
    EXPECT_THROW(doob::verify_ineq4(TreeModel(TreeNode{1, {{1.0, {0, {}}}}}), 1), doob::classification_error);
}

TEST(LlogLBounds, Examples) {
    const auto r = doob::verify_ineq8(coin_martingale());
    EXPECT_DOUBLE_EQ(r.lhs, 1.5);
    EXPECT_NEAR(r.rhs, C * (1 + std::log(2.0)), 1e-14);
    EXPECT_NEAR(r.rhs, 2.678, 1e-3);
    EXPECT_DOUBLE_EQ(doob::verify_ineq8(leaf(1)).rhs, C);
    EXPECT_NEAR(doob::verify_ineq8(leaf(E)).rhs, E * E / (E - 1), 1e-14);
    EXPECT_THROW(doob::verify_ineq8(coin_submartingale()), doob::classification_error);
    EXPECT_THROW(doob::verify_ineq8(leaf(0)), doob::domain_error);

    const auto r9 = doob::verify_ineq9(coin_submartingale());
    EXPECT_DOUBLE_EQ(r9.lhs, 2.0);
    EXPECT_NEAR(r9.rhs, C * (1 + 0.5 * 3 * std::log(3.0)), 1e-14);
    EXPECT_NEAR(r9.rhs, 4.189, 1e-3);
    EXPECT_EQ(r9.route.size(), 4u);
    EXPECT_TRUE(doob::route_ordered(r9));

    const auto chain = doob::verify_ineq9(doob::chain_tree(Path{0.01, 1}));
    EXPECT_DOUBLE_EQ(chain.lhs, 1.0);
    EXPECT_NEAR(chain.rhs, C, 1e-14);
    EXPECT_TRUE(chain.holds());
    EXPECT_DOUBLE_EQ(doob::verify_ineq9(leaf(1)).rhs, C);
    EXPECT_THROW(doob::verify_ineq9(TreeModel(TreeNode{0, {{0.5, {1, {}}}, {0.5, {-1, {}}}}})),
                 doob::domain_error);
}

TEST(DoobClosure, Examples) {
    const auto up = TreeModel(TreeNode{1, {{0.5, {3, {}}}, {0.5, {1, {}}}}});
    EXPECT_DOUBLE_EQ(doob::doob_closure(up).root().value, 2);
    EXPECT_DOUBLE_EQ(doob::doob_closure(doob::chain_tree(Path{5, 1})).root().value, 1);
    const auto m = coin_martingale();
    const auto closed = doob::doob_closure(m);
    for (std::size_t i = 0; i < m.node_count(); ++i) EXPECT_DOUBLE_EQ(closed.node(i).value, m.node(i).value);
}

TEST(TransformExpectation, Examples) {
    EXPECT_DOUBLE_EQ(doob::transform_expectation(coin_martingale(), 1.5, LevelIneq::first), 0.0);
    const auto up = TreeModel(TreeNode{1, {{0.5, {3, {}}}, {0.5, {1, {}}}}});
    EXPECT_DOUBLE_EQ(doob::transform_expectation(up, 0.5, LevelIneq::second), -1.0);
    EXPECT_DOUBLE_EQ(doob::transform_expectation(up, 2, LevelIneq::first), 1.0);
    EXPECT_DOUBLE_EQ(doob::transform_expectation(up, 2, LevelIneq::second), 0.0);
    const auto half = TreeModel(TreeNode{1, {{0.5, {1.5, {}}}, {0.5, {1, {}}}}});
    EXPECT_DOUBLE_EQ(doob::transform_expectation(half, 1, LevelIneq::second), -0.25);
}

TEST(Counterexample, Examples) {
    const auto r = doob::counterexample_eq8(0.01);
    EXPECT_EQ(r.lhs, 1.0);
    EXPECT_NEAR(r.rhs, C * 0.01 * (1 - std::log(0.01)), 1e-15);
    EXPECT_NEAR(r.rhs, 0.0887, 1e-4);
    EXPECT_TRUE(r.violated);
    EXPECT_THROW(doob::counterexample_eq8(0), doob::domain_error);
    EXPECT_THROW(doob::counterexample_eq8(1), doob::domain_error);

    const double star = doob::counterexample_threshold();
    EXPECT_GT(star, 0.27);
    EXPECT_LT(star, 0.28);
    EXPECT_NEAR(C * star * (1 - std::log(star)), 1.0, 1e-11);
    EXPECT_TRUE(doob::counterexample_eq8(0.27).violated);
    EXPECT_FALSE(doob::counterexample_eq8(0.28).violated);
    EXPECT_TRUE(doob::counterexample_eq8(star / 2).violated);
    EXPECT_FALSE(doob::counterexample_eq8((1 + star) / 2).violated);
}

double pathwise_gap_expectation(const TreeModel& tree, double level, LevelIneq which) {
    return doob::expect(tree, [&](std::span<const double> x) {
        const Path p(std::vector<double>(x.begin(), x.end()));
        return which == LevelIneq::first ? doob::eval_ineq1(p, level).gap : doob::eval_ineq2(p, level).gap;
    });
}

// slack of the expectation bound = E[pathwise gap] - E[transform]
TEST(Bridge, SlackSplitsIntoGapAndTransform) {
    doob::testing::RandomTreeFactory factory(11);
    for (int t = 0; t < 200; ++t) {
        const auto tree = factory.make(ClassKind::none, t % 3 == 0);
        const double level = -1.0 + 0.025 * t;
        const auto r3 = doob::evaluate_ineq3(tree, level);
        const auto r4 = doob::evaluate_ineq4(tree, level);
        ASSERT_NEAR(r3.slack, pathwise_gap_expectation(tree, level, LevelIneq::first) -
                                  doob::transform_expectation(tree, level, LevelIneq::first),
                    1e-10);
        ASSERT_NEAR(r4.slack, pathwise_gap_expectation(tree, level, LevelIneq::second) -
                                  doob::transform_expectation(tree, level, LevelIneq::second),
                    1e-10);
    }
}

class RandomClass : public ::testing::TestWithParam<ClassKind> {};

TEST_P(RandomClass, BoundsAndTransformSigns) {
    const ClassKind target = GetParam();
    doob::testing::RandomTreeFactory factory(100 + static_cast<int>(target));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> level(-2.0, 6.0);
    for (int t = 0; t < 200; ++t) {
        const bool nonneg = t % 2 == 1;
        const auto tree = factory.make(target, nonneg);
        const auto cls = doob::classify(tree);
        const double l = level(rng);
        const double t1 = doob::transform_expectation(tree, l, LevelIneq::first);
        const double t2 = doob::transform_expectation(tree, l, LevelIneq::second);
        switch (target) {
        case ClassKind::martingale:
            ASSERT_TRUE(cls.is_martingale());
            ASSERT_NEAR(t1, 0.0, 1e-10);
            ASSERT_NEAR(t2, 0.0, 1e-10);
            break;
        case ClassKind::submartingale:
            ASSERT_TRUE(cls.is_submartingale());
            ASSERT_GE(t1, -1e-10);
            ASSERT_LE(t2, 1e-10);
            break;
        default:
            ASSERT_TRUE(cls.is_supermartingale());
            ASSERT_LE(t1, 1e-10);
            ASSERT_GE(t2, -1e-10);
        }
        if (cls.is_supermartingale()) {
            const auto r = doob::verify_ineq3(tree, l);
            ASSERT_GE(r.slack, -1e-9);
            ASSERT_GE(r.improvement, -1e-12);
        }
        if (cls.is_submartingale()) {
            const auto r = doob::verify_ineq4(tree, l);
            ASSERT_GE(r.slack, -1e-9);
            ASSERT_GE(r.improvement, -1e-12);
        }
        if (nonneg && cls.is_submartingale()) {
            const auto r = doob::verify_ineq9(tree);
            ASSERT_GE(r.slack, -1e-9);
            ASSERT_TRUE(doob::route_ordered(r));
            const auto closed = doob::doob_closure(tree);
            ASSERT_TRUE(doob::classify(closed).is_martingale());
            for (std::size_t i = 0; i < tree.node_count(); ++i)
                ASSERT_GE(closed.node(i).value, tree.node(i).value - 1e-10 * (1 + tree.node(i).value));
        }
        if (nonneg && cls.is_martingale() && tree.root().value > 0) {
            ASSERT_GE(doob::verify_ineq8(tree).slack, -1e-9);
        }
    }
}

INSTANTIATE_TEST_SUITE_P(Classes, RandomClass,
                         ::testing::Values(ClassKind::martingale, ClassKind::submartingale,
                                           ClassKind::supermartingale));

} // namespace
