#include "doob/montecarlo.hpp"

#include <cmath>
#include <vector>

#include "doob/derivation.hpp"
#include "gtest/gtest.h"

namespace {
using doob::ExpectationIneq;
using doob::GeneratorKind;
using doob::GeneratorSpec;
using doob::LevelIneq;

GeneratorSpec spec(GeneratorKind kind, std::size_t n, double x0, std::uint64_t seed = 1) {
    GeneratorSpec s;
    s.kind = kind;
    s.steps = n;
    s.x0 = x0;
    s.seed = seed;
    return s;
}

TEST(CounterUniform, RangeAndPurity) {
    double lo = 1, hi = 0, sum = 0;
    for (std::uint64_t t = 0; t < 100000; ++t) {
        const double u = doob::counter_uniform(3, t, t % 7);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        sum += u;
    }
    EXPECT_GE(lo, 0.0);
    EXPECT_LT(hi, 1.0);
    EXPECT_NEAR(sum / 100000, 0.5, 0.005);
    EXPECT_EQ(doob::counter_uniform(9, 4, 2), doob::counter_uniform(9, 4, 2));
    EXPECT_NE(doob::counter_uniform(9, 4, 2), doob::counter_uniform(9, 2, 4));
    static_assert(doob::splitmix64(0) == 0xe220a8397b1dcdafULL);
}

TEST(Generate, DeterministicAndShaped) {
    auto s = spec(GeneratorKind::symmetric_walk, 20, 0.5, 42);
    EXPECT_EQ(doob::generate(s, 3), doob::generate(s, 3));
    EXPECT_NE(doob::generate(s, 3), doob::generate(s, 4));
    EXPECT_EQ(doob::generate(s, 0).size(), 21u);
    EXPECT_EQ(doob::generate(s, 0).front(), 0.5);
    s.steps = 0;
    EXPECT_EQ(doob::generate(s, 0).size(), 1u);
    for (double d : doob::increments(doob::generate(spec(GeneratorKind::symmetric_walk, 30, 0), 1)))
        EXPECT_EQ(std::abs(d), 1.0);
}

TEST(Generate, NonnegativeKindsStayNonnegative) {
    auto m = spec(GeneratorKind::multiplicative_positive, 50, 1.0);
    m.step_scale = 0.5;
    m.log_mean = 0.1;
    auto a = spec(GeneratorKind::abs_walk, 50, 0.0);
    for (std::uint64_t t = 0; t < 2000; ++t) {
        for (double v : doob::generate(m, t).values()) ASSERT_GT(v, 0.0);
        for (double v : doob::generate(a, t).values()) ASSERT_GE(v, 0.0);
    }
}

TEST(Generator, ValidationAndClasses) {
    auto d = spec(GeneratorKind::drift_walk, 5, 0);
    d.drift = 2;
    EXPECT_THROW(doob::validate(d), doob::domain_error);
    d.drift = -0.1;
    EXPECT_EQ(doob::generator_class(d), doob::ClassKind::supermartingale);
    auto m = spec(GeneratorKind::multiplicative_positive, 5, 0);
    EXPECT_THROW(doob::validate(m), doob::domain_error);
    m.x0 = 1;
    m.log_mean = 1;
    EXPECT_THROW(doob::validate(m), doob::domain_error);
    EXPECT_EQ(doob::generator_class(spec(GeneratorKind::abs_walk, 5, 0)), doob::ClassKind::submartingale);

    EXPECT_THROW(doob::require_hypothesis(spec(GeneratorKind::abs_walk, 5, 0), ExpectationIneq::ineq3),
                 doob::class_mismatch);
    EXPECT_THROW(doob::require_hypothesis(spec(GeneratorKind::symmetric_walk, 5, 0), ExpectationIneq::ineq9),
                 doob::class_mismatch);
    EXPECT_THROW(doob::require_hypothesis(spec(GeneratorKind::abs_walk, 5, 1), ExpectationIneq::ineq8),
                 doob::class_mismatch);
    EXPECT_THROW(doob::estimate_sides(spec(GeneratorKind::abs_walk, 5, 0), ExpectationIneq::ineq3, 1, 100),
                 doob::class_mismatch);
    EXPECT_NO_THROW(doob::require_hypothesis(spec(GeneratorKind::symmetric_walk, 5, 0), ExpectationIneq::ineq3));
}

TEST(ExactTree, ClassMatchesGenerator) {
    auto m = spec(GeneratorKind::multiplicative_positive, 6, 1.0);
    m.step_scale = 0.4;
    m.log_mean = 0.1;
    EXPECT_EQ(doob::classify(doob::to_tree(m)).kind, doob::ClassKind::submartingale);
    m.log_mean = 0;
    EXPECT_EQ(doob::classify(doob::to_tree(m)).kind, doob::ClassKind::martingale);
    auto d = spec(GeneratorKind::drift_walk, 6, 0);
    d.drift = -0.3;
    EXPECT_EQ(doob::classify(doob::to_tree(d)).kind, doob::ClassKind::supermartingale);
    EXPECT_TRUE(doob::classify(doob::to_tree(spec(GeneratorKind::abs_walk, 6, 0))).is_submartingale());
    EXPECT_THROW(doob::to_tree(spec(GeneratorKind::symmetric_walk, 19, 0)), doob::domain_error);
}

TEST(Summarize, Basics) {
    const std::vector<double> v{1, 2, 3, 4};
    const auto e = doob::summarize(v);
    EXPECT_DOUBLE_EQ(e.mean, 2.5);
    EXPECT_DOUBLE_EQ(e.std_err, std::sqrt((1.5 * 1.5 * 2 + 0.5 * 0.5 * 2) / 3 / 4));
    EXPECT_FALSE(e.zero_variance);
    const std::vector<double> flat{2, 2, 2};
    EXPECT_TRUE(doob::summarize(flat).zero_variance);
    EXPECT_THROW(doob::summarize(std::vector<double>{1}), doob::domain_error);
}

TEST(Estimate, ZeroVarianceForDegenerateSides) {
    // a symmetric walk started far above the level always has λ 1{max >= λ} = λ
    const auto e = doob::estimate_sides(spec(GeneratorKind::symmetric_walk, 5, 100), ExpectationIneq::ineq3, 1, 100);
    EXPECT_TRUE(e.lhs.zero_variance);
    EXPECT_EQ(e.lhs.mean, 1.0);
    EXPECT_TRUE(e.pass);
}

TEST(Estimate, BitwiseIdenticalAcrossWorkers) {
    auto m = spec(GeneratorKind::multiplicative_positive, 30, 1.0, 77);
    m.step_scale = 0.3;
    const auto one = doob::estimate_sides(m, ExpectationIneq::ineq8, 0, 20000, 1);
    for (unsigned w : {2u, 4u, 8u}) {
        const auto many = doob::estimate_sides(m, ExpectationIneq::ineq8, 0, 20000, w);
        EXPECT_EQ(one.lhs.mean, many.lhs.mean);
        EXPECT_EQ(one.rhs.mean, many.rhs.mean);
        EXPECT_EQ(one.lhs.std_err, many.lhs.std_err);
        EXPECT_EQ(one.rhs.std_err, many.rhs.std_err);
    }
    const auto t1 = doob::estimate_transform(m, 1.2, LevelIneq::first, 5000, 1);
    const auto t8 = doob::estimate_transform(m, 1.2, LevelIneq::first, 5000, 8);
    EXPECT_EQ(t1.mean, t8.mean);
}

// Sample means must sit within a few standard errors of the exact tree expectations.
TEST(Estimate, AgreesWithExactTree) {
    struct Case {
        GeneratorSpec spec;
        ExpectationIneq ineq;
        double level;
    };
    auto m = spec(GeneratorKind::multiplicative_positive, 12, 1.0, 5);
    m.step_scale = 0.3;
    auto sub = m;
    sub.log_mean = 0.05;
    auto d = spec(GeneratorKind::drift_walk, 12, 0.0, 6);
    d.drift = -0.2;
    const std::vector<Case> cases{{spec(GeneratorKind::symmetric_walk, 12, 0, 3), ExpectationIneq::ineq3, 2},
                                  {spec(GeneratorKind::abs_walk, 12, 0, 4), ExpectationIneq::ineq4, 2},
                                  {m, ExpectationIneq::ineq8, 0},
                                  {sub, ExpectationIneq::ineq9, 0},
                                  {d, ExpectationIneq::ineq3, 1}};
    for (const auto& c : cases) {
        const auto tree = doob::to_tree(c.spec);
        const double lhs = doob::expect(tree, [&](auto x) { return doob::inequality_sides(c.ineq, c.level, x)[0]; });
        const double rhs = doob::expect(tree, [&](auto x) { return doob::inequality_sides(c.ineq, c.level, x)[1]; });
        const auto e = doob::estimate_sides(c.spec, c.ineq, c.level, 100000);
        EXPECT_NEAR(e.lhs.mean, lhs, 5 * e.lhs.std_err + 1e-12) << doob::to_string(c.spec.kind);
        EXPECT_NEAR(e.rhs.mean, rhs, 5 * e.rhs.std_err + 1e-12) << doob::to_string(c.spec.kind);
        EXPECT_TRUE(e.pass);
        EXPECT_LE(lhs, rhs + 1e-12);
    }
}

TEST(Transform, MeanSignFollowsClass) {
    const auto sym = doob::estimate_transform(spec(GeneratorKind::symmetric_walk, 40, 0, 8), 2, LevelIneq::first, 100000);
    EXPECT_LE(std::abs(sym.mean), 3 * sym.std_err);
    auto d = spec(GeneratorKind::drift_walk, 40, 0, 9);
    d.drift = -0.1;
    const auto down = doob::estimate_transform(d, 2, LevelIneq::first, 100000);
    EXPECT_LE(down.mean - 3 * down.std_err, 0.0);
    const auto up = doob::estimate_transform(spec(GeneratorKind::abs_walk, 40, 0, 10), 2, LevelIneq::first, 100000);
    EXPECT_GE(up.mean + 3 * up.std_err, 0.0);
}

// Every sampled path satisfies the pathwise bounds; no expectation is involved.
TEST(PathwiseFuzz, MillionPathsPerKind) {
    for (auto kind : {GeneratorKind::symmetric_walk, GeneratorKind::drift_walk,
                      GeneratorKind::multiplicative_positive, GeneratorKind::abs_walk}) {
        auto s = spec(kind, 10, kind == GeneratorKind::multiplicative_positive ? 1.0 : 0.0, 123);
        if (kind == GeneratorKind::drift_walk) s.drift = 0.3;
        if (kind == GeneratorKind::multiplicative_positive) s.step_scale = 0.5;
        std::size_t violations = 0;
        for (std::uint64_t t = 0; t < 1'000'000; ++t) {
            const auto path = doob::generate(s, t);
            const double level = -2.0 + 0.25 * static_cast<double>(t % 21);
            const auto r1 = doob::eval_ineq1(path, level);
            const auto r2 = doob::eval_ineq2(path, level);
            violations += !r1.holds() + !r2.holds();
            if (doob::generator_nonnegative(s) && t % 10 == 0) {
                violations += !doob::eval_lp(doob::NonnegPath(path), 2.0).holds();
                if (path.front() > 0) {
                    const auto l = doob::eval_llogl(doob::PositiveStartPath(path));
                    violations += !l.normalized.holds() + !l.unnormalized.holds();
                }
            }
        }
        EXPECT_EQ(violations, 0u) << doob::to_string(kind);
    }
}

} // namespace
