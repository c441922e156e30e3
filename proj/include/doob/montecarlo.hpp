#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "doob/errors.hpp"
#include "doob/path.hpp"
#include "doob/pathwise.hpp"
#include "doob/prob_tree.hpp"

namespace doob {

//---------------------------------------------------------------------------//
// Seeded path generators
//
// Every generator takes two-point steps, so a spec with n steps is exactly a
// binary TreeModel of depth n (see to_tree) and Monte Carlo results can be
// cross-checked against exact expectations.
//---------------------------------------------------------------------------//

enum class GeneratorKind { symmetric_walk, drift_walk, multiplicative_positive, abs_walk };

inline const char* to_string(GeneratorKind k) {
    switch (k) {
    case GeneratorKind::symmetric_walk: return "SymmetricWalk";
    case GeneratorKind::drift_walk: return "DriftWalk";
    case GeneratorKind::multiplicative_positive: return "MultiplicativePositive";
    case GeneratorKind::abs_walk: return "AbsWalk";
    }
    return "?";
}

struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::symmetric_walk;
    std::size_t steps = 0;
    double x0 = 0.0;
    /// Step size ±s for the walks; log-factor size for the multiplicative walk
    /// (factors e^s and e^-s).
    double step_scale = 1.0;
    /// Mean step of DriftWalk, |drift| <= step_scale.
    double drift = 0.0;
    /// Log of the mean factor of MultiplicativePositive, |log_mean| < step_scale.
    /// Zero gives a martingale, positive a submartingale.
    double log_mean = 0.0;
    std::uint64_t seed = 0;
};

/// Throws domain_error when the spec cannot produce its advertised process.
inline void validate(const GeneratorSpec& spec) {
    if (!(spec.step_scale > 0.0) || !std::isfinite(spec.step_scale))
        throw domain_error("step_scale must be positive and finite");
    if (!std::isfinite(spec.x0)) throw domain_error("x0 must be finite");
    switch (spec.kind) {
    case GeneratorKind::drift_walk:
        if (!(std::abs(spec.drift) <= spec.step_scale))
            throw domain_error("DriftWalk needs |drift| <= step_scale");
        break;
    case GeneratorKind::multiplicative_positive:
        if (!(spec.x0 > 0.0)) throw domain_error("MultiplicativePositive needs x0 > 0");
        if (!(std::abs(spec.log_mean) < spec.step_scale))
            throw domain_error("MultiplicativePositive needs |log_mean| < step_scale");
        break;
    default: break;
    }
}

/// Process class the generator produces by construction.
inline ClassKind generator_class(const GeneratorSpec& spec) {
    auto by_sign = [](double v) {
        if (v > 0.0) return ClassKind::submartingale;
        if (v < 0.0) return ClassKind::supermartingale;
        return ClassKind::martingale;
    };
    switch (spec.kind) {
    case GeneratorKind::symmetric_walk: return ClassKind::martingale;
    case GeneratorKind::drift_walk: return by_sign(spec.drift);
    case GeneratorKind::multiplicative_positive: return by_sign(spec.log_mean);
    case GeneratorKind::abs_walk: return ClassKind::submartingale;
    }
    return ClassKind::none;
}

inline bool generator_nonnegative(const GeneratorSpec& spec) {
    return spec.kind == GeneratorKind::multiplicative_positive || spec.kind == GeneratorKind::abs_walk;
}

/// SplitMix64 finaliser.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based uniform on [0, 1): a pure function of (seed, trial, step),
/// built from chained SplitMix64 rounds. No generator state is carried
/// between draws, so trials can be evaluated in any order or thread.
constexpr double counter_uniform(std::uint64_t seed, std::uint64_t trial, std::uint64_t step) noexcept {
    const std::uint64_t bits = splitmix64(splitmix64(splitmix64(seed) ^ trial) ^ step);
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

namespace detail {

struct TwoPointStep {
    double up_probability;
    double up;    // additive increment or multiplicative factor
    double down;
    bool multiplicative;
};

inline TwoPointStep step_law(const GeneratorSpec& spec) {
    const double s = spec.step_scale;
    switch (spec.kind) {
    case GeneratorKind::drift_walk: return {0.5 * (1.0 + spec.drift / s), s, -s, false};
    case GeneratorKind::multiplicative_positive: {
        const double u = std::exp(s), d = std::exp(-s);
        return {(std::exp(spec.log_mean) - d) / (u - d), u, d, true};
    }
    default: return {0.5, s, -s, false};
    }
}

inline double advance(const TwoPointStep& law, double current, bool up) {
    const double move = up ? law.up : law.down;
    return law.multiplicative ? current * move : current + move;
}

} // namespace detail

/// Path for one trial. Deterministic in (spec.seed, trial_index).
inline Path generate(const GeneratorSpec& spec, std::uint64_t trial_index) {
    validate(spec);
    const auto law = detail::step_law(spec);
    std::vector<double> x(spec.steps + 1);
    double state = spec.x0;
    x[0] = state;
    for (std::size_t k = 1; k <= spec.steps; ++k) {
        const bool up = counter_uniform(spec.seed, trial_index, k) < law.up_probability;
        state = detail::advance(law, state, up);
        x[k] = state;
    }
    if (spec.kind == GeneratorKind::abs_walk)
        for (auto& v : x) v = std::abs(v);
    return Path(std::move(x));
}

inline constexpr std::size_t max_exact_tree_steps = 18;

/// Exact binary tree of the generator's law.
inline TreeModel to_tree(const GeneratorSpec& spec) {
    validate(spec);
    if (spec.steps > max_exact_tree_steps) throw domain_error("too many steps for an exact tree");
    const auto law = detail::step_law(spec);
    const bool abs = spec.kind == GeneratorKind::abs_walk;

    auto build = [&](auto&& self, double state, std::size_t depth) -> TreeNode {
        TreeNode node{abs ? std::abs(state) : state, {}};
        if (depth == spec.steps) return node;
        const double p = law.up_probability;
        if (p > 0.0) node.children.push_back({p, self(self, detail::advance(law, state, true), depth + 1)});
        if (p < 1.0) node.children.push_back({1.0 - p, self(self, detail::advance(law, state, false), depth + 1)});
        return node;
    };
    return TreeModel(build(build, spec.x0, 0));
}

//---------------------------------------------------------------------------//
// Estimation
//---------------------------------------------------------------------------//

struct MCEstimate {
    double mean = 0.0;
    double std_err = 0.0;  // sample standard deviation / sqrt(trials)
    std::size_t trials = 0;
    bool zero_variance = false;
};

/// Pairwise summation; the result depends only on the order of `values`.
inline double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 16) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

inline MCEstimate summarize(std::span<const double> samples) {
    if (samples.size() < 2) throw domain_error("an estimate needs at least two trials");
    const double n = static_cast<double>(samples.size());
    const double mean = pairwise_sum(samples) / n;
    std::vector<double> sq(samples.size());
    std::transform(samples.begin(), samples.end(), sq.begin(), [mean](double v) { return (v - mean) * (v - mean); });
    const double var = pairwise_sum(sq) / (n - 1.0);
    return {mean, std::sqrt(var / n), samples.size(), var == 0.0};
}

/// Runs fn(trial) -> double[Width] for trial = 0..trials-1 on `workers`
/// threads. Output slot t always holds trial t, so the result is independent
/// of the worker count.
template <std::size_t Width, class F>
std::vector<std::array<double, Width>> run_trials(std::size_t trials, unsigned workers, F&& fn) {
    std::vector<std::array<double, Width>> out(trials);
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(trials, 1))));
    if (workers == 1) {
        for (std::size_t t = 0; t < trials; ++t) out[t] = fn(t);
        return out;
    }
    std::vector<std::jthread> pool;
    const std::size_t chunk = (trials + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk, end = std::min(trials, begin + chunk);
        pool.emplace_back([&, begin, end] {
            for (std::size_t t = begin; t < end; ++t) out[t] = fn(t);
        });
    }
    pool.clear();
    return out;
}

enum class ExpectationIneq { ineq3, ineq4, ineq8, ineq9 };

inline const char* to_string(ExpectationIneq i) {
    switch (i) {
    case ExpectationIneq::ineq3: return "eq3";
    case ExpectationIneq::ineq4: return "eq4";
    case ExpectationIneq::ineq8: return "eq8";
    case ExpectationIneq::ineq9: return "eq9";
    }
    return "?";
}

/// Throws class_mismatch unless the generator satisfies the inequality's hypothesis.
inline void require_hypothesis(const GeneratorSpec& spec, ExpectationIneq ineq) {
    const ProcessClass cls{generator_class(spec), 0.0};
    const std::string who = std::string(to_string(spec.kind)) + " (" + to_string(cls.kind) + ")";
    switch (ineq) {
    case ExpectationIneq::ineq3:
        if (!cls.is_supermartingale()) throw class_mismatch(who + " is not a supermartingale");
        break;
    case ExpectationIneq::ineq4:
        if (!cls.is_submartingale()) throw class_mismatch(who + " is not a submartingale");
        break;
    case ExpectationIneq::ineq8:
        if (!cls.is_martingale() || !generator_nonnegative(spec))
            throw class_mismatch(who + " is not a nonnegative martingale");
        if (!(spec.x0 > 0.0)) throw class_mismatch(who + " does not start above zero");
        break;
    case ExpectationIneq::ineq9:
        if (!cls.is_submartingale() || !generator_nonnegative(spec))
            throw class_mismatch(who + " is not a nonnegative submartingale");
        break;
    }
}

/// Both sides of an expectation inequality evaluated on a single path.
inline std::array<double, 2> inequality_sides(ExpectationIneq ineq, double level, std::span<const double> x) {
    namespace fn = functional;
    switch (ineq) {
    case ExpectationIneq::ineq3:
        return {level * evaluate(fn::hit_indicator{level}, x),
                evaluate(fn::start_capped{level}, x) - evaluate(fn::terminal_below{level}, x)};
    case ExpectationIneq::ineq4:
        return {level * evaluate(fn::hit_indicator{level}, x),
                -evaluate(fn::start_excess{level}, x) + evaluate(fn::terminal_above{level}, x)};
    case ExpectationIneq::ineq8:
        return {evaluate(fn::maximum{}, x),
                llogl_constant() * (evaluate(fn::start_entropy{}, x) + evaluate(fn::terminal_entropy{}, x))};
    case ExpectationIneq::ineq9:
        return {evaluate(fn::maximum{}, x), llogl_constant() * (1.0 + evaluate(fn::terminal_entropy{}, x))};
    }
    return {0.0, 0.0};
}

struct SidesEstimate {
    ExpectationIneq ineq = ExpectationIneq::ineq3;
    double level = 0.0;
    MCEstimate lhs;
    MCEstimate rhs;
    bool pass = false;
    bool rerun = false;  // first attempt failed and was repeated at 4x trials
};

inline constexpr double pass_sigmas = 3.0;

inline SidesEstimate estimate_sides(const GeneratorSpec& spec, ExpectationIneq ineq, double level,
                                    std::size_t trials, unsigned workers = 1) {
    validate(spec);
    require_hypothesis(spec, ineq);

    auto attempt = [&](std::size_t count) {
        const auto samples = run_trials<2>(count, workers, [&](std::size_t t) {
            const Path path = generate(spec, t);
            return inequality_sides(ineq, level, path.values());
        });
        std::vector<double> lhs(count), rhs(count);
        for (std::size_t t = 0; t < count; ++t) {
            lhs[t] = samples[t][0];
            rhs[t] = samples[t][1];
        }
        SidesEstimate e;
        e.ineq = ineq;
        e.level = level;
        e.lhs = summarize(lhs);
        e.rhs = summarize(rhs);
        const double combined = std::hypot(e.lhs.std_err, e.rhs.std_err);
        e.pass = e.lhs.mean <= e.rhs.mean + pass_sigmas * combined;
        return e;
    };

    auto result = attempt(trials);
    if (!result.pass) {
        result = attempt(4 * trials);
        result.rerun = true;
    }
    return result;
}

/// Monte Carlo estimate of E[Σ H_k ΔX_k] for the level strategy.
inline MCEstimate estimate_transform(const GeneratorSpec& spec, double level, LevelIneq which,
                                     std::size_t trials, unsigned workers = 1) {
    validate(spec);
    const auto samples = run_trials<1>(trials, workers, [&](std::size_t t) {
        return std::array<double, 1>{transform_sum(generate(spec, t), level, which)};
    });
    std::vector<double> values(trials);
    for (std::size_t t = 0; t < trials; ++t) values[t] = samples[t][0];
    return summarize(values);
}

} // namespace doob
