#pragma once

#include <cmath>
#include <cstddef>
#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "doob/path.hpp"

namespace doob {

/// Default scale of the blended absolute/relative tolerance.
inline constexpr double default_tolerance = 1e-9;

/// tol = scale * (1 + |lhs| + |rhs|).
inline double blended_tolerance(double lhs, double rhs, double scale = default_tolerance) {
    return scale * (1.0 + std::abs(lhs) + std::abs(rhs));
}

/// e/(e-1), the constant of the L log L bounds.
inline double llogl_constant() {
    const double e = std::exp(1.0);
    return e / (e - 1.0);
}

/// x log x with 0 log 0 = 0.
inline double xlogx(double x) { return x == 0.0 ? 0.0 : x * std::log(x); }

/// x log(y) with 0 log(anything) = 0.
inline double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

/// Which of the two level-crossing inequalities: the first holds the
/// underlying while below the level, the second is short once it is reached.
enum class LevelIneq { first, second };

/// Proof-case split for a level λ.
enum class ProofCase { below_level, start_above, crossing };

inline const char* to_string(ProofCase c) {
    switch (c) {
    case ProofCase::below_level: return "BelowLevel";
    case ProofCase::start_above: return "StartAbove";
    case ProofCase::crossing: return "Crossing";
    }
    return "?";
}

struct IneqReport {
    std::string tag;  // eq1, eq2, eq5, eq6, eq7
    double lhs = 0.0;
    double rhs = 0.0;
    double gap = 0.0;  // rhs - lhs
    std::optional<ProofCase> proof_case;
    std::optional<std::size_t> crossing_index;
    std::optional<double> level;
    std::optional<double> exponent;

    bool holds(double scale = default_tolerance) const {
        return gap >= -blended_tolerance(lhs, rhs, scale);
    }
};

/// Classifies (path, λ) into the three proof cases; the crossing index is
/// set only for ProofCase::crossing.
inline std::pair<ProofCase, std::optional<std::size_t>> proof_case(const Path& path, double level) {
    const auto j = first_crossing(path, level);
    if (!j) return {ProofCase::below_level, std::nullopt};
    if (*j == 0) return {ProofCase::start_above, std::nullopt};
    return {ProofCase::crossing, j};
}

namespace detail {

inline IneqReport level_report(const char* tag, const Path& path, double level, double lhs, double rhs) {
    IneqReport r;
    r.tag = tag;
    r.lhs = lhs;
    r.rhs = rhs;
    r.gap = rhs - lhs;
    auto [c, j] = proof_case(path, level);
    r.proof_case = c;
    r.crossing_index = j;
    r.level = level;
    return r;
}

} // namespace detail

/// λ 1{x̄_n >= λ} <= x_0∧λ + Σ 1{x̄_{k-1} < λ} Δx_k - x_n 1{x̄_n < λ}
inline IneqReport eval_ineq1(const Path& path, double level) {
    double running = path.front();
    double sum = 0.0;
    for (std::size_t k = 1; k < path.size(); ++k) {
        if (running < level) sum += path[k] - path[k - 1];
        running = std::max(running, path[k]);
    }
    const bool hit = running >= level;
    const double lhs = hit ? level : 0.0;
    const double rhs = std::min(path.front(), level) + sum - (hit ? 0.0 : path.back());
    return detail::level_report("eq1", path, level, lhs, rhs);
}

/// λ 1{x̄_n >= λ} <= -(x_0-λ)1{x_0 >= λ} - Σ 1{x̄_{k-1} >= λ} Δx_k + x_n 1{x̄_n >= λ}
inline IneqReport eval_ineq2(const Path& path, double level) {
    double running = path.front();
    double sum = 0.0;
    for (std::size_t k = 1; k < path.size(); ++k) {
        if (running >= level) sum += path[k] - path[k - 1];
        running = std::max(running, path[k]);
    }
    const bool hit = running >= level;
    const double lhs = hit ? level : 0.0;
    const double start = path.front() >= level ? path.front() - level : 0.0;
    const double rhs = -start - sum + (hit ? path.back() : 0.0);
    return detail::level_report("eq2", path, level, lhs, rhs);
}

/// Closed-form gap of both level inequalities: x_j - λ at the first crossing
/// j >= 1, zero otherwise. Independent of eval_ineq1/eval_ineq2.
inline double gap_oracle(const Path& path, double level) {
    const auto j = first_crossing(path, level);
    if (!j || *j == 0) return 0.0;
    return path[*j] - level;
}

/// Reading of a level inequality as a trading strategy: start with
/// `initial_capital`, hold positions[k-1] units over step k, and add
/// `terminal_term` at the horizon. The result dominates `payoff` on every path.
struct HedgeDecomposition {
    LevelIneq which = LevelIneq::first;
    double initial_capital = 0.0;
    std::vector<double> positions;  // H_1..H_n
    double gains = 0.0;             // Σ H_k Δx_k
    double terminal_term = 0.0;
    double payoff = 0.0;

    double superhedge_value() const { return initial_capital + gains + terminal_term; }
    double gap() const { return superhedge_value() - payoff; }
};

/// Predictable positions H_1..H_n of the level strategy. Elements are
/// 1{x̄_{k-1} < λ} for the first inequality and -1{x̄_{k-1} >= λ} for the second.
inline std::vector<double> hedge_positions(const Path& path, double level, LevelIneq which) {
    std::vector<double> h(path.steps());
    double running = path.front();
    for (std::size_t k = 1; k < path.size(); ++k) {
        const bool below = running < level;
        h[k - 1] = which == LevelIneq::first ? (below ? 1.0 : 0.0) : (below ? 0.0 : -1.0);
        running = std::max(running, path[k]);
    }
    return h;
}

/// Σ H_k Δx_k for the level strategy.
inline double transform_sum(const Path& path, double level, LevelIneq which) {
    const auto h = hedge_positions(path, level, which);
    double sum = 0.0;
    for (std::size_t k = 1; k < path.size(); ++k) sum += h[k - 1] * (path[k] - path[k - 1]);
    return sum;
}

inline HedgeDecomposition hedge_decompose(const Path& path, double level, LevelIneq which) {
    HedgeDecomposition d;
    d.which = which;
    d.positions = hedge_positions(path, level, which);
    for (std::size_t k = 1; k < path.size(); ++k) d.gains += d.positions[k - 1] * (path[k] - path[k - 1]);

    const bool hit = *std::max_element(path.values().begin(), path.values().end()) >= level;
    const double x0 = path.front();
    d.payoff = hit ? level : 0.0;
    if (which == LevelIneq::first) {
        d.initial_capital = std::min(x0, level);
        d.terminal_term = hit ? 0.0 : -path.back();
    } else {
        d.initial_capital = x0 >= level ? -(x0 - level) : 0.0;
        d.terminal_term = hit ? path.back() : 0.0;
    }
    return d;
}

/// q = p/(p-1). Throws unless p > 1.
inline double conjugate_exponent(double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw exponent_out_of_range(p);
    return p / (p - 1.0);
}

/// x̄_n^p <= q^p x_n^p - q x_0^p - q p Σ x̄_{k-1}^{p-1} Δx_k  for nonnegative paths.
inline IneqReport eval_lp(const NonnegPath& nonneg, double p) {
    const double q = conjugate_exponent(p);
    const Path& path = nonneg;
    double running = path.front();
    double sum = 0.0;
    for (std::size_t k = 1; k < path.size(); ++k) {
        sum += std::pow(running, p - 1.0) * (path[k] - path[k - 1]);
        running = std::max(running, path[k]);
    }
    IneqReport r;
    r.tag = "eq5";
    r.lhs = std::pow(running, p);
    r.rhs = std::pow(q, p) * std::pow(path.back(), p) - q * std::pow(path.front(), p) - q * p * sum;
    r.gap = r.rhs - r.lhs;
    r.exponent = p;
    return r;
}

/// Both algebraic forms of the L log L bound, normalised by x_0 (first) and
/// unnormalised (second). They agree up to rounding.
struct LlogLReports {
    IneqReport normalized;    // eq6
    IneqReport unnormalized;  // eq7
};

inline LlogLReports eval_llogl(const PositiveStartPath& positive) {
    const Path& path = positive;
    const double x0 = path.front();
    const double xn = path.back();
    const double c = llogl_constant();

    double running = x0;
    double sum_ratio = 0.0;  // Σ log(x̄_{k-1}/x_0) Δx_k
    double sum_plain = 0.0;  // Σ log(x̄_{k-1}) Δx_k
    for (std::size_t k = 1; k < path.size(); ++k) {
        const double dx = path[k] - path[k - 1];
        sum_ratio += std::log(running / x0) * dx;
        sum_plain += std::log(running) * dx;
        running = std::max(running, path[k]);
    }

    LlogLReports out;
    auto fill = [&](IneqReport& r, const char* tag, double bracket) {
        r.tag = tag;
        r.lhs = running;
        r.rhs = c * bracket;
        r.gap = r.rhs - r.lhs;
    };
    fill(out.normalized, "eq6", x0 + xlogy(xn, xn / x0) - sum_ratio);
    fill(out.unnormalized, "eq7", x0 * (1.0 - std::log(x0)) + xlogx(xn) - sum_plain);
    return out;
}

} // namespace doob
