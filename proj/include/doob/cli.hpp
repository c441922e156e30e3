#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "doob/derivation.hpp"
#include "doob/io.hpp"
#include "doob/montecarlo.hpp"
#include "doob/path.hpp"
#include "doob/pathwise.hpp"
#include "doob/prob_tree.hpp"

namespace doob::cli {

enum class Command { check, sweep, fuzz, tree, mc, derive, counterexample };
enum class OutputFormat { text, json, csv };
enum class Grid { small, large };

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int violation = 1;
inline constexpr int usage = 2;
inline constexpr int invalid_input = 3;
} // namespace exit_code

struct RunConfig {
    Command command = Command::check;
    std::string path_file;
    std::string tree_file;
    std::string spec_file;
    std::optional<double> level;
    std::optional<double> exponent;
    std::optional<double> epsilon;
    std::optional<std::size_t> trials;
    std::uint64_t seed = 1;
    double tol = default_tolerance;
    OutputFormat format = OutputFormat::text;
    Grid grid = Grid::small;
    std::size_t points = 101;
    unsigned workers = 1;
    bool llogl = false;
    std::optional<std::string> ineq;  // mc: restrict to one of eq3, eq4, eq8, eq9
    GeneratorSpec generator;          // mc, when no spec file is given
};

/// Thrown for a configuration that does not fit its command (exit 2).
struct usage_error : error {
    using error::error;
};

namespace detail {

inline std::string path_text(const Path& p) {
    std::string s = "(";
    for (std::size_t k = 0; k < p.size(); ++k) s += (k ? "," : "") + io::full_precision(p[k]);
    return s + ")";
}

inline std::string case_text(const IneqReport& r) {
    if (!r.proof_case) return "";
    std::string s = to_string(*r.proof_case);
    if (r.crossing_index) s += "(" + std::to_string(*r.crossing_index) + ")";
    return s;
}

inline void print_text(std::ostream& out, const IneqReport& r) {
    out << r.tag << " lhs=" << io::rounded(r.lhs) << " rhs=" << io::rounded(r.rhs) << " gap=" << io::rounded(r.gap);
    if (r.proof_case) out << " case=" << case_text(r);
    if (r.level) out << " lambda=" << io::rounded(*r.level);
    if (r.exponent) out << " p=" << io::rounded(*r.exponent);
    out << '\n';
}

inline constexpr const char* ineq_csv_header = "tag,lhs,rhs,gap,case,crossing_index,level,exponent";

inline void print_csv(std::ostream& out, const IneqReport& r) {
    out << r.tag << ',' << io::full_precision(r.lhs) << ',' << io::full_precision(r.rhs) << ','
        << io::full_precision(r.gap) << ',' << (r.proof_case ? to_string(*r.proof_case) : "") << ','
        << (r.crossing_index ? std::to_string(*r.crossing_index) : "") << ','
        << (r.level ? io::full_precision(*r.level) : "") << ',' << (r.exponent ? io::full_precision(*r.exponent) : "")
        << '\n';
}

inline void print_text(std::ostream& out, const HedgeDecomposition& h) {
    out << (h.which == LevelIneq::first ? "eq1" : "eq2") << " hedge capital=" << io::rounded(h.initial_capital)
        << " positions=[";
    for (std::size_t k = 0; k < h.positions.size(); ++k) out << (k ? "," : "") << io::rounded(h.positions[k]);
    out << "] gains=" << io::rounded(h.gains) << " terminal=" << io::rounded(h.terminal_term)
        << " payoff=" << io::rounded(h.payoff) << '\n';
}

inline void print_text(std::ostream& out, const ExpectationReport& r) {
    out << r.tag << " lhs=" << io::rounded(r.lhs) << " rhs=" << io::rounded(r.rhs)
        << " rhs_classical=" << io::rounded(r.rhs_classical) << " slack=" << io::rounded(r.slack)
        << " improvement=" << io::rounded(r.improvement);
    if (r.level) out << " lambda=" << io::rounded(*r.level);
    out << '\n';
    for (const auto& s : r.route) out << r.tag << "   route " << s.label << " = " << io::rounded(s.value) << '\n';
}

inline void print_text(std::ostream& out, const ChainReport& r) {
    for (std::size_t i = 0; i < r.stages.size(); ++i)
        out << r.tag << " stage " << i << ": " << r.stages[i].label << " = " << io::rounded(r.stages[i].value) << '\n';
    out << r.tag << " final bound = " << io::rounded(r.final_rhs) << " ordered=" << (r.all_ordered ? "yes" : "NO")
        << '\n';
}

// Pathwise checks shared by the grid and random fuzz campaigns.
struct FuzzTally {
    std::size_t checks = 0;
    std::size_t violations = 0;
    std::size_t printed = 0;
};

inline constexpr std::size_t max_printed_violations = 50;

inline void report_violation(std::ostream& out, FuzzTally& tally, const std::string& line) {
    ++tally.violations;
    if (tally.printed++ < max_printed_violations) out << "violation " << line << '\n';
}

/// Checks both level inequalities at λ. `exact` demands bitwise agreement of
/// the gaps with the oracle (valid on dyadic grids); otherwise tolerance.
inline void fuzz_level(std::ostream& out, FuzzTally& tally, const Path& p, double level, bool exact, double tol) {
    ++tally.checks;
    const auto r1 = eval_ineq1(p, level);
    const auto r2 = eval_ineq2(p, level);
    const double oracle = gap_oracle(p, level);
    for (const auto* r : {&r1, &r2}) {
        const double t = blended_tolerance(r->lhs, r->rhs, tol);
        const bool agrees = exact ? r->gap == oracle : std::abs(r->gap - oracle) <= t;
        if (r->gap < -t || !agrees)
            report_violation(out, tally,
                             r->tag + " path=" + path_text(p) + " lambda=" + io::full_precision(level) +
                                 " gap=" + io::full_precision(r->gap) + " oracle=" + io::full_precision(oracle));
    }
}

inline void fuzz_lp(std::ostream& out, FuzzTally& tally, const Path& p, double exponent, double tol) {
    ++tally.checks;
    const NonnegPath nonneg(p);
    const auto r = eval_lp(nonneg, exponent);
    const auto chain = chain_lp(nonneg, exponent, tol);
    if (!r.holds(tol) || !chain.all_ordered)
        report_violation(out, tally,
                         "eq5 path=" + path_text(p) + " p=" + io::full_precision(exponent) +
                             " gap=" + io::full_precision(r.gap) + (chain.all_ordered ? "" : " chain-unordered"));
}

inline void fuzz_llogl(std::ostream& out, FuzzTally& tally, const Path& p, double tol) {
    ++tally.checks;
    const PositiveStartPath positive(p);
    const auto r = eval_llogl(positive);
    const auto chain = chain_llogl(positive, tol);
    const bool forms_agree = std::abs(r.normalized.rhs - r.unnormalized.rhs) <=
                             blended_tolerance(r.normalized.rhs, r.unnormalized.rhs, tol);
    if (!r.normalized.holds(tol) || !forms_agree || !chain.all_ordered)
        report_violation(out, tally,
                         "eq6 path=" + path_text(p) + " gap=" + io::full_precision(r.normalized.gap) +
                             " eq7_rhs=" + io::full_precision(r.unnormalized.rhs) +
                             (chain.all_ordered ? "" : " chain-unordered"));
}

inline std::string require_file(const std::string& file, const char* flag) {
    if (file.empty()) throw usage_error(std::string("missing required ") + flag);
    return file;
}

inline void emit_jsonl(std::ostream& out, const io::json& j) { out << j.dump() << '\n'; }

//---------------------------------------------------------------------------//
// Commands
//---------------------------------------------------------------------------//

inline int run_check(const RunConfig& cfg, std::ostream& out) {
    const Path path = io::read_path_file(require_file(cfg.path_file, "--path"));
    if (!cfg.level && !cfg.exponent && !cfg.llogl)
        throw usage_error("check needs at least one of --lambda, --p, --llogl");

    std::vector<IneqReport> reports;
    std::vector<HedgeDecomposition> hedges;
    if (cfg.level) {
        reports.push_back(eval_ineq1(path, *cfg.level));
        reports.push_back(eval_ineq2(path, *cfg.level));
        hedges.push_back(hedge_decompose(path, *cfg.level, LevelIneq::first));
        hedges.push_back(hedge_decompose(path, *cfg.level, LevelIneq::second));
    }
    if (cfg.exponent) reports.push_back(eval_lp(NonnegPath(path), *cfg.exponent));
    if (cfg.llogl) {
        const auto r = eval_llogl(PositiveStartPath(path));
        reports.push_back(r.normalized);
        reports.push_back(r.unnormalized);
    }

    bool ok = true;
    for (const auto& r : reports) ok = ok && r.holds(cfg.tol);

    switch (cfg.format) {
    case OutputFormat::text:
        for (const auto& r : reports) print_text(out, r);
        for (const auto& h : hedges) print_text(out, h);
        break;
    case OutputFormat::json:
        for (const auto& r : reports) emit_jsonl(out, io::to_json(r));
        for (const auto& h : hedges) emit_jsonl(out, io::to_json(h));
        break;
    case OutputFormat::csv:
        out << ineq_csv_header << '\n';
        for (const auto& r : reports) print_csv(out, r);
        break;
    }
    return ok ? exit_code::ok : exit_code::violation;
}

inline int run_sweep(const RunConfig& cfg, std::ostream& out) {
    const Path path = io::read_path_file(require_file(cfg.path_file, "--path"));
    if (cfg.points < 2) throw usage_error("--points must be at least 2");
    const auto values = path.values();
    const double lo = *std::min_element(values.begin(), values.end()) - 1.0;
    const double hi = *std::max_element(values.begin(), values.end()) + 1.0;

    bool ok = true;
    if (cfg.format == OutputFormat::csv) out << "tag,lambda,lhs,rhs1,rhs2,gap,case\n";
    for (std::size_t i = 0; i < cfg.points; ++i) {
        const double level = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cfg.points - 1);
        const auto r1 = eval_ineq1(path, level);
        const auto r2 = eval_ineq2(path, level);
        ok = ok && r1.holds(cfg.tol) && r2.holds(cfg.tol);
        switch (cfg.format) {
        case OutputFormat::csv:
            out << "eq1+eq2," << io::full_precision(level) << ',' << io::full_precision(r1.lhs) << ','
                << io::full_precision(r1.rhs) << ',' << io::full_precision(r2.rhs) << ','
                << io::full_precision(r1.gap) << ',' << case_text(r1) << '\n';
            break;
        case OutputFormat::json:
            emit_jsonl(out, {{"tag", "eq1+eq2"}, {"lambda", level}, {"lhs", r1.lhs}, {"rhs1", r1.rhs},
                             {"rhs2", r2.rhs}, {"gap", r1.gap}, {"case", case_text(r1)}});
            break;
        case OutputFormat::text:
            out << "eq1+eq2 lambda=" << io::rounded(level) << " lhs=" << io::rounded(r1.lhs)
                << " rhs1=" << io::rounded(r1.rhs) << " rhs2=" << io::rounded(r2.rhs) << " gap=" << io::rounded(r1.gap)
                << " case=" << case_text(r1) << '\n';
            break;
        }
    }
    return ok ? exit_code::ok : exit_code::violation;
}

/// Calls f(path) for every path of length n+1 with entries in `alphabet`.
template <class F>
void for_each_grid_path(const std::vector<double>& alphabet, std::size_t n, F&& f) {
    std::vector<std::size_t> digits(n + 1, 0);
    std::vector<double> x(n + 1, alphabet.front());
    while (true) {
        f(Path(x));
        std::size_t k = 0;
        while (k <= n && ++digits[k] == alphabet.size()) {
            digits[k] = 0;
            x[k] = alphabet[0];
            ++k;
        }
        if (k > n) return;
        x[k] = alphabet[digits[k]];
    }
}

inline int run_fuzz(const RunConfig& cfg, std::ostream& out) {
    const int half_width = cfg.grid == Grid::small ? 2 : 3;
    const std::size_t n = cfg.grid == Grid::small ? 4 : 6;
    std::vector<double> alphabet, levels;
    for (int v = -half_width; v <= half_width; ++v) alphabet.push_back(v);
    for (int v = -2 * half_width - 1; v <= 2 * half_width + 1; ++v) levels.push_back(0.5 * v);
    const std::vector<double> exponents{1.5, 2.0, 3.0};

    FuzzTally level_tally, lp_tally, llogl_tally;
    std::size_t grid_paths = 0, nonneg_paths = 0, positive_paths = 0;
    for_each_grid_path(alphabet, n, [&](const Path& p) {
        ++grid_paths;
        for (double level : levels) fuzz_level(out, level_tally, p, level, true, cfg.tol);
        const auto kind = validate(p.values());
        if (kind == PathKind::general) return;
        ++nonneg_paths;
        for (double e : exponents) fuzz_lp(out, lp_tally, p, e, cfg.tol);
        if (kind != PathKind::positive_start) return;
        ++positive_paths;
        fuzz_llogl(out, llogl_tally, p, cfg.tol);
    });

    std::size_t violations = level_tally.violations + lp_tally.violations + llogl_tally.violations;
    auto summary = [&](const char* tag, const FuzzTally& t, std::string shape) {
        if (cfg.format == OutputFormat::json)
            emit_jsonl(out, {{"tag", tag}, {"violations", t.violations}, {"checks", t.checks}, {"shape", shape}});
        else
            out << tag << ": " << t.violations << " violations / " << shape << '\n';
    };
    summary("eq1,eq2", level_tally,
            std::to_string(grid_paths) + " paths × " + std::to_string(levels.size()) + " levels");
    summary("eq5", lp_tally,
            std::to_string(nonneg_paths) + " paths × " + std::to_string(exponents.size()) + " exponents");
    summary("eq6,eq7", llogl_tally, std::to_string(positive_paths) + " paths");

    const std::size_t random_paths = cfg.trials.value_or(10'000);
    if (random_paths > 0) {
        FuzzTally random_level, random_lp, random_llogl;
        const GeneratorKind kinds[] = {GeneratorKind::symmetric_walk, GeneratorKind::drift_walk,
                                       GeneratorKind::multiplicative_positive, GeneratorKind::abs_walk};
        for (std::size_t t = 0; t < random_paths; ++t) {
            const std::uint64_t key = cfg.seed ^ 0x5eedf00dULL;
            GeneratorSpec spec;
            spec.kind = kinds[t % 4];
            spec.steps = 1 + static_cast<std::size_t>(counter_uniform(key, t, 0) * 40.0);
            spec.x0 = spec.kind == GeneratorKind::multiplicative_positive ? 0.5 + 2.0 * counter_uniform(key, t, 1)
                                                                          : 4.0 * counter_uniform(key, t, 1) - 2.0;
            spec.step_scale = spec.kind == GeneratorKind::multiplicative_positive ? 0.3 : 1.0;
            spec.drift = -0.2;
            spec.seed = cfg.seed;
            const Path p = generate(spec, t);
            const auto v = p.values();
            const double lo = *std::min_element(v.begin(), v.end()) - 0.5;
            const double hi = *std::max_element(v.begin(), v.end()) + 0.5;
            fuzz_level(out, random_level, p, lo + (hi - lo) * counter_uniform(key, t, 2), false, cfg.tol);
            const auto kind = validate(v);
            if (kind != PathKind::general) fuzz_lp(out, random_lp, p, 1.0 + 4.0 * counter_uniform(key, t, 3) + 1e-3, cfg.tol);
            if (kind == PathKind::positive_start) fuzz_llogl(out, random_llogl, p, cfg.tol);
        }
        summary("random eq1,eq2", random_level, std::to_string(random_level.checks) + " generated paths");
        summary("random eq5", random_lp, std::to_string(random_lp.checks) + " nonnegative paths");
        summary("random eq6,eq7", random_llogl, std::to_string(random_llogl.checks) + " positive-start paths");
        violations += random_level.violations + random_lp.violations + random_llogl.violations;
    }
    return violations == 0 ? exit_code::ok : exit_code::violation;
}

inline int run_tree(const RunConfig& cfg, std::ostream& out) {
    const TreeModel tree = io::read_tree_file(require_file(cfg.tree_file, "--tree"));
    const auto cls = classify(tree);
    const bool nonneg = !tree.has_negative_values();

    std::vector<ExpectationReport> reports;
    std::vector<std::pair<LevelIneq, double>> transforms;
    if (cfg.level) {
        if (cls.is_supermartingale()) reports.push_back(verify_ineq3(tree, *cfg.level));
        if (cls.is_submartingale()) reports.push_back(verify_ineq4(tree, *cfg.level));
        for (auto which : {LevelIneq::first, LevelIneq::second})
            transforms.emplace_back(which, transform_expectation(tree, *cfg.level, which));
    }
    if (cls.is_martingale() && nonneg && tree.root().value > 0.0) reports.push_back(verify_ineq8(tree));
    if (cls.is_submartingale() && nonneg) reports.push_back(verify_ineq9(tree));

    bool ok = true;
    for (const auto& r : reports) ok = ok && r.holds(cfg.tol) && route_ordered(r, cfg.tol);

    switch (cfg.format) {
    case OutputFormat::text:
        out << "class " << to_string(cls.kind) << " max_defect=" << io::rounded(cls.max_defect)
            << " depth=" << tree.depth() << " nodes=" << tree.node_count() << '\n';
        for (const auto& r : reports) print_text(out, r);
        for (const auto& [which, v] : transforms)
            out << (which == LevelIneq::first ? "eq1" : "eq2") << " transform E[sum H dX]=" << io::rounded(v) << '\n';
        if (reports.empty()) out << "no inequality applies to this tree" << (cfg.level ? "" : " (no --lambda)") << '\n';
        break;
    case OutputFormat::json:
        emit_jsonl(out, {{"tag", "class"}, {"class", to_string(cls.kind)}, {"max_defect", cls.max_defect}});
        for (const auto& r : reports) emit_jsonl(out, io::to_json(r));
        for (const auto& [which, v] : transforms)
            emit_jsonl(out, {{"tag", which == LevelIneq::first ? "eq1" : "eq2"}, {"transform_expectation", v}});
        break;
    case OutputFormat::csv:
        out << "tag,lhs,rhs,rhs_classical,slack,improvement,level\n";
        for (const auto& r : reports)
            out << r.tag << ',' << io::full_precision(r.lhs) << ',' << io::full_precision(r.rhs) << ','
                << io::full_precision(r.rhs_classical) << ',' << io::full_precision(r.slack) << ','
                << io::full_precision(r.improvement) << ',' << (r.level ? io::full_precision(*r.level) : "") << '\n';
        break;
    }
    return ok ? exit_code::ok : exit_code::violation;
}

inline std::optional<ExpectationIneq> parse_expectation_ineq(const std::string& s) {
    if (s == "eq3") return ExpectationIneq::ineq3;
    if (s == "eq4") return ExpectationIneq::ineq4;
    if (s == "eq8") return ExpectationIneq::ineq8;
    if (s == "eq9") return ExpectationIneq::ineq9;
    return std::nullopt;
}

inline int run_mc(const RunConfig& cfg, std::ostream& out) {
    const GeneratorSpec spec =
        cfg.spec_file.empty() ? cfg.generator : io::generator_from_json(io::json::parse(io::read_file(cfg.spec_file)));
    validate(spec);
    const std::size_t trials = cfg.trials.value_or(100'000);
    if (trials < 2) throw usage_error("--trials must be at least 2");

    std::vector<ExpectationIneq> ineqs;
    if (cfg.ineq) {
        const auto chosen = parse_expectation_ineq(*cfg.ineq);
        if (!chosen) throw usage_error("--ineq must be one of eq3, eq4, eq8, eq9");
        if ((*chosen == ExpectationIneq::ineq3 || *chosen == ExpectationIneq::ineq4) && !cfg.level)
            throw usage_error("--ineq " + *cfg.ineq + " needs --lambda");
        require_hypothesis(spec, *chosen);
        ineqs.push_back(*chosen);
    } else {
        for (auto i : {ExpectationIneq::ineq3, ExpectationIneq::ineq4, ExpectationIneq::ineq8, ExpectationIneq::ineq9}) {
            if ((i == ExpectationIneq::ineq3 || i == ExpectationIneq::ineq4) && !cfg.level) continue;
            try {
                require_hypothesis(spec, i);
                ineqs.push_back(i);
            } catch (const class_mismatch&) {
            }
        }
    }

    bool ok = true;
    if (cfg.format == OutputFormat::csv) out << io::mc_csv_header << '\n';
    for (auto i : ineqs) {
        const auto e = estimate_sides(spec, i, cfg.level.value_or(0.0), trials, cfg.workers);
        ok = ok && e.pass;
        switch (cfg.format) {
        case OutputFormat::csv: out << io::to_csv_row(spec, e) << '\n'; break;
        case OutputFormat::json: emit_jsonl(out, io::to_json(spec, e)); break;
        case OutputFormat::text:
            out << to_string(i) << ' ' << to_string(spec.kind) << " n=" << spec.steps << " lhs=" << io::rounded(e.lhs.mean)
                << "±" << io::rounded(e.lhs.std_err) << " rhs=" << io::rounded(e.rhs.mean) << "±"
                << io::rounded(e.rhs.std_err) << (e.pass ? " pass" : " FAIL") << (e.rerun ? " (rerun 4x)" : "") << '\n';
            break;
        }
    }

    // Sign contracts on the trading gains of the level strategies.
    if (cfg.level && !cfg.ineq) {
        const ProcessClass cls{generator_class(spec), 0.0};
        for (auto which : {LevelIneq::first, LevelIneq::second}) {
            const bool nonpositive = which == LevelIneq::first ? cls.is_supermartingale() : cls.is_submartingale();
            if (!nonpositive) continue;
            const auto e = estimate_transform(spec, *cfg.level, which, trials, cfg.workers);
            const double band = pass_sigmas * e.std_err;
            const bool pass = cls.is_martingale() ? std::abs(e.mean) <= band || e.zero_variance
                                                  : e.mean - band <= 0.0;
            ok = ok && pass;
            const char* tag = which == LevelIneq::first ? "eq1" : "eq2";
            switch (cfg.format) {
            case OutputFormat::csv:
                out << to_string(spec.kind) << ',' << spec.steps << ',' << io::full_precision(*cfg.level) << ','
                    << tag << "-transform," << io::full_precision(e.mean) << ',' << io::full_precision(e.std_err)
                    << ",0,0," << (pass ? "true" : "false") << '\n';
                break;
            case OutputFormat::json:
                emit_jsonl(out, {{"tag", tag}, {"kind", to_string(spec.kind)}, {"n", spec.steps},
                                 {"lambda", *cfg.level}, {"transform", io::to_json(e)}, {"pass", pass}});
                break;
            case OutputFormat::text:
                out << tag << " transform " << to_string(spec.kind) << " E[sum H dX]=" << io::rounded(e.mean) << "±"
                    << io::rounded(e.std_err) << (pass ? " pass" : " FAIL") << '\n';
                break;
            }
        }
    }
    if (ineqs.empty() && cfg.format == OutputFormat::text)
        out << "no expectation inequality applies to " << to_string(spec.kind) << (cfg.level ? "" : " without --lambda")
            << '\n';
    return ok ? exit_code::ok : exit_code::violation;
}

inline int run_derive(const RunConfig& cfg, std::ostream& out) {
    const Path path = io::read_path_file(require_file(cfg.path_file, "--path"));
    const auto kind = validate(path.values());
    if (kind == PathKind::general) throw domain_error("derivation chains need a nonnegative path");

    std::vector<ChainReport> chains{chain_lp(NonnegPath(path), cfg.exponent.value_or(2.0), cfg.tol)};
    if (kind == PathKind::positive_start) chains.push_back(chain_llogl(PositiveStartPath(path), cfg.tol));

    bool ok = true;
    if (cfg.format == OutputFormat::csv) out << "label,value\n";
    for (const auto& c : chains) {
        ok = ok && c.all_ordered;
        switch (cfg.format) {
        case OutputFormat::text: print_text(out, c); break;
        case OutputFormat::json: emit_jsonl(out, io::to_json(c)); break;
        case OutputFormat::csv: {
            const std::string csv = io::to_csv(c);
            out << csv.substr(csv.find('\n') + 1);
            break;
        }
        }
    }
    return ok ? exit_code::ok : exit_code::violation;
}

inline int run_counterexample(const RunConfig& cfg, std::ostream& out) {
    const double eps = cfg.epsilon.value_or(0.01);
    const auto ce = counterexample_eq8(eps);
    const auto eq9 = verify_ineq9(chain_tree(Path{eps, 1.0}));
    const double threshold = counterexample_threshold();
    const bool eq9_ok = eq9.holds(cfg.tol);

    switch (cfg.format) {
    case OutputFormat::text:
        out << "eq8,eq9 epsilon=" << io::rounded(eps) << ": Eq.(8) form "
            << (ce.violated ? "violated: " + io::rounded(ce.rhs) + " < " + io::rounded(ce.lhs)
                            : "holds: " + io::rounded(ce.lhs) + " ≤ " + io::rounded(ce.rhs))
            << "; Eq.(9) " << (eq9_ok ? "holds: " : "FAILS: ") << io::rounded(eq9.lhs) << " ≤ "
            << io::rounded(eq9.rhs) << '\n';
        out << "eq8 threshold: violated exactly for epsilon < " << io::rounded(threshold) << '\n';
        break;
    case OutputFormat::json:
        emit_jsonl(out, {{"tag", "eq8"}, {"epsilon", eps}, {"lhs", ce.lhs}, {"rhs", ce.rhs}, {"violated", ce.violated}});
        emit_jsonl(out, io::to_json(eq9));
        emit_jsonl(out, {{"tag", "eq8"}, {"threshold", threshold}});
        break;
    case OutputFormat::csv:
        out << "tag,epsilon,lhs,rhs,violated\n";
        out << "eq8," << io::full_precision(eps) << ',' << io::full_precision(ce.lhs) << ','
            << io::full_precision(ce.rhs) << ',' << (ce.violated ? "true" : "false") << '\n';
        out << "eq9," << io::full_precision(eps) << ',' << io::full_precision(eq9.lhs) << ','
            << io::full_precision(eq9.rhs) << ',' << (eq9_ok ? "false" : "true") << '\n';
        out << "eq8-threshold," << io::full_precision(threshold) << ",,,\n";
        break;
    }
    return eq9_ok ? exit_code::ok : exit_code::violation;
}

} // namespace detail

/// Executes one command. Returns the process exit status; diagnostics go to `err`.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        if (!(cfg.tol > 0.0)) throw usage_error("tolerance must be positive");
        switch (cfg.command) {
        case Command::check: return detail::run_check(cfg, out);
        case Command::sweep: return detail::run_sweep(cfg, out);
        case Command::fuzz: return detail::run_fuzz(cfg, out);
        case Command::tree: return detail::run_tree(cfg, out);
        case Command::mc: return detail::run_mc(cfg, out);
        case Command::derive: return detail::run_derive(cfg, out);
        case Command::counterexample: return detail::run_counterexample(cfg, out);
        }
    } catch (const usage_error& e) {
        err << "usage error: " << e.what() << '\n';
        return exit_code::usage;
    } catch (const error& e) {
        err << "invalid input: " << e.what() << '\n';
        return exit_code::invalid_input;
    } catch (const io::json::exception& e) {
        err << "invalid input: " << e.what() << '\n';
        return exit_code::invalid_input;
    }
    return exit_code::usage;
}

inline constexpr const char* tolerance_help =
    "Blended tolerance scale s: a bound holds when rhs - lhs >= -s*(1 + |lhs| + |rhs|). "
    "Default 1e-9, sized for path sums of up to 1e4 terms in double precision. "
    "Falls back to $DOOB_PATHWISE_TOL.";

/// Parses argv into a RunConfig. On --help or a usage error, returns the exit
/// status instead (0 or 2) after writing the message.
inline std::variant<RunConfig, int> parse_command_line(int argc, const char* const* argv, std::ostream& out,
                                                       std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Pathwise Doob maximal inequalities: exact checks, trees, Monte Carlo", "doob_pathwise"};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<double> tol;
    std::string format = "text";
    app.add_option("--tol", tol, tolerance_help)->check(CLI::PositiveNumber);
    app.add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json", "csv"}));

    auto* check = app.add_subcommand("check", "Evaluate the pathwise inequalities on a path file");
    check->add_option("--path", cfg.path_file, "Path file: one real per line or a comma-separated line")->required();
    check->add_option("--lambda", cfg.level, "Level for the two level-crossing inequalities");
    check->add_option("--p", cfg.exponent, "Exponent p > 1 for the L^p bound");
    check->add_flag("--llogl", cfg.llogl, "Also evaluate both forms of the L log L bound");

    auto* sweep = app.add_subcommand("sweep", "Scan the level over [min(x)-1, max(x)+1]");
    sweep->add_option("--path", cfg.path_file, "Path file")->required();
    sweep->add_option("--points", cfg.points, "Number of levels")->capture_default_str();

    std::string grid = "small";
    auto* fuzz = app.add_subcommand("fuzz", "Exhaustive grid plus randomized pathwise campaign");
    fuzz->add_option("--grid", grid, "small: n=4, entries -2..2; large: n=6, entries -3..3")
        ->check(CLI::IsMember({"small", "large"}));
    fuzz->add_option("--trials", cfg.trials, "Random paths in the campaign (default 10000)");
    fuzz->add_option("--seed", cfg.seed, "Seed of the random campaign")->capture_default_str();

    auto* tree = app.add_subcommand("tree", "Classify a tree and verify every applicable expectation bound");
    tree->add_option("--tree", cfg.tree_file, "Tree JSON file")->required();
    tree->add_option("--lambda", cfg.level, "Level for the level bounds");

    std::string kind = "SymmetricWalk";
    cfg.workers = std::max(1u, std::thread::hardware_concurrency());
    auto* mc = app.add_subcommand("mc", "Monte Carlo check of the expectation bounds");
    mc->add_option("--spec", cfg.spec_file, "Generator spec JSON document (overrides generator flags)");
    mc->add_option("--kind", kind, "SymmetricWalk, DriftWalk, MultiplicativePositive or AbsWalk")->capture_default_str();
    mc->add_option("--n", cfg.generator.steps, "Steps per path")->capture_default_str();
    mc->add_option("--x0", cfg.generator.x0, "Starting value")->capture_default_str();
    mc->add_option("--step-scale", cfg.generator.step_scale, "Step size (log-factor for multiplicative)")
        ->capture_default_str();
    mc->add_option("--drift", cfg.generator.drift, "Mean step of DriftWalk")->capture_default_str();
    mc->add_option("--log-mean", cfg.generator.log_mean, "Log mean factor of MultiplicativePositive")
        ->capture_default_str();
    mc->add_option("--seed", cfg.seed, "Seed")->capture_default_str();
    mc->add_option("--trials", cfg.trials, "Trials (default 100000)");
    mc->add_option("--lambda", cfg.level, "Level for the level bounds and transform checks");
    mc->add_option("--ineq", cfg.ineq, "Restrict to one of eq3, eq4, eq8, eq9");
    mc->add_option("--workers", cfg.workers, "Worker threads; results do not depend on it")->check(CLI::PositiveNumber);

    auto* derive = app.add_subcommand("derive", "Replay the L^p and L log L derivation chains");
    derive->add_option("--path", cfg.path_file, "Path file")->required();
    derive->add_option("--p", cfg.exponent, "Exponent p > 1 (default 2)");

    auto* counter = app.add_subcommand("counterexample", "Submartingale counterexample for the start-term L log L bound");
    counter->add_option("--epsilon", cfg.epsilon, "Starting value in (0, 1) (default 0.01)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int status = app.exit(e, out, err);
        return status == 0 ? exit_code::ok : exit_code::usage;
    }

    const std::pair<CLI::App*, Command> commands[] = {
        {check, Command::check}, {sweep, Command::sweep}, {fuzz, Command::fuzz},
        {tree, Command::tree},   {mc, Command::mc},       {derive, Command::derive},
        {counter, Command::counterexample}};
    for (const auto& [sub, command] : commands)
        if (sub->parsed()) cfg.command = command;

    cfg.format = format == "json" ? OutputFormat::json : format == "csv" ? OutputFormat::csv : OutputFormat::text;
    cfg.grid = grid == "large" ? Grid::large : Grid::small;
    try {
        cfg.generator.kind = io::parse_generator_kind(kind);
    } catch (const parse_error& e) {
        err << "usage error: " << e.what() << '\n';
        return exit_code::usage;
    }
    cfg.generator.seed = cfg.seed;

    if (tol) {
        cfg.tol = *tol;
    } else if (const char* env = std::getenv("DOOB_PATHWISE_TOL"); env && *env) {
        char* end = nullptr;
        const double v = std::strtod(env, &end);
        if (*end != '\0' || !(v > 0.0)) {
            err << "usage error: DOOB_PATHWISE_TOL must be a positive number\n";
            return exit_code::usage;
        }
        cfg.tol = v;
    }
    return cfg;
}

} // namespace doob::cli
