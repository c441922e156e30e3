#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "doob/derivation.hpp"
#include "doob/errors.hpp"
#include "doob/montecarlo.hpp"
#include "doob/path.hpp"
#include "doob/pathwise.hpp"
#include "doob/prob_tree.hpp"

namespace doob::io {

using json = nlohmann::json;

/// Shortest decimal text that reads back to the same double.
inline std::string full_precision(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    for (int digits = 1; digits < 17; ++digits) {
        char shorter[32];
        std::snprintf(shorter, sizeof shorter, "%.*g", digits, v);
        if (std::strtod(shorter, nullptr) == v) return shorter;
    }
    return buf;
}

/// Six significant digits, for text output.
inline std::string rounded(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::string read_file(const std::string& filename) {
    std::ifstream in(filename, std::ios::binary);
    if (!in) throw parse_error("cannot open '" + filename + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Path read_path_file(const std::string& filename) { return parse_path_text(read_file(filename)); }

//---------------------------------------------------------------------------//
// Reports
//---------------------------------------------------------------------------//

inline json to_json(const IneqReport& r) {
    json j;
    j["tag"] = r.tag;
    j["lhs"] = r.lhs;
    j["rhs"] = r.rhs;
    j["gap"] = r.gap;
    j["case"] = r.proof_case ? json(to_string(*r.proof_case)) : json(nullptr);
    j["crossing_index"] = r.crossing_index ? json(*r.crossing_index) : json(nullptr);
    j["level"] = r.level ? json(*r.level) : json(nullptr);
    j["exponent"] = r.exponent ? json(*r.exponent) : json(nullptr);
    return j;
}

inline json to_json(const HedgeDecomposition& h) {
    return {{"tag", h.which == LevelIneq::first ? "eq1" : "eq2"},
            {"initial_capital", h.initial_capital},
            {"positions", h.positions},
            {"gains", h.gains},
            {"terminal_term", h.terminal_term},
            {"payoff", h.payoff}};
}

inline json to_json(const ChainReport& r) {
    json stages = json::array();
    for (const auto& s : r.stages) stages.push_back({{"label", s.label}, {"value", s.value}});
    return {{"tag", r.tag}, {"stages", stages}, {"final_rhs", r.final_rhs}, {"all_ordered", r.all_ordered}};
}

inline std::string quote_csv(std::string_view field) {
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

/// Two-column CSV: label,value; the final bound is the last row.
inline std::string to_csv(const ChainReport& r) {
    std::string out = "label,value\n";
    for (const auto& s : r.stages) out += quote_csv(r.tag + ": " + s.label) + "," + full_precision(s.value) + "\n";
    out += quote_csv(r.tag + ": final bound") + "," + full_precision(r.final_rhs) + "\n";
    return out;
}

inline json to_json(const ExpectationReport& r) {
    json j{{"tag", r.tag},
           {"lhs", r.lhs},
           {"rhs", r.rhs},
           {"rhs_classical", r.rhs_classical},
           {"slack", r.slack},
           {"improvement", r.improvement},
           {"level", r.level ? json(*r.level) : json(nullptr)}};
    if (!r.route.empty()) {
        json route = json::array();
        for (const auto& s : r.route) route.push_back({{"label", s.label}, {"value", s.value}});
        j["route"] = route;
    }
    return j;
}

inline json to_json(const MCEstimate& e) {
    return {{"mean", e.mean}, {"std_err", e.std_err}, {"trials", e.trials}, {"zero_variance", e.zero_variance}};
}

inline constexpr std::string_view mc_csv_header = "kind,n,lambda,ineq,lhs,lhs_se,rhs,rhs_se,pass";

inline std::string to_csv_row(const GeneratorSpec& spec, const SidesEstimate& e) {
    return std::string(to_string(spec.kind)) + "," + std::to_string(spec.steps) + "," + full_precision(e.level) +
           "," + to_string(e.ineq) + "," + full_precision(e.lhs.mean) + "," + full_precision(e.lhs.std_err) + "," +
           full_precision(e.rhs.mean) + "," + full_precision(e.rhs.std_err) + "," + (e.pass ? "true" : "false");
}

inline json to_json(const GeneratorSpec& spec, const SidesEstimate& e) {
    return {{"tag", to_string(e.ineq)}, {"kind", to_string(spec.kind)}, {"n", spec.steps},
            {"lambda", e.level},        {"ineq", to_string(e.ineq)},    {"lhs", to_json(e.lhs)},
            {"rhs", to_json(e.rhs)},    {"pass", e.pass},               {"rerun", e.rerun}};
}

//---------------------------------------------------------------------------//
// Trees
//---------------------------------------------------------------------------//

namespace detail {

inline double number_at(const json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) throw tree_format_error(where, std::string("missing \"") + key + "\"");
    if (!it->is_number()) throw tree_format_error(where + "." + key, "expected a number");
    return it->get<double>();
}

inline TreeNode node_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) throw tree_format_error(where, "expected an object");
    TreeNode node{number_at(j, "value", where), {}};
    const auto it = j.find("children");
    if (it == j.end() || it->is_null()) return node;
    if (!it->is_array()) throw tree_format_error(where + ".children", "expected an array");
    for (std::size_t c = 0; c < it->size(); ++c) {
        const auto& branch = (*it)[c];
        const std::string at = where + ".children[" + std::to_string(c) + "]";
        if (!branch.is_object()) throw tree_format_error(at, "expected an object");
        const double p = number_at(branch, "p", at);
        const auto child = branch.find("node");
        if (child == branch.end()) throw tree_format_error(at, "missing \"node\"");
        node.children.push_back({p, node_from_json(*child, at + ".node")});
    }
    return node;
}

inline json node_to_json(const TreeNode& node) {
    json j{{"value", node.value}};
    json children = json::array();
    for (const auto& b : node.children) children.push_back({{"p", b.probability}, {"node", node_to_json(b.node)}});
    j["children"] = children;
    return j;
}

} // namespace detail

/// Builds and validates a tree from {"value": x, "children": [{"p": p, "node": {...}}]}.
inline TreeModel tree_from_json(const json& j, std::size_t max_nodes = default_max_tree_nodes) {
    return TreeModel(detail::node_from_json(j, "$"), max_nodes);
}

inline TreeModel parse_tree_text(std::string_view text, std::size_t max_nodes = default_max_tree_nodes) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw tree_format_error("$", std::string("invalid JSON: ") + e.what());
    }
    return tree_from_json(j, max_nodes);
}

inline TreeModel read_tree_file(const std::string& filename) { return parse_tree_text(read_file(filename)); }

inline json to_json(const TreeModel& tree) { return detail::node_to_json(tree.to_node()); }

//---------------------------------------------------------------------------//
// Generator specs
//---------------------------------------------------------------------------//

inline GeneratorKind parse_generator_kind(std::string_view name) {
    if (name == "SymmetricWalk" || name == "symmetric") return GeneratorKind::symmetric_walk;
    if (name == "DriftWalk" || name == "drift") return GeneratorKind::drift_walk;
    if (name == "MultiplicativePositive" || name == "multiplicative") return GeneratorKind::multiplicative_positive;
    if (name == "AbsWalk" || name == "abs") return GeneratorKind::abs_walk;
    throw parse_error("unknown generator kind '" + std::string(name) + "'");
}

/// Reads {"kind": ..., "n": ..., "x0": ..., "step_scale": ..., "drift": ...,
/// "log_mean": ..., "seed": ...}; absent keys keep their defaults.
inline GeneratorSpec generator_from_json(const json& j) {
    if (!j.is_object()) throw parse_error("generator spec must be a JSON object");
    GeneratorSpec spec;
    try {
        if (auto it = j.find("kind"); it != j.end()) spec.kind = parse_generator_kind(it->get<std::string>());
        if (auto it = j.find("n"); it != j.end()) spec.steps = it->get<std::size_t>();
        if (auto it = j.find("x0"); it != j.end()) spec.x0 = it->get<double>();
        if (auto it = j.find("step_scale"); it != j.end()) spec.step_scale = it->get<double>();
        if (auto it = j.find("drift"); it != j.end()) spec.drift = it->get<double>();
        if (auto it = j.find("log_mean"); it != j.end()) spec.log_mean = it->get<double>();
        if (auto it = j.find("seed"); it != j.end()) spec.seed = it->get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw parse_error(std::string("generator spec: ") + e.what());
    }
    validate(spec);
    return spec;
}

inline json to_json(const GeneratorSpec& spec) {
    return {{"kind", to_string(spec.kind)}, {"n", spec.steps},     {"x0", spec.x0},    {"step_scale", spec.step_scale},
            {"drift", spec.drift},          {"log_mean", spec.log_mean}, {"seed", spec.seed}};
}

} // namespace doob::io
