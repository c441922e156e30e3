#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <numeric>
#include <optional>
#include <span>
#include <type_traits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "doob/derivation.hpp"
#include "doob/errors.hpp"
#include "doob/path.hpp"
#include "doob/pathwise.hpp"

namespace doob {

//---------------------------------------------------------------------------//
// Finite filtered probability spaces
//
// A process X_0..X_n on a finite filtration is a rooted tree whose leaves all
// sit at depth n. Depth k carries F_k; each node stores X_k on its atom and
// each edge the conditional probability of moving to that child.
//---------------------------------------------------------------------------//

struct TreeBranch;

/// Nested description of a tree, used to build a TreeModel.
struct TreeNode {
    double value = 0.0;
    std::vector<TreeBranch> children;
};

struct TreeBranch {
    double probability = 1.0;
    TreeNode node;
};

inline constexpr std::size_t default_max_tree_nodes = 1'000'000;
inline constexpr double probability_sum_tolerance = 1e-12;

/// Immutable, validated tree. Nodes are stored breadth first so the children
/// of a node are contiguous and every child comes after its parent.
class TreeModel {
public:
    struct Node {
        double value = 0.0;
        double probability = 1.0;  // conditional probability from the parent; 1 at the root
        std::size_t depth = 0;
        std::size_t first_child = 0;
        std::size_t child_count = 0;

        bool is_leaf() const noexcept { return child_count == 0; }
    };

    explicit TreeModel(const TreeNode& root, std::size_t max_nodes = default_max_tree_nodes) {
        struct Pending {
            const TreeNode* node;
            std::string where;
            std::size_t depth;
        };
        std::deque<Pending> queue{{&root, "$", 0}};
        std::optional<std::size_t> leaf_depth;
        nodes_.push_back({root.value, 1.0, 0, 0, 0});

        for (std::size_t index = 0; !queue.empty(); ++index) {
            auto [node, where, depth] = std::move(queue.front());
            queue.pop_front();
            if (!std::isfinite(node->value)) throw tree_format_error(where + ".value", "value is not finite");

            if (node->children.empty()) {
                if (leaf_depth && *leaf_depth != depth)
                    throw tree_format_error(where, "leaf at depth " + std::to_string(depth) +
                                                       " but other leaves are at depth " +
                                                       std::to_string(*leaf_depth));
                leaf_depth = depth;
                continue;
            }

            nodes_[index].first_child = nodes_.size();
            nodes_[index].child_count = node->children.size();
            double total = 0.0;
            for (std::size_t c = 0; c < node->children.size(); ++c) {
                const auto& branch = node->children[c];
                const std::string child_where = where + ".children[" + std::to_string(c) + "]";
                const double p = branch.probability;
                if (!(p > 0.0 && p <= 1.0))
                    throw tree_format_error(child_where + ".p", "probability must lie in (0, 1]");
                total += p;
                if (nodes_.size() >= max_nodes)
                    throw tree_format_error(child_where, "tree exceeds " + std::to_string(max_nodes) + " nodes");
                nodes_.push_back({branch.node.value, p, depth + 1, 0, 0});
                queue.push_back({&branch.node, child_where + ".node", depth + 1});
            }
            if (std::abs(total - 1.0) > probability_sum_tolerance)
                throw tree_format_error(where + ".children", "child probabilities sum to " +
                                                                 std::to_string(total) + ", expected 1");
        }
        depth_ = leaf_depth.value_or(0);
    }

    /// Horizon n; every leaf sits at this depth.
    std::size_t depth() const noexcept { return depth_; }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::span<const Node> nodes() const noexcept { return nodes_; }
    const Node& node(std::size_t i) const { return nodes_.at(i); }
    const Node& root() const noexcept { return nodes_.front(); }

    std::span<const Node> children(std::size_t i) const {
        const auto& n = nodes_.at(i);
        return std::span<const Node>(nodes_).subspan(n.first_child, n.child_count);
    }

    bool has_negative_values() const noexcept {
        return std::any_of(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.value < 0.0; });
    }

    /// Same shape and probabilities, new node values (indexed like nodes()).
    TreeModel with_values(std::span<const double> values) const {
        if (values.size() != nodes_.size()) throw error("with_values: size mismatch");
        TreeModel out = *this;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            if (!std::isfinite(values[i])) throw domain_error("with_values: non-finite value");
            out.nodes_[i].value = values[i];
        }
        return out;
    }

    /// Rebuilds the nested description.
    TreeNode to_node() const { return nested(0); }

    /// Calls f(probability, path) once per leaf, where path holds X_0..X_n
    /// along the root-to-leaf branch and probability is the product of the
    /// branch probabilities.
    template <class F>
    void for_each_leaf_path(F&& f) const {
        struct Frame {
            std::size_t index;
            double probability;
        };
        std::vector<double> path(depth_ + 1);
        std::vector<Frame> stack{{0, 1.0}};
        while (!stack.empty()) {
            const Frame frame = stack.back();
            stack.pop_back();
            const Node& n = nodes_[frame.index];
            path[n.depth] = n.value;
            if (n.is_leaf()) {
                f(frame.probability, std::span<const double>(path.data(), n.depth + 1));
                continue;
            }
            for (std::size_t c = n.child_count; c-- > 0;) {
                const std::size_t child = n.first_child + c;
                stack.push_back({child, frame.probability * nodes_[child].probability});
            }
        }
    }

private:
    TreeNode nested(std::size_t i) const {
        TreeNode out{nodes_[i].value, {}};
        for (std::size_t c = 0; c < nodes_[i].child_count; ++c) {
            const std::size_t child = nodes_[i].first_child + c;
            out.children.push_back({nodes_[child].probability, nested(child)});
        }
        return out;
    }

    std::vector<Node> nodes_;
    std::size_t depth_ = 0;
};

/// Deterministic tree following the given path with probability one.
inline TreeModel chain_tree(const Path& path) {
    TreeNode root{path.back(), {}};
    for (std::size_t k = path.size() - 1; k-- > 0;) root = TreeNode{path[k], {TreeBranch{1.0, std::move(root)}}};
    return TreeModel(root);
}

//---------------------------------------------------------------------------//
// Process classification
//---------------------------------------------------------------------------//

/// `both` marks a process whose every child equals its parent (a constant
/// process, trivially all three classes at once).
enum class ClassKind { martingale, submartingale, supermartingale, both, none };

inline const char* to_string(ClassKind k) {
    switch (k) {
    case ClassKind::martingale: return "Martingale";
    case ClassKind::submartingale: return "Submartingale";
    case ClassKind::supermartingale: return "Supermartingale";
    case ClassKind::both: return "Both";
    case ClassKind::none: return "None";
    }
    return "?";
}

struct ProcessClass {
    ClassKind kind = ClassKind::none;
    /// Largest one-step drift |E[X_{k+1}|node] - X(node)| in the direction
    /// that would break the reported class; for martingales and `none`, the
    /// largest drift in either direction.
    double max_defect = 0.0;

    bool is_martingale() const { return kind == ClassKind::martingale || kind == ClassKind::both; }
    bool is_submartingale() const { return is_martingale() || kind == ClassKind::submartingale; }
    bool is_supermartingale() const { return is_martingale() || kind == ClassKind::supermartingale; }
};

inline constexpr double classification_tolerance = 1e-10;

inline ProcessClass classify(const TreeModel& tree) {
    bool sub = true, super = true, constant = true;
    double max_up = 0.0, max_down = 0.0;
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        const auto& n = tree.node(i);
        if (n.is_leaf()) continue;
        const double tol = classification_tolerance * (1.0 + std::abs(n.value));
        double mean = 0.0;
        for (const auto& child : tree.children(i)) {
            mean += child.probability * child.value;
            if (std::abs(child.value - n.value) > tol) constant = false;
        }
        const double drift = mean - n.value;
        if (drift < -tol) sub = false;
        if (drift > tol) super = false;
        max_up = std::max(max_up, drift);
        max_down = std::max(max_down, -drift);
    }

    if (sub && super) return {constant ? ClassKind::both : ClassKind::martingale, std::max(max_up, max_down)};
    if (sub) return {ClassKind::submartingale, max_down};
    if (super) return {ClassKind::supermartingale, max_up};
    return {ClassKind::none, std::max(max_up, max_down)};
}

//---------------------------------------------------------------------------//
// Exact expectations
//---------------------------------------------------------------------------//

/// Catalogue of path functionals with exact tree expectations.
namespace functional {
struct terminal {};                        // X_n
struct maximum {};                         // x̄_n
struct hit_indicator { double level; };    // 1{x̄_n >= λ}
struct terminal_below { double level; };   // X_n 1{x̄_n < λ}
struct terminal_above { double level; };   // X_n 1{x̄_n >= λ}
struct start_capped { double level; };     // X_0 ∧ λ
struct start_excess { double level; };     // (X_0 - λ) 1{X_0 >= λ}
struct start_entropy {};                   // X_0 (1 - log X_0)
struct terminal_entropy {};                // X_n log X_n
struct transform {                         // Σ H_k ΔX_k with the level strategy
    double level;
    LevelIneq which;
};
} // namespace functional

using Functional =
    std::variant<functional::terminal, functional::maximum, functional::hit_indicator,
                 functional::terminal_below, functional::terminal_above, functional::start_capped,
                 functional::start_excess, functional::start_entropy, functional::terminal_entropy,
                 functional::transform>;

inline bool needs_nonnegative(const Functional& f) {
    return std::holds_alternative<functional::start_entropy>(f) ||
           std::holds_alternative<functional::terminal_entropy>(f);
}

/// Value of a catalogue functional on one path x_0..x_n.
inline double evaluate(const Functional& f, std::span<const double> x) {
    namespace fn = functional;
    const auto max_n = [&] { return *std::max_element(x.begin(), x.end()); };
    const double x0 = x.front();
    const double xn = x.back();
    return std::visit(
        [&](const auto& g) -> double {
            using G = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<G, fn::terminal>) return xn;
            else if constexpr (std::is_same_v<G, fn::maximum>) return max_n();
            else if constexpr (std::is_same_v<G, fn::hit_indicator>) return max_n() >= g.level ? 1.0 : 0.0;
            else if constexpr (std::is_same_v<G, fn::terminal_below>) return max_n() < g.level ? xn : 0.0;
            else if constexpr (std::is_same_v<G, fn::terminal_above>) return max_n() >= g.level ? xn : 0.0;
            else if constexpr (std::is_same_v<G, fn::start_capped>) return std::min(x0, g.level);
            else if constexpr (std::is_same_v<G, fn::start_excess>) return x0 >= g.level ? x0 - g.level : 0.0;
            else if constexpr (std::is_same_v<G, fn::start_entropy>) return x0 - xlogx(x0);
            else if constexpr (std::is_same_v<G, fn::terminal_entropy>) return xlogx(xn);
            else {
                double running = x0, sum = 0.0;
                for (std::size_t k = 1; k < x.size(); ++k) {
                    const bool below = running < g.level;
                    const double h = g.which == LevelIneq::first ? (below ? 1.0 : 0.0) : (below ? 0.0 : -1.0);
                    sum += h * (x[k] - x[k - 1]);
                    running = std::max(running, x[k]);
                }
                return sum;
            }
        },
        f);
}

/// E[f(X_0..X_n)] for an arbitrary callable f(std::span<const double>).
template <class F>
double expect(const TreeModel& tree, F&& f) {
    double total = 0.0;
    tree.for_each_leaf_path([&](double p, std::span<const double> x) { total += p * f(x); });
    return total;
}

inline double expect_functional(const TreeModel& tree, const Functional& f) {
    if (needs_nonnegative(f) && tree.has_negative_values())
        throw domain_error("log functional requested on a tree with negative values");
    return expect(tree, [&](std::span<const double> x) { return evaluate(f, x); });
}

/// E[Σ H_k ΔX_k] for the level strategy of the chosen inequality.
inline double transform_expectation(const TreeModel& tree, double level, LevelIneq which) {
    return expect_functional(tree, functional::transform{level, which});
}

/// Y_k = E[X_n | F_k] by backward induction. Shape, probabilities and leaf
/// values are unchanged.
inline TreeModel doob_closure(const TreeModel& tree) {
    std::vector<double> values(tree.node_count());
    for (std::size_t i = tree.node_count(); i-- > 0;) {
        const auto& n = tree.node(i);
        if (n.is_leaf()) {
            values[i] = n.value;
            continue;
        }
        double mean = 0.0;
        for (std::size_t c = 0; c < n.child_count; ++c)
            mean += tree.node(n.first_child + c).probability * values[n.first_child + c];
        values[i] = mean;
    }
    return tree.with_values(values);
}

//---------------------------------------------------------------------------//
// Expectation inequalities
//---------------------------------------------------------------------------//

struct ExpectationReport {
    std::string tag;  // eq3, eq4, eq8, eq9
    double lhs = 0.0;
    double rhs = 0.0;
    double rhs_classical = 0.0;  // the corresponding classical Doob bound
    double slack = 0.0;          // rhs - lhs
    double improvement = 0.0;    // rhs_classical - rhs
    std::optional<double> level;
    /// Intermediate quantities of the verification route, when it has one.
    std::vector<ChainStage> route;

    bool holds(double scale = default_tolerance) const {
        return slack >= -blended_tolerance(lhs, rhs, scale);
    }
};

namespace detail {

inline ExpectationReport make_report(const char* tag, double lhs, double rhs, double classical) {
    ExpectationReport r;
    r.tag = tag;
    r.lhs = lhs;
    r.rhs = rhs;
    r.rhs_classical = classical;
    r.slack = rhs - lhs;
    r.improvement = classical - rhs;
    return r;
}

inline void require_nonnegative(const TreeModel& tree, const char* what) {
    if (tree.has_negative_values()) throw domain_error(std::string(what) + " needs nonnegative node values");
}

} // namespace detail

/// λ P(x̄_n >= λ) <= E(X_0 ∧ λ) - E[X_n; x̄_n < λ], without checking the class.
inline ExpectationReport evaluate_ineq3(const TreeModel& tree, double level) {
    namespace fn = functional;
    const double lhs = level * expect_functional(tree, fn::hit_indicator{level});
    const double below = expect_functional(tree, fn::terminal_below{level});
    const double rhs = expect_functional(tree, fn::start_capped{level}) - below;
    // F_0 is trivial, so E X_0 is the root value
    const double classical = tree.root().value - below;
    auto r = detail::make_report("eq3", lhs, rhs, classical);
    r.level = level;
    return r;
}

/// λ P(x̄_n >= λ) <= -E[(X_0-λ); X_0 >= λ] + E[X_n; x̄_n >= λ], without checking the class.
inline ExpectationReport evaluate_ineq4(const TreeModel& tree, double level) {
    namespace fn = functional;
    const double lhs = level * expect_functional(tree, fn::hit_indicator{level});
    const double above = expect_functional(tree, fn::terminal_above{level});
    const double rhs = -expect_functional(tree, fn::start_excess{level}) + above;
    auto r = detail::make_report("eq4", lhs, rhs, above);
    r.level = level;
    return r;
}

/// E[x̄_n] <= e/(e-1) (E[X_0(1 - log X_0)] + E[X_n log X_n]), without checking
/// the class. Zero values use 0 log 0 = 0.
inline ExpectationReport evaluate_ineq8(const TreeModel& tree) {
    namespace fn = functional;
    const double lhs = expect_functional(tree, fn::maximum{});
    const double rhs = llogl_constant() * (expect_functional(tree, fn::start_entropy{}) +
                                           expect_functional(tree, fn::terminal_entropy{}));
    return detail::make_report("eq8", lhs, rhs, rhs);
}

/// E[x̄_n] <= e/(e-1) (1 + E[X_n log X_n]), without checking the class.
inline ExpectationReport evaluate_ineq9(const TreeModel& tree) {
    namespace fn = functional;
    const double lhs = expect_functional(tree, fn::maximum{});
    const double rhs = llogl_constant() * (1.0 + expect_functional(tree, fn::terminal_entropy{}));
    return detail::make_report("eq9", lhs, rhs, rhs);
}

/// Level bound for supermartingales; the classical bound uses E X_0 in place of E(X_0 ∧ λ).
inline ExpectationReport verify_ineq3(const TreeModel& tree, double level) {
    const auto cls = classify(tree);
    if (!cls.is_supermartingale())
        throw classification_error(std::string("level bound for supermartingales applied to a ") +
                                   to_string(cls.kind) + " tree");
    return evaluate_ineq3(tree, level);
}

/// Level bound for submartingales; the classical bound drops -E[(X_0-λ); X_0 >= λ].
inline ExpectationReport verify_ineq4(const TreeModel& tree, double level) {
    const auto cls = classify(tree);
    if (!cls.is_submartingale())
        throw classification_error(std::string("level bound for submartingales applied to a ") +
                                   to_string(cls.kind) + " tree");
    return evaluate_ineq4(tree, level);
}

/// L log L bound with the X_0(1 - log X_0) term. Valid for nonnegative
/// martingales only; submartingales are refused since the bound fails for them.
inline ExpectationReport verify_ineq8(const TreeModel& tree) {
    const auto cls = classify(tree);
    if (!cls.is_martingale())
        throw classification_error(std::string("L log L bound with start term needs a martingale, got ") +
                                   to_string(cls.kind));
    detail::require_nonnegative(tree, "L log L bound");
    if (!(tree.root().value > 0.0)) throw domain_error("L log L bound with start term needs X_0 > 0");
    return evaluate_ineq8(tree);
}

/// L log L bound for nonnegative submartingales, verified through the Doob
/// closure Y_k = E[X_n | F_k]: E[x̄_n] <= E[Ȳ_n] <= bound for Y <= final bound.
inline ExpectationReport verify_ineq9(const TreeModel& tree) {
    const auto cls = classify(tree);
    if (!cls.is_submartingale())
        throw classification_error(std::string("L log L bound needs a submartingale, got ") + to_string(cls.kind));
    detail::require_nonnegative(tree, "L log L bound");

    auto r = evaluate_ineq9(tree);
    const TreeModel closed = doob_closure(tree);
    const auto closed_bound = evaluate_ineq8(closed);
    r.route = {
        {"E[max_n X]", r.lhs},
        {"E[max_n Y], Y_k = E[X_n|F_k]", closed_bound.lhs},
        {"e/(e-1) (E[Y_0(1-log Y_0)] + E[X_n log X_n])", closed_bound.rhs},
        {"e/(e-1) (1 + E[X_n log X_n])", r.rhs},
    };
    return r;
}

/// True when every route stage dominates the previous one within tolerance.
inline bool route_ordered(const ExpectationReport& r, double scale = default_tolerance) {
    for (std::size_t i = 1; i < r.route.size(); ++i) {
        const double a = r.route[i - 1].value, b = r.route[i].value;
        if (b < a - blended_tolerance(a, b, scale)) return false;
    }
    return true;
}

//---------------------------------------------------------------------------//
// Counterexample for submartingales
//---------------------------------------------------------------------------//

struct CounterexampleResult {
    double epsilon = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool violated = false;
};

/// Two-step chain X_0 = ε, X_1 = 1: a strictly positive submartingale on which
/// the start-term L log L bound fails for small ε.
inline CounterexampleResult counterexample_eq8(double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw domain_error("epsilon must lie in (0, 1)");
    const auto r = evaluate_ineq8(chain_tree(Path{epsilon, 1.0}));
    return {epsilon, r.lhs, r.rhs, r.rhs < r.lhs};
}

/// The unique ε* in (0, 1) with e/(e-1) ε*(1 - log ε*) = 1; the chain
/// counterexample is violated exactly for ε < ε*.
inline double counterexample_threshold(double tolerance = 1e-12) {
    const double c = llogl_constant();
    // ε(1 - log ε) is increasing on (0, 1)
    auto excess = [c](double eps) { return c * (eps - xlogx(eps)) - 1.0; };
    double lo = 0.0, hi = 1.0;
    while (hi - lo > tolerance) {
        const double mid = std::midpoint(lo, hi);
        (excess(mid) < 0.0 ? lo : hi) = mid;
    }
    return std::midpoint(lo, hi);
}

} // namespace doob
