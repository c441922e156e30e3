// Closes a submartingale tree into the martingale Y_k = E[X_n | F_k] and
// compares the two L log L bounds on both processes.
#include <cstdio>

#include "doob/prob_tree.hpp"

int main() {
    using doob::TreeNode;
    const doob::TreeModel x(TreeNode{1.0, {{0.5, TreeNode{3.0, {{0.5, {5.0, {}}}, {0.5, {2.0, {}}}}}},
                                           {0.5, TreeNode{1.0, {{0.25, {4.0, {}}}, {0.75, {0.0, {}}}}}}}});
    const auto y = doob::doob_closure(x);

    std::printf("node   X        Y\n");
    for (std::size_t i = 0; i < x.node_count(); ++i)
        std::printf("%4zu  %7.4f  %7.4f\n", i, x.node(i).value, y.node(i).value);

    std::printf("\nX is %s, Y is %s\n", doob::to_string(doob::classify(x).kind), doob::to_string(doob::classify(y).kind));

    const auto start_term_on_x = doob::evaluate_ineq8(x);
    std::printf("start-term bound on X (not guaranteed): %.4f <= %.4f\n", start_term_on_x.lhs, start_term_on_x.rhs);
    const auto on_y = doob::verify_ineq8(y);
    std::printf("start-term bound on Y:                   %.4f <= %.4f\n", on_y.lhs, on_y.rhs);
    const auto r = doob::verify_ineq9(x);
    std::printf("constant-term bound on X:                %.4f <= %.4f\n", r.lhs, r.rhs);
    for (const auto& s : r.route) std::printf("  %-45s %.4f\n", s.label.c_str(), s.value);
}
