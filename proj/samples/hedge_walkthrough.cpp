// Walks through the trading reading of the two level inequalities on a path:
// the strategy's wealth dominates the digital payoff λ 1{max >= λ}.
#include <cstdio>
#include <cstdlib>

#include "doob/pathwise.hpp"

int main(int argc, char** argv) {
    const double level = argc > 1 ? std::atof(argv[1]) : 2.5;
    const doob::Path path{1.0, 1.5, 0.5, 2.0, 3.0, 2.0};

    for (auto which : {doob::LevelIneq::first, doob::LevelIneq::second}) {
        const auto h = doob::hedge_decompose(path, level, which);
        std::printf("%s strategy, level %g\n", which == doob::LevelIneq::first ? "long" : "short", level);
        double wealth = h.initial_capital;
        std::printf("  start   capital %+.3f\n", wealth);
        for (std::size_t k = 1; k < path.size(); ++k) {
            const double dx = path[k] - path[k - 1];
            wealth += h.positions[k - 1] * dx;
            std::printf("  step %zu  hold %+.0f  dx %+.3f  wealth %+.3f\n", k, h.positions[k - 1], dx, wealth);
        }
        std::printf("  terminal adjustment %+.3f -> %+.3f vs payoff %.3f (gap %.3f, oracle %.3f)\n\n",
                    h.terminal_term, h.superhedge_value(), h.payoff, h.gap(), doob::gap_oracle(path, level));
    }
}
