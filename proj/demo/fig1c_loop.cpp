// Closes the saddle/saddle-node loop of the polynomial model at eps = 1 and
// prints where it sits, plus the gaps left at the reference (a, b).
#include <cstdio>

#include "snic/manifolds.hpp"
#include "snic/models/builtin.hpp"

using namespace snic;

int main() {
    auto model = models::polynomial({{"eps", 1.0}, {"a", 0.042}, {"b", 0.49575}, {"c", -0.85}});
    SniceroclinicSpec s;
    s.fold_guess = {-4.95, -2.275};
    s.saddle_guess = {4.5, 2.24};

    auto L = loop_gaps(model, s, -0.85);
    std::printf("a=0.042 b=0.49575: fold at c=%.8f (%.5f, %.5f)\n", L.fold.value, L.fold.position.x,
                L.fold.position.y);
    std::printf("  gap into fold %+.4e   gap out of fold %+.4e\n", L.into_fold.gap, L.out_of_fold.gap);

    auto r = locate_sniceroclinic(model, s);
    std::printf("loop closed at c=%.8f a=%.8f b=%.8f\n", r.values[0], r.values[1], r.values[2]);
    std::printf("  residuals det=%.2e gaps=%.2e %.2e\n", r.residuals[0], r.residuals[1], r.residuals[2]);
    std::printf("  saddle-node (%.5f, %.5f)  saddle (%.5f, %.5f)\n", r.gaps.saddle_node.position.x,
                r.gaps.saddle_node.position.y, r.gaps.saddle.position.x, r.gaps.saddle.position.y);
}
