// Equilibrium branch of the polynomial model in c, with the periodic window
// and how each end of it dies. CSV tables go to the directory given as argv[1].
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "snic/continuation.hpp"
#include "snic/models/builtin.hpp"

using namespace snic;

int main(int argc, char** argv) {
    auto f = models::polynomial({{"eps", 1.0}, {"a", 0.042}, {"b", 0.35}, {"c", -1.0}});
    auto branches = continue_equilibria(f, "c", {-2.5, 2.5});
    for (auto& e : all_events(branches))
        std::printf("%s  c=%+.10f  (%.5f, %.5f)\n", to_string(e.kind), e.param, e.state.x, e.state.y);

    PeriodicOptions po;
    po.seeds = {{0.5, 0.3}};
    auto windows = track_periodic(f, "c", {-2.5, 2.5}, SectionLine({0, 0}, {0, 1}, 1e300, 1), po);
    label_ends(f, "c", windows, branches);
    for (auto& w : windows) {
        std::printf("cycles for c in [%.10f, %.10f], %zu samples\n", w.ends[0].param, w.ends[1].param,
                    w.samples.size());
        for (auto& e : w.ends)
            std::printf("  end c=%.12f  period %.1f  %s (%s)\n", e.param, e.period, to_string(e.label),
                        to_string(e.reason));
    }

    if (argc > 1) {
        std::filesystem::path dir(argv[1]);
        std::filesystem::create_directories(dir);
        std::ofstream a(dir / "branch.csv"), b(dir / "periodic.csv");
        write_branches_csv(a, "c", branches);
        write_periodic_csv(b, "c", windows);
    }
}
