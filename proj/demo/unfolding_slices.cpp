// Region census of the (mu2, mu3) plane at three values of mu1, drawn as text.
#include <cstdio>
#include <map>
#include <string>

#include "snic/normalform.hpp"

using namespace snic::nf;

int main() {
    UnfoldingParams p;
    const int n = 41;
    const char* glyphs = "abcdefghijklmn";
    for (double mu1 : {-0.1, 0.0, 0.0025}) {
        auto atlas = slice_atlas(mu1, {-0.05, 0.05, -0.05, 0.05, n}, p, 0.05 / (n - 1));
        std::map<Region, int> count;
        for (auto& a : atlas) count[a.label.region]++;
        std::printf("mu1 = %g\n", mu1);
        // rows from high mu3 down; mu3 is the slow index
        for (int j = n - 1; j >= 0; --j) {
            std::string row;
            for (int i = 0; i < n; ++i) row += glyphs[static_cast<int>(atlas[j * n + i].label.region)];
            std::printf("  %s\n", row.c_str());
        }
        for (auto& [r, c] : count)
            std::printf("  %c %-34s %d\n", glyphs[static_cast<int>(r)], std::string(to_string(r)).c_str(), c);
    }
}
