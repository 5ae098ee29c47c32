#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "snic/continuation.hpp"
#include "snic/models/builtin.hpp"

using namespace snic;

namespace {

constexpr double A = 0.042, B = 0.35;

PlanarField branch_model(double c = -1.0) { return models::polynomial({{"eps", 1.0}, {"a", A}, {"b", B}, {"c", c}}); }

SectionLine upward() { return SectionLine({0, 0}, {0, 1}, std::numeric_limits<double>::infinity(), 1); }

// equilibria lie on x = f(y), c = y - a f^2 - b f; roots of h over y in [-4, 4], mapped to c
std::vector<double> curve_roots(double (*h)(double), bool (*keep)(double)) {
    std::vector<double> out;
    const int n = 80000;
    for (int i = 0; i < n; ++i) {
        double lo = -4 + 8.0 * i / n, hi = -4 + 8.0 * (i + 1) / n;
        if ((h(lo) < 0) == (h(hi) < 0)) continue;
        for (int it = 0; it < 200; ++it) {
            double m = 0.5 * (lo + hi);
            ((h(m) < 0) == (h(lo) < 0) ? lo : hi) = m;
        }
        double y = 0.5 * (lo + hi), f = y * y * y - 3 * y;
        double c = y - A * f * f - B * f;
        if (c >= -2.5 && c <= 2.5 && keep(y)) out.push_back(c);
    }
    std::sort(out.begin(), out.end());
    return out;
}

double fold_test(double y) {
    double f = y * y * y - 3 * y, fp = 3 * y * y - 3;
    return 1 - (2 * A * f + B) * fp;
}
double hopf_test(double y) {
    double f = y * y * y - 3 * y, fp = 3 * y * y - 3;
    return 2 * A * f + B - fp;
}
bool any(double) { return true; }
bool positive_det(double y) { return fold_test(y) > 0; }

std::vector<double> params_of(const std::vector<BifurcationEvent>& ev, EventKind k) {
    std::vector<double> out;
    for (auto& e : ev)
        if (e.kind == k) out.push_back(e.param);
    return out;
}

class PolyBranch : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        branches_ = new std::vector<BifurcationBranch>(continue_equilibria(branch_model(), "c", {-2.5, 2.5}));
        PeriodicOptions po;
        po.seeds = {{0.5, 0.3}};
        windows_ = new std::vector<PeriodicBranch>(track_periodic(branch_model(), "c", {-2.5, 2.5}, upward(), po));
        label_ends(branch_model(), "c", *windows_, *branches_);
    }
    static void TearDownTestSuite() {
        delete branches_;
        delete windows_;
    }
    static std::vector<BifurcationBranch>* branches_;
    static std::vector<PeriodicBranch>* windows_;
};
std::vector<BifurcationBranch>* PolyBranch::branches_ = nullptr;
std::vector<PeriodicBranch>* PolyBranch::windows_ = nullptr;

}  // namespace

TEST_F(PolyBranch, ThreeFoldsTwoHopfs) {
    auto ev = all_events(*branches_);
    auto folds = params_of(ev, EventKind::SN), hopfs = params_of(ev, EventKind::HB);
    auto want_f = curve_roots(fold_test, any), want_h = curve_roots(hopf_test, positive_det);
    ASSERT_EQ(want_f.size(), 3u);
    ASSERT_EQ(want_h.size(), 2u);
    ASSERT_EQ(folds.size(), 3u);
    ASSERT_EQ(hopfs.size(), 2u);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(folds[i], want_f[i], 1e-8);
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(hopfs[i], want_h[i], 1e-8);
}

TEST_F(PolyBranch, FoldsAreSaddleNodeCandidates) {
    for (auto& e : all_events(*branches_)) {
        EXPECT_LT(e.lambda_min, 1e-4);
        if (e.kind != EventKind::SN) continue;
        auto eq = find_equilibrium(branch_model(e.param), e.state);
        EXPECT_EQ(eq.cls, EqClass::SaddleNodeCandidate) << e.param;
    }
}

TEST_F(PolyBranch, ReversedRangeGivesSameEvents) {
    auto rev = all_events(continue_equilibria(branch_model(), "c", {2.5, -2.5}));
    auto fwd = all_events(*branches_);
    ASSERT_EQ(rev.size(), fwd.size());
    for (std::size_t i = 0; i < fwd.size(); ++i) {
        EXPECT_EQ(rev[i].kind, fwd[i].kind);
        EXPECT_NEAR(rev[i].param, fwd[i].param, 1e-6);
    }
}

TEST_F(PolyBranch, BranchPointsAreEquilibria) {
    for (auto& b : *branches_) {
        EXPECT_FALSE(b.truncated);
        for (auto& p : b.points) {
            EXPECT_LT(norm(branch_model(p.param).eval(p.state)), 1e-9);
            EXPECT_GE(p.param, -2.5);
            EXPECT_LE(p.param, 2.5);
        }
    }
}

TEST_F(PolyBranch, OneWindowSnicToHomoclinic) {
    ASSERT_EQ(windows_->size(), 1u);
    auto& w = windows_->front();
    EXPECT_EQ(w.ends[0].label, EndLabel::SNIC);
    EXPECT_EQ(w.ends[1].label, EndLabel::Homoclinic);
    EXPECT_GT(w.ends[0].period, 100);
    EXPECT_GT(w.ends[1].period, 100);
    auto folds = params_of(all_events(*branches_), EventKind::SN);
    EXPECT_NEAR(w.ends[0].param, folds[1], 1e-3);
    EXPECT_NEAR(w.ends[1].param, -0.2348923345, 1e-8);
}

TEST_F(PolyBranch, PeriodGrowsTowardBothEnds) {
    auto& s = windows_->front().samples;
    ASSERT_GT(s.size(), 12u);
    for (int i = 0; i < 5; ++i) EXPECT_GT(s[i].period, s[i + 1].period) << i;
    for (std::size_t i = s.size() - 5; i < s.size(); ++i) EXPECT_GT(s[i].period, s[i - 1].period) << i;
    for (std::size_t i = 1; i < s.size(); ++i) EXPECT_GE(s[i].param, s[i - 1].param);
}

TEST_F(PolyBranch, CsvHasSchemaLine) {
    std::ostringstream a, b;
    write_branches_csv(a, "c", *branches_);
    write_periodic_csv(b, "c", *windows_);
    EXPECT_EQ(a.str().rfind("# schema: v1\n", 0), 0u);
    EXPECT_EQ(b.str().rfind("# schema: v1\n", 0), 0u);
}

TEST(Periodic, InteriorPeriodStableUnderTolerance) {
    PeriodicOptions a, b;
    a.seeds = b.seeds = {{0.5, 0.3}};
    b.rtol = a.rtol / 2, b.atol = a.atol / 2;
    auto pa = detail::probe_cycle(branch_model(-1.0), {0.5, 0.3}, upward(), a, false);
    auto pb = detail::probe_cycle(branch_model(-1.0), {0.5, 0.3}, upward(), b, false);
    ASSERT_TRUE(pa.cycle);
    ASSERT_TRUE(pb.cycle);
    EXPECT_NEAR(pa.period / pb.period, 1, 1e-4);
    EXPECT_GT(pa.period, 10);
    EXPECT_LT(pa.period, 30);
}

TEST(Periodic, StableFocusHasNoCycle) {
    auto focus = PlanarField("focus", {{"k", 1.0}}, [](const Params& p) {
        double k = p.at("k");
        Kernel kk;
        kk.f = [k](const Vec2& s) { return Vec2{-0.1 * s.x - k * s.y, k * s.x - 0.1 * s.y}; };
        return kk;
    });
    PeriodicOptions o;
    o.samples = 5;
    o.seeds = {{1, 0}};
    EXPECT_THROW(track_periodic(focus, "k", {0.5, 2}, upward(), o), NoCycle);
}

TEST(Periodic, ShortPeriodEndIsRejected) {
    CycleEnd e;
    e.period = 20;
    e.orbit = {{0, 0}, {1, 1}};
    EXPECT_THROW(classify_cycle_end(branch_model(), "c", e, {}), PreconditionError);
}

TEST(Periodic, BadArguments) {
    EXPECT_THROW(track_periodic(branch_model(), "q", {0, 1}, upward()), ParameterError);
    EXPECT_THROW(track_periodic(branch_model(), "c", {1, 1}, upward()), ParameterError);
    EXPECT_THROW(continue_equilibria(branch_model(), "q", {0, 1}), ParameterError);
}

TEST(Continuation, SaddleLineHasNoEvents) {
    auto br = continue_equilibria(models::linear_saddle(), "lambda_u", {0.5, 2.0}, {{-1, 1, -1, 1}, 5});
    ASSERT_EQ(br.size(), 1u);
    EXPECT_TRUE(br[0].events.empty());
    EXPECT_NEAR(br[0].points.front().param, 0.5, 1e-12);
    EXPECT_NEAR(br[0].points.back().param, 2.0, 1e-12);
}

TEST(Continuation, HopfOfNormalFormFocus) {
    // x' = mu x - y - x r^2, y' = x + mu y - y r^2: Hopf at mu = 0
    auto f = PlanarField("hopf", {{"mu", 0.0}}, [](const Params& p) {
        double mu = p.at("mu");
        Kernel k;
        k.f = [mu](const Vec2& s) {
            double r2 = s.x * s.x + s.y * s.y;
            return Vec2{mu * s.x - s.y - s.x * r2, s.x + mu * s.y - s.y * r2};
        };
        return k;
    });
    auto ev = all_events(continue_equilibria(f, "mu", {-0.5, 0.7}, {{-0.5, 0.5, -0.5, 0.5}, 4}));
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].kind, EventKind::HB);
    EXPECT_NEAR(ev[0].param, 0, 1e-8);
}
