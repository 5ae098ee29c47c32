#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "snic/manifolds.hpp"
#include "snic/models/builtin.hpp"

using namespace snic;

namespace {

// x' = y, y' = x - x^3 + mu y: the origin has a homoclinic loop exactly at mu = 0
PlanarField duffing(double mu = 0) {
    return PlanarField("duffing", {{"mu", 0.0}}, [](const Params& p) {
        double mu = p.at("mu");
        Kernel k;
        k.f = [mu](const Vec2& s) { return Vec2{s.y, s.x - s.x * s.x * s.x + mu * s.y}; };
        k.jac = [mu](const Vec2& s) { return Mat2{0, 1, 1 - 3 * s.x * s.x, mu}; };
        return k;
    }, {{"mu", mu}});
}

ConnectionSpec duffing_loop() {
    ConnectionSpec c;
    c.from = {{0, 0}, Flavor::unstable, Branch::plus};
    c.to = {{0, 0}, Flavor::stable, Branch::plus};
    c.section = SectionLine({1, 0}, {0, 1}, 2.0, 0);
    c.from_opt.horizon = c.to_opt.horizon = 50;
    return c;
}

// two saddles joined along y = 0: x' = 1 - x^2, y' = x y
PlanarField axis_pair() {
    return PlanarField("pair", {}, [](const Params&) {
        Kernel k;
        k.f = [](const Vec2& s) { return Vec2{1 - s.x * s.x, s.x * s.y}; };
        k.jac = [](const Vec2& s) { return Mat2{-2 * s.x, 0, s.y, s.x}; };
        return k;
    });
}

PlanarField loop_model(double c) {
    return models::polynomial({{"eps", 1.0}, {"a", 0.042}, {"b", 0.49575}, {"c", c}});
}

}  // namespace

TEST(Separatrix, LinearSaddleUnstableStaysOnAxis) {
    auto f = models::linear_saddle();
    auto eq = find_equilibrium(f, {0.1, 0.1});
    auto s = compute_separatrix(f, eq, Flavor::unstable, Branch::plus, 1e-5, 8);
    ASSERT_GT(s.trajectory.samples.size(), 3u);
    for (auto& p : s.trajectory.samples) EXPECT_LT(std::abs(p.x.y), 1e-9);
    EXPECT_GT(s.trajectory.back().x, 1e-2);
}

TEST(Separatrix, StableFlavorRunsBackward) {
    auto f = models::linear_saddle();
    auto eq = find_equilibrium(f, {0.1, 0.1});
    auto s = compute_separatrix(f, eq, Flavor::stable, Branch::minus, 1e-5, 3);
    EXPECT_LT(s.trajectory.t_end(), 0);
    EXPECT_LT(s.trajectory.back().y, -1e-3);
    EXPECT_LT(std::abs(s.trajectory.back().x), 1e-9);
}

TEST(Separatrix, MissingFlavorAndBadOffset) {
    auto source = models::linear_saddle({{"lambda_u", 1.0}, {"lambda_s", 2.0}});
    auto eq = find_equilibrium(source, {0.1, 0.1});
    EXPECT_THROW(compute_separatrix(source, eq, Flavor::stable, Branch::plus), PreconditionError);
    auto f = models::linear_saddle();
    auto sd = find_equilibrium(f, {0.1, 0.1});
    EXPECT_THROW(compute_separatrix(f, sd, Flavor::unstable, Branch::plus, 1e-3), ParameterError);
    EXPECT_THROW(compute_separatrix(f, sd, Flavor::unstable, Branch::plus, 1e-9), ParameterError);
}

TEST(Separatrix, SaddleManifoldReachesTheFold) {
    FoldPoint fp = locate_fold(loop_model(-0.85), "c", {-4.95, -2.275}, -0.85);
    EXPECT_NEAR(fp.value, -0.8501786, 1e-6);
    auto f = loop_model(fp.value);
    auto p2 = find_equilibrium(f, {4.5, 2.24});
    EXPECT_EQ(p2.cls, EqClass::Saddle);
    Branch toward = dot(manifold_direction(p2, Flavor::unstable), fp.position - p2.position) > 0 ? Branch::plus
                                                                                                    : Branch::minus;
    auto s = compute_separatrix(f, p2, Flavor::unstable, toward, 1e-5, 60);
    double dmin = 1e300;
    for (auto& q : s.trajectory.samples) dmin = std::min(dmin, norm(q.x - fp.position));
    EXPECT_LT(dmin, 0.05);
}

TEST(Separatrix, HalvingOffsetBarelyMovesTheHit) {
    auto f = loop_model(-0.86);
    auto p2 = find_equilibrium(f, {4.5, 2.24});
    SectionLine sec({0, 0}, {1, 0});
    ManifoldOptions a, b;
    a.offset = 1e-5, b.offset = 5e-6;
    auto h1 = manifold_hit(f, p2, Flavor::unstable, Branch::minus, sec, a);
    auto h2 = manifold_hit(f, p2, Flavor::unstable, Branch::minus, sec, b);
    EXPECT_LT(norm(h1.state - h2.state), 1e-6);
}

TEST(Splitting, AxisConnectionHasZeroGap) {
    auto f = axis_pair();
    auto l = find_equilibrium(f, {-1.1, 0.1}), r = find_equilibrium(f, {1.1, 0.1});
    ASSERT_EQ(l.cls, EqClass::Saddle);
    ASSERT_EQ(r.cls, EqClass::Saddle);
    auto m = splitting(f, l, Flavor::unstable, Branch::plus, r, Flavor::stable, Branch::minus,
                       midpoint_section(l.position, r.position));
    EXPECT_EQ(m.gap, 0.0);
    EXPECT_LT(std::abs(m.section.distance(m.hit_unstable.state)), 1e-10);
    EXPECT_LT(std::abs(m.section.distance(m.hit_stable.state)), 1e-10);
}

TEST(Splitting, GapChangesSignAcrossTheLoop) {
    auto spec = duffing_loop();
    double lo = measure(duffing(-0.05), spec).gap, hi = measure(duffing(0.05), spec).gap;
    EXPECT_LT(lo * hi, 0);
    EXPECT_LT(std::abs(measure(duffing(0), spec).gap), 1e-7);
}

TEST(Splitting, MissIsReported) {
    auto spec = duffing_loop();
    spec.section = SectionLine({5, 0}, {0, 1}, 0.5, 0);
    EXPECT_THROW(measure(duffing(0.0), spec), ManifoldMiss);
}

TEST(Splitting, ReversedFieldSwapsTheRoles) {
    auto f = duffing(0.03);
    auto o = find_equilibrium(f, {0.01, 0.01});
    SectionLine sec({1, 0}, {0, 1}, 2.0, 0);
    ManifoldOptions mo;
    mo.horizon = 50;
    auto fwd = splitting(f, o, Flavor::unstable, Branch::plus, o, Flavor::stable, Branch::plus, sec, mo);
    auto r = f.reversed();
    auto orv = find_equilibrium(r, {0.01, 0.01});
    auto rev = splitting(r, orv, Flavor::unstable, Branch::plus, orv, Flavor::stable, Branch::plus, sec, mo);
    EXPECT_NEAR(rev.gap, -fwd.gap, 1e-9);
}

TEST(Connection, DuffingLoopAtZero) {
    auto spec = duffing_loop();
    auto r = find_connection(duffing(), "mu", -0.1, 0.08, spec);
    EXPECT_LT(std::abs(r.value), 1e-8);
    EXPECT_LT(std::abs(r.gap), 1e-8);
    auto half = spec;
    half.from_opt.offset = half.to_opt.offset = 5e-6;
    auto r2 = find_connection(duffing(), "mu", -0.1, 0.08, half);
    EXPECT_LT(std::abs(r.value - r2.value), 1e-6);
}

TEST(Connection, SameSignBracketFails) {
    EXPECT_THROW(find_connection(duffing(), "mu", 0.02, 0.08, duffing_loop()), BracketError);
    EXPECT_THROW(find_connection(duffing(), "nu", -0.1, 0.1, duffing_loop()), ParameterError);
}

TEST(Sniceroclinic, SingularLimitClosedForm) {
    auto v = polynomial_singular_limit();
    EXPECT_NEAR(v[0], 2.0 / 9.0, 1e-15);
    EXPECT_NEAR(v[1], 1.0, 1e-15);
    EXPECT_NEAR(v[2], -8.0 / 9.0, 1e-15);
    EXPECT_NEAR(-4 * v[0] + v[1], 1.0 / 9.0, 1e-15);
}

TEST(Sniceroclinic, SingularLimitExactInRationals) {
    // (a, b, c) = (2/9, 9/9, -8/9), everything scaled by 9
    long a = 2, b = 9, c = -8;
    auto g9 = [&](long x) { return a * x * x + b * x + c; };
    EXPECT_EQ(g9(-2), -2 * 9);
    EXPECT_EQ(g9(2), 2 * 9);
    EXPECT_EQ(2 * a * -2 + b, 1);  // 9 g'(-2) = 1
}

TEST(Sniceroclinic, SingularLimitEquilibria) {
    auto v = polynomial_singular_limit();
    auto f = models::polynomial({{"a", v[0]}, {"b", v[1]}, {"c", v[2]}, {"eps", 0.1}});
    auto sn = find_equilibrium(f, {-2.1, -1.9});
    EXPECT_LT(norm(sn.position - Vec2{-2, -2}), 1e-10);
    EXPECT_EQ(sn.cls, EqClass::SaddleNodeCandidate);
}

TEST(Sniceroclinic, LoopAtUnitTimescale) {
    SniceroclinicSpec s;
    s.fold_guess = {-4.95, -2.275};
    s.saddle_guess = {4.5, 2.24};
    auto r = locate_sniceroclinic(loop_model(-0.85), s);
    for (double res : r.residuals) EXPECT_LT(std::abs(res), 1e-6);
    EXPECT_NEAR(r.values[1], 0.042267, 2e-5);
    EXPECT_NEAR(r.values[2], 0.499611, 2e-5);
    EXPECT_NEAR(r.values[0], -0.837602, 2e-5);
    EXPECT_EQ(r.gaps.saddle.cls, EqClass::Saddle);
}
