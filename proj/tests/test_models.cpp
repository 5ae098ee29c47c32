#include <gtest/gtest.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>

#include "snic/io.hpp"
#include "snic/models/builtin.hpp"
#include "snic/models/expr.hpp"

using namespace snic;

namespace {

double eval1(const std::string& src, const Params& p, double x = 0, double y = 0) {
    auto fe = expr::parse_field(src, "0", p);
    return fe.eval({x, y}).x;
}

// random well-formed expressions for the round-trip checks
std::string random_expr(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, 9);
    std::uniform_real_distribution<double> num(0.1, 3);
    int k = depth <= 0 ? pick(rng) % 3 : pick(rng);
    char buf[32];
    switch (k) {
    case 0: std::snprintf(buf, sizeof buf, "%.6g", num(rng)); return buf;
    case 1: return "x";
    case 2: return "k";
    case 3: return "(" + random_expr(rng, depth - 1) + "+" + random_expr(rng, depth - 1) + ")";
    case 4: return random_expr(rng, depth - 1) + "-" + random_expr(rng, depth - 1);
    case 5: return random_expr(rng, depth - 1) + "*" + random_expr(rng, depth - 1);
    case 6: return random_expr(rng, depth - 1) + "/" + random_expr(rng, depth - 1);
    case 7: return "-" + random_expr(rng, depth - 1);
    case 8: return "y^2";
    default: return "sin(" + random_expr(rng, depth - 1) + ")";
    }
}

}  // namespace

TEST(Parser, SimpleArithmetic) {
    EXPECT_NEAR(eval1("x^2 - mu1", {{"mu1", 0.03}}, 0.2), 0.01, 1e-15);
    EXPECT_DOUBLE_EQ(eval1("1 + 2*3", {}), 7);
    EXPECT_DOUBLE_EQ(eval1("2^3^2", {}), 512);
    EXPECT_DOUBLE_EQ(eval1("-2^2", {}), -4);
    EXPECT_DOUBLE_EQ(eval1("2^-1", {}), 0.5);
    EXPECT_DOUBLE_EQ(eval1("8/4/2", {}), 1);
    EXPECT_DOUBLE_EQ(eval1("1 - 2 - 3", {}), -4);
    EXPECT_DOUBLE_EQ(eval1("1.5e2 + .5", {}), 150.5);
    EXPECT_NEAR(eval1("exp(ln(3)) + sqrt(16) + abs(-2) + atan(1)*4", {}), 3 + 4 + 2 + M_PI, 1e-14);
    EXPECT_NEAR(eval1("sin(x)^2 + cos(x)^2 - tan(0)", {}, 0.7), 1, 1e-15);
    EXPECT_DOUBLE_EQ(eval1("x*y", {}, 3, -2), -6);
}

TEST(Parser, SyntaxErrorsCarryPosition) {
    auto pos = [](const std::string& s, const Params& p = {}) -> long {
        try {
            expr::parse_field(s, "0", p);
        } catch (const SyntaxError& e) {
            return static_cast<long>(e.position());
        }
        return -1;
    };
    EXPECT_EQ(pos("x +* y"), 3);
    EXPECT_EQ(pos("x + q"), 4);
    EXPECT_EQ(pos("(x + 1"), 6);
    EXPECT_GE(pos("sin(x, y)"), 0);
    EXPECT_GE(pos("sin()"), 0);
    EXPECT_GE(pos("k(x)", {{"k", 1}}), 0);
    EXPECT_EQ(pos("x y"), 2);
    EXPECT_EQ(pos(""), 0);
}

TEST(Parser, ArityMessage) {
    try {
        expr::parse_field("sin(x, y)", "0", {});
        FAIL();
    } catch (const SyntaxError& e) {
        EXPECT_NE(std::string(e.what()).find("arity"), std::string::npos);
    }
}

TEST(Parser, ParamNamesMayNotShadow) {
    EXPECT_THROW(expr::parse_field("x", "y", {{"x", 1}}), ParameterError);
    EXPECT_THROW(expr::parse_field("x", "y", {{"sin", 1}}), ParameterError);
}

TEST(Parser, PrintRoundTripsAndEvaluatorsAgree) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-2, 2);
    std::vector<std::string> names{"k"};
    double kval = 1.7;
    for (int i = 0; i < 300; ++i) {
        std::string src = random_expr(rng, 4);
        auto ast = expr::parse(src, names);
        auto again = expr::parse(expr::print(*ast), names);
        EXPECT_TRUE(ast->equals(*again)) << src;
        expr::Program prog(*ast);
        for (int j = 0; j < 5; ++j) {
            double x = U(rng), y = U(rng);
            double a = prog.run(x, y, &kval), b = expr::eval_tree(*ast, x, y, &kval);
            if (std::isnan(b)) {
                EXPECT_TRUE(std::isnan(a));
                continue;
            }
            EXPECT_NEAR(a, b, 1e-15 * std::max(1.0, std::abs(b))) << src;
        }
    }
}

TEST(Parser, DeterministicBitwise) {
    auto a = expr::parse_field("sin(x*k)/(1+y^2)", "exp(-x)*k", {{"k", 0.3}});
    auto b = expr::parse_field("sin(x*k)/(1+y^2)", "exp(-x)*k", {{"k", 0.3}});
    for (double t = -1; t < 1; t += 0.1) {
        Vec2 u = a.eval({t, 2 * t}), v = b.eval({t, 2 * t});
        EXPECT_EQ(std::memcmp(&u, &v, sizeof u), 0);
    }
}

TEST(Builtins, PolynomialEquilibriumIsZero) {
    auto f = models::polynomial();
    Vec2 v = f.eval({-2, -2});
    EXPECT_NEAR(v.x, 0, 1e-15);
    EXPECT_NEAR(v.y, 0, 1e-15);
    v = f.eval({2, 2});
    EXPECT_NEAR(norm(v), 0, 1e-15);
}

TEST(Builtins, NormalFormAtOrigin) {
    auto f = models::normalform_sn({{"mu1", 0.0}, {"rho", -1.0}});
    EXPECT_EQ(norm(f.eval({0, 0})), 0);
}

TEST(Builtins, GTPaseBasalActivation) {
    auto f = models::gtpase({{"beta", 0.0}});
    EXPECT_NEAR(f.eval({0.7, 0.0}).y, 0.506, 1e-15);
}

TEST(Builtins, GTPaseDefaultsMatchTable) {
    auto j = io::model_to_json(models::gtpase());
    EXPECT_EQ(j.dump(),
              R"({"name":"gtpase","params":{"beta":0.0052,"b":0.253,"gamma":1.6,"G_T":2.0,"ell0":1.0,"phi1":0.9,)"
              R"("phi2":2.0,"G_h":0.4,"epsilon":0.1,"n":4.0,"p":4.0,"m":4.0}})");
}

TEST(Builtins, UnknownNameAndKey) {
    EXPECT_THROW(models::builtin("lorenz"), ParameterError);
    EXPECT_THROW(models::builtin("polynomial", {{"d", 1}}), ParameterError);
    EXPECT_THROW(models::polynomial().with("zeta", 2), ParameterError);
}

TEST(Builtins, WithRebindsParameters) {
    auto f = models::polynomial();
    auto g = f.with("c", 0.0);
    EXPECT_DOUBLE_EQ(g.param("c"), 0);
    EXPECT_DOUBLE_EQ(f.param("c"), -8.0 / 9.0);
    EXPECT_NE(f.eval({1, 1}).x, g.eval({1, 1}).x);
}

class BuiltinTwin : public ::testing::TestWithParam<std::string> {};

TEST_P(BuiltinTwin, TextEvaluatesIdentically) {
    auto f = models::builtin(GetParam());
    auto t = models::builtin_text(GetParam());
    auto fe = expr::parse_field(t.x, t.y, f.params()).field();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-3, 3), P(0.05, 2.5);
    bool positive = GetParam() == "gtpase";
    for (int i = 0; i < 100; ++i) {
        Vec2 s = positive ? Vec2{P(rng), P(rng)} : Vec2{U(rng), U(rng)};
        Vec2 a = f.eval(s), b = fe.eval(s);
        EXPECT_NEAR(a.x, b.x, 1e-12 * std::max(1.0, std::abs(a.x)));
        EXPECT_NEAR(a.y, b.y, 1e-12 * std::max(1.0, std::abs(a.y)));
    }
}

TEST_P(BuiltinTwin, AnalyticJacobianMatchesDifferences) {
    auto f = models::builtin(GetParam());
    ASSERT_TRUE(f.has_jacobian());
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-3, 3), P(0.05, 2.5);
    bool positive = GetParam() == "gtpase";
    for (int i = 0; i < 100; ++i) {
        Vec2 s = positive ? Vec2{P(rng), P(rng)} : Vec2{U(rng), U(rng)};
        Mat2 A = f.jacobian(s), D = f.jacobian_fd(s);
        double scale = std::max(1.0, A.norm());
        EXPECT_NEAR(A.a, D.a, 1e-6 * scale);
        EXPECT_NEAR(A.b, D.b, 1e-6 * scale);
        EXPECT_NEAR(A.c, D.c, 1e-6 * scale);
        EXPECT_NEAR(A.d, D.d, 1e-6 * scale);
    }
}

INSTANTIATE_TEST_SUITE_P(All, BuiltinTwin, ::testing::Values("polynomial", "gtpase", "normalform_sn", "linear_saddle"));

TEST(Builtins, PolynomialTwinAtRandomStates) {
    auto fe = expr::parse_field("eps*(a*x^2+b*x+c - y)", "x - (y^3 - 3*y)", models::polynomial().params());
    auto f = models::polynomial();
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(-4, 4);
    for (int i = 0; i < 100; ++i) {
        Vec2 s{U(rng), U(rng)};
        EXPECT_LT(norm(f.eval(s) - fe.eval(s)), 1e-12 * std::max(1.0, norm(f.eval(s))));
    }
}

TEST(ModelFiles, ExpressionModelLoads) {
    auto j = io::json::parse(R"({"expr_x": "x^2 - mu1", "expr_y": "-y", "params": {"mu1": 0.04}})");
    auto f = io::make_field(io::model_from_json(j));
    EXPECT_NEAR(f.eval({0.2, 1}).x, 0, 1e-15);
    EXPECT_DOUBLE_EQ(f.eval({0.2, 1}).y, -1);
}

TEST(ModelFiles, BuiltinWithOverrides) {
    auto j = io::json::parse(R"({"name": "polynomial", "params": {"c": -1.5}})");
    auto f = io::make_field(io::model_from_json(j));
    EXPECT_DOUBLE_EQ(f.param("c"), -1.5);
}

TEST(ModelFiles, UnknownKeysRejected) {
    EXPECT_THROW(io::model_from_json(io::json::parse(R"({"name": "polynomial", "colour": 1})")), ParameterError);
    EXPECT_THROW(io::model_from_json(io::json::parse(R"({"expr_x": "x"})")), ParameterError);
    EXPECT_THROW(io::model_from_json(io::json::parse(R"({"params": {}})")), ParameterError);
    EXPECT_THROW(io::model_from_json(io::json::parse(R"({"name": "polynomial", "params": {"c": "x"}})")),
                 ParameterError);
}

TEST(ModelFiles, LoadFromDisk) {
    std::string path = ::testing::TempDir() + "snic_model.json";
    {
        std::ofstream out(path);
        out << R"({"name": "linear_saddle", "params": {"lambda_u": 2}})";
    }
    auto f = io::load_model(path);
    EXPECT_DOUBLE_EQ(f.eval({1, 1}).x, 2);
    std::remove(path.c_str());
    EXPECT_THROW(io::load_model("nope"), ParameterError);
}

TEST(ModelFiles, UnfoldingRoundTrip) {
    nf::UnfoldingParams p;
    p.mu1 = 0.01, p.mu2 = -0.02, p.rho = -3;
    auto q = io::unfolding_from_json(io::to_json(p));
    EXPECT_EQ(io::to_json(q).dump(), io::to_json(p).dump());
    EXPECT_THROW(io::unfolding_from_json(io::json::parse(R"({"mu4": 1})")), ParameterError);
}
