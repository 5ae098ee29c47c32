#include <gtest/gtest.h>

#include <random>

#include "snic/core.hpp"

using namespace snic;

TEST(Core, VectorArithmetic) {
    Vec2 a{1, 2}, b{3, -1};
    EXPECT_EQ((a + b).x, 4);
    EXPECT_EQ((a - b).y, 3);
    EXPECT_DOUBLE_EQ(dot(a, b), 1);
    EXPECT_DOUBLE_EQ(norm(Vec2{3, 4}), 5);
    EXPECT_DOUBLE_EQ(dot(perp(a), a), 0);
    EXPECT_NEAR(norm(unit(b)), 1, 1e-15);
}

TEST(Core, SolveAndDet) {
    Mat2 J{2, 1, 1, 3};
    EXPECT_DOUBLE_EQ(J.det(), 5);
    Vec2 x = solve(J, Vec2{3, 5});
    EXPECT_NEAR(x.x, 0.8, 1e-15);
    EXPECT_NEAR(x.y, 1.4, 1e-15);
}

TEST(Core, EigenpairsSatisfyDefinition) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-3, 3);
    int real_cases = 0;
    for (int i = 0; i < 500; ++i) {
        Mat2 J{U(rng), U(rng), U(rng), U(rng)};
        Eigen2 e = eigen(J);
        EXPECT_NEAR((e.values[0] + e.values[1]).real(), J.trace(), 1e-12);
        if (!e.real) continue;
        ++real_cases;
        EXPECT_LE(e.values[0].real(), e.values[1].real());
        for (int k = 0; k < 2; ++k) {
            Vec2 v = e.vectors[k];
            Vec2 r = J * v - e.values[k].real() * v;
            EXPECT_LT(norm(r), 1e-8 * norm(v));
        }
    }
    EXPECT_GT(real_cases, 100);
}

TEST(Core, EigenOfDiagonalAndNilpotent) {
    Eigen2 e = eigen(Mat2{1, 0, 0, -2});
    ASSERT_TRUE(e.real);
    EXPECT_DOUBLE_EQ(e.values[0].real(), -2);
    EXPECT_DOUBLE_EQ(e.values[1].real(), 1);
    EXPECT_NEAR(std::abs(e.vectors[1].x), 1, 1e-15);

    Eigen2 z = eigen(Mat2{0, 1, 0, 0});
    EXPECT_TRUE(z.real);
    EXPECT_EQ(z.values[0].real(), 0);
}

TEST(Core, ErrorHierarchy) {
    EXPECT_THROW(throw NoCrossing("x"), NumericalError);
    EXPECT_THROW(throw NewtonFailure("x"), Error);
    try {
        throw SyntaxError("bad", 3);
    } catch (const SyntaxError& e) {
        EXPECT_EQ(e.position(), 3u);
        EXPECT_NE(std::string(e.what()).find("offset 3"), std::string::npos);
    }
}
