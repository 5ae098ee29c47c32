#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "snic/flow.hpp"

namespace snic::models {

namespace detail {

// integer exponents by repeated multiplication, otherwise pow
inline double ipow(double v, double e) {
    double r = std::round(e);
    if (r == e && std::abs(r) <= 64) {
        long n = static_cast<long>(std::abs(r));
        double acc = 1, b = v;
        while (n) {
            if (n & 1) acc *= b;
            b *= b;
            n >>= 1;
        }
        return r < 0 ? 1 / acc : acc;
    }
    return std::pow(v, e);
}

}  // namespace detail

// x' = eps (a x^2 + b x + c - y), y' = x - (y^3 - 3 y)
inline ParamSchema polynomial_schema() {
    return {{"eps", 1.0}, {"a", 2.0 / 9.0}, {"b", 1.0}, {"c", -8.0 / 9.0}};
}

template <class S>
Vec2T<S> polynomial_rhs(const Vec2T<S>& u, S eps, S a, S b, S c) {
    S g = (a * u.x + b) * u.x + c;
    S f = u.y * (u.y * u.y - S(3));
    return {eps * (g - u.y), u.x - f};
}

inline PlanarField polynomial(const Params& overrides = {}) {
    return PlanarField("polynomial", polynomial_schema(), [](const Params& p) {
        double eps = p.at("eps"), a = p.at("a"), b = p.at("b"), c = p.at("c");
        Kernel k;
        k.f = [=](const Vec2& u) { return polynomial_rhs<double>(u, eps, a, b, c); };
        k.jac = [=](const Vec2& u) { return Mat2{eps * (2 * a * u.x + b), -eps, 1.0, -(3 * u.y * u.y - 3)}; };
        return k;
    }, overrides)
#ifdef SNIC_HAS_QUAD
        .with_quad([](const QuadParams& q) -> QuadRhs {
            quad eps = q.at("eps"), a = q.at("a"), b = q.at("b"), c = q.at("c");
            return [=](const Vec2Q& u) { return polynomial_rhs<quad>(u, eps, a, b, c); };
        })
#endif
        ;
}

// state (L, G)
inline ParamSchema gtpase_schema() {
    return {{"beta", 0.0052}, {"b", 0.2530}, {"gamma", 1.6}, {"G_T", 2.0}, {"ell0", 1.0}, {"phi1", 0.9},
            {"phi2", 2.0},    {"G_h", 0.4},  {"epsilon", 0.1}, {"n", 4.0}, {"p", 4.0},  {"m", 4.0}};
}

struct GTPaseParams {
    double beta, b, gamma, G_T, ell0, phi1, phi2, G_h, epsilon, n, p, m;

    static GTPaseParams from(const Params& q) {
        return {q.at("beta"), q.at("b"),   q.at("gamma"),   q.at("G_T"), q.at("ell0"), q.at("phi1"),
                q.at("phi2"), q.at("G_h"), q.at("epsilon"), q.at("n"),   q.at("p"),    q.at("m")};
    }

    double u(double G) const {
        double gp = detail::ipow(G, p), hp = detail::ipow(G_h, p);
        return gp / (hp + gp);
    }
    double du(double G) const {
        double gp = detail::ipow(G, p), hp = detail::ipow(G_h, p);
        return p * detail::ipow(G, p - 1) * hp / ((hp + gp) * (hp + gp));
    }
    double L0(double G, double phi) const { return ell0 - phi * u(G); }
    double hill(double G) const {
        double gn = detail::ipow(G, n);
        return gn / (1 + gn);
    }
    double dhill(double G) const {
        double gn = detail::ipow(G, n);
        return n * detail::ipow(G, n - 1) / ((1 + gn) * (1 + gn));
    }
    double f(double L, double G) const {
        double lm = detail::ipow(L, m), km = detail::ipow(L0(G, phi2), m);
        return beta * lm / (km + lm);
    }

    Vec2 rhs(const Vec2& s) const {
        double L = s.x, G = s.y;
        double dL = -epsilon * (L - L0(G, phi1));
        double dG = (b + f(L, G) + gamma * hill(G)) * (G_T - G) - G;
        return {dL, dG};
    }

    Mat2 jac(const Vec2& s) const {
        double L = s.x, G = s.y;
        double K = L0(G, phi2);
        double lm = detail::ipow(L, m), km = detail::ipow(K, m);
        double den = (km + lm) * (km + lm);
        double fL = beta * m * detail::ipow(L, m - 1) * km / den;
        double fK = -beta * lm * m * detail::ipow(K, m - 1) / den;
        double fG = fK * (-phi2 * du(G));
        double A = b + f(L, G) + gamma * hill(G);
        return {-epsilon, -epsilon * phi1 * du(G), fL * (G_T - G), (fG + gamma * dhill(G)) * (G_T - G) - A - 1};
    }
};

inline PlanarField gtpase(const Params& overrides = {}) {
    return PlanarField("gtpase", gtpase_schema(), [](const Params& q) {
        GTPaseParams g = GTPaseParams::from(q);
        Kernel k;
        k.f = [g](const Vec2& s) { return g.rhs(s); };
        k.jac = [g](const Vec2& s) { return g.jac(s); };
        return k;
    }, overrides);
}

// saddle-node box: x' = x^2 - mu1, y' = rho y
inline PlanarField normalform_sn(const Params& overrides = {}) {
    return PlanarField("normalform_sn", {{"mu1", 0.0}, {"rho", -1.0}}, [](const Params& q) {
        double mu1 = q.at("mu1"), rho = q.at("rho");
        Kernel k;
        k.f = [=](const Vec2& s) { return Vec2{s.x * s.x - mu1, rho * s.y}; };
        k.jac = [=](const Vec2& s) { return Mat2{2 * s.x, 0, 0, rho}; };
        return k;
    }, overrides)
#ifdef SNIC_HAS_QUAD
        .with_quad([](const QuadParams& q) -> QuadRhs {
            quad mu1 = q.at("mu1"), rho = q.at("rho");
            return [=](const Vec2Q& s) { return Vec2Q{s.x * s.x - mu1, rho * s.y}; };
        })
#endif
        ;
}

// saddle box: x' = lambda_u x, y' = lambda_s y
inline PlanarField linear_saddle(const Params& overrides = {}) {
    return PlanarField("linear_saddle", {{"lambda_u", 1.0}, {"lambda_s", -2.0}}, [](const Params& q) {
        double lu = q.at("lambda_u"), ls = q.at("lambda_s");
        Kernel k;
        k.f = [=](const Vec2& s) { return Vec2{lu * s.x, ls * s.y}; };
        k.jac = [=](const Vec2&) { return Mat2{lu, 0, 0, ls}; };
        return k;
    }, overrides)
#ifdef SNIC_HAS_QUAD
        .with_quad([](const QuadParams& q) -> QuadRhs {
            quad lu = q.at("lambda_u"), ls = q.at("lambda_s");
            return [=](const Vec2Q& s) { return Vec2Q{lu * s.x, ls * s.y}; };
        })
#endif
        ;
}

inline std::vector<std::string> builtin_names() { return {"polynomial", "gtpase", "normalform_sn", "linear_saddle"}; }

inline PlanarField builtin(const std::string& name, const Params& overrides = {}) {
    if (name == "polynomial") return polynomial(overrides);
    if (name == "gtpase") return gtpase(overrides);
    if (name == "normalform_sn") return normalform_sn(overrides);
    if (name == "linear_saddle") return linear_saddle(overrides);
    throw ParameterError("unknown model '" + name + "'");
}

// textual twins of the builtins, for the parser cross-checks
struct TextModel {
    std::string x, y;
};

inline TextModel builtin_text(const std::string& name) {
    if (name == "polynomial") return {"eps*(a*x^2+b*x+c - y)", "x - (y^3 - 3*y)"};
    if (name == "gtpase")
        return {"-epsilon*(x - (ell0 - phi1*y^p/(G_h^p + y^p)))",
                "(b + beta*x^m/((ell0 - phi2*y^p/(G_h^p + y^p))^m + x^m) + gamma*y^n/(1 + y^n))*(G_T - y) - y"};
    if (name == "normalform_sn") return {"x^2 - mu1", "rho*y"};
    if (name == "linear_saddle") return {"lambda_u*x", "lambda_s*y"};
    throw ParameterError("unknown model '" + name + "'");
}

}  // namespace snic::models
