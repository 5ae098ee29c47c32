#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>

#include "snic/flow.hpp"

namespace snic {

enum class Flavor { stable, unstable, center_stable, center_unstable };
enum class Branch { plus, minus };

inline const char* to_string(Flavor f) {
    switch (f) {
    case Flavor::stable: return "stable";
    case Flavor::unstable: return "unstable";
    case Flavor::center_stable: return "center_stable";
    case Flavor::center_unstable: return "center_unstable";
    }
    return "?";
}
inline const char* to_string(Branch b) { return b == Branch::plus ? "plus" : "minus"; }

inline bool backward(Flavor f) { return f == Flavor::stable || f == Flavor::center_stable; }
inline double sign(Branch b) { return b == Branch::plus ? 1.0 : -1.0; }

struct Separatrix {
    Equilibrium origin;
    Branch branch = Branch::plus;
    Flavor flavor = Flavor::unstable;
    Trajectory trajectory;
    double offset = 0;
    Vec2 direction;  // unit eigenvector, plus orientation

    Vec2 seed() const { return origin.position + sign(branch) * offset * direction; }
};

struct ManifoldOptions {
    double offset = 1e-5;
    double horizon = 1000;
    double rtol = 1e-11;
    double atol = 1e-13;
    double tol_zero = 1e-6;
};

// eigenvectors are oriented with a positive leading component
inline Vec2 orient(Vec2 v) {
    if (v.x < 0 || (v.x == 0 && v.y < 0)) return -v;
    return v;
}

// eigendirection carrying the requested flavor
inline Vec2 manifold_direction(const Equilibrium& eq, Flavor flavor, double tol_zero = 1e-6) {
    const Eigen2& e = eq.eigen;
    if (!e.real) throw PreconditionError("complex eigenvalues: no real invariant direction");
    double scale = std::max(eq.jacobian.norm(), 1e-300);
    double l0 = e.values[0].real(), l1 = e.values[1].real();
    switch (flavor) {
    case Flavor::stable:
        if (!(l0 < -tol_zero * scale)) throw PreconditionError("equilibrium has no stable direction");
        return orient(e.vectors[0]);
    case Flavor::unstable:
        if (!(l1 > tol_zero * scale)) throw PreconditionError("equilibrium has no unstable direction");
        return orient(e.vectors[1]);
    case Flavor::center_stable:
    case Flavor::center_unstable: return orient(e.vectors[std::abs(l0) <= std::abs(l1) ? 0 : 1]);
    }
    return {};
}

inline void check_offset(double offset) {
    if (!(offset >= 1e-8 && offset <= 1e-4)) throw ParameterError("manifold offset must lie in [1e-8, 1e-4]");
}

inline Separatrix compute_separatrix(const PlanarField& field, const Equilibrium& eq, Flavor flavor, Branch branch,
                                     double offset = 1e-5, double horizon = 100, IntegratorOptions opt = {}) {
    check_offset(offset);
    if (!(horizon > 0)) throw ParameterError("horizon must be positive");
    Separatrix s;
    s.origin = eq, s.branch = branch, s.flavor = flavor, s.offset = offset;
    s.direction = manifold_direction(eq, flavor);
    s.trajectory = integrate(field, s.seed(), 0, backward(flavor) ? -horizon : horizon, opt);
    return s;
}

// side of a fold along its kernel direction from which orbits leave
inline Branch center_unstable_branch(const PlanarField& field, const Equilibrium& eq, double probe = 1e-4) {
    Vec2 v = manifold_direction(eq, Flavor::center_unstable);
    Eigen2 lt = eigen(eq.jacobian.transpose());
    if (!lt.real) throw PreconditionError("complex eigenvalues at a fold candidate");
    Vec2 w = lt.vectors[std::abs(lt.values[0].real()) <= std::abs(lt.values[1].real()) ? 0 : 1];
    if (dot(w, v) < 0) w = -w;
    double up = dot(w, field.eval(eq.position + probe * v));
    double dn = dot(w, field.eval(eq.position - probe * v));
    // quadratic term dominates: both sides move the same way
    return up + dn > 0 ? Branch::plus : Branch::minus;
}

namespace detail {

inline SectionCrossing hit_from(const PlanarField& field, Vec2 x0, bool reversed, const SectionLine& sec,
                                const ManifoldOptions& mo, const std::string& what = "manifold") {
    IntegratorOptions io;
    io.rtol = mo.rtol, io.atol = mo.atol;
    try {
        return integrate_to_section(field, x0, sec, reversed ? -mo.horizon : mo.horizon, io);
    } catch (const NoCrossing&) {
        throw ManifoldMiss(what + " misses the section");
    }
}

}  // namespace detail

// first crossing of a manifold branch with a section; ManifoldMiss if none
inline SectionCrossing manifold_hit(const PlanarField& field, const Equilibrium& eq, Flavor flavor, Branch branch,
                                    const SectionLine& sec, const ManifoldOptions& mo) {
    Vec2 v = manifold_direction(eq, flavor, mo.tol_zero);
    return detail::hit_from(field, eq.position + sign(branch) * mo.offset * v, backward(flavor), sec, mo,
                            std::string(to_string(flavor)) + " manifold (" + to_string(branch) + ")");
}

struct SplittingMeasurement {
    SectionLine section;
    SectionCrossing hit_unstable;
    SectionCrossing hit_stable;
    double gap = 0;
};

inline SplittingMeasurement splitting(const PlanarField& field, const Equilibrium& from, Flavor from_flavor,
                                      Branch from_branch, const Equilibrium& to, Flavor to_flavor, Branch to_branch,
                                      const SectionLine& sec, const ManifoldOptions& from_opt,
                                      const ManifoldOptions& to_opt) {
    check_offset(from_opt.offset);
    check_offset(to_opt.offset);
    if (backward(from_flavor)) throw ParameterError("splitting: the departing manifold must be unstable");
    if (!backward(to_flavor)) throw ParameterError("splitting: the arriving manifold must be stable");
    SplittingMeasurement m;
    m.section = sec;
    m.hit_unstable = manifold_hit(field, from, from_flavor, from_branch, sec, from_opt);
    m.hit_stable = manifold_hit(field, to, to_flavor, to_branch, sec, to_opt);
    m.gap = sec.coordinate(m.hit_unstable.state) - sec.coordinate(m.hit_stable.state);
    return m;
}

inline SplittingMeasurement splitting(const PlanarField& field, const Equilibrium& from, Flavor from_flavor,
                                      Branch from_branch, const Equilibrium& to, Flavor to_flavor, Branch to_branch,
                                      const SectionLine& sec, const ManifoldOptions& opt = {}) {
    return splitting(field, from, from_flavor, from_branch, to, to_flavor, to_branch, sec, opt, opt);
}

// midpoint of the segment between two equilibria, normal along it
inline SectionLine midpoint_section(const Vec2& a, const Vec2& b) {
    return SectionLine(0.5 * (a + b), b - a);
}

// line through eq + r dir with normal dir
inline SectionLine section_along(const Vec2& at, const Vec2& dir, double r) {
    return SectionLine(at + r * unit(dir), dir);
}

struct ManifoldRef {
    Vec2 guess;
    Flavor flavor;
    Branch branch;
};

struct ConnectionSpec {
    ManifoldRef from{{}, Flavor::unstable, Branch::plus};
    ManifoldRef to{{}, Flavor::stable, Branch::plus};
    std::optional<SectionLine> section;  // default: midpoint section
    ManifoldOptions from_opt, to_opt;
    NewtonOptions newton;
};

// equilibria are re-located for the current parameters before measuring
inline SplittingMeasurement measure(const PlanarField& field, const ConnectionSpec& spec) {
    Equilibrium a = find_equilibrium(field, spec.from.guess, spec.newton);
    Equilibrium b = find_equilibrium(field, spec.to.guess, spec.newton);
    SectionLine sec = spec.section ? *spec.section : midpoint_section(a.position, b.position);
    return splitting(field, a, spec.from.flavor, spec.from.branch, b, spec.to.flavor, spec.to.branch, sec,
                     spec.from_opt, spec.to_opt);
}

struct ConnectionResult {
    double value = 0;
    double gap = 0;
    int iterations = 0;
    double bracket_width = 0;
};

// safeguarded secant (Illinois) on gap(param)
inline ConnectionResult find_connection(const PlanarField& field, const std::string& param, double lo, double hi,
                                        const ConnectionSpec& spec, double gap_tol = 1e-8,
                                        double param_tol = 1e-12, int max_iter = 200) {
    if (!field.has_param(param)) throw ParameterError("unknown parameter '" + param + "'");
    if (!(lo < hi)) throw ParameterError("find_connection: bracket must satisfy lo < hi");
    auto gap = [&](double v) { return measure(field.with(param, v), spec).gap; };
    double ga = gap(lo), gb = gap(hi);
    ConnectionResult r;
    if (ga == 0) return {lo, 0, 0, hi - lo};
    if (gb == 0) return {hi, 0, 0, hi - lo};
    if ((ga < 0) == (gb < 0)) throw BracketError("find_connection: gap has the same sign at both ends");
    double a = lo, b = hi;
    int side = 0;
    for (int it = 1; it <= max_iter; ++it) {
        double m = (a * gb - b * ga) / (gb - ga);
        if (!(m > a && m < b) || it % 8 == 0) m = 0.5 * (a + b);
        double gm = gap(m);
        r = {m, gm, it, b - a};
        if (std::abs(gm) < gap_tol || b - a < param_tol) return r;
        if ((gm < 0) == (ga < 0)) {
            a = m, ga = gm;
            if (side == -1) gb *= 0.5;
            side = -1;
        } else {
            b = m, gb = gm;
            if (side == 1) ga *= 0.5;
            side = 1;
        }
        if (b - a < param_tol) {
            r.bracket_width = b - a;
            return r;
        }
    }
    throw NumericalError("find_connection: no convergence");
}

// ------------------------------------------------------------ sniceroclinic loops

namespace detail {

inline std::array<double, 3> solve3(const std::array<std::array<double, 3>, 3>& A, const std::array<double, 3>& b) {
    auto det = [](const std::array<std::array<double, 3>, 3>& M) {
        return M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1]) - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0]) +
               M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]);
    };
    double D = det(A);
    if (D == 0 || !std::isfinite(D)) throw NewtonFailure("singular 3x3 system");
    std::array<double, 3> x{};
    for (int k = 0; k < 3; ++k) {
        auto M = A;
        for (int i = 0; i < 3; ++i) M[i][k] = b[i];
        x[k] = det(M) / D;
    }
    return x;
}

}  // namespace detail

struct FoldPoint {
    Vec2 position;
    double value = 0;  // of the fold parameter
    double residual = 0;
};

// Newton on {f = 0, det J = 0} in (x, y, param)
inline FoldPoint locate_fold(const PlanarField& field, const std::string& param, Vec2 guess, double pguess,
                             double tol = 1e-13, int max_iter = 60) {
    Vec2 x = guess;
    double p = pguess;
    auto F = [&](const Vec2& z, double q) {
        PlanarField g = field.with(param, q);
        Vec2 f = g.eval(z);
        return std::array<double, 3>{f.x, f.y, g.jacobian(z).det()};
    };
    for (int it = 0; it < max_iter; ++it) {
        auto r = F(x, p);
        double res = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
        std::array<std::array<double, 3>, 3> A{};
        double hx = 1e-7 * (1 + norm(x)), hp = 1e-7 * (1 + std::abs(p));
        auto cx = F({x.x + hx, x.y}, p), mx = F({x.x - hx, x.y}, p);
        auto cy = F({x.x, x.y + hx}, p), my = F({x.x, x.y - hx}, p);
        auto cp = F(x, p + hp), mp = F(x, p - hp);
        for (int i = 0; i < 3; ++i) {
            A[i][0] = (cx[i] - mx[i]) / (2 * hx);
            A[i][1] = (cy[i] - my[i]) / (2 * hx);
            A[i][2] = (cp[i] - mp[i]) / (2 * hp);
        }
        auto d = detail::solve3(A, r);
        x = {x.x - d[0], x.y - d[1]};
        p -= d[2];
        if (!finite(x) || !std::isfinite(p)) throw NewtonFailure("locate_fold: non-finite iterate");
        if (res < tol && std::abs(d[0]) + std::abs(d[1]) + std::abs(d[2]) < 1e-12) break;
    }
    auto r = F(x, p);
    double res = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
    if (!(res < 1e-10)) throw NewtonFailure("locate_fold: no convergence (residual " + std::to_string(res) + ")");
    return {x, p, res};
}

struct SniceroclinicSpec {
    // free[0] is tuned to keep the fold; free[1], free[2] close the two gaps
    std::array<std::string, 3> free{"c", "a", "b"};
    Vec2 fold_guess;
    Vec2 saddle_guess;
    double section_r = 0.5;
    ManifoldOptions hyperbolic{1e-5, 1000, 1e-11, 1e-13, 1e-6};
    ManifoldOptions center{1e-4, 1e7, 1e-11, 1e-13, 1e-6};
    double tol = 1e-9;
    int max_iter = 25;
};

struct LoopGaps {
    FoldPoint fold;
    Equilibrium saddle_node, saddle;
    SplittingMeasurement into_fold;    // W^u(saddle) against the strong stable manifold of the fold
    SplittingMeasurement out_of_fold;  // center-unstable manifold of the fold against W^s(saddle)
};

// both loop gaps with the fold parameter re-solved for the current values
inline LoopGaps loop_gaps(const PlanarField& field, const SniceroclinicSpec& s, double fold_value_guess) {
    LoopGaps L;
    L.fold = locate_fold(field, s.free[0], s.fold_guess, fold_value_guess);
    PlanarField g = field.with(s.free[0], L.fold.value);
    NewtonOptions no;
    no.polish_folds = false;
    L.saddle_node = describe_equilibrium(g, L.fold.position);
    L.saddle = find_equilibrium(g, s.saddle_guess, no);
    if (L.saddle.cls != EqClass::Saddle) throw PreconditionError("loop partner is not a saddle");
    const Vec2 q = L.saddle_node.position, p = L.saddle.position;

    Vec2 vu = manifold_direction(L.saddle, Flavor::unstable);
    Vec2 vs = manifold_direction(L.saddle, Flavor::stable);
    Vec2 vss = orient(L.saddle_node.eigen.vectors[std::abs(L.saddle_node.lambda(0)) <= std::abs(L.saddle_node.lambda(1)) ? 1 : 0]);
    Branch bu = dot(vu, q - p) > 0 ? Branch::plus : Branch::minus;
    Branch bs = dot(vs, q - p) > 0 ? Branch::plus : Branch::minus;
    Branch bss = dot(vss, p - q) > 0 ? Branch::plus : Branch::minus;
    Branch bc = center_unstable_branch(g, L.saddle_node);

    SectionLine near_fold = section_along(q, sign(bss) * vss, s.section_r);
    L.into_fold.section = near_fold;
    L.into_fold.hit_unstable = manifold_hit(g, L.saddle, Flavor::unstable, bu, near_fold, s.hyperbolic);
    L.into_fold.hit_stable = detail::hit_from(g, q + sign(bss) * s.hyperbolic.offset * vss, true, near_fold, s.hyperbolic);
    L.into_fold.gap = near_fold.coordinate(L.into_fold.hit_unstable.state) - near_fold.coordinate(L.into_fold.hit_stable.state);

    SectionLine near_saddle = section_along(p, sign(bs) * vs, s.section_r);
    L.out_of_fold = splitting(g, L.saddle_node, Flavor::center_unstable, bc, L.saddle, Flavor::stable, bs,
                              near_saddle, s.center, s.hyperbolic);
    return L;
}

struct SniceroclinicResult {
    std::array<std::string, 3> names;
    std::array<double, 3> values{};
    std::array<double, 3> residuals{};  // det J at the fold, gap into the fold, gap out of it
    int iterations = 0;
    LoopGaps gaps;
};

// Newton on (free[1], free[2]) for both gaps, free[0] eliminated through the fold condition
inline SniceroclinicResult locate_sniceroclinic(const PlanarField& model, const SniceroclinicSpec& s) {
    for (auto& n : s.free)
        if (!model.has_param(n)) throw ParameterError("unknown parameter '" + n + "'");
    PlanarField f = model;
    double p1 = f.param(s.free[1]), p2 = f.param(s.free[2]);
    double fold_val = f.param(s.free[0]);
    SniceroclinicSpec cur = s;
    auto eval = [&](double u, double v, LoopGaps* keep) {
        PlanarField g = f.with({{s.free[1], u}, {s.free[2], v}});
        LoopGaps L = loop_gaps(g, cur, fold_val);
        if (keep) *keep = L;
        return Vec2{L.into_fold.gap, L.out_of_fold.gap};
    };
    LoopGaps L;
    Vec2 G = eval(p1, p2, &L);
    int it = 0;
    for (; it < s.max_iter && norm_inf(G) >= s.tol; ++it) {
        fold_val = L.fold.value;
        cur.fold_guess = L.fold.position;
        cur.saddle_guess = L.saddle.position;
        double h1 = 1e-6 * (1 + std::abs(p1)), h2 = 1e-6 * (1 + std::abs(p2));
        Vec2 d1 = (eval(p1 + h1, p2, nullptr) - eval(p1 - h1, p2, nullptr)) / (2 * h1);
        Vec2 d2 = (eval(p1, p2 + h2, nullptr) - eval(p1, p2 - h2, nullptr)) / (2 * h2);
        Mat2 D{d1.x, d2.x, d1.y, d2.y};
        if (D.det() == 0) throw NewtonFailure("locate_sniceroclinic: singular gap Jacobian");
        Vec2 step = solve(D, G);
        double lam = 1;
        while (true) {
            try {
                LoopGaps Ln;
                Vec2 Gn = eval(p1 - lam * step.x, p2 - lam * step.y, &Ln);
                if (norm(Gn) < norm(G) || lam < 1e-3) {
                    p1 -= lam * step.x, p2 -= lam * step.y;
                    G = Gn, L = Ln;
                    break;
                }
            } catch (const NumericalError&) {
                if (lam < 1e-3) throw;
            }
            lam *= 0.5;
        }
    }
    if (!(norm_inf(G) < s.tol)) throw NewtonFailure("locate_sniceroclinic: gaps did not close");
    SniceroclinicResult r;
    r.names = s.free;
    r.values = {L.fold.value, p1, p2};
    r.residuals = {L.saddle_node.jacobian.det(), G.x, G.y};
    r.iterations = it;
    r.gaps = L;
    return r;
}

// fast-slow singular limit of the polynomial model: g(-2) = -2, g(2) = 2, g'(-2) = 1/9
inline std::array<double, 3> polynomial_singular_limit() {
    // unknowns (a, b, c) of g(x) = a x^2 + b x + c
    std::array<std::array<double, 3>, 3> A{{{4, -2, 1}, {4, 2, 1}, {-4, 1, 0}}};
    return detail::solve3(A, {-2, 2, 1.0 / 9.0});
}

}  // namespace snic
