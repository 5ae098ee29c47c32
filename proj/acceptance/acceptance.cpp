#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "snic/continuation.hpp"
#include "snic/manifolds.hpp"
#include "snic/models/builtin.hpp"
#include "snic/models/expr.hpp"
#include "snic/normalform.hpp"

using namespace snic;
using namespace snic::nf;

namespace {

int failures = 0;

void report(const char* id, bool ok, const std::string& what, const std::string& detail) {
    std::printf("%s %-3s %s: %s\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

void note(const std::string& s) {
    std::printf("         %s\n", s.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

UnfoldingParams typeI() {
    UnfoldingParams p;
    p.rho = -1, p.lambda_s = -2, p.lambda_u = 1, p.delta = 0.1, p.eps = 0.1;
    return p;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ------------------------------------------------------------------------ 1

void criterion1() {
    std::mt19937 rng(20261016);
    std::uniform_real_distribution<double> U(0, 1);
    const double rtol = 1e-13, atol = 1e-300;
    double worst = 0;
    int n = 0;
    auto sn_case = [&](double mu1_lo, double mu1_hi) {
        for (int i = 0; i < 100; ++i) {
            UnfoldingParams p = typeI();
            p.mu1 = mu1_lo + (mu1_hi - mu1_lo) * U(rng);
            p.rho = -(0.5 + 1.5 * U(rng));
            double lo = p.mu1 > 0 ? std::sqrt(p.mu1) + 0.02 : p.mu1 == 0 ? 0.02 : -0.099;
            double x = lo + (p.delta - lo) * U(rng);
            auto m = t12(x, p);
            auto f = models::normalform_sn({{"mu1", p.mu1}, {"rho", p.rho}});
            SectionLine sec({p.delta, 0}, {1, 0});
            auto c = integrate_to_section(f, {x, p.delta}, sec, 1e5, rtol, atol);
            worst = std::max(worst, std::abs(c.state.y / m.x - 1));
            ++n;
        }
    };
    sn_case(-0.01, -1e-4);
    sn_case(0, 0);
    sn_case(1e-4, 0.0025);
    for (int i = 0; i < 100; ++i) {
        UnfoldingParams p = typeI();
        p.lambda_u = 0.5 + U(rng);
        p.lambda_s = -p.lambda_u * (1.2 + 2 * U(rng));
        double x = -p.eps + (p.eps - 1e-4) * U(rng);
        auto m = t34(x, p);
        auto f = models::linear_saddle({{"lambda_u", p.lambda_u}, {"lambda_s", p.lambda_s}});
        SectionLine sec({-p.eps, 0}, {-1, 0});
        auto c = integrate_to_section(f, {x, -p.eps}, sec, 1e5, rtol, atol);
        worst = std::max(worst, std::abs(c.state.y / m.x - 1));
        ++n;
    }
    report("1", worst <= 1e-6, "map vs ODE",
           fmt("%d random inputs (t12 at mu1<0, =0, >0; t34), worst relative error %.2e", n, worst));
}

// ------------------------------------------------------------------------ 2

void criterion2() {
    auto p = typeI();
    bool ok = true;
    std::string detail;
    for (double mu1 : {-0.1, 0.0, 0.0025}) {
        auto atlas = slice_atlas(mu1, {-0.05, 0.05, -0.05, 0.05, 101}, p);
        std::vector<char> keep(atlas.size()), agree(atlas.size());
        snic::nf::detail::parallel_for(atlas.size(), 0, [&](std::size_t k) {
            auto& nd = atlas[k];
            if (curve_distance(mu1, nd.mu2, nd.mu3, p) <= 1e-4) return;
            auto q = p.with_mu(mu1, nd.mu2, nd.mu3);
            bool po = false;
            if (mu1 >= 0) po = iterate_oracle(Section::Sigma3, nd.mu2, q).kind == IterateResult::Kind::converged;
            po = po || iterate_oracle(Section::Sigma1, nd.mu3, q).kind == IterateResult::Kind::converged;
            keep[k] = 1;
            agree[k] = po == has_periodic_orbit(nd.label.region);
        });
        int total = 0, good = 0;
        for (std::size_t k = 0; k < atlas.size(); ++k) total += keep[k], good += keep[k] && agree[k];
        double frac = total ? double(good) / total : 0;
        ok = ok && frac >= 0.99;
        detail += fmt("mu1=%g: %d/%d (%.2f%%)  ", mu1, good, total, 100 * frac);
    }
    report("2", ok, "regime atlas vs iteration", detail);
}

// ------------------------------------------------------------------------ 3

void criterion3() {
    double worst_h = 0, worst_r = 0;
    int nh = 0, nr = 0;
    for (double mu1 : {-0.01, 0.0, 0.0025}) {
        auto p = typeI();
        p.mu1 = mu1;
        double s = mu1 > 0 ? std::sqrt(mu1) : 0.0;
        double lo = mu1 < 0 ? -p.delta : s;
        for (int k = 1; k <= 1000; ++k) {
            double m3 = lo + (p.delta - lo) * k / 1001.0;
            double m2 = curve_homoclinic_p2(m3, p);
            auto r = return_map(Section::Sigma3, 0.0, p.with_mu(mu1, m2, m3));
            worst_h = std::max(worst_h, std::abs(r.x));
            ++nh;
        }
        for (int k = 1; k <= 1000 && mu1 >= 0; ++k) {
            double m2 = -p.eps * k / 1001.0;
            double m3 = curve_r1_zero(m2, p);
            auto r = return_map(Section::Sigma1, s, p.with_mu(mu1, m2, m3));
            worst_r = std::max(worst_r, std::abs(r.x - s));
            ++nr;
        }
    }
    report("3", worst_h < 1e-12 && worst_r < 1e-12, "curve exactness",
           fmt("%d homoclinic-p2 points max|R3(0)| = %.1e; %d r1-zero points (mu1 >= 0) max|R1(s)-s| = %.1e", nh,
               worst_h, nr, worst_r));
    // below mu1 = 0 the start of Sigma1 is not fixed by T12, so the formula is no zero set
    auto p = typeI();
    p.mu1 = -0.01;
    double m3 = curve_r1_zero(-0.02, p);
    note(fmt("mu1=-0.01: R1(0) on the formula curve = %.2e (T12(0) = %.2e)",
             return_map(Section::Sigma1, 0.0, p.with_mu(-0.01, -0.02, m3)).x, t12(0.0, p).x));
}

// ------------------------------------------------------------------------ 4

void criterion4() {
    auto v = polynomial_singular_limit();
    bool ok = true;
    double worst = 0, worst_det = 0;
    for (double eps : {0.01, 0.1, 1.0}) {
        auto f = models::polynomial({{"eps", eps}, {"a", 2.0 / 9}, {"b", 1.0}, {"c", -8.0 / 9}});
        auto all = find_all_equilibria(f, {-4, 4, -4, 4}, 12);
        bool sn = false, sd = false;
        for (auto& e : all) {
            double d1 = norm(e.position - Vec2{-2, -2}), d2 = norm(e.position - Vec2{2, 2});
            if (d1 < 1e-10) sn = true, worst = std::max(worst, d1), worst_det = std::max(worst_det, std::abs(e.jacobian.det()));
            if (d2 < 1e-10) sd = true, worst = std::max(worst, d2);
        }
        ok = ok && sn && sd;
    }
    ok = ok && worst_det < 1e-8;
    report("4", ok, "polynomial equilibria",
           fmt("(-2,-2) and (2,2) found for eps in {0.01,0.1,1}; max position error %.1e, |det J| at (-2,-2) %.1e "
               "(singular limit a=%.6f b=%.6f c=%.6f)",
               worst, worst_det, v[0], v[1], v[2]));
}

// ------------------------------------------------------------------------ 5

void criterion5() {
    auto model = models::polynomial({{"eps", 1.0}, {"a", 0.042}, {"b", 0.49575}, {"c", -0.85}});
    SniceroclinicSpec s;
    s.fold_guess = {-4.95, -2.275};
    s.saddle_guess = {4.5, 2.24};
    // at the reference (a, b) only c can move, and the fold pins it
    auto L = loop_gaps(model, s, -0.85);
    std::string pinned = fmt("reference (a,b): fold at c=%.7f, gaps into/out of fold %.3e / %.3e", L.fold.value,
                             L.into_fold.gap, L.out_of_fold.gap);
    auto r = locate_sniceroclinic(model, s);
    double a = r.values[1], b = r.values[2], c = r.values[0];
    double g = std::max(std::abs(r.residuals[1]), std::abs(r.residuals[2]));
    double da = std::abs(a - 0.042), db = std::abs(b - 0.49575), dc = std::abs(c + 0.85);
    bool ok = g < 1e-6 && da <= 1e-2 && db <= 1e-2 && dc <= 1e-2;
    report("5", ok, "polynomial loop",
           fmt("loop at a=%.6f b=%.6f c=%.6f, gaps %.1e; distance to (0.042, 0.49575, -0.85) = (%.1e, %.1e, %.1e), "
               "tolerance 1e-2",
               a, b, c, g, da, db, dc));
    note(pinned);
}

// ------------------------------------------------------------------------ 6

void criterion6() {
    auto t0 = std::chrono::steady_clock::now();
    auto f = models::polynomial({{"eps", 1.0}, {"a", 0.042}, {"b", 0.35}, {"c", -1.0}});
    auto branches = continue_equilibria(f, "c", {-2.5, 2.5});
    auto ev = all_events(branches);
    int sn = 0, hb = 0;
    std::string list;
    for (auto& e : ev) {
        (e.kind == EventKind::SN ? sn : hb)++;
        list += fmt("%s %.6f  ", to_string(e.kind), e.param);
    }
    PeriodicOptions po;
    po.seeds = {{0.5, 0.3}};
    SectionLine sec({0, 0}, {0, 1}, std::numeric_limits<double>::infinity(), 1);
    std::vector<PeriodicBranch> windows;
    try {
        windows = track_periodic(f, "c", {-2.5, 2.5}, sec, po);
        label_ends(f, "c", windows, branches);
    } catch (const NoCycle&) {
    }
    bool found = false;
    const CycleEnd *lo = nullptr, *hi = nullptr;
    for (auto& w : windows)
        if (w.ends[0].label == EndLabel::SNIC && w.ends[1].label == EndLabel::Homoclinic) {
            found = true, lo = &w.ends[0], hi = &w.ends[1];
        }
    auto end_ok = [](const CycleEnd* e) { return e && e->period > 100 && std::abs(e->lost_param - e->param) < 1e-3; };
    bool ok = sn == 3 && hb == 2 && found && end_ok(lo) && end_ok(hi);
    report("6", ok, "polynomial branch",
           fmt("%d fold + %d Hopf events; %zu cycle window(s); %.1f s", sn, hb, windows.size(), seconds_since(t0)));
    note(list);
    for (std::size_t k = 0; k < windows.size(); ++k)
        for (int j = 0; j < 2; ++j) {
            auto& e = windows[k].ends[j];
            note(fmt("window %zu %s end: c=%.13f  period %.1f  bracket %.1e  label %s%s", k, j ? "upper" : "lower",
                     e.param, e.period, std::abs(e.lost_param - e.param), to_string(e.label),
                     e.extended_precision ? "  (extended precision)" : ""));
        }
}

// ------------------------------------------------------------------------ 7

void criterion7() {
    auto f = models::gtpase();
    auto all = find_all_equilibria(f, {0, 6, 0, 2.5}, 40);
    const Equilibrium *saddle = nullptr, *snc = nullptr;
    std::string list;
    for (auto& e : all) {
        list += fmt("(%.4f, %.4f) %s [%.3g, %.3g]  ", e.position.x, e.position.y, std::string(to_string(e.cls)).c_str(),
                    e.eigen.values[0].real(), e.eigen.values[1].real());
        if (e.cls == EqClass::Saddle && !saddle) saddle = &e;
        if (e.cls == EqClass::SaddleNodeCandidate && !snc) snc = &e;
    }
    bool ok = false;
    std::string detail;
    if (saddle && snc) {
        double nz = std::abs(snc->lambda(0)) > std::abs(snc->lambda(1)) ? snc->lambda(0) : snc->lambda(1);
        double rho = nz > 0 ? 1 : -1;
        auto t = classify_loop_type(rho, saddle->lambda(0), saddle->lambda(1));
        ok = nz > 0 && t == LoopType::TypeIV;
        detail = fmt("saddle-node nonzero eigenvalue %.3g, saddle (%.3g, %.3g) -> %s", nz, saddle->lambda(0),
                     saddle->lambda(1), std::string(to_string(t)).c_str());
    } else {
        detail = fmt("%zu equilibria at the default parameters, %s saddle, %s near-saddle-node", all.size(),
                     saddle ? "a" : "no", snc ? "a" : "no");
    }
    report("7", ok, "GTPase Type IV", detail);
    note(list);
}

// ------------------------------------------------------------------------ 8

void criterion8() {
    struct Row {
        double rho, ls, lu;
        LoopType want;
    };
    std::vector<Row> rows{{-1, -2, 1, LoopType::TypeI},
                          {-1, -1, 2, LoopType::TypeII},
                          {1, -2, 1, LoopType::TypeIII},
                          {1, -1, 2, LoopType::TypeIV}};
    int hits = 0;
    for (auto& r : rows) hits += classify_loop_type(r.rho, r.ls, r.lu) == r.want;
    report("8", hits == 4, "loop type table", fmt("%d/4 sign quadrants match", hits));
}

// ------------------------------------------------------------------------ 9

void criterion9() {
    std::vector<std::string> bad;
    // boundary identities
    for (double mu1 : {-0.01, 0.0, 0.0025}) {
        auto p = typeI();
        p.mu1 = mu1;
        if (t12(p.delta, p).x != p.delta) bad.push_back("t12(delta)");
        if (t34(-p.eps, p).x != -p.eps) bad.push_back("t34(-eps)");
    }
    // monotonicity
    for (double mu1 : {-0.01, 0.0, 0.0025}) {
        auto p = typeI();
        p.mu1 = mu1;
        double lo = mu1 < 0 ? -0.0999 : std::sqrt(std::max(mu1, 0.0)) + 5e-3, prev = -1;
        for (int i = 0; i <= 1000; ++i) {
            double v = t12(std::min(p.delta, lo + (p.delta - lo) * i / 1000.0), p).x;
            if (v < prev) bad.push_back(fmt("t12 monotone mu1=%g", mu1));
            prev = v;
        }
    }
    {
        auto p = typeI();
        double prev = -1;
        for (int i = 0; i < 1000; ++i) {
            double v = t34(-p.eps + p.eps * i / 1000.0, p).x;
            if (v < prev) bad.push_back("t34 monotone");
            prev = v;
        }
    }
    // Type I contraction at the periodic orbit
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> U(0, 1);
    int sets = 0, tries = 0;
    double worst = 0;
    while (sets < 50 && tries < 5000) {
        ++tries;
        UnfoldingParams p;
        p.rho = -(0.5 + 1.5 * U(rng));
        p.lambda_u = 0.5 + 1.5 * U(rng);
        p.lambda_s = -p.lambda_u * (1.2 + 2 * U(rng));
        p.delta = p.eps = 0.1;
        p.a1 = -(0.5 + 1.5 * U(rng)), p.a2 = -(0.5 + 1.5 * U(rng));
        p = p.with_mu(0, -0.002 - 0.018 * U(rng), 0.002 + 0.018 * U(rng));
        if (!has_periodic_orbit(classify_regime(p).region)) continue;
        auto it = iterate_oracle(Section::Sigma3, p.mu2, p);
        if (it.kind != IterateResult::Kind::converged) continue;
        double h = 1e-7 * std::max(std::abs(it.x), 1e-4);
        auto a = return_map(Section::Sigma3, it.x + h, p), b = return_map(Section::Sigma3, it.x - h, p);
        if (!a.is_value() || !b.is_value()) continue;
        double d = std::abs((a.x - b.x) / (2 * h));
        worst = std::max(worst, d);
        if (!(d < 1)) bad.push_back(fmt("contraction %.3g", d));
        ++sets;
    }
    if (sets < 50) bad.push_back(fmt("only %d periodic parameter sets", sets));
    // parser twins
    double twin = 0;
    std::mt19937 r2(3);
    std::uniform_real_distribution<double> S(-3, 3);
    for (auto& name : models::builtin_names()) {
        auto f = models::builtin(name);
        auto t = models::builtin_text(name);
        auto g = expr::parse_field(t.x, t.y, f.params()).field(name);
        for (int i = 0; i < 200; ++i) {
            Vec2 x{S(r2), S(r2)};
            if (name == "gtpase") x = {std::abs(x.x), std::abs(x.y)};
            Vec2 a = f.eval(x), b = g.eval(x);
            twin = std::max(twin, norm(a - b) / std::max(1.0, norm(a)));
        }
    }
    if (!(twin <= 1e-12)) bad.push_back(fmt("parser twins %.1e", twin));
    // integrator order with fixed steps
    auto lin = models::linear_saddle();
    Vec2 exact{0.2 * std::exp(1.0), 0.5 * std::exp(-2.0)};
    auto err = [&](double h) {
        IntegratorOptions o;
        o.rtol = 1e6, o.atol = 1e6, o.h0 = h, o.hmax = h;
        return norm(integrate(lin, {0.2, 0.5}, 0, 1, o).back() - exact);
    };
    double ratio = err(0.1) / err(0.05);
    if (!(ratio > 16)) bad.push_back(fmt("order ratio %.1f", ratio));
    report("9", bad.empty(), "invariant suites",
           fmt("boundary identities, monotonicity, %d Type I contractions (max |R3'| %.2e), parser twins %.1e, "
               "step-halving error ratio %.1f",
               sets, worst, twin, ratio) +
               (bad.empty() ? "" : "; broken: " + bad.front()));
}

template <class F>
void guarded(const char* id, const char* what, F&& f) {
    try {
        f();
    } catch (const std::exception& e) {
        report(id, false, what, std::string("exception: ") + e.what());
    }
}

}  // namespace

int main() {
    guarded("1", "map vs ODE", criterion1);
    guarded("2", "regime atlas vs iteration", criterion2);
    guarded("3", "curve exactness", criterion3);
    guarded("4", "polynomial equilibria", criterion4);
    guarded("5", "polynomial loop", criterion5);
    guarded("6", "polynomial branch", criterion6);
    guarded("7", "GTPase Type IV", criterion7);
    guarded("8", "loop type table", criterion8);
    guarded("9", "invariant suites", criterion9);
    std::printf("%d of 9 criteria failed\n", failures);
    return failures ? 1 : 0;
}
