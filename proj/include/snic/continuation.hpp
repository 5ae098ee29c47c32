#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "snic/flow.hpp"
#include "snic/manifolds.hpp"

namespace snic {

// ------------------------------------------------------------- equilibrium branches

struct BranchPoint {
    double param = 0;
    Vec2 state;
    std::array<std::complex<double>, 2> eigenvalues{};
    double test_fold = 0;  // det J
    double test_hopf = 0;  // trace J
    bool stable = false;
};

enum class EventKind { SN, HB };
inline const char* to_string(EventKind k) { return k == EventKind::SN ? "SN" : "HB"; }

struct BifurcationEvent {
    EventKind kind = EventKind::SN;
    double param = 0;
    Vec2 state;
    int branch = 0;
    double lambda_min = 0;  // smallest |Re lambda| at the event
};

struct BifurcationBranch {
    std::vector<BranchPoint> points;
    std::vector<BifurcationEvent> events;
    bool truncated = false;  // corrector gave up before leaving range or box
};

struct ContinuationOptions {
    Box box{-20, 20, -20, 20};
    int grid_n = 20;
    double h0 = 0.01;
    double hmin = 1e-8;
    double hmax = 0.05;
    double corrector_tol = 1e-11;
    int corrector_iter = 10;
    double event_tol = 1e-10;  // arclength width of the event bracket
    long max_points = 200000;
    NewtonOptions newton{};
};

namespace detail {

using Z = std::array<double, 3>;  // (x, y, param)

inline Z cross3(const Z& a, const Z& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double dot3(const Z& a, const Z& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm3(const Z& a) { return std::sqrt(dot3(a, a)); }

class ArcTracer {
public:
    ArcTracer(const PlanarField& f, std::string param, const ContinuationOptions& o)
        : f_(f), param_(std::move(param)), o_(o) {}

    Vec2 F(const Z& z) const { return at(z[2]).eval({z[0], z[1]}); }
    PlanarField at(double p) const { return f_.with(param_, p); }

    // rows of [J | f_p]
    std::array<Z, 2> A(const Z& z) const {
        PlanarField g = at(z[2]);
        Vec2 x{z[0], z[1]};
        Mat2 J = g.jacobian(x);
        Vec2 fp = g.param_derivative(x, param_);
        return {Z{J.a, J.b, fp.x}, Z{J.c, J.d, fp.y}};
    }

    Z tangent(const Z& z, const Z* prev) const {
        auto r = A(z);
        Z t = cross3(r[0], r[1]);
        double n = norm3(t);
        if (!(n > 0)) throw NumericalError("continuation: tangent is degenerate");
        for (auto& v : t) v /= n;
        if (prev && dot3(t, *prev) < 0)
            for (auto& v : t) v = -v;
        return t;
    }

    // Newton on {F = 0, t.(z - base) = s}
    std::optional<Z> correct(const Z& base, const Z& t, double s) const {
        Z z{base[0] + s * t[0], base[1] + s * t[1], base[2] + s * t[2]};
        for (int it = 0; it < o_.corrector_iter; ++it) {
            Vec2 f = F(z);
            double g = t[0] * (z[0] - base[0]) + t[1] * (z[1] - base[1]) + t[2] * (z[2] - base[2]) - s;
            if (!finite(f)) return std::nullopt;
            auto r = A(z);
            std::array<std::array<double, 3>, 3> M{{{r[0][0], r[0][1], r[0][2]}, {r[1][0], r[1][1], r[1][2]},
                                                     {t[0], t[1], t[2]}}};
            Z d;
            try {
                d = solve3(M, {f.x, f.y, g});
            } catch (const NumericalError&) {
                return std::nullopt;
            }
            for (int k = 0; k < 3; ++k) z[k] -= d[k];
            if (norm3(d) < o_.corrector_tol * (1 + norm3(z)) && norm(F(z)) < 1e3 * o_.corrector_tol) return z;
        }
        if (norm(F(z)) < 1e3 * o_.corrector_tol) return z;
        return std::nullopt;
    }

    // point with the parameter pinned
    std::optional<Vec2> at_param(Vec2 guess, double p) const {
        try {
            NewtonOptions no = o_.newton;
            no.polish_folds = false;
            return find_equilibrium(at(p), guess, no).position;
        } catch (const NumericalError&) {
            return std::nullopt;
        }
    }

    BranchPoint describe(const Z& z) const {
        PlanarField g = at(z[2]);
        Vec2 x{z[0], z[1]};
        Mat2 J = g.jacobian(x);
        Eigen2 e = eigen(J);
        BranchPoint b;
        b.param = z[2], b.state = x, b.eigenvalues = e.values;
        b.test_fold = J.det(), b.test_hopf = J.trace();
        b.stable = e.values[0].real() < 0 && e.values[1].real() < 0;
        return b;
    }

    const PlanarField& f_;
    std::string param_;
    const ContinuationOptions& o_;
};

struct HalfArc {
    std::vector<Z> z;
    std::vector<Z> t;
    bool truncated = false;
};

inline HalfArc trace_half(const ArcTracer& tr, const Z& start, Z t0, double lo, double hi,
                          const ContinuationOptions& o) {
    HalfArc out;
    out.z.push_back(start);
    out.t.push_back(t0);
    double h = o.h0;
    Z z = start, t = t0;
    while (static_cast<long>(out.z.size()) < o.max_points) {
        auto zn = tr.correct(z, t, h);
        bool ok = zn.has_value();
        Z tn{};
        if (ok) {
            try {
                tn = tr.tangent(*zn, &t);
            } catch (const NumericalError&) {
                ok = false;
            }
        }
        // reject sharp turns and long corrector jumps
        if (ok && (dot3(tn, t) < 0.98 || norm3(Z{(*zn)[0] - z[0], (*zn)[1] - z[1], (*zn)[2] - z[2]}) > 2 * h)) ok = false;
        if (!ok) {
            h *= 0.5;
            if (h < o.hmin) {
                out.truncated = true;
                return out;
            }
            continue;
        }
        double p = (*zn)[2];
        bool leaves = p < lo || p > hi;
        bool outside = !o.box.contains({(*zn)[0], (*zn)[1]});
        if (leaves) {
            double pb = p < lo ? lo : hi;
            double w = (pb - z[2]) / (p - z[2]);
            Vec2 g{z[0] + w * ((*zn)[0] - z[0]), z[1] + w * ((*zn)[1] - z[1])};
            if (auto x = tr.at_param(g, pb)) {
                Z zb{x->x, x->y, pb};
                out.z.push_back(zb);
                out.t.push_back(tr.tangent(zb, &t));
            }
            return out;
        }
        out.z.push_back(*zn);
        out.t.push_back(tn);
        if (outside) return out;
        z = *zn, t = tn;
        h = std::min(o.hmax, h * 1.3);
    }
    out.truncated = true;
    return out;
}

}  // namespace detail

inline std::vector<BifurcationBranch> continue_equilibria(const PlanarField& field, const std::string& param,
                                                          std::pair<double, double> range,
                                                          const ContinuationOptions& opt = {}) {
    if (!field.has_param(param)) throw ParameterError("unknown parameter '" + param + "'");
    if (!(std::isfinite(range.first) && std::isfinite(range.second)) || range.first == range.second)
        throw ParameterError("continuation range must be a non-empty finite interval");
    const double lo = std::min(range.first, range.second), hi = std::max(range.first, range.second);
    detail::ArcTracer tr(field, param, opt);

    std::vector<BifurcationBranch> out;
    std::vector<std::vector<detail::Z>> arcs, tangents;
    std::vector<double> hs;

    auto covered = [&](const Vec2& x, double p) {
        for (auto& arc : arcs)
            for (auto& z : arc)
                if (std::abs(z[2] - p) < 1e-9 && norm(Vec2{z[0], z[1]} - x) < 1e-6) return true;
        return false;
    };

    bool any_seed = false;
    for (double p0 : {range.first, range.second}) {
        auto seeds = find_all_equilibria(tr.at(p0), opt.box, opt.grid_n, opt.newton);
        for (auto& s : seeds) {
            any_seed = true;
            if (covered(s.position, p0)) continue;
            detail::Z z0{s.position.x, s.position.y, p0};
            detail::Z t0;
            try {
                t0 = tr.tangent(z0, nullptr);
            } catch (const NumericalError&) {
                continue;
            }
            detail::Z tm{-t0[0], -t0[1], -t0[2]};
            auto fwd = detail::trace_half(tr, z0, t0, lo, hi, opt);
            auto bwd = detail::trace_half(tr, z0, tm, lo, hi, opt);
            std::vector<detail::Z> arc, tan;
            for (std::size_t i = bwd.z.size(); i-- > 1;) {
                arc.push_back(bwd.z[i]);
                auto t = bwd.t[i];
                tan.push_back({-t[0], -t[1], -t[2]});
            }
            arc.insert(arc.end(), fwd.z.begin(), fwd.z.end());
            tan.insert(tan.end(), fwd.t.begin(), fwd.t.end());
            // orient so the branch starts at its lower parameter end
            if (arc.back()[2] < arc.front()[2]) {
                std::reverse(arc.begin(), arc.end());
                std::reverse(tan.begin(), tan.end());
                for (auto& t : tan)
                    for (auto& v : t) v = -v;
            }
            BifurcationBranch br;
            br.truncated = fwd.truncated || bwd.truncated;
            for (auto& z : arc) br.points.push_back(tr.describe(z));
            arcs.push_back(arc);
            tangents.push_back(tan);
            out.push_back(std::move(br));
        }
    }
    if (!any_seed) throw PreconditionError("continuation: no equilibrium at either end of the range");

    // events: sign changes between consecutive points, refined by bisection in arclength
    for (std::size_t b = 0; b < out.size(); ++b) {
        auto& br = out[b];
        const auto& arc = arcs[b];
        const auto& tan = tangents[b];
        for (std::size_t i = 0; i + 1 < arc.size(); ++i) {
            const BranchPoint &P = br.points[i], &Q = br.points[i + 1];
            bool sn = (P.test_fold < 0) != (Q.test_fold < 0);
            bool hb = (P.test_hopf < 0) != (Q.test_hopf < 0) && P.test_fold > 0 && Q.test_fold > 0;
            for (EventKind kind : {EventKind::SN, EventKind::HB}) {
                if ((kind == EventKind::SN && !sn) || (kind == EventKind::HB && !hb)) continue;
                auto test = [&](const BranchPoint& bp) { return kind == EventKind::SN ? bp.test_fold : bp.test_hopf; };
                const detail::Z& base = arc[i];
                const detail::Z& t = tan[i];
                double s0 = 0, s1 = detail::dot3(t, {arc[i + 1][0] - base[0], arc[i + 1][1] - base[1],
                                                      arc[i + 1][2] - base[2]});
                double g0 = test(P);
                BranchPoint at = Q;
                for (int it = 0; it < 200 && std::abs(s1 - s0) > opt.event_tol; ++it) {
                    double sm = 0.5 * (s0 + s1);
                    auto zm = tr.correct(base, t, sm);
                    if (!zm) break;
                    BranchPoint m = tr.describe(*zm);
                    if ((test(m) < 0) == (g0 < 0)) {
                        s0 = sm;
                    } else {
                        s1 = sm;
                        at = m;
                    }
                }
                BifurcationEvent ev;
                ev.kind = kind, ev.param = at.param, ev.state = at.state, ev.branch = static_cast<int>(b);
                ev.lambda_min = std::min(std::abs(at.eigenvalues[0].real()), std::abs(at.eigenvalues[1].real()));
                br.events.push_back(ev);
            }
        }
    }
    return out;
}

inline std::vector<BifurcationEvent> all_events(const std::vector<BifurcationBranch>& branches) {
    std::vector<BifurcationEvent> ev;
    for (auto& b : branches) ev.insert(ev.end(), b.events.begin(), b.events.end());
    std::sort(ev.begin(), ev.end(), [](const BifurcationEvent& a, const BifurcationEvent& b) {
        if (a.param != b.param) return a.param < b.param;
        return a.kind < b.kind;
    });
    return ev;
}

// equilibria of all branches at one parameter value, re-solved from scratch
inline std::vector<Equilibrium> equilibria_at(const PlanarField& field, const std::string& param, double p,
                                              const std::vector<BifurcationBranch>& branches) {
    std::vector<Equilibrium> out;
    PlanarField g = field.with(param, p);
    NewtonOptions no;
    no.polish_folds = false;
    for (auto& b : branches)
        for (std::size_t i = 0; i + 1 < b.points.size(); ++i) {
            double a = b.points[i].param, c = b.points[i + 1].param;
            if ((a - p) * (c - p) > 0) continue;
            double w = c == a ? 0 : (p - a) / (c - a);
            Vec2 guess = b.points[i].state + w * (b.points[i + 1].state - b.points[i].state);
            try {
                Equilibrium e = find_equilibrium(g, guess, no);
                bool dup = false;
                for (auto& o : out) dup |= norm(o.position - e.position) < 1e-8;
                if (!dup) out.push_back(e);
            } catch (const NumericalError&) {
            }
        }
    return out;
}

// ------------------------------------------------------------------ periodic orbits

struct CycleSample {
    double param = 0;
    Vec2 min, max;
    double period = 0;
    Vec2 section_point;
};

enum class EndLabel { SNIC, Homoclinic, Hopf, fold_of_cycles, open };
inline const char* to_string(EndLabel l) {
    switch (l) {
    case EndLabel::SNIC: return "SNIC";
    case EndLabel::Homoclinic: return "Homoclinic";
    case EndLabel::Hopf: return "Hopf";
    case EndLabel::fold_of_cycles: return "fold_of_cycles";
    case EndLabel::open: return "open";
    }
    return "?";
}

enum class LossReason { none, range_boundary, escape, equilibrium, no_return };
inline const char* to_string(LossReason r) {
    switch (r) {
    case LossReason::none: return "none";
    case LossReason::range_boundary: return "range_boundary";
    case LossReason::escape: return "escape";
    case LossReason::equilibrium: return "equilibrium";
    case LossReason::no_return: return "no_return";
    }
    return "?";
}

struct CycleEnd {
    double param = 0;       // last parameter with a cycle
    double lost_param = 0;  // first parameter without one
    double period = 0;
    Vec2 min, max;
    LossReason reason = LossReason::none;
    bool extended_precision = false;
    std::vector<Vec2> orbit;  // one period of the near-end cycle
    EndLabel label = EndLabel::open;
};

struct PeriodicBranch {
    std::vector<CycleSample> samples;  // sorted by parameter
    std::array<CycleEnd, 2> ends;      // lower and upper parameter end
    std::array<EndLabel, 2> endpoint_labels() const { return {ends[0].label, ends[1].label}; }
};

struct PeriodicOptions {
    int samples = 101;
    double transient_time = 1e4;
    int transient_returns = 50;
    int measure_returns = 3;
    double return_cap = 1e4;  // no section return for this long: cycle lost
    double escape = 100;      // |x| + |y| beyond this: escaped
    double eq_tol = 1e-12;    // |f| below this: settled on an equilibrium
    double rtol = 1e-10, atol = 1e-12;
    double settle_tol = 1e-4;  // section drift over the measured returns, relative to amplitude
    double end_width = 1e-9;
    double period_cap = 2000;
    double period_threshold = 100;
    bool extended_refine = true;
    double quad_step = 0.005;
    int quad_iterations = 110;
    double quad_width = 1e-32;  // relative; finer brackets only see rounding
    double quad_max_time = 4000;
    std::vector<Vec2> seeds;  // cold starts, after the unstable equilibria
    Box box{-20, 20, -20, 20};
};

struct CycleProbe {
    bool cycle = false;
    LossReason reason = LossReason::none;
    double period = 0;
    Vec2 min, max, section_point;
    std::vector<Vec2> orbit;
};

namespace detail {

inline CycleProbe probe_cycle(const PlanarField& f, Vec2 x0, const SectionLine& sec, const PeriodicOptions& o,
                              bool keep_orbit) {
    CycleProbe pr;
    IntegratorOptions io;
    io.rtol = o.rtol, io.atol = o.atol;
    const double t_stop = o.transient_time + (o.measure_returns + 2) * o.return_cap;
    DormandPrince dp(f, x0, 0, io);
    double g_prev = sec.distance(x0);
    double last_return = 0;
    int returns = 0, measured = -1;
    double t_measure0 = 0;
    Vec2 x_measure0;
    std::vector<Vec2> orbit;
    Vec2 mn{1e300, 1e300}, mx{-1e300, -1e300};
    try {
        while (dp.step(t_stop)) {
            Vec2 x = dp.x();
            if (std::abs(x.x) + std::abs(x.y) > o.escape) {
                pr.reason = LossReason::escape;
                return pr;
            }
            if (norm(f.eval(x)) < o.eq_tol) {
                pr.reason = LossReason::equilibrium;
                return pr;
            }
            double g = sec.distance(x);
            if (measured >= 0) {
                mn = {std::min(mn.x, x.x), std::min(mn.y, x.y)};
                mx = {std::max(mx.x, x.x), std::max(mx.y, x.y)};
                if (keep_orbit) orbit.push_back(x);
            }
            if (auto c = locate_crossing(dp, f, sec, g_prev, g)) {
                ++returns;
                last_return = c->t;
                pr.section_point = c->state;
                if (measured < 0 && (returns >= o.transient_returns || c->t >= o.transient_time)) {
                    measured = 0;
                    t_measure0 = c->t;
                    x_measure0 = c->state;
                    orbit.clear();
                    orbit.push_back(c->state);
                } else if (measured >= 0) {
                    ++measured;
                    if (measured == o.measure_returns - 1 && keep_orbit) {
                        orbit.clear();
                        orbit.push_back(c->state);
                    }
                    if (measured >= o.measure_returns &&
                        norm(c->state - x_measure0) > o.settle_tol * std::max(norm(mx - mn), 1e-300)) {
                        // still drifting: measure again
                        measured = 0;
                        t_measure0 = c->t;
                        x_measure0 = c->state;
                        mn = {1e300, 1e300}, mx = {-1e300, -1e300};
                        orbit.clear();
                        orbit.push_back(c->state);
                    } else if (measured >= o.measure_returns) {
                        pr.cycle = true;
                        pr.period = (c->t - t_measure0) / measured;
                        pr.min = mn, pr.max = mx;
                        if (keep_orbit) {
                            orbit.push_back(c->state);
                            pr.orbit = std::move(orbit);
                        }
                        return pr;
                    }
                }
            }
            g_prev = g;
            if (dp.t() - last_return > o.return_cap) {
                pr.reason = LossReason::no_return;
                return pr;
            }
        }
    } catch (const NumericalError&) {
        pr.reason = LossReason::escape;
        return pr;
    }
    pr.reason = dp.status() == Termination::blowup ? LossReason::escape : LossReason::no_return;
    return pr;
}

#ifdef SNIC_HAS_QUAD
struct QuadProbe {
    bool cycle = false;
    LossReason reason = LossReason::none;
    double period = 0;
    Vec2 min, max;
    Vec2Q section_point;
    std::vector<Vec2> orbit;
};

// fixed step RK4 in extended precision; section crossings by linear interpolation
inline QuadProbe probe_cycle_quad(const QuadRhs& f, Vec2Q x0, const SectionLine& sec, const PeriodicOptions& o,
                                  int transient, int measure, bool keep_orbit) {
    QuadProbe pr;
    const quad h = o.quad_step;
    const Vec2Q P{sec.point.x, sec.point.y}, N{sec.normal.x, sec.normal.y};
    auto dist = [&](const Vec2Q& x) { return (x.x - P.x) * N.x + (x.y - P.y) * N.y; };
    Vec2Q x = x0;
    quad t = 0, g_prev = dist(x), t0 = 0, last = 0;
    int returns = 0, measured = -1;
    Vec2 mn{1e300, 1e300}, mx{-1e300, -1e300};
    long step = 0;
    while (t < quad(o.quad_max_time)) {
        Vec2Q xn = rk4_step<quad>(f, x, h);
        ++step;
        quad g = dist(xn);
        double ax = static_cast<double>(xn.x), ay = static_cast<double>(xn.y);
        if (!(std::isfinite(ax) && std::isfinite(ay)) || std::abs(ax) + std::abs(ay) > o.escape) {
            pr.reason = LossReason::escape;
            return pr;
        }
        if (measured >= 0) {
            mn = {std::min(mn.x, ax), std::min(mn.y, ay)};
            mx = {std::max(mx.x, ax), std::max(mx.y, ay)};
            if (keep_orbit && step % 4 == 0) pr.orbit.push_back({ax, ay});
        }
        bool crossed = g_prev < 0 && g >= 0;
        if (sec.direction < 0) crossed = g_prev > 0 && g <= 0;
        if (sec.direction == 0) crossed = (g_prev < 0) != (g < 0) && g_prev != 0;
        if (crossed) {
            quad w = g_prev / (g_prev - g);
            quad tc = t + w * h;
            Vec2Q xc{x.x + w * (xn.x - x.x), x.y + w * (xn.y - x.y)};
            double cx = static_cast<double>(xc.x), cy = static_cast<double>(xc.y);
            if (sec.within({cx, cy})) {
                ++returns;
                last = tc;
                pr.section_point = xc;
                if (measured < 0 && returns >= transient) {
                    measured = 0;
                    t0 = tc;
                    pr.orbit.clear();
                } else if (measured >= 0 && ++measured >= measure) {
                    pr.cycle = true;
                    pr.period = static_cast<double>((tc - t0) / measured);
                    pr.min = mn, pr.max = mx;
                    return pr;
                } else if (measured >= 0 && keep_orbit) {
                    pr.orbit.clear();
                }
            }
        }
        if (t - last > quad(o.return_cap)) break;
        x = xn, t += h, g_prev = g;
    }
    pr.reason = LossReason::no_return;
    return pr;
}
#endif

}  // namespace detail

namespace detail {

// bisect between a cycle and its loss; returns the refined end and the cycle-side samples
inline CycleEnd refine_end(const PlanarField& field, const std::string& param, double p_cyc, const CycleProbe& cyc,
                           double p_lost, LossReason why, const SectionLine& sec, const PeriodicOptions& o,
                           std::vector<CycleSample>& extra) {
    CycleProbe best = cyc;
    double a = p_cyc, b = p_lost;
    LossReason reason = why;
    while (std::abs(b - a) > o.end_width && best.period < o.period_cap) {
        double m = 0.5 * (a + b);
        if (m == a || m == b) break;
        CycleProbe pr = probe_cycle(field.with(param, m), best.section_point, sec, o, false);
        if (pr.cycle) {
            a = m, best = pr;
            extra.push_back({m, pr.min, pr.max, pr.period, pr.section_point});
        } else {
            b = m, reason = pr.reason;
        }
    }
    CycleEnd end;
    end.reason = reason;
    CycleProbe fin = probe_cycle(field.with(param, a), best.section_point, sec, o, true);
    if (!fin.cycle) fin = best;
    end.param = a, end.lost_param = b, end.period = fin.period, end.min = fin.min, end.max = fin.max;
    end.orbit = fin.orbit;

#ifdef SNIC_HAS_QUAD
    // log-slow period growth: push the bracket below double resolution
    if (o.extended_refine && field.has_quad() && end.period < o.period_threshold) {
        const double dir = b > a ? 1.0 : -1.0;
        const double widen = 1e-6;
        quad qa = quad(a) - quad(dir * widen), qb = quad(b) + quad(dir * widen);
        Vec2Q seed{fin.section_point.x, fin.section_point.y};
        if (fin.section_point.x == 0 && fin.section_point.y == 0) seed = {best.section_point.x, best.section_point.y};
        auto run = [&](quad p, const Vec2Q& x0, bool keep) {
            return probe_cycle_quad(field.quad_rhs(param, p), x0, sec, o, 2, 3, keep);
        };
        QuadProbe at_a = run(qa, seed, false);
        QuadProbe at_b = run(qb, seed, false);
        if (at_a.cycle && !at_b.cycle) {
            QuadProbe good = at_a;
            LossReason qreason = at_b.reason;
            for (int it = 0; it < o.quad_iterations; ++it) {
                quad gap = qb - qa, scale = 1 + (qa < 0 ? -qa : qa);
                if ((gap < 0 ? -gap : gap) < quad(o.quad_width) * scale) break;
                quad m = (qa + qb) / 2;
                if (m == qa || m == qb) break;
                QuadProbe pr = run(m, good.section_point, false);
                if (pr.cycle) {
                    qa = m, good = pr;
                    extra.push_back({static_cast<double>(m), pr.min, pr.max, pr.period,
                                     {static_cast<double>(pr.section_point.x), static_cast<double>(pr.section_point.y)}});
                } else {
                    qb = m, qreason = pr.reason;
                }
            }
            QuadProbe last = run(qa, good.section_point, true);
            if (!last.cycle) last = good;
            end.param = static_cast<double>(qa);
            end.lost_param = static_cast<double>(qb);
            end.period = last.period, end.min = last.min, end.max = last.max;
            end.orbit = last.orbit;
            end.reason = qreason;
            end.extended_precision = true;
        }
    }
#endif
    return end;
}

}  // namespace detail

inline std::vector<PeriodicBranch> track_periodic(const PlanarField& field, const std::string& param,
                                                  std::pair<double, double> range, const SectionLine& sec,
                                                  const PeriodicOptions& o = {}) {
    if (!field.has_param(param)) throw ParameterError("unknown parameter '" + param + "'");
    if (!(std::isfinite(range.first) && std::isfinite(range.second)) || range.first == range.second)
        throw ParameterError("periodic tracking range must be a non-empty finite interval");
    if (o.samples < 2) throw ParameterError("need at least two parameter samples");
    const double lo = std::min(range.first, range.second), hi = std::max(range.first, range.second);

    auto cold = [&](double p) {
        PlanarField g = field.with(param, p);
        std::vector<Vec2> seeds;
        for (auto& e : find_all_equilibria(g, o.box, 12)) {
            if (e.cls != EqClass::UnstableFocus && e.cls != EqClass::UnstableNode) continue;
            Vec2 v = e.eigen.real ? e.eigen.vectors[1] : Vec2{1, 0};
            seeds.push_back(e.position + 1e-3 * v);
        }
        seeds.insert(seeds.end(), o.seeds.begin(), o.seeds.end());
        CycleProbe last;
        last.reason = LossReason::no_return;
        for (auto& s : seeds) {
            CycleProbe pr = detail::probe_cycle(g, s, sec, o, false);
            if (pr.cycle) return pr;
            last = pr;
        }
        return last;
    };

    std::vector<double> ps(o.samples);
    for (int k = 0; k < o.samples; ++k) ps[k] = lo + (hi - lo) * k / (o.samples - 1);
    std::vector<CycleProbe> probes(o.samples);
    for (int k = 0; k < o.samples; ++k) {
        if (k > 0 && probes[k - 1].cycle) {
            probes[k] = detail::probe_cycle(field.with(param, ps[k]), probes[k - 1].section_point, sec, o, false);
            if (probes[k].cycle) continue;
        }
        probes[k] = cold(ps[k]);
    }

    auto boundary_end = [](double p, const CycleProbe& pr) {
        CycleEnd e;
        e.param = e.lost_param = p;
        e.period = pr.period, e.min = pr.min, e.max = pr.max;
        e.reason = LossReason::range_boundary;
        return e;
    };

    std::vector<PeriodicBranch> out;
    int k = 0;
    while (k < o.samples) {
        if (!probes[k].cycle) {
            ++k;
            continue;
        }
        int j = k;
        while (j + 1 < o.samples && probes[j + 1].cycle) ++j;
        PeriodicBranch br;
        std::vector<CycleSample> lower, upper;
        if (k == 0) {
            br.ends[0] = boundary_end(ps[0], probes[0]);
        } else {
            br.ends[0] = detail::refine_end(field, param, ps[k], probes[k], ps[k - 1], probes[k - 1].reason, sec, o,
                                            lower);
        }
        if (j == o.samples - 1) {
            br.ends[1] = boundary_end(ps[j], probes[j]);
        } else {
            br.ends[1] = detail::refine_end(field, param, ps[j], probes[j], ps[j + 1], probes[j + 1].reason, sec, o,
                                            upper);
        }
        // refinement samples arrive in approach order; parameters may tie in double precision
        std::reverse(lower.begin(), lower.end());
        br.samples = std::move(lower);
        for (int i = k; i <= j; ++i)
            br.samples.push_back({ps[i], probes[i].min, probes[i].max, probes[i].period, probes[i].section_point});
        br.samples.insert(br.samples.end(), upper.begin(), upper.end());
        std::stable_sort(br.samples.begin(), br.samples.end(),
                         [](const CycleSample& a, const CycleSample& b) { return a.param < b.param; });
        std::erase_if(br.samples, [&](const CycleSample& c) {
            return c.param < br.ends[0].param || c.param > br.ends[1].param;
        });
        out.push_back(std::move(br));
        k = j + 1;
    }
    if (out.empty()) throw NoCycle("no attracting cycle found in the parameter range");
    return out;
}

// ------------------------------------------------------------ endpoint classification

struct EndClassOptions {
    double period_threshold = 100;
    double d_tol = 0.05;
    double fold_window = 1e-3;
    double hopf_window = 1e-2;
    double hopf_amplitude = 0.05;
};

inline double distance_to_polyline(const std::vector<Vec2>& pl, const Vec2& q) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pl.size(); ++i) {
        d = std::min(d, norm(pl[i] - q));
        if (i + 1 < pl.size()) {
            Vec2 s = pl[i + 1] - pl[i];
            double L2 = dot(s, s);
            if (L2 > 0) {
                double w = std::clamp(dot(q - pl[i], s) / L2, 0.0, 1.0);
                d = std::min(d, norm(pl[i] + w * s - q));
            }
        }
    }
    return d;
}

inline EndLabel classify_cycle_end(const PlanarField& field, const std::string& param, const CycleEnd& end,
                                   const std::vector<BifurcationBranch>& branches, const EndClassOptions& o = {}) {
    if (!(end.period > o.period_threshold))
        throw PreconditionError("cycle end has period " + std::to_string(end.period) + ", below the blow-up threshold");
    if (end.orbit.empty()) throw PreconditionError("cycle end carries no orbit");
    std::vector<Vec2> folds;
    for (auto& e : all_events(branches))
        if (e.kind == EventKind::SN && std::abs(e.param - end.param) < o.fold_window) folds.push_back(e.state);
    bool snic = false, hom = false;
    double d_fold = std::numeric_limits<double>::infinity(), d_saddle = d_fold;
    for (auto& q : folds) {
        double d = distance_to_polyline(end.orbit, q);
        d_fold = std::min(d_fold, d);
        snic |= d < o.d_tol;
    }
    for (double p : {end.param, end.lost_param}) {
        for (auto& e : equilibria_at(field, param, p, branches)) {
            if (e.cls != EqClass::Saddle) continue;
            bool partner = false;
            for (auto& q : folds) partner |= norm(e.position - q) < o.d_tol;
            if (partner) continue;
            double d = distance_to_polyline(end.orbit, e.position);
            d_saddle = std::min(d_saddle, d);
            hom |= d < o.d_tol;
        }
    }
    if (snic && hom)
        throw AmbiguityError("cycle end near both a fold (" + std::to_string(d_fold) + ") and a saddle (" +
                             std::to_string(d_saddle) + ")");
    if (snic) return EndLabel::SNIC;
    if (hom) return EndLabel::Homoclinic;
    return EndLabel::open;
}

// labels for both ends of every window
inline void label_ends(const PlanarField& field, const std::string& param, std::vector<PeriodicBranch>& windows,
                       const std::vector<BifurcationBranch>& branches, const EndClassOptions& o = {}) {
    auto events = all_events(branches);
    for (auto& w : windows)
        for (auto& e : w.ends) {
            if (e.reason == LossReason::range_boundary) {
                e.label = EndLabel::open;
                continue;
            }
            if (e.period > o.period_threshold) {
                try {
                    e.label = classify_cycle_end(field, param, e, branches, o);
                } catch (const AmbiguityError&) {
                    e.label = EndLabel::open;
                }
                continue;
            }
            double amp = norm(e.max - e.min);
            bool near_hb = false;
            for (auto& ev : events) near_hb |= ev.kind == EventKind::HB && std::abs(ev.param - e.param) < o.hopf_window;
            e.label = near_hb && amp < o.hopf_amplitude ? EndLabel::Hopf : EndLabel::fold_of_cycles;
        }
}

// ------------------------------------------------------------------- serialization

inline void write_branches_csv(std::ostream& os, const std::string& param,
                               const std::vector<BifurcationBranch>& branches) {
    char buf[512];
    os << "# schema: v1\n";
    os << "branch,index," << param << ",x,y,re1,im1,re2,im2,test_fold,test_hopf,stable\n";
    for (std::size_t b = 0; b < branches.size(); ++b)
        for (std::size_t i = 0; i < branches[b].points.size(); ++i) {
            auto& p = branches[b].points[i];
            std::snprintf(buf, sizeof buf, "%zu,%zu,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%d\n", b, i,
                          p.param, p.state.x, p.state.y, p.eigenvalues[0].real(), p.eigenvalues[0].imag(),
                          p.eigenvalues[1].real(), p.eigenvalues[1].imag(), p.test_fold, p.test_hopf,
                          p.stable ? 1 : 0);
            os << buf;
        }
}

inline void write_periodic_csv(std::ostream& os, const std::string& param, const std::vector<PeriodicBranch>& ws) {
    char buf[256];
    os << "# schema: v1\n";
    os << "window," << param << ",xmin,ymin,xmax,ymax,period\n";
    for (std::size_t w = 0; w < ws.size(); ++w)
        for (auto& s : ws[w].samples) {
            std::snprintf(buf, sizeof buf, "%zu,%.15g,%.12g,%.12g,%.12g,%.12g,%.12g\n", w, s.param, s.min.x, s.min.y,
                          s.max.x, s.max.y, s.period);
            os << buf;
        }
}

}  // namespace snic
