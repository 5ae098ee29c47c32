#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "snic/core.hpp"

namespace snic::nf {

struct UnfoldingParams {
    double mu1 = 0, mu2 = 0, mu3 = 0;
    double rho = -1;
    double lambda_s = -2, lambda_u = 1;
    double delta = 0.1, eps = 0.1;
    double a1 = -1, a2 = -1;

    void validate() const {
        auto fin = [](double v) { return std::isfinite(v); };
        if (!(fin(mu1) && fin(mu2) && fin(mu3) && fin(rho) && fin(lambda_s) && fin(lambda_u) &&
              fin(delta) && fin(eps) && fin(a1) && fin(a2)))
            throw ParameterError("non-finite unfolding parameter");
        if (!(delta > 0) || !(eps > 0)) throw ParameterError("delta and eps must be positive");
        if (!(lambda_s < 0 && lambda_u > 0)) throw ParameterError("need lambda_s < 0 < lambda_u");
        if (std::abs(lambda_s) == std::abs(lambda_u)) throw ParameterError("|lambda_s| == |lambda_u|");
        if (rho == 0) throw ParameterError("rho must be nonzero");
        if (mu1 > 0 && !(std::sqrt(mu1) < delta)) throw ParameterError("sqrt(mu1) must lie below delta");
    }

    UnfoldingParams with_mu(double m1, double m2, double m3) const {
        UnfoldingParams q = *this;
        q.mu1 = m1, q.mu2 = m2, q.mu3 = m3;
        return q;
    }
};

enum class LoopType { TypeI, TypeII, TypeIII, TypeIV };

enum class Region {
    NonCentralSNICeroclinic,
    HeteroclinicLoop,
    HeteroclinicGamma1Only,
    NonCentralHetGamma2Only,
    CentralHetGamma2WithPO,
    CentralHeteroclinicLoop,
    HomoclinicP2,
    HomoclinicP1,
    NonCentralSNIC,
    CentralSNIC,
    PeriodicOrbitBothSeparatrices,
    PeriodicOrbitGamma2Only,
    PeriodicOrbitGamma1Only,
    NoInvariantSet
};
inline constexpr int region_count = 14;

enum class Fate { tends_to_PO, leaves_U, forms_connection, absent };

struct RegimeLabel {
    Region region = Region::NoInvariantSet;
    Fate g1 = Fate::absent, g2 = Fate::absent;
    friend bool operator==(const RegimeLabel&, const RegimeLabel&) = default;
};

inline std::string_view to_string(LoopType t) {
    switch (t) {
    case LoopType::TypeI: return "TypeI";
    case LoopType::TypeII: return "TypeII";
    case LoopType::TypeIII: return "TypeIII";
    case LoopType::TypeIV: return "TypeIV";
    }
    return "?";
}

inline std::string_view to_string(Region r) {
    switch (r) {
    case Region::NonCentralSNICeroclinic: return "NonCentralSNICeroclinic";
    case Region::HeteroclinicLoop: return "HeteroclinicLoop";
    case Region::HeteroclinicGamma1Only: return "HeteroclinicGamma1Only";
    case Region::NonCentralHetGamma2Only: return "NonCentralHetGamma2Only";
    case Region::CentralHetGamma2WithPO: return "CentralHetGamma2WithPO";
    case Region::CentralHeteroclinicLoop: return "CentralHeteroclinicLoop";
    case Region::HomoclinicP2: return "HomoclinicP2";
    case Region::HomoclinicP1: return "HomoclinicP1";
    case Region::NonCentralSNIC: return "NonCentralSNIC";
    case Region::CentralSNIC: return "CentralSNIC";
    case Region::PeriodicOrbitBothSeparatrices: return "PeriodicOrbitBothSeparatrices";
    case Region::PeriodicOrbitGamma2Only: return "PeriodicOrbitGamma2Only";
    case Region::PeriodicOrbitGamma1Only: return "PeriodicOrbitGamma1Only";
    case Region::NoInvariantSet: return "NoInvariantSet";
    }
    return "?";
}

inline std::string_view to_string(Fate f) {
    switch (f) {
    case Fate::tends_to_PO: return "tends_to_PO";
    case Fate::leaves_U: return "leaves_U";
    case Fate::forms_connection: return "forms_connection";
    case Fate::absent: return "absent";
    }
    return "?";
}

// regions that carry an attracting periodic orbit
inline bool has_periodic_orbit(Region r) {
    switch (r) {
    case Region::PeriodicOrbitBothSeparatrices:
    case Region::PeriodicOrbitGamma2Only:
    case Region::PeriodicOrbitGamma1Only:
    case Region::CentralHetGamma2WithPO:
    case Region::HeteroclinicGamma1Only:
        return true;
    default:
        return false;
    }
}

struct MapOutcome {
    enum class Kind { value, escaped_left, escaped_right, asymptotic };
    Kind kind = Kind::value;
    // for asymptotic outcomes x holds the limit of the exit coordinate and tau is +inf
    double x = 0;
    double tau = 0;

    bool is_value() const { return kind == Kind::value; }
    bool escaped() const { return kind == Kind::escaped_left || kind == Kind::escaped_right; }
    static MapOutcome value(double x, double tau) { return {Kind::value, x, tau}; }
    static MapOutcome left() { return {Kind::escaped_left, 0, 0}; }
    static MapOutcome right() { return {Kind::escaped_right, 0, 0}; }
    static MapOutcome limit(double x) { return {Kind::asymptotic, x, std::numeric_limits<double>::infinity()}; }
};

inline constexpr double mu1_zero_switch = 1e-14;

namespace detail {

inline bool near(double a, double b) {
    return std::abs(a - b) <= 4 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b));
}

// T12 on the closed interval [-delta, delta], no domain checks
inline MapOutcome t12_raw(double x, const UnfoldingParams& p) {
    const double d = p.delta;
    if (x == d) return MapOutcome::value(d, 0);
    double tau;
    if (std::abs(p.mu1) < mu1_zero_switch) {
        if (x == 0) return MapOutcome::limit(0);
        if (x < 0) return MapOutcome::left();
        tau = 1 / x - 1 / d;
    } else if (p.mu1 < 0) {
        double s = std::sqrt(-p.mu1);
        tau = (std::atan(d / s) - std::atan(x / s)) / s;
    } else {
        double s = std::sqrt(p.mu1);
        if (near(x, s)) return MapOutcome::limit(0);
        if (x < s) return MapOutcome::left();
        // log|(d-s)/(d+s)| - log|(x-s)/(x+s)| written as one ratio
        tau = std::log(((d - s) * (x + s)) / ((d + s) * (x - s))) / (2 * s);
    }
    return MapOutcome::value(d * std::exp(p.rho * tau), tau);
}

inline MapOutcome t34_raw(double x, const UnfoldingParams& p) {
    const double e = p.eps;
    if (x == -e) return MapOutcome::value(-e, 0);
    if (x == 0) return MapOutcome::limit(0);
    if (x > 0) return MapOutcome::right();
    double r = -p.lambda_s / p.lambda_u;
    double v = -std::pow(e, 1 - r) * std::pow(std::abs(x), r);
    double tau = std::log(e / std::abs(x)) / p.lambda_u;
    return MapOutcome::value(v, tau);
}

// entry rules onto the sections used inside the compositions
inline MapOutcome enter_sigma1(double x, const UnfoldingParams& p) {
    const double d = p.delta;
    if (x >= d) x = d;
    if (x <= -d) {
        if (p.mu1 < 0 && std::abs(p.mu1) >= mu1_zero_switch) x = -d;
        else return MapOutcome::left();
    }
    return t12_raw(x, p);
}

inline MapOutcome enter_sigma3(double x, const UnfoldingParams& p) {
    const double e = p.eps;
    if (x >= e) return MapOutcome::right();
    if (x <= -e) x = -e;
    return t34_raw(x, p);
}

}  // namespace detail

inline MapOutcome t12(double x, const UnfoldingParams& p) {
    p.validate();
    if (!(x > -p.delta && x <= p.delta)) throw DomainError("t12: x outside (-delta, delta]");
    return detail::t12_raw(x, p);
}

inline MapOutcome t34(double x, const UnfoldingParams& p) {
    p.validate();
    if (!(x >= -p.eps && x < p.eps)) throw DomainError("t34: x outside [-eps, eps)");
    return detail::t34_raw(x, p);
}

inline double affine_global(double x, double slope, double split) { return slope * x + split; }

enum class Section { Sigma1, Sigma3 };

inline std::string_view to_string(Section s) { return s == Section::Sigma1 ? "Sigma1" : "Sigma3"; }

namespace detail {

inline MapOutcome compose(Section sec, double x, const UnfoldingParams& p) {
    // Sigma1: T12, T23, T34, T41.  Sigma3: T34, T41, T12, T23
    bool asym = false;
    double tau = 0;
    double v = x;
    MapOutcome esc;
    auto local = [&](bool first_box) {
        MapOutcome o = first_box ? enter_sigma1(v, p) : enter_sigma3(v, p);
        if (o.escaped()) {
            esc = o;
            return false;
        }
        if (o.kind == MapOutcome::Kind::asymptotic) asym = true;
        else tau += o.tau;
        v = o.x;
        return true;
    };
    if (sec == Section::Sigma1) {
        if (!local(true)) return esc;
        v = affine_global(v, p.a1, p.mu2);
        if (!local(false)) return esc;
        v = affine_global(v, p.a2, p.mu3);
    } else {
        if (!local(false)) return esc;
        v = affine_global(v, p.a2, p.mu3);
        if (!local(true)) return esc;
        v = affine_global(v, p.a1, p.mu2);
    }
    // landing on the escape side of the start section means the orbit leaves the neighbourhood
    MapOutcome land = sec == Section::Sigma1 ? enter_sigma1(v, p) : enter_sigma3(v, p);
    if (land.escaped()) return land;
    return asym ? MapOutcome::limit(v) : MapOutcome::value(v, tau);
}

inline void check_admissible(Section sec, double x, const UnfoldingParams& p) {
    if (sec == Section::Sigma1) {
        if (!(x > -p.delta && x <= p.delta)) throw DomainError("return_map: x outside Sigma1");
    } else {
        if (!(x >= -p.eps && x < p.eps)) throw DomainError("return_map: x outside Sigma3");
    }
}

}  // namespace detail

inline MapOutcome return_map(Section sec, double x, const UnfoldingParams& p) {
    p.validate();
    detail::check_admissible(sec, x, p);
    return detail::compose(sec, x, p);
}

struct FixedPoint {
    double x = 0;
    double derivative = 0;
};

inline std::vector<FixedPoint> fixed_points(Section sec, const UnfoldingParams& p, int grid = 10000) {
    p.validate();
    double lo, hi;
    if (sec == Section::Sigma1) {
        hi = p.delta;
        if (p.mu1 < 0 && std::abs(p.mu1) >= mu1_zero_switch) lo = -p.delta;
        else lo = p.mu1 > 0 ? std::sqrt(p.mu1) : 0.0;
    } else {
        lo = -p.eps;
        hi = 0;  // R3 escapes for x > 0
    }
    auto R = [&](double x, bool& ok) {
        MapOutcome o = detail::compose(sec, x, p);
        ok = !o.escaped();
        return o.x;
    };
    auto g = [&](double x, bool& ok) {
        double r = R(x, ok);
        return ok ? r - x : 0.0;
    };
    auto deriv = [&](double x) {
        double h = 1e-7 * std::max(std::abs(x), 1e-3);
        double xp = std::min(x + h, hi), xm = std::max(x - h, lo);
        bool okp, okm, ok0;
        double fp = R(xp, okp), fm = R(xm, okm), f0 = R(x, ok0);
        if (okp && okm && xp > xm) return (fp - fm) / (xp - xm);
        if (okp && xp > x) return (fp - f0) / (xp - x);
        if (okm && xm < x) return (f0 - fm) / (x - xm);
        return std::numeric_limits<double>::quiet_NaN();
    };

    std::vector<FixedPoint> out;
    auto push = [&](double x) {
        for (auto& q : out)
            if (std::abs(q.x - x) < 1e-12) return;
        out.push_back({x, deriv(x)});
    };
    double xprev = lo, gprev = 0;
    bool okprev = false;
    for (int i = 0; i <= grid; ++i) {
        double x = lo + (hi - lo) * i / grid;
        bool ok;
        double gx = g(x, ok);
        if (ok && gx == 0) push(x);
        if (ok && okprev && gprev != 0 && gx != 0 && (gprev < 0) != (gx < 0)) {
            double a = xprev, b = x, ga = gprev;
            for (int it = 0; it < 200; ++it) {
                double m = 0.5 * (a + b);
                if (m <= a || m >= b) break;
                bool okm;
                double gm = g(m, okm);
                if (!okm) break;
                if (std::abs(gm) < 1e-12 && b - a < 1e-14) {
                    a = b = m;
                    break;
                }
                if (gm == 0) {
                    a = b = m;
                    break;
                }
                if ((gm < 0) == (ga < 0)) a = m, ga = gm;
                else b = m;
            }
            push(0.5 * (a + b));
        }
        xprev = x, gprev = gx, okprev = ok;
    }
    std::sort(out.begin(), out.end(), [](auto& u, auto& v) { return u.x < v.x; });
    return out;
}

inline double curve_homoclinic_p2(double mu3, const UnfoldingParams& p) {
    p.validate();
    double s = p.mu1 > 0 ? std::sqrt(p.mu1) : 0.0;
    bool zero = std::abs(p.mu1) < mu1_zero_switch;
    if (!(mu3 <= p.delta)) throw RangeError("curve_homoclinic_p2: mu3 above delta");
    if (zero && !(mu3 > 0)) throw RangeError("curve_homoclinic_p2: needs mu3 > 0 at mu1 = 0");
    if (!zero && p.mu1 > 0 && !(mu3 > s)) throw RangeError("curve_homoclinic_p2: needs mu3 > sqrt(mu1)");
    if (!(mu3 > -p.delta)) throw RangeError("curve_homoclinic_p2: mu3 below -delta");
    MapOutcome o = detail::t12_raw(mu3, p);
    if (!o.is_value()) throw RangeError("curve_homoclinic_p2: T12 undefined");
    return -p.a1 * o.x;
}

inline double curve_r1_zero(double mu2, const UnfoldingParams& p) {
    p.validate();
    if (!(mu2 < 0)) throw RangeError("curve_r1_zero: needs mu2 < 0");
    if (!(mu2 >= -p.eps)) throw RangeError("curve_r1_zero: |mu2| must not exceed eps");
    MapOutcome o = detail::t34_raw(mu2, p);
    double s = p.mu1 > 0 ? std::sqrt(p.mu1) : 0.0;
    return -p.a2 * o.x + s;
}

inline LoopType classify_loop_type(double rho, double lambda_s, double lambda_u) {
    if (!(lambda_s < 0 && lambda_u > 0)) throw DegeneracyError("need lambda_s < 0 < lambda_u");
    if (rho == 0) throw DegeneracyError("rho = 0");
    double gap = std::abs(lambda_s) - std::abs(lambda_u);
    if (gap == 0) throw DegeneracyError("|lambda_s| = |lambda_u|");
    if (rho < 0) return gap > 0 ? LoopType::TypeI : LoopType::TypeII;
    return gap > 0 ? LoopType::TypeIII : LoopType::TypeIV;
}

namespace detail {

// curve values clamped onto the box, used by the classifier
inline double hp2_value(double mu3, const UnfoldingParams& p) {
    MapOutcome o = enter_sigma1(mu3, p);
    if (o.escaped()) return std::numeric_limits<double>::quiet_NaN();
    return -p.a1 * o.x;
}

inline double r1_value(double mu2, const UnfoldingParams& p) {
    MapOutcome o = enter_sigma3(mu2, p);
    double s = p.mu1 > 0 ? std::sqrt(p.mu1) : 0.0;
    return -p.a2 * o.x + s;
}

}  // namespace detail

inline RegimeLabel classify_regime(double mu1, double mu2, double mu3, const UnfoldingParams& base,
                                   double tol = 1e-9) {
    UnfoldingParams p = base.with_mu(mu1, mu2, mu3);
    p.validate();
    if (!(tol > 0)) throw ParameterError("tol must be positive");
    if (classify_loop_type(p.rho, p.lambda_s, p.lambda_u) != LoopType::TypeI)
        throw ParameterError("regime classification needs a Type I loop");
    if (!(p.a1 < 0 && p.a2 < 0)) throw ParameterError("regime classification needs a1 < 0 and a2 < 0");
    using R = Region;
    using F = Fate;

    auto hp2_side = [&](double m2, double m3) {
        double c = detail::hp2_value(m3, p);
        double d = m2 - c;
        if (std::abs(d) <= tol) return 0;
        return d < 0 ? -1 : 1;
    };

    if (mu1 < -tol) {
        int side = hp2_side(mu2, mu3);
        if (side == 0) return {R::HomoclinicP2, F::absent, F::forms_connection};
        if (side < 0) return {R::PeriodicOrbitGamma2Only, F::absent, F::tends_to_PO};
        return {R::NoInvariantSet, F::absent, F::leaves_U};
    }

    double s = mu1 > tol ? std::sqrt(mu1) : 0.0;
    bool on2 = std::abs(mu2) <= tol;
    bool on3 = std::abs(mu3 - s) <= tol;

    if (mu1 <= tol) {
        // saddle-node slice
        if (on2 && on3) return {R::NonCentralSNICeroclinic, F::forms_connection, F::forms_connection};
        if (on2) {
            if (mu3 > 0) return {R::HeteroclinicGamma1Only, F::forms_connection, F::tends_to_PO};
            return {R::CentralHeteroclinicLoop, F::forms_connection, F::forms_connection};
        }
        if (on3) {
            return {R::NonCentralHetGamma2Only, mu2 < 0 ? F::tends_to_PO : F::leaves_U, F::forms_connection};
        }
        if (mu2 < 0 && mu3 > 0) return {R::PeriodicOrbitBothSeparatrices, F::tends_to_PO, F::tends_to_PO};
        if (mu2 > 0 && mu3 > 0) {
            int side = hp2_side(mu2, mu3);
            if (side == 0) return {R::HomoclinicP2, F::leaves_U, F::forms_connection};
            if (side < 0) return {R::PeriodicOrbitGamma2Only, F::leaves_U, F::tends_to_PO};
            return {R::NoInvariantSet, F::leaves_U, F::leaves_U};
        }
        if (mu2 < 0) {
            double r = mu3 - detail::r1_value(mu2, p);
            if (std::abs(r) <= tol) return {R::NonCentralSNIC, F::forms_connection, F::forms_connection};
            if (r > 0) return {R::CentralHetGamma2WithPO, F::tends_to_PO, F::forms_connection};
            return {R::CentralSNIC, F::forms_connection, F::forms_connection};
        }
        return {R::NoInvariantSet, F::leaves_U, F::forms_connection};
    }

    // two hyperbolic saddles
    if (on2 && on3) return {R::HeteroclinicLoop, F::forms_connection, F::forms_connection};
    if (on2) return {R::HeteroclinicGamma1Only, F::forms_connection, mu3 > s ? F::tends_to_PO : F::leaves_U};
    if (on3) return {R::NonCentralHetGamma2Only, mu2 < 0 ? F::tends_to_PO : F::leaves_U, F::forms_connection};
    if (mu2 < 0 && mu3 > s) return {R::PeriodicOrbitBothSeparatrices, F::tends_to_PO, F::tends_to_PO};
    if (mu2 > 0 && mu3 > s) {
        int side = hp2_side(mu2, mu3);
        if (side == 0) return {R::HomoclinicP2, F::leaves_U, F::forms_connection};
        if (side < 0) return {R::PeriodicOrbitGamma2Only, F::leaves_U, F::tends_to_PO};
        return {R::NoInvariantSet, F::leaves_U, F::leaves_U};
    }
    if (mu2 < 0) {
        double r = mu3 - detail::r1_value(mu2, p);
        if (std::abs(r) <= tol) return {R::HomoclinicP1, F::forms_connection, F::leaves_U};
        if (r > 0) return {R::PeriodicOrbitGamma1Only, F::tends_to_PO, F::leaves_U};
        return {R::NoInvariantSet, F::leaves_U, F::leaves_U};
    }
    return {R::NoInvariantSet, F::leaves_U, F::leaves_U};
}

inline RegimeLabel classify_regime(const UnfoldingParams& p, double tol = 1e-9) {
    return classify_regime(p.mu1, p.mu2, p.mu3, p, tol);
}

struct IterateResult {
    enum class Kind { converged, escaped, asymptotic, undecided };
    Kind kind = Kind::undecided;
    double x = 0;
    int iterations = 0;
};

inline std::string_view to_string(IterateResult::Kind k) {
    switch (k) {
    case IterateResult::Kind::converged: return "converged";
    case IterateResult::Kind::escaped: return "escaped";
    case IterateResult::Kind::asymptotic: return "asymptotic_to_equilibrium";
    case IterateResult::Kind::undecided: return "undecided";
    }
    return "?";
}

inline IterateResult iterate_oracle(Section sec, double x0, const UnfoldingParams& p, int max_iter = 2000,
                                    double conv_tol = 1e-13) {
    p.validate();
    using K = IterateResult::Kind;
    double x = x0;
    // same entry rule as inside the compositions
    if (sec == Section::Sigma3) {
        if (x >= p.eps) return {K::escaped, x, 0};
        x = std::max(x, -p.eps);
    } else {
        x = std::min(x, p.delta);
    }
    for (int k = 0; k < max_iter; ++k) {
        MapOutcome o = detail::compose(sec, x, p);
        if (o.escaped()) return {K::escaped, x, k + 1};
        if (std::abs(o.x - x) < conv_tol) return {K::converged, o.x, k + 1};
        if (o.kind == MapOutcome::Kind::asymptotic) return {K::asymptotic, o.x, k + 1};
        x = o.x;
    }
    return {K::undecided, x, max_iter};
}

struct Grid2 {
    double lo2 = -0.05, hi2 = 0.05, lo3 = -0.05, hi3 = 0.05;
    int n = 101;
};

struct AtlasNode {
    double mu2, mu3;
    RegimeLabel label;
};

namespace detail {

template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += threads) body(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace detail

// row-major: mu3 varies slowest
inline std::vector<AtlasNode> slice_atlas(double mu1, const Grid2& g, const UnfoldingParams& p, double tol = 1e-9,
                                          unsigned threads = 0) {
    if (g.n < 2) throw ParameterError("slice_atlas needs n >= 2");
    std::size_t n = static_cast<std::size_t>(g.n);
    std::vector<AtlasNode> out(n * n);
    p.with_mu(mu1, 0, 0).validate();
    detail::parallel_for(n * n, threads, [&](std::size_t k) {
        std::size_t i = k % n, j = k / n;
        double m2 = g.lo2 + (g.hi2 - g.lo2) * double(i) / double(n - 1);
        double m3 = g.lo3 + (g.hi3 - g.lo3) * double(j) / double(n - 1);
        out[k] = {m2, m3, classify_regime(mu1, m2, m3, p, tol)};
    });
    return out;
}

struct SpherePoint {
    double mu1, mu2, mu3;
    double px, py;  // stereographic plane, mu1 < 0 inside the unit circle
    RegimeLabel label;
};

inline std::vector<SpherePoint> sphere_atlas(double radius, int n_samples, const UnfoldingParams& p,
                                             double tol = 1e-9, unsigned threads = 0) {
    if (!(radius > 0)) throw ParameterError("radius must be positive");
    if (!(radius < p.delta * p.delta)) throw ParameterError("radius must stay below delta^2");
    if (radius >= p.eps) throw ParameterError("radius must stay below eps");
    if (n_samples < 1) throw ParameterError("need at least one sample");
    const double golden = M_PI * (3 - std::sqrt(5.0));
    std::vector<SpherePoint> out(static_cast<std::size_t>(n_samples));
    detail::parallel_for(out.size(), threads, [&](std::size_t i) {
        double z = 1 - 2 * (double(i) + 0.5) / n_samples;
        double rxy = std::sqrt(std::max(0.0, 1 - z * z));
        double phi = golden * double(i);
        SpherePoint& q = out[i];
        q.mu1 = radius * z;
        q.mu2 = radius * rxy * std::cos(phi);
        q.mu3 = radius * rxy * std::sin(phi);
        q.px = q.mu2 / (radius - q.mu1);
        q.py = q.mu3 / (radius - q.mu1);
        q.label = classify_regime(q.mu1, q.mu2, q.mu3, p, tol);
    });
    return out;
}

// smallest distance in the (mu2, mu3) plane to the analytic curves of the slice
inline double curve_distance(double mu1, double mu2, double mu3, const UnfoldingParams& base, int samples = 4001,
                             double span = 0.06) {
    UnfoldingParams p = base.with_mu(mu1, 0, 0);
    double best = std::numeric_limits<double>::infinity();
    double s = mu1 > 0 ? std::sqrt(mu1) : 0.0;
    if (mu1 >= 0) {
        best = std::min(best, std::abs(mu2));
        best = std::min(best, std::abs(mu3 - s));
    }
    for (int k = 0; k < samples; ++k) {
        double t = double(k) / (samples - 1);
        // hp2 curve, parametrised by mu3
        double m3 = mu3 - span + 2 * span * t;
        bool valid = mu1 < 0 ? (m3 < p.delta && m3 > -p.delta) : (m3 > s && m3 <= p.delta);
        if (valid) {
            double c = detail::hp2_value(m3, p);
            if (std::isfinite(c)) best = std::min(best, std::hypot(mu2 - c, mu3 - m3));
        }
        if (mu1 >= 0) {
            double m2 = mu2 - span + 2 * span * t;
            if (m2 < 0 && m2 >= -p.eps) best = std::min(best, std::hypot(mu2 - m2, mu3 - detail::r1_value(m2, p)));
        }
    }
    return best;
}

}  // namespace snic::nf
