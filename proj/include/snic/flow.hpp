#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "snic/core.hpp"

namespace snic {

using Params = std::map<std::string, double>;
using ParamSchema = std::vector<std::pair<std::string, double>>;

// a field with its parameters already bound
struct Kernel {
    std::function<Vec2(const Vec2&)> f;
    std::function<Mat2(const Vec2&)> jac;  // optional
};

#ifdef SNIC_HAS_QUAD
using Vec2Q = Vec2T<quad>;
using QuadParams = std::map<std::string, quad>;
using QuadRhs = std::function<Vec2Q(const Vec2Q&)>;
using QuadFactory = std::function<QuadRhs(const QuadParams&)>;
#endif

class PlanarField {
public:
    using Factory = std::function<Kernel(const Params&)>;

    PlanarField() = default;
    PlanarField(std::string name, ParamSchema schema, Factory make, const Params& overrides = {})
        : name_(std::move(name)), schema_(std::move(schema)), make_(std::make_shared<Factory>(std::move(make))) {
        for (auto& [k, v] : schema_) params_[k] = v;
        for (auto& [k, v] : overrides) {
            if (!params_.count(k)) throw ParameterError("unknown parameter '" + k + "' for " + name_);
            params_[k] = v;
        }
        rebind();
    }

    const std::string& name() const { return name_; }
    const ParamSchema& schema() const { return schema_; }
    const Params& params() const { return params_; }
    bool has_param(const std::string& k) const { return params_.count(k) > 0; }
    double param(const std::string& k) const {
        auto it = params_.find(k);
        if (it == params_.end()) throw ParameterError("unknown parameter '" + k + "'");
        return it->second;
    }

    PlanarField with(const std::string& k, double v) const { return with(Params{{k, v}}); }
    PlanarField with(const Params& overrides) const {
        PlanarField g = *this;
        for (auto& [k, v] : overrides) {
            if (!g.params_.count(k)) throw ParameterError("unknown parameter '" + k + "' for " + name_);
            g.params_[k] = v;
        }
        g.rebind();
        return g;
    }

    // time reversal: x' = -f(x)
    PlanarField reversed() const {
        PlanarField g = *this;
        g.sign_ = -sign_;
        return g;
    }
    bool is_reversed() const { return sign_ < 0; }

    Vec2 operator()(const Vec2& x) const { return eval(x); }
    Vec2 eval(const Vec2& x) const {
        Vec2 v = k_.f(x);
        return sign_ > 0 ? v : -v;
    }
    // evaluation with an explicit parameter set; rebinds, so not for inner loops
    Vec2 eval(const Vec2& x, const Params& p) const { return with(p).eval(x); }

    bool has_jacobian() const { return static_cast<bool>(k_.jac); }
    Mat2 jacobian(const Vec2& x) const {
        if (!k_.jac) return jacobian_fd(x);
        Mat2 J = k_.jac(x);
        return sign_ > 0 ? J : J * -1.0;
    }
    // central differences, h = sqrt(eps) (1 + |x|)
    Mat2 jacobian_fd(const Vec2& x) const {
        const double h = std::sqrt(std::numeric_limits<double>::epsilon()) * (1 + norm(x));
        Vec2 fxp = eval({x.x + h, x.y}), fxm = eval({x.x - h, x.y});
        Vec2 fyp = eval({x.x, x.y + h}), fym = eval({x.x, x.y - h});
        return {(fxp.x - fxm.x) / (2 * h), (fyp.x - fym.x) / (2 * h), (fxp.y - fxm.y) / (2 * h),
                (fyp.y - fym.y) / (2 * h)};
    }

    // derivative of the field with respect to one parameter, central difference
    Vec2 param_derivative(const Vec2& x, const std::string& k) const {
        double v = param(k);
        double h = 1e-7 * (1 + std::abs(v));
        return (with(k, v + h).eval(x) - with(k, v - h).eval(x)) / (2 * h);
    }

#ifdef SNIC_HAS_QUAD
    bool has_quad() const { return static_cast<bool>(makeq_); }
    PlanarField with_quad(QuadFactory q) const {
        PlanarField g = *this;
        g.makeq_ = std::make_shared<QuadFactory>(std::move(q));
        return g;
    }
    // extended precision right-hand side; key, if given, is set to value exactly
    QuadRhs quad_rhs(const std::string& key = {}, quad value = 0) const {
        if (!makeq_) throw PreconditionError("field '" + name_ + "' has no extended precision form");
        QuadParams q;
        for (auto& [k, v] : params_) q[k] = v;
        if (!key.empty()) {
            if (!q.count(key)) throw ParameterError("unknown parameter '" + key + "'");
            q[key] = value;
        }
        QuadRhs f = (*makeq_)(q);
        if (sign_ > 0) return f;
        return [f](const Vec2Q& x) {
            Vec2Q v = f(x);
            return Vec2Q{-v.x, -v.y};
        };
    }
#else
    bool has_quad() const { return false; }
#endif

private:
    void rebind() {
        if (make_) k_ = (*make_)(params_);
    }

    std::string name_;
    ParamSchema schema_;
    Params params_;
    std::shared_ptr<Factory> make_;
#ifdef SNIC_HAS_QUAD
    std::shared_ptr<QuadFactory> makeq_;
#endif
    Kernel k_;
    int sign_ = 1;
};

enum class Termination { time_end, event, blowup, step_underflow };

inline const char* to_string(Termination t) {
    switch (t) {
    case Termination::time_end: return "time_end";
    case Termination::event: return "event";
    case Termination::blowup: return "blowup";
    case Termination::step_underflow: return "step_underflow";
    }
    return "?";
}

struct Sample {
    double t;
    Vec2 x;
};

struct Trajectory {
    std::vector<Sample> samples;
    double rtol = 0, atol = 0;
    Termination termination = Termination::time_end;

    const Vec2& back() const { return samples.back().x; }
    double t_end() const { return samples.back().t; }
};

struct IntegratorOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double h0 = 0;  // 0: automatic
    double hmax = 0;  // 0: unbounded
    double blowup = 1e8;
    long max_steps = 20'000'000;
};

// Dormand-Prince 5(4) with the 4th order continuous extension.
// Always integrates forward in its own time; reversed time is handled by the caller
// integrating field.reversed().
class DormandPrince {
public:
    DormandPrince(const PlanarField& f, Vec2 x0, double t0, IntegratorOptions opt = {})
        : f_(&f), opt_(opt), t_(t0), x_(x0) {
        if (!finite(x0)) throw NonFinite("non-finite initial state");
        k1_ = eval(x_);
        h_ = opt_.h0 > 0 ? opt_.h0 : initial_step();
    }

    double t() const { return t_; }
    const Vec2& x() const { return x_; }
    double t_prev() const { return tp_; }
    const Vec2& x_prev() const { return xp_; }
    double step_size() const { return h_; }
    long steps() const { return nsteps_; }
    std::optional<Termination> status() const { return status_; }

    // one accepted step, never past t_stop. false once terminated
    bool step(double t_stop) {
        if (status_) return false;
        if (t_ >= t_stop) {
            status_ = Termination::time_end;
            return false;
        }
        while (true) {
            double h = std::min(h_, t_stop - t_);
            if (opt_.hmax > 0) h = std::min(h, opt_.hmax);
            if (h <= 1e-14 * std::max(1.0, std::abs(t_))) {
                status_ = Termination::step_underflow;
                return false;
            }
            if (++nsteps_ > opt_.max_steps) throw NumericalError("integrator exceeded max_steps");
            attempt(h);
            double err = error_norm();
            if (!std::isfinite(err)) {
                h_ = 0.25 * h;
                continue;
            }
            if (err <= 1) {
                tp_ = t_, xp_ = x_, hp_ = h;
                kp_ = {k1_, k2_, k3_, k4_, k5_, k6_, k7_};
                t_ = (h == t_stop - t_) ? t_stop : t_ + h;
                x_ = y5_;
                k1_ = k7_;  // FSAL
                double fac = err == 0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
                h_ = h * fac;
                if (norm_inf(x_) > opt_.blowup) status_ = Termination::blowup;
                return true;
            }
            h_ = h * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
        }
    }

    void stop(Termination t) { status_ = t; }

    // dense output on the last accepted step
    Vec2 dense(double t) const {
        double th = (t - tp_) / hp_;
        double th1 = 1 - th;
        // Hairer's coefficients for DOPRI5
        static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                                d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                                d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
        const auto& k = kp_;
        Vec2 r1 = x_ - xp_;
        Vec2 r2 = hp_ * k[0] - r1;
        Vec2 r3 = r1 - hp_ * k[6] - r2;
        Vec2 r4 = hp_ * (d1 * k[0] + d3 * k[2] + d4 * k[3] + d5 * k[4] + d6 * k[5] + d7 * k[6]);
        return xp_ + th * (r1 + th1 * (r2 + th * (r3 + th1 * r4)));
    }

private:
    Vec2 eval(const Vec2& x) {
        Vec2 v = f_->eval(x);
        if (!finite(v)) throw NonFinite("non-finite field value");
        return v;
    }

    double initial_step() {
        auto sc = [&](double y) { return opt_.atol + opt_.rtol * std::abs(y); };
        double d0 = std::hypot(x_.x / sc(x_.x), x_.y / sc(x_.y)) / std::sqrt(2.0);
        double d1 = std::hypot(k1_.x / sc(x_.x), k1_.y / sc(x_.y)) / std::sqrt(2.0);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        Vec2 x1 = x_ + h0 * k1_;
        Vec2 f1 = f_->eval(x1);
        if (!finite(f1)) return h0;
        Vec2 df = f1 - k1_;
        double d2 = std::hypot(df.x / sc(x_.x), df.y / sc(x_.y)) / std::sqrt(2.0) / h0;
        double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / std::max(d1, d2), 0.2);
        return std::min(100 * h0, h1);
    }

    void attempt(double h) {
        static constexpr double a21 = 1.0 / 5, a31 = 3.0 / 40, a32 = 9.0 / 40, a41 = 44.0 / 45, a42 = -56.0 / 15,
                                a43 = 32.0 / 9, a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                                a54 = -212.0 / 729, a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                                a64 = 49.0 / 176, a65 = -5103.0 / 18656, b1 = 35.0 / 384, b3 = 500.0 / 1113,
                                b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84, e1 = 71.0 / 57600,
                                e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                                e7 = -1.0 / 40;
        const Vec2& y = x_;
        k2_ = f_->eval(y + h * (a21 * k1_));
        k3_ = f_->eval(y + h * (a31 * k1_ + a32 * k2_));
        k4_ = f_->eval(y + h * (a41 * k1_ + a42 * k2_ + a43 * k3_));
        k5_ = f_->eval(y + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_));
        k6_ = f_->eval(y + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_));
        y5_ = y + h * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
        k7_ = f_->eval(y5_);
        err_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
    }

    double error_norm() const {
        if (!finite(y5_) || !finite(k7_)) return std::numeric_limits<double>::infinity();
        double s0 = opt_.atol + opt_.rtol * std::max(std::abs(x_.x), std::abs(y5_.x));
        double s1 = opt_.atol + opt_.rtol * std::max(std::abs(x_.y), std::abs(y5_.y));
        double a = err_.x / s0, b = err_.y / s1;
        return std::sqrt(0.5 * (a * a + b * b));
    }

    const PlanarField* f_;
    IntegratorOptions opt_;
    double t_, tp_ = 0, hp_ = 0, h_ = 0;
    Vec2 x_, xp_;
    Vec2 k1_, k2_, k3_, k4_, k5_, k6_, k7_, y5_, err_;
    std::array<Vec2, 7> kp_{};
    long nsteps_ = 0;
    std::optional<Termination> status_;
};

inline Trajectory integrate(const PlanarField& field, Vec2 x0, double t0, double t1, IntegratorOptions opt = {}) {
    if (t1 == t0) throw ParameterError("integrate: empty time span");
    double dir = t1 > t0 ? 1.0 : -1.0;
    PlanarField g = dir > 0 ? field : field.reversed();
    DormandPrince dp(g, x0, 0.0, opt);
    Trajectory tr;
    tr.rtol = opt.rtol, tr.atol = opt.atol;
    tr.samples.push_back({t0, x0});
    double span = std::abs(t1 - t0);
    while (dp.step(span)) tr.samples.push_back({t0 + dir * dp.t(), dp.x()});
    if (!tr.samples.empty() && dp.status() == Termination::time_end) tr.samples.back().t = t1;
    tr.termination = dp.status().value_or(Termination::time_end);
    return tr;
}

inline Trajectory integrate(const PlanarField& field, Vec2 x0, std::pair<double, double> span, double rtol,
                            double atol) {
    IntegratorOptions o;
    o.rtol = rtol, o.atol = atol;
    return integrate(field, x0, span.first, span.second, o);
}

// oriented line segment through point with unit normal
struct SectionLine {
    Vec2 point;
    Vec2 normal;
    double half_width = std::numeric_limits<double>::infinity();
    int direction = 0;  // +1 crossing along normal, -1 against, 0 either

    SectionLine() = default;
    SectionLine(Vec2 p, Vec2 n, double hw = std::numeric_limits<double>::infinity(), int dir = 0)
        : point(p), normal(unit(n)), half_width(hw), direction(dir) {}

    double distance(const Vec2& x) const { return dot(x - point, normal); }
    // coordinate along the segment, tangent = normal rotated by +90 degrees
    double coordinate(const Vec2& x) const { return dot(x - point, perp(normal)); }
    bool within(const Vec2& x) const { return std::abs(coordinate(x)) <= half_width; }
};

struct SectionCrossing {
    SectionLine section;
    Vec2 state;
    double t = 0;
    int direction = 0;  // sign of normal velocity
};

namespace detail {

// crossing of the section inside the last accepted step of dp, if any
inline std::optional<SectionCrossing> locate_crossing(const DormandPrince& dp, const PlanarField& field,
                                                      const SectionLine& sec, double gprev, double gnow,
                                                      double tol = 1e-10) {
    if (!(gprev != 0 || gnow != 0)) return std::nullopt;
    if ((gprev < 0) == (gnow < 0) && gnow != 0) return std::nullopt;
    if (gprev == 0) return std::nullopt;  // leaving the section is not a crossing
    int dir = gnow > gprev ? 1 : -1;
    if (sec.direction != 0 && dir != sec.direction) return std::nullopt;
    double a = dp.t_prev(), b = dp.t(), ga = gprev, gb = gnow;
    Vec2 xm = dp.x();
    double tm = b;
    if (gb != 0) {
        // Illinois false position on the dense output
        int side = 0;
        for (int it = 0; it < 200; ++it) {
            tm = (a * gb - b * ga) / (gb - ga);
            if (!(tm > a && tm < b)) tm = 0.5 * (a + b);
            xm = dp.dense(tm);
            double gm = sec.distance(xm);
            if (std::abs(gm) < tol) break;
            if ((gm < 0) == (ga < 0)) {
                a = tm, ga = gm;
                if (side == -1) gb *= 0.5;
                side = -1;
            } else {
                b = tm, gb = gm;
                if (side == 1) ga *= 0.5;
                side = 1;
            }
            if (b - a < 1e-15 * std::max(1.0, std::abs(b))) break;
        }
        // pull the point onto the line along the normal; |move| < tol
        double gm = sec.distance(xm);
        if (std::abs(gm) >= tol) xm = xm - gm * sec.normal;
    }
    if (!sec.within(xm)) return std::nullopt;
    Vec2 v = field.eval(xm);
    int vdir = dot(v, sec.normal) > 0 ? 1 : -1;
    return SectionCrossing{sec, xm, tm, vdir};
}

}  // namespace detail

inline SectionCrossing integrate_to_section(const PlanarField& field, Vec2 x0, const SectionLine& sec,
                                            double max_time, IntegratorOptions opt = {}) {
    if (max_time == 0) throw ParameterError("integrate_to_section: zero max_time");
    double dir = max_time > 0 ? 1.0 : -1.0;
    PlanarField g = dir > 0 ? field : field.reversed();
    DormandPrince dp(g, x0, 0.0, opt);
    double gprev = sec.distance(x0);
    while (dp.step(std::abs(max_time))) {
        double gnow = sec.distance(dp.x());
        if (auto c = detail::locate_crossing(dp, g, sec, gprev, gnow)) {
            c->t *= dir;
            c->direction = dot(field.eval(c->state), sec.normal) > 0 ? 1 : -1;
            return *c;
        }
        gprev = gnow;
        if (dp.status() == Termination::blowup) break;
    }
    throw NoCrossing("no section crossing within max_time");
}

inline SectionCrossing integrate_to_section(const PlanarField& field, Vec2 x0, const SectionLine& sec,
                                            double max_time, double rtol, double atol) {
    IntegratorOptions o;
    o.rtol = rtol, o.atol = atol;
    return integrate_to_section(field, x0, sec, max_time, o);
}

#ifdef SNIC_HAS_QUAD
// classical RK4 with a fixed step in extended precision; fixed steps keep the
// discrete flow smooth in parameters, which matters near homoclinic orbits
template <class S, class F>
Vec2T<S> rk4_step(const F& f, const Vec2T<S>& x, S h) {
    Vec2T<S> k1 = f(x);
    Vec2T<S> k2 = f(x + (h / 2) * k1);
    Vec2T<S> k3 = f(x + (h / 2) * k2);
    Vec2T<S> k4 = f(x + h * k3);
    return x + (h / 6) * (k1 + S(2) * k2 + S(2) * k3 + k4);
}
#endif

// ---------------------------------------------------------------- equilibria

enum class EqClass { StableNode, UnstableNode, Saddle, StableFocus, UnstableFocus, SaddleNodeCandidate, Degenerate };

inline const char* to_string(EqClass c) {
    switch (c) {
    case EqClass::StableNode: return "StableNode";
    case EqClass::UnstableNode: return "UnstableNode";
    case EqClass::Saddle: return "Saddle";
    case EqClass::StableFocus: return "StableFocus";
    case EqClass::UnstableFocus: return "UnstableFocus";
    case EqClass::SaddleNodeCandidate: return "SaddleNodeCandidate";
    case EqClass::Degenerate: return "Degenerate";
    }
    return "?";
}

struct Equilibrium {
    Vec2 position;
    Mat2 jacobian;
    Eigen2 eigen;
    EqClass cls = EqClass::Degenerate;
    double residual = 0;
    int iterations = 0;
    bool pseudo_inverse_used = false;
    bool fold_polished = false;

    double lambda(int i) const { return eigen.values[i].real(); }
};

struct NewtonOptions {
    double tol = 1e-12;
    double tol_zero = 1e-6;
    int max_iter = 50;
    bool polish_folds = true;
};

inline EqClass classify(const Eigen2& e, const Mat2& J, double tol_zero) {
    double scale = std::max(J.norm(), 1e-300);
    if (!e.real) {
        double re = e.values[0].real();
        if (std::abs(re) <= tol_zero * scale) return EqClass::Degenerate;
        return re < 0 ? EqClass::StableFocus : EqClass::UnstableFocus;
    }
    double l1 = e.values[0].real(), l2 = e.values[1].real();
    bool z1 = std::abs(l1) <= tol_zero * scale, z2 = std::abs(l2) <= tol_zero * scale;
    if (z1 && z2) return EqClass::Degenerate;
    if (z1 || z2) return EqClass::SaddleNodeCandidate;
    if (l1 < 0 && l2 < 0) return EqClass::StableNode;
    if (l1 > 0 && l2 > 0) return EqClass::UnstableNode;
    return EqClass::Saddle;
}

inline Equilibrium describe_equilibrium(const PlanarField& field, Vec2 x, double tol_zero = 1e-6) {
    Equilibrium eq;
    eq.position = x;
    eq.jacobian = field.jacobian(x);
    eq.eigen = eigen(eq.jacobian);
    eq.cls = classify(eq.eigen, eq.jacobian, tol_zero);
    eq.residual = norm(field.eval(x));
    return eq;
}

namespace detail {

// Moore-Penrose step for a rank-deficient 2x2 system
inline Vec2 pinv_solve(const Mat2& J, const Vec2& r) {
    // J^T (J J^T + lambda I)^-1 r with a tiny ridge
    Mat2 JJt{J.a * J.a + J.b * J.b, J.a * J.c + J.b * J.d, J.a * J.c + J.b * J.d, J.c * J.c + J.d * J.d};
    double ridge = 1e-14 * std::max(1.0, JJt.trace());
    JJt.a += ridge, JJt.d += ridge;
    return J.transpose() * solve(JJt, r);
}

// put x onto the fold: range component of f and det J both zero
inline std::optional<Vec2> fold_polish(const PlanarField& field, Vec2 x, double tol) {
    Mat2 J0 = field.jacobian(x);
    Eigen2 et = eigen(J0.transpose());
    int k = std::abs(et.values[0].real()) <= std::abs(et.values[1].real()) ? 0 : 1;
    if (!et.real) return std::nullopt;
    Vec2 w = et.vectors[k];  // left null direction
    Vec2 wp = perp(w);
    auto G = [&](const Vec2& z) { return Vec2{dot(wp, field.eval(z)), field.jacobian(z).det()}; };
    Vec2 z = x;
    for (int it = 0; it < 30; ++it) {
        Vec2 g = G(z);
        double h = 1e-7 * (1 + norm(z));
        Vec2 gx = (G({z.x + h, z.y}) - G({z.x - h, z.y})) / (2 * h);
        Vec2 gy = (G({z.x, z.y + h}) - G({z.x, z.y - h})) / (2 * h);
        Mat2 D{gx.x, gy.x, gx.y, gy.y};
        if (D.det() == 0) return std::nullopt;
        Vec2 dz = solve(D, g);
        z -= dz;
        if (!finite(z)) return std::nullopt;
        if (norm(dz) < 1e-15 * (1 + norm(z))) break;
    }
    if (norm(field.eval(z)) < tol && norm(z - x) < 1e-4 * (1 + norm(x))) return z;
    return std::nullopt;
}

}  // namespace detail

inline Equilibrium find_equilibrium(const PlanarField& field, Vec2 guess, NewtonOptions opt = {}) {
    if (!finite(guess)) throw ParameterError("find_equilibrium: non-finite guess");
    Vec2 x = guess;
    Vec2 f = field.eval(x);
    bool pinv = false;
    int it = 0;
    for (; it < opt.max_iter && norm(f) >= opt.tol; ++it) {
        Mat2 J = field.jacobian(x);
        Vec2 dx;
        double det = J.det();
        if (!std::isfinite(det) || std::abs(det) <= 1e-13 * std::max(1e-300, J.norm() * J.norm())) {
            dx = detail::pinv_solve(J, f);
            pinv = true;
        } else {
            dx = solve(J, f);
        }
        // damping: halve until the residual decreases
        double lam = 1;
        double n0 = norm(f);
        Vec2 xn = x - dx, fn = field.eval(xn);
        while (!(finite(fn) && norm(fn) < n0) && lam > 1e-4) {
            lam *= 0.5;
            xn = x - lam * dx;
            fn = field.eval(xn);
        }
        if (!finite(fn)) throw NewtonFailure("find_equilibrium: non-finite iterate");
        if (norm(fn) >= n0 && norm(lam * dx) < 1e-16 * (1 + norm(x))) break;
        x = xn, f = fn;
    }
    // certificate recomputed from the field, not taken from the loop
    double res = norm(field.eval(x));
    if (!(res < opt.tol)) throw NewtonFailure("find_equilibrium: no convergence (residual " + std::to_string(res) + ")");
    Equilibrium eq = describe_equilibrium(field, x, opt.tol_zero);
    eq.iterations = it;
    eq.pseudo_inverse_used = pinv;
    if (opt.polish_folds && eq.cls == EqClass::SaddleNodeCandidate) {
        if (auto z = detail::fold_polish(field, x, opt.tol)) {
            int its = eq.iterations;
            eq = describe_equilibrium(field, *z, opt.tol_zero);
            eq.iterations = its;
            eq.pseudo_inverse_used = pinv;
            eq.fold_polished = true;
        }
    }
    return eq;
}

struct Box {
    double x0, x1, y0, y1;
    bool contains(const Vec2& p, double pad = 0) const {
        return p.x >= x0 - pad && p.x <= x1 + pad && p.y >= y0 - pad && p.y <= y1 + pad;
    }
};

inline std::vector<Equilibrium> find_all_equilibria(const PlanarField& field, const Box& box, int grid_n = 20,
                                                    NewtonOptions opt = {}) {
    if (!(std::isfinite(box.x0) && std::isfinite(box.x1) && std::isfinite(box.y0) && std::isfinite(box.y1)))
        throw ParameterError("find_all_equilibria: box must be finite");
    if (grid_n < 1) throw ParameterError("find_all_equilibria: grid_n must be positive");
    std::vector<Equilibrium> out;
    double pad = 1e-9 * (1 + std::max(std::abs(box.x1 - box.x0), std::abs(box.y1 - box.y0)));
    for (int i = 0; i < grid_n; ++i)
        for (int j = 0; j < grid_n; ++j) {
            double sx = grid_n == 1 ? 0.5 : double(i) / (grid_n - 1);
            double sy = grid_n == 1 ? 0.5 : double(j) / (grid_n - 1);
            Vec2 seed{box.x0 + (box.x1 - box.x0) * sx, box.y0 + (box.y1 - box.y0) * sy};
            Equilibrium eq;
            try {
                eq = find_equilibrium(field, seed, opt);
            } catch (const NumericalError&) {
                continue;
            }
            if (!box.contains(eq.position, pad)) continue;
            bool dup = false;
            for (auto& e : out)
                if (norm(e.position - eq.position) < 1e-8) {
                    dup = true;
                    if (eq.residual < e.residual && !e.fold_polished) e = eq;
                    break;
                }
            if (!dup) out.push_back(eq);
        }
    std::sort(out.begin(), out.end(), [](const Equilibrium& a, const Equilibrium& b) {
        if (a.position.x != b.position.x) return a.position.x < b.position.x;
        return a.position.y < b.position.y;
    });
    return out;
}

}  // namespace snic
