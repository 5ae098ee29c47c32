#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

#if defined(__SIZEOF_FLOAT128__) && !defined(SNIC_NO_QUAD)
#define SNIC_HAS_QUAD 1
#endif

namespace snic {

#ifdef SNIC_HAS_QUAD
using quad = __float128;
#endif

// error hierarchy; the cli maps these onto exit codes
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DomainError : Error {
    using Error::Error;
};
struct ParameterError : Error {
    using Error::Error;
};
struct RangeError : Error {
    using Error::Error;
};
struct DegeneracyError : Error {
    using Error::Error;
};
struct NumericalError : Error {
    using Error::Error;
};
struct StepUnderflow : NumericalError {
    using NumericalError::NumericalError;
};
struct NonFinite : NumericalError {
    using NumericalError::NumericalError;
};
struct NoCrossing : NumericalError {
    using NumericalError::NumericalError;
};
struct NewtonFailure : NumericalError {
    using NumericalError::NumericalError;
};
struct BracketError : NumericalError {
    using NumericalError::NumericalError;
};
struct ManifoldMiss : NumericalError {
    using NumericalError::NumericalError;
};
struct NoCycle : NumericalError {
    using NumericalError::NumericalError;
};
struct AmbiguityError : NumericalError {
    using NumericalError::NumericalError;
};
struct PreconditionError : Error {
    using Error::Error;
};

class SyntaxError : public Error {
public:
    SyntaxError(const std::string& what, std::size_t pos)
        : Error(what + " at offset " + std::to_string(pos)), pos_(pos) {}
    std::size_t position() const { return pos_; }

private:
    std::size_t pos_;
};

template <class S>
struct Vec2T {
    S x{}, y{};

    constexpr Vec2T() = default;
    constexpr Vec2T(S x_, S y_) : x(x_), y(y_) {}
    template <class U>
    explicit constexpr Vec2T(const Vec2T<U>& o) : x(S(o.x)), y(S(o.y)) {}

    constexpr S& operator[](int i) { return i == 0 ? x : y; }
    constexpr const S& operator[](int i) const { return i == 0 ? x : y; }

    constexpr Vec2T& operator+=(const Vec2T& o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2T& operator-=(const Vec2T& o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2T& operator*=(S s) { x *= s; y *= s; return *this; }
    friend constexpr Vec2T operator+(Vec2T a, const Vec2T& b) { return a += b; }
    friend constexpr Vec2T operator-(Vec2T a, const Vec2T& b) { return a -= b; }
    friend constexpr Vec2T operator-(const Vec2T& a) { return {-a.x, -a.y}; }
    friend constexpr Vec2T operator*(S s, Vec2T a) { return a *= s; }
    friend constexpr Vec2T operator*(Vec2T a, S s) { return a *= s; }
    friend constexpr Vec2T operator/(Vec2T a, S s) { return {a.x / s, a.y / s}; }
    friend constexpr bool operator==(const Vec2T&, const Vec2T&) = default;
};

using Vec2 = Vec2T<double>;

template <class S>
constexpr S dot(const Vec2T<S>& a, const Vec2T<S>& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
inline double norm_inf(const Vec2& a) { return std::max(std::abs(a.x), std::abs(a.y)); }
inline Vec2 perp(const Vec2& a) { return {-a.y, a.x}; }
inline Vec2 unit(const Vec2& a) {
    double n = norm(a);
    return n > 0 ? a / n : a;
}
inline bool finite(const Vec2& a) { return std::isfinite(a.x) && std::isfinite(a.y); }

// row-major 2x2
struct Mat2 {
    double a = 0, b = 0, c = 0, d = 0;

    double det() const { return a * d - b * c; }
    double trace() const { return a + d; }
    double norm() const { return std::sqrt(a * a + b * b + c * c + d * d); }
    Vec2 operator*(const Vec2& v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
    Mat2 operator-(const Mat2& o) const { return {a - o.a, b - o.b, c - o.c, d - o.d}; }
    Mat2 operator*(double s) const { return {a * s, b * s, c * s, d * s}; }
    Mat2 transpose() const { return {a, c, b, d}; }
    static Mat2 identity() { return {1, 0, 0, 1}; }
};

inline Vec2 solve(const Mat2& m, const Vec2& r) {
    double D = m.det();
    return {(m.d * r.x - m.b * r.y) / D, (-m.c * r.x + m.a * r.y) / D};
}

struct Eigen2 {
    std::array<std::complex<double>, 2> values;
    std::array<Vec2, 2> vectors;  // unit, meaningful only when real
    bool real = true;
};

// closed form; real eigenvalues sorted ascending
inline Eigen2 eigen(const Mat2& m) {
    Eigen2 e;
    double tr = m.trace(), det = m.det();
    double half = 0.5 * tr;
    // discriminant from the entries directly, avoids cancellation near repeated roots
    double hd = 0.5 * (m.a - m.d);
    double disc = hd * hd + m.b * m.c;
    if (disc < 0) {
        double im = std::sqrt(-disc);
        e.real = false;
        e.values = {std::complex<double>(half, -im), std::complex<double>(half, im)};
        e.vectors = {Vec2{}, Vec2{}};
        return e;
    }
    double s = std::sqrt(disc);
    double l1, l2;
    // stable pair: the larger-magnitude root first, the other from det
    double big = half + (half >= 0 ? s : -s);
    if (big != 0) {
        double small = det / big;
        l1 = std::min(big, small);
        l2 = std::max(big, small);
    } else {
        l1 = l2 = 0;
    }
    e.values = {std::complex<double>(l1), std::complex<double>(l2)};
    for (int i = 0; i < 2; ++i) {
        double l = i == 0 ? l1 : l2;
        // (A - l I) v = 0: pick the better conditioned row
        Vec2 r1{m.a - l, m.b}, r2{m.c, m.d - l};
        Vec2 r = snic::norm(r1) >= snic::norm(r2) ? r1 : r2;
        Vec2 v = snic::norm(r) > 0 ? unit(Vec2{-r.y, r.x}) : Vec2{i == 0 ? 1.0 : 0.0, i == 0 ? 0.0 : 1.0};
        e.vectors[i] = v;
    }
    return e;
}

}  // namespace snic
