#pragma once

// Confluent hypergeometric functions and the harmonic function h of the
// Kolmogorov diffusion killed on {x <= 0}.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "kolmo/core.hpp"
#include "kolmo/quadrature.hpp"

namespace kolmo::specfun {

struct HypergeometricParams {
    double a;
    double c;
    double z;
};

/// Rising factorial (a)_s.
inline double pochhammer(double a, unsigned s) noexcept {
    double r = 1.0;
    for (unsigned k = 0; k < s; ++k) r *= a + k;
    return r;
}

namespace detail {

struct SeriesResult {
    double value;
    bool accurate;
};

// z^{-a} sum_s (-1)^s (a)_s (1+a-c)_s / (s! z^s), truncated before the
// smallest term.
inline SeriesResult tricomi_asymptotic(double a, double c, double z, double rel) {
    const double b = 1.0 + a - c;
    double term = 1.0, sum = 1.0;
    double smallest = 1.0;
    for (int s = 0; s < 400; ++s) {
        const double next = -term * (a + s) * (b + s) / ((s + 1.0) * z);
        if (std::abs(next) >= std::abs(term)) break;
        term = next;
        sum += term;
        smallest = std::abs(term);
        if (smallest <= 1e-17 * std::abs(sum)) break;
    }
    return {std::pow(z, -a) * sum, smallest <= rel * std::abs(sum)};
}

// Laplace representation with t = u^{1/a}:
// U(a,c,z) = 1/Gamma(a+1) int_0^inf exp(-z u^{1/a}) (1 + u^{1/a})^{c-a-1} du.
inline double tricomi_laplace(double a, double c, double z) {
    const double p = 1.0 / a;
    const double e = c - a - 1.0;
    auto f = [=](double u) {
        const double t = std::pow(u, p);
        return std::exp(-z * t) * std::pow(1.0 + t, e);
    };
    quad::QuadSpec spec;
    spec.rel_tol = 1e-13;
    spec.abs_tol = 1e-300;
    spec.max_subdivisions = 2000;
    spec.scale = std::pow(z, -a);
    const quad::QuadResult r = quad::integrate_1d(f, {0.0, quad::kInf}, spec);
    return r.value / std::tgamma(a + 1.0);
}

} // namespace detail

/// Tricomi's U(a, c, z) on the positive real axis, a > 0.
inline double tricomi_u(const HypergeometricParams& p) {
    if (!(p.z > 0.0)) throw DomainError("tricomi_u: z must be positive (got " + std::to_string(p.z) + ")");
    if (!(p.a > 0.0)) throw DomainError("tricomi_u: the Laplace representation needs a > 0");
    const auto asym = detail::tricomi_asymptotic(p.a, p.c, p.z, 1e-12);
    if (asym.accurate) return asym.value;
    return detail::tricomi_laplace(p.a, p.c, p.z);
}

/// First `terms` terms of the large-z series of U(a, c, z).
inline double tricomi_u_series(const HypergeometricParams& p, unsigned terms) {
    if (!(p.z > 0.0)) throw DomainError("tricomi_u_series: z must be positive");
    const double b = 1.0 + p.a - p.c;
    double term = 1.0, sum = 0.0;
    for (unsigned s = 0; s < terms; ++s) {
        sum += term;
        term *= -(p.a + s) * (b + s) / ((s + 1.0) * p.z);
    }
    return std::pow(p.z, -p.a) * sum;
}

/// V(a, c, z) = e^z U(c - a, c, -z), implemented for z < 0.
inline double confluent_v(const HypergeometricParams& p) {
    if (!(p.a > 0.0)) throw DomainError("confluent_v: a must be positive");
    if (!(p.z < 0.0)) throw DomainError("confluent_v: only z < 0 is supported on the real axis");
    return std::exp(p.z) * tricomi_u({p.c - p.a, p.c, -p.z});
}

inline constexpr double kA = 1.0 / 6.0;
inline constexpr double kC = 4.0 / 3.0;

/// g(0) = (2/9)^{-1/6} Gamma(1/3) / Gamma(1/6).
inline double g_at_zero() {
    return std::pow(2.0 / 9.0, -kA) * std::tgamma(1.0 / 3.0) / std::tgamma(1.0 / 6.0);
}

/// g(y) = h(1, y), from its U/V representation.
inline double g_boundary(double y) {
    if (!std::isfinite(y)) throw DomainError("g_boundary: y must be finite");
    if (y == 0.0) return g_at_zero();
    const double z = 2.0 / 9.0 * y * y * y;
    const double pre = std::pow(2.0 / 9.0, kA);
    if (y > 0.0) return pre * y * tricomi_u({kA, kC, z});
    return -pre * kA * y * confluent_v({kA, kC, z});
}

/// h(x, y) = x^{1/6} g(x^{-1/3} y) for x > 0.
inline double h_hypergeometric(State z) {
    if (!(z.t_coord > 0.0))
        throw DomainError("h_hypergeometric: x must be positive (h(0, .) = 0 is the caller's convention)");
    const double cx = std::cbrt(z.t_coord);
    return std::pow(z.t_coord, 1.0 / 6.0) * g_boundary(z.s_coord / cx);
}

/// h extended by zero to the closed half plane complement: h(x, y) = 0 for x <= 0.
inline double h_or_zero(State z) { return z.t_coord > 0.0 ? h_hypergeometric(z) : 0.0; }

namespace detail {

// log g on [-7, 7] at spacing 1/128; outside that range the series
// evaluation is already cheap.
class LogGTable {
public:
    static constexpr double lo = -7.0, hi = 7.0, step = 1.0 / 128.0;

    LogGTable() {
        const int n = static_cast<int>((hi - lo) / step) + 1;
        v_.resize(n + 2);
        for (int i = -1; i <= n; ++i) v_[i + 1] = std::log(g_boundary(lo + i * step));
    }

    // four-point Lagrange interpolation in log g
    double operator()(double y) const {
        const double r = (y - lo) / step;
        const int i = static_cast<int>(std::floor(r));
        const double f = r - i;
        const double* p = &v_[i + 1];
        const double a = p[-1], b = p[0], c = p[1], d = p[2];
        return b + 0.5 * f * (c - a + f * (2.0 * a - 5.0 * b + 4.0 * c - d + f * (3.0 * (b - c) + d - a)));
    }

    // derivative of the same interpolant
    double derivative(double y) const {
        const double r = (y - lo) / step;
        const int i = static_cast<int>(std::floor(r));
        const double f = r - i;
        const double* p = &v_[i + 1];
        const double a = p[-1], b = p[0], c = p[1], d = p[2];
        const double q1 = c - a, q2 = 2.0 * a - 5.0 * b + 4.0 * c - d, q3 = 3.0 * (b - c) + d - a;
        return 0.5 * (q1 + f * (2.0 * q2 + 3.0 * f * q3)) / step;
    }

private:
    std::vector<double> v_;
};

} // namespace detail

/// g from a cached interpolation table (relative error near 1e-9).
namespace detail {
inline const LogGTable& log_g_table() {
    static const LogGTable table;
    return table;
}
inline bool in_table(double y) { return y > LogGTable::lo && y < LogGTable::hi - LogGTable::step; }
} // namespace detail

inline double g_fast(double y) {
    if (!detail::in_table(y)) return g_boundary(y);
    return std::exp(detail::log_g_table()(y));
}

/// (log g)'(y): the interpolant's derivative on the table, a central
/// difference of the series evaluation outside it.
inline double dlog_g(double y) {
    if (detail::in_table(y)) return detail::log_g_table().derivative(y);
    const double d = 1e-4 * std::max(1.0, std::abs(y));
    return (std::log(g_boundary(y + d)) - std::log(g_boundary(y - d))) / (2.0 * d);
}

/// h through g_fast, zero for x <= 0.
inline double h_fast(State z) {
    if (!(z.t_coord > 0.0)) return 0.0;
    const double cx = std::cbrt(z.t_coord);
    return std::sqrt(cx) * g_fast(z.s_coord / cx);
}

struct FiniteRatio {
    double c; ///< limit of x^{-1/3} y
};
struct PlusInfinity {};
struct MinusInfinity {};

/// The three approach regimes of (x, y) -> 0 for the asymptotics of h.
using AsymptoticRegime = std::variant<FiniteRatio, PlusInfinity, MinusInfinity>;

/// Leading-order approximation of h in the given regime.
inline double h_asymptotic(State z, const AsymptoticRegime& regime) {
    const double x = z.t_coord, y = z.s_coord;
    if (!(x > 0.0)) throw DomainError("h_asymptotic: x must be positive");
    struct Visitor {
        double x, y;
        double operator()(const FiniteRatio& r) const { return std::pow(x, 1.0 / 6.0) * g_boundary(r.c); }
        double operator()(const PlusInfinity&) const {
            if (!(y > 0.0)) throw DomainError("h_asymptotic: regime +infinity needs y > 0");
            return std::sqrt(y);
        }
        double operator()(const MinusInfinity&) const {
            if (!(y < 0.0)) throw DomainError("h_asymptotic: regime -infinity needs y < 0");
            return 0.75 * x * std::pow(-y, -2.5) * std::exp(2.0 / 9.0 * y * y * y / x);
        }
    };
    return std::visit(Visitor{x, y}, regime);
}

/// C alpha(z)^{1/2 - 3i - j}, the envelope for |d^{i+j} h / dx^i dy^j|.
inline double h_gradient_bound(State z, unsigned i, unsigned j, double constant = 10.0) {
    if (i + j < 1) throw DomainError("h_gradient_bound: need i + j >= 1");
    const double a = alpha(z);
    if (!(a > 0.0)) throw DomainError("h_gradient_bound: alpha(z) must be positive");
    return constant * std::pow(a, 0.5 - 3.0 * i - 1.0 * j);
}

} // namespace kolmo::specfun
