#pragma once

// Transition densities of the Kolmogorov diffusion W = (U, V): the free
// density, the hitting density of {U = 0}, the density killed on
// {U <= 0}, the harmonic function h and the auxiliary function hbar, and
// survival probabilities.
//
// Every quadrature-backed quantity returns a quad::QuadResult; `.value` is
// the plain number and `.error_estimate` the attached error.

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "kolmo/core.hpp"
#include "kolmo/diffusion.hpp"
#include "kolmo/quadrature.hpp"
#include "kolmo/specfun.hpp"
#include "kolmo/tabulate.hpp"

namespace kolmo {

struct DensityPoint {
    State from;
    State to;
    double t;
};

namespace density {

using quad::QuadResult;
using quad::QuadSpec;

inline constexpr double kInvPi = std::numbers::inv_pi;

namespace detail {

inline void check_time(double t, const char* who) {
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError(std::string(who) + ": time must be positive and finite");
}

// log p_t(x,y;u,v).
inline double log_p(double t, double x, double y, double u, double v) {
    const double d = u - x;
    return std::log(kSqrt3 * kInvPi / (t * t)) - 6.0 * d * d / (t * t * t) + 6.0 * d * (v + y) / (t * t) -
           2.0 * ((v * v + y * y) + v * y) / t;
}

inline double p(double t, double x, double y, double u, double v) { return std::exp(log_p(t, x, y, u, v)); }

// p(v) - p(-v) without cancellation: log p(v) - log p(-v) is linear in v.
inline double q(double t, double x, double y, double u, double v) {
    const double delta = 12.0 * (u - x) * v / (t * t) - 4.0 * v * y / t;
    if (delta >= 0.0) return -p(t, x, y, u, v) * std::expm1(-delta);
    return p(t, x, y, u, -v) * std::expm1(delta);
}

/// Gaussian profile of an integrand factor in the integration variable.
struct Bump {
    double mean;
    double var;
};

// v -> p_t(x,y;u,v): conditional law of V_t given U_t = u.
inline Bump target_velocity(double t, double x, double y, double u) {
    return {y + 1.5 * (u - x - t * y) / t, 0.25 * t};
}

// y -> p_t(x,y;u,v), by time reversal.
inline Bump start_velocity(double t, double x, double u, double v) {
    return {v - 1.5 * (x - u + t * v) / t, 0.25 * t};
}

inline Bump flip(Bump b) { return {-b.mean, b.var}; }

inline Bump product(Bump a, Bump b) {
    const double var = 1.0 / (1.0 / a.var + 1.0 / b.var);
    return {var * (a.mean / a.var + b.mean / b.var), var};
}

// Breakpoints on [0, inf) covering the bumps to 12 standard deviations. The
// returned interval is finite: beyond it every bump is below e^{-72}.
inline std::vector<double> bump_cuts(std::initializer_list<Bump> bumps) {
    std::vector<double> cuts{0.0};
    double hi = 0.0, widest = 0.0;
    for (const Bump& b : bumps) {
        const double sd = std::sqrt(b.var);
        widest = std::max(widest, sd);
        for (double k : {-12.0, 0.0, 12.0}) {
            const double c = b.mean + k * sd;
            if (c > 0.0) cuts.push_back(c);
        }
        hi = std::max(hi, b.mean + 12.0 * sd);
    }
    if (hi <= 0.0) hi = 12.0 * widest;
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::remove_if(cuts.begin(), cuts.end(), [hi](double c) { return c > hi; }), cuts.end());
    // breakpoints closer than a quarter of the narrowest width add nothing
    double narrowest = widest;
    for (const Bump& b : bumps) narrowest = std::min(narrowest, std::sqrt(b.var));
    std::vector<double> kept{cuts.front()};
    for (std::size_t i = 1; i < cuts.size(); ++i)
        if (cuts[i] - kept.back() > 0.25 * narrowest) kept.push_back(cuts[i]);
    if (kept.back() < hi) kept.push_back(hi);
    return kept;
}

// Breakpoints on [a, b] refining geometrically toward both ends.
inline std::vector<double> time_cuts(double a, double b, double scale_a, double scale_b) {
    std::vector<double> cuts{a, b};
    const double len = b - a;
    for (double s = std::min(scale_a, 0.5 * len); s < 0.5 * len && s > 1e-14 * len; s *= 4.0) cuts.push_back(a + s);
    for (double s = std::min(scale_b, 0.5 * len); s < 0.5 * len && s > 1e-14 * len; s *= 4.0) cuts.push_back(b - s);
    cuts.push_back(a + 0.5 * len);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    return cuts;
}

// Time scale on which the diffusion started at (x, y), x > 0, can reach 0.
inline double exit_scale(double x, double y) {
    const double a = std::cbrt(x);
    const double s = y < 0.0 ? std::min(a * a, x / -y) : a * a;
    return 0.25 * s;
}

// erf(sqrt(6 zw/s)) based kernel of the base hitting density.
inline double base_hit(double s, double z, double w) {
    if (w <= 0.0 || z <= 0.0) return 0.0;
    const double e = -(2.0 / s) * (z * z - z * w + w * w);
    return kSqrt3 * kInvPi * w / (s * s) * std::exp(e) * std::erf(std::sqrt(6.0 * z * w / s));
}

inline QuadResult product_error(const QuadResult& a, const QuadResult& b) {
    QuadResult r;
    r.value = a.value * b.value;
    r.error_estimate = std::abs(a.value) * b.error_estimate + std::abs(b.value) * a.error_estimate +
                       a.error_estimate * b.error_estimate;
    r.evaluations = a.evaluations + b.evaluations;
    r.converged = a.converged && b.converged;
    r.failed_axis = a.converged ? b.failed_axis : a.failed_axis;
    return r;
}

inline QuadSpec loosen(QuadSpec s, double factor) {
    s.rel_tol *= factor;
    s.abs_tol *= factor;
    return s;
}

} // namespace detail

/// Tolerances shared by the iterated integrals of this module.
struct DensityTolerance {
    double rel = 1e-8;
    double abs = 1e-13;
    int max_subdivisions = 200;

    QuadSpec spec() const {
        QuadSpec s;
        s.rel_tol = rel;
        s.abs_tol = abs;
        s.max_subdivisions = max_subdivisions;
        return s;
    }
};

/// Free transition density p_t(x,y;u,v).
inline double p_free(const DensityPoint& pt) {
    detail::check_time(pt.t, "p_free");
    return detail::p(pt.t, pt.from.t_coord, pt.from.s_coord, pt.to.t_coord, pt.to.s_coord);
}

/// q_t(x,y;u,v) = p_t(x,y;u,v) - p_t(x,y;u,-v).
inline double q_antisym(const DensityPoint& pt) {
    detail::check_time(pt.t, "q_antisym");
    return detail::q(pt.t, pt.from.t_coord, pt.from.s_coord, pt.to.t_coord, pt.to.s_coord);
}

namespace detail {

// J(t; x, y; z) = int_0^t int_0^inf f_s(0,-z;0,w) K_{t-s}(w) dw ds, where
// K is p_{t-s}(x,y;0,w) (antisym = false) or q_{t-s}(x,y;0,w).
inline QuadResult hit_correction(double t, double x, double y, double z, bool antisym, const DensityTolerance& tol) {
    const QuadSpec spec = tol.spec();
    auto over_s = [&](double s) -> QuadResult {
        const double tau = t - s;
        if (tau <= 0.0 || s <= 0.0) return {};
        const Bump f = {0.5 * z, 0.25 * s};
        const Bump k = target_velocity(tau, x, y, 0.0);
        auto g = [&](double w) {
            const double kern = antisym ? q(tau, x, y, 0.0, w) : p(tau, x, y, 0.0, w);
            return base_hit(s, z, w) * kern;
        };
        if (antisym) return quad::integrate_panels(g, bump_cuts({product(f, k), product(f, flip(k)), f}), spec);
        return quad::integrate_panels(g, bump_cuts({product(f, k), f}), spec);
    };
    const auto cuts = time_cuts(0.0, t, std::max(z * z, 1e-300) / 8.0, exit_scale(x, y));
    return quad::integrate_panels(over_s, cuts, detail::loosen(spec, 2.0));
}

} // namespace detail

/// Joint density f_t(x,y;a,z) of the first hitting time of {U = a} after
/// time 0 and the velocity at that time. A start on the level (x = a,
/// y != 0) uses the closed form; otherwise the recursion through the base
/// case is integrated numerically.
inline QuadResult lachal_first_hit(State start, double level, double t, double z, const DensityTolerance& tol = {}) {
    detail::check_time(t, "lachal_first_hit");
    double x = start.t_coord - level, y = start.s_coord;
    if (x < 0.0) { // reflect (U, V) -> (-U, -V)
        x = -x;
        y = -y;
        z = -z;
    }
    if (x == 0.0) {
        if (y == 0.0) throw DomainError("lachal_first_hit: start (a, 0) is degenerate");
        // started on the level moving away from it: returns with the opposite sign of velocity
        if (y > 0.0) {
            y = -y;
            z = -z;
        }
        return {detail::base_hit(t, -y, z), 0.0, 1, true, -1};
    }
    if (z > 0.0) return {};
    const double az = -z;
    QuadResult corr = detail::hit_correction(t, x, y, az, false, tol);
    QuadResult r = corr * -1.0;
    r.value += detail::p(t, x, y, 0.0, z);
    r *= az;
    r.value = std::max(r.value, 0.0);
    return r;
}

/// Killed density from the first-hit decomposition:
/// pbar = p_t - int_0^t int_0^inf f_s(x,y;0,-z) p_{t-s}(0,-z;u,v) dz ds.
inline QuadResult p_killed_route_a(const DensityPoint& pt, const DensityTolerance& tol = {}) {
    const double t = pt.t, x = pt.from.t_coord, y = pt.from.s_coord, u = pt.to.t_coord, v = pt.to.s_coord;
    detail::check_time(t, "p_killed_route_a");
    if (!(x > 0.0) || !(u > 0.0)) throw DomainError("p_killed_route_a: both first coordinates must be positive");
    using namespace detail;
    const QuadSpec spec = tol.spec();
    auto over_s = [&](double s) -> QuadResult {
        const double tau = t - s;
        if (tau <= 0.0 || s <= 0.0) return {};
        const Bump a = flip(target_velocity(s, x, y, 0.0));
        const Bump b = flip(start_velocity(tau, 0.0, u, v));
        auto over_z = [&](double zz) -> QuadResult {
            if (zz <= 0.0) return {};
            const double lead = p(s, x, y, 0.0, -zz);
            const double out = p(tau, 0.0, -zz, u, v);
            if (lead == 0.0 || out == 0.0) return {};
            QuadResult f = hit_correction(s, x, y, zz, false, tol) * -1.0;
            f.value += lead;
            return f * (zz * out);
        };
        return quad::integrate_panels(over_z, bump_cuts({product(a, b), a}), loosen(spec, 4.0));
    };
    const auto cuts = time_cuts(0.0, t, exit_scale(x, y), exit_scale(u, -v));
    QuadResult r = quad::integrate_panels(over_s, cuts, loosen(spec, 8.0)) * -1.0;
    r.value += p(t, x, y, u, v);
    return r;
}

/// Route B result: the total and its three correction terms
/// p_t(x,y;-u,-v), the double integral and the quadruple integral.
struct KilledDensityB {
    QuadResult total;
    std::array<QuadResult, 3> terms;

    /// Index of the first term that failed to converge, -1 if none.
    int failed_term() const {
        for (int i = 0; i < 3; ++i)
            if (!terms[i].converged) return i;
        return -1;
    }
};

/// Killed density from the antisymmetrized decomposition.
inline KilledDensityB p_killed_route_b(const DensityPoint& pt, const DensityTolerance& tol = {}) {
    const double t = pt.t, x = pt.from.t_coord, y = pt.from.s_coord, u = pt.to.t_coord, v = pt.to.s_coord;
    detail::check_time(t, "p_killed_route_b");
    if (!(x > 0.0) || !(u > 0.0)) throw DomainError("p_killed_route_b: both first coordinates must be positive");
    using namespace detail;
    const QuadSpec spec = tol.spec();
    KilledDensityB out;
    out.terms[0] = {p(t, x, y, -u, -v), 0.0, 1, true, -1};
    // Double and quadruple terms share the (s, z) sweep; their integrands are
    // kept apart so each reports its own error.
    auto sweep = [&](bool quadruple) {
        auto over_s = [&](double s) -> QuadResult {
            const double tau = t - s;
            if (tau <= 0.0 || s <= 0.0) return {};
            const Bump a = target_velocity(s, x, y, 0.0);      // in -z for p_s(x,y;0,-z)
            const Bump b = target_velocity(tau, u, -v, 0.0);   // in z for p_tau(u,-v;0,z)
            const auto cuts = bump_cuts({product(flip(a), b), product(a, b), product(flip(a), flip(b)),
                                         product(a, flip(b)), flip(a), a});
            auto over_z = [&](double zz) -> QuadResult {
                if (zz <= 0.0) return {};
                const double lead = zz * q(tau, u, -v, 0.0, zz);
                if (lead == 0.0) return {};
                if (!quadruple) return {lead * q(s, x, y, 0.0, -zz), 0.0, 1, true, -1};
                return hit_correction(s, x, y, zz, true, tol) * lead;
            };
            return quad::integrate_panels(over_z, cuts, loosen(spec, 4.0));
        };
        return quad::integrate_panels(over_s, time_cuts(0.0, t, exit_scale(x, y), exit_scale(u, -v)),
                                      loosen(spec, 8.0));
    };
    out.terms[1] = sweep(false);
    out.terms[2] = sweep(true);
    out.total = QuadResult{p(t, x, y, u, v), 0.0, 1, true, -1} - out.terms[0] - out.terms[1] + out.terms[2];
    return out;
}

/// h(x, y) from its double-integral representation. With s = sigma^4 and
/// w = omega / sigma^2 the s^{-3/4} endpoint behaviour disappears.
inline QuadResult h_integral(State z, const DensityTolerance& tol = {}) {
    const double x = z.t_coord, y = z.s_coord;
    if (!(x > 0.0)) throw DomainError("h_integral: x must be positive");
    const QuadSpec spec = tol.spec();
    auto over_sigma = [&](double sg) -> QuadResult {
        const double s2 = sg * sg, s4 = s2 * s2, s6 = s4 * s2;
        const double b = 3.0 * x * s6 + y * s2;
        const double c = x * s6 + y * s2;
        const double damp = -1.5 * c * c;
        if (damp < -745.0) return {};
        auto g = [&](double om) {
            const double e = damp - 2.0 * om * om - 0.5 * b * b;
            const double sarg = 2.0 * om * b;
            const double diff = std::abs(sarg) < 1.0 ? 2.0 * std::exp(e) * std::sinh(sarg)
                                                     : std::exp(e + sarg) - std::exp(e - sarg);
            return 2.0 / s2 * std::pow(om, 1.5) * diff;
        };
        const double peak = 0.5 * std::abs(b);
        std::vector<double> cuts{0.0, peak + 7.0};
        if (peak > 0.0) cuts.insert(cuts.begin() + 1, peak);
        if (peak > 7.0) cuts.insert(cuts.begin() + 1, peak - 7.0);
        return quad::integrate_panels(g, cuts, spec);
    };
    // sigma lives on the scale x^{-1/6}; beyond (80 / x^2)^{1/12} the damping is complete.
    const double scale = std::pow(x, -1.0 / 6.0);
    const double top = std::max(std::pow(600.0 / (x * x), 1.0 / 12.0), 2.0 * std::pow(std::abs(y) / x, 0.25));
    std::vector<double> cuts;
    for (double k = 0.0; k * 0.25 * scale < top; k += 1.0) cuts.push_back(k * 0.25 * scale);
    cuts.push_back(top);
    QuadResult r = quad::integrate_panels(over_sigma, cuts, detail::loosen(spec, 2.0));
    return r * (2.0 * kSqrt3 * kInvPi);
}

/// hbar(t, x, y) = 4 sqrt(3) / sqrt(2 pi) int_0^t int_0^inf w^{3/2} s^{-1/2}
///   p_s(0,w;0,0) (p_{t-s}(x,y;0,-w) - p_{t-s}(x,y;0,w)) dw ds.
/// The meander densities evaluate it at (t, u, -v).
inline QuadResult h_bar(double t, double x, double y, const DensityTolerance& tol = {}) {
    detail::check_time(t, "h_bar");
    if (!(x > 0.0)) throw DomainError("h_bar: x must be positive");
    using namespace detail;
    const QuadSpec spec = tol.spec();
    // For y < 0 the sigma integrand changes sign and the total is much
    // smaller than its parts, so the inner rule must be quieter than the
    // outer one or the outer error estimate stalls on its noise.
    const QuadSpec inner = loosen(spec, 1e-2);
    // s = sigma^4, w = omega sigma^2.
    auto over_sigma = [&](double sg) -> QuadResult {
        const double s2 = sg * sg, s = s2 * s2, tau = t - s;
        if (tau <= 0.0 || sg <= 0.0) return {};
        auto g = [&](double om) {
            const double w = om * s2;
            return std::pow(om, 1.5) * std::exp(-2.0 * om * om) * (-q(tau, x, y, 0.0, w)) / s2;
        };
        const Bump lead{0.0, 0.25};
        const Bump k = target_velocity(tau, x, y, 0.0);
        const Bump kk{k.mean / s2, k.var / (s2 * s2)};
        return quad::integrate_panels(g, bump_cuts({lead, product(lead, kk), product(lead, flip(kk))}), inner);
    };
    const double top = std::pow(t, 0.25);
    // near sigma = t^{1/4}: t - s ~ 4 top^3 (top - sigma)
    const double end_scale = exit_scale(x, y) / (4.0 * top * top * top);
    const auto cuts = time_cuts(0.0, top, 0.125 * top, end_scale);
    QuadResult r = quad::integrate_panels(over_sigma, cuts, loosen(spec, 2.0));
    return r * (4.0 * kSqrt3 / std::sqrt(2.0 * std::numbers::pi) * 4.0 * kSqrt3 * kInvPi);
}

namespace detail {

// kappa(omega) = omega int_0^inf zeta e^{-2(zeta^2 - zeta omega + omega^2)} erf(sqrt(6 zeta omega)) dzeta,
// so that int_0^inf z f_r(0,-z;0,w) dz = (sqrt 3/pi) r^{-1/2} kappa(w / sqrt r).
inline QuadResult kappa_kernel(double om, const QuadSpec& spec) {
    if (om <= 0.0) return {};
    auto g = [om](double ze) {
        return ze * std::exp(-2.0 * (ze * ze - ze * om + om * om)) * std::erf(std::sqrt(6.0 * ze * om));
    };
    return quad::integrate_panels(g, bump_cuts({{0.5 * om, 0.25}}), spec) * om;
}

} // namespace detail

/// P_{(x,y)}(tau > t) by integrating the killed density over the half plane
/// in closed form: 1 - Term1 + Term2 with
///   Term1 = int_0^t int_0^inf z p_s(x,y;0,-z) dz ds,
///   Term2 = int int z p_s... f-correction, reduced to a triple integral.
inline QuadResult survival_quadrature(State start, double t, const DensityTolerance& tol = {}) {
    const double x = start.t_coord, y = start.s_coord;
    detail::check_time(t, "survival_quadrature");
    if (!(x > 0.0)) return {0.0, 0.0, 0, true, -1};
    using namespace detail;
    const QuadSpec spec = tol.spec();
    const double ex = exit_scale(x, y);
    // Term1: Rice formula for downcrossings of 0.
    auto rice = [&](double s) {
        if (s <= 0.0) return 0.0;
        const double m = x + s * y, vu = s * s * s / 3.0;
        const double dens = std::exp(-0.5 * m * m / vu) / std::sqrt(2.0 * std::numbers::pi * vu);
        const double mu = y - 1.5 * m / s, sd = std::sqrt(0.25 * s);
        const double r = mu / sd;
        const double pos = sd * std::exp(-0.5 * r * r) / std::sqrt(2.0 * std::numbers::pi) -
                           mu * 0.5 * std::erfc(r / std::numbers::sqrt2);
        return dens * pos;
    };
    const QuadResult term1 = quad::integrate_panels(rice, time_cuts(0.0, t, ex, 0.5 * t), spec);
    // Term2 = (sqrt3/pi) int_0^inf kappa(omega) int_0^t int_0^{t-r} p_sigma(x,y;0,omega sqrt r) dsigma dr domega
    auto over_omega = [&](double om) -> QuadResult {
        const QuadResult k = kappa_kernel(om, spec);
        auto over_r = [&](double r) -> QuadResult {
            const double w = om * std::sqrt(r);
            const double len = t - r;
            if (len <= 0.0) return {};
            auto pi_sigma = [&](double sg) { return sg > 0.0 ? p(sg, x, y, 0.0, w) : 0.0; };
            return quad::integrate_panels(pi_sigma, time_cuts(0.0, len, ex, 0.5 * len), spec);
        };
        const QuadResult pi = quad::integrate_panels(over_r, time_cuts(0.0, t, 0.01 * t, ex), loosen(spec, 2.0));
        return product_error(k, pi);
    };
    QuadResult term2 = quad::integrate_panels(over_omega, {0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.5, 7.0}, loosen(spec, 4.0));
    term2 *= kSqrt3 * kInvPi;
    QuadResult r = term2 - term1;
    r.value += 1.0;
    return r;
}

// ------------------------------------------------------------ survival

enum class SurvivalMethod { quadrature, monte_carlo };

struct SurvivalOptions {
    SurvivalMethod method = SurvivalMethod::quadrature;
    DensityTolerance tol{1e-8, 1e-12, 200};
    double dt = 1.0 / 1024.0;     ///< Monte Carlo grid
    std::size_t paths = 100'000;  ///< Monte Carlo sample size
    std::uint64_t seed = 1;
};

/// P_z(tau > t). The quadrature variant reports its error estimate in
/// `std_error`; it throws NumericalFailure when the integral does not converge.
inline diffusion::SurvivalEstimate survival_probability(State z, double t, const SurvivalOptions& o = {}) {
    detail::check_time(t, "survival_probability");
    if (!(z.t_coord > 0.0)) throw DomainError("survival_probability: start must have positive first coordinate");
    if (o.method == SurvivalMethod::quadrature) {
        const QuadResult r = survival_quadrature(z, t, o.tol);
        if (!r.converged)
            throw NumericalFailure("survival_probability: quadrature did not converge on axis " +
                                   std::to_string(r.failed_axis));
        return {std::clamp(r.value, 0.0, 1.0), r.error_estimate, static_cast<std::size_t>(r.evaluations)};
    }
    RngStream rng(o.seed, 0);
    return diffusion::survival_monte_carlo(z, t, o.dt, o.paths, rng);
}

// ------------------------------------------------------------ kappa

enum class KappaMethod { quadrature_ratio, monte_carlo };

struct KappaEstimate {
    double value = 0.0;
    double std_error = 0.0;
    KappaMethod method = KappaMethod::quadrature_ratio;
    std::vector<double> ratios; ///< t^{1/4} P_z(tau > t) / h(z) per start
    std::vector<double> ratio_errors;
    double spread = 0.0;        ///< max |ratio - value|
    bool flagged = false;       ///< spread above five pooled standard errors
};

/// Pooled t^{1/4} P_z(tau > t) / h(z) over the starts.
inline KappaEstimate estimate_kappa(const std::vector<State>& starts, double t, KappaMethod method,
                                    SurvivalOptions o = {}) {
    if (starts.empty()) throw DomainError("estimate_kappa: no starts");
    detail::check_time(t, "estimate_kappa");
    KappaEstimate k;
    k.method = method;
    o.method = method == KappaMethod::quadrature_ratio ? SurvivalMethod::quadrature : SurvivalMethod::monte_carlo;
    const double scale = std::pow(t, 0.25);
    for (std::size_t i = 0; i < starts.size(); ++i) {
        SurvivalOptions oi = o;
        oi.seed = o.seed + i;
        const auto p = survival_probability(starts[i], t, oi);
        const double h = specfun::h_hypergeometric(starts[i]);
        k.ratios.push_back(scale * p.value / h);
        k.ratio_errors.push_back(scale * p.std_error / h);
    }
    const std::size_t m = k.ratios.size();
    if (method == KappaMethod::monte_carlo) {
        // inverse-variance pooling
        double sw = 0.0, swx = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double w = 1.0 / std::max(k.ratio_errors[i] * k.ratio_errors[i], 1e-300);
            sw += w;
            swx += w * k.ratios[i];
        }
        k.value = swx / sw;
        k.std_error = std::sqrt(1.0 / sw);
    } else {
        double mean = 0.0, num = 0.0;
        for (double r : k.ratios) mean += r / m;
        for (std::size_t i = 0; i < m; ++i) num = std::max(num, k.ratio_errors[i]);
        double var = 0.0;
        for (double r : k.ratios) var += (r - mean) * (r - mean);
        k.value = mean;
        k.std_error = std::hypot(m > 1 ? std::sqrt(var / (m * (m - 1.0))) : 0.0, num);
    }
    for (double r : k.ratios) k.spread = std::max(k.spread, std::abs(r - k.value));
    k.flagged = k.spread > 5.0 * k.std_error;
    return k;
}

// ------------------------------------------------------------ limit densities

namespace detail {

// Panels covering the bulk of the time-t marginal of a meander from 0.
inline std::vector<double> limit_u_cuts(double t) {
    std::vector<double> c{0.0, 0.01, 0.03, 0.07, 0.15, 0.3, 0.5, 0.75, 1.0, 1.3, 1.7, 2.2, 2.8, 3.6, 4.5};
    for (double& x : c) x *= t * std::sqrt(t);
    return c;
}

inline std::vector<double> limit_v_cuts(double t) {
    std::vector<double> c;
    for (int k = -8; k <= 8; ++k) c.push_back(0.75 * k * std::sqrt(t));
    return c;
}

struct NormalizationCache {
    std::mutex lock;
    std::map<std::pair<double, double>, QuadResult> values;
};

inline NormalizationCache& meander_cache() {
    static NormalizationCache c;
    return c;
}

inline NormalizationCache& bridge_cache() {
    static NormalizationCache c;
    return c;
}

// Error of a tabulated integral, estimated from a rule of lower order on the
// same panels.
template <class F>
QuadResult tabulated_integral(F&& f, double t, int order) {
    const auto hi = TabulatedDensity::build(f, limit_u_cuts(t), limit_v_cuts(t), order);
    const auto lo = TabulatedDensity::build(f, limit_u_cuts(t), limit_v_cuts(t), order - 2);
    const double n = static_cast<double>(hi.nodes(0).size() * hi.nodes(1).size() + lo.nodes(0).size() * lo.nodes(1).size());
    return {hi.mass(), std::abs(hi.mass() - lo.mass()), static_cast<long>(n), true, -1};
}

} // namespace detail

/// A limit density value with its normalization constant.
struct LimitDensityValue {
    double unnormalized = 0.0;
    double error = 0.0;
    double normalization = 1.0;
    double normalization_error = 0.0;

    double normalized() const { return unnormalized / normalization; }
};

/// horizon^{1/4} hbar(t, u, -v) P_{(u,v)}(tau > horizon - t): the density at
/// time t of the meander of length `horizon` from 0 up to normalization.
/// At t = horizon the survival factor is 1.
inline QuadResult meander_density_unnormalized(double t, State target, double horizon,
                                               const DensityTolerance& tol = {1e-7, 1e-12, 200}) {
    if (!(t > 0.0) || !(t <= horizon)) throw DomainError("meander density: need 0 < t <= horizon");
    if (!(target.t_coord > 0.0)) return {};
    QuadResult hb = h_bar(t, target.t_coord, -target.s_coord, tol) * std::pow(horizon, 0.25);
    if (t == horizon) return hb;
    const QuadResult surv = survival_quadrature(target, horizon - t, tol);
    return detail::product_error(hb, surv);
}

/// Normalization of meander_density_unnormalized, computed once per
/// (t, horizon) and cached.
inline QuadResult meander_normalization(double t, double horizon) {
    if (!(t > 0.0) || !(t <= horizon)) throw DomainError("meander density: need 0 < t <= horizon");
    auto& cache = detail::meander_cache();
    {
        std::lock_guard g(cache.lock);
        const auto it = cache.values.find({t, horizon});
        if (it != cache.values.end()) return it->second;
    }
    const DensityTolerance tol{1e-6, 1e-11, 200};
    auto f = [&](double u, double v) { return meander_density_unnormalized(t, {u, v}, horizon, tol).value; };
    const QuadResult r = detail::tabulated_integral(f, t, t == horizon ? 8 : 4);
    std::lock_guard g(cache.lock);
    return cache.values.emplace(std::pair{t, horizon}, r).first->second;
}

inline LimitDensityValue meander_density_limit(double t, State target, double horizon) {
    const QuadResult n = meander_normalization(t, horizon);
    const QuadResult v = meander_density_unnormalized(t, target, horizon);
    return {v.value, v.error_estimate, n.value, n.error_estimate};
}

/// Density at time t of the diffusion from z conditioned on tau > horizon:
/// pbar_t(z; w) P_w(tau > horizon - t) / P_z(tau > horizon).
inline QuadResult meander_density_from_start(State z, double t, State target, double horizon,
                                             const DensityTolerance& tol = {1e-6, 1e-12, 200}) {
    if (!(t > 0.0) || !(t < horizon)) throw DomainError("meander_density_from_start: need 0 < t < horizon");
    if (!(z.t_coord > 0.0)) throw DomainError("meander_density_from_start: start must have positive first coordinate");
    if (!(target.t_coord > 0.0)) return {};
    const QuadResult pb = p_killed_route_a({z, target, t}, tol);
    const QuadResult s_end = survival_quadrature(target, horizon - t, tol);
    const QuadResult s_start = survival_quadrature(z, horizon, tol);
    QuadResult num = detail::product_error(pb, s_end);
    QuadResult r;
    r.value = num.value / s_start.value;
    r.error_estimate = num.error_estimate / s_start.value + std::abs(r.value) * s_start.error_estimate / s_start.value;
    r.evaluations = num.evaluations + s_start.evaluations;
    r.converged = num.converged && s_start.converged;
    return r;
}

/// hbar(t, u, -v) hbar(1 - t, u, v): the time-t density of the excursion
/// from 0 back to 0 up to normalization.
inline QuadResult bridge_density_unnormalized(double t, State z, const DensityTolerance& tol = {1e-7, 1e-12, 200}) {
    if (!(t > 0.0) || !(t < 1.0)) throw DomainError("bridge density: need 0 < t < 1");
    if (!(z.t_coord > 0.0)) return {};
    return detail::product_error(h_bar(t, z.t_coord, -z.s_coord, tol), h_bar(1.0 - t, z.t_coord, z.s_coord, tol));
}

/// Normalization of bridge_density_unnormalized. By Chapman-Kolmogorov it
/// does not depend on t.
inline QuadResult bridge_normalization(double t) {
    if (!(t > 0.0) || !(t < 1.0)) throw DomainError("bridge density: need 0 < t < 1");
    auto& cache = detail::bridge_cache();
    {
        std::lock_guard g(cache.lock);
        const auto it = cache.values.find({t, 1.0});
        if (it != cache.values.end()) return it->second;
    }
    const DensityTolerance tol{1e-6, 1e-11, 200};
    auto f = [&](double u, double v) { return bridge_density_unnormalized(t, {u, v}, tol).value; };
    // the bridge lives on the scale of min(t, 1 - t)
    const QuadResult r = detail::tabulated_integral(f, std::max(t * (1.0 - t) * 2.0, 0.05), 6);
    std::lock_guard g(cache.lock);
    return cache.values.emplace(std::pair{t, 1.0}, r).first->second;
}

/// g_t(z), the density of Y_t.
inline LimitDensityValue bridge_density(double t, State z) {
    const QuadResult n = bridge_normalization(t);
    const QuadResult v = bridge_density_unnormalized(t, z);
    return {v.value, v.error_estimate, n.value, n.error_estimate};
}

/// Tabulated time-t meander marginal (t = horizon only: no survival factor).
inline TabulatedDensity meander_endpoint_table(double horizon = 1.0, int order = 8,
                                               const DensityTolerance& tol = {1e-7, 1e-12, 200}) {
    auto f = [&](double u, double v) { return h_bar(horizon, u, -v, tol).value; };
    return TabulatedDensity::build(f, detail::limit_u_cuts(horizon), detail::limit_v_cuts(horizon), order);
}

/// Tabulated g_t.
inline TabulatedDensity bridge_table(double t, int order = 6, const DensityTolerance& tol = {1e-7, 1e-12, 200}) {
    auto f = [&](double u, double v) { return bridge_density_unnormalized(t, {u, v}, tol).value; };
    const double scale = std::max(t * (1.0 - t) * 2.0, 0.05);
    return TabulatedDensity::build(f, detail::limit_u_cuts(scale), detail::limit_v_cuts(scale), order);
}

/// Tabulated time-1 marginal of the h-transform from (0, 0), proportional
/// to hbar(1, u, -v) h(u, v).
inline TabulatedDensity h_transform_endpoint_table(int order = 8, const DensityTolerance& tol = {1e-7, 1e-12, 200}) {
    auto f = [&](double u, double v) { return h_bar(1.0, u, -v, tol).value * specfun::h_hypergeometric({u, v}); };
    auto u = detail::limit_u_cuts(1.0);
    u.push_back(5.5);
    return TabulatedDensity::build(f, u, detail::limit_v_cuts(1.0), order);
}

// ------------------------------------------------------------ grid export

struct GridRow {
    double t, x, y, u, v, value, err;
};

inline void write_grid_csv(std::ostream& os, const std::vector<GridRow>& rows) {
    os << "t,x,y,u,v,value,err\n" << std::setprecision(17);
    for (const auto& r : rows)
        os << r.t << ',' << r.x << ',' << r.y << ',' << r.u << ',' << r.v << ',' << r.value << ',' << r.err << '\n';
}

inline std::vector<GridRow> read_grid_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "t,x,y,u,v,value,err") throw DomainError("read_grid_csv: bad header");
    std::vector<GridRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        GridRow r{};
        if (!(ls >> r.t >> r.x >> r.y >> r.u >> r.v >> r.value >> r.err))
            throw DomainError("read_grid_csv: malformed row '" + line + "'");
        rows.push_back(r);
    }
    return rows;
}

inline nlohmann::json grid_to_json(const std::vector<GridRow>& rows) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& r : rows)
        a.push_back({{"t", r.t}, {"x", r.x}, {"y", r.y}, {"u", r.u}, {"v", r.v}, {"value", r.value}, {"err", r.err}});
    return a;
}

inline std::vector<GridRow> grid_from_json(const nlohmann::json& a) {
    std::vector<GridRow> rows;
    for (const auto& e : a)
        rows.push_back({e.at("t").get<double>(), e.at("x").get<double>(), e.at("y").get<double>(),
                        e.at("u").get<double>(), e.at("v").get<double>(), e.at("value").get<double>(),
                        e.at("err").get<double>()});
    return rows;
}

} // namespace density
} // namespace kolmo
