#pragma once

// Deterministic adaptive quadrature.
//
// Finite panels use the 21-point Gauss-Kronrod pair with global bisection of
// the worst panel. Infinite and semi-infinite axes are first mapped onto a
// finite window by a double-exponential change of variables (exp-sinh for a
// half line, sinh-sinh for the whole line); the window is truncated where the
// transformed integrand has decayed below the requested accuracy.
//
// An integrand may return either a double or a QuadResult. In the second case
// the inner error estimates are integrated alongside the values and added to
// the outer estimate, so iterated integrals report a conservative total.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "kolmo/core.hpp"

namespace kolmo::quad {

enum class Substitution {
    none,             ///< plain adaptive panels; infinite ends use the DE map with `scale`
    sqrt_singularity, ///< x = a + (b - a) u^2, removes (x - a)^{-1/2}
    gaussian_tail,    ///< half line truncated at 12 * scale beyond the finite end
    natural_scaling,  ///< natural-scale panels: geometric breakpoints a + scale * 2^k, DE map with `scale` on infinite ends
};

struct QuadSpec {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    int max_subdivisions = 400;
    Substitution substitution = Substitution::none;
    double scale = 1.0;

    void validate() const {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
            throw DomainError("QuadSpec: tolerances must be positive");
        if (max_subdivisions < 1)
            throw DomainError("QuadSpec: max_subdivisions must be >= 1");
        if (!(scale > 0.0) || !std::isfinite(scale))
            throw DomainError("QuadSpec: scale must be positive and finite");
    }
};

struct QuadResult {
    double value = 0.0;
    double error_estimate = 0.0;
    long evaluations = 0;
    bool converged = true;
    int failed_axis = -1; ///< first axis (in iteration order) that failed, -1 if none

    QuadResult& operator+=(const QuadResult& o) {
        value += o.value;
        error_estimate += o.error_estimate;
        evaluations += o.evaluations;
        if (!o.converged && converged) failed_axis = o.failed_axis;
        converged = converged && o.converged;
        return *this;
    }
    friend QuadResult operator+(QuadResult a, const QuadResult& b) { return a += b; }
    friend QuadResult operator-(QuadResult a, const QuadResult& b) {
        QuadResult nb = b;
        nb.value = -nb.value;
        return a += nb;
    }
    QuadResult& operator*=(double c) {
        value *= c;
        error_estimate *= std::abs(c);
        return *this;
    }
    friend QuadResult operator*(QuadResult a, double c) { return a *= c; }
    friend QuadResult operator*(double c, QuadResult a) { return a *= c; }
};

struct Interval {
    double lower;
    double upper;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace detail {

// QUADPACK qk21 abscissae and weights.
inline constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
inline constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525478058, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

template <class F>
using integrand_result_t = std::invoke_result_t<F&, double>;

template <class R>
inline constexpr bool is_nested_v = std::is_same_v<std::remove_cvref_t<R>, QuadResult>;

struct Sample {
    double value = 0.0;
    double inner_error = 0.0;
    long evaluations = 1;
    bool converged = true;
    int failed_axis = -1;
};

template <class F>
Sample sample(F& f, double x) {
    if constexpr (is_nested_v<integrand_result_t<F>>) {
        const QuadResult r = f(x);
        return {r.value, r.error_estimate, r.evaluations, r.converged, r.failed_axis};
    } else {
        return {static_cast<double>(f(x)), 0.0, 1, true, -1};
    }
}

struct Panel {
    double a, b;
    double value, error;
    double inner_error;
    friend bool operator<(const Panel& p, const Panel& q) { return p.error < q.error; }
};

struct PanelTotals {
    long evaluations = 0;
    bool inner_converged = true;
    int failed_axis = -1;
    bool finite = true;
};

template <class G>
Panel gk21(G& g, double a, double b, PanelTotals& tot) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const Sample fc = sample(g, center);
    double resg = 0.0;
    double resk = fc.value * kWgk[10];
    double resabs = std::abs(resk);
    double inner = fc.inner_error * kWgk[10];
    std::array<double, 10> f1{}, f2{};
    auto account = [&](const Sample& s) {
        tot.evaluations += s.evaluations;
        if (!s.converged && tot.inner_converged) {
            tot.inner_converged = false;
            tot.failed_axis = s.failed_axis;
        }
        if (!std::isfinite(s.value)) tot.finite = false;
    };
    account(fc);
    for (int j = 0; j < 10; ++j) {
        const double dx = half * kXgk[j];
        const Sample s1 = sample(g, center - dx);
        const Sample s2 = sample(g, center + dx);
        account(s1);
        account(s2);
        f1[j] = s1.value;
        f2[j] = s2.value;
        const double sum = s1.value + s2.value;
        resk += kWgk[j] * sum;
        resabs += kWgk[j] * (std::abs(s1.value) + std::abs(s2.value));
        inner += kWgk[j] * (s1.inner_error + s2.inner_error);
        if (j % 2 == 1) resg += kWg[j / 2] * sum;
    }
    const double reskh = 0.5 * resk;
    double resasc = kWgk[10] * std::abs(fc.value - reskh);
    for (int j = 0; j < 10; ++j)
        resasc += kWgk[j] * (std::abs(f1[j] - reskh) + std::abs(f2[j] - reskh));
    const double result = resk * half;
    resabs *= std::abs(half);
    resasc *= std::abs(half);
    double err = std::abs((resk - resg) * half);
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(err, 50.0 * eps * resabs);
    return {a, b, result, err, inner * std::abs(half)};
}

/// Adaptive GK21 over an initial partition of a finite interval.
template <class G>
QuadResult adapt(G& g, std::span<const double> cuts, const QuadSpec& spec) {
    PanelTotals tot;
    std::priority_queue<Panel> heap;
    double value = 0.0, error = 0.0, inner = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (!(cuts[i + 1] > cuts[i])) continue;
        Panel p = gk21(g, cuts[i], cuts[i + 1], tot);
        value += p.value;
        error += p.error;
        inner += p.inner_error;
        heap.push(p);
    }
    int subdivisions = 0;
    auto tolerance = [&] { return std::max(spec.rel_tol * std::abs(value), spec.abs_tol); };
    while (tot.finite && error + inner > tolerance() && subdivisions < spec.max_subdivisions && !heap.empty()) {
        // Bisection cannot shrink the propagated inner error.
        if (inner >= 0.9 * tolerance() && error <= 0.1 * tolerance()) break;
        const Panel worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) break;
        heap.pop();
        const Panel left = gk21(g, worst.a, mid, tot);
        const Panel right = gk21(g, mid, worst.b, tot);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        inner += left.inner_error + right.inner_error - worst.inner_error;
        heap.push(left);
        heap.push(right);
        ++subdivisions;
    }
    // Re-sum to shed accumulated cancellation in the running totals.
    value = 0.0;
    error = 0.0;
    inner = 0.0;
    for (auto h = heap; !h.empty(); h.pop()) {
        value += h.top().value;
        error += h.top().error;
        inner += h.top().inner_error;
    }
    QuadResult r;
    r.value = value;
    r.error_estimate = error + inner;
    r.evaluations = tot.evaluations;
    r.converged = tot.finite && tot.inner_converged && r.error_estimate <= tolerance();
    r.failed_axis = tot.inner_converged ? (r.converged ? -1 : 0) : tot.failed_axis;
    if (!tot.finite) r.failed_axis = 0;
    return r;
}

/// Wraps f with a change of variables x = map(t), returning f(x) * dx/dt.
template <class F, class Map>
auto transformed(F& f, Map map) {
    return [&f, map](auto t) {
        const auto [x, jac] = map(static_cast<double>(t));
        if constexpr (is_nested_v<integrand_result_t<F>>) {
            if (jac == 0.0) return QuadResult{0.0, 0.0, 0, true, -1};
            QuadResult r = f(x);
            r *= jac;
            return r;
        } else {
            if (jac == 0.0) return 0.0;
            return static_cast<double>(f(x)) * jac;
        }
    };
}

/// Finds a window [lo, hi] of the DE variable outside which the transformed
/// integrand is negligible. Returns false if no such window exists within
/// |t| <= 6.
template <class G>
bool de_window(G& g, const QuadSpec& spec, bool scan_lower, double& lo, double& hi, long& evaluations) {
    constexpr double step = 0.25;
    constexpr double t_cap = 6.0;
    double peak = 0.0;
    for (double t = -1.0; t <= 1.0; t += step) {
        const Sample s = sample(g, t);
        evaluations += s.evaluations;
        if (std::isfinite(s.value)) peak = std::max(peak, std::abs(s.value));
    }
    auto negligible = [&](double v) {
        return std::abs(v) <= std::max(1e-3 * spec.abs_tol, 1e-4 * spec.rel_tol * peak);
    };
    auto scan = [&](double dir, double& edge) {
        int quiet = 0;
        double t = dir * 1.0;
        edge = t;
        while (std::abs(t) < t_cap) {
            t += dir * step;
            const Sample s = sample(g, t);
            evaluations += s.evaluations;
            if (!std::isfinite(s.value)) return false;
            peak = std::max(peak, std::abs(s.value));
            if (negligible(s.value)) {
                if (++quiet == 2) {
                    edge = t;
                    return true;
                }
            } else {
                quiet = 0;
            }
        }
        edge = dir * t_cap;
        return false;
    };
    bool ok = scan(+1.0, hi);
    if (scan_lower) ok = scan(-1.0, lo) && ok;
    return ok;
}

template <class F>
QuadResult de_half_line(F& f, double anchor, double direction, const QuadSpec& spec) {
    // x = anchor + direction * scale * exp(pi/2 sinh t)
    const double scale = spec.scale;
    auto map = [anchor, direction, scale](double t) {
        const double e = scale * std::exp(std::numbers::pi / 2.0 * std::sinh(t));
        const double jac = e * std::numbers::pi / 2.0 * std::cosh(t);
        return std::pair{anchor + direction * e, std::isfinite(jac) ? jac : 0.0};
    };
    auto g = transformed(f, map);
    long evals = 0;
    double lo = -6.0, hi = 6.0;
    const bool window_ok = de_window(g, spec, true, lo, hi, evals);
    const std::array<double, 2> cuts{lo, hi};
    QuadResult r = adapt(g, cuts, spec);
    r.evaluations += evals;
    if (!window_ok) {
        r.converged = false;
        if (r.failed_axis < 0) r.failed_axis = 0;
    }
    return r;
}

template <class F>
QuadResult de_whole_line(F& f, const QuadSpec& spec) {
    const double scale = spec.scale;
    auto map = [scale](double t) {
        const double u = std::numbers::pi / 2.0 * std::sinh(t);
        const double jac = scale * std::cosh(u) * std::numbers::pi / 2.0 * std::cosh(t);
        return std::pair{scale * std::sinh(u), std::isfinite(jac) ? jac : 0.0};
    };
    auto g = transformed(f, map);
    long evals = 0;
    double lo = -6.0, hi = 6.0;
    const bool window_ok = de_window(g, spec, true, lo, hi, evals);
    const std::array<double, 4> cuts{lo, -0.5, 0.5, hi};
    QuadResult r = adapt(g, cuts, spec);
    r.evaluations += evals;
    if (!window_ok) {
        r.converged = false;
        if (r.failed_axis < 0) r.failed_axis = 0;
    }
    return r;
}

inline std::vector<double> natural_cuts(double a, double b, double scale) {
    std::vector<double> cuts{a};
    for (double step = scale; a + step < b; step *= 2.0) cuts.push_back(a + step);
    cuts.push_back(b);
    return cuts;
}

} // namespace detail

/// Integrates f over `domain` (either end may be infinite).
template <class F>
QuadResult integrate_1d(F&& f, Interval domain, const QuadSpec& spec = {}) {
    spec.validate();
    double a = domain.lower, b = domain.upper;
    if (std::isnan(a) || std::isnan(b)) throw DomainError("integrate_1d: NaN bound");
    if (a == b) return {};
    double sign = 1.0;
    if (a > b) {
        std::swap(a, b);
        sign = -1.0;
    }
    auto& fn = f;
    QuadResult r;
    const bool lower_inf = std::isinf(a), upper_inf = std::isinf(b);
    using detail::transformed;
    if (lower_inf && upper_inf) {
        if (spec.substitution == Substitution::gaussian_tail) {
            const std::array<double, 4> cuts{-12.0 * spec.scale, -spec.scale, spec.scale, 12.0 * spec.scale};
            r = detail::adapt(fn, cuts, spec);
        } else {
            r = detail::de_whole_line(fn, spec);
        }
    } else if (lower_inf || upper_inf) {
        const double anchor = lower_inf ? b : a;
        const double dir = lower_inf ? -1.0 : 1.0;
        switch (spec.substitution) {
        case Substitution::gaussian_tail: {
            auto g = transformed(fn, [anchor, dir](double x) { return std::pair{anchor + dir * x, 1.0}; });
            const auto cuts = detail::natural_cuts(0.0, 12.0 * spec.scale, spec.scale);
            r = detail::adapt(g, cuts, spec);
            break;
        }
        case Substitution::sqrt_singularity: {
            auto g = transformed(fn, [anchor, dir](double u) { return std::pair{anchor + dir * u * u, 2.0 * u}; });
            r = detail::de_half_line(g, 0.0, 1.0, spec);
            break;
        }
        default:
            r = detail::de_half_line(fn, anchor, dir, spec);
            break;
        }
    } else {
        switch (spec.substitution) {
        case Substitution::sqrt_singularity: {
            const double len = b - a;
            auto g = transformed(fn, [a, len](double u) { return std::pair{a + len * u * u, 2.0 * len * u}; });
            const std::array<double, 2> cuts{0.0, 1.0};
            r = detail::adapt(g, cuts, spec);
            break;
        }
        case Substitution::natural_scaling: {
            const auto cuts = detail::natural_cuts(a, b, spec.scale);
            r = detail::adapt(fn, cuts, spec);
            break;
        }
        default: {
            const std::array<double, 2> cuts{a, b};
            r = detail::adapt(fn, cuts, spec);
            break;
        }
        }
    }
    r.value *= sign;
    return r;
}

/// Finite interval with explicit breakpoints; each initial panel is refined
/// adaptively.
template <class F>
QuadResult integrate_panels(F&& f, std::vector<double> cuts, const QuadSpec& spec = {}) {
    spec.validate();
    std::sort(cuts.begin(), cuts.end());
    if (cuts.size() < 2 || std::isinf(cuts.front()) || std::isinf(cuts.back()))
        throw DomainError("integrate_panels: breakpoints must describe a finite interval");
    auto& fn = f;
    return detail::adapt(fn, cuts, spec);
}

/// Iterated integration over a box. `order[0]` is the outermost axis. The
/// integrand receives the full coordinate vector in the box's axis order.
template <class F>
QuadResult integrate_nd(F&& f, std::span<const Interval> box, std::span<const QuadSpec> specs,
                        std::span<const int> order) {
    const std::size_t dim = box.size();
    if (dim == 0 || specs.size() != dim || order.size() != dim)
        throw DomainError("integrate_nd: box, specs and order must have equal non-zero size");
    std::vector<bool> seen(dim, false);
    for (int ax : order) {
        if (ax < 0 || static_cast<std::size_t>(ax) >= dim || seen[ax])
            throw DomainError("integrate_nd: order must be a permutation of the axes");
        seen[ax] = true;
    }
    std::vector<double> point(dim, 0.0);
    std::function<QuadResult(std::size_t)> level = [&](std::size_t depth) -> QuadResult {
        const int axis = order[depth];
        bool inner_failed = false;
        QuadResult r;
        if (depth + 1 == dim) {
            r = integrate_1d(
                [&](double x) {
                    point[axis] = x;
                    return static_cast<double>(f(std::span<const double>(point)));
                },
                box[axis], specs[axis]);
        } else {
            r = integrate_1d(
                [&](double x) {
                    point[axis] = x;
                    QuadResult inner = level(depth + 1);
                    inner_failed = inner_failed || !inner.converged;
                    return inner;
                },
                box[axis], specs[axis]);
        }
        if (!r.converged && !inner_failed) r.failed_axis = axis;
        return r;
    };
    return level(0);
}

} // namespace kolmo::quad
