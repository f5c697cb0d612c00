#pragma once

// Simulation of the Kolmogorov diffusion W = (U, V), U' = V, V = y + B, on
// a uniform grid with exact Gaussian increments, and detection of
// tau = inf{t >= 0 : U_t <= 0}.
//
// Between grid points the path is refined by exact conditional sampling:
// given both endpoint states the midpoint of a step is Gaussian, with mean
// on the cubic Hermite interpolant. Steps whose interpolant comes within a
// few conditional standard deviations of 0 are bisected recursively, so a
// crossing is missed only below the finest refinement scale.

#include <array>
#include <cmath>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include <boost/random/normal_distribution.hpp>

#include "kolmo/core.hpp"
#include "kolmo/stats.hpp"

namespace kolmo::diffusion {

struct DiffusionPath {
    double dt = 0.0;
    std::vector<State> states;
    std::optional<std::size_t> killed_index; ///< first grid index at or after the exit
    bool killed_between_points = false;      ///< exit found by sub-grid refinement only
};

struct RefineSpec {
    int max_depth = 8;        ///< bisection levels below the grid step
    double threshold = 6.0;   ///< conditional standard deviations that trigger a bisection
    bool enabled = true;
};

namespace detail {

struct Mat2 {
    double a, b, c, d; // [[a, b], [c, d]]
    Mat2 operator*(const Mat2& o) const {
        return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
    }
    Mat2 operator+(const Mat2& o) const { return {a + o.a, b + o.b, c + o.c, d + o.d}; }
    Mat2 inverse() const {
        const double det = a * d - b * c;
        return {d / det, -b / det, -c / det, a / det};
    }
    Mat2 transpose() const { return {a, c, b, d}; }
    std::pair<double, double> apply(double x, double y) const { return {a * x + b * y, c * x + d * y}; }
};

inline Mat2 covariance(double h) { return {h * h * h / 3.0, h * h / 2.0, h * h / 2.0, h}; }
inline Mat2 transition(double h) { return {1.0, h, 0.0, 1.0}; }

/// Law of the midpoint state given both ends of a step of length 2h.
struct MidpointLaw {
    Mat2 gain0, gain1;        // mean = gain0 X0 + gain1 X1
    double l11, l21, l22;     // Cholesky factor of the conditional covariance
    double sd_u;              // conditional standard deviation of U at the midpoint
};

inline MidpointLaw midpoint_law(double h) {
    const Mat2 qi = covariance(h).inverse();
    const Mat2 a = transition(h);
    const Mat2 prec = qi + a.transpose() * qi * a;
    const Mat2 sigma = prec.inverse();
    MidpointLaw m;
    m.gain0 = sigma * qi * a;
    m.gain1 = sigma * a.transpose() * qi;
    m.l11 = std::sqrt(sigma.a);
    m.l21 = sigma.c / m.l11;
    m.l22 = std::sqrt(std::max(0.0, sigma.d - m.l21 * m.l21));
    m.sd_u = m.l11;
    return m;
}

// Minimum over [0, h] of the cubic Hermite interpolant of U.
inline double hermite_min(double u0, double v0, double u1, double v1, double h) {
    // U(s) = u0 + v0 s + c2 s^2 + c3 s^3
    const double c2 = (3.0 * (u1 - u0) / h - 2.0 * v0 - v1) / h;
    const double c3 = (2.0 * (u0 - u1) / h + v0 + v1) / (h * h);
    double m = std::min(u0, u1);
    // roots of v0 + 2 c2 s + 3 c3 s^2
    auto consider = [&](double s) {
        if (s > 0.0 && s < h) m = std::min(m, u0 + s * (v0 + s * (c2 + s * c3)));
    };
    if (std::abs(c3) > 1e-300) {
        const double disc = c2 * c2 - 3.0 * c3 * v0;
        if (disc >= 0.0) {
            const double r = std::sqrt(disc);
            consider((-c2 - r) / (3.0 * c3));
            consider((-c2 + r) / (3.0 * c3));
        }
    } else if (std::abs(c2) > 1e-300) {
        consider(-v0 / (2.0 * c2));
    }
    return m;
}

} // namespace detail

/// Grid stepper shared by the path and batch simulators.
class Stepper {
public:
    Stepper(double dt, RefineSpec refine = {}) : dt_(dt), refine_(refine) {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("diffusion: dt must be positive");
        s11_ = std::sqrt(dt * dt * dt / 3.0);
        s21_ = 0.5 * kSqrt3 * std::sqrt(dt);
        s22_ = 0.5 * std::sqrt(dt);
        double h = 0.5 * dt;
        for (int k = 0; k < refine.max_depth; ++k, h *= 0.5) laws_.push_back(detail::midpoint_law(h));
    }

    double dt() const noexcept { return dt_; }

    /// (dt v + G1, G2) with Cov(G) = [[dt^3/3, dt^2/2], [dt^2/2, dt]].
    template <class Rng>
    std::pair<double, double> increment(double v, Rng& rng) {
        const double z1 = normal_(rng), z2 = normal_(rng);
        return {dt_ * v + s11_ * z1, s21_ * z1 + s22_ * z2};
    }

    /// True if the bridge between two states with positive U is found to
    /// exit by recursive midpoint sampling.
    template <class Rng>
    bool bridge_exits(State a, State b, Rng& rng, int depth = 0) {
        if (!refine_.enabled || depth >= refine_.max_depth) return false;
        const double h = dt_ * std::ldexp(1.0, -depth);
        const auto& law = laws_[depth];
        const double cut = refine_.threshold * law.sd_u;
        // the Hermite velocity basis functions are bounded by 4/27
        if (std::min(a.t_coord, b.t_coord) - 0.15 * h * (std::abs(a.s_coord) + std::abs(b.s_coord)) > cut)
            return false;
        if (detail::hermite_min(a.t_coord, a.s_coord, b.t_coord, b.s_coord, h) > cut)
            return false;
        const auto [m0u, m0v] = law.gain0.apply(a.t_coord, a.s_coord);
        const auto [m1u, m1v] = law.gain1.apply(b.t_coord, b.s_coord);
        const double z1 = normal_(rng), z2 = normal_(rng);
        const State mid{m0u + m1u + law.l11 * z1, m0v + m1v + law.l21 * z1 + law.l22 * z2};
        if (mid.t_coord <= 0.0) return true;
        return bridge_exits(a, mid, rng, depth + 1) || bridge_exits(mid, b, rng, depth + 1);
    }

private:
    double dt_;
    RefineSpec refine_;
    double s11_, s21_, s22_;
    std::vector<detail::MidpointLaw> laws_;
    boost::random::normal_distribution<double> normal_;
};

/// (du, dv) for a single step of length dt from velocity v.
template <class Rng>
std::pair<double, double> exact_increment(double v, double dt, Rng& rng) {
    Stepper s(dt, RefineSpec{0, 0.0, false});
    return s.increment(v, rng);
}

inline std::size_t grid_steps(double horizon, double dt) {
    if (!(horizon > 0.0)) throw DomainError("diffusion: horizon must be positive");
    if (!(dt > 0.0) || dt > horizon * (1.0 + 1e-12)) throw DomainError("diffusion: need 0 < dt <= horizon");
    const double n = horizon / dt;
    const double r = std::round(n);
    if (std::abs(n - r) > 1e-9 * n) throw DomainError("diffusion: dt must divide the horizon");
    return static_cast<std::size_t>(r);
}

/// Full path on the grid. With `kill`, the path stops at the first grid
/// index at or after the detected exit.
template <class Rng>
DiffusionPath simulate_diffusion(State start, double horizon, double dt, Rng& rng, bool kill, RefineSpec refine = {}) {
    const std::size_t n = grid_steps(horizon, dt);
    Stepper st(dt, refine);
    DiffusionPath p;
    p.dt = dt;
    p.states.reserve(n + 1);
    p.states.push_back(start);
    if (kill && start.t_coord <= 0.0) {
        p.killed_index = 0;
        return p;
    }
    State z = start;
    for (std::size_t k = 1; k <= n; ++k) {
        const auto [du, dv] = st.increment(z.s_coord, rng);
        const State next{z.t_coord + du, z.s_coord + dv};
        p.states.push_back(next);
        if (kill) {
            if (next.t_coord <= 0.0) {
                p.killed_index = k;
                return p;
            }
            if (st.bridge_exits(z, next, rng)) {
                p.killed_index = k;
                p.killed_between_points = true;
                return p;
            }
        }
        z = next;
    }
    return p;
}

/// Outcome of one killed run with survival recorded on nested grids.
struct SurvivalOutcome {
    State end;
    /// survived[j]: no grid point of spacing dt * 2^j (j < levels) has U <= 0
    std::array<bool, 8> survived{};
    bool survived_refined = false; ///< finest grid plus sub-grid refinement
};

/// Runs to the horizon recording survival on the nested grids
/// dt, 2 dt, ..., 2^{levels-1} dt of one fine path. Stops once even the
/// coarsest grid has seen an exit.
template <class Rng>
SurvivalOutcome run_survival(State start, std::size_t steps, Stepper& st, Rng& rng, int levels = 1) {
    SurvivalOutcome o;
    levels = std::clamp(levels, 1, 8);
    for (int j = 0; j < levels; ++j) o.survived[j] = start.t_coord > 0.0;
    o.survived_refined = start.t_coord > 0.0;
    State z = start;
    o.end = z;
    if (!o.survived[levels - 1]) return o;
    for (std::size_t k = 1; k <= steps; ++k) {
        const auto [du, dv] = st.increment(z.s_coord, rng);
        const State next{z.t_coord + du, z.s_coord + dv};
        if (next.t_coord <= 0.0) {
            for (int j = 0; j < levels; ++j)
                if ((k & ((std::size_t{1} << j) - 1)) == 0) o.survived[j] = false;
            o.survived_refined = false;
        } else if (o.survived_refined && st.bridge_exits(z, next, rng)) {
            o.survived_refined = false;
        }
        z = next;
        o.end = z;
        if (!o.survived[levels - 1]) break;
    }
    return o;
}

/// Survival estimate with its binomial standard error.
struct SurvivalEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};

inline SurvivalEstimate binomial_estimate(std::size_t hits, std::size_t n) {
    const double p = n ? static_cast<double>(hits) / n : 0.0;
    return {p, n ? std::sqrt(p * (1.0 - p) / n) : 0.0, n};
}

/// Monte Carlo P_z(tau > horizon).
template <class Rng>
SurvivalEstimate survival_monte_carlo(State start, double horizon, double dt, std::size_t paths, Rng& rng,
                                      RefineSpec refine = {}) {
    const std::size_t n = grid_steps(horizon, dt);
    Stepper st(dt, refine);
    std::size_t alive = 0;
    for (std::size_t i = 0; i < paths; ++i) alive += run_survival(start, n, st, rng, 1).survived_refined;
    return binomial_estimate(alive, paths);
}

struct ScalingReport {
    std::vector<stats::TestReport> ks;     ///< per coordinate and time point
    SurvivalEstimate survival_original;    ///< P_z(tau > t)
    SurvivalEstimate survival_scaled;      ///< P_{a_t z}(tau > 1)
    bool pass = false;
};

/// Compares a_t applied to W on [0, t] from z with W on [0, 1] from a_t(z)
/// at the times 1/4, 1/2, 1 (unkilled), and the two survival probabilities.
template <class Rng>
ScalingReport diffusion_scaling_check(State start, double t, std::size_t samples, Rng& rng, std::size_t grid = 256,
                                      double level = 0.01) {
    if (!(t > 0.0)) throw DomainError("diffusion_scaling_check: t must be positive");
    const TimeHorizon th(t);
    const State scaled = scale_down(start, th);
    const std::array<std::size_t, 3> marks{grid / 4, grid / 2, grid};
    std::array<std::array<std::vector<double>, 2>, 3> a, b;
    Rng rng_b = rng.split(1);
    Stepper sa(t / grid), sb(1.0 / grid);
    std::size_t alive_a = 0, alive_b = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        for (int which = 0; which < 2; ++which) {
            Stepper& st = which == 0 ? sa : sb;
            Rng& r = which == 0 ? rng : rng_b;
            State z = which == 0 ? start : scaled;
            bool alive = z.t_coord > 0.0;
            std::size_t m = 0;
            for (std::size_t k = 1; k <= grid; ++k) {
                const auto [du, dv] = st.increment(z.s_coord, r);
                const State next{z.t_coord + du, z.s_coord + dv};
                if (alive && (next.t_coord <= 0.0 || st.bridge_exits(z, next, r))) alive = false;
                z = next;
                if (m < marks.size() && k == marks[m]) {
                    const State w = which == 0 ? scale_down(z, th) : z;
                    auto& dst = which == 0 ? a : b;
                    dst[m][0].push_back(w.t_coord);
                    dst[m][1].push_back(w.s_coord);
                    ++m;
                }
            }
            (which == 0 ? alive_a : alive_b) += alive;
        }
    }
    ScalingReport rep;
    rep.pass = true;
    for (std::size_t m = 0; m < marks.size(); ++m)
        for (int c = 0; c < 2; ++c) {
            auto r = stats::ks_distance(stats::EmpiricalDist::one_d(a[m][c]), stats::EmpiricalDist::one_d(b[m][c]),
                                        level);
            r.name = "scaling_ks";
            r.metadata["time"] = static_cast<double>(marks[m]) / grid;
            r.metadata["coordinate"] = c;
            rep.pass = rep.pass && r.pass;
            rep.ks.push_back(std::move(r));
        }
    rep.survival_original = binomial_estimate(alive_a, samples);
    rep.survival_scaled = binomial_estimate(alive_b, samples);
    const double se = std::hypot(rep.survival_original.std_error, rep.survival_scaled.std_error);
    rep.pass = rep.pass && std::abs(rep.survival_original.value - rep.survival_scaled.value) <= 3.0 * se + 1e-12;
    return rep;
}

/// Path dump with dt in the header line.
inline void write_path_csv(std::ostream& os, const DiffusionPath& p) {
    os << "# dt=" << p.dt << '\n' << "k,U,V\n";
    os.precision(17);
    for (std::size_t k = 0; k < p.states.size(); ++k)
        os << k << ',' << p.states[k].t_coord << ',' << p.states[k].s_coord << '\n';
}

} // namespace kolmo::diffusion
