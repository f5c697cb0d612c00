#pragma once

// Verification suites. Each suite reads its sizes, seeds and thresholds
// from a flat key = value config and returns machine-readable reports.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "kolmo/conditioning.hpp"
#include "kolmo/core.hpp"
#include "kolmo/density.hpp"
#include "kolmo/diffusion.hpp"
#include "kolmo/specfun.hpp"
#include "kolmo/stats.hpp"
#include "kolmo/walk.hpp"

namespace kolmo::harness {

inline constexpr int kReportSchemaVersion = 1;

class ConfigError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Flat `key = value` configuration. `#` starts a comment; lists are
/// comma or whitespace separated; numbers accept the form `2^-12`.
class Config {
public:
    static Config parse(std::istream& is, const std::string& source = "<config>") {
        Config c;
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            const std::string t = trim(line);
            if (t.empty()) continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos)
                throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
            const std::string key = trim(t.substr(0, eq));
            if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
            c.values_[key] = trim(t.substr(eq + 1));
        }
        return c;
    }

    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file " + path);
        return parse(in, path);
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) > 0; }

    const std::string& get_string(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
        return it->second;
    }

    double get_double(const std::string& key) const { return number(key, get_string(key)); }

    std::size_t get_size(const std::string& key) const {
        const double d = get_double(key);
        if (!(d >= 0.0) || d != std::floor(d)) throw ConfigError("config key '" + key + "' must be a count");
        return static_cast<std::size_t>(d);
    }

    std::uint64_t get_seed(const std::string& key) const {
        const std::string& s = get_string(key);
        try {
            std::size_t pos = 0;
            const auto v = std::stoull(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "' must be an unsigned integer");
        }
    }

    bool get_bool(const std::string& key) const {
        const std::string& s = get_string(key);
        if (s == "true" || s == "1" || s == "yes") return true;
        if (s == "false" || s == "0" || s == "no") return false;
        throw ConfigError("config key '" + key + "' must be a boolean");
    }

    std::vector<double> get_doubles(const std::string& key) const {
        std::vector<double> out;
        for (const auto& tok : split(get_string(key))) out.push_back(number(key, tok));
        if (out.empty()) throw ConfigError("config key '" + key + "' is an empty list");
        return out;
    }

    std::vector<std::size_t> get_sizes(const std::string& key) const {
        std::vector<std::size_t> out;
        for (double d : get_doubles(key)) {
            if (!(d >= 0.0) || d != std::floor(d)) throw ConfigError("config key '" + key + "' must list counts");
            out.push_back(static_cast<std::size_t>(d));
        }
        return out;
    }

    std::vector<std::string> get_strings(const std::string& key) const { return split(get_string(key)); }

    /// Pairs "x y, x y, ..." as states.
    std::vector<State> get_states(const std::string& key) const {
        const auto v = get_doubles(key);
        if (v.size() % 2) throw ConfigError("config key '" + key + "' must list coordinate pairs");
        std::vector<State> out;
        for (std::size_t i = 0; i < v.size(); i += 2) out.push_back({v[i], v[i + 1]});
        return out;
    }

    State get_state(const std::string& key) const {
        const auto s = get_states(key);
        if (s.size() != 1) throw ConfigError("config key '" + key + "' must be a single pair");
        return s.front();
    }

    nlohmann::json to_json() const {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& [k, v] : values_) j[k] = v;
        return j;
    }

    const std::map<std::string, std::string>& values() const noexcept { return values_; }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return {};
        return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    }

    static std::vector<std::string> split(const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        for (char ch : s) {
            if (ch == ',' || ch == ' ' || ch == '\t') {
                if (!cur.empty()) out.push_back(cur);
                cur.clear();
            } else {
                cur += ch;
            }
        }
        if (!cur.empty()) out.push_back(cur);
        return out;
    }

    static double number(const std::string& key, const std::string& s) {
        try {
            if (const auto caret = s.find('^'); caret != std::string::npos)
                return std::pow(parse_plain(s.substr(0, caret)), parse_plain(s.substr(caret + 1)));
            return parse_plain(s);
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': '" + s + "' is not a number");
        }
    }

    static double parse_plain(const std::string& s) {
        std::size_t pos = 0;
        const double d = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return d;
    }

    std::map<std::string, std::string> values_;
};

// ------------------------------------------------------------ execution helpers

/// Runs f(shard) for shard in [0, shards) on up to `threads` workers. Work
/// is split by shard, not by thread, so results do not depend on `threads`.
template <class F>
void for_shards(std::size_t shards, unsigned threads, F&& f) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(shards)));
    if (threads == 1) {
        for (std::size_t s = 0; s < shards; ++s) f(s);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex m;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t s; (s = next++) < shards;) {
                try {
                    f(s);
                } catch (...) {
                    std::lock_guard lock(m);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

/// Independent stream for (suite tag, shard).
inline RngStream shard_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t shard) {
    return RngStream(seed, tag).split(shard);
}

/// Splits `total` into `shards` nearly equal parts.
inline std::size_t shard_count(std::size_t total, std::size_t shards, std::size_t s) {
    return total / shards + (s < total % shards ? 1 : 0);
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct Context {
    const Config& cfg;
    std::uint64_t seed;
    unsigned threads;
    std::size_t shards;
};

inline stats::TestReport report(std::string name, double statistic, double threshold, bool pass,
                                nlohmann::json meta = nlohmann::json::object()) {
    stats::TestReport r;
    r.name = std::move(name);
    r.statistic = statistic;
    r.threshold = threshold;
    r.pass = pass;
    r.metadata = std::move(meta);
    return r;
}

/// Reports "statistic <= threshold".
inline stats::TestReport at_most(std::string name, double statistic, double threshold,
                                 nlohmann::json meta = nlohmann::json::object()) {
    const bool pass = statistic <= threshold;
    return report(std::move(name), statistic, threshold, pass, std::move(meta));
}

/// 1 if the values decrease strictly, with the number of violations as statistic.
inline stats::TestReport decreasing(std::string name, const std::vector<double>& values,
                                    nlohmann::json meta = nlohmann::json::object()) {
    int bad = 0;
    for (std::size_t i = 1; i < values.size(); ++i) bad += !(values[i] < values[i - 1]);
    meta["values"] = values;
    return report(std::move(name), bad, 0.0, bad == 0, std::move(meta));
}

inline double ks_one(const std::vector<double>& xs, const std::vector<double>& ws,
                     const std::function<double(double)>& cdf) {
    return stats::ks_distance(stats::EmpiricalDist::one_d(xs, ws), cdf).statistic;
}

inline double ks_two(const std::vector<double>& a, const std::vector<double>& wa, const std::vector<double>& b,
                     const std::vector<double>& wb) {
    return stats::ks_distance(stats::EmpiricalDist::one_d(a, wa), stats::EmpiricalDist::one_d(b, wb)).statistic;
}

namespace detail {

// Limit tables are expensive; suites in one process share them.
inline const density::TabulatedDensity& cached_table(const std::string& key,
                                                     const std::function<density::TabulatedDensity()>& make) {
    static std::mutex m;
    static std::unordered_map<std::string, density::TabulatedDensity> cache;
    std::lock_guard lock(m);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, make()).first;
    return it->second;
}

inline const density::TabulatedDensity& meander_table(int order) {
    return cached_table("meander/" + std::to_string(order), [&] { return density::meander_endpoint_table(1.0, order); });
}

inline const density::TabulatedDensity& bridge_midpoint_table(int order) {
    return cached_table("bridge/" + std::to_string(order), [&] { return density::bridge_table(0.5, order); });
}

inline walk::StepLaw law_by_name(const std::string& name) {
    if (name == "rademacher") return walk::StepLaw::rademacher();
    if (name == "gaussian") return walk::StepLaw::gaussian();
    throw ConfigError("unknown step law '" + name + "'");
}

struct Scaled {
    std::vector<double> u, v;
};

inline Scaled scale_states(const std::vector<State>& ends, std::size_t n, double sigma, double c = 0.0) {
    Scaled s;
    const double nn = static_cast<double>(n);
    const double su = sigma * nn * std::sqrt(nn), sv = sigma * std::sqrt(nn);
    for (const State& z : ends) {
        s.u.push_back((z.t_coord - 0.5 * nn * (nn + 1.0) * c) / su);
        s.v.push_back((z.s_coord - nn * c) / sv);
    }
    return s;
}

// Walk meander end states over all shards, concatenated in shard order.
inline std::vector<State> walk_meanders(const Context& ctx, std::uint64_t tag, State start, const walk::StepLaw& law,
                                        std::size_t n, std::size_t count, std::size_t budget) {
    std::vector<std::vector<State>> parts(ctx.shards);
    for_shards(ctx.shards, ctx.threads, [&](std::size_t s) {
        RngStream rng = shard_stream(ctx.seed, tag, s);
        const std::size_t k = shard_count(count, ctx.shards, s);
        if (k) parts[s] = conditioning::meander_walk_endpoints(start, law, n, k, rng, budget).ends;
    });
    std::vector<State> out;
    for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

inline double gauge(State z) { return alpha(z); }

} // namespace detail

using Reports = std::vector<stats::TestReport>;

// ------------------------------------------------------------ suites

/// g(0) from the closed form, the hypergeometric route and the integral.
inline Reports suite_anchor(const Context& ctx) {
    const Config& c = ctx.cfg;
    const double closed = specfun::g_at_zero();
    const double y = c.get_double("anchor.y_probe");
    // the symmetric average cancels the linear term of g at 0
    const double hyper = 0.5 * (specfun::g_boundary(y) + specfun::g_boundary(-y));
    const density::QuadResult integral = density::h_integral({1.0, 0.0}, {1e-10, 1e-14, 200});
    const double vals[3] = {closed, hyper, integral.value};
    double worst = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) worst = std::max(worst, std::abs(vals[i] - vals[j]) / std::abs(vals[i]));
    return {at_most("anchor.g0_three_ways", worst, c.get_double("anchor.tolerance"),
                    {{"closed_form", closed}, {"hypergeometric", hyper}, {"integral", integral.value},
                     {"integral_error", integral.error_estimate}})};
}

/// Scaling of h and reversal symmetry of the free density on random cases.
inline Reports suite_identities(const Context& ctx) {
    const Config& c = ctx.cfg;
    const std::size_t cases = c.get_size("identities.cases");
    RngStream rng = shard_stream(ctx.seed, 2, 0);
    auto unif = [&](double a, double b) { return a + (b - a) * rng.uniform(); };
    double worst_h = 0.0, worst_p = 0.0;
    for (std::size_t i = 0; i < cases; ++i) {
        const double x = std::pow(10.0, unif(-2.0, 1.0)), y = unif(-3.0, 3.0), lam = std::pow(10.0, unif(-1.0, 1.0));
        const double lhs = specfun::h_hypergeometric({std::pow(lam, 1.5) * x, std::sqrt(lam) * y});
        const double rhs = std::pow(lam, 0.25) * specfun::h_hypergeometric({x, y});
        if (rhs > 0.0) worst_h = std::max(worst_h, std::abs(lhs - rhs) / rhs);
    }
    for (std::size_t i = 0; i < cases; ++i) {
        const double t = unif(0.25, 4.0);
        const State a{unif(-2.0, 2.0), unif(-2.0, 2.0)}, b{unif(-2.0, 2.0), unif(-2.0, 2.0)};
        const double p1 = density::p_free({a, b, t});
        const double p2 = density::p_free({{b.t_coord, -b.s_coord}, {a.t_coord, -a.s_coord}, t});
        const double m = std::max(p1, p2);
        if (m > 0.0) worst_p = std::max(worst_p, std::abs(p1 - p2) / m);
    }
    return {at_most("identities.h_scaling", worst_h, c.get_double("identities.h_tolerance"), {{"cases", cases}}),
            at_most("identities.p_reversal", worst_p, c.get_double("identities.p_tolerance"), {{"cases", cases}})};
}

/// Generator residual of h by finite differences, and the martingale
/// property E[h(W(t)); tau > t] = h(z) by simulation.
inline Reports suite_harmonicity(const Context& ctx) {
    const Config& c = ctx.cfg;
    Reports out;
    {
        const std::size_t m = c.get_size("harmonicity.grid_points");
        const double step = c.get_double("harmonicity.fd_step");
        const auto xr = c.get_doubles("harmonicity.cbrt_x_range"), yr = c.get_doubles("harmonicity.y_range");
        double worst = 0.0;
        State at{};
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                const double cx = xr[0] + (xr[1] - xr[0]) * i / (m - 1.0);
                const double x = cx * cx * cx, y = yr[0] + (yr[1] - yr[0]) * j / (m - 1.0);
                const double a = alpha({x, y});
                // steps follow the local length scales of h, which is
                // exponentially small where y / x^{1/3} is very negative
                const double cx3 = std::cbrt(x), xi = y / cx3, dl = specfun::dlog_g(xi);
                const double dx = step * std::min(x, 1.0 / std::abs(1.0 / (6.0 * x) - xi * dl / (3.0 * x)));
                const double dy = step * std::min(a, cx3 / std::abs(dl));
                auto h = [](double xx, double yy) { return specfun::h_hypergeometric({xx, yy}); };
                const double h0 = h(x, y);
                const double hx = (h(x + dx, y) - h(x - dx, y)) / (2.0 * dx);
                const double hyy = (h(x, y + dy) - 2.0 * h0 + h(x, y - dy)) / (dy * dy);
                const double r = std::abs(y * hx + 0.5 * hyy) * a * a / h0;
                if (r > worst) {
                    worst = r;
                    at = {x, y};
                }
            }
        out.push_back(at_most("harmonicity.generator_residual", worst, c.get_double("harmonicity.residual_tolerance"),
                              {{"grid", m}, {"worst_at", {at.t_coord, at.s_coord}}}));
    }
    {
        const State z = c.get_state("harmonicity.mc_start");
        const double horizon = c.get_double("harmonicity.mc_horizon"), dt = c.get_double("harmonicity.mc_dt");
        const std::size_t paths = c.get_size("harmonicity.mc_paths");
        const std::size_t steps = diffusion::grid_steps(horizon, dt);
        std::vector<double> s1(ctx.shards), s2(ctx.shards);
        for_shards(ctx.shards, ctx.threads, [&](std::size_t s) {
            RngStream rng = shard_stream(ctx.seed, 3, s);
            diffusion::Stepper st(dt);
            for (std::size_t i = shard_count(paths, ctx.shards, s); i > 0; --i) {
                const auto o = diffusion::run_survival(z, steps, st, rng, 1);
                if (!o.survived_refined) continue;
                const double h = specfun::h_fast(o.end);
                s1[s] += h;
                s2[s] += h * h;
            }
        });
        double a = 0.0, b = 0.0;
        for (std::size_t s = 0; s < ctx.shards; ++s) {
            a += s1[s];
            b += s2[s];
        }
        const double n = static_cast<double>(paths), mean = a / n;
        const double se = std::sqrt(std::max(0.0, b / n - mean * mean) / (n - 1.0));
        const double h0 = specfun::h_hypergeometric(z);
        out.push_back(at_most("harmonicity.martingale", std::abs(mean - h0) / se,
                              c.get_double("harmonicity.mc_stderr_multiple"),
                              {{"mean", mean}, {"std_error", se}, {"h", h0}, {"paths", paths}, {"dt", dt}}));
    }
    return out;
}

/// The two killed-density routes on a grid of (start, target, t).
inline Reports suite_routes(const Context& ctx) {
    const Config& c = ctx.cfg;
    const auto starts = c.get_states("routes.starts"), targets = c.get_states("routes.targets");
    const auto times = c.get_doubles("routes.times");
    const double rel = c.get_double("routes.rel_tol"), abs_factor = c.get_double("routes.abs_factor");
    struct Row {
        State from, to;
        double t, a, b, err_a, err_b;
        bool converged;
    };
    std::vector<DensityPoint> pts;
    for (State s : starts)
        for (State g : targets)
            for (double t : times) pts.push_back({s, g, t});
    std::vector<Row> rows(pts.size());
    for_shards(pts.size(), ctx.threads, [&](std::size_t i) {
        const auto& pt = pts[i];
        const density::DensityTolerance tol{rel, std::max(abs_factor * density::p_free(pt), 1e-300), 200};
        const auto a = density::p_killed_route_a(pt, tol);
        const auto b = density::p_killed_route_b(pt, tol);
        rows[i] = {pt.from, pt.to, pt.t, a.value, b.total.value, a.error_estimate, b.total.error_estimate,
                   a.converged && b.total.converged};
    });
    double worst_gap = 0.0, worst_rel = 0.0;
    bool all_converged = true;
    nlohmann::json table = nlohmann::json::array();
    for (const Row& r : rows) {
        const double err = r.err_a + r.err_b, gap = std::abs(r.a - r.b);
        worst_gap = std::max(worst_gap, err > 0.0 ? gap / err : (gap > 0.0 ? HUGE_VAL : 0.0));
        worst_rel = std::max(worst_rel, err / std::abs(r.a));
        all_converged = all_converged && r.converged;
        table.push_back({{"start", {r.from.t_coord, r.from.s_coord}}, {"target", {r.to.t_coord, r.to.s_coord}},
                         {"t", r.t}, {"route_a", r.a}, {"route_b", r.b}, {"error", err}, {"converged", r.converged}});
    }
    auto gap_report = at_most("routes.gap_within_error", worst_gap, 1.0, {{"points", table}});
    gap_report.pass = gap_report.pass && all_converged;
    return {gap_report, at_most("routes.relative_error", worst_rel, c.get_double("routes.max_relative_error"),
                                {{"points", rows.size()}})};
}

/// Survival from the killed density against simulation, with the grid-bias
/// ladder over nested grids of the same paths.
inline Reports suite_survival(const Context& ctx) {
    const Config& c = ctx.cfg;
    const auto starts = c.get_states("survival.starts");
    const std::size_t paths = c.get_size("survival.paths");
    const double dt = c.get_double("survival.dt");
    const int levels = static_cast<int>(c.get_size("survival.ladder_levels"));
    const double k = c.get_double("survival.stderr_multiple");
    const density::DensityTolerance tol{c.get_double("survival.rel_tol"), 1e-13, 200};
    const std::size_t steps = diffusion::grid_steps(1.0, dt);
    Reports out;
    for (std::size_t si = 0; si < starts.size(); ++si) {
        const State z = starts[si];
        const auto q = density::survival_quadrature(z, 1.0, tol);
        if (!q.converged) throw NumericalFailure("survival: quadrature did not converge");
        std::vector<std::array<std::size_t, 9>> counts(ctx.shards);
        for_shards(ctx.shards, ctx.threads, [&](std::size_t s) {
            RngStream rng = shard_stream(ctx.seed, 50 + si, s);
            diffusion::Stepper st(dt);
            auto& cnt = counts[s];
            cnt.fill(0);
            for (std::size_t i = shard_count(paths, ctx.shards, s); i > 0; --i) {
                const auto o = diffusion::run_survival(z, steps, st, rng, levels);
                for (int j = 0; j < levels; ++j) cnt[j] += o.survived[j];
                cnt[8] += o.survived_refined;
            }
        });
        std::array<std::size_t, 9> tot{};
        for (const auto& cnt : counts)
            for (int j = 0; j < 9; ++j) tot[j] += cnt[j];
        const auto mc = diffusion::binomial_estimate(tot[8], paths);
        const double se = std::hypot(mc.std_error, q.error_estimate);
        const std::string tag = "survival.start" + std::to_string(si);
        out.push_back(at_most(tag + ".mc_vs_density", std::abs(mc.value - q.value) / se, k,
                              {{"start", {z.t_coord, z.s_coord}}, {"density_integral", q.value},
                               {"density_error", q.error_estimate}, {"monte_carlo", mc.value},
                               {"std_error", mc.std_error}, {"paths", paths}, {"dt", dt}}));
        // Coarsest grid first. The bias of grid-only detection is measured
        // against the refined detection on the same paths: it must be
        // non-negative and must not grow as dt halves. Against the density
        // integral it would drown in the sampling error.
        std::vector<double> bias, vs_density, grid_dt;
        for (int j = levels - 1; j >= 0; --j) {
            bias.push_back((static_cast<double>(tot[j]) - static_cast<double>(tot[8])) / paths);
            vs_density.push_back(static_cast<double>(tot[j]) / paths - q.value);
            grid_dt.push_back(dt * std::ldexp(1.0, j));
        }
        int bad = 0;
        for (std::size_t i = 0; i < bias.size(); ++i) bad += bias[i] < 0.0 || (i > 0 && bias[i] > bias[i - 1]);
        out.push_back(report(tag + ".grid_bias_ladder", bad, 0.0, bad == 0,
                             {{"dt", grid_dt}, {"bias_vs_refined", bias}, {"grid_minus_density", vs_density}}));
    }
    return out;
}

/// p-bar_1(z; u, v) / h(z) against h-bar(1, u, -v) along z = (a^3, a).
inline Reports suite_propbarp(const Context& ctx) {
    const Config& c = ctx.cfg;
    const auto alphas = c.get_doubles("propbarp.alphas");
    const auto us = c.get_doubles("propbarp.u_grid"), vs = c.get_doubles("propbarp.v_grid");
    const density::DensityTolerance tol{c.get_double("propbarp.rel_tol"), 1e-13, 200};
    std::vector<std::pair<double, double>> grid;
    for (double u : us)
        for (double v : vs) grid.emplace_back(u, v);
    std::vector<double> hb(grid.size());
    for_shards(grid.size(), ctx.threads, [&](std::size_t i) {
        const auto r = density::h_bar(1.0, grid[i].first, -grid[i].second, tol);
        if (!r.converged) throw NumericalFailure("propbarp: h_bar did not converge");
        hb[i] = r.value;
    });
    const double hb_max = *std::max_element(hb.begin(), hb.end());
    std::vector<double> dist;
    nlohmann::json per = nlohmann::json::array();
    for (double a : alphas) {
        const State z{a * a * a, a};
        const double hz = specfun::h_hypergeometric(z);
        std::vector<double> d(grid.size());
        for_shards(grid.size(), ctx.threads, [&](std::size_t i) {
            const auto r = density::p_killed_route_a({z, {grid[i].first, grid[i].second}, 1.0}, tol);
            if (!r.converged) throw NumericalFailure("propbarp: killed density did not converge");
            d[i] = std::abs(r.value / hz - hb[i]);
        });
        dist.push_back(*std::max_element(d.begin(), d.end()));
        per.push_back({{"alpha", a}, {"max_deviation", dist.back()}});
    }
    return {decreasing("propbarp.ladder", dist, {{"alphas", alphas}}),
            at_most("propbarp.final", dist.back(), c.get_double("propbarp.final_fraction") * hb_max,
                    {{"max_hbar", hb_max}, {"per_alpha", per}})};
}

/// t^{1/4} P_z(tau > t) / h(z) over small starts and several t.
inline Reports suite_kappa(const Context& ctx) {
    const Config& c = ctx.cfg;
    const auto starts = c.get_states("kappa.starts");
    const auto times = c.get_doubles("kappa.times");
    density::SurvivalOptions o;
    o.tol = {c.get_double("kappa.rel_tol"), 1e-14, 200};
    std::vector<density::KappaEstimate> est(times.size());
    for_shards(times.size(), ctx.threads, [&](std::size_t i) {
        est[i] = density::estimate_kappa(starts, times[i], density::KappaMethod::quadrature_ratio, o);
    });
    std::vector<double> all;
    nlohmann::json per = nlohmann::json::array();
    for (std::size_t i = 0; i < times.size(); ++i) {
        all.insert(all.end(), est[i].ratios.begin(), est[i].ratios.end());
        per.push_back({{"t", times[i]}, {"ratios", est[i].ratios}, {"errors", est[i].ratio_errors}});
    }
    double mean = 0.0;
    for (double r : all) mean += r / all.size();
    double spread = 0.0;
    for (double r : all) spread = std::max(spread, std::abs(r - mean) / mean);
    return {at_most("kappa.consistency", spread, c.get_double("kappa.max_relative_spread"),
                    {{"kappa", mean}, {"kappa_minus_one", mean - 1.0}, {"per_time", per}})};
}

/// Rejection-sampled walk meanders against the exact dynamic program.
inline Reports suite_oracles(const Context& ctx) {
    const Config& c = ctx.cfg;
    const State start = c.get_state("oracles.start");
    const auto law = walk::StepLaw::rademacher();
    const std::size_t accepted = c.get_size("oracles.accepted");
    const double tv_max = c.get_double("oracles.tv_threshold");
    Reports out;
    {
        const auto t = walk::exact_survival_dp({1.0, 0.0}, law, 2);
        const double p = static_cast<double>(t.survival(2));
        out.push_back(report("oracles.survival_two_steps", std::abs(p - 0.5), 0.0, t.survival(2) == 0.5L,
                             {{"value", p}}));
    }
    auto run = [&](std::size_t n, bool joint, std::uint64_t tag) {
        const auto table = walk::exact_survival_dp(start, law, n);
        const auto ends = detail::walk_meanders(ctx, tag, start, law, n, accepted, c.get_size("oracles.budget"));
        const double w = 1.0 / static_cast<double>(ends.size());
        auto tv = [&](auto key_of) {
            std::map<long long, std::pair<double, double>> m; // key -> (empirical, exact)
            for (const State& z : ends) m[key_of(walk::LatticeKey{std::llround(z.t_coord), std::llround(z.s_coord)})].first += w;
            for (const auto& [k, p] : table.conditional_marginal(n)) m[key_of(k)].second += p;
            double d = 0.0;
            for (const auto& [k, v] : m) d += std::abs(v.first - v.second);
            return 0.5 * d;
        };
        const std::string tag_s = "oracles.n" + std::to_string(n);
        if (joint) {
            const double d = tv([](walk::LatticeKey k) { return k.t * 1'000'003LL + k.s; });
            out.push_back(at_most(tag_s + ".joint_tv", d, tv_max, {{"accepted", ends.size()}}));
        } else {
            const double dt = tv([](walk::LatticeKey k) { return k.t; });
            const double ds = tv([](walk::LatticeKey k) { return k.s; });
            out.push_back(at_most(tag_s + ".marginal_tv", std::max(dt, ds), tv_max,
                                  {{"tv_T", dt}, {"tv_S", ds}, {"accepted", ends.size()}}));
        }
    };
    std::uint64_t tag = 80;
    for (std::size_t n : c.get_sizes("oracles.joint_n")) run(n, true, tag++);
    for (std::size_t n : c.get_sizes("oracles.marginal_n")) run(n, false, tag++);
    return out;
}

/// Scaled walk meanders at time 1 against the limit meander marginals.
inline Reports suite_meander(const Context& ctx) {
    const Config& c = ctx.cfg;
    const State start = c.get_state("meander.start");
    const auto ladder = c.get_sizes("meander.ladder");
    const std::size_t accepted = c.get_size("meander.accepted");
    const auto& tab = detail::meander_table(static_cast<int>(c.get_size("meander.table_order")));
    Reports out;
    std::uint64_t tag = 90;
    for (const auto& name : c.get_strings("meander.laws")) {
        const auto law = detail::law_by_name(name);
        std::vector<double> ks;
        nlohmann::json per = nlohmann::json::array();
        for (std::size_t n : ladder) {
            const auto ends = detail::walk_meanders(ctx, tag++, start, law, n, accepted, c.get_size("meander.budget"));
            const auto sc = detail::scale_states(ends, n, std::sqrt(law.variance()));
            const double ku = ks_one(sc.u, {}, [&](double x) { return tab.marginal_cdf(0, x); });
            const double kv = ks_one(sc.v, {}, [&](double x) { return tab.marginal_cdf(1, x); });
            ks.push_back(std::max(ku, kv));
            per.push_back({{"n", n}, {"ks_u", ku}, {"ks_v", kv}});
        }
        out.push_back(decreasing("meander." + name + ".ladder", ks, {{"rungs", per}}));
        out.push_back(at_most("meander." + name + ".final", ks.back(), c.get_double("meander.final_threshold"),
                              {{"n", ladder.back()}, {"accepted", accepted}}));
    }
    return out;
}

/// Bridges: exact time reversal, collapse near the end, midpoint law.
inline Reports suite_bridge(const Context& ctx) {
    const Config& c = ctx.cfg;
    const auto law = walk::StepLaw::rademacher();
    Reports out;
    {
        const std::size_t n = c.get_size("bridge.reversal_n");
        long double worst = 0.0L;
        std::size_t pairs = 0;
        for (State z : c.get_states("bridge.reversal_starts")) {
            const auto fwd = walk::exact_survival_dp(z, law, n);
            for (const auto& [k, m] : fwd.layer(n)) {
                const State y{static_cast<double>(k.t), static_cast<double>(k.s)};
                const auto rp = walk::time_reverse(z, y, n);
                const auto rev = walk::exact_survival_dp(rp.start, law, n, rp.recurrence);
                const long double back = rev.mass(n, std::llround(rp.end.t_coord), std::llround(rp.end.s_coord));
                worst = std::max(worst, std::abs(m - back));
                ++pairs;
            }
        }
        out.push_back(report("bridge.time_reversal", static_cast<double>(worst), 0.0, worst == 0.0L,
                             {{"n", n}, {"pairs", pairs}}));
    }
    const State start = c.get_state("bridge.start"), end = c.get_state("bridge.end");
    const std::size_t samples = c.get_size("bridge.samples");
    auto draw = [&](std::size_t n, std::uint64_t tag) {
        const conditioning::BridgeSampler sampler(start, end, law, n);
        std::vector<std::vector<State>> parts(ctx.shards);
        for_shards(ctx.shards, ctx.threads, [&](std::size_t s) {
            RngStream rng = shard_stream(ctx.seed, tag, s);
            for (std::size_t i = shard_count(samples, ctx.shards, s); i > 0; --i) {
                const auto smp = sampler(rng);
                const auto& states = std::get<walk::ChainPath>(smp.path).states;
                parts[s].insert(parts[s].end(), states.begin(), states.end());
            }
        });
        std::vector<std::vector<State>> paths;
        for (const auto& p : parts)
            for (std::size_t i = 0; i < p.size(); i += n + 1) paths.emplace_back(p.begin() + i, p.begin() + i + n + 1);
        return paths;
    };
    {
        const std::size_t n = c.get_size("bridge.tail_n");
        const auto paths = draw(n, 100);
        const double q = c.get_double("bridge.tail_quantile");
        std::vector<double> pct;
        for (double t : c.get_doubles("bridge.tail_times")) {
            const auto k = static_cast<std::size_t>(std::floor(t * n));
            std::vector<double> a;
            const double nn = static_cast<double>(n);
            for (const auto& p : paths) a.push_back(detail::gauge({p[k].t_coord / (nn * std::sqrt(nn)), p[k].s_coord / std::sqrt(nn)}));
            std::sort(a.begin(), a.end());
            pct.push_back(a[static_cast<std::size_t>(q * (a.size() - 1))]);
        }
        out.push_back(decreasing("bridge.tail_collapse", pct, {{"n", n}, {"quantile", q}}));
    }
    {
        const auto& tab = detail::bridge_midpoint_table(static_cast<int>(c.get_size("bridge.table_order")));
        std::vector<double> ks;
        nlohmann::json per = nlohmann::json::array();
        std::uint64_t tag = 101;
        for (std::size_t n : c.get_sizes("bridge.midpoint_n")) {
            const auto paths = draw(n, tag++);
            std::vector<State> mids;
            for (const auto& p : paths) mids.push_back(p[n / 2]);
            const auto sc = detail::scale_states(mids, n, 1.0);
            const double ku = ks_one(sc.u, {}, [&](double x) { return tab.marginal_cdf(0, x); });
            const double kv = ks_one(sc.v, {}, [&](double x) { return tab.marginal_cdf(1, x); });
            ks.push_back(std::max(ku, kv));
            per.push_back({{"n", n}, {"ks_u", ku}, {"ks_v", kv}});
        }
        out.push_back(decreasing("bridge.midpoint_ladder", ks, {{"rungs", per}}));
    }
    return out;
}

/// V-transformed walk against the h-transformed diffusion at time 1.
inline Reports suite_v_transform(const Context& ctx) {
    const Config& c = ctx.cfg;
    const State z = c.get_state("v_transform.start");
    const std::size_t n = c.get_size("v_transform.n");
    const std::size_t m = n * c.get_size("v_transform.extension_factor");
    const std::size_t count = c.get_size("v_transform.samples");
    const std::size_t budget = c.get_size("v_transform.budget");
    const double dt = c.get_double("v_transform.dt");
    const auto law = walk::StepLaw::rademacher();
    const double v0 = specfun::h_fast(z);

    std::vector<conditioning::WeightedEndpoints> wparts(ctx.shards), hparts(ctx.shards);
    for_shards(ctx.shards, ctx.threads, [&](std::size_t s) {
        RngStream rng = shard_stream(ctx.seed, 110, s);
        wparts[s] = conditioning::v_transform_endpoints(z, law, n, m, shard_count(count, ctx.shards, s), rng, budget, v0);
    });
    const State zs = scale_down(z, TimeHorizon(static_cast<double>(n)));
    for_shards(ctx.shards, ctx.threads, [&](std::size_t s) {
        RngStream rng = shard_stream(ctx.seed, 111, s);
        hparts[s] = conditioning::h_transform_endpoints(zs, 1.0, dt, shard_count(count, ctx.shards, s), rng, budget);
    });
    std::vector<State> we, he;
    std::vector<double> ww, hw;
    std::size_t h_attempts = 0;
    double sw = 0.0, sw2 = 0.0;
    for (std::size_t s = 0; s < ctx.shards; ++s) {
        we.insert(we.end(), wparts[s].ends.begin(), wparts[s].ends.end());
        ww.insert(ww.end(), wparts[s].weights.begin(), wparts[s].weights.end());
        he.insert(he.end(), hparts[s].ends.begin(), hparts[s].ends.end());
        hw.insert(hw.end(), hparts[s].weights.begin(), hparts[s].weights.end());
        h_attempts += hparts[s].attempts;
    }
    for (double w : hw) {
        sw += w;
        sw2 += w * w;
    }
    const double na = static_cast<double>(h_attempts), mean_w = sw / na;
    const double se_w = std::sqrt(std::max(0.0, sw2 / na - mean_w * mean_w) / (na - 1.0));

    const auto ws = detail::scale_states(we, n, 1.0);
    std::vector<double> hu, hv;
    for (const State& e : he) {
        hu.push_back(e.t_coord);
        hv.push_back(e.s_coord);
    }
    const double ku = ks_two(ws.u, ww, hu, hw), kv = ks_two(ws.v, ww, hv, hw);
    const double thr = c.get_double("v_transform.ks_threshold");
    nlohmann::json meta = {{"n", n}, {"extension", m}, {"walk_samples", we.size()}, {"diffusion_samples", he.size()},
                           {"walk_ess", stats::EmpiricalDist::one_d(ws.u, ww).effective_size()},
                           {"diffusion_ess", stats::EmpiricalDist::one_d(hu, hw).effective_size()},
                           {"diffusion_start", {zs.t_coord, zs.s_coord}}};
    return {at_most("v_transform.ks_u", ku, thr, meta), at_most("v_transform.ks_v", kv, thr, meta),
            at_most("v_transform.mean_h_weight", std::abs(mean_w - 1.0) / se_w,
                    c.get_double("v_transform.stderr_multiple"),
                    {{"mean_weight", mean_w}, {"std_error", se_w}, {"attempts", h_attempts}, {"dt", dt}})};
}

/// Tilted walk above the parabola, drift-scaled, against the centred meander.
inline Reports suite_drift_meander(const Context& ctx) {
    const Config& c = ctx.cfg;
    const double drift = c.get_double("drift_meander.c");
    const std::size_t n = c.get_size("drift_meander.n");
    const std::size_t count = c.get_size("drift_meander.accepted");
    const std::size_t budget = c.get_size("drift_meander.budget");
    const State start = c.get_state("drift_meander.start");
    const auto base = walk::StepLaw::rademacher();
    const auto tilted = walk::StepLaw::tilted(base, walk::tilt_parameter(base, drift));
    std::vector<std::vector<State>> parts(ctx.shards);
    for_shards(ctx.shards, ctx.threads, [&](std::size_t s) {
        RngStream rng = shard_stream(ctx.seed, 120, s);
        parts[s] = conditioning::drift_meander_endpoints(start, tilted, drift, n, shard_count(count, ctx.shards, s), rng,
                                                         budget).ends;
    });
    std::vector<State> ends;
    for (auto& p : parts) ends.insert(ends.end(), p.begin(), p.end());
    const auto d = detail::scale_states(ends, n, std::sqrt(tilted.variance()), drift);
    const auto centred = detail::walk_meanders(ctx, 121, start, base, n, count, budget);
    const auto cs = detail::scale_states(centred, n, 1.0);
    const double ku = ks_two(d.u, {}, cs.u, {}), kv = ks_two(d.v, {}, cs.v, {});
    const auto& tab = detail::meander_table(static_cast<int>(c.get_size("meander.table_order")));
    const double au = ks_one(d.u, {}, [&](double x) { return tab.marginal_cdf(0, x); });
    const double av = ks_one(d.v, {}, [&](double x) { return tab.marginal_cdf(1, x); });
    const double thr = c.get_double("drift_meander.ks_threshold");
    return {at_most("drift_meander.vs_centred_walk", std::max(ku, kv), thr,
                    {{"ks_u", ku}, {"ks_v", kv}, {"n", n}, {"tilted_mean", tilted.mean()},
                     {"tilted_variance", tilted.variance()}}),
            at_most("drift_meander.vs_limit", std::max(au, av), thr, {{"ks_u", au}, {"ks_v", av}})};
}

/// Bounds on V-hat = E_z[h(Z(n)); tau > n] and one-step harmonicity.
inline Reports suite_v_bounds(const Context& ctx) {
    const Config& c = ctx.cfg;
    const auto starts = c.get_states("v_bounds.starts");
    const std::size_t n = c.get_size("v_bounds.n");
    const std::size_t paths = c.get_size("v_bounds.paths");
    const double C = c.get_double("v_bounds.constant");
    const auto law = walk::StepLaw::rademacher();
    // three independent estimates per start: z, and its two successors
    auto estimate = [&](State z, std::uint64_t tag) {
        std::vector<double> s1(ctx.shards), s2(ctx.shards);
        for_shards(ctx.shards, ctx.threads, [&](std::size_t s) {
            RngStream rng = shard_stream(ctx.seed, tag, s);
            for (std::size_t i = shard_count(paths, ctx.shards, s); i > 0; --i) {
                const auto [end, alive] = walk::run_to_horizon(z, law, n, rng);
                if (!alive) continue;
                const double h = specfun::h_fast(end);
                s1[s] += h;
                s2[s] += h * h;
            }
        });
        double a = 0.0, b = 0.0;
        for (std::size_t s = 0; s < ctx.shards; ++s) {
            a += s1[s];
            b += s2[s];
        }
        const double np = static_cast<double>(paths), mean = a / np;
        return std::pair{mean, std::sqrt(std::max(0.0, b / np - mean * mean) / (np - 1.0))};
    };
    double worst_gap = 0.0, worst_growth = 0.0, worst_harm = 0.0;
    nlohmann::json per = nlohmann::json::array();
    std::uint64_t tag = 130;
    for (State z : starts) {
        const double a = alpha(z), h = specfun::h_hypergeometric(z);
        const auto [v, se] = estimate(z, tag++);
        const auto [vp, sep] = estimate(walk::step_chain(z, 1.0), tag++);
        const auto [vm, sem] = estimate(walk::step_chain(z, -1.0), tag++);
        const double one_step = 0.5 * (vp + vm), se_step = 0.5 * std::hypot(sep, sem);
        const double harm = std::abs(one_step - v) / std::hypot(se, se_step);
        worst_gap = std::max(worst_gap, std::abs(v - h) / (C * (1.0 + std::pow(a, -1.5))));
        worst_growth = std::max(worst_growth, v / (C * std::sqrt(a)));
        worst_harm = std::max(worst_harm, harm);
        per.push_back({{"start", {z.t_coord, z.s_coord}}, {"alpha", a}, {"v_hat", v}, {"std_error", se}, {"h", h},
                       {"one_step_mean", one_step}, {"one_step_std_error", se_step}, {"harmonicity_z", harm}});
    }
    const nlohmann::json meta = {{"n", n}, {"paths", paths}, {"per_start", per}};
    return {at_most("v_bounds.v_minus_h", worst_gap, 1.0, meta), at_most("v_bounds.growth", worst_growth, 1.0),
            at_most("v_bounds.harmonicity", worst_harm, c.get_double("v_bounds.stderr_multiple"))};
}

/// Walk meander of length n at time s against the diffusion meander at s.
inline Reports suite_meander_t(const Context& ctx) {
    const Config& c = ctx.cfg;
    const std::size_t n = c.get_size("meander_t.n"), count = c.get_size("meander_t.accepted");
    const double s_time = c.get_double("meander_t.time"), dt = c.get_double("meander_t.dt");
    const State start = c.get_state("meander_t.walk_start"), dstart = c.get_state("meander_t.diffusion_start");
    const std::size_t budget = c.get_size("meander_t.budget");
    const auto law = walk::StepLaw::rademacher();
    const auto k = static_cast<std::size_t>(std::floor(s_time * n));
    const auto kd = static_cast<std::size_t>(std::llround(s_time / dt));
    std::vector<std::vector<State>> wp(ctx.shards), dp(ctx.shards);
    for_shards(ctx.shards, ctx.threads, [&](std::size_t s) {
        RngStream rng = shard_stream(ctx.seed, 140, s);
        for (std::size_t i = shard_count(count, ctx.shards, s); i > 0; --i) {
            auto smp = conditioning::sample_meander_walk(start, law, n, rng, budget);
            wp[s].push_back(std::get<walk::ChainPath>(smp.path).states[k]);
        }
        RngStream rng2 = shard_stream(ctx.seed, 141, s);
        for (std::size_t i = shard_count(count, ctx.shards, s); i > 0; --i) {
            auto smp = conditioning::sample_meander_diffusion(dstart, 1.0, dt, rng2, budget);
            dp[s].push_back(std::get<diffusion::DiffusionPath>(smp.path).states[kd]);
        }
    });
    std::vector<State> we, de;
    for (std::size_t s = 0; s < ctx.shards; ++s) {
        we.insert(we.end(), wp[s].begin(), wp[s].end());
        de.insert(de.end(), dp[s].begin(), dp[s].end());
    }
    const auto ws = detail::scale_states(we, n, 1.0);
    std::vector<double> du, dv;
    for (const State& e : de) {
        du.push_back(e.t_coord);
        dv.push_back(e.s_coord);
    }
    const double ku = ks_two(ws.u, {}, du, {}), kv = ks_two(ws.v, {}, dv, {});
    return {at_most("meander_t.walk_vs_diffusion", std::max(ku, kv), c.get_double("meander_t.ks_threshold"),
                    {{"ks_u", ku}, {"ks_v", kv}, {"time", s_time}, {"n", n}})};
}

/// Diffusion meanders from starts shrinking to 0 against the limit meander.
inline Reports suite_kolmo_meander_prop(const Context& ctx) {
    const Config& c = ctx.cfg;
    const auto alphas = c.get_doubles("kolmo_meander_prop.alphas");
    const std::size_t count = c.get_size("kolmo_meander_prop.accepted");
    const std::size_t budget = c.get_size("kolmo_meander_prop.budget");
    const double dt = c.get_double("kolmo_meander_prop.dt");
    const auto& tab = detail::meander_table(static_cast<int>(c.get_size("meander.table_order")));
    std::vector<double> ks;
    nlohmann::json per = nlohmann::json::array();
    std::uint64_t tag = 150;
    for (double a : alphas) {
        const State z{a * a * a, a};
        std::vector<std::vector<State>> parts(ctx.shards);
        for_shards(ctx.shards, ctx.threads, [&](std::size_t s) {
            RngStream rng = shard_stream(ctx.seed, tag, s);
            parts[s] = conditioning::meander_diffusion_endpoints(z, 1.0, dt, shard_count(count, ctx.shards, s), rng,
                                                                 budget).ends;
        });
        ++tag;
        std::vector<double> u, v;
        for (auto& p : parts)
            for (const State& e : p) {
                u.push_back(e.t_coord);
                v.push_back(e.s_coord);
            }
        const double ku = ks_one(u, {}, [&](double x) { return tab.marginal_cdf(0, x); });
        const double kv = ks_one(v, {}, [&](double x) { return tab.marginal_cdf(1, x); });
        ks.push_back(std::max(ku, kv));
        per.push_back({{"alpha", a}, {"ks_u", ku}, {"ks_v", kv}});
    }
    return {decreasing("kolmo_meander_prop.ladder", ks, {{"rungs", per}}),
            at_most("kolmo_meander_prop.final", ks.back(), c.get_double("kolmo_meander_prop.ks_threshold"))};
}

// ------------------------------------------------------------ dispatch

using SuiteFn = Reports (*)(const Context&);

inline const std::map<std::string, SuiteFn>& suites() {
    static const std::map<std::string, SuiteFn> m = {
        {"anchor", suite_anchor},         {"identities", suite_identities},
        {"harmonicity", suite_harmonicity}, {"routes", suite_routes},
        {"survival", suite_survival},     {"propbarp", suite_propbarp},
        {"kappa", suite_kappa},           {"oracles", suite_oracles},
        {"meander", suite_meander},       {"bridge", suite_bridge},
        {"v_transform", suite_v_transform}, {"drift_meander", suite_drift_meander},
        {"v_bounds", suite_v_bounds},     {"meander_t", suite_meander_t},
        {"kolmo_meander_prop", suite_kolmo_meander_prop},
    };
    return m;
}

inline const std::vector<std::string>& theorem_suite_names() {
    static const std::vector<std::string> n = {"meander",       "meander_t",          "bridge",   "v_transform",
                                               "drift_meander", "kolmo_meander_prop", "propbarp", "kappa"};
    return n;
}

struct RunOptions {
    std::uint64_t seed = 0;
    bool seed_from_config = true;
    unsigned threads = 1;
};

/// Runs one suite. Adds a runtime report when `<name>.runtime_limit` is set.
/// If the suite throws, the reports finished so far are lost only for
/// that suite; the exception propagates.
inline Reports run_suite(const std::string& name, const Config& cfg, const RunOptions& o = {}) {
    const auto it = suites().find(name);
    if (it == suites().end()) throw ConfigError("unknown suite '" + name + "'");
    const Context ctx{cfg, o.seed_from_config ? cfg.get_seed("seed") : o.seed, std::max(1u, o.threads),
                      cfg.get_size("shards")};
    if (ctx.shards < 1) throw ConfigError("shards must be at least 1");
    Stopwatch sw;
    Reports r = it->second(ctx);
    const double secs = sw.seconds();
    if (cfg.has(name + ".runtime_limit"))
        r.push_back(at_most(name + ".runtime_seconds", secs, cfg.get_double(name + ".runtime_limit")));
    for (auto& rep : r) rep.metadata["seed"] = ctx.seed;
    return r;
}

inline Reports theorem_suite(const std::string& name, const Config& cfg, const RunOptions& o = {}) {
    const auto& n = theorem_suite_names();
    if (std::find(n.begin(), n.end(), name) == n.end()) throw ConfigError("unknown theorem suite '" + name + "'");
    return run_suite(name, cfg, o);
}

inline bool all_pass(const Reports& r) {
    return std::all_of(r.begin(), r.end(), [](const stats::TestReport& t) { return t.pass; });
}

inline nlohmann::json reports_to_json(const std::string& suite, const Reports& r, const Config& cfg) {
    return {{"schema_version", kReportSchemaVersion}, {"suite", suite}, {"config", cfg.to_json()},
            {"pass", all_pass(r)}, {"reports", r}};
}

} // namespace kolmo::harness
