#pragma once

// Conditioned samplers: meanders of the walk and of the diffusion, exact
// lattice bridges from a dynamic program, estimates of the discrete
// harmonic function V, and the V- and h-transforms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <boost/random/normal_distribution.hpp>

#include "json.hpp"

#include "kolmo/core.hpp"
#include "kolmo/density.hpp"
#include "kolmo/diffusion.hpp"
#include "kolmo/specfun.hpp"
#include "kolmo/walk.hpp"

namespace kolmo::conditioning {

using walk::ChainPath;
using walk::LatticeKey;
using walk::StepLaw;

struct Meander {
    double horizon;
};
struct Bridge {
    State endpoint;
};
struct VTransform {};
struct HTransform {};
using Conditioning = std::variant<Meander, Bridge, VTransform, HTransform>;

struct ConditionedSample {
    std::variant<ChainPath, diffusion::DiffusionPath> path;
    double weight = 1.0; ///< 1 for exact samples, an importance weight otherwise
    Conditioning conditioning;
};

/// A rejection sampler ran out of attempts.
class BudgetExhausted : public std::runtime_error {
public:
    BudgetExhausted(const std::string& who, std::size_t attempts, std::size_t accepted)
        : std::runtime_error(who + ": budget of " + std::to_string(attempts) + " attempts exhausted with " +
                             std::to_string(accepted) + " accepted (rate " +
                             std::to_string(attempts ? static_cast<double>(accepted) / attempts : 0.0) + ")"),
          attempts_(attempts), accepted_(accepted) {}

    std::size_t attempts() const noexcept { return attempts_; }
    std::size_t accepted() const noexcept { return accepted_; }
    double acceptance_rate() const noexcept {
        return attempts_ ? static_cast<double>(accepted_) / attempts_ : 0.0;
    }

private:
    std::size_t attempts_, accepted_;
};

inline void check_budget(std::size_t budget, const char* who) {
    if (budget < 1) throw DomainError(std::string(who) + ": budget must be at least 1");
}

// ------------------------------------------------------------ walk meander

/// Rejection sampling of the walk conditioned on tau > n.
template <class Rng>
ConditionedSample sample_meander_walk(State start, const StepLaw& law, std::size_t n, Rng& rng, std::size_t budget) {
    if (!(start.t_coord > 0.0)) throw DomainError("sample_meander_walk: start must have positive T");
    check_budget(budget, "sample_meander_walk");
    for (std::size_t a = 0; a < budget; ++a) {
        ChainPath p = walk::simulate_path(start, law, n, rng, true);
        if (!p.tau) return {std::move(p), 1.0, Meander{static_cast<double>(n)}};
    }
    throw BudgetExhausted("sample_meander_walk", budget, 0);
}

/// End states of `count` walk meanders, without storing paths.
struct Endpoints {
    std::vector<State> ends;
    std::vector<double> weights; ///< empty for unweighted samples
    std::size_t attempts = 0;

    double acceptance_rate() const { return attempts ? static_cast<double>(ends.size()) / attempts : 0.0; }
};

template <class Rng>
Endpoints meander_walk_endpoints(State start, const StepLaw& law, std::size_t n, std::size_t count, Rng& rng,
                                 std::size_t budget) {
    if (!(start.t_coord > 0.0)) throw DomainError("meander_walk_endpoints: start must have positive T");
    check_budget(budget, "meander_walk_endpoints");
    Endpoints out;
    out.ends.reserve(count);
    while (out.ends.size() < count) {
        if (out.attempts == budget) throw BudgetExhausted("meander_walk_endpoints", budget, out.ends.size());
        ++out.attempts;
        const auto [end, alive] = walk::run_to_horizon(start, law, n, rng);
        if (alive) out.ends.push_back(end);
    }
    return out;
}

/// Walk conditioned on staying above the parabola: T(k) > k(k+1)c/2 for k <= n.
template <class Rng>
Endpoints drift_meander_endpoints(State start, const StepLaw& law, double c, std::size_t n, std::size_t count,
                                  Rng& rng, std::size_t budget) {
    check_budget(budget, "drift_meander_endpoints");
    if (!(start.t_coord > 0.0)) throw DomainError("drift_meander_endpoints: start must have positive T");
    Endpoints out;
    out.ends.reserve(count);
    while (out.ends.size() < count) {
        if (out.attempts == budget) throw BudgetExhausted("drift_meander_endpoints", budget, out.ends.size());
        ++out.attempts;
        State z = start;
        bool alive = true;
        for (std::size_t k = 1; k <= n && alive; ++k) {
            z = walk::step_chain(z, law.sample(rng));
            const double kk = static_cast<double>(k);
            alive = z.t_coord > 0.5 * kk * (kk + 1.0) * c;
        }
        if (alive) out.ends.push_back(z);
    }
    return out;
}

// ------------------------------------------------------------ diffusion meander and h-transform

namespace detail {

// d/dy log h(x, y)
inline double h_drift(State z) {
    const double cx = std::cbrt(z.t_coord);
    return specfun::dlog_g(z.s_coord / cx) / cx;
}

// One step of the h-transformed diffusion: exact free increment plus the
// drift held fixed over the step. A step that would leave {U > 0} is split
// in halves.
template <class Rng>
State h_step(State z, double dt, Rng& rng, int depth = 0) {
    const double b = h_drift(z);
    const double s11 = std::sqrt(dt * dt * dt / 3.0), s21 = 0.5 * kSqrt3 * std::sqrt(dt), s22 = 0.5 * std::sqrt(dt);
    boost::random::normal_distribution<double> nd;
    const double z1 = nd(rng), z2 = nd(rng);
    const State next{z.t_coord + dt * z.s_coord + 0.5 * b * dt * dt + s11 * z1, z.s_coord + b * dt + s21 * z1 + s22 * z2};
    if (next.t_coord > 0.0) return next;
    if (depth >= 12) return {std::abs(next.t_coord) + 1e-300, std::abs(next.s_coord)};
    const State mid = h_step(z, 0.5 * dt, rng, depth + 1);
    return h_step(mid, 0.5 * dt, rng, depth + 1);
}

} // namespace detail

/// Diffusion meander sampler. Rejection by default; when the predicted
/// acceptance P_z(tau > horizon) is below `switch_below` it samples the
/// h-transform instead and returns self-normalizable weights h(z)/h(W(T)).
class DiffusionMeanderSampler {
public:
    DiffusionMeanderSampler(State start, double horizon, double dt, std::size_t budget,
                            diffusion::RefineSpec refine = {}, double switch_below = 1e-4)
        : start_(start), horizon_(horizon), dt_(dt), steps_(diffusion::grid_steps(horizon, dt)), budget_(budget),
          refine_(refine) {
        if (!(start.t_coord > 0.0)) throw DomainError("sample_meander_diffusion: start must have positive U");
        check_budget(budget, "sample_meander_diffusion");
        acceptance_ = std::max(0.0, density::survival_quadrature(start, horizon, {1e-6, 1e-14, 200}).value);
        importance_ = acceptance_ < switch_below;
        h_start_ = specfun::h_hypergeometric(start);
    }

    bool importance_mode() const noexcept { return importance_; }
    double predicted_acceptance() const noexcept { return acceptance_; }

    template <class Rng>
    ConditionedSample operator()(Rng& rng) {
        if (importance_) return importance_sample(rng);
        for (std::size_t a = 0; a < budget_; ++a) {
            diffusion::DiffusionPath p = diffusion::simulate_diffusion(start_, horizon_, dt_, rng, true, refine_);
            if (!p.killed_index) return {std::move(p), 1.0, Meander{horizon_}};
        }
        throw BudgetExhausted("sample_meander_diffusion", budget_, 0);
    }

private:
    template <class Rng>
    ConditionedSample importance_sample(Rng& rng) {
        diffusion::DiffusionPath p;
        p.dt = dt_;
        p.states.reserve(steps_ + 1);
        State z = start_;
        p.states.push_back(z);
        for (std::size_t k = 0; k < steps_; ++k) {
            z = detail::h_step(z, dt_, rng);
            p.states.push_back(z);
        }
        const double w = h_start_ / specfun::h_fast(z);
        return {std::move(p), w, Meander{horizon_}};
    }

    State start_;
    double horizon_, dt_;
    std::size_t steps_, budget_;
    diffusion::RefineSpec refine_;
    double acceptance_ = 1.0, h_start_ = 1.0;
    bool importance_ = false;
};

template <class Rng>
ConditionedSample sample_meander_diffusion(State start, double horizon, double dt, Rng& rng, std::size_t budget) {
    DiffusionMeanderSampler s(start, horizon, dt, budget);
    return s(rng);
}

/// End states of diffusion meanders by rejection.
template <class Rng>
Endpoints meander_diffusion_endpoints(State start, double horizon, double dt, std::size_t count, Rng& rng,
                                      std::size_t budget, diffusion::RefineSpec refine = {}) {
    if (!(start.t_coord > 0.0)) throw DomainError("meander_diffusion_endpoints: start must have positive U");
    check_budget(budget, "meander_diffusion_endpoints");
    const std::size_t steps = diffusion::grid_steps(horizon, dt);
    diffusion::Stepper st(dt, refine);
    Endpoints out;
    out.ends.reserve(count);
    while (out.ends.size() < count) {
        if (out.attempts == budget) throw BudgetExhausted("meander_diffusion_endpoints", budget, out.ends.size());
        ++out.attempts;
        const auto o = diffusion::run_survival(start, steps, st, rng, 1);
        if (o.survived_refined) out.ends.push_back(o.end);
    }
    return out;
}

/// A surviving diffusion path with weight h(W(horizon)) / h(start).
template <class Rng>
ConditionedSample sample_h_transform_diffusion(State start, double horizon, double dt, Rng& rng, std::size_t budget) {
    if (!(start.t_coord > 0.0)) throw DomainError("sample_h_transform_diffusion: start must have positive U");
    check_budget(budget, "sample_h_transform_diffusion");
    const double h0 = specfun::h_hypergeometric(start);
    for (std::size_t a = 0; a < budget; ++a) {
        diffusion::DiffusionPath p = diffusion::simulate_diffusion(start, horizon, dt, rng, true);
        if (!p.killed_index) {
            const double w = specfun::h_fast(p.states.back()) / h0;
            return {std::move(p), w, HTransform{}};
        }
    }
    throw BudgetExhausted("sample_h_transform_diffusion", budget, 0);
}

/// Weighted end states of the h-transform: runs until `count` survivors.
/// The mean weight over all attempts estimates E[h(W(T)); tau > T] / h(z) = 1.
struct WeightedEndpoints : Endpoints {
    double mean_weight() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s / static_cast<double>(attempts);
    }
    double mean_weight_stderr() const {
        const double m = mean_weight();
        double s2 = 0.0;
        for (double w : weights) s2 += (w - m) * (w - m);
        s2 += static_cast<double>(attempts - weights.size()) * m * m; // killed attempts carry weight 0
        return std::sqrt(s2 / (static_cast<double>(attempts) * (attempts - 1.0)));
    }
};

template <class Rng>
WeightedEndpoints h_transform_endpoints(State start, double horizon, double dt, std::size_t count, Rng& rng,
                                        std::size_t budget, diffusion::RefineSpec refine = {}) {
    if (!(start.t_coord > 0.0)) throw DomainError("h_transform_endpoints: start must have positive U");
    check_budget(budget, "h_transform_endpoints");
    const std::size_t steps = diffusion::grid_steps(horizon, dt);
    diffusion::Stepper st(dt, refine);
    const double h0 = specfun::h_hypergeometric(start);
    WeightedEndpoints out;
    while (out.ends.size() < count) {
        if (out.attempts == budget) throw BudgetExhausted("h_transform_endpoints", budget, out.ends.size());
        ++out.attempts;
        const auto o = diffusion::run_survival(start, steps, st, rng, 1);
        if (!o.survived_refined) continue;
        out.ends.push_back(o.end);
        out.weights.push_back(specfun::h_fast(o.end) / h0);
    }
    return out;
}

// ------------------------------------------------------------ bridges

namespace detail {

inline std::int64_t lattice(double x) { return static_cast<std::int64_t>(std::llround(x)); }

// Samples Z(0..n) backwards from Z(n) = end under the table's law.
template <class Rng>
ChainPath backward_path(const walk::DPTable& table, const StepLaw& law, State start, LatticeKey end, Rng& rng) {
    const std::size_t n = table.horizon();
    const auto& sup = law.support();
    const auto& w = law.weights();
    const bool fwd = table.recurrence() == walk::Recurrence::forward;
    std::vector<State> states(n + 1);
    std::vector<double> steps(n);
    LatticeKey cur = end;
    states[n] = {static_cast<double>(cur.t), static_cast<double>(cur.s)};
    std::vector<long double> p(sup.size());
    for (std::size_t k = n; k >= 1; --k) {
        long double total = 0.0L;
        for (std::size_t i = 0; i < sup.size(); ++i) {
            const std::int64_t s0 = cur.s - sup[i];
            const std::int64_t t0 = fwd ? cur.t - cur.s : cur.t - s0;
            p[i] = w[i] > 0.0 ? table.mass(k - 1, t0, s0) * w[i] : 0.0L;
            total += p[i];
        }
        if (!(total > 0.0L)) throw DomainError("bridge: state without surviving predecessor");
        long double u = static_cast<long double>(rng.uniform()) * total;
        std::size_t pick = 0;
        while (pick + 1 < sup.size() && (u >= p[pick] || p[pick] == 0.0L)) {
            u -= p[pick];
            ++pick;
        }
        const std::int64_t s0 = cur.s - sup[pick];
        const std::int64_t t0 = fwd ? cur.t - cur.s : cur.t - s0;
        steps[k - 1] = static_cast<double>(sup[pick]);
        cur = {t0, s0};
        states[k - 1] = {static_cast<double>(t0), static_cast<double>(s0)};
    }
    ChainPath path;
    path.start = start;
    path.states = std::move(states);
    path.steps = std::move(steps);
    return path;
}

} // namespace detail

/// Exact bridge sampler: the dynamic program is built once and shared by
/// all draws.
class BridgeSampler {
public:
    BridgeSampler(State start, State end, const StepLaw& law, std::size_t n, std::size_t cap = walk::kDefaultDPCap)
        : law_(law), start_(start), end_(end),
          table_(walk::exact_survival_dp(start, law, n, walk::Recurrence::forward, cap)) {
        walk::require_integer(end, "sample_bridge_dp");
        key_ = {detail::lattice(end.t_coord), detail::lattice(end.s_coord)};
        mass_ = table_.mass(n, key_.t, key_.s);
        if (!(mass_ > 0.0L))
            throw DomainError("sample_bridge_dp: end (" + std::to_string(end.t_coord) + ", " +
                              std::to_string(end.s_coord) + ") has DP mass 0 at n = " + std::to_string(n));
    }

    /// P_start(Z(n) = end, tau > n).
    long double end_mass() const noexcept { return mass_; }
    const walk::DPTable& table() const noexcept { return table_; }

    template <class Rng>
    ConditionedSample operator()(Rng& rng) const {
        return {detail::backward_path(table_, law_, start_, key_, rng), 1.0, Bridge{end_}};
    }

private:
    StepLaw law_;
    State start_, end_;
    walk::DPTable table_;
    LatticeKey key_{};
    long double mass_ = 0.0L;
};

template <class Rng>
ConditionedSample sample_bridge_dp(State start, State end, const StepLaw& law, std::size_t n, Rng& rng) {
    return BridgeSampler(start, end, law, n)(rng);
}

// ------------------------------------------------------------ V estimates

enum class VMethod { dp, mc };

struct VEstimate {
    State z;
    std::size_t n = 0;
    double value = 0.0;
    double std_error = 0.0;
    VMethod method = VMethod::dp;
    bool fallback = false; ///< requested DP overflowed and MC was used instead
};

struct VOptions {
    std::size_t paths = 100'000;  ///< Monte Carlo sample size
    std::uint64_t seed = 1;
    std::size_t dp_cap = walk::kDefaultDPCap;
    std::size_t dp_budget = walk::kDefaultDPBudget;
};

/// V_n(z) = E_z[h(Z(n)); tau > n] for each n in n_values.
inline std::vector<VEstimate> estimate_v(State z, const StepLaw& law, std::vector<std::size_t> n_values, VMethod method,
                                         const VOptions& o = {}) {
    if (!(z.t_coord > 0.0)) throw DomainError("estimate_v: z must have positive T");
    if (n_values.empty()) return {};
    std::sort(n_values.begin(), n_values.end());
    const std::size_t top = n_values.back();
    bool fallback = false;
    if (method == VMethod::dp) {
        try {
            const walk::DPTable t = walk::exact_survival_dp(z, law, top, walk::Recurrence::forward, o.dp_cap, o.dp_budget);
            std::vector<VEstimate> out;
            for (std::size_t n : n_values) {
                long double s = 0.0L;
                for (const auto& [k, m] : t.layer(n))
                    s += m * specfun::h_fast({static_cast<double>(k.t), static_cast<double>(k.s)});
                const double v = static_cast<double>(s);
                out.push_back({z, n, v, 2e-8 * v, VMethod::dp, false}); // g_fast interpolation error
            }
            return out;
        } catch (const walk::DPOverflow&) {
            fallback = true;
        } catch (const DomainError&) {
            fallback = true; // horizon beyond the DP cap
        }
    }
    RngStream rng(o.seed, 0);
    std::vector<double> sum(n_values.size(), 0.0), sum2(n_values.size(), 0.0);
    for (std::size_t p = 0; p < o.paths; ++p) {
        State w = z;
        std::size_t k = 0;
        for (std::size_t i = 0; i < n_values.size(); ++i) {
            const auto [end, alive] = walk::run_to_horizon(w, law, n_values[i] - k, rng);
            k = n_values[i];
            w = end;
            if (!alive) break;
            const double h = specfun::h_fast(w);
            sum[i] += h;
            sum2[i] += h * h;
        }
    }
    std::vector<VEstimate> out;
    const double m = static_cast<double>(o.paths);
    for (std::size_t i = 0; i < n_values.size(); ++i) {
        const double mean = sum[i] / m;
        const double var = std::max(0.0, sum2[i] / m - mean * mean);
        out.push_back({z, n_values[i], mean, std::sqrt(var / (m - 1.0)), VMethod::mc, fallback});
    }
    return out;
}

// ------------------------------------------------------------ V tables and the V-transform

/// V on lattice states, as estimated; lookups of missing states throw
/// unless a fallback is configured.
class VTable {
public:
    enum class Fallback { none, h_function };

    struct Entry {
        std::size_t n;
        double value;
        double std_error;
    };

    explicit VTable(Fallback f = Fallback::none) : fallback_(f) {}

    /// V = c everywhere.
    static VTable constant(double c) {
        VTable t;
        t.constant_ = c;
        return t;
    }

    void set(State z, Entry e) { entries_[key(z)] = e; }
    void set(const VEstimate& e) { set(e.z, {e.n, e.value, e.std_error}); }

    std::optional<Entry> find(State z) const {
        if (constant_) return Entry{0, *constant_, 0.0};
        const auto it = entries_.find(key(z));
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    double operator()(State z) const {
        if (const auto e = find(z)) return e->value;
        if (fallback_ == Fallback::h_function) return specfun::h_fast(z);
        throw DomainError("VTable: no V value at (" + std::to_string(z.t_coord) + ", " + std::to_string(z.s_coord) + ")");
    }

    std::size_t size() const noexcept { return entries_.size(); }
    nlohmann::json& metadata() noexcept { return meta_; }
    const nlohmann::json& metadata() const noexcept { return meta_; }

    /// CSV rows (T, S, n, value, stderr), sorted by state.
    void write_csv(std::ostream& os) const {
        std::vector<std::pair<LatticeKey, Entry>> rows(entries_.begin(), entries_.end());
        std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        os << "T,S,n,value,stderr\n";
        os.precision(17);
        for (const auto& [k, e] : rows) os << k.t << ',' << k.s << ',' << e.n << ',' << e.value << ',' << e.std_error << '\n';
    }

    static VTable read_csv(std::istream& is, Fallback f = Fallback::none) {
        VTable t(f);
        std::string line;
        if (!std::getline(is, line) || line != "T,S,n,value,stderr") throw DomainError("VTable: bad CSV header");
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream ls(line);
            long long tt, ss;
            Entry e{};
            if (!(ls >> tt >> ss >> e.n >> e.value >> e.std_error)) throw DomainError("VTable: malformed row");
            t.entries_[{tt, ss}] = e;
        }
        return t;
    }

private:
    static LatticeKey key(State z) { return {detail::lattice(z.t_coord), detail::lattice(z.s_coord)}; }

    std::unordered_map<LatticeKey, Entry, walk::LatticeKeyHash> entries_;
    std::optional<double> constant_;
    Fallback fallback_;
    nlohmann::json meta_ = nlohmann::json::object();
};

/// V_m at every state of layer n of the DP from `start`, each by its own DP.
inline VTable build_v_table_dp(State start, const StepLaw& law, std::size_t n, std::size_t m) {
    const walk::DPTable t = walk::exact_survival_dp(start, law, n);
    VTable v;
    v.set(start, {m, estimate_v(start, law, {m}, VMethod::dp).front().value, 0.0});
    for (const auto& [k, mass] : t.layer(n)) {
        const State z{static_cast<double>(k.t), static_cast<double>(k.s)};
        const VEstimate e = estimate_v(z, law, {m}, VMethod::dp).front();
        v.set(z, {m, e.value, e.std_error});
    }
    v.metadata() = {{"law", law.describe()}, {"start", {start.t_coord, start.s_coord}}, {"n", n}, {"m", m},
                    {"method", "dp"}};
    return v;
}

/// Importance-weighted V-transform: a rejection-sampled surviving path
/// with weight V(Z(n)) / V(start).
template <class Rng>
ConditionedSample sample_v_transform(State start, const StepLaw& law, std::size_t n, Rng& rng, const VTable& v,
                                     std::size_t budget = 1'000'000) {
    const double v0 = v(start);
    if (!(v0 > 0.0)) throw DomainError("sample_v_transform: V(start) must be positive");
    ConditionedSample s = sample_meander_walk(start, law, n, rng, budget);
    const ChainPath& p = std::get<ChainPath>(s.path);
    s.weight = v(p.states.back()) / v0;
    s.conditioning = VTransform{};
    return s;
}

/// Exact V-transform from a DP: the end state is drawn with probability
/// proportional to P(Z(n) = e, tau > n) V(e), the path backwards.
class VTransformSampler {
public:
    VTransformSampler(State start, const StepLaw& law, std::size_t n, const VTable& v)
        : law_(law), start_(start), table_(walk::exact_survival_dp(start, law, n)) {
        long double acc = 0.0L;
        for (const auto& [k, m] : table_.layer(n)) {
            const double val = v({static_cast<double>(k.t), static_cast<double>(k.s)});
            if (val < 0.0) throw DomainError("VTransformSampler: negative V value");
            acc += m * val;
            keys_.push_back(k);
            cum_.push_back(acc);
        }
        if (!(acc > 0.0L)) throw DomainError("VTransformSampler: no mass after reweighting");
    }

    /// Law of Z(n) under the transform, sorted by state.
    std::vector<std::pair<LatticeKey, double>> end_law() const {
        std::vector<std::pair<LatticeKey, double>> out;
        long double prev = 0.0L;
        for (std::size_t i = 0; i < keys_.size(); ++i) {
            out.emplace_back(keys_[i], static_cast<double>((cum_[i] - prev) / cum_.back()));
            prev = cum_[i];
        }
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        return out;
    }

    template <class Rng>
    ConditionedSample operator()(Rng& rng) const {
        const long double u = static_cast<long double>(rng.uniform()) * cum_.back();
        const std::size_t i = std::upper_bound(cum_.begin(), cum_.end(), u) - cum_.begin();
        const LatticeKey end = keys_[std::min(i, keys_.size() - 1)];
        return {detail::backward_path(table_, law_, start_, end, rng), 1.0, VTransform{}};
    }

private:
    StepLaw law_;
    State start_;
    walk::DPTable table_;
    std::vector<LatticeKey> keys_;
    std::vector<long double> cum_;
};

/// V-transform states at time n with V realized pathwise as V_m: each path
/// runs n + m steps and carries h(Z(n + m)) 1{tau > n + m} / V_m(start);
/// the estimator is the V_m-transform of the time-n marginal. Zero weights
/// are dropped; `attempts` counts every path.
template <class Rng>
WeightedEndpoints v_transform_endpoints(State start, const StepLaw& law, std::size_t n, std::size_t m,
                                        std::size_t count, Rng& rng, std::size_t budget, double v_start) {
    if (!(start.t_coord > 0.0)) throw DomainError("v_transform_endpoints: start must have positive T");
    if (!(v_start > 0.0)) throw DomainError("v_transform_endpoints: V(start) must be positive");
    check_budget(budget, "v_transform_endpoints");
    WeightedEndpoints out;
    while (out.ends.size() < count) {
        if (out.attempts == budget) throw BudgetExhausted("v_transform_endpoints", budget, out.ends.size());
        ++out.attempts;
        const auto [mid, alive] = walk::run_to_horizon(start, law, n, rng);
        if (!alive) continue;
        const auto [end, still] = walk::run_to_horizon(mid, law, m, rng);
        if (!still) continue;
        out.ends.push_back(mid);
        out.weights.push_back(specfun::h_fast(end) / v_start);
    }
    return out;
}

} // namespace kolmo::conditioning
