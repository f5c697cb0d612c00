#pragma once

// Integrated random walks Z(n) = (T(n), S(n)) with
//   T(n+1) = T(n) + S(n) + X,  S(n+1) = S(n) + X,
// their exit time tau = inf{n >= 0 : T(n) <= 0}, lattice dynamic programs,
// time reversal and exponential tilting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include <boost/math/tools/roots.hpp>
#include <boost/random/normal_distribution.hpp>

#include "kolmo/core.hpp"

namespace kolmo::walk {

/// Distribution of a single step X.
class StepLaw {
public:
    enum class Kind { rademacher, lattice, gaussian, tilted };

    static StepLaw rademacher() { return StepLaw(Kind::rademacher, {-1, 1}, {0.5, 0.5}); }

    /// Integer support with non-negative weights summing to one.
    static StepLaw lattice(std::vector<long> support, std::vector<double> weights) {
        if (support.empty() || support.size() != weights.size())
            throw DomainError("StepLaw::lattice: support and weights must be non-empty and of equal size");
        double total = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0)) throw DomainError("StepLaw::lattice: weights must be non-negative");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12) throw DomainError("StepLaw::lattice: weights must sum to 1");
        return StepLaw(Kind::lattice, std::move(support), std::move(weights));
    }

    /// Standard normal steps.
    static StepLaw gaussian() {
        StepLaw s(Kind::gaussian, {}, {});
        s.mean_ = 0.0;
        s.variance_ = 1.0;
        return s;
    }

    /// Exponential tilt d mu_t = e^{t x} d mu / M(t).
    static StepLaw tilted(const StepLaw& base, double t) {
        if (!std::isfinite(t)) throw DomainError("StepLaw::tilted: parameter must be finite");
        if (base.kind_ == Kind::tilted) return tilted(*base.base_, base.t_param_ + t);
        StepLaw s(Kind::tilted, {}, {});
        s.base_ = std::make_shared<const StepLaw>(base);
        s.t_param_ = t;
        s.normalizer_ = base.mgf(t);
        if (base.is_lattice()) {
            s.support_ = base.support_;
            s.weights_.resize(base.weights_.size());
            for (std::size_t i = 0; i < s.support_.size(); ++i)
                s.weights_[i] = base.weights_[i] * std::exp(t * s.support_[i]) / s.normalizer_;
            s.init_moments();
        } else {
            s.mean_ = t; // a tilted standard normal is N(t, 1)
            s.variance_ = 1.0;
        }
        return s;
    }

    Kind kind() const noexcept { return kind_; }
    bool is_lattice() const noexcept { return !support_.empty(); }
    double mean() const noexcept { return mean_; }
    double variance() const noexcept { return variance_; }
    bool mgf_available() const noexcept { return true; }
    const std::vector<long>& support() const noexcept { return support_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    double t_param() const noexcept { return t_param_; }
    /// M(t) of the base law at the tilt parameter (1 for untilted laws).
    double normalizer() const noexcept { return normalizer_; }
    const StepLaw* base() const noexcept { return base_.get(); }

    /// E[e^{theta X}].
    double mgf(double theta) const {
        if (is_lattice()) {
            double m = 0.0;
            for (std::size_t i = 0; i < support_.size(); ++i) m += weights_[i] * std::exp(theta * support_[i]);
            return m;
        }
        return std::exp(theta * mean_ + 0.5 * theta * theta * variance_);
    }

    /// (log M)'(theta) and (log M)''(theta).
    std::pair<double, double> log_mgf_derivatives(double theta) const {
        if (!is_lattice()) return {mean_ + theta * variance_, variance_};
        double m0 = 0.0, m1 = 0.0, m2 = 0.0, top = -INFINITY;
        for (long s : support_) top = std::max(top, theta * s);
        for (std::size_t i = 0; i < support_.size(); ++i) {
            const double e = weights_[i] * std::exp(theta * support_[i] - top);
            m0 += e;
            m1 += e * support_[i];
            m2 += e * support_[i] * support_[i];
        }
        const double d1 = m1 / m0;
        return {d1, m2 / m0 - d1 * d1};
    }

    /// Aperiodicity: gcd of the pairwise differences of the support is 1.
    bool is_aperiodic() const {
        if (!is_lattice()) return true;
        long g = 0;
        for (long s : support_)
            if (s != support_.front()) g = std::gcd(g, std::abs(s - support_.front()));
        return g == 1;
    }

    template <class Rng>
    double sample(Rng& rng) const {
        if (kind_ == Kind::rademacher) return (rng() >> 63) ? 1.0 : -1.0;
        if (is_lattice()) {
            double u = rng.uniform();
            for (std::size_t i = 0; i + 1 < cumulative_.size(); ++i)
                if (u < cumulative_[i]) return static_cast<double>(support_[i]);
            return static_cast<double>(support_.back());
        }
        boost::random::normal_distribution<double> nd(mean_, std::sqrt(variance_));
        return nd(rng);
    }

    std::string describe() const {
        switch (kind_) {
        case Kind::rademacher: return "rademacher";
        case Kind::gaussian: return "gaussian";
        case Kind::lattice: return "lattice";
        case Kind::tilted: return "tilted(" + base_->describe() + ", " + std::to_string(t_param_) + ")";
        }
        return "?";
    }

private:
    StepLaw(Kind k, std::vector<long> support, std::vector<double> weights)
        : kind_(k), support_(std::move(support)), weights_(std::move(weights)) {
        if (!support_.empty()) init_moments();
    }

    void init_moments() {
        mean_ = 0.0;
        double m2 = 0.0, acc = 0.0;
        cumulative_.clear();
        for (std::size_t i = 0; i < support_.size(); ++i) {
            mean_ += weights_[i] * support_[i];
            m2 += weights_[i] * support_[i] * support_[i];
            acc += weights_[i];
            cumulative_.push_back(acc);
        }
        variance_ = m2 - mean_ * mean_;
    }

    Kind kind_;
    std::vector<long> support_;
    std::vector<double> weights_;
    std::vector<double> cumulative_;
    double mean_ = 0.0;
    double variance_ = 0.0;
    std::shared_ptr<const StepLaw> base_;
    double t_param_ = 0.0;
    double normalizer_ = 1.0;
};

struct ChainPath {
    State start;
    std::vector<double> steps;
    std::vector<State> states; ///< states[k] = Z(k), states[0] = start
    std::optional<std::size_t> tau;
};

/// One step of the chain: (T + S + x, S + x).
constexpr State step_chain(State z, double x) noexcept {
    return {z.t_coord + z.s_coord + x, z.s_coord + x};
}

/// Simulates n steps (fewer if stop_at_tau and the walk exits). tau follows
/// the weak inequality T <= 0 and includes index 0.
template <class Rng>
ChainPath simulate_path(State start, const StepLaw& law, std::size_t n, Rng& rng, bool stop_at_tau) {
    ChainPath p;
    p.start = start;
    p.states.reserve(n + 1);
    p.steps.reserve(n);
    p.states.push_back(start);
    if (start.t_coord <= 0.0) {
        p.tau = 0;
        if (stop_at_tau) return p;
    }
    State z = start;
    for (std::size_t k = 1; k <= n; ++k) {
        const double x = law.sample(rng);
        z = step_chain(z, x);
        p.steps.push_back(x);
        p.states.push_back(z);
        if (!p.tau && z.t_coord <= 0.0) {
            p.tau = k;
            if (stop_at_tau) break;
        }
    }
    return p;
}

/// Runs the chain without storing it; returns the end state and whether it
/// survived n steps.
template <class Rng>
std::pair<State, bool> run_to_horizon(State z, const StepLaw& law, std::size_t n, Rng& rng) {
    if (z.t_coord <= 0.0) return {z, false};
    if (law.kind() == StepLaw::Kind::rademacher) {
        // 64 steps per draw
        std::size_t k = 0;
        while (k < n) {
            std::uint64_t bits = rng();
            const std::size_t m = std::min<std::size_t>(64, n - k);
            for (std::size_t j = 0; j < m; ++j, bits >>= 1) {
                const double x = (bits & 1u) ? 1.0 : -1.0;
                z = {z.t_coord + z.s_coord + x, z.s_coord + x};
                if (z.t_coord <= 0.0) return {z, false};
            }
            k += m;
        }
        return {z, true};
    }
    for (std::size_t k = 0; k < n; ++k) {
        z = step_chain(z, law.sample(rng));
        if (z.t_coord <= 0.0) return {z, false};
    }
    return {z, true};
}

/// Right-continuous step function t -> (T([tn]) n^{-3/2}, S([tn]) n^{-1/2}).
class ScaledPath {
public:
    ScaledPath(const ChainPath& path, std::size_t n, double c = 0.0, double sigma = 1.0)
        : states_(&path.states), n_(n), c_(c), sigma_(sigma) {
        if (path.states.size() < n + 1)
            throw DomainError("scaled_path: path has " + std::to_string(path.states.size() - 1) +
                              " steps, need " + std::to_string(n));
        if (!(sigma > 0.0)) throw DomainError("drift_scaled_path: sigma must be positive");
    }

    State operator()(double t) const {
        if (!(t >= 0.0 && t <= 1.0)) throw DomainError("scaled path is defined on [0, 1]");
        const auto k = static_cast<std::size_t>(std::floor(t * static_cast<double>(n_)));
        return at_index(std::min(k, n_));
    }

    State at_index(std::size_t k) const {
        const State z = (*states_)[k];
        const double n = static_cast<double>(n_), kk = static_cast<double>(k);
        const double tt = z.t_coord - 0.5 * kk * (kk + 1.0) * c_;
        const double ss = z.s_coord - kk * c_;
        return {tt / (sigma_ * n * std::sqrt(n)), ss / (sigma_ * std::sqrt(n))};
    }

private:
    const std::vector<State>* states_;
    std::size_t n_;
    double c_, sigma_;
};

inline ScaledPath scaled_path(const ChainPath& path, std::size_t n) { return ScaledPath(path, n); }

/// ((T(k) - k(k+1)c/2) / (sigma n^{3/2}), (S(k) - kc) / (sigma n^{1/2})) with k = [sn].
/// Both coordinates carry a single factor sigma: T(k) - k(k+1)c/2 is the
/// integrated walk of the centred steps X - c, whose variance is sigma^2.
inline ScaledPath drift_scaled_path(const ChainPath& path, double c, double sigma, std::size_t n) {
    return ScaledPath(path, n, c, sigma);
}

/// First k with T(k) <= k(k+1)c/2.
inline std::optional<std::size_t> tau_quadratic(const ChainPath& path, double c) {
    for (std::size_t k = 0; k < path.states.size(); ++k) {
        const double kk = static_cast<double>(k);
        if (path.states[k].t_coord <= 0.5 * kk * (kk + 1.0) * c) return k;
    }
    return std::nullopt;
}

/// Solves (log M)'(t) = c for the tilt parameter.
inline double tilt_parameter(const StepLaw& law, double c) {
    if (!std::isfinite(c)) throw DomainError("tilt_parameter: c must be finite");
    auto f = [&](double t) { return law.log_mgf_derivatives(t).first - c; };
    const double f0 = f(0.0);
    if (f0 == 0.0) return 0.0;
    const double dir = f0 < 0.0 ? 1.0 : -1.0;
    double lo = 0.0, hi = dir;
    int expand = 0;
    while (f(hi) * f0 > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++expand > 10 || !std::isfinite(f(hi)))
            throw DomainError("tilt_parameter: drift " + std::to_string(c) + " not attained on [0, " +
                              std::to_string(hi) + "]");
    }
    if (lo > hi) std::swap(lo, hi);
    boost::uintmax_t iters = 200;
    auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-13 * std::max(1.0, std::abs(a)); };
    const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
    return 0.5 * (a + b);
}

/// Which law of motion a DP layer follows.
enum class Recurrence {
    forward,  ///< T' = T + S + X, S' = S + X
    reversed, ///< T' = T + S,     S' = S + X
};

struct LatticeKey {
    std::int64_t t;
    std::int64_t s;
    friend bool operator==(const LatticeKey&, const LatticeKey&) = default;
    friend bool operator<(const LatticeKey& a, const LatticeKey& b) {
        return a.t != b.t ? a.t < b.t : a.s < b.s;
    }
};

struct LatticeKeyHash {
    std::size_t operator()(const LatticeKey& k) const noexcept {
        std::uint64_t h = static_cast<std::uint64_t>(k.t) * 0x9E3779B97F4A7C15ull;
        h ^= static_cast<std::uint64_t>(k.s) + 0x632BE59BD9B4E019ull + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

/// Probability of reaching (T, S) at step k without having exited.
/// Weights are long double: for Rademacher steps they are exact dyadic
/// rationals up to n = 63.
class DPTable {
public:
    using Layer = std::unordered_map<LatticeKey, long double, LatticeKeyHash>;

    DPTable(std::vector<Layer> layers, Recurrence rec) : layers_(std::move(layers)), rec_(rec) {}

    std::size_t horizon() const noexcept { return layers_.size() - 1; }
    Recurrence recurrence() const noexcept { return rec_; }
    const Layer& layer(std::size_t k) const { return layers_.at(k); }

    /// P(tau > k).
    long double survival(std::size_t k) const {
        long double s = 0.0L;
        for (const auto& [key, w] : layers_.at(k)) s += w;
        return s;
    }

    /// P(Z(k) = (t, s), tau > k).
    long double mass(std::size_t k, std::int64_t t, std::int64_t s) const {
        const auto& l = layers_.at(k);
        const auto it = l.find({t, s});
        return it == l.end() ? 0.0L : it->second;
    }

    /// Law of Z(k) given tau > k, sorted by key.
    std::vector<std::pair<LatticeKey, double>> conditional_marginal(std::size_t k) const {
        const long double total = survival(k);
        std::vector<std::pair<LatticeKey, double>> out;
        if (total <= 0.0L) return out;
        for (const auto& [key, w] : layers_.at(k)) out.emplace_back(key, static_cast<double>(w / total));
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        return out;
    }

    std::size_t entries() const {
        std::size_t e = 0;
        for (const auto& l : layers_) e += l.size();
        return e;
    }

private:
    std::vector<Layer> layers_;
    Recurrence rec_;
};

/// Thrown when a dynamic program would exceed its memory budget.
class DPOverflow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultDPCap = 64;
inline constexpr std::size_t kDefaultDPBudget = 20'000'000; // stored states over all layers

inline void require_integer(State z, const char* who) {
    if (z.t_coord != std::floor(z.t_coord) || z.s_coord != std::floor(z.s_coord))
        throw DomainError(std::string(who) + ": start must be a lattice point");
}

/// Forward dynamic program over surviving lattice states.
inline DPTable exact_survival_dp(State start, const StepLaw& law, std::size_t n,
                                 Recurrence rec = Recurrence::forward, std::size_t cap = kDefaultDPCap,
                                 std::size_t budget = kDefaultDPBudget) {
    if (!law.is_lattice()) throw DomainError("exact_survival_dp: needs a lattice step law");
    require_integer(start, "exact_survival_dp");
    if (n > cap) throw DomainError("exact_survival_dp: n = " + std::to_string(n) + " exceeds cap " + std::to_string(cap));
    std::vector<DPTable::Layer> layers(1);
    if (start.t_coord > 0.0)
        layers[0][{static_cast<std::int64_t>(start.t_coord), static_cast<std::int64_t>(start.s_coord)}] = 1.0L;
    std::vector<long double> w(law.weights().begin(), law.weights().end());
    const auto& sup = law.support();
    std::size_t stored = layers[0].size();
    for (std::size_t k = 1; k <= n; ++k) {
        DPTable::Layer next;
        next.reserve(layers.back().size() * sup.size());
        for (const auto& [key, mass] : layers.back()) {
            for (std::size_t i = 0; i < sup.size(); ++i) {
                if (w[i] == 0.0L) continue;
                const std::int64_t s2 = key.s + sup[i];
                const std::int64_t t2 = rec == Recurrence::forward ? key.t + s2 : key.t + key.s;
                if (t2 <= 0) continue;
                next[{t2, s2}] += mass * w[i];
            }
        }
        stored += next.size();
        if (stored > budget)
            throw DPOverflow("exact_survival_dp: " + std::to_string(stored) + " states exceed the budget of " +
                             std::to_string(budget) + " at step " + std::to_string(k));
        layers.push_back(std::move(next));
    }
    return DPTable(std::move(layers), rec);
}

/// The reversed problem of the time-reversal identity
/// P_z(Z(n) = y, tau > n) = P_{y~}(Z~(n) = z~, tau~ > n), with w~ = (w1, -w2)
/// and Z~ following the reversed recurrence.
struct ReversedProblem {
    State start;
    State end;
    std::size_t n;
    Recurrence recurrence;
};

inline ReversedProblem time_reverse(State z, State y, std::size_t n, Recurrence rec = Recurrence::forward) {
    const Recurrence other = rec == Recurrence::forward ? Recurrence::reversed : Recurrence::forward;
    return {{y.t_coord, -y.s_coord}, {z.t_coord, -z.s_coord}, n, other};
}

// ---------------------------------------------------------------- I/O

/// Binary dump: n (uint64), start (2 x f64), n steps (f64).
inline void write_path_binary(std::ostream& os, const ChainPath& p) {
    const std::uint64_t n = p.steps.size();
    os.write(reinterpret_cast<const char*>(&n), sizeof n);
    os.write(reinterpret_cast<const char*>(&p.start.t_coord), sizeof(double));
    os.write(reinterpret_cast<const char*>(&p.start.s_coord), sizeof(double));
    os.write(reinterpret_cast<const char*>(p.steps.data()), static_cast<std::streamsize>(n * sizeof(double)));
}

/// Rebuilds the states and tau from the stored steps.
inline ChainPath read_path_binary(std::istream& is) {
    std::uint64_t n = 0;
    ChainPath p;
    if (!is.read(reinterpret_cast<char*>(&n), sizeof n)) throw std::runtime_error("read_path_binary: truncated header");
    is.read(reinterpret_cast<char*>(&p.start.t_coord), sizeof(double));
    is.read(reinterpret_cast<char*>(&p.start.s_coord), sizeof(double));
    p.steps.resize(n);
    if (!is.read(reinterpret_cast<char*>(p.steps.data()), static_cast<std::streamsize>(n * sizeof(double))))
        throw std::runtime_error("read_path_binary: truncated steps");
    p.states.push_back(p.start);
    if (p.start.t_coord <= 0.0) p.tau = 0;
    for (std::size_t k = 0; k < n; ++k) {
        p.states.push_back(step_chain(p.states.back(), p.steps[k]));
        if (!p.tau && p.states.back().t_coord <= 0.0) p.tau = k + 1;
    }
    return p;
}

inline void write_path_csv(std::ostream& os, const ChainPath& p) {
    os << "k,step,T,S\n";
    os.precision(17);
    for (std::size_t k = 0; k < p.states.size(); ++k) {
        os << k << ',';
        if (k > 0) os << p.steps[k - 1];
        os << ',' << p.states[k].t_coord << ',' << p.states[k].s_coord << '\n';
    }
}

/// DP marginal of Z(k) on survival (unnormalised probabilities).
inline void write_dp_marginal_csv(std::ostream& os, const DPTable& table, std::size_t k) {
    std::vector<std::pair<LatticeKey, long double>> rows(table.layer(k).begin(), table.layer(k).end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    os << "T,S,probability\n";
    os.precision(17);
    for (const auto& [key, w] : rows) os << key.t << ',' << key.s << ',' << static_cast<double>(w) << '\n';
}

} // namespace kolmo::walk
