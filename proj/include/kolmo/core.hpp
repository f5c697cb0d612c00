#pragma once

// Shared state types, the (3/2, 1/2) scaling maps, the alpha gauge and
// deterministic random streams.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace kolmo {

/// Thrown when an argument lies outside an operation's domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Thrown when a numerical method fails to reach its tolerance.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A point of the plane: the integrated coordinate (x, u, T) and the
/// velocity coordinate (y, v, S).
struct State {
    double t_coord = 0.0;
    double s_coord = 0.0;

    friend constexpr bool operator==(const State&, const State&) = default;
};

/// Strictly positive continuous time horizon.
class TimeHorizon {
public:
    explicit TimeHorizon(double t) : t_(t) {
        if (!(t > 0.0) || !std::isfinite(t))
            throw DomainError("time horizon must be positive and finite, got " + std::to_string(t));
    }
    double value() const noexcept { return t_; }

private:
    double t_;
};

inline constexpr double kSqrt3 = 1.7320508075688772935;

/// Exponent q0 = log(9/8)/log(2) in the mild approach condition.
inline const double kQ0 = std::log(9.0 / 8.0) / std::log(2.0);

/// alpha(x, y) = max(|x|^{1/3}, |y|). The cube root acts on |x| so negative
/// first coordinates stay finite.
inline double alpha(State z) noexcept {
    return std::max(std::cbrt(std::abs(z.t_coord)), std::abs(z.s_coord));
}

/// a_t(x, y) = (x t^{-3/2}, y t^{-1/2}).
inline State scale_down(State z, TimeHorizon t) noexcept {
    const double r = std::sqrt(t.value());
    return {z.t_coord / (t.value() * r), z.s_coord / r};
}

/// b_t = a_t^{-1}.
inline State scale_up(State z, TimeHorizon t) noexcept {
    const double r = std::sqrt(t.value());
    return {z.t_coord * t.value() * r, z.s_coord * r};
}

/// log(1/alpha^{1/2}) <= C alpha^{-q0}.
inline bool mild_condition_holds(double alpha_value, double bound_constant) {
    if (!(alpha_value > 0.0))
        throw DomainError("mild_condition_holds: alpha must be positive");
    return -0.5 * std::log(alpha_value) <= bound_constant * std::pow(alpha_value, -kQ0);
}

/// Philox4x32-10 counter-based generator. The key is derived from the seed
/// and the counter's upper words hold the stream id, so distinct
/// (seed, stream_id) pairs never share a block of output.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept : seed_(seed), stream_(stream_id) {
        key_ = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
        counter_ = {0u, 0u, static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32)};
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (index_ == 2) refill();
        const result_type r = (static_cast<result_type>(block_[2 * index_]) << 32) | block_[2 * index_ + 1];
        ++index_;
        return r;
    }

    /// Uniform double in (0, 1).
    double uniform() noexcept { return ((*this)() >> 11) * 0x1.0p-53 + 0x1.0p-54; }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_; }

    /// A fresh stream whose id is derived from this stream's id and `child`.
    RngStream split(std::uint64_t child) const noexcept {
        return RngStream(seed_, mix(stream_ * 0x9E3779B97F4A7C15ull + child + 1));
    }

private:
    static std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    void refill() noexcept {
        std::uint32_t c0 = counter_[0], c1 = counter_[1], c2 = counter_[2], c3 = counter_[3];
        std::uint32_t k0 = key_[0], k1 = key_[1];
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c0;
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c2;
            const std::uint32_t n0 = static_cast<std::uint32_t>(p1 >> 32) ^ c1 ^ k0;
            const std::uint32_t n2 = static_cast<std::uint32_t>(p0 >> 32) ^ c3 ^ k1;
            c1 = static_cast<std::uint32_t>(p1);
            c3 = static_cast<std::uint32_t>(p0);
            c0 = n0;
            c2 = n2;
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        block_ = {c0, c1, c2, c3};
        index_ = 0;
        if (++counter_[0] == 0) ++counter_[1];
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::array<std::uint32_t, 2> key_{};
    std::array<std::uint32_t, 4> counter_{};
    std::array<std::uint32_t, 4> block_{};
    int index_ = 2;
};

} // namespace kolmo
