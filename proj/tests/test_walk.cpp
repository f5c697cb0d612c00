#include <cmath>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "kolmo/walk.hpp"

using namespace kolmo;
using namespace kolmo::walk;

TEST(StepChain, Examples) {
    EXPECT_EQ(step_chain({0, 0}, 1), (State{1, 1}));
    EXPECT_EQ(step_chain({1, 1}, -1), (State{1, 0}));
}

TEST(StepChain, SummationFormAgrees) {
    // T(n) = x + n y + sum_{i<=n} (n - i + 1) X_i, S(n) = y + sum X_i
    RngStream rng(21, 0);
    const auto law = StepLaw::lattice({-2, -1, 0, 1, 3}, {0.1, 0.3, 0.2, 0.3, 0.1});
    for (int rep = 0; rep < 50; ++rep) {
        const State start{static_cast<double>(rep % 7), static_cast<double>(rep % 5 - 2)};
        const ChainPath p = simulate_path(start, law, 20, rng, false);
        ASSERT_EQ(p.states.size(), 21u);
        for (std::size_t n = 0; n <= 20; ++n) {
            double t = start.t_coord + n * start.s_coord, s = start.s_coord;
            for (std::size_t i = 1; i <= n; ++i) {
                t += (n - i + 1.0) * p.steps[i - 1];
                s += p.steps[i - 1];
            }
            EXPECT_EQ(p.states[n].t_coord, t);
            EXPECT_EQ(p.states[n].s_coord, s);
        }
    }
}

TEST(SimulatePath, TauDefinition) {
    RngStream rng(1, 0);
    const auto p = simulate_path({0, 5}, StepLaw::rademacher(), 10, rng, true);
    ASSERT_TRUE(p.tau.has_value());
    EXPECT_EQ(*p.tau, 0u);
    RngStream a(3, 1), b(3, 1);
    const auto x = simulate_path({1, 0}, StepLaw::gaussian(), 50, a, false);
    const auto y = simulate_path({1, 0}, StepLaw::gaussian(), 50, b, false);
    EXPECT_EQ(x.steps, y.steps);
}

TEST(SimulatePath, RademacherTwoStepSurvival) {
    // enumeration: from (1,0) the sequences ++ and +- survive two steps
    int alive = 0;
    for (int a : {-1, 1})
        for (int b : {-1, 1}) {
            const State z1 = step_chain({1, 0}, a), z2 = step_chain(z1, b);
            alive += z1.t_coord > 0 && z2.t_coord > 0;
        }
    EXPECT_EQ(alive, 2);
    const auto dp = exact_survival_dp({1, 0}, StepLaw::rademacher(), 2);
    EXPECT_EQ(dp.survival(2), 0.5L);
    EXPECT_EQ(dp.survival(0), 1.0L);
    EXPECT_EQ(exact_survival_dp({0, 3}, StepLaw::rademacher(), 0).survival(0), 0.0L);
}

TEST(ScaledPath, IndexingAndErrors) {
    RngStream rng(8, 0);
    const std::size_t n = 37;
    const auto p = simulate_path({3, -1}, StepLaw::rademacher(), n, rng, false);
    const auto sp = scaled_path(p, n);
    const double nn = n;
    const State z0 = sp(0.0);
    EXPECT_DOUBLE_EQ(z0.t_coord, 3 / (nn * std::sqrt(nn)));
    EXPECT_DOUBLE_EQ(z0.s_coord, -1 / std::sqrt(nn));
    EXPECT_DOUBLE_EQ(sp(1.0).t_coord, p.states[n].t_coord / std::pow(nn, 1.5));
    for (int i = 0; i < 100; ++i) {
        const double t = i / 99.0;
        std::size_t k = 0;
        while ((k + 1) <= t * nn) ++k; // independent floor
        EXPECT_DOUBLE_EQ(sp(t).s_coord, p.states[k].s_coord / std::sqrt(nn));
    }
    EXPECT_THROW(scaled_path(p, n + 1), DomainError);
    EXPECT_THROW(sp(1.5), DomainError);
}

TEST(DriftScaledPath, Examples) {
    RngStream rng(9, 0);
    const auto p = simulate_path({0, 0}, StepLaw::rademacher(), 16, rng, false);
    const auto plain = scaled_path(p, 16), drift0 = drift_scaled_path(p, 0.0, 1.0, 16);
    for (double t : {0.0, 0.3, 0.77, 1.0}) EXPECT_EQ(plain(t), drift0(t));
    EXPECT_EQ(drift_scaled_path(p, 0.2, 0.9, 16)(0.0), (State{0, 0}));
    const auto d = drift_scaled_path(p, 0.2, 0.9, 16);
    const std::size_t k = 8; // s = 0.5
    const double n = 16;
    EXPECT_DOUBLE_EQ(d(0.5).t_coord, (p.states[k].t_coord - k * (k + 1) * 0.1) / (0.9 * n * std::sqrt(n)));
    EXPECT_DOUBLE_EQ(d(0.5).s_coord, (p.states[k].s_coord - k * 0.2) / (0.9 * std::sqrt(n)));
    EXPECT_THROW(drift_scaled_path(p, 0.2, 0.0, 16), DomainError);
}

TEST(TauQuadratic, Examples) {
    ChainPath p;
    p.start = {2, 1};
    p.states = {{2, 1}};
    // steps +1, +1, -1, -1, +1
    for (double x : {1.0, 1.0, -1.0, -1.0, 1.0}) {
        p.steps.push_back(x);
        p.states.push_back(step_chain(p.states.back(), x));
    }
    // T: 2, 4, 7, 9, 10, 12; barrier k(k+1)c/2 with c = 1: 0, 1, 3, 6, 10, 15
    EXPECT_EQ(tau_quadratic(p, 1.0), std::optional<std::size_t>(4));
    EXPECT_EQ(tau_quadratic(p, 0.0), std::nullopt);
    ChainPath z;
    z.states = {{0, 1}, {2, 2}};
    EXPECT_EQ(tau_quadratic(z, 0.5), std::optional<std::size_t>(0));
}

TEST(Tilt, Examples) {
    const auto rad = StepLaw::rademacher();
    EXPECT_EQ(tilt_parameter(rad, 0.0), 0.0);
    EXPECT_NEAR(tilt_parameter(rad, std::tanh(1.0)), 1.0, 1e-12);
    EXPECT_THROW(tilt_parameter(rad, 1.5), DomainError);
    const double tc = tilt_parameter(rad, 0.2);
    const auto tl = StepLaw::tilted(rad, tc);
    EXPECT_NEAR(tl.weights()[0] + tl.weights()[1], 1.0, 1e-14);
    EXPECT_NEAR(tl.mean(), 0.2, 1e-12);
    EXPECT_NEAR(tl.variance(), 1 - 0.04, 1e-12);
    RngStream rng(17, 0);
    double s = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) s += tl.sample(rng);
    EXPECT_NEAR(s / n, 0.2, 4 * std::sqrt(0.96 / n));
}

TEST(StepLaw, Validation) {
    EXPECT_THROW(StepLaw::lattice({1, 2}, {0.5}), DomainError);
    EXPECT_THROW(StepLaw::lattice({1, 2}, {0.7, 0.7}), DomainError);
    EXPECT_THROW(StepLaw::lattice({1, 2}, {-0.1, 1.1}), DomainError);
    EXPECT_TRUE(StepLaw::lattice({-1, 0, 1}, {0.25, 0.5, 0.25}).is_aperiodic());
    EXPECT_FALSE(StepLaw::lattice({-2, 2}, {0.5, 0.5}).is_aperiodic());
    EXPECT_THROW(exact_survival_dp({1, 0}, StepLaw::gaussian(), 3), DomainError);
    EXPECT_THROW(exact_survival_dp({1.5, 0}, StepLaw::rademacher(), 3), DomainError);
    EXPECT_THROW(exact_survival_dp({1, 0}, StepLaw::rademacher(), 65), DomainError);
    EXPECT_THROW(exact_survival_dp({1, 0}, StepLaw::rademacher(), 40, Recurrence::forward, 64, 100), DPOverflow);
}

TEST(DP, MonotoneSurvivalAndMonteCarloMarginal) {
    const auto law = StepLaw::rademacher();
    const auto dp = exact_survival_dp({1, 0}, law, 16);
    for (std::size_t k = 1; k <= 16; ++k) EXPECT_LE(dp.survival(k), dp.survival(k - 1));
    // MC of Z(16) frequencies against the DP within 4 standard errors
    RngStream rng(5, 0);
    std::map<LatticeKey, double> freq;
    const int n = 400000;
    for (int i = 0; i < n; ++i) {
        const auto [z, alive] = run_to_horizon({1, 0}, law, 16, rng);
        if (alive) freq[{std::llround(z.t_coord), std::llround(z.s_coord)}] += 1.0 / n;
    }
    for (const auto& [key, w] : dp.layer(16)) {
        const double p = static_cast<double>(w);
        EXPECT_NEAR(freq[key], p, 4 * std::sqrt(p * (1 - p) / n) + 1e-12);
    }
}

TEST(TimeReversal, DPIdentity) {
    const auto law = StepLaw::rademacher();
    const auto rp = time_reverse({1, 0}, {3, 1}, 4);
    EXPECT_EQ(rp.start, (State{3, -1}));
    EXPECT_EQ(rp.end, (State{1, 0}));
    EXPECT_EQ(rp.recurrence, Recurrence::reversed);
    const auto fwd = exact_survival_dp({1, 0}, law, 4);
    const auto rev = exact_survival_dp(rp.start, law, 4, rp.recurrence);
    // (3, 1) has the wrong parity at n = 4, so both sides vanish
    EXPECT_EQ(fwd.mass(4, 3, 1), 0.0L);
    EXPECT_EQ(rev.mass(4, 1, 0), 0.0L);
    const auto rp5 = time_reverse({1, 0}, {5, 0}, 4);
    const auto rev5 = exact_survival_dp(rp5.start, law, 4, rp5.recurrence);
    EXPECT_GT(fwd.mass(4, 5, 0), 0.0L);
    EXPECT_EQ(fwd.mass(4, 5, 0), rev5.mass(4, 1, 0));
    const auto twice = time_reverse(rp.start, rp.end, 4, rp.recurrence);
    EXPECT_EQ(twice.start, (State{1, 0}));
    EXPECT_EQ(twice.end, (State{3, 1}));
    EXPECT_EQ(twice.recurrence, Recurrence::forward);
    // reversed recurrence by hand: T' = T + S, S' = S + X
    const auto hand = exact_survival_dp({2, 1}, law, 1, Recurrence::reversed);
    EXPECT_EQ(hand.mass(1, 3, 2), 0.5L);
    EXPECT_EQ(hand.mass(1, 3, 0), 0.5L);
}

TEST(TiltedDP, ChangeOfMeasureExact) {
    // P_tilt(tau_c > n) = E[e^{t S_n} / M(t)^n; tau_c > n] under the base law.
    const auto base = StepLaw::rademacher();
    const double c = 0.25, t = tilt_parameter(base, c);
    const auto tl = StepLaw::tilted(base, t);
    for (std::size_t n : {4u, 8u, 12u}) {
        long double direct = 0.0L, reweighted = 0.0L;
        for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
            State z{3, 0};
            bool alive = true;
            long double pt = 1.0L, sum = 0.0L;
            for (std::size_t k = 1; k <= n; ++k) {
                const int x = (bits >> (k - 1)) & 1 ? 1 : -1;
                pt *= x > 0 ? tl.weights()[1] : tl.weights()[0];
                sum += x;
                z = step_chain(z, x);
                alive = alive && z.t_coord > 0.5 * k * (k + 1.0) * c;
            }
            if (!alive) continue;
            direct += pt;
            reweighted += std::pow(0.5L, n) * std::exp(static_cast<long double>(t) * sum) /
                          std::pow(static_cast<long double>(base.mgf(t)), static_cast<long double>(n));
        }
        EXPECT_NEAR(static_cast<double>(direct), static_cast<double>(reweighted), 1e-14) << n;
    }
}

TEST(PathIO, BinaryRoundTripAndCsv) {
    RngStream rng(2, 0);
    const auto p = simulate_path({1, 0}, StepLaw::gaussian(), 30, rng, false);
    std::stringstream ss;
    write_path_binary(ss, p);
    const auto q = read_path_binary(ss);
    EXPECT_EQ(q.steps, p.steps);
    ASSERT_EQ(q.states.size(), p.states.size());
    EXPECT_EQ(q.states.back(), p.states.back());
    EXPECT_EQ(q.tau, p.tau);
    std::stringstream csv;
    write_path_csv(csv, p);
    std::string header;
    std::getline(csv, header);
    EXPECT_EQ(header, "k,step,T,S");
    std::stringstream dp;
    write_dp_marginal_csv(dp, exact_survival_dp({1, 0}, StepLaw::rademacher(), 2), 2);
    EXPECT_EQ(dp.str(), "T,S,probability\n2,0,0.25\n4,2,0.25\n");
}
