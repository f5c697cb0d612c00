#include <cmath>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "kolmo/conditioning.hpp"

using namespace kolmo;
using namespace kolmo::conditioning;
using walk::StepLaw;

namespace {

double tv(const std::vector<std::pair<LatticeKey, double>>& exact, const std::map<LatticeKey, double>& freq) {
    std::map<LatticeKey, double> diff = freq;
    for (const auto& [k, p] : exact) diff[k] -= p;
    double s = 0.0;
    for (const auto& [k, d] : diff) s += std::abs(d);
    return 0.5 * s;
}

LatticeKey key(State z) {
    return {static_cast<std::int64_t>(std::llround(z.t_coord)), static_cast<std::int64_t>(std::llround(z.s_coord))};
}

} // namespace

TEST(MeanderWalk, DeepStartAndExactness) {
    RngStream rng(1, 0);
    const std::size_t n = 16;
    const auto s = sample_meander_walk({256, 0}, StepLaw::rademacher(), n, rng, 1);
    const auto& p = std::get<walk::ChainPath>(s.path);
    EXPECT_FALSE(p.tau.has_value());
    EXPECT_EQ(s.weight, 1.0);
    EXPECT_EQ(std::get<Meander>(s.conditioning).horizon, 16.0);
    for (const State& z : p.states) EXPECT_GT(z.t_coord, 0.0);
    EXPECT_THROW(sample_meander_walk({0, 0}, StepLaw::rademacher(), n, rng, 10), DomainError);
    EXPECT_THROW(sample_meander_walk({1, 0}, StepLaw::rademacher(), n, rng, 0), DomainError);
}

TEST(MeanderWalk, BudgetExhaustion) {
    RngStream rng(2, 0);
    try {
        meander_walk_endpoints({1e-9, -5}, StepLaw::rademacher(), 2, 1, rng, 50);
        FAIL() << "expected BudgetExhausted";
    } catch (const BudgetExhausted& e) {
        EXPECT_EQ(e.attempts(), 50u);
        EXPECT_EQ(e.acceptance_rate(), 0.0);
    }
}

TEST(MeanderWalk, MatchesDPLaw) {
    const auto law = StepLaw::rademacher();
    const std::size_t n = 16, count = 1000000;
    RngStream rng(3, 0);
    const auto e = meander_walk_endpoints({1, 0}, law, n, count, rng, 100000000);
    std::map<LatticeKey, double> freq;
    for (const State& z : e.ends) freq[key(z)] += 1.0 / count;
    const auto dp = walk::exact_survival_dp({1, 0}, law, n);
    EXPECT_LT(tv(dp.conditional_marginal(n), freq), 0.01);
    const double p = static_cast<double>(dp.survival(n));
    EXPECT_NEAR(e.acceptance_rate(), p, 3 * std::sqrt(p * (1 - p) / e.attempts));
}

TEST(DriftMeander, StaysAboveParabola) {
    const auto law = StepLaw::tilted(StepLaw::rademacher(), walk::tilt_parameter(StepLaw::rademacher(), 0.2));
    RngStream rng(4, 0);
    const std::size_t n = 64;
    const auto e = drift_meander_endpoints({1, 0}, law, 0.2, n, 500, rng, 10000000);
    for (const State& z : e.ends) EXPECT_GT(z.t_coord, 0.5 * n * (n + 1.0) * 0.2);
    EXPECT_THROW(drift_meander_endpoints({0, 0}, law, 0.2, n, 1, rng, 10), DomainError);
}

TEST(MeanderDiffusion, RejectionAndImportanceModes) {
    DiffusionMeanderSampler near({1e-4, -0.3}, 1.0, 1.0 / 64, 1000);
    EXPECT_TRUE(near.importance_mode());
    RngStream rng(5, 0);
    const auto w = near(rng);
    EXPECT_GT(w.weight, 0.0);
    for (const State& z : std::get<diffusion::DiffusionPath>(w.path).states) EXPECT_GT(z.t_coord, 0.0);

    DiffusionMeanderSampler far({0.5, 0.0}, 1.0, 1.0 / 256, 100000);
    EXPECT_FALSE(far.importance_mode());
    EXPECT_NEAR(far.predicted_acceptance(), 0.806004516924, 1e-6);
    const auto s = far(rng);
    const auto& p = std::get<diffusion::DiffusionPath>(s.path);
    EXPECT_FALSE(p.killed_index.has_value());
    EXPECT_EQ(p.states.size(), 257u);
    EXPECT_EQ(s.weight, 1.0);
}

TEST(MeanderDiffusion, AcceptanceMatchesSurvivalAndOrdering) {
    RngStream rng(6, 0);
    const auto e = meander_diffusion_endpoints({0.5, 0.0}, 1.0, 1.0 / 512, 10000, rng, 1000000);
    const double p = 0.806004516924, se = std::sqrt(p * (1 - p) / e.attempts);
    EXPECT_NEAR(e.acceptance_rate(), p, 3 * se + 2e-3); // 2e-3 allows for the grid bias
    RngStream a(7, 0), b(7, 1);
    const auto up = meander_diffusion_endpoints({0.1, 0.3}, 1.0, 1.0 / 256, 3000, a, 1000000);
    const auto down = meander_diffusion_endpoints({0.1, -0.3}, 1.0, 1.0 / 256, 3000, b, 1000000);
    EXPECT_GE(up.acceptance_rate(), down.acceptance_rate());
}

TEST(HTransform, MeanWeightIsOne) {
    RngStream rng(8, 0);
    const auto e = h_transform_endpoints({0.5, 0.0}, 1.0, 1.0 / 256, 8000, rng, 10000000);
    EXPECT_NEAR(e.mean_weight(), 1.0, 3 * e.mean_weight_stderr() + 5e-3);
    const auto s = sample_h_transform_diffusion({0.5, 0.0}, 1.0, 1.0 / 64, rng, 1000);
    EXPECT_TRUE(std::holds_alternative<HTransform>(s.conditioning));
    EXPECT_NEAR(s.weight,
                specfun::h_fast(std::get<diffusion::DiffusionPath>(s.path).states.back()) /
                    specfun::h_hypergeometric({0.5, 0.0}),
                1e-12);
}

TEST(Bridge, UniqueTwoStepPath) {
    // from (1,0) with n = 2 only ++ reaches (4,2); (4,1) has the wrong parity
    RngStream rng(9, 0);
    for (int i = 0; i < 5; ++i) {
        const auto s = sample_bridge_dp({1, 0}, {4, 2}, StepLaw::rademacher(), 2, rng);
        const auto& p = std::get<walk::ChainPath>(s.path);
        EXPECT_EQ(p.steps, (std::vector<double>{1, 1}));
        EXPECT_EQ(std::get<Bridge>(s.conditioning).endpoint, (State{4, 2}));
    }
    EXPECT_THROW(sample_bridge_dp({1, 0}, {4, 1}, StepLaw::rademacher(), 2, rng), DomainError);
}

TEST(Bridge, ExactPathLaw) {
    // every path of length 8 from (1,0) to (3,0) is drawn with its exact conditional probability
    const std::size_t n = 8;
    const State start{1, 0}, end{3, 0};
    std::map<std::vector<double>, double> exact;
    double total = 0.0;
    for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
        std::vector<double> steps;
        State z = start;
        bool alive = true;
        for (std::size_t k = 0; k < n; ++k) {
            steps.push_back((bits >> k) & 1 ? 1.0 : -1.0);
            z = walk::step_chain(z, steps.back());
            alive = alive && z.t_coord > 0;
        }
        if (alive && z == end) {
            exact[steps] += 1.0;
            total += 1.0;
        }
    }
    ASSERT_GT(total, 3.0);
    const BridgeSampler sampler(start, end, StepLaw::rademacher(), n);
    EXPECT_EQ(sampler.end_mass(), static_cast<long double>(total) / (1u << n));
    RngStream rng(10, 0);
    const int draws = 40000;
    std::map<std::vector<double>, double> freq;
    for (int i = 0; i < draws; ++i) {
        const auto p = std::get<walk::ChainPath>(sampler(rng).path);
        ASSERT_EQ(p.states.back(), end);
        for (const State& z : p.states) ASSERT_GT(z.t_coord, 0.0);
        freq[p.steps] += 1.0 / draws;
    }
    for (const auto& [steps, c] : exact) {
        const double q = c / total;
        EXPECT_NEAR(freq[steps], q, 4 * std::sqrt(q * (1 - q) / draws));
    }
    EXPECT_EQ(freq.size(), exact.size());
}

TEST(Bridge, TimeReversalCountsN6) {
    const auto law = StepLaw::rademacher();
    for (State z : {State{1, 0}, State{2, 1}}) {
        const auto fwd = walk::exact_survival_dp(z, law, 6);
        for (const auto& [k, m] : fwd.layer(6)) {
            const auto rp = walk::time_reverse(z, {double(k.t), double(k.s)}, 6);
            const auto rev = walk::exact_survival_dp(rp.start, law, 6, rp.recurrence);
            EXPECT_EQ(m, rev.mass(6, std::llround(rp.end.t_coord), std::llround(rp.end.s_coord)));
        }
    }
}

TEST(EstimateV, RegressionAndMonteCarlo) {
    const auto law = StepLaw::rademacher();
    const auto dp = estimate_v({1, 1}, law, {8, 16, 32}, VMethod::dp);
    ASSERT_EQ(dp.size(), 3u);
    // exact rational DP with h from mpmath
    EXPECT_NEAR(dp[0].value, 0.98599186078, 1e-7);
    EXPECT_NEAR(dp[1].value, 0.984413483293, 1e-7);
    EXPECT_NEAR(dp[2].value, 0.983547228256, 1e-7);
    VOptions o;
    o.paths = 200000;
    o.seed = 3;
    const auto mc = estimate_v({1, 1}, law, {8, 16, 32}, VMethod::mc, o);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_FALSE(mc[i].fallback);
        EXPECT_NEAR(mc[i].value, dp[i].value, 4 * mc[i].std_error);
    }
    o.paths = 2000;
    o.dp_cap = 50;
    const auto fb = estimate_v({1, 1}, law, {100}, VMethod::dp, o);
    EXPECT_TRUE(fb[0].fallback);
    EXPECT_EQ(fb[0].method, VMethod::mc);
    EXPECT_THROW(estimate_v({0, 1}, law, {4}, VMethod::dp), DomainError);
}

TEST(EstimateV, HarmonicInTheDP) {
    // V_{n+1}(z) = E_z[V_n(Z(1)); tau > 1]
    const auto law = StepLaw::rademacher();
    const State z{3, -1};
    const double lhs = estimate_v(z, law, {21}, VMethod::dp)[0].value;
    double rhs = 0.0;
    for (double x : {-1.0, 1.0}) {
        const State w = walk::step_chain(z, x);
        if (w.t_coord > 0) rhs += 0.5 * estimate_v(w, law, {20}, VMethod::dp)[0].value;
    }
    EXPECT_NEAR(lhs, rhs, 1e-12 * lhs);
}

TEST(EstimateV, BoundsDeepInside) {
    const auto law = StepLaw::rademacher();
    for (State z : {State{8, 0}, State{64, 0}, State{1000, 0}}) {
        const double a = alpha(z), h = specfun::h_hypergeometric(z);
        const double v = estimate_v(z, law, {48}, VMethod::dp)[0].value;
        EXPECT_LE(std::abs(v - h), 10 * (1 + std::pow(a, -1.5)));
        EXPECT_LE(v, 10 * std::sqrt(a));
    }
}

TEST(VTable, CsvRoundTripAndFallbacks) {
    VTable t;
    t.set({3, 1}, {16, 1.25, 1e-8});
    t.set({1, -2}, {16, 0.1 + 0.2, 0.0});
    std::stringstream ss;
    t.write_csv(ss);
    EXPECT_EQ(ss.str().substr(0, 19), "T,S,n,value,stderr\n");
    const auto back = VTable::read_csv(ss);
    EXPECT_EQ(back.size(), 2u);
    EXPECT_EQ(back({1, -2}), 0.1 + 0.2);
    EXPECT_EQ(back.find({3, 1})->n, 16u);
    EXPECT_THROW(back({5, 5}), DomainError);
    std::stringstream again(ss.str());
    const auto h = VTable::read_csv(again, VTable::Fallback::h_function);
    EXPECT_EQ(h({5, 5}), specfun::h_fast({5, 5}));
    std::stringstream bad("T,S,value\n");
    EXPECT_THROW(VTable::read_csv(bad), DomainError);
    EXPECT_EQ(VTable::constant(2.0)({9, 9}), 2.0);
}

TEST(VTransform, ConstantVIsPlainConditioning) {
    const auto law = StepLaw::rademacher();
    const VTransformSampler s({1, 0}, law, 10, VTable::constant(1.0));
    const auto dp = walk::exact_survival_dp({1, 0}, law, 10).conditional_marginal(10);
    const auto el = s.end_law();
    ASSERT_EQ(el.size(), dp.size());
    for (std::size_t i = 0; i < el.size(); ++i) {
        EXPECT_EQ(el[i].first, dp[i].first);
        EXPECT_NEAR(el[i].second, dp[i].second, 1e-15);
    }
    RngStream rng(11, 0);
    EXPECT_EQ(sample_v_transform({1, 0}, law, 10, rng, VTable::constant(1.0)).weight, 1.0);
}

TEST(VTransform, EndLawMatchesEnumeration) {
    const auto law = StepLaw::rademacher();
    const std::size_t n = 8;
    VTable v(VTable::Fallback::h_function);
    const VTransformSampler s({1, 0}, law, n, v);
    std::map<LatticeKey, double> w;
    double total = 0.0;
    for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
        State z{1, 0};
        bool alive = true;
        for (std::size_t k = 0; k < n; ++k) {
            z = walk::step_chain(z, (bits >> k) & 1 ? 1.0 : -1.0);
            alive = alive && z.t_coord > 0;
        }
        if (!alive) continue;
        w[key(z)] += specfun::h_fast(z);
        total += specfun::h_fast(z);
    }
    for (const auto& [k, p] : s.end_law()) EXPECT_NEAR(p, w[k] / total, 1e-14);
    RngStream rng(12, 0);
    const auto path = std::get<walk::ChainPath>(s(rng).path);
    EXPECT_EQ(path.states.size(), n + 1);
}

TEST(VTransform, ExtensionWeightsNormaliseAndPushAway) {
    const auto law = StepLaw::rademacher();
    const std::size_t n = 16, m = 16;
    const double v0 = estimate_v({1, 1}, law, {n + m}, VMethod::dp)[0].value;
    RngStream rng(13, 0);
    const auto e = v_transform_endpoints({1, 1}, law, n, m, 40000, rng, 100000000, v0);
    EXPECT_NEAR(e.mean_weight(), 1.0, 3 * e.mean_weight_stderr());
    // the transform favours states far from the boundary
    double wt = 0.0, ws = 0.0;
    for (std::size_t i = 0; i < e.ends.size(); ++i) {
        wt += e.weights[i] * e.ends[i].t_coord;
        ws += e.weights[i];
    }
    const auto dp = walk::exact_survival_dp({1, 1}, law, n).conditional_marginal(n);
    double meander_t = 0.0;
    for (const auto& [k, p] : dp) meander_t += p * k.t;
    EXPECT_GT(wt / ws, meander_t);
    EXPECT_THROW(v_transform_endpoints({1, 1}, law, n, m, 1, rng, 10, 0.0), DomainError);
}
