#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "kolmo/density.hpp"

using namespace kolmo;
using namespace kolmo::density;
using quad::kInf;

namespace {
constexpr double kG0 = 0.618391688566808614300265869712; // mpmath

double p_direct(double t, double x, double y, double u, double v) {
    return std::sqrt(3.0) / (std::numbers::pi * t * t) *
           std::exp(-6 * (u - x) * (u - x) / (t * t * t) + 6 * (u - x) * (v + y) / (t * t) - 2 * (v * v + v * y + y * y) / t);
}
} // namespace

TEST(PFree, Examples) {
    EXPECT_NEAR(p_free({{0, 0}, {0, 0}, 1.0}), std::sqrt(3.0) / std::numbers::pi, 1e-16);
    EXPECT_THROW(p_free({{0, 0}, {0, 0}, 0.0}), DomainError);
    EXPECT_THROW(p_free({{0, 0}, {0, 0}, -1.0}), DomainError);
}

TEST(PFree, AgreesWithDisplayedFormAndReversal) {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> c(-2, 2), tt(0.1, 3);
    for (int i = 0; i < 1000; ++i) {
        const double t = tt(gen), x = c(gen), y = c(gen), u = c(gen), v = c(gen);
        const double p = p_free({{x, y}, {u, v}, t});
        EXPECT_NEAR(p, p_direct(t, x, y, u, v), 1e-12 * p + 1e-300);
        EXPECT_EQ(p, p_free({{u, -v}, {x, -y}, t}));
    }
}

TEST(PFree, UnitMassAndChapmanKolmogorov) {
    auto inner = [](auto&& f) {
        return quad::integrate_1d(
            [&](double u) { return quad::integrate_1d([&](double v) { return f(u, v); }, {-kInf, kInf}); },
            {-kInf, kInf});
    };
    const auto mass = inner([](double u, double v) { return p_free({{0, 0}, {u, v}, 1.0}); });
    EXPECT_NEAR(mass.value, 1.0, 1e-6);
    const auto ck = inner([](double a, double b) {
        return p_free({{0.3, -0.2}, {a, b}, 0.4}) * p_free({{a, b}, {0.5, 0.7}, 0.6});
    });
    const double direct = p_free({{0.3, -0.2}, {0.5, 0.7}, 1.0});
    EXPECT_NEAR(ck.value, direct, 1e-5 * direct);
}

TEST(QAntisym, Examples) {
    EXPECT_EQ(q_antisym({{0.3, 0.4}, {1.0, 0.0}, 1.0}), 0.0);
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> c(-2, 2);
    for (int i = 0; i < 200; ++i) {
        const State a{c(gen), c(gen)};
        const double u = c(gen), v = c(gen);
        EXPECT_EQ(q_antisym({a, {u, -v}, 0.7}), -q_antisym({a, {u, v}, 0.7}));
    }
    EXPECT_DOUBLE_EQ(q_antisym({{1, 1}, {0, 1}, 1}), p_direct(1, 1, 1, 0, 1) - p_direct(1, 1, 1, 0, -1));
}

TEST(Lachal, RegressionAndSupport) {
    // frozen from the first build; the closed-form base case is checked below
    const auto r = lachal_first_hit({0.5, 0.2}, 0.0, 0.5, -0.7);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value, 8.04086004e-4, 1e-11);
    // x > a: only non-positive hitting velocities
    EXPECT_EQ(lachal_first_hit({0.5, 0.2}, 0.0, 0.5, 0.7).value, 0.0);
    // base case vanishes at z = 0
    EXPECT_EQ(lachal_first_hit({0.0, -1.0}, 0.0, 0.5, 0.0).value, 0.0);
    EXPECT_THROW(lachal_first_hit({0.0, 0.0}, 0.0, 1.0, 1.0), DomainError);
}

TEST(Lachal, BaseCaseReturnVelocityLaw) {
    // McKean: from (0, -1) the return velocity has density (3 / 2pi) w^{3/2} / (1 + w^3)
    quad::QuadSpec s;
    s.rel_tol = 1e-10;
    s.abs_tol = 1e-15;
    for (double w : {0.3, 1.0, 2.5}) {
        const auto r = quad::integrate_1d([&](double t) { return lachal_first_hit({0.0, -1.0}, 0.0, t, w).value; },
                                          {0.0, kInf}, s);
        EXPECT_NEAR(r.value, 1.5 / std::numbers::pi * std::pow(w, 1.5) / (1 + w * w * w), 1e-8) << w;
    }
}

TEST(KilledDensity, RouteAPropertiesAndReversal) {
    const DensityTolerance tol{1e-6, 1e-12, 200};
    const auto a = p_killed_route_a({{0.5, 0.2}, {0.7, -0.1}, 1.0}, tol);
    const auto b = p_killed_route_a({{0.7, 0.1}, {0.5, -0.2}, 1.0}, tol);
    ASSERT_TRUE(a.converged && b.converged);
    EXPECT_GT(a.value, 0.0);
    EXPECT_LE(a.value, p_free({{0.5, 0.2}, {0.7, -0.1}, 1.0}));
    EXPECT_NEAR(a.value, b.value, a.error_estimate + b.error_estimate);
    EXPECT_THROW(p_killed_route_a({{0.0, 0.2}, {0.7, -0.1}, 1.0}), DomainError);
    EXPECT_THROW(p_killed_route_b({{0.5, 0.2}, {-0.7, -0.1}, 1.0}), DomainError);
}

TEST(KilledDensity, RouteBFirstTerm) {
    const DensityPoint pt{{0.3, 0.1}, {0.5, 0.05}, 1.0};
    const double first = p_free({pt.from, {-0.5, -0.05}, 1.0});
    EXPECT_GT(first, 0.0);
    EXPECT_LT(first, p_free(pt));
}

TEST(HIntegral, MatchesHypergeometricRoute) {
    const auto r = h_integral({1.0, 0.0});
    ASSERT_TRUE(r.converged);
    EXPECT_NEAR(r.value, kG0, 1e-5 * kG0);
    EXPECT_NEAR(r.value, 0.618391688562346, 1e-12); // frozen
    const auto r8 = h_integral({8.0, 0.0});
    EXPECT_NEAR(r8.value / r.value, std::pow(8.0, 1.0 / 6.0), 1e-4);
    for (double x : {0.2, 0.6, 1.0})
        for (double y : {0.0, 0.5, 1.0}) {
            const double h = specfun::h_hypergeometric({x, y});
            EXPECT_NEAR(h_integral({x, y}).value, h, 1e-4 * h) << x << " " << y;
        }
    EXPECT_THROW(h_integral({0.0, 1.0}), DomainError);
}

TEST(HBar, ReferenceAndBoundaryDecay) {
    // independent scipy dblquad of the defining integral: 0.78489827910023
    const auto r = h_bar(1.0, 0.5, -0.3);
    ASSERT_TRUE(r.converged);
    EXPECT_NEAR(r.value, 0.78489827910023, 1e-9);
    double prev = INFINITY;
    for (double u : {1e-1, 1e-2, 1e-3}) {
        const double v = h_bar(1.0, u, -0.5).value;
        EXPECT_LT(v, prev);
        prev = v;
    }
    EXPECT_LT(prev, 1e-2);
}

TEST(Survival, QuadratureRegressionAndLimits) {
    const auto s = survival_probability({0.5, 0.0}, 1.0);
    EXPECT_NEAR(s.value, 0.806004516924, 1e-10); // frozen; MC agreement is an acceptance criterion
    EXPECT_NEAR(survival_probability({1e3, 0.0}, 0.1).value, 1.0, 1e-8);
    EXPECT_THROW(survival_probability({0.0, 0.0}, 1.0), DomainError);
    EXPECT_THROW(survival_probability({1.0, 0.0}, 0.0), DomainError);
}

TEST(Survival, MonteCarloAgrees) {
    SurvivalOptions o;
    o.method = SurvivalMethod::monte_carlo;
    o.paths = 20000;
    o.dt = 1.0 / 512;
    o.seed = 4;
    const auto mc = survival_probability({0.5, 0.0}, 1.0, o);
    EXPECT_NEAR(mc.value, 0.806004516924, 4.0 * mc.std_error + 2e-3);
}

TEST(Kappa, ScalingInvarianceAndFlagging) {
    // (x, y) and a_t(x, y) at times 1 and t share the same ratio by scaling
    const State z{1e-3, 0.02};
    const auto k1 = estimate_kappa({z}, 1.0, KappaMethod::quadrature_ratio);
    const auto k4 = estimate_kappa({scale_up(z, TimeHorizon(4.0))}, 4.0, KappaMethod::quadrature_ratio);
    EXPECT_NEAR(k1.value, k4.value, 1e-6 * k1.value);
    EXPECT_GT(k1.value, 1.0); // measured, not the unit normalisation
    EXPECT_THROW(estimate_kappa({}, 1.0, KappaMethod::quadrature_ratio), DomainError);
}

TEST(LimitDensities, MeanderNormalisationAndBoundary) {
    const auto m = meander_density_limit(1.0, {0.5, 0.2}, 1.0);
    EXPECT_GT(m.normalized(), 0.0);
    EXPECT_GT(m.normalization, 0.0);
    const auto again = meander_density_limit(1.0, {0.5, 0.2}, 1.0);
    EXPECT_EQ(again.normalization, m.normalization); // cached
    // u -> 0+ with v > 0: h-bar(1, u, -v) vanishes
    EXPECT_LT(meander_density_limit(1.0, {1e-4, 0.5}, 1.0).normalized(), 1e-2 * m.normalized());
    // the tabulated marginal integrates to the cached constant, which is the
    // measured kappa (the unit normalisation would need it to be 1)
    const auto table = meander_endpoint_table(1.0, 6);
    EXPECT_NEAR(table.mass() / m.normalization, 1.0, 1e-3);
    const auto k = estimate_kappa({{1e-3, 0.0}, {1.25e-4, 0.05}}, 16.0, KappaMethod::quadrature_ratio);
    EXPECT_NEAR(table.mass() / k.value, 1.0, 2e-3);
    EXPECT_NEAR(table.marginal_cdf(0, 1.0), 0.863817, 2e-6); // frozen
    EXPECT_NEAR(table.marginal_cdf(1, 0.0), 0.183503, 2e-6);
}

TEST(LimitDensities, BridgeNonNegative) {
    for (double u : {0.05, 0.2, 0.6})
        for (double v : {-1.0, 0.0, 1.0}) EXPECT_GE(bridge_density_unnormalized(0.5, {u, v}).value, 0.0);
    EXPECT_THROW(bridge_density(1.0, {0.5, 0.0}), DomainError);
    EXPECT_EQ(bridge_density_unnormalized(0.5, {-0.1, 0.0}).value, 0.0);
}

TEST(GridIO, CsvAndJsonRoundTripExactly) {
    std::vector<GridRow> rows = {{1.0, 0.5, 0.0, 0.1, -0.3, 0.1 + 0.2, 1e-17}, {0.25, 1.0 / 3, 2.0 / 7, 5.5, 1e300, 4.9e-324, 0.0}};
    std::stringstream ss;
    write_grid_csv(ss, rows);
    const auto back = read_grid_csv(ss);
    ASSERT_EQ(back.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(back[i].u, rows[i].u);
        EXPECT_EQ(back[i].value, rows[i].value);
        EXPECT_EQ(back[i].y, rows[i].y);
    }
    const auto j = grid_from_json(nlohmann::json::parse(grid_to_json(rows).dump()));
    EXPECT_EQ(j[1].x, rows[1].x);
    EXPECT_EQ(j[0].value, rows[0].value);
}
