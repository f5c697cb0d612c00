#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <boost/random/normal_distribution.hpp>
#include <gtest/gtest.h>

#include "kolmo/stats.hpp"

using namespace kolmo;
using namespace kolmo::stats;

namespace {

std::vector<double> uniforms(RngStream& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform();
    return v;
}

std::vector<double> normals(RngStream& rng, std::size_t n, double mu) {
    boost::random::normal_distribution<double> nd(mu, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = nd(rng);
    return v;
}

double phi(double x) { return boost::math::cdf(boost::math::normal(), x); }

} // namespace

TEST(Kolmogorov, LimitLawValues) {
    EXPECT_NEAR(kolmogorov_q(1.3581), 0.05, 2e-4);
    EXPECT_NEAR(kolmogorov_q(1.6276), 0.01, 2e-4);
    EXPECT_EQ(kolmogorov_q(0.0), 1.0);
    EXPECT_LT(kolmogorov_q(5.0), 1e-20);
    const double c = ks_critical(400.0, 0.01);
    EXPECT_NEAR(ks_p_value(c, 400.0), 0.01, 1e-6);
}

TEST(KsDistance, IdenticalAndWeightedSamples) {
    RngStream rng(1, 0);
    const auto xs = uniforms(rng, 300);
    const auto r = ks_distance(EmpiricalDist::one_d(xs), EmpiricalDist::one_d(xs));
    EXPECT_EQ(r.statistic, 0.0);
    EXPECT_TRUE(r.pass);
    // weights act as multiplicities
    const auto w = ks_distance(EmpiricalDist::one_d({0.1, 0.5}, {1, 3}), EmpiricalDist::one_d({0.1, 0.5, 0.5, 0.5}));
    EXPECT_NEAR(w.statistic, 0.0, 1e-15);
    EXPECT_NEAR(EmpiricalDist::one_d({1, 2, 3, 4}, {1, 1, 2, 2}).effective_size(), 3.6, 1e-15);
    const auto one = ks_distance(EmpiricalDist::one_d({0.5}), [](double x) { return x; });
    EXPECT_DOUBLE_EQ(one.statistic, 0.5);
}

TEST(KsDistance, Power) {
    RngStream rng(2, 0);
    const auto a = EmpiricalDist::one_d(normals(rng, 2000, 0.0));
    const auto b = EmpiricalDist::one_d(normals(rng, 2000, 0.5));
    EXPECT_TRUE(ks_distance(a, phi).pass);
    EXPECT_FALSE(ks_distance(b, phi).pass);
    EXPECT_FALSE(ks_distance(a, b).pass);
    EXPECT_LT(*ks_distance(a, b).p_value, 1e-10);
}

TEST(KsDistance, FalseRejectionRate) {
    // 500 null replicates at level 0.01
    RngStream rng(3, 0);
    int one = 0, two = 0;
    for (int r = 0; r < 500; ++r) {
        const auto a = EmpiricalDist::one_d(uniforms(rng, 200));
        const auto b = EmpiricalDist::one_d(uniforms(rng, 150));
        one += !ks_distance(a, [](double x) { return x; }).pass;
        two += !ks_distance(a, b).pass;
    }
    EXPECT_GE(one / 500.0, 0.002);
    EXPECT_LE(one / 500.0, 0.03);
    EXPECT_GE(two / 500.0, 0.002);
    EXPECT_LE(two / 500.0, 0.03);
}

TEST(ChiSquare, NullCalibrationAndPower) {
    const auto g = BinGrid::uniform(0, 1, 5, 0, 1, 5);
    const std::vector<double> probs(25, 0.04);
    RngStream rng(4, 0);
    int rejections = 0;
    for (int r = 0; r < 500; ++r) {
        const auto s = EmpiricalDist::two_d(uniforms(rng, 500), uniforms(rng, 500));
        rejections += !chi_square_2d(s, probs, g).pass;
    }
    EXPECT_GE(rejections / 500.0, 0.002);
    EXPECT_LE(rejections / 500.0, 0.03);

    auto xs = uniforms(rng, 2000), ys = uniforms(rng, 2000);
    for (double& x : xs) x = std::sqrt(x); // density 2x
    const auto r = chi_square_2d(EmpiricalDist::two_d(xs, ys), probs, g);
    EXPECT_FALSE(r.pass);
    EXPECT_GT(r.statistic, r.threshold);
    const auto m = cell_masses([](double x, double) { return 2 * x; }, g);
    EXPECT_TRUE(chi_square_2d(EmpiricalDist::two_d(xs, ys), m, g).pass);
}

TEST(ChiSquare, OutsideCellAndMerging) {
    const auto g = BinGrid::uniform(0, 1, 2, 0, 1, 1);
    // half the mass sits outside the grid
    std::vector<double> xs, ys;
    for (int i = 0; i < 100; ++i) {
        xs.push_back(i % 4 == 0 ? 0.25 : i % 4 == 1 ? 0.75 : 3.0);
        ys.push_back(0.5);
    }
    const auto r = chi_square_2d(EmpiricalDist::two_d(xs, ys), {0.25, 0.25}, g);
    EXPECT_NEAR(r.statistic, 0.0, 1e-12);
    EXPECT_EQ(r.metadata["cells"], 3);
    // expected counts 1.5 and 1.5 merge into a single cell, which leaves nothing to test
    EXPECT_THROW(chi_square_2d(EmpiricalDist::two_d({0.25, 0.75, 0.75}, {0.5, 0.5, 0.5}), {0.5, 0.5}, g), DomainError);
}

TEST(CellMasses, ExactForPolynomials) {
    const auto g = BinGrid::uniform(0, 2, 4, 0, 1, 3);
    const auto m = cell_masses([](double x, double y) { return 0.75 * x * y * y; }, g);
    double s = 0.0;
    for (double v : m) s += v;
    EXPECT_NEAR(s, 0.5, 1e-14); // 0.75 * 2 * 1/3
    EXPECT_NEAR(m[0], 0.75 * (0.25 / 2) * (1.0 / 81), 1e-16);
}

TEST(Stats, DomainErrors) {
    EXPECT_THROW(EmpiricalDist::one_d({1, 2}, {1}), DomainError);
    EXPECT_THROW(EmpiricalDist::one_d({1}, {-1}), DomainError);
    EXPECT_THROW(EmpiricalDist::two_d({1, 2}, {1}), DomainError);
    EXPECT_THROW(ks_distance(EmpiricalDist::one_d({}), [](double x) { return x; }), DomainError);
    EXPECT_THROW(ks_distance(EmpiricalDist::one_d({1}, {0}), [](double x) { return x; }), DomainError);
    BinGrid bad;
    bad.x_edges = {0, 0};
    bad.y_edges = {0, 1};
    EXPECT_THROW(chi_square_2d(EmpiricalDist::two_d({0}, {0}), {1.0}, bad), DomainError);
    EXPECT_THROW(chi_square_2d(EmpiricalDist::one_d({0}), {1.0}, BinGrid::uniform(0, 1, 1, 0, 1, 1)), DomainError);
    EXPECT_THROW(chi_square_2d(EmpiricalDist::two_d({0}, {0}), {0.5, 0.5}, BinGrid::uniform(0, 1, 1, 0, 1, 1)),
                 DomainError);
}

TEST(TestReport, Json) {
    TestReport r;
    r.name = "x";
    r.statistic = 0.5;
    nlohmann::json j = r;
    EXPECT_TRUE(j["p_value"].is_null());
    r.p_value = 0.25;
    j = r;
    EXPECT_EQ(j["p_value"], 0.25);
    EXPECT_EQ(j["name"], "x");
    EXPECT_EQ(j["pass"], false);
}
