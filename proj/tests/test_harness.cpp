#include <atomic>
#include <sstream>

#include <gtest/gtest.h>

#include "kolmo/harness.hpp"

using namespace kolmo;
using namespace kolmo::harness;

namespace {

Config small_config() {
    std::istringstream is(R"(
seed = 7
shards = 4
anchor.y_probe = 1e-6
anchor.tolerance = 1e-5
identities.cases = 50
identities.h_tolerance = 1e-12
identities.p_tolerance = 1e-14
identities.runtime_limit = 60
oracles.start = 1 0
oracles.accepted = 20000
oracles.budget = 1e7
oracles.tv_threshold = 0.05
oracles.joint_n = 4
oracles.marginal_n = 8
)");
    return Config::parse(is, "small");
}

} // namespace

TEST(Config, ParsesValuesListsAndComments) {
    std::istringstream is("# header\n a = 3   # trailing\nb=2^-12\n\nlist = 1, 2 3,4\nstates = 1 0, 0.5 -2\nflag = true\n");
    const Config c = Config::parse(is);
    EXPECT_EQ(c.get_size("a"), 3u);
    EXPECT_EQ(c.get_double("b"), std::ldexp(1.0, -12));
    EXPECT_EQ(c.get_doubles("list"), (std::vector<double>{1, 2, 3, 4}));
    EXPECT_EQ(c.get_sizes("list"), (std::vector<std::size_t>{1, 2, 3, 4}));
    const auto st = c.get_states("states");
    ASSERT_EQ(st.size(), 2u);
    EXPECT_EQ(st[1], (State{0.5, -2}));
    EXPECT_TRUE(c.get_bool("flag"));
    EXPECT_TRUE(c.has("a"));
    EXPECT_FALSE(c.has("header"));
    EXPECT_EQ(c.to_json()["b"], "2^-12");
}

TEST(Config, Errors) {
    std::istringstream bad("key value\n");
    EXPECT_THROW(Config::parse(bad), ConfigError);
    std::istringstream empty_key(" = 3\n");
    EXPECT_THROW(Config::parse(empty_key), ConfigError);
    Config c;
    c.set("x", "abc");
    c.set("frac", "1.5");
    c.set("odd", "1 2 3");
    EXPECT_THROW(c.get_double("x"), ConfigError);
    EXPECT_THROW(c.get_size("frac"), ConfigError);
    EXPECT_THROW(c.get_string("missing"), ConfigError);
    EXPECT_THROW(c.get_states("odd"), ConfigError);
    EXPECT_THROW(Config::load("/nonexistent/file.cfg"), ConfigError);
    EXPECT_THROW(detail::law_by_name("cauchy"), ConfigError);
}

TEST(Shards, CountsAndStreams) {
    std::size_t total = 0;
    for (std::size_t s = 0; s < 7; ++s) total += shard_count(100, 7, s);
    EXPECT_EQ(total, 100u);
    EXPECT_EQ(shard_count(100, 7, 0), 15u);
    EXPECT_EQ(shard_count(100, 7, 6), 14u);
    RngStream a = shard_stream(5, 1, 3), b = shard_stream(5, 1, 3), c = shard_stream(5, 1, 4);
    const auto x = a(), y = b(), z = c();
    EXPECT_EQ(x, y);
    EXPECT_NE(x, z);
}

TEST(Shards, ResultsIndependentOfThreadCount) {
    auto run = [](unsigned threads) {
        std::vector<double> out(9);
        for_shards(out.size(), threads, [&](std::size_t s) {
            RngStream r = shard_stream(11, 2, s);
            double acc = 0.0;
            for (int i = 0; i < 1000; ++i) acc += r.uniform();
            out[s] = acc;
        });
        return out;
    };
    EXPECT_EQ(run(1), run(3));
    EXPECT_EQ(run(1), run(16));
    std::atomic<int> calls{0};
    EXPECT_THROW(for_shards(5, 2,
                            [&](std::size_t s) {
                                ++calls;
                                if (s == 2) throw DomainError("boom");
                            }),
                 DomainError);
}

TEST(Suites, FastSuitesOnSmallConfig) {
    const Config c = small_config();
    for (const char* name : {"anchor", "identities", "oracles"}) {
        const Reports r = run_suite(name, c);
        ASSERT_FALSE(r.empty()) << name;
        EXPECT_TRUE(all_pass(r)) << name << ": " << nlohmann::json(r).dump();
        for (const auto& t : r) EXPECT_EQ(t.metadata["seed"], 7) << name;
    }
    const Reports id = run_suite("identities", c);
    EXPECT_EQ(id.back().name, "identities.runtime_seconds");
}

TEST(Suites, SeedOverrideAndThreads) {
    const Config c = small_config();
    const Reports a = run_suite("oracles", c, {0, true, 1});
    const Reports b = run_suite("oracles", c, {0, true, 3});
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].statistic, b[i].statistic) << a[i].name;
    const Reports d = run_suite("oracles", c, {99, false, 1});
    EXPECT_EQ(d.front().metadata["seed"], 99);
    EXPECT_EQ(d[0].statistic, 0.0); // exact DP check, seed-free
    EXPECT_EQ(d[1].name, "oracles.n4.joint_tv");
    EXPECT_NE(d[1].statistic, a[1].statistic);
}

TEST(Suites, UnknownNames) {
    const Config c = small_config();
    EXPECT_THROW(run_suite("nope", c), ConfigError);
    EXPECT_THROW(theorem_suite("anchor", c), ConfigError);
    for (const auto& n : theorem_suite_names()) EXPECT_TRUE(suites().count(n)) << n;
    EXPECT_EQ(suites().size(), 15u);
}

TEST(Reports, JsonSchemaAndHelpers) {
    const Reports r = {at_most("a", 1.0, 2.0), decreasing("b", {3, 2, 1}), decreasing("c", {1, 2, 1.5})};
    EXPECT_TRUE(r[0].pass);
    EXPECT_TRUE(r[1].pass);
    EXPECT_FALSE(r[2].pass);
    EXPECT_EQ(r[2].statistic, 1.0);
    EXPECT_FALSE(all_pass(r));
    const auto j = reports_to_json("demo", r, small_config());
    EXPECT_EQ(j["schema_version"], 1);
    EXPECT_EQ(j["suite"], "demo");
    EXPECT_EQ(j["pass"], false);
    EXPECT_EQ(j["reports"].size(), 3u);
    EXPECT_EQ(j["config"]["seed"], "7");
    for (const auto& e : j["reports"])
        for (const char* k : {"name", "statistic", "threshold", "p_value", "pass", "metadata"}) EXPECT_TRUE(e.contains(k));
}
