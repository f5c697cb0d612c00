// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "kolmo/harness.hpp"

namespace {

struct Criterion {
    int id;
    const char* suite;
    const char* title;
};

constexpr Criterion kCriteria[] = {
    {1, "anchor", "g(0) closed form / hypergeometric / integral"},
    {2, "identities", "h scaling and free-density reversal"},
    {3, "harmonicity", "generator residual and martingale check of h"},
    {4, "routes", "killed density, route A vs route B"},
    {5, "survival", "killed-density mass vs simulated survival"},
    {6, "propbarp", "p-bar / h -> h-bar ladder"},
    {7, "kappa", "kappa consistency across starts and times"},
    {8, "oracles", "rejection meanders vs exact DP"},
    {9, "meander", "walk meander ladder vs limit meander"},
    {10, "bridge", "bridge reversal, collapse and midpoint ladder"},
    {11, "v_transform", "V-transform walk vs h-transform diffusion"},
    {12, "drift_meander", "tilted walk above the parabola vs meander"},
    {13, "v_bounds", "V-hat bounds and harmonicity"},
};

std::string summarize(const kolmo::harness::Reports& r) {
    std::string s;
    for (const auto& t : r) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s%s=%.4g%s%.4g", s.empty() ? "" : "; ", t.name.c_str(), t.statistic,
                      t.pass ? "<=" : ">", t.threshold);
        s += buf;
    }
    return s;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::string config = "configs/acceptance.cfg", out_dir;
    std::vector<int> only;
    unsigned threads = 1;
    app.add_option("--config", config, "config file")->check(CLI::ExistingFile);
    app.add_option("--criterion", only, "criteria to run (default: all)")->check(CLI::Range(1, 13));
    app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));
    app.add_option("--out", out_dir, "directory for JSON reports");
    CLI11_PARSE(app, argc, argv);

    kolmo::harness::Config cfg;
    try {
        cfg = kolmo::harness::Config::load(config);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    }
    kolmo::harness::RunOptions opt;
    opt.threads = threads;
    bool all = true;
    for (const auto& c : kCriteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        kolmo::harness::Stopwatch sw;
        try {
            const auto r = kolmo::harness::run_suite(c.suite, cfg, opt);
            const bool pass = kolmo::harness::all_pass(r);
            all = all && pass;
            std::printf("criterion %2d %s  %-46s %7.1f s  %s\n", c.id, pass ? "PASS" : "FAIL", c.title, sw.seconds(),
                        summarize(r).c_str());
            if (!out_dir.empty()) {
                std::filesystem::create_directories(out_dir);
                std::ofstream(out_dir + "/criterion" + std::to_string(c.id) + ".json")
                    << kolmo::harness::reports_to_json(c.suite, r, cfg).dump(2) << '\n';
            }
        } catch (const std::exception& e) {
            all = false;
            std::printf("criterion %2d FAIL  %-46s %7.1f s  error: %s\n", c.id, c.title, sw.seconds(), e.what());
        }
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
