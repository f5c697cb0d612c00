// kolmo: densities, simulation, conditioning and verification suites.
//
// Exit codes: 0 ok, 1 verification failure, 2 usage or validation error,
// 3 numerical non-convergence or infrastructure failure, 4 sampler budget
// exhausted.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "kolmo/conditioning.hpp"
#include "kolmo/density.hpp"
#include "kolmo/harness.hpp"

namespace {

using namespace kolmo;
using nlohmann::json;

enum Exit { kOk = 0, kVerifyFailed = 1, kUsage = 2, kNumerical = 3, kBudget = 4 };

struct Globals {
    std::uint64_t seed = 1;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    std::string out;
    std::string format = "csv";
};

/// Thrown for quadrature that did not converge; carries the failing region.
struct NonConvergence : NumericalFailure {
    using NumericalFailure::NumericalFailure;
};

/// Writes `out` via a temporary file and a rename, so readers never see a
/// partial file.
void write_atomic(const std::string& path, const std::function<void(std::ostream&)>& body) {
    if (path.empty()) throw DomainError("--out is required for this command");
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + tmp);
        body(os);
        if (!os) throw std::runtime_error("write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

State to_state(const std::vector<double>& v, const char* what) {
    if (v.size() != 2) throw DomainError(std::string(what) + " needs two numbers");
    return {v[0], v[1]};
}

walk::StepLaw law_from(const std::string& name) {
    if (name == "rademacher") return walk::StepLaw::rademacher();
    if (name == "gaussian") return walk::StepLaw::gaussian();
    throw DomainError("unknown law '" + name + "' (rademacher, gaussian)");
}

double parse_number(const std::string& s) {
    harness::Config c;
    c.set("v", s);
    return c.get_double("v");
}

// ------------------------------------------------------------ density

struct DensityArgs {
    std::string kind = "h";
    std::string route = "a";
    std::vector<double> at, grid, start{0.5, 0.0};
    double t = 1.0, horizon = 1.0, rel_tol = 1e-7;
};

int cmd_density(const DensityArgs& a, const Globals& g, const json& resolved) {
    static const std::vector<std::string> kinds = {"pfree", "pbar", "h", "hbar", "meander", "bridge"};
    if (std::find(kinds.begin(), kinds.end(), a.kind) == kinds.end()) throw DomainError("unknown --kind " + a.kind);
    if (a.at.empty() == a.grid.empty()) throw DomainError("give exactly one of --at u v or --grid u0 u1 nu v0 v1 nv");
    if (!a.grid.empty()) {
        if (a.grid.size() != 6) throw DomainError("--grid needs u0 u1 nu v0 v1 nv");
        if (!(a.grid[1] > a.grid[0]) || !(a.grid[4] > a.grid[3])) throw DomainError("--grid ranges must increase");
        if (a.grid[2] < 1 || a.grid[5] < 1 || a.grid[2] != std::floor(a.grid[2]) || a.grid[5] != std::floor(a.grid[5]))
            throw DomainError("--grid counts must be positive integers");
        if (g.out.empty()) throw DomainError("--grid needs --out");
    }
    if (a.route != "a" && a.route != "b" && a.route != "both") throw DomainError("--route is a, b or both");
    if (!(a.rel_tol > 0.0)) throw DomainError("--rel-tol must be positive");
    const State z = to_state(a.start, "--start");
    const density::DensityTolerance tol{a.rel_tol, density::DensityTolerance{}.abs, 200};

    std::vector<State> pts;
    if (!a.at.empty()) {
        pts.push_back(to_state(a.at, "--at"));
    } else {
        const auto nu = static_cast<std::size_t>(a.grid[2]), nv = static_cast<std::size_t>(a.grid[5]);
        for (std::size_t i = 0; i < nu; ++i)
            for (std::size_t j = 0; j < nv; ++j)
                pts.push_back({nu == 1 ? a.grid[0] : a.grid[0] + (a.grid[1] - a.grid[0]) * i / (nu - 1.0),
                               nv == 1 ? a.grid[3] : a.grid[3] + (a.grid[4] - a.grid[3]) * j / (nv - 1.0)});
    }
    // validate the whole request before any evaluation
    for (const State& w : pts) {
        if ((a.kind == "pbar") && !(w.t_coord > 0.0 && z.t_coord > 0.0))
            throw DomainError("pbar needs positive first coordinates at start and target");
        if (a.kind == "h" && !(w.t_coord > 0.0)) throw DomainError("h needs u > 0");
    }
    if (a.kind != "h") TimeHorizon check(a.t);

    auto require = [](const density::QuadResult& r, State w) {
        if (!r.converged)
            throw NonConvergence("no convergence at (u, v) = (" + std::to_string(w.t_coord) + ", " +
                                 std::to_string(w.s_coord) + "), axis " + std::to_string(r.failed_axis));
        return r;
    };
    struct Row {
        State w;
        double value, err, value_b = 0.0, err_b = 0.0;
    };
    std::vector<Row> rows;
    for (const State& w : pts) {
        Row r{w, 0.0, 0.0};
        const DensityPoint pt{z, w, a.t};
        if (a.kind == "pfree") {
            r.value = density::p_free(pt);
        } else if (a.kind == "pbar") {
            if (a.route != "b") {
                const auto ra = require(density::p_killed_route_a(pt, tol), w);
                r.value = ra.value;
                r.err = ra.error_estimate;
            }
            if (a.route != "a") {
                const auto rb = require(density::p_killed_route_b(pt, tol).total, w);
                (a.route == "both" ? r.value_b : r.value) = rb.value;
                (a.route == "both" ? r.err_b : r.err) = rb.error_estimate;
            }
        } else if (a.kind == "h") {
            r.value = specfun::h_hypergeometric(w);
            const auto integral = require(density::h_integral(w, tol), w);
            r.value_b = integral.value;
            r.err_b = integral.error_estimate;
        } else if (a.kind == "hbar") {
            const auto hb = require(density::h_bar(a.t, w.t_coord, w.s_coord, tol), w);
            r.value = hb.value;
            r.err = hb.error_estimate;
        } else if (a.kind == "meander") {
            const auto m = density::meander_density_limit(a.t, w, a.horizon);
            r.value = m.normalized();
            r.err = m.error / m.normalization + std::abs(r.value) * m.normalization_error / m.normalization;
        } else {
            const auto m = density::bridge_density(a.t, w);
            r.value = m.normalized();
            r.err = m.error / m.normalization + std::abs(r.value) * m.normalization_error / m.normalization;
        }
        rows.push_back(r);
    }
    const bool two = a.kind == "h" || (a.kind == "pbar" && a.route == "both");
    const char* second = a.kind == "h" ? "integral" : "route_b";
    if (g.out.empty()) {
        for (const Row& r : rows) {
            std::printf("%s(%g, %g) = %.15g", a.kind.c_str(), r.w.t_coord, r.w.s_coord, r.value);
            if (r.err > 0.0) std::printf(" +- %.2g", r.err);
            if (two) std::printf("   %s = %.15g +- %.2g", second, r.value_b, r.err_b);
            std::printf("\n");
        }
        if (a.kind == "h" && rows.front().w.s_coord == 0.0)
            std::printf("g(0) closed form = %.15g, times u^{1/6} = %.15g\n", specfun::g_at_zero(),
                        specfun::g_at_zero() * std::pow(rows.front().w.t_coord, 1.0 / 6.0));
        return kOk;
    }
    write_atomic(g.out, [&](std::ostream& os) {
        if (g.format == "json") {
            json arr = json::array();
            for (const Row& r : rows) {
                json e = {{"t", a.t}, {"x", z.t_coord}, {"y", z.s_coord}, {"u", r.w.t_coord}, {"v", r.w.s_coord},
                          {"value", r.value}, {"err", r.err}};
                if (two) {
                    e[second] = r.value_b;
                    e[std::string(second) + "_err"] = r.err_b;
                }
                arr.push_back(e);
            }
            os << json{{"kind", a.kind}, {"config", resolved}, {"rows", arr}}.dump(1) << '\n';
        } else if (two) {
            os << "t,x,y,u,v,value,err," << second << ',' << second << "_err\n";
            os.precision(17);
            for (const Row& r : rows)
                os << a.t << ',' << z.t_coord << ',' << z.s_coord << ',' << r.w.t_coord << ',' << r.w.s_coord << ','
                   << r.value << ',' << r.err << ',' << r.value_b << ',' << r.err_b << '\n';
        } else {
            std::vector<density::GridRow> gr;
            for (const Row& r : rows) gr.push_back({a.t, z.t_coord, z.s_coord, r.w.t_coord, r.w.s_coord, r.value, r.err});
            density::write_grid_csv(os, gr);
        }
    });
    std::printf("wrote %zu %s values to %s\n", rows.size(), a.kind.c_str(), g.out.c_str());
    return kOk;
}

// ------------------------------------------------------------ simulate

struct SimulateArgs {
    std::string what;
    std::string law = "rademacher";
    std::vector<double> start{1.0, 0.0}, end;
    std::string n_text = "64", samples_text = "1000", budget_text = "1e8", dt_text = "2^-10";
    double horizon = 1.0;
};

std::size_t as_count(const std::string& s, const char* what) {
    const double d = parse_number(s);
    if (!(d >= 1.0) || d != std::floor(d)) throw DomainError(std::string(what) + " must be a positive integer");
    return static_cast<std::size_t>(d);
}

int cmd_simulate(const SimulateArgs& a, const Globals& g, const json& resolved) {
    const State start = to_state(a.start, "--start");
    const std::size_t samples = as_count(a.samples_text, "--samples");
    const std::size_t budget = as_count(a.budget_text, "--budget");
    RngStream rng(g.seed, 0);
    if (a.what == "meander") {
        const std::size_t n = as_count(a.n_text, "--n");
        const auto law = law_from(a.law);
        if (!(start.t_coord > 0.0)) throw DomainError("--start needs T > 0");
        const std::size_t shards = 16;
        std::vector<conditioning::Endpoints> parts(shards);
        harness::for_shards(shards, g.threads, [&](std::size_t s) {
            RngStream r = harness::shard_stream(g.seed, 1, s);
            parts[s] = conditioning::meander_walk_endpoints(start, law, n, harness::shard_count(samples, shards, s), r,
                                                            budget);
        });
        std::size_t attempts = 0;
        for (const auto& p : parts) attempts += p.attempts;
        const double nn = static_cast<double>(n), sd = std::sqrt(law.variance());
        write_atomic(g.out, [&](std::ostream& os) {
            os.precision(17);
            if (g.format == "json") {
                json e = json::array();
                for (const auto& p : parts)
                    for (const State& z : p.ends) e.push_back({z.t_coord, z.s_coord});
                os << json{{"config", resolved}, {"attempts", attempts}, {"ends", e}}.dump() << '\n';
                return;
            }
            os << "T,S,u,v\n";
            for (const auto& p : parts)
                for (const State& z : p.ends)
                    os << z.t_coord << ',' << z.s_coord << ',' << z.t_coord / (sd * nn * std::sqrt(nn)) << ','
                       << z.s_coord / (sd * std::sqrt(nn)) << '\n';
        });
        std::printf("%zu meanders of length %zu, acceptance %.6g over %zu attempts\n", samples, n,
                    static_cast<double>(samples) / attempts, attempts);
        return kOk;
    }
    if (a.what == "bridge") {
        const std::size_t n = as_count(a.n_text, "--n");
        const State end = to_state(a.end, "--end");
        const conditioning::BridgeSampler sampler(start, end, walk::StepLaw::rademacher(), n);
        std::vector<walk::ChainPath> paths;
        for (std::size_t i = 0; i < samples; ++i) paths.push_back(std::get<walk::ChainPath>(sampler(rng).path));
        write_atomic(g.out, [&](std::ostream& os) {
            if (g.format == "json") {
                json arr = json::array();
                for (const auto& p : paths) {
                    json s = json::array();
                    for (const State& z : p.states) s.push_back({z.t_coord, z.s_coord});
                    arr.push_back(s);
                }
                os << json{{"config", resolved}, {"end_probability", static_cast<double>(sampler.end_mass())},
                           {"paths", arr}}
                          .dump()
                   << '\n';
                return;
            }
            os << "sample,k,T,S\n";
            for (std::size_t i = 0; i < paths.size(); ++i)
                for (std::size_t k = 0; k < paths[i].states.size(); ++k)
                    os << i << ',' << k << ',' << paths[i].states[k].t_coord << ',' << paths[i].states[k].s_coord << '\n';
        });
        std::printf("%zu bridges of length %zu; P(Z(n) = end, tau > n) = %.6Lg\n", samples, n, sampler.end_mass());
        return kOk;
    }
    if (a.what == "diffusion") {
        if (!(start.t_coord > 0.0)) throw DomainError("--start needs U > 0");
        const double dt = parse_number(a.dt_text);
        const std::size_t steps = diffusion::grid_steps(a.horizon, dt);
        const std::size_t shards = 16;
        std::vector<std::size_t> alive(shards);
        harness::for_shards(shards, g.threads, [&](std::size_t s) {
            RngStream r = harness::shard_stream(g.seed, 2, s);
            diffusion::Stepper st(dt);
            for (std::size_t i = harness::shard_count(samples, shards, s); i > 0; --i)
                alive[s] += diffusion::run_survival(start, steps, st, r, 1).survived_refined;
        });
        std::size_t hits = 0;
        for (auto h : alive) hits += h;
        const auto est = diffusion::binomial_estimate(hits, samples);
        std::printf("P(tau > %g) = %.6g +- %.2g (%zu paths, dt = %g)\n", a.horizon, est.value, est.std_error, samples,
                    dt);
        if (!g.out.empty())
            write_atomic(g.out, [&](std::ostream& os) {
                if (g.format == "json")
                    os << json{{"config", resolved}, {"survival", est.value}, {"std_error", est.std_error}}.dump(1)
                       << '\n';
                else
                    os << "horizon,dt,paths,survival,stderr\n"
                       << a.horizon << ',' << dt << ',' << samples << ',' << est.value << ',' << est.std_error << '\n';
            });
        return kOk;
    }
    throw DomainError("simulate: unknown target '" + a.what + "' (meander, bridge, diffusion)");
}

// ------------------------------------------------------------ verify, estimates

int cmd_verify(const std::string& suite, const std::string& config, const Globals& g, bool seed_given) {
    const auto& names = harness::suites();
    if (!names.count(suite)) {
        std::fprintf(stderr, "unknown suite '%s'; available:", suite.c_str());
        for (const auto& [k, v] : names) std::fprintf(stderr, " %s", k.c_str());
        std::fprintf(stderr, "\n");
        return kUsage;
    }
    harness::Config cfg = harness::Config::load(config);
    if (seed_given) cfg.set("seed", std::to_string(g.seed));
    harness::RunOptions o;
    o.threads = g.threads;
    const auto reports = harness::run_suite(suite, cfg, o);
    const std::string out = g.out.empty() ? suite + "_report.json" : g.out;
    write_atomic(out, [&](std::ostream& os) { os << harness::reports_to_json(suite, reports, cfg).dump(2) << '\n'; });
    for (const auto& r : reports)
        std::printf("%-4s %-40s %.6g (threshold %.6g)\n", r.pass ? "ok" : "FAIL", r.name.c_str(), r.statistic,
                    r.threshold);
    return harness::all_pass(reports) ? kOk : kVerifyFailed;
}

int cmd_estimate_v(const std::vector<double>& start_v, const std::string& law_name,
                   const std::vector<std::string>& n_text, const std::string& method, const std::string& paths,
                   const Globals& g, const json& resolved) {
    const State z = to_state(start_v, "--start");
    std::vector<std::size_t> ns;
    for (const auto& s : n_text) ns.push_back(as_count(s, "--n"));
    if (method != "dp" && method != "mc") throw DomainError("--method is dp or mc");
    conditioning::VOptions o;
    o.paths = as_count(paths, "--paths");
    o.seed = g.seed;
    const auto est = conditioning::estimate_v(z, law_from(law_name), ns,
                                              method == "dp" ? conditioning::VMethod::dp : conditioning::VMethod::mc, o);
    conditioning::VTable table;
    for (const auto& e : est) {
        std::printf("V_%zu(%g, %g) = %.10g +- %.2g%s\n", e.n, z.t_coord, z.s_coord, e.value, e.std_error,
                    e.fallback ? "  (dp overflow, monte carlo used)" : "");
        table.set(e);
    }
    table.metadata() = {{"law", law_name}, {"seed", g.seed}, {"method", method}, {"config", resolved}};
    if (!g.out.empty()) {
        write_atomic(g.out, [&](std::ostream& os) {
            if (g.format == "json") {
                json arr = json::array();
                for (const auto& e : est) arr.push_back({{"n", e.n}, {"value", e.value}, {"stderr", e.std_error},
                                                         {"fallback", e.fallback}});
                os << json{{"start", {z.t_coord, z.s_coord}}, {"estimates", arr}, {"meta", table.metadata()}}.dump(1)
                   << '\n';
            } else {
                // one row per state: the largest n is kept
                table.write_csv(os);
            }
        });
        if (g.format != "json")
            write_atomic(g.out + ".json", [&](std::ostream& os) { os << table.metadata().dump(1) << '\n'; });
    }
    return kOk;
}

int cmd_estimate_kappa(const std::vector<double>& starts_v, const std::vector<double>& times,
                       const std::string& method, const std::string& paths, const Globals& g, const json& resolved) {
    if (starts_v.empty() || starts_v.size() % 2) throw DomainError("--starts needs coordinate pairs");
    std::vector<State> starts;
    for (std::size_t i = 0; i < starts_v.size(); i += 2) starts.push_back({starts_v[i], starts_v[i + 1]});
    if (method != "quadrature" && method != "mc") throw DomainError("--method is quadrature or mc");
    density::SurvivalOptions o;
    o.seed = g.seed;
    o.paths = as_count(paths, "--paths");
    json arr = json::array();
    for (double t : times) {
        const auto k = density::estimate_kappa(starts, t,
                                               method == "mc" ? density::KappaMethod::monte_carlo
                                                              : density::KappaMethod::quadrature_ratio,
                                               o);
        std::printf("t = %g: kappa = %.6g +- %.2g (spread %.2g%s)\n", t, k.value, k.std_error, k.spread,
                    k.flagged ? ", flagged" : "");
        arr.push_back({{"t", t}, {"kappa", k.value}, {"std_error", k.std_error}, {"ratios", k.ratios},
                       {"ratio_errors", k.ratio_errors}, {"spread", k.spread}, {"flagged", k.flagged}});
    }
    if (!g.out.empty())
        write_atomic(g.out, [&](std::ostream& os) {
            if (g.format == "json") {
                os << json{{"config", resolved}, {"estimates", arr}}.dump(1) << '\n';
                return;
            }
            os << "t,kappa,stderr,spread\n";
            os.precision(17);
            for (const auto& e : arr)
                os << e["t"].get<double>() << ',' << e["kappa"].get<double>() << ',' << e["std_error"].get<double>()
                   << ',' << e["spread"].get<double>() << '\n';
        });
    return kOk;
}

/// Every option after defaults are applied, as written by CLI11's config
/// exporter, keyed by "subcommand.option".
json resolved_options(const CLI::App& app) {
    json j = json::object();
    std::istringstream is(app.config_to_str(true, false));
    std::string line, section;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line.front() == '[') {
            section = line.substr(1, line.find(']') - 1) + ".";
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        j[section + line.substr(0, eq)] = line.substr(eq + 1);
    }
    return j;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kolmogorov diffusion and integrated random walks"};
    app.require_subcommand(1);
    Globals g;
    auto* seed_opt = app.add_option("--seed", g.seed, "master seed")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads")->check(CLI::Range(1u, 4096u))->capture_default_str();
    app.add_option("--out", g.out, "output file");
    app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

    DensityArgs da;
    auto* density = app.add_subcommand("density", "evaluate densities at a point or on a grid");
    density->add_option("--kind", da.kind, "pfree, pbar, h, hbar, meander, bridge")->capture_default_str();
    density->add_option("--route", da.route, "pbar route: a, b or both")->capture_default_str();
    density->add_option("--at", da.at, "single target u v")->expected(2);
    density->add_option("--grid", da.grid, "u0 u1 nu v0 v1 nv")->expected(6);
    density->add_option("--start", da.start, "start x y")->expected(2);
    density->add_option("--t", da.t, "time")->capture_default_str();
    density->add_option("--horizon", da.horizon, "meander length")->capture_default_str();
    density->add_option("--rel-tol", da.rel_tol, "quadrature relative tolerance")->capture_default_str();

    SimulateArgs sa;
    auto* simulate = app.add_subcommand("simulate", "simulate meanders, bridges or the killed diffusion");
    simulate->add_option("what", sa.what, "meander, bridge or diffusion")->required();
    simulate->add_option("--law", sa.law, "step law")->capture_default_str();
    simulate->add_option("--start", sa.start, "start state")->expected(2);
    simulate->add_option("--end", sa.end, "bridge end state")->expected(2);
    simulate->add_option("--n", sa.n_text, "walk length")->capture_default_str();
    simulate->add_option("--samples", sa.samples_text, "samples or paths")->capture_default_str();
    simulate->add_option("--budget", sa.budget_text, "attempt budget per shard")->capture_default_str();
    simulate->add_option("--dt", sa.dt_text, "diffusion grid step")->capture_default_str();
    simulate->add_option("--horizon", sa.horizon, "diffusion horizon")->capture_default_str();

    std::string suite, config = "configs/acceptance.cfg";
    auto* verify = app.add_subcommand("verify", "run a verification suite");
    verify->add_option("suite", suite, "suite name")->required();
    verify->add_option("--config", config, "config file")->capture_default_str();

    std::vector<double> v_start{1.0, 0.0};
    std::string v_law = "rademacher", v_method = "dp", v_paths = "1e5";
    std::vector<std::string> v_n{"16"};
    auto* estv = app.add_subcommand("estimate-v", "estimate V_n(z) = E_z[h(Z(n)); tau > n]");
    estv->add_option("--start", v_start, "lattice start")->expected(2);
    estv->add_option("--law", v_law, "step law")->capture_default_str();
    estv->add_option("--n", v_n, "horizons")->expected(1, 64);
    estv->add_option("--method", v_method, "dp or mc")->capture_default_str();
    estv->add_option("--paths", v_paths, "Monte Carlo paths")->capture_default_str();

    std::vector<double> k_starts{1e-3, 0.0, 1.25e-4, 0.05}, k_times{1.0};
    std::string k_method = "quadrature", k_paths = "1e5";
    auto* estk = app.add_subcommand("estimate-kappa", "estimate kappa from survival ratios");
    estk->add_option("--starts", k_starts, "start pairs");
    estk->add_option("--t", k_times, "times");
    estk->add_option("--method", k_method, "quadrature or mc")->capture_default_str();
    estk->add_option("--paths", k_paths, "Monte Carlo paths")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }
    const json resolved = resolved_options(app);
    try {
        if (density->parsed()) return cmd_density(da, g, resolved);
        if (simulate->parsed()) return cmd_simulate(sa, g, resolved);
        if (verify->parsed()) return cmd_verify(suite, config, g, seed_opt->count() > 0);
        if (estv->parsed()) return cmd_estimate_v(v_start, v_law, v_n, v_method, v_paths, g, resolved);
        if (estk->parsed()) return cmd_estimate_kappa(k_starts, k_times, k_method, k_paths, g, resolved);
    } catch (const conditioning::BudgetExhausted& e) {
        std::fprintf(stderr, "budget exhausted: %s\n", e.what());
        return kBudget;
    } catch (const NumericalFailure& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kNumerical;
    } catch (const DomainError& e) {
        std::fprintf(stderr, "invalid input: %s\n", e.what());
        return kUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kNumerical;
    }
    return kUsage;
}
