// Samples Rademacher meanders of length n by rejection and compares the
// scaled endpoint marginals at a few points with the limit meander density.
#include <cmath>
#include <cstdio>

#include "kolmo/conditioning.hpp"
#include "kolmo/density.hpp"

int main() {
    using namespace kolmo;
    const std::size_t n = 256, count = 2000;
    RngStream rng(7, 0);
    const auto e = conditioning::meander_walk_endpoints({1, 0}, walk::StepLaw::rademacher(), n, count, rng, 100'000'000);
    const auto table = density::meander_endpoint_table(1.0, 6);
    const double nn = static_cast<double>(n);
    std::printf("acceptance %.4g over %zu attempts\n", e.acceptance_rate(), e.attempts);
    std::printf("%5s %10s %10s %10s %10s\n", "x", "walk Fu", "limit Fu", "walk Fv", "limit Fv");
    for (double x : {0.25, 0.5, 1.0}) {
        double fu = 0.0, fv = 0.0;
        for (const State& z : e.ends) {
            fu += (z.t_coord / (nn * std::sqrt(nn)) <= x) / double(count);
            fv += (z.s_coord / std::sqrt(nn) <= x - 0.5) / double(count);
        }
        std::printf("%5.2f %10.4f %10.4f %10.4f %10.4f   (v at x - 0.5)\n", x, fu, table.marginal_cdf(0, x), fv,
                    table.marginal_cdf(1, x - 0.5));
    }
}
