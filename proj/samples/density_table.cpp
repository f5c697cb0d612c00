// Prints h, the killed density by both routes, and h-bar on a small grid.
#include <cstdio>

#include "kolmo/density.hpp"

int main() {
    using namespace kolmo;
    const State start{0.5, 0.0};
    const double t = 1.0;
    std::printf("%6s %6s %14s %14s %14s %14s\n", "u", "v", "h(u,v)", "pbar route A", "pbar route B", "hbar(1,u,v)");
    for (double u : {0.2, 0.5, 1.0})
        for (double v : {-1.0, 0.0, 1.0}) {
            const DensityPoint pt{start, {u, v}, t};
            const double a = density::p_killed_route_a(pt).value;
            const double b = density::p_killed_route_b(pt).total.value;
            const double hb = density::h_bar(t, u, v).value;
            std::printf("%6.2f %6.2f %14.8g %14.8g %14.8g %14.8g\n", u, v, specfun::h_hypergeometric({u, v}), a, b, hb);
        }
    std::printf("P(tau > 1) from (0.5, 0): %.10f\n", density::survival_probability(start, t).value);
}
