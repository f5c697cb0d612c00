// Draws exact bridges of the lattice chain from (1,0) back to (1,0) and prints
// a few of them.
#include <cstdio>

#include "kolmo/conditioning.hpp"

int main() {
    using namespace kolmo;
    const conditioning::BridgeSampler sampler({1, 0}, {1, 0}, walk::StepLaw::rademacher(), 16);
    std::printf("P(Z(16) = (1,0), tau > 16) = %.6Lg\n", sampler.end_mass());
    RngStream rng(3, 0);
    for (int i = 0; i < 3; ++i) {
        const auto path = std::get<walk::ChainPath>(sampler(rng).path);
        for (const State& z : path.states) std::printf("(%g,%g) ", z.t_coord, z.s_coord);
        std::printf("\n");
    }
}
