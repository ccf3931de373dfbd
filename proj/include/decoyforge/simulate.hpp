#pragma once

#include <cstdint>

#include "decoyforge/model.hpp"

namespace decoyforge {

struct SimResult {
    double estimate = 0.0;
    double half_width_95 = 0.0;
    std::uint64_t successes = 0;
    std::uint64_t episodes = 0;
};

/// Monte Carlo estimate of the decoy-reach probability by executing the
/// POMDP/FSC semantics under the alteration. Each episode draws from its
/// own generator seeded by (seed, episode index), so results are identical
/// for any thread count. OpenMP-parallel over episodes.
SimResult simulate(const Scenario& scenario, const Alteration& alt, std::uint64_t episodes,
                   std::uint64_t horizon, std::uint64_t seed);

/// Serial reference implementation; must produce the same successes count
/// as simulate() for identical arguments.
SimResult simulate_serial(const Scenario& scenario, const Alteration& alt, std::uint64_t episodes,
                          std::uint64_t horizon, std::uint64_t seed);

std::uint64_t default_sim_horizon(const Scenario& scenario);

} // namespace decoyforge
