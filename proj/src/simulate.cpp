#include "decoyforge/simulate.hpp"

#include <cmath>
#include <stdexcept>

namespace decoyforge {

namespace {

// splitmix64; portable and cheap to seed per episode.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

bool run_episode(const Scenario& scenario, const Alteration& alt, std::uint64_t horizon,
                 SplitMix64& rng) {
    const Pomdp& m = scenario.pomdp;
    const Fsc& c = scenario.fsc;
    const Index nO = m.num_observations();
    Index s = m.initial_state;
    Index n = c.initial_node;
    for (std::uint64_t step = 0; step <= horizon; ++step) {
        if (scenario.is_decoy(s)) return true;
        if (step == horizon) break;
        const Index perceived = alt.image[m.obs_of[s]];
        const Index a = c.action(n, perceived, nO);
        const Index next = c.next(n, perceived, nO);
        const SparseDist& row = m.row(s, a);
        // A self-loop that keeps the memory node can never progress.
        if (next == n && row.entries.size() == 1 && row.entries[0].first == s) return false;
        double u = rng.uniform();
        Index target = row.entries.back().first;
        for (const auto& [succ, p] : row.entries) {
            if (u < p) {
                target = succ;
                break;
            }
            u -= p;
        }
        s = target;
        n = next;
    }
    return false;
}

SimResult finish(std::uint64_t successes, std::uint64_t episodes) {
    SimResult result;
    result.successes = successes;
    result.episodes = episodes;
    result.estimate = static_cast<double>(successes) / static_cast<double>(episodes);
    result.half_width_95 =
        1.96 * std::sqrt(result.estimate * (1.0 - result.estimate) / static_cast<double>(episodes));
    return result;
}

void check_args(std::uint64_t episodes, std::uint64_t horizon) {
    if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
}

constexpr std::uint64_t kEpisodeStride = 0x9e3779b97f4a7c15ull;

} // namespace

SimResult simulate(const Scenario& scenario, const Alteration& alt, std::uint64_t episodes,
                   std::uint64_t horizon, std::uint64_t seed) {
    check_args(episodes, horizon);
    std::uint64_t successes = 0;
#pragma omp parallel for schedule(static) reduction(+ : successes)
    for (std::int64_t e = 0; e < static_cast<std::int64_t>(episodes); ++e) {
        SplitMix64 rng(seed + kEpisodeStride * static_cast<std::uint64_t>(e + 1));
        if (run_episode(scenario, alt, horizon, rng)) ++successes;
    }
    return finish(successes, episodes);
}

SimResult simulate_serial(const Scenario& scenario, const Alteration& alt, std::uint64_t episodes,
                          std::uint64_t horizon, std::uint64_t seed) {
    check_args(episodes, horizon);
    std::uint64_t successes = 0;
    for (std::uint64_t e = 0; e < episodes; ++e) {
        SplitMix64 rng(seed + kEpisodeStride * (e + 1));
        if (run_episode(scenario, alt, horizon, rng)) ++successes;
    }
    return finish(successes, episodes);
}

std::uint64_t default_sim_horizon(const Scenario& scenario) {
    const std::uint64_t product_size = static_cast<std::uint64_t>(scenario.pomdp.num_states()) *
                                       static_cast<std::uint64_t>(scenario.fsc.num_nodes());
    return 100 * std::max<std::uint64_t>(product_size, 1);
}

} // namespace decoyforge
