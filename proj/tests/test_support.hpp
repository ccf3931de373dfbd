#pragma once

// Shared test fixtures: seeded random problem instances, a dynamic-
// programming 0/1 knapsack decision oracle, and enumeration helpers. All
// generators are deterministic functions of their seed.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "decoyforge/model.hpp"

namespace decoyforge::testsupport {

inline Scenario random_scenario(std::uint32_t seed) {
    std::mt19937 rng(seed);
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    const Index nS = pick(2, 6);
    const Index nA = pick(2, 3);
    const Index nO = pick(2, 4);
    const Index nN = pick(1, 3);

    Scenario scenario;
    Pomdp& m = scenario.pomdp;
    for (Index s = 0; s < nS; ++s) m.states.push_back("s" + std::to_string(s));
    for (Index a = 0; a < nA; ++a) m.actions.push_back("a" + std::to_string(a));
    for (Index o = 0; o < nO; ++o) m.observations.push_back("o" + std::to_string(o));
    m.initial_state = 0;
    m.obs_of.resize(nS);
    for (Index s = 0; s < nS; ++s) m.obs_of[s] = pick(0, nO - 1);

    m.transition.assign(static_cast<std::size_t>(nS) * nA, SparseDist{});
    for (Index s = 0; s < nS; ++s) {
        for (Index a = 0; a < nA; ++a) {
            const int k = pick(1, std::min<Index>(3, nS));
            std::vector<Index> succ(nS);
            for (Index i = 0; i < nS; ++i) succ[i] = i;
            std::shuffle(succ.begin(), succ.end(), rng);
            succ.resize(k);
            std::sort(succ.begin(), succ.end());
            std::vector<int> weight(k);
            int total = 0;
            for (int i = 0; i < k; ++i) {
                weight[i] = pick(1, 9);
                total += weight[i];
            }
            SparseDist& row = m.row(s, a);
            for (int i = 0; i < k; ++i) {
                row.entries.emplace_back(succ[i],
                                         static_cast<double>(weight[i]) / static_cast<double>(total));
            }
        }
    }

    Fsc& c = scenario.fsc;
    for (Index n = 0; n < nN; ++n) c.nodes.push_back("n" + std::to_string(n));
    c.initial_node = 0;
    c.action_of.resize(static_cast<std::size_t>(nN) * nO);
    c.next_node.resize(static_cast<std::size_t>(nN) * nO);
    for (std::size_t i = 0; i < c.action_of.size(); ++i) {
        c.action_of[i] = pick(0, nA - 1);
        c.next_node[i] = pick(0, nN - 1);
    }

    scenario.cost_model.normalize_identity(nO);
    for (Index from = 0; from < nO; ++from) {
        for (Index to = 0; to < nO; ++to) {
            if (from == to) continue;
            if (pick(0, 9) < 6) {
                scenario.cost_model.set_pair_cost(from, to, static_cast<double>(pick(1, 2)));
            }
        }
    }
    scenario.cost_model.budget = static_cast<double>(pick(0, 2));

    const Index decoy_count = pick(1, std::min<Index>(2, nS));
    std::vector<Index> all(nS);
    for (Index s = 0; s < nS; ++s) all[s] = s;
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(decoy_count);
    std::sort(all.begin(), all.end());
    scenario.decoy = all;
    return scenario;
}

/// Uniformly random total alteration restricted to permitted pairs, with the
/// initial observation kept at identity.
inline Alteration random_feasible_alteration(const Scenario& scenario, std::uint32_t seed) {
    std::mt19937 rng(seed);
    const Index nO = scenario.pomdp.num_observations();
    const Index init_obs = scenario.pomdp.obs_of[scenario.pomdp.initial_state];
    Alteration alt = Alteration::identity(nO);
    for (Index o = 0; o < nO; ++o) {
        if (o == init_obs) continue;
        std::vector<Index> images;
        for (Index img = 0; img < nO; ++img) {
            if (scenario.cost_model.pair_cost(o, img).has_value()) images.push_back(img);
        }
        alt.image[o] = images[std::uniform_int_distribution<std::size_t>(0, images.size() - 1)(rng)];
    }
    return alt;
}

/// Exact 0/1 knapsack: the best total value achievable within the capacity.
inline long long knapsack_best_value(const std::vector<long long>& weights,
                                     const std::vector<long long>& values, long long capacity) {
    std::vector<long long> best(static_cast<std::size_t>(capacity) + 1, 0);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        for (long long w = capacity; w >= weights[i]; --w) {
            best[w] = std::max(best[w], best[w - weights[i]] + values[i]);
        }
    }
    return best[capacity];
}

inline bool knapsack_decision(const std::vector<long long>& weights,
                              const std::vector<long long>& values, long long capacity,
                              long long threshold) {
    return knapsack_best_value(weights, values, capacity) >= threshold;
}

} // namespace decoyforge::testsupport
