#include "decoyforge/product.hpp"

#include <stdexcept>

namespace decoyforge {

ProductChain build_product(const Scenario& scenario, const Alteration& alt) {
    const Pomdp& m = scenario.pomdp;
    const Fsc& c = scenario.fsc;
    const Index nO = m.num_observations();
    if (static_cast<Index>(alt.image.size()) != nO) {
        throw std::invalid_argument("alteration is not total over the observation set");
    }

    ProductChain chain;
    chain.num_pomdp_states = m.num_states();
    chain.num_nodes = c.num_nodes();
    chain.q0 = chain.pack(m.initial_state, c.initial_node);
    chain.rows.resize(static_cast<std::size_t>(m.num_states()) * c.num_nodes());
    chain.goal.assign(chain.rows.size(), false);
    for (Index s : scenario.decoy) {
        for (Index n = 0; n < c.num_nodes(); ++n) chain.goal[chain.pack(s, n)] = true;
    }

    for (Index s = 0; s < m.num_states(); ++s) {
        const Index perceived = alt.image[m.obs_of[s]];
        for (Index n = 0; n < c.num_nodes(); ++n) {
            ++chain.construction_touches;
            const Index a = c.action(n, perceived, nO);
            const Index next = c.next(n, perceived, nO);
            const SparseDist& src = m.row(s, a);
            SparseDist& dst = chain.rows[chain.pack(s, n)];
            dst.entries.reserve(src.entries.size());
            for (const auto& [succ, p] : src.entries) {
                dst.entries.emplace_back(chain.pack(succ, next), p);
                ++chain.construction_touches;
            }
        }
    }
    return chain;
}

} // namespace decoyforge
