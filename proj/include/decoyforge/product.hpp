#pragma once

#include <cstdint>
#include <vector>

#include "decoyforge/model.hpp"

namespace decoyforge {

/// Goal Markov chain over (state, node) pairs induced by a fixed alteration.
/// Dense indexing: q = s * num_nodes + n.
struct ProductChain {
    Index num_pomdp_states = 0;
    Index num_nodes = 0;
    Index q0 = -1;
    std::vector<SparseDist> rows; // q -> distribution over q'
    std::vector<bool> goal;       // q in Q_D = S_D x N
    std::uint64_t construction_touches = 0; // (s,n) visits + nonzero P entries copied

    Index num_states() const { return static_cast<Index>(rows.size()); }
    Index pack(Index s, Index n) const { return s * num_nodes + n; }
    Index state_of(Index q) const { return q / num_nodes; }
    Index node_of(Index q) const { return q % num_nodes; }
};

/// Def.-style product construction for a validated scenario and total
/// alteration: the row of (s, n) copies P(s, gamma(n, alpha(O(s))), .) into
/// the successor node delta(n, alpha(O(s))).
ProductChain build_product(const Scenario& scenario, const Alteration& alt);

} // namespace decoyforge
