#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace decoyforge {

using Index = std::int32_t;

/// The initial observation's identity pair is forbidden, so the
/// initial-observation fixing constraint cannot hold and no alteration is
/// feasible.
class InfeasibleScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sparse probability distribution over indexed states, entries sorted by index.
struct SparseDist {
    std::vector<std::pair<Index, double>> entries;

    bool empty() const { return entries.empty(); }
    double sum() const;
    bool operator==(const SparseDist&) const = default;
};

/// Partially observable Markov decision process with a deterministic
/// state-to-observation map. Ids are strings at the boundary and dense
/// indices internally; all id vectors are sorted and unique.
struct Pomdp {
    std::vector<std::string> states;
    std::vector<std::string> actions;
    std::vector<std::string> observations;
    Index initial_state = -1;
    std::vector<Index> obs_of;          // state -> observation, -1 if missing
    std::vector<SparseDist> transition; // (state * num_actions + action) -> dist

    Index num_states() const { return static_cast<Index>(states.size()); }
    Index num_actions() const { return static_cast<Index>(actions.size()); }
    Index num_observations() const { return static_cast<Index>(observations.size()); }

    const SparseDist& row(Index s, Index a) const { return transition[static_cast<std::size_t>(s) * actions.size() + a]; }
    SparseDist& row(Index s, Index a) { return transition[static_cast<std::size_t>(s) * actions.size() + a]; }

    Index state_index(std::string_view id) const;
    Index action_index(std::string_view id) const;
    Index observation_index(std::string_view id) const;

    bool operator==(const Pomdp&) const = default;
};

/// Finite-state controller: total action-selection and memory-update tables
/// over nodes x observations. Missing entries are stored as -1 and rejected
/// by validation.
struct Fsc {
    std::vector<std::string> nodes;
    Index initial_node = -1;
    std::vector<Index> action_of; // node * num_observations + obs -> action
    std::vector<Index> next_node; // node * num_observations + obs -> node

    Index num_nodes() const { return static_cast<Index>(nodes.size()); }

    Index action(Index n, Index o, Index num_obs) const { return action_of[static_cast<std::size_t>(n) * num_obs + o]; }
    Index next(Index n, Index o, Index num_obs) const { return next_node[static_cast<std::size_t>(n) * num_obs + o]; }

    Index node_index(std::string_view id) const;

    bool operator==(const Fsc&) const = default;
};

/// Pairwise observation-alteration costs. Absent pairs are forbidden
/// (conceptually infinite cost); identity pairs are always present with
/// cost 0 after normalization.
struct CostModel {
    std::unordered_map<std::uint64_t, double> cost; // key(from, obs) -> cost
    double budget = 0.0;

    static std::uint64_t key(Index from, Index to) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(from)) << 32) |
               static_cast<std::uint32_t>(to);
    }

    std::optional<double> pair_cost(Index from, Index to) const {
        auto it = cost.find(key(from, to));
        if (it == cost.end()) return std::nullopt;
        return it->second;
    }

    void set_pair_cost(Index from, Index to, double c) { cost[key(from, to)] = c; }

    /// Materialize cost 0 for every identity pair not explicitly present.
    void normalize_identity(Index num_observations);

    bool operator==(const CostModel& other) const {
        return cost == other.cost && budget == other.budget;
    }
};

/// Total map observation -> observation applied by the attacker.
struct Alteration {
    std::vector<Index> image; // observation -> observation

    static Alteration identity(Index num_observations);
    bool is_identity() const;
    Index operator()(Index o) const { return image[o]; }

    bool operator==(const Alteration&) const = default;
};

/// A full problem instance: POMDP, controller, cost model and decoy set.
struct Scenario {
    Pomdp pomdp;
    Fsc fsc;
    CostModel cost_model;
    std::vector<Index> decoy; // sorted state indices

    bool is_decoy(Index s) const;

    bool operator==(const Scenario&) const = default;
};

struct Violation {
    std::string entity; // offending entity, e.g. "transition(s2,N)"
    std::string rule;   // violated rule, e.g. "row sum != 1"
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    std::string to_string() const;
};

/// Checks every structural invariant of the scenario: row stochasticity,
/// totality of obs_of and the FSC tables, identity costs, budget sign and
/// decoy well-formedness. Violations are data, not errors.
ValidationReport validate_scenario(const Scenario& scenario);

/// Total alteration cost C(alpha) = sum_o c(o, alpha(o)); nullopt when any
/// pair is forbidden.
std::optional<double> alteration_cost(const CostModel& cost_model, const Alteration& alt);

/// Parses the command-line literal "o1->o3;o2->o0"; unspecified observations
/// map to identity. Throws std::invalid_argument on unknown ids or syntax.
Alteration parse_alteration_literal(std::string_view text, const Pomdp& pomdp);

/// Renders non-identity pairs as "o1->o3;o2->o0" sorted by source id;
/// empty string for the identity alteration.
std::string format_alteration(const Alteration& alt, const Pomdp& pomdp);

} // namespace decoyforge
