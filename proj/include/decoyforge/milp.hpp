#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "decoyforge/model.hpp"

namespace decoyforge {

/// Product over (state, node, altered-observation) triples. The transition
/// weight into (s', n', o') is P(s, gamma(n, o), s') when n' = delta(n, o)
/// and 0 otherwise, independent of o'.
struct ExtendedProduct {
    Index num_states = 0;
    Index num_nodes = 0;
    Index num_observations = 0;
    std::vector<Index> gamma; // (n * nO + o) -> action
    std::vector<Index> delta; // (n * nO + o) -> next node
    std::vector<std::vector<Index>> state_succ; // s -> sorted s' with some-action edge
    std::uint64_t edge_count = 0;

    std::size_t triple_count() const {
        return static_cast<std::size_t>(num_states) * num_nodes * num_observations;
    }
    std::size_t pack(Index s, Index n, Index o) const {
        return (static_cast<std::size_t>(s) * num_nodes + n) * num_observations + o;
    }
};

ExtendedProduct build_extended_product(const Scenario& scenario);

/// Entry weight of the extended product; zero unless n' = delta(n, o) and
/// P(s, gamma(n, o), s') > 0. Does not depend on the successor observation.
double extended_transition(const Scenario& scenario, const ExtendedProduct& ext, Index s, Index n,
                           Index o, Index s_next, Index n_next);

enum class VarKind { X, Z, L };

struct MilpVar {
    VarKind kind;
    std::string name;
    double lower = 0.0;
    double upper = 1.0;
    // X: (from, to); Z: (s, n, o); L: (s, o, s', n', o')
    Index i0 = -1, i1 = -1, i2 = -1, i3 = -1, i4 = -1;
};

enum class RowSense { LessEqual, GreaterEqual, Equal };

enum class RowKind { Budget, InitFix, Totality, Decoy, Bellman, McCormick1, McCormick2, McCormick3 };

struct MilpRow {
    RowKind kind;
    std::string name;
    std::vector<std::pair<Index, double>> terms; // (variable index, coefficient)
    RowSense sense = RowSense::Equal;
    double rhs = 0.0;
};

struct MilpStats {
    std::size_t num_vars = 0;
    std::size_t num_constraints = 0;
};

struct MilpOptions {
    /// Create l variables only for (s, s') pairs with a positive-probability
    /// transition under some action (the formulation's sparsity improvement).
    bool l_sparsity = true;
    /// Upper-bound z to 0 on triples from which no alteration can reach the
    /// decoy; restores a unique Bellman solution under maximization.
    bool pin_unreachable_zero = true;
    /// Drop triples not forward-reachable from (s0, n0, .) under any
    /// alteration. Off by default.
    bool prune_unreachable_triples = false;
    /// Test hook for the totality-necessity check; production models always
    /// carry the totality rows.
    bool include_totality = true;
};

struct MilpModel {
    std::vector<MilpVar> vars; // x block, z block, l block, each in index order
    std::vector<MilpRow> rows;
    Index objective_var = -1;         // z at (s0, n0, O(s0)), to maximize
    std::vector<Index> x_of_pair;     // (from * nO + to) -> var index or -1
    std::vector<Index> z_of_triple;   // triple -> var index or -1 (pruned)
    Index num_observations = 0;
    MilpOptions options;
};

/// Builds the MILP: maximize z_{s0,n0,O(s0)} subject to the budget row,
/// initial-observation fixing, per-observation totality, decoy base cases,
/// linearized Bellman rows and the McCormick envelopes. Throws
/// InfeasibleScenarioError when the initial observation's identity pair is
/// forbidden.
MilpModel build_milp(const Scenario& scenario, const MilpOptions& options = {});

MilpStats count_stats(const MilpModel& model);

std::string export_lp_string(const MilpModel& model);

/// Writes the LP file; byte-identical across runs for identical scenarios.
void export_lp(const MilpModel& model, const std::string& path);

struct FixSolveResult {
    double objective = 0.0;
    std::vector<double> z; // per z variable, in variable order
};

/// Fixes the binaries to encode the alteration and solves the remaining
/// linear Bellman system through the model's own rows; the objective value
/// must match the product-chain verifier. Throws std::invalid_argument if
/// the alteration uses a pair without an x variable.
double fix_and_solve(const Scenario& scenario, const MilpModel& model, const Alteration& alt);

FixSolveResult fix_and_solve_full(const Scenario& scenario, const MilpModel& model,
                                  const Alteration& alt);

/// Variable assignment parsed from an external solver's "name value" lines.
struct ExternalSolution {
    std::unordered_map<std::string, double> values;

    double value_of(const std::string& name) const {
        auto it = values.find(name);
        return it == values.end() ? 0.0 : it->second;
    }
};

ExternalSolution parse_solution_file(const std::string& path);

double objective_value(const MilpModel& model, const ExternalSolution& solution);

/// Reconstructs the alteration from the binary x assignment (values > 0.5).
/// Throws std::runtime_error if the assignment is not a total map.
Alteration alteration_from_solution(const MilpModel& model, const ExternalSolution& solution);

} // namespace decoyforge
