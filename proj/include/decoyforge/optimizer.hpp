#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "decoyforge/model.hpp"

namespace decoyforge {

/// Brute-force enumeration refused because the alteration space is too
/// large; the message carries the size estimate.
class BruteForceGuardError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class OptStatus { Optimal, Incumbent };

std::string to_string(OptStatus status);

struct OptResult {
    Alteration best_alteration;
    double best_value = 0.0;
    double best_cost = 0.0;
    OptStatus status = OptStatus::Optimal;
    std::uint64_t nodes_explored = 0;
    double bound_at_root = 1.0;
    double seconds = 0.0;
};

/// Per-observation image candidates: images with a finite cost, the initial
/// state's observation restricted to identity. Shared by both solvers and by
/// the search-node enumeration in tests.
struct AlterationChoices {
    std::vector<std::vector<Index>> candidates; // per observation, ascending image index
    std::vector<double> min_cost;               // cheapest permitted image per observation
    double total_min_cost = 0.0;
};

AlterationChoices alteration_choices(const Scenario& scenario);

/// Partial assignment in the branch-and-bound tree.
struct SearchNode {
    std::vector<Index> decided; // per observation: image index, or -1 undecided
    double committed_cost = 0.0;
    double bound = 1.0;
};

struct BoundResult {
    double bound = 0.0;
    bool feasible = true;
};

/// Admissible upper bound: max-reachability value of the relaxed MDP in
/// which every undecided observation may pick any budget-consistent image
/// independently per product-state occurrence. Computed by value iteration
/// from above (tol 1e-9, at most 1e5 sweeps), so the result upper-bounds
/// every consistent completion at any stopping point. Infeasible nodes get
/// bound 0.
BoundResult relaxation_bound(const Scenario& scenario, const SearchNode& node);

struct BruteOptions {
    bool override_guard = false; // lift the |observations| <= 8 guard
    bool use_cache = true;       // memoize values of behavior-equivalent alterations
    bool parallel = true;        // OpenMP over first-observation branches
};

/// Exhaustive enumeration of total alterations with finite cost <= budget;
/// ties broken to the lexicographically smallest alteration under the sorted
/// observation ordering. Throws BruteForceGuardError when |observations| > 8
/// and the guard is not overridden.
OptResult brute_force(const Scenario& scenario, const BruteOptions& options = {});

/// Serial reference enumeration; identical result to brute_force.
OptResult brute_force_serial(const Scenario& scenario, const BruteOptions& options = {});

struct OptLimits {
    std::uint64_t max_nodes = 0; // 0 = unlimited
    double max_seconds = 0.0;    // 0 = unlimited
};

/// Depth-first branch and bound over an impact-ordered observation sequence
/// with the relaxed-MDP bound. Returns Optimal unless a limit was hit, in
/// which case the best incumbent is returned as Incumbent.
OptResult branch_and_bound(const Scenario& scenario, const OptLimits& limits = {});

enum class OptMethod { BranchAndBound, Brute };

/// One exact solve per budget, budgets ascending.
std::vector<OptResult> budget_sweep(const Scenario& scenario, const std::vector<double>& budgets,
                                    OptMethod method = OptMethod::BranchAndBound,
                                    const OptLimits& limits = {});

} // namespace decoyforge
