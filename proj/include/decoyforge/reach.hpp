#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "decoyforge/model.hpp"
#include "decoyforge/product.hpp"

namespace decoyforge {

enum class SolveMethod { Auto, Direct, Iterative };

std::string to_string(SolveMethod method);

struct ReachOptions {
    SolveMethod method = SolveMethod::Auto;
    double tol = 1e-12;
    long max_iter = 1'000'000;
    // Auto switches to Gauss-Seidel above this size.
    Index direct_size_limit = 20'000;
};

struct ReachSolution {
    std::vector<double> z; // per product state, in [0,1]
    double value = 0.0;    // z at q0
    double residual = 0.0; // max Bellman residual over solved states
    SolveMethod method_used = SolveMethod::Direct;
    long iterations = 0;
};

/// Iterative solver did not reach the residual tolerance within max_iter.
class SolveError : public std::runtime_error {
public:
    SolveError(const std::string& message, double last_residual)
        : std::runtime_error(message), last_residual(last_residual) {}
    double last_residual;
};

/// Exact decoy-reachability: z = 1 on goal states, z = 0 on states with no
/// path to a goal, and the Bellman equation elsewhere. Goal rows are treated
/// as absorbing regardless of stored transitions.
ReachSolution reach_probability(const ProductChain& chain, const ReachOptions& options = {});

struct VerifyResult {
    double probability = 0.0;
    std::optional<double> cost; // nullopt = forbidden pair used
    bool within_budget = false;
    double residual = 0.0;
    SolveMethod method_used = SolveMethod::Direct;
    long iterations = 0;
};

/// Probability, cost and budget check for one alteration.
VerifyResult verify(const Scenario& scenario, const Alteration& alt,
                    const ReachOptions& options = {});

/// Shared linear-system core: solves z = rows . z with z pinned to 1 on
/// goal and 0 outside the co-reachable set. Used by the product verifier
/// and by the MILP fix-and-solve route.
ReachSolution solve_reachability(const std::vector<SparseDist>& rows,
                                 const std::vector<bool>& goal, Index value_at,
                                 const ReachOptions& options);

} // namespace decoyforge
