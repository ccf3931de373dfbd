#include "decoyforge/reach.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

namespace decoyforge {

std::string to_string(SolveMethod method) {
    switch (method) {
        case SolveMethod::Auto: return "auto";
        case SolveMethod::Direct: return "direct";
        case SolveMethod::Iterative: return "iterative";
    }
    return "?";
}

namespace {

/// States with a path to some goal state, via backward search over the
/// transpose graph. Everything else is the zero set.
std::vector<bool> co_reachable(const std::vector<SparseDist>& rows, const std::vector<bool>& goal) {
    const std::size_t n = rows.size();
    std::vector<std::vector<Index>> preds(n);
    for (std::size_t q = 0; q < n; ++q) {
        if (goal[q]) continue; // goal rows are absorbing for reachability
        for (const auto& [succ, p] : rows[q].entries) {
            if (p > 0.0) preds[succ].push_back(static_cast<Index>(q));
        }
    }
    std::vector<bool> reach(n, false);
    std::vector<Index> stack;
    for (std::size_t q = 0; q < n; ++q) {
        if (goal[q]) {
            reach[q] = true;
            stack.push_back(static_cast<Index>(q));
        }
    }
    while (!stack.empty()) {
        Index q = stack.back();
        stack.pop_back();
        for (Index p : preds[q]) {
            if (!reach[p]) {
                reach[p] = true;
                stack.push_back(p);
            }
        }
    }
    return reach;
}

double bellman_residual(const std::vector<SparseDist>& rows, const std::vector<bool>& goal,
                        const std::vector<double>& z) {
    double residual = 0.0;
    for (std::size_t q = 0; q < rows.size(); ++q) {
        if (goal[q]) continue;
        double expected = 0.0;
        for (const auto& [succ, p] : rows[q].entries) expected += p * z[succ];
        residual = std::max(residual, std::abs(z[q] - expected));
    }
    return residual;
}

} // namespace

ReachSolution solve_reachability(const std::vector<SparseDist>& rows, const std::vector<bool>& goal,
                                 Index value_at, const ReachOptions& options) {
    const Index n = static_cast<Index>(rows.size());
    ReachSolution solution;
    solution.z.assign(n, 0.0);

    const std::vector<bool> reach = co_reachable(rows, goal);
    std::vector<Index> unknown; // neither goal nor zero set
    std::vector<Index> compact(n, -1);
    for (Index q = 0; q < n; ++q) {
        if (goal[q]) {
            solution.z[q] = 1.0;
        } else if (reach[q]) {
            compact[q] = static_cast<Index>(unknown.size());
            unknown.push_back(q);
        }
    }

    SolveMethod method = options.method;
    if (method == SolveMethod::Auto) {
        method = n <= options.direct_size_limit ? SolveMethod::Direct : SolveMethod::Iterative;
    }
    solution.method_used = method;

    if (!unknown.empty() && method == SolveMethod::Direct) {
        // (I - T_UU) z_U = T_UG . 1
        const Index u = static_cast<Index>(unknown.size());
        std::vector<Eigen::Triplet<double>> triplets;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(u);
        for (Index i = 0; i < u; ++i) {
            const Index q = unknown[i];
            double diag = 1.0;
            for (const auto& [succ, p] : rows[q].entries) {
                if (goal[succ]) {
                    rhs[i] += p;
                } else if (compact[succ] >= 0) {
                    if (compact[succ] == i) {
                        diag -= p;
                    } else {
                        triplets.emplace_back(i, compact[succ], -p);
                    }
                }
            }
            triplets.emplace_back(i, i, diag);
        }
        Eigen::SparseMatrix<double> matrix(u, u);
        matrix.setFromTriplets(triplets.begin(), triplets.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
        solver.compute(matrix);
        if (solver.info() != Eigen::Success) {
            throw SolveError("sparse LU factorization failed on the reachability system", 1.0);
        }
        Eigen::VectorXd x = solver.solve(rhs);
        if (solver.info() != Eigen::Success) {
            throw SolveError("sparse LU solve failed on the reachability system", 1.0);
        }
        for (Index i = 0; i < u; ++i) solution.z[unknown[i]] = x[i];
        solution.iterations = 0;
    } else if (!unknown.empty()) {
        // Gauss-Seidel sweeps in natural state order.
        long iter = 0;
        double change = 0.0;
        for (; iter < options.max_iter; ++iter) {
            change = 0.0;
            for (Index q : unknown) {
                double next = 0.0;
                for (const auto& [succ, p] : rows[q].entries) next += p * solution.z[succ];
                change = std::max(change, std::abs(next - solution.z[q]));
                solution.z[q] = next;
            }
            if (change <= options.tol) break;
        }
        solution.iterations = iter + 1;
        if (change > options.tol) {
            throw SolveError("Gauss-Seidel did not converge within " +
                                 std::to_string(options.max_iter) + " iterations",
                             change);
        }
    }

    for (double& v : solution.z) v = std::clamp(v, 0.0, 1.0);
    solution.residual = bellman_residual(rows, goal, solution.z);
    solution.value = value_at >= 0 ? solution.z[value_at] : 0.0;
    return solution;
}

ReachSolution reach_probability(const ProductChain& chain, const ReachOptions& options) {
    return solve_reachability(chain.rows, chain.goal, chain.q0, options);
}

VerifyResult verify(const Scenario& scenario, const Alteration& alt, const ReachOptions& options) {
    VerifyResult result;
    result.cost = alteration_cost(scenario.cost_model, alt);
    result.within_budget =
        result.cost.has_value() && *result.cost <= scenario.cost_model.budget;
    ReachSolution solution = reach_probability(build_product(scenario, alt), options);
    result.probability = solution.value;
    result.residual = solution.residual;
    result.method_used = solution.method_used;
    result.iterations = solution.iterations;
    return result;
}

} // namespace decoyforge
