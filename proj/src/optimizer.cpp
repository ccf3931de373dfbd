#include "decoyforge/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "decoyforge/product.hpp"
#include "decoyforge/reach.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace decoyforge {

std::string to_string(OptStatus status) {
    return status == OptStatus::Optimal ? "optimal" : "incumbent";
}

namespace {

constexpr double kBoundRoundUp = 1e-12;
constexpr double kViTol = 1e-9;
constexpr long kViMaxSweeps = 100'000;

struct VectorHash {
    std::size_t operator()(const std::vector<Index>& v) const {
        std::size_t h = 1469598103934665603ull;
        for (Index x : v) {
            h ^= static_cast<std::size_t>(x) + 0x9e3779b9ull;
            h *= 1099511628211ull;
        }
        return h;
    }
};

using ValueCache = std::unordered_map<std::vector<Index>, double, VectorHash>;

/// Images sharing gamma/delta columns induce identical product chains, so
/// reach values can be memoized by the class signature of the image tuple.
std::vector<Index> image_behavior_classes(const Scenario& scenario) {
    const Fsc& c = scenario.fsc;
    const Index nO = scenario.pomdp.num_observations();
    const Index nN = c.num_nodes();
    std::vector<Index> class_of(nO);
    std::vector<std::vector<Index>> seen;
    for (Index o = 0; o < nO; ++o) {
        std::vector<Index> column(2 * nN);
        for (Index n = 0; n < nN; ++n) {
            column[n] = c.action(n, o, nO);
            column[nN + n] = c.next(n, o, nO);
        }
        auto it = std::find(seen.begin(), seen.end(), column);
        if (it == seen.end()) {
            seen.push_back(std::move(column));
            class_of[o] = static_cast<Index>(seen.size()) - 1;
        } else {
            class_of[o] = static_cast<Index>(it - seen.begin());
        }
    }
    return class_of;
}

double evaluate_alteration(const Scenario& scenario, const Alteration& alt,
                           const std::vector<Index>& class_of, ValueCache* cache) {
    if (cache != nullptr) {
        std::vector<Index> signature(alt.image.size());
        for (std::size_t o = 0; o < alt.image.size(); ++o) signature[o] = class_of[alt.image[o]];
        auto it = cache->find(signature);
        if (it != cache->end()) return it->second;
        double value = reach_probability(build_product(scenario, alt)).value;
        cache->emplace(std::move(signature), value);
        return value;
    }
    return reach_probability(build_product(scenario, alt)).value;
}

double pair_cost_or_throw(const Scenario& scenario, Index from, Index to) {
    auto c = scenario.cost_model.pair_cost(from, to);
    if (!c.has_value()) throw std::logic_error("candidate image without a finite cost");
    return *c;
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

bool lexicographically_smaller(const Alteration& lhs, const Alteration& rhs) {
    return lhs.image < rhs.image;
}

void finalize(OptResult& result, const Scenario& scenario) {
    // Re-verify the incumbent through the verifier before returning.
    const double recomputed = reach_probability(build_product(scenario, result.best_alteration)).value;
    if (std::abs(recomputed - result.best_value) > 1e-9) {
        throw std::logic_error("optimizer value disagrees with re-verification");
    }
    result.best_value = recomputed;
    auto cost = alteration_cost(scenario.cost_model, result.best_alteration);
    if (!cost.has_value()) throw std::logic_error("optimizer returned a forbidden alteration");
    result.best_cost = *cost;
}

struct BruteContext {
    const Scenario& scenario;
    const AlterationChoices& choices;
    const std::vector<Index>& class_of;
    std::vector<double> min_cost_suffix; // sum of min_cost over observations >= index
};

/// Enumerates completions of alt from observation `obs` on, in ascending
/// image order, keeping the first strictly-better value (lex tie-break).
void enumerate_suffix(const BruteContext& ctx, Index obs, double committed, Alteration& alt,
                      ValueCache* cache, OptResult& best, std::uint64_t& leaves) {
    const Index nO = static_cast<Index>(ctx.choices.candidates.size());
    if (committed + ctx.min_cost_suffix[obs] > ctx.scenario.cost_model.budget) return;
    if (obs == nO) {
        const double value = evaluate_alteration(ctx.scenario, alt, ctx.class_of, cache);
        ++leaves;
        if (value > best.best_value) {
            best.best_value = value;
            best.best_alteration = alt;
        }
        return;
    }
    for (Index img : ctx.choices.candidates[obs]) {
        alt.image[obs] = img;
        enumerate_suffix(ctx, obs + 1, committed + pair_cost_or_throw(ctx.scenario, obs, img), alt,
                         cache, best, leaves);
    }
    alt.image[obs] = obs;
}

OptResult brute_force_impl(const Scenario& scenario, const BruteOptions& options, bool parallel) {
    Timer timer;
    const AlterationChoices choices = alteration_choices(scenario);
    const Index nO = scenario.pomdp.num_observations();
    if (nO > 8 && !options.override_guard) {
        double estimate = 1.0;
        for (const auto& cand : choices.candidates) estimate *= static_cast<double>(cand.size());
        throw BruteForceGuardError(
            "brute force refused: " + std::to_string(nO) + " observations, about " +
            std::to_string(estimate) + " candidate alterations; use branch and bound or override");
    }
    const std::vector<Index> class_of = image_behavior_classes(scenario);
    std::vector<double> suffix(nO + 1, 0.0);
    for (Index o = nO - 1; o >= 0; --o) suffix[o] = suffix[o + 1] + choices.min_cost[o];
    BruteContext ctx{scenario, choices, class_of, suffix};

    OptResult best;
    best.best_alteration = Alteration::identity(nO);
    best.best_value = -1.0;
    std::uint64_t leaves = 0;

    // Split work over assignments of the first observations; each branch
    // enumerates its lexicographic slice independently. Splitting well past
    // the thread count matters because budget pruning makes branch sizes
    // very uneven.
    std::size_t branch_target = 64;
#ifdef _OPENMP
    branch_target = 256 * static_cast<std::size_t>(omp_get_max_threads());
#endif
    Index split_depth = 0;
    std::size_t branches = 1;
    while (parallel && split_depth < nO && branches < branch_target) {
        branches *= choices.candidates[split_depth].size();
        ++split_depth;
    }
    std::vector<Alteration> prefixes;
    std::vector<double> prefix_cost;
    {
        Alteration alt = Alteration::identity(nO);
        // Depth-first prefix generation keeps lexicographic branch order.
        auto gen = [&](auto&& self, Index obs, double committed) -> void {
            if (committed + suffix[obs] > scenario.cost_model.budget) return;
            if (obs == split_depth) {
                prefixes.push_back(alt);
                prefix_cost.push_back(committed);
                return;
            }
            for (Index img : choices.candidates[obs]) {
                alt.image[obs] = img;
                self(self, obs + 1, committed + pair_cost_or_throw(scenario, obs, img));
            }
            alt.image[obs] = obs;
        };
        gen(gen, 0, 0.0);
    }

    std::vector<OptResult> branch_best(prefixes.size());
    std::vector<std::uint64_t> branch_leaves(prefixes.size(), 0);
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(prefixes.size()); ++i) {
        ValueCache local_cache;
        ValueCache* cache = options.use_cache ? &local_cache : nullptr;
        OptResult local;
        local.best_alteration = Alteration::identity(nO);
        local.best_value = -1.0;
        Alteration alt = prefixes[i];
        enumerate_suffix(ctx, split_depth, prefix_cost[i], alt, cache, local, branch_leaves[i]);
        branch_best[i] = std::move(local);
    }
    for (std::size_t i = 0; i < branch_best.size(); ++i) {
        leaves += branch_leaves[i];
        if (branch_best[i].best_value > best.best_value) {
            best.best_value = branch_best[i].best_value;
            best.best_alteration = branch_best[i].best_alteration;
        }
    }
    if (best.best_value < 0.0) {
        throw InfeasibleScenarioError("no alteration satisfies the cost budget");
    }

    best.status = OptStatus::Optimal;
    best.nodes_explored = leaves;
    SearchNode root;
    root.decided.assign(nO, -1);
    best.bound_at_root = relaxation_bound(scenario, root).bound;
    finalize(best, scenario);
    best.seconds = timer.elapsed();
    return best;
}

struct BoundWorkspace {
    std::vector<double> value;
    std::vector<double> next;
    std::vector<std::vector<Index>> allowed; // per observation
};

/// Value iteration for the relaxed MDP; see relaxation_bound. Iterates from
/// above: the start vector is 1 wherever some relaxed path reaches the decoy
/// and 0 elsewhere, so the monotonically decreasing iterates stay valid
/// upper bounds at every sweep, whichever stopping rule fires.
BoundResult relaxed_bound(const Scenario& scenario, const AlterationChoices& choices,
                          const SearchNode& node, BoundWorkspace& ws) {
    const Pomdp& m = scenario.pomdp;
    const Fsc& c = scenario.fsc;
    const Index nO = m.num_observations();
    const Index nN = c.num_nodes();
    const double budget = scenario.cost_model.budget;

    double undecided_min = 0.0;
    for (Index o = 0; o < nO; ++o) {
        if (node.decided[o] < 0) undecided_min += choices.min_cost[o];
    }
    if (node.committed_cost + undecided_min > budget) return {0.0, false};

    ws.allowed.assign(nO, {});
    for (Index o = 0; o < nO; ++o) {
        if (node.decided[o] >= 0) {
            ws.allowed[o] = {node.decided[o]};
            continue;
        }
        const double slack = budget - node.committed_cost - (undecided_min - choices.min_cost[o]);
        for (Index img : choices.candidates[o]) {
            if (pair_cost_or_throw(scenario, o, img) <= slack) ws.allowed[o].push_back(img);
        }
    }

    const Index num_q = m.num_states() * nN;
    std::vector<bool> decoy_q(num_q, false);
    for (Index s : scenario.decoy) {
        for (Index n = 0; n < nN; ++n) decoy_q[s * nN + n] = true;
    }

    // States with some relaxed path to the decoy; everything else is 0.
    std::vector<bool> can_reach(num_q, false);
    {
        std::vector<std::vector<Index>> preds(num_q);
        std::vector<Index> stack;
        for (Index q = 0; q < num_q; ++q) {
            if (decoy_q[q]) {
                can_reach[q] = true;
                stack.push_back(q);
                continue;
            }
            const Index s = q / nN;
            const Index n = q % nN;
            for (Index img : ws.allowed[m.obs_of[s]]) {
                const Index a = c.action(n, img, nO);
                const Index nn = c.next(n, img, nO);
                for (const auto& [succ, p] : m.row(s, a).entries) {
                    if (p > 0.0) preds[succ * nN + nn].push_back(q);
                }
            }
        }
        while (!stack.empty()) {
            const Index q = stack.back();
            stack.pop_back();
            for (Index p : preds[q]) {
                if (!can_reach[p]) {
                    can_reach[p] = true;
                    stack.push_back(p);
                }
            }
        }
    }

    ws.value.assign(num_q, 0.0);
    ws.next.assign(num_q, 0.0);
    for (Index q = 0; q < num_q; ++q) {
        if (can_reach[q]) {
            ws.value[q] = 1.0;
            ws.next[q] = 1.0;
        }
    }

    double change = 0.0;
    for (long sweep = 0; sweep < kViMaxSweeps; ++sweep) {
        change = 0.0;
        const bool big = num_q >= 2048;
#pragma omp parallel for schedule(static) reduction(max : change) if (big)
        for (Index q = 0; q < num_q; ++q) {
            if (decoy_q[q] || !can_reach[q]) continue;
            const Index s = q / nN;
            const Index n = q % nN;
            const Index obs = m.obs_of[s];
            double bestv = 0.0;
            for (Index img : ws.allowed[obs]) {
                const Index a = c.action(n, img, nO);
                const Index nn = c.next(n, img, nO);
                double sum = 0.0;
                for (const auto& [succ, p] : m.row(s, a).entries) {
                    sum += p * ws.value[succ * nN + nn];
                }
                bestv = std::max(bestv, sum);
            }
            ws.next[q] = bestv;
            change = std::max(change, std::abs(bestv - ws.value[q]));
        }
        ws.value.swap(ws.next);
        if (change <= kViTol) break;
    }
    const Index q0 = m.initial_state * nN + c.initial_node;
    return {std::min(ws.value[q0], 1.0), true};
}

struct BnBContext {
    const Scenario& scenario;
    const AlterationChoices& choices;
    const std::vector<Index>& class_of;
    std::vector<Index> order; // observations to branch on, impact-descending
    OptLimits limits;
    Timer timer;
    ValueCache cache;
    BoundWorkspace workspace;
    OptResult best;
    std::uint64_t nodes = 0;
    bool limit_hit = false;

    BnBContext(const Scenario& sc, const AlterationChoices& ch, const std::vector<Index>& cls)
        : scenario(sc), choices(ch), class_of(cls) {}

    bool limits_exceeded() {
        if (limits.max_nodes > 0 && nodes >= limits.max_nodes) return true;
        if (limits.max_seconds > 0.0 && timer.elapsed() >= limits.max_seconds) return true;
        return false;
    }

    void leaf(const SearchNode& node) {
        Alteration alt;
        alt.image.assign(node.decided.begin(), node.decided.end());
        const double value = evaluate_alteration(scenario, alt, class_of, &cache);
        if (value > best.best_value ||
            (value == best.best_value && lexicographically_smaller(alt, best.best_alteration))) {
            best.best_value = value;
            best.best_alteration = alt;
        }
    }

    void visit(SearchNode& node, std::size_t depth) {
        ++nodes;
        if (limit_hit) return;
        if (limits_exceeded()) {
            limit_hit = true;
            return;
        }
        if (depth == order.size()) {
            leaf(node);
            return;
        }
        const Index obs = order[depth];
        for (Index img : choices.candidates[obs]) {
            const double cost = pair_cost_or_throw(scenario, obs, img);
            node.decided[obs] = img;
            node.committed_cost += cost;
            BoundResult bound = relaxed_bound(scenario, choices, node, workspace);
            if (bound.feasible && bound.bound + kBoundRoundUp > best.best_value) {
                const double saved = node.bound;
                node.bound = bound.bound;
                visit(node, depth + 1);
                node.bound = saved;
            }
            node.committed_cost -= cost;
            node.decided[obs] = -1;
            if (limit_hit) break;
        }
    }
};

} // namespace

AlterationChoices alteration_choices(const Scenario& scenario) {
    const Pomdp& m = scenario.pomdp;
    const Index nO = m.num_observations();
    const Index init_obs = m.obs_of[m.initial_state];
    AlterationChoices choices;
    choices.candidates.resize(nO);
    choices.min_cost.assign(nO, 0.0);
    for (Index o = 0; o < nO; ++o) {
        if (o == init_obs) {
            // The initial observation stays fixed; its identity must be free.
            if (!scenario.cost_model.pair_cost(o, o).has_value()) {
                throw InfeasibleScenarioError(
                    "initial-observation fixing is infeasible: identity pair for observation '" +
                    m.observations[o] + "' is forbidden");
            }
            choices.candidates[o] = {o};
            choices.min_cost[o] = 0.0;
            continue;
        }
        double min_cost = 0.0;
        bool first = true;
        for (Index img = 0; img < nO; ++img) {
            auto c = scenario.cost_model.pair_cost(o, img);
            if (!c.has_value()) continue;
            choices.candidates[o].push_back(img);
            min_cost = first ? *c : std::min(min_cost, *c);
            first = false;
        }
        if (choices.candidates[o].empty()) {
            throw InfeasibleScenarioError("observation '" + m.observations[o] +
                                          "' has no permitted image");
        }
        choices.min_cost[o] = min_cost;
    }
    for (double c : choices.min_cost) choices.total_min_cost += c;
    return choices;
}

BoundResult relaxation_bound(const Scenario& scenario, const SearchNode& node) {
    const AlterationChoices choices = alteration_choices(scenario);
    BoundWorkspace ws;
    SearchNode padded = node;
    if (padded.decided.empty()) {
        padded.decided.assign(scenario.pomdp.num_observations(), -1);
    }
    // The initial observation is always pinned to identity.
    const Index init_obs = scenario.pomdp.obs_of[scenario.pomdp.initial_state];
    if (padded.decided[init_obs] < 0) padded.decided[init_obs] = init_obs;
    return relaxed_bound(scenario, choices, padded, ws);
}

OptResult brute_force(const Scenario& scenario, const BruteOptions& options) {
    return brute_force_impl(scenario, options, options.parallel);
}

OptResult brute_force_serial(const Scenario& scenario, const BruteOptions& options) {
    return brute_force_impl(scenario, options, false);
}

OptResult branch_and_bound(const Scenario& scenario, const OptLimits& limits) {
    Timer timer;
    const AlterationChoices choices = alteration_choices(scenario);
    const std::vector<Index> class_of = image_behavior_classes(scenario);
    const Pomdp& m = scenario.pomdp;
    const Index nO = m.num_observations();

    BnBContext ctx(scenario, choices, class_of);
    ctx.limits = limits;
    ctx.timer = timer;

    // Impact = number of potential product transitions whose action selection
    // depends on the observation; decide influential observations first.
    std::vector<std::uint64_t> impact(nO, 0);
    for (Index s = 0; s < m.num_states(); ++s) {
        std::uint64_t entries = 0;
        for (Index a = 0; a < m.num_actions(); ++a) entries += m.row(s, a).entries.size();
        impact[m.obs_of[s]] += entries * scenario.fsc.num_nodes();
    }
    SearchNode root;
    root.decided.assign(nO, -1);
    for (Index o = 0; o < nO; ++o) {
        if (choices.candidates[o].size() == 1) {
            root.decided[o] = choices.candidates[o][0];
            root.committed_cost += pair_cost_or_throw(scenario, o, choices.candidates[o][0]);
        } else {
            ctx.order.push_back(o);
        }
    }
    std::stable_sort(ctx.order.begin(), ctx.order.end(),
                     [&](Index lhs, Index rhs) { return impact[lhs] > impact[rhs]; });

    // Identity incumbent: always feasible at cost 0.
    ctx.best.best_alteration = Alteration::identity(nO);
    ctx.best.best_value =
        evaluate_alteration(scenario, ctx.best.best_alteration, class_of, &ctx.cache);

    BoundResult root_bound = relaxed_bound(scenario, choices, root, ctx.workspace);
    ctx.best.bound_at_root = root_bound.bound;
    root.bound = root_bound.bound;
    if (root_bound.feasible && root_bound.bound + kBoundRoundUp > ctx.best.best_value) {
        ctx.visit(root, 0);
    } else {
        ctx.nodes = 1;
    }

    ctx.best.nodes_explored = ctx.nodes;
    ctx.best.status = ctx.limit_hit ? OptStatus::Incumbent : OptStatus::Optimal;
    finalize(ctx.best, scenario);
    ctx.best.seconds = timer.elapsed();
    return ctx.best;
}

std::vector<OptResult> budget_sweep(const Scenario& scenario, const std::vector<double>& budgets,
                                    OptMethod method, const OptLimits& limits) {
    if (!std::is_sorted(budgets.begin(), budgets.end())) {
        throw std::invalid_argument("budgets must be sorted ascending");
    }
    std::vector<OptResult> results;
    results.reserve(budgets.size());
    Scenario variant = scenario;
    for (double budget : budgets) {
        variant.cost_model.budget = budget;
        results.push_back(method == OptMethod::Brute ? brute_force(variant)
                                                     : branch_and_bound(variant, limits));
    }
    return results;
}

} // namespace decoyforge
