#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "decoyforge/generators.hpp"
#include "decoyforge/optimizer.hpp"
#include "decoyforge/product.hpp"
#include "decoyforge/reach.hpp"
#include "test_support.hpp"

using namespace decoyforge;

namespace {

Scenario paper_knapsack() {
    return gen_knapsack({{1, 2, 3, 4, 5}, {20, 30, 40, 50, 60}, 7, 100}).scenario;
}

Alteration club_alteration(const Scenario& sc, std::initializer_list<int> items) {
    Alteration alt = Alteration::identity(sc.pomdp.num_observations());
    for (int i : items) {
        alt.image[sc.pomdp.observation_index("o" + std::to_string(i))] =
            sc.pomdp.observation_index("o_club");
    }
    return alt;
}

} // namespace

TEST_CASE("paper knapsack instance: unique optimum found by both solvers") {
    Scenario sc = paper_knapsack();
    BruteOptions brute_opts;
    brute_opts.override_guard = true; // 9 observations, 2^5 feasible images
    OptResult brute = brute_force(sc, brute_opts);
    OptResult bb = branch_and_bound(sc);
    const Alteration expected = club_alteration(sc, {1, 2, 4});
    CHECK(brute.best_alteration == expected);
    CHECK(bb.best_alteration == expected);
    CHECK(std::abs(brute.best_value - 0.25) <= 1e-12);
    CHECK(std::abs(bb.best_value - 0.25) <= 1e-12);
    CHECK(brute.best_cost == 7.0);
    CHECK(bb.best_cost == 7.0);
    CHECK(brute.status == OptStatus::Optimal);
    CHECK(bb.status == OptStatus::Optimal);
    CHECK(bb.bound_at_root + 1e-12 >= bb.best_value);
}

TEST_CASE("zero budget keeps the identity alteration") {
    Scenario sc = gen_grid(default_grid_spec(5)); // budget 0 by default
    OptResult bb = branch_and_bound(sc);
    CHECK(bb.best_alteration.is_identity());
    CHECK(std::abs(bb.best_value - 0.085) <= 0.005);
    CHECK(bb.best_cost == 0.0);
}

TEST_CASE("grid budget 1 reaches the reported probability") {
    Scenario sc = gen_grid(default_grid_spec(5));
    sc.cost_model.budget = 1.0;
    OptResult bb = branch_and_bound(sc);
    CHECK(std::abs(bb.best_value - 0.720) <= 0.005);
    CHECK(bb.best_cost == 1.0);
    // The optimum is attained by sending o1 to any north-class observation.
    const Index o1 = sc.pomdp.observation_index("o1");
    const Index image = bb.best_alteration.image[o1];
    const std::string image_id = sc.pomdp.observations[image];
    CHECK((image_id == "o2" || image_id == "o3" || image_id == "o5"));
    for (Index o = 0; o < 8; ++o) {
        if (o != o1) CHECK(bb.best_alteration.image[o] == o);
    }
}

TEST_CASE("brute force equals branch and bound on random instances") {
    int compared = 0;
    for (std::uint32_t seed = 500; seed < 516; ++seed) {
        Scenario sc = testsupport::random_scenario(seed);
        OptResult brute = brute_force(sc);
        OptResult bb = branch_and_bound(sc);
        CHECK(std::abs(brute.best_value - bb.best_value) <= 1e-9);
        CHECK(brute.best_cost <= sc.cost_model.budget);
        CHECK(bb.best_cost <= sc.cost_model.budget);
        ++compared;
    }
    CHECK(compared == 16);
}

TEST_CASE("results are deterministic across repeated runs") {
    Scenario sc = testsupport::random_scenario(321);
    OptResult a = branch_and_bound(sc);
    OptResult b = branch_and_bound(sc);
    CHECK(a.best_alteration == b.best_alteration);
    CHECK(a.best_value == b.best_value);
    CHECK(a.nodes_explored == b.nodes_explored);

    OptResult serial = brute_force_serial(sc);
    OptResult parallel = brute_force(sc);
    CHECK(serial.best_alteration == parallel.best_alteration);
    CHECK(serial.best_value == parallel.best_value);
    CHECK(serial.nodes_explored == parallel.nodes_explored);
}

TEST_CASE("brute force ties break to the lexicographically smallest alteration") {
    Scenario sc = gen_grid(default_grid_spec(5));
    sc.cost_model.budget = 1.0;
    OptResult brute = brute_force(sc);
    // o1 -> {o2, o3, o5} are behaviorally identical; the smallest image wins.
    CHECK(format_alteration(brute.best_alteration, sc.pomdp) == "o1->o2");
}

TEST_CASE("relaxation bound is admissible over sampled prefixes") {
    for (std::uint32_t seed = 700; seed < 706; ++seed) {
        Scenario sc = testsupport::random_scenario(seed);
        const AlterationChoices choices = alteration_choices(sc);
        const Index nO = sc.pomdp.num_observations();

        SearchNode node;
        node.decided.assign(nO, -1);
        const Index init_obs = sc.pomdp.obs_of[sc.pomdp.initial_state];
        node.decided[init_obs] = init_obs;

        // Decide the first non-initial observation each possible way and
        // compare against the best brute-forced completion.
        Index first = -1;
        for (Index o = 0; o < nO && first < 0; ++o) {
            if (o != init_obs) first = o;
        }
        if (first < 0) continue;
        for (Index img : choices.candidates[first]) {
            node.decided[first] = img;
            node.committed_cost = *sc.cost_model.pair_cost(first, img);
            BoundResult bound = relaxation_bound(sc, node);
            if (!bound.feasible) continue;

            double best_completion = -1.0;
            auto enumerate = [&](auto&& self, Index obs, double cost, Alteration& alt) -> void {
                if (cost > sc.cost_model.budget) return;
                if (obs == nO) {
                    double value = reach_probability(build_product(sc, alt)).value;
                    best_completion = std::max(best_completion, value);
                    return;
                }
                if (node.decided[obs] >= 0) {
                    alt.image[obs] = node.decided[obs];
                    self(self, obs + 1, cost, alt);
                    return;
                }
                for (Index candidate : choices.candidates[obs]) {
                    alt.image[obs] = candidate;
                    self(self, obs + 1, cost + *sc.cost_model.pair_cost(obs, candidate), alt);
                }
            };
            Alteration alt = Alteration::identity(nO);
            enumerate(enumerate, 0, 0.0, alt);
            if (best_completion >= 0.0) {
                CHECK(bound.bound + 1e-9 >= best_completion);
            }
        }
    }
}

TEST_CASE("root bound with a generous budget dominates single alterations") {
    Scenario sc = gen_grid(default_grid_spec(5));
    sc.cost_model.budget = 64.0; // above the sum of all pair costs
    SearchNode root;
    root.decided.assign(8, -1);
    BoundResult bound = relaxation_bound(sc, root);
    REQUIRE(bound.feasible);
    const Index init_obs = sc.pomdp.obs_of[sc.pomdp.initial_state];
    for (Index o = 0; o < 8; ++o) {
        if (o == init_obs) continue;
        for (Index img = 0; img < 8; ++img) {
            Alteration alt = Alteration::identity(8);
            alt.image[o] = img;
            const double value = reach_probability(build_product(sc, alt)).value;
            CHECK(bound.bound + 1e-9 >= value);
        }
    }
}

TEST_CASE("a prefix that forbids the decoy bounds to zero") {
    Scenario sc = paper_knapsack();
    // All item observations pinned to identity: s_bot becomes unreachable.
    SearchNode node;
    node.decided.assign(sc.pomdp.num_observations(), -1);
    for (Index o = 0; o < sc.pomdp.num_observations(); ++o) {
        const std::string& id = sc.pomdp.observations[o];
        if (id != "o_bot" && id != "o_club" && id != "o_top") node.decided[o] = o;
    }
    BoundResult bound = relaxation_bound(sc, node);
    REQUIRE(bound.feasible);
    CHECK(bound.bound == 0.0);
}

TEST_CASE("fully decided nodes bound to their exact value") {
    Scenario sc = paper_knapsack();
    Alteration alt = club_alteration(sc, {1, 2, 4});
    SearchNode node;
    node.decided.assign(alt.image.begin(), alt.image.end());
    node.committed_cost = 7.0;
    BoundResult bound = relaxation_bound(sc, node);
    REQUIRE(bound.feasible);
    const double exact = reach_probability(build_product(sc, alt)).value;
    CHECK(std::abs(bound.bound - exact) <= 1e-7);
}

TEST_CASE("cost-infeasible nodes are flagged with bound zero") {
    Scenario sc = paper_knapsack();
    SearchNode node;
    node.decided.assign(sc.pomdp.num_observations(), -1);
    node.committed_cost = 100.0; // beyond the budget of 7
    BoundResult bound = relaxation_bound(sc, node);
    CHECK_FALSE(bound.feasible);
    CHECK(bound.bound == 0.0);
}

TEST_CASE("budget sweep values are non-decreasing") {
    Scenario sc = gen_grid(default_grid_spec(5));
    std::vector<OptResult> results = budget_sweep(sc, {0.0, 1.0, 2.0});
    REQUIRE(results.size() == 3);
    CHECK(results[0].best_value <= results[1].best_value + 1e-12);
    CHECK(results[1].best_value <= results[2].best_value + 1e-12);
    CHECK(std::abs(results[1].best_value - 0.720) <= 0.005);
    CHECK(std::abs(results[2].best_value - 0.861) <= 0.005);
    CHECK_THROWS_AS(budget_sweep(sc, {2.0, 1.0}), std::invalid_argument);
}

TEST_CASE("node limits produce an incumbent, never silence") {
    Scenario sc = paper_knapsack();
    OptLimits limits;
    limits.max_nodes = 1;
    OptResult result = branch_and_bound(sc, limits);
    CHECK(result.status == OptStatus::Incumbent);
    CHECK(result.best_alteration.is_identity());
    CHECK(result.nodes_explored <= 1);
}

TEST_CASE("the brute-force guard refuses large observation sets") {
    Scenario sc = paper_knapsack(); // 9 observations
    CHECK_THROWS_AS(brute_force(sc), BruteForceGuardError);
    CHECK_NOTHROW(brute_force(sc, BruteOptions{true, true, true}));
}

TEST_CASE("unreachable decoys yield the identity tie-break at value zero") {
    Scenario sc = paper_knapsack();
    sc.cost_model.budget = 0.0; // only identity is affordable; s_bot unreachable
    BruteOptions opts;
    opts.override_guard = true;
    OptResult result = brute_force(sc, opts);
    CHECK(result.best_value == 0.0);
    CHECK(result.best_alteration.is_identity());
}

TEST_CASE("a one-item instance with zero budget stays below its threshold ratio") {
    KnapsackScenario out = gen_knapsack({{1}, {1}, 0, 1});
    CHECK(out.threshold_r == 0.5);
    BruteOptions opts;
    opts.override_guard = true;
    OptResult result = brute_force(out.scenario, opts);
    CHECK(result.best_value == 0.0);
    CHECK(result.best_value < out.threshold_r);
    CHECK(result.best_alteration.is_identity());
}

TEST_CASE("optimizers reject scenarios whose initial identity is forbidden") {
    Scenario sc = testsupport::random_scenario(42);
    const Index init_obs = sc.pomdp.obs_of[sc.pomdp.initial_state];
    sc.cost_model.cost.erase(CostModel::key(init_obs, init_obs));
    CHECK_THROWS_AS(branch_and_bound(sc), InfeasibleScenarioError);
    CHECK_THROWS_AS(brute_force(sc), InfeasibleScenarioError);
}
