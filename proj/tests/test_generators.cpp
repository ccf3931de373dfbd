#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "decoyforge/generators.hpp"
#include "decoyforge/product.hpp"
#include "decoyforge/reach.hpp"
#include "test_support.hpp"

using namespace decoyforge;

TEST_CASE("default 5x5 layout matches the reference sensor placement") {
    GridSpec spec = default_grid_spec(5);
    REQUIRE(spec.sensors.size() == 7);
    auto covered = [&](const std::string& id) {
        for (const auto& s : spec.sensors) {
            if (s.id == id) return s.covered;
        }
        return std::vector<Cell>{};
    };
    CHECK(covered("o0") == std::vector<Cell>{{0, 0}});
    CHECK(covered("o1") == std::vector<Cell>{{2, 0}, {2, 1}});
    CHECK(covered("o2") == std::vector<Cell>{{0, 2}, {1, 2}});
    CHECK(covered("o3") == std::vector<Cell>{{4, 0}, {4, 1}});
    CHECK(covered("o4") == std::vector<Cell>{{0, 4}, {1, 4}});
    CHECK(covered("o5") == std::vector<Cell>{{4, 3}});
    CHECK(covered("o6") == std::vector<Cell>{{3, 4}});
    CHECK(spec.hazard == Cell{2, 2});
    CHECK(spec.goal == Cell{4, 4});
}

TEST_CASE("grid scenario shape: one state per cell, sensors plus blank") {
    Scenario grid = gen_grid(default_grid_spec(5));
    CHECK(grid.pomdp.num_states() == 25);
    CHECK(grid.pomdp.num_observations() == 8);
    CHECK(grid.fsc.num_nodes() == 3);
    CHECK(grid.pomdp.num_actions() == 4);
    CHECK(grid.decoy == std::vector<Index>{grid.pomdp.state_index("c2_2")});

    auto obs_id = [&](const char* cell) {
        return grid.pomdp.observations[grid.pomdp.obs_of[grid.pomdp.state_index(cell)]];
    };
    CHECK(obs_id("c0_0") == "o0");
    CHECK(obs_id("c2_0") == "o1");
    CHECK(obs_id("c2_1") == "o1");
    CHECK(obs_id("c0_2") == "o2");
    CHECK(obs_id("c1_2") == "o2");
    CHECK(obs_id("c4_0") == "o3");
    CHECK(obs_id("c4_1") == "o3");
    CHECK(obs_id("c0_4") == "o4");
    CHECK(obs_id("c1_4") == "o4");
    CHECK(obs_id("c4_3") == "o5");
    CHECK(obs_id("c3_4") == "o6");
    CHECK(obs_id("c2_2") == "b");
    CHECK(obs_id("c4_4") == "b");
    CHECK(obs_id("c1_0") == "b");
}

TEST_CASE("grid rows are stochastic to float precision") {
    for (int n : {5, 9, 15}) {
        Scenario grid = gen_grid(default_grid_spec(n));
        const Pomdp& m = grid.pomdp;
        for (Index s = 0; s < m.num_states(); ++s) {
            for (Index a = 0; a < m.num_actions(); ++a) {
                CHECK(std::abs(m.row(s, a).sum() - 1.0) <= 1e-15);
            }
        }
    }
}

TEST_CASE("goal and hazard cells are absorbing") {
    Scenario grid = gen_grid(default_grid_spec(5));
    const Pomdp& m = grid.pomdp;
    for (const char* cell : {"c2_2", "c4_4"}) {
        const Index s = m.state_index(cell);
        for (Index a = 0; a < 4; ++a) {
            REQUIRE(m.row(s, a).entries.size() == 1);
            CHECK(m.row(s, a).entries[0] == std::pair<Index, double>{s, 1.0});
        }
    }
}

TEST_CASE("edge dynamics: blocked intended mass stays, single slip gets 0.2") {
    Scenario grid = gen_grid(default_grid_spec(5));
    const Pomdp& m = grid.pomdp;
    auto prob = [&](const char* from, const char* action, const char* to) {
        const SparseDist& row = m.row(m.state_index(from), m.action_index(action));
        for (const auto& [succ, p] : row.entries) {
            if (succ == m.state_index(to)) return p;
        }
        return 0.0;
    };
    // Corner (0,0), action E: both slips orthogonal to E are N/S; S is out.
    CHECK(prob("c0_0", "E", "c1_0") == 0.8);
    CHECK(prob("c0_0", "E", "c0_1") == 0.2);
    // Corner (0,0), action W: intended blocked, mass stays; N slip gets 0.2.
    CHECK(prob("c0_0", "W", "c0_0") == 0.8);
    CHECK(prob("c0_0", "W", "c0_1") == 0.2);
    // Interior (1,1), action N: 0.8 up, 0.1 east, 0.1 west.
    CHECK(prob("c1_1", "N", "c1_2") == 0.8);
    CHECK(prob("c1_1", "N", "c2_1") == 0.1);
    CHECK(prob("c1_1", "N", "c0_1") == 0.1);
}

TEST_CASE("the four-step corridor path mass is exactly 0.8^4 under o1->o3") {
    Scenario grid = gen_grid(default_grid_spec(5));
    ProductChain chain = build_product(grid, parse_alteration_literal("o1->o3", grid.pomdp));
    const Pomdp& m = grid.pomdp;
    const char* cells[] = {"c0_0", "c1_0", "c2_0", "c2_1", "c2_2"};
    double mass = 1.0;
    Index q = chain.q0;
    for (int step = 0; step < 4; ++step) {
        const Index next_state = m.state_index(cells[step + 1]);
        double step_prob = 0.0;
        Index next_q = -1;
        for (const auto& [succ, p] : chain.rows[q].entries) {
            if (chain.state_of(succ) == next_state) {
                step_prob = p;
                next_q = succ;
            }
        }
        REQUIRE(next_q >= 0);
        mass *= step_prob;
        q = next_q;
    }
    CHECK(mass == 0.8 * 0.8 * 0.8 * 0.8);
    CHECK(std::abs(mass - 0.4096) <= 1e-15);
    CHECK(chain.goal[q]); // the corridor ends on the hazard
}

TEST_CASE("scaled grids keep the topology and validate") {
    Scenario grid15 = gen_grid(default_grid_spec(15));
    CHECK(grid15.pomdp.num_states() == 225);
    CHECK(grid15.pomdp.num_observations() == 8);
    CHECK(validate_scenario(grid15).ok());
    ProductChain chain = build_product(grid15, Alteration::identity(8));
    CHECK(chain.num_states() == 675);
}

TEST_CASE("grid spec errors are rejected") {
    GridSpec bad = default_grid_spec(5);
    bad.hazard = bad.start;
    CHECK_THROWS_AS(gen_grid(bad), std::invalid_argument);
    GridSpec badp = default_grid_spec(5);
    badp.p_intended = 0.80005;
    CHECK_THROWS_AS(gen_grid(badp), std::invalid_argument);
    CHECK_THROWS_AS(default_grid_spec(4), std::invalid_argument);
}

TEST_CASE("frozen blank observation removes its alteration pairs") {
    GridSpec spec = default_grid_spec(5);
    spec.blank_obs_alterable = false;
    Scenario grid = gen_grid(spec);
    const Index blank = grid.pomdp.observation_index("b");
    CHECK(grid.cost_model.pair_cost(blank, blank) == 0.0);
    for (Index o = 0; o < 8; ++o) {
        if (o == blank) continue;
        CHECK_FALSE(grid.cost_model.pair_cost(blank, o).has_value());
        CHECK(grid.cost_model.pair_cost(o, blank).has_value()); // altering to blank stays legal
    }
}

TEST_CASE("knapsack reduction structure follows the construction") {
    KnapsackScenario out = gen_knapsack({{1, 2, 3, 4, 5}, {20, 30, 40, 50, 60}, 7, 100});
    const Scenario& sc = out.scenario;
    const Pomdp& m = sc.pomdp;
    CHECK(m.num_states() == 9);
    CHECK(m.num_observations() == 9);
    CHECK(m.num_actions() == 2);
    CHECK(out.threshold_r == doctest::Approx(0.25));
    CHECK(sc.cost_model.budget == 7.0);
    CHECK(sc.decoy == std::vector<Index>{m.state_index("s_bot")});

    const Index s0 = m.state_index("s0");
    const Index a = m.action_index("a");
    const Index b = m.action_index("b");
    auto prob = [&](Index from, Index action, const char* to) {
        for (const auto& [succ, p] : m.row(from, action).entries) {
            if (succ == m.state_index(to)) return p;
        }
        return 0.0;
    };
    CHECK(prob(s0, a, "s_club") == 0.5);
    CHECK(prob(s0, a, "s1") == doctest::Approx(20.0 / 400.0));
    CHECK(prob(s0, a, "s5") == doctest::Approx(60.0 / 400.0));
    CHECK(prob(s0, b, "s0") == 1.0);
    CHECK(prob(m.state_index("s3"), a, "s_top") == 1.0);
    CHECK(prob(m.state_index("s3"), b, "s_bot") == 1.0);
    CHECK(prob(m.state_index("s_club"), b, "s_top") == 1.0);
    CHECK(prob(m.state_index("s_club"), a, "s_bot") == 1.0);
    CHECK(prob(m.state_index("s_top"), a, "s_top") == 1.0);
    CHECK(prob(m.state_index("s_bot"), b, "s_bot") == 1.0);

    // Controller: a at (n0, o0) and (n1, o_i); b otherwise. Memory goes to
    // n1 from (n0, o0) and to n2 everywhere else.
    const Fsc& c = sc.fsc;
    const Index nO = m.num_observations();
    const Index o0 = m.observation_index("o0");
    CHECK(m.actions[c.action(0, o0, nO)] == "a");
    CHECK(c.nodes[c.next(0, o0, nO)] == "n1");
    CHECK(m.actions[c.action(1, m.observation_index("o2"), nO)] == "a");
    CHECK(c.nodes[c.next(1, m.observation_index("o2"), nO)] == "n2");
    CHECK(m.actions[c.action(1, m.observation_index("o_club"), nO)] == "b");
    CHECK(m.actions[c.action(2, m.observation_index("o1"), nO)] == "b");
    CHECK(m.actions[c.action(0, m.observation_index("o_club"), nO)] == "b");

    // Costs: only o_i -> o_club is permitted besides identity.
    CHECK(sc.cost_model.pair_cost(m.observation_index("o3"), m.observation_index("o_club")) == 3.0);
    CHECK_FALSE(sc.cost_model.pair_cost(m.observation_index("o3"), m.observation_index("o1"))
                    .has_value());
    CHECK_FALSE(sc.cost_model.pair_cost(m.observation_index("o_club"), m.observation_index("o0"))
                    .has_value());
}

TEST_CASE("reduction fidelity: every budget-feasible subset hits its rational value") {
    const std::vector<long long> weights = {2, 3, 4, 5};
    const std::vector<long long> values = {7, 9, 11, 13};
    const long long capacity = 9;
    KnapsackScenario out = gen_knapsack({{2, 3, 4, 5}, {7, 9, 11, 13}, 9.0, 20.0});
    const Scenario& sc = out.scenario;
    long long total = 0;
    for (long long v : values) total += v;

    for (unsigned mask = 0; mask < 16; ++mask) {
        long long weight = 0, value = 0;
        Alteration alt = Alteration::identity(sc.pomdp.num_observations());
        for (int i = 0; i < 4; ++i) {
            if (mask & (1u << i)) {
                weight += weights[i];
                value += values[i];
                alt.image[sc.pomdp.observation_index("o" + std::to_string(i + 1))] =
                    sc.pomdp.observation_index("o_club");
            }
        }
        if (weight > capacity) continue;
        VerifyResult result = verify(sc, alt);
        REQUIRE(result.cost.has_value());
        CHECK(*result.cost == static_cast<double>(weight));
        CHECK(result.within_budget);
        const double expected = static_cast<double>(value) / (2.0 * static_cast<double>(total));
        CHECK(std::abs(result.probability - expected) <= 1e-12);
    }
}

TEST_CASE("knapsack instance validation") {
    CHECK_THROWS_AS(gen_knapsack({{1, 2}, {1}, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(gen_knapsack({{}, {}, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(gen_knapsack({{0, 1}, {1, 1}, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(gen_knapsack({{1, 1}, {1, -1}, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(gen_knapsack({{1}, {1}, -1, 1}), std::invalid_argument);
}
