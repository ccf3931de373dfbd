#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "decoyforge/generators.hpp"
#include "decoyforge/model.hpp"
#include "decoyforge/scenario_io.hpp"
#include "test_support.hpp"

using namespace decoyforge;

namespace {

Scenario toy_scenario() {
    Scenario scenario;
    Pomdp& m = scenario.pomdp;
    m.states = {"s0", "s1"};
    m.actions = {"go"};
    m.observations = {"w0", "w1"};
    m.initial_state = 0;
    m.obs_of = {0, 1};
    m.transition.assign(2, SparseDist{});
    m.row(0, 0).entries = {{1, 1.0}};
    m.row(1, 0).entries = {{1, 1.0}};
    Fsc& c = scenario.fsc;
    c.nodes = {"n0"};
    c.initial_node = 0;
    c.action_of = {0, 0};
    c.next_node = {0, 0};
    scenario.cost_model.normalize_identity(2);
    scenario.cost_model.budget = 1.0;
    scenario.decoy = {1};
    return scenario;
}

} // namespace

TEST_CASE("row sum violation is reported with the offending row") {
    Scenario scenario = toy_scenario();
    scenario.pomdp.row(0, 0).entries = {{1, 0.9}};
    ValidationReport report = validate_scenario(scenario);
    REQUIRE_FALSE(report.ok());
    bool found = false;
    for (const auto& v : report.violations) {
        if (v.rule == "row sum != 1" && v.entity == "transition(s0,go)") found = true;
    }
    CHECK(found);
}

TEST_CASE("generated scenarios validate cleanly") {
    CHECK(validate_scenario(gen_grid(default_grid_spec(5))).ok());
    CHECK(validate_scenario(gen_grid(default_grid_spec(15))).ok());
    KnapsackInstance inst{{1, 2, 3, 4, 5}, {20, 30, 40, 50, 60}, 7, 100};
    CHECK(validate_scenario(gen_knapsack(inst).scenario).ok());
}

TEST_CASE("missing FSC entries are totality violations") {
    Scenario scenario = toy_scenario();
    scenario.fsc.action_of[1] = -1;
    ValidationReport report = validate_scenario(scenario);
    REQUIRE_FALSE(report.ok());
    bool found = false;
    for (const auto& v : report.violations) {
        if (v.rule == "gamma not total") found = true;
    }
    CHECK(found);
}

TEST_CASE("identity cost must be present and zero") {
    Scenario scenario = toy_scenario();
    scenario.cost_model.set_pair_cost(0, 0, 2.0);
    ValidationReport report = validate_scenario(scenario);
    bool nonzero_identity = false;
    for (const auto& v : report.violations) {
        if (v.rule == "identity cost must be 0") nonzero_identity = true;
    }
    CHECK(nonzero_identity);

    Scenario missing = toy_scenario();
    missing.cost_model.cost.erase(CostModel::key(1, 1));
    report = validate_scenario(missing);
    bool missing_identity = false;
    for (const auto& v : report.violations) {
        if (v.rule == "identity cost missing") missing_identity = true;
    }
    CHECK(missing_identity);
}

TEST_CASE("alteration cost: identity is free, forbidden pairs poison the sum") {
    KnapsackInstance inst{{1, 2, 3, 4, 5}, {20, 30, 40, 50, 60}, 7, 100};
    Scenario scenario = gen_knapsack(inst).scenario;
    const Index nO = scenario.pomdp.num_observations();

    CHECK(alteration_cost(scenario.cost_model, Alteration::identity(nO)) == 0.0);

    Alteration alt = parse_alteration_literal("o1->o_club;o2->o_club;o4->o_club", scenario.pomdp);
    auto cost = alteration_cost(scenario.cost_model, alt);
    REQUIRE(cost.has_value());
    CHECK(*cost == doctest::Approx(7.0)); // weights 1 + 2 + 4

    Alteration forbidden = parse_alteration_literal("o_club->o0", scenario.pomdp);
    CHECK_FALSE(alteration_cost(scenario.cost_model, forbidden).has_value());
}

TEST_CASE("alteration cost is additive in single-observation changes") {
    Scenario grid = gen_grid(default_grid_spec(5));
    const Index nO = grid.pomdp.num_observations();
    Alteration alt = Alteration::identity(nO);
    double expected = 0.0;
    for (Index o = 0; o < nO; ++o) {
        const Index img = (o + 1) % nO;
        Alteration next = alt;
        next.image[o] = img;
        const double before = *alteration_cost(grid.cost_model, alt);
        const double after = *alteration_cost(grid.cost_model, next);
        CHECK(after - before == doctest::Approx(*grid.cost_model.pair_cost(o, img)));
        alt = next;
        expected += *grid.cost_model.pair_cost(o, img);
    }
    CHECK(*alteration_cost(grid.cost_model, alt) == doctest::Approx(expected));
}

TEST_CASE("serialize/parse round trip is structural identity") {
    for (std::uint32_t seed : {1u, 2u, 3u}) {
        Scenario scenario = testsupport::random_scenario(seed);
        Scenario round = parse_scenario(serialize_scenario(scenario));
        CHECK(round == scenario);
    }
    Scenario grid = gen_grid(default_grid_spec(5));
    CHECK(parse_scenario(serialize_scenario(grid)) == grid);
    CHECK(serialize_scenario(grid) == serialize_scenario(grid));
}

TEST_CASE("distinct scenarios serialize to distinct documents") {
    Scenario a = gen_grid(default_grid_spec(5));
    Scenario b = a;
    b.cost_model.budget = 2.0;
    CHECK(serialize_scenario(a) != serialize_scenario(b));
}

TEST_CASE("parser names the missing field") {
    Scenario grid = gen_grid(default_grid_spec(5));
    std::string doc = serialize_scenario(grid);
    const auto pos = doc.find("\"initial_state\"");
    REQUIRE(pos != std::string::npos);
    const auto end = doc.find('\n', pos);
    doc.erase(pos, end - pos + 1);
    CHECK_THROWS_WITH_AS(parse_scenario(doc), doctest::Contains("initial_state"),
                         ScenarioParseError);
}

TEST_CASE("parser rejects unknown ids and unknown keys") {
    Scenario grid = gen_grid(default_grid_spec(5));
    std::string doc = serialize_scenario(grid);

    std::string bad_action = doc;
    const auto pos = bad_action.find("\"action\": \"E\"");
    REQUIRE(pos != std::string::npos);
    bad_action.replace(pos, 13, "\"action\": \"FLY\"");
    CHECK_THROWS_WITH_AS(parse_scenario(bad_action), doctest::Contains("unknown action id 'FLY'"),
                         ScenarioParseError);

    std::string extra_key = doc;
    extra_key.insert(extra_key.find("\"states\""), "\"mystery\": 1,\n  ");
    CHECK_THROWS_WITH_AS(parse_scenario(extra_key), doctest::Contains("unknown key 'mystery'"),
                         ScenarioParseError);
}

TEST_CASE("parser accepts generator comment headers") {
    Scenario grid = gen_grid(default_grid_spec(5));
    std::string doc = "// generator: grid n=5\n" + serialize_scenario(grid);
    CHECK(parse_scenario(doc) == grid);
}

TEST_CASE("alteration literals parse and format round trip") {
    Scenario grid = gen_grid(default_grid_spec(5));
    Alteration alt = parse_alteration_literal("o1->o3;o2->o0", grid.pomdp);
    CHECK(format_alteration(alt, grid.pomdp) == "o1->o3;o2->o0");
    CHECK(parse_alteration_literal("", grid.pomdp).is_identity());
    CHECK(format_alteration(Alteration::identity(grid.pomdp.num_observations()), grid.pomdp) ==
          "");
    CHECK_THROWS_AS(parse_alteration_literal("o9->o1", grid.pomdp), std::invalid_argument);
    CHECK_THROWS_AS(parse_alteration_literal("o1-o3", grid.pomdp), std::invalid_argument);
}
