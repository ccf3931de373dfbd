#include "decoyforge/scenario_io.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace decoyforge {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& message) { throw ScenarioParseError(message); }

void require_keys(const json& obj, const std::string& where,
                  std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional = {}) {
    for (const char* key : required) {
        if (!obj.contains(key)) fail(where + ": missing required key '" + key + "'");
    }
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = std::any_of(required.begin(), required.end(),
                                 [&](const char* k) { return it.key() == k; }) ||
                     std::any_of(optional.begin(), optional.end(),
                                 [&](const char* k) { return it.key() == k; });
        if (!known) fail(where + ": unknown key '" + it.key() + "'");
    }
}

std::vector<std::string> parse_id_array(const json& arr, const std::string& where) {
    if (!arr.is_array() || arr.empty()) fail(where + ": expected non-empty array of ids");
    std::vector<std::string> ids;
    ids.reserve(arr.size());
    for (const auto& entry : arr) {
        if (!entry.is_string()) fail(where + ": id entries must be strings");
        ids.push_back(entry.get<std::string>());
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        fail(where + ": duplicate id");
    }
    return ids;
}

std::string as_id(const json& value, const std::string& where) {
    if (!value.is_string()) fail(where + ": expected a string id");
    return value.get<std::string>();
}

double as_number(const json& value, const std::string& where) {
    if (!value.is_number()) fail(where + ": expected a number");
    return value.get<double>();
}

Index resolve(const std::vector<std::string>& ids, const std::string& id, const std::string& kind,
              const std::string& where) {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) {
        fail(where + ": unknown " + kind + " id '" + id + "'");
    }
    return static_cast<Index>(it - ids.begin());
}

} // namespace

Scenario parse_scenario(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text, /*cb=*/nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        fail(std::string("scenario document is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) fail("scenario document must be a JSON object");
    require_keys(doc, "scenario",
                 {"states", "actions", "observations", "initial_state", "obs_of", "transitions",
                  "fsc", "costs", "budget", "decoy"});

    Scenario scenario;
    Pomdp& m = scenario.pomdp;
    m.states = parse_id_array(doc["states"], "states");
    m.actions = parse_id_array(doc["actions"], "actions");
    m.observations = parse_id_array(doc["observations"], "observations");
    m.initial_state = resolve(m.states, as_id(doc["initial_state"], "initial_state"), "state",
                              "initial_state");

    const json& obs_of = doc["obs_of"];
    if (!obs_of.is_object()) fail("obs_of: expected an object mapping state to observation");
    m.obs_of.assign(m.states.size(), -1);
    for (auto it = obs_of.begin(); it != obs_of.end(); ++it) {
        Index s = resolve(m.states, it.key(), "state", "obs_of");
        if (m.obs_of[s] != -1) fail("obs_of: duplicate entry for state '" + it.key() + "'");
        m.obs_of[s] = resolve(m.observations, as_id(it.value(), "obs_of"), "observation", "obs_of");
    }
    for (Index s = 0; s < m.num_states(); ++s) {
        if (m.obs_of[s] == -1) fail("obs_of: missing entry for state '" + m.states[s] + "'");
    }

    const json& transitions = doc["transitions"];
    if (!transitions.is_array()) fail("transitions: expected an array");
    m.transition.assign(static_cast<std::size_t>(m.num_states()) * m.num_actions(), SparseDist{});
    for (const auto& row : transitions) {
        if (!row.is_object()) fail("transitions: entries must be objects");
        require_keys(row, "transitions entry", {"state", "action", "successors"});
        Index s = resolve(m.states, as_id(row["state"], "transitions.state"), "state", "transitions");
        Index a = resolve(m.actions, as_id(row["action"], "transitions.action"), "action", "transitions");
        SparseDist& dist = m.row(s, a);
        if (!dist.empty()) {
            fail("transitions: duplicate row for (" + m.states[s] + "," + m.actions[a] + ")");
        }
        const json& succs = row["successors"];
        if (!succs.is_array() || succs.empty()) {
            fail("transitions: successors must be a non-empty array");
        }
        for (const auto& succ : succs) {
            if (!succ.is_object()) fail("transitions: successor entries must be objects");
            require_keys(succ, "successor entry", {"state", "prob"});
            Index target = resolve(m.states, as_id(succ["state"], "successors.state"), "state",
                                   "transitions.successors");
            double p = as_number(succ["prob"], "successors.prob");
            dist.entries.emplace_back(target, p);
        }
        std::sort(dist.entries.begin(), dist.entries.end(),
                  [](const auto& lhs, const auto& rhs) { return lhs.first < rhs.first; });
        for (std::size_t i = 1; i < dist.entries.size(); ++i) {
            if (dist.entries[i].first == dist.entries[i - 1].first) {
                fail("transitions: duplicate successor '" + m.states[dist.entries[i].first] +
                     "' in row (" + m.states[s] + "," + m.actions[a] + ")");
            }
        }
    }

    const json& fsc = doc["fsc"];
    if (!fsc.is_object()) fail("fsc: expected an object");
    require_keys(fsc, "fsc", {"nodes", "initial_node", "rules"});
    Fsc& c = scenario.fsc;
    c.nodes = parse_id_array(fsc["nodes"], "fsc.nodes");
    c.initial_node = resolve(c.nodes, as_id(fsc["initial_node"], "fsc.initial_node"), "node",
                             "fsc.initial_node");
    const std::size_t table = static_cast<std::size_t>(c.num_nodes()) * m.num_observations();
    c.action_of.assign(table, -1);
    c.next_node.assign(table, -1);
    const json& rules = fsc["rules"];
    if (!rules.is_array()) fail("fsc.rules: expected an array");
    for (const auto& rule : rules) {
        if (!rule.is_object()) fail("fsc.rules: entries must be objects");
        require_keys(rule, "fsc rule", {"node", "observation", "action", "next_node"});
        Index n = resolve(c.nodes, as_id(rule["node"], "fsc.rules.node"), "node", "fsc.rules");
        Index o = resolve(m.observations, as_id(rule["observation"], "fsc.rules.observation"),
                          "observation", "fsc.rules");
        std::size_t slot = static_cast<std::size_t>(n) * m.num_observations() + o;
        if (c.action_of[slot] != -1) {
            fail("fsc.rules: duplicate rule for (" + c.nodes[n] + "," + m.observations[o] + ")");
        }
        c.action_of[slot] =
            resolve(m.actions, as_id(rule["action"], "fsc.rules.action"), "action", "fsc.rules");
        c.next_node[slot] = resolve(c.nodes, as_id(rule["next_node"], "fsc.rules.next_node"), "node",
                                    "fsc.rules");
    }

    const json& costs = doc["costs"];
    if (!costs.is_array()) fail("costs: expected an array");
    for (const auto& entry : costs) {
        if (!entry.is_object()) fail("costs: entries must be objects");
        require_keys(entry, "cost entry", {"from", "to", "cost"});
        Index from = resolve(m.observations, as_id(entry["from"], "costs.from"), "observation", "costs");
        Index to = resolve(m.observations, as_id(entry["to"], "costs.to"), "observation", "costs");
        if (scenario.cost_model.pair_cost(from, to).has_value()) {
            fail("costs: duplicate pair (" + m.observations[from] + "," + m.observations[to] + ")");
        }
        scenario.cost_model.set_pair_cost(from, to, as_number(entry["cost"], "costs.cost"));
    }
    scenario.cost_model.normalize_identity(m.num_observations());
    scenario.cost_model.budget = as_number(doc["budget"], "budget");

    const json& decoy = doc["decoy"];
    if (!decoy.is_array()) fail("decoy: expected an array of state ids");
    for (const auto& entry : decoy) {
        scenario.decoy.push_back(resolve(m.states, as_id(entry, "decoy"), "state", "decoy"));
    }
    std::sort(scenario.decoy.begin(), scenario.decoy.end());
    scenario.decoy.erase(std::unique(scenario.decoy.begin(), scenario.decoy.end()),
                         scenario.decoy.end());

    return scenario;
}

std::string serialize_scenario(const Scenario& scenario) {
    const Pomdp& m = scenario.pomdp;
    const Fsc& c = scenario.fsc;
    ordered_json doc;
    doc["states"] = m.states;
    doc["actions"] = m.actions;
    doc["observations"] = m.observations;
    doc["initial_state"] = m.states[m.initial_state];

    ordered_json obs_of = ordered_json::object();
    for (Index s = 0; s < m.num_states(); ++s) {
        obs_of[m.states[s]] = m.observations[m.obs_of[s]];
    }
    doc["obs_of"] = std::move(obs_of);

    ordered_json transitions = ordered_json::array();
    for (Index s = 0; s < m.num_states(); ++s) {
        for (Index a = 0; a < m.num_actions(); ++a) {
            const SparseDist& dist = m.row(s, a);
            if (dist.empty()) continue;
            ordered_json row;
            row["state"] = m.states[s];
            row["action"] = m.actions[a];
            ordered_json succs = ordered_json::array();
            for (const auto& [target, p] : dist.entries) {
                succs.push_back({{"state", m.states[target]}, {"prob", p}});
            }
            row["successors"] = std::move(succs);
            transitions.push_back(std::move(row));
        }
    }
    doc["transitions"] = std::move(transitions);

    ordered_json fsc;
    fsc["nodes"] = c.nodes;
    fsc["initial_node"] = c.nodes[c.initial_node];
    ordered_json rules = ordered_json::array();
    for (Index n = 0; n < c.num_nodes(); ++n) {
        for (Index o = 0; o < m.num_observations(); ++o) {
            Index a = c.action(n, o, m.num_observations());
            Index nn = c.next(n, o, m.num_observations());
            if (a < 0 && nn < 0) continue;
            ordered_json rule;
            rule["node"] = c.nodes[n];
            rule["observation"] = m.observations[o];
            rule["action"] = a >= 0 ? m.actions[a] : "";
            rule["next_node"] = nn >= 0 ? c.nodes[nn] : "";
            rules.push_back(std::move(rule));
        }
    }
    fsc["rules"] = std::move(rules);
    doc["fsc"] = std::move(fsc);

    // Sorted (from, to) emission; identity pairs are implicit.
    std::vector<std::pair<Index, Index>> pairs;
    pairs.reserve(scenario.cost_model.cost.size());
    for (const auto& [key, value] : scenario.cost_model.cost) {
        (void)value;
        pairs.emplace_back(static_cast<Index>(key >> 32), static_cast<Index>(key & 0xffffffffu));
    }
    std::sort(pairs.begin(), pairs.end());
    ordered_json costs = ordered_json::array();
    for (const auto& [from, to] : pairs) {
        double value = *scenario.cost_model.pair_cost(from, to);
        if (from == to && value == 0.0) continue;
        costs.push_back({{"from", m.observations[from]},
                         {"to", m.observations[to]},
                         {"cost", value}});
    }
    doc["costs"] = std::move(costs);
    doc["budget"] = scenario.cost_model.budget;

    ordered_json decoy = ordered_json::array();
    for (Index s : scenario.decoy) decoy.push_back(m.states[s]);
    doc["decoy"] = std::move(decoy);

    return doc.dump(2) + "\n";
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open scenario file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str());
}

void write_scenario_file(const Scenario& scenario, const std::string& path,
                         const std::string& header_comment) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot open output file '" + path + "'");
    if (!header_comment.empty()) {
        std::istringstream lines(header_comment);
        std::string line;
        while (std::getline(lines, line)) out << "// " << line << "\n";
    }
    out << serialize_scenario(scenario);
    if (!out) fail("failed writing scenario to '" + path + "'");
}

} // namespace decoyforge
