#include "decoyforge/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace decoyforge {

namespace {

Index sorted_index(const std::vector<std::string>& ids, std::string_view id) {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) return -1;
    return static_cast<Index>(it - ids.begin());
}

constexpr double kRowSumTolerance = 1e-9;

} // namespace

double SparseDist::sum() const {
    double total = 0.0;
    for (const auto& [idx, p] : entries) {
        (void)idx;
        total += p;
    }
    return total;
}

Index Pomdp::state_index(std::string_view id) const { return sorted_index(states, id); }
Index Pomdp::action_index(std::string_view id) const { return sorted_index(actions, id); }
Index Pomdp::observation_index(std::string_view id) const { return sorted_index(observations, id); }

Index Fsc::node_index(std::string_view id) const { return sorted_index(nodes, id); }

void CostModel::normalize_identity(Index num_observations) {
    for (Index o = 0; o < num_observations; ++o) {
        cost.emplace(key(o, o), 0.0);
    }
}

Alteration Alteration::identity(Index num_observations) {
    Alteration alt;
    alt.image.resize(num_observations);
    for (Index o = 0; o < num_observations; ++o) alt.image[o] = o;
    return alt;
}

bool Alteration::is_identity() const {
    for (std::size_t o = 0; o < image.size(); ++o) {
        if (image[o] != static_cast<Index>(o)) return false;
    }
    return true;
}

bool Scenario::is_decoy(Index s) const {
    return std::binary_search(decoy.begin(), decoy.end(), s);
}

std::string ValidationReport::to_string() const {
    std::ostringstream out;
    for (const auto& v : violations) {
        out << v.entity << ": " << v.rule;
        if (!v.detail.empty()) out << " (" << v.detail << ")";
        out << '\n';
    }
    return out.str();
}

ValidationReport validate_scenario(const Scenario& scenario) {
    ValidationReport report;
    const Pomdp& m = scenario.pomdp;
    const Fsc& c = scenario.fsc;
    auto add = [&](std::string entity, std::string rule, std::string detail = "") {
        report.violations.push_back({std::move(entity), std::move(rule), std::move(detail)});
    };

    if (m.states.empty()) add("pomdp", "state set empty");
    if (m.actions.empty()) add("pomdp", "action set empty");
    if (m.observations.empty()) add("pomdp", "observation set empty");
    if (m.initial_state < 0 || m.initial_state >= m.num_states()) {
        add("initial_state", "initial_state not in states");
    }

    if (static_cast<Index>(m.obs_of.size()) != m.num_states()) {
        add("obs_of", "obs_of not total over states");
    } else {
        for (Index s = 0; s < m.num_states(); ++s) {
            if (m.obs_of[s] < 0 || m.obs_of[s] >= m.num_observations()) {
                add("obs_of(" + m.states[s] + ")", "observation not in observation set");
            }
        }
    }

    if (m.transition.size() != static_cast<std::size_t>(m.num_states()) * m.num_actions()) {
        add("transitions", "transition table has wrong shape");
    } else {
        for (Index s = 0; s < m.num_states(); ++s) {
            for (Index a = 0; a < m.num_actions(); ++a) {
                const SparseDist& row = m.row(s, a);
                std::string entity = "transition(" + m.states[s] + "," + m.actions[a] + ")";
                if (row.empty()) {
                    add(entity, "missing distribution");
                    continue;
                }
                double total = 0.0;
                for (const auto& [succ, p] : row.entries) {
                    if (succ < 0 || succ >= m.num_states()) {
                        add(entity, "successor not in states");
                    }
                    if (p < 0.0 || p > 1.0) {
                        add(entity, "probability outside [0,1]", std::to_string(p));
                    }
                    total += p;
                }
                if (std::abs(total - 1.0) > kRowSumTolerance) {
                    add(entity, "row sum != 1", "sum=" + std::to_string(total));
                }
            }
        }
    }

    if (c.nodes.empty()) add("fsc", "node set empty");
    if (c.initial_node < 0 || c.initial_node >= c.num_nodes()) {
        add("fsc.initial_node", "initial_node not in nodes");
    }
    const std::size_t table_size = static_cast<std::size_t>(c.num_nodes()) * m.num_observations();
    if (c.action_of.size() != table_size || c.next_node.size() != table_size) {
        add("fsc", "gamma/delta tables have wrong shape");
    } else {
        for (Index n = 0; n < c.num_nodes(); ++n) {
            for (Index o = 0; o < m.num_observations(); ++o) {
                Index a = c.action(n, o, m.num_observations());
                Index nn = c.next(n, o, m.num_observations());
                std::string where = "(" + c.nodes[n] + "," + m.observations[o] + ")";
                if (a < 0) {
                    add("fsc.gamma" + where, "gamma not total");
                } else if (a >= m.num_actions()) {
                    add("fsc.gamma" + where, "action not in actions");
                }
                if (nn < 0) {
                    add("fsc.delta" + where, "delta not total");
                } else if (nn >= c.num_nodes()) {
                    add("fsc.delta" + where, "next node not in nodes");
                }
            }
        }
    }

    for (const auto& [key, value] : scenario.cost_model.cost) {
        Index from = static_cast<Index>(key >> 32);
        Index to = static_cast<Index>(key & 0xffffffffu);
        if (from < 0 || from >= m.num_observations() || to < 0 || to >= m.num_observations()) {
            add("costs", "cost pair references unknown observation");
            continue;
        }
        if (value < 0.0) {
            add("cost(" + m.observations[from] + "," + m.observations[to] + ")", "cost < 0",
                std::to_string(value));
        }
        if (from == to && value != 0.0) {
            add("cost(" + m.observations[from] + "," + m.observations[to] + ")",
                "identity cost must be 0", std::to_string(value));
        }
    }
    for (Index o = 0; o < m.num_observations(); ++o) {
        if (!scenario.cost_model.pair_cost(o, o).has_value()) {
            add("cost(" + m.observations[o] + "," + m.observations[o] + ")",
                "identity cost missing");
        }
    }
    if (scenario.cost_model.budget < 0.0) {
        add("budget", "budget < 0", std::to_string(scenario.cost_model.budget));
    }

    if (scenario.decoy.empty()) {
        add("decoy", "decoy set empty");
    }
    for (Index s : scenario.decoy) {
        if (s < 0 || s >= m.num_states()) add("decoy", "decoy state not in states");
    }
    if (!std::is_sorted(scenario.decoy.begin(), scenario.decoy.end())) {
        add("decoy", "decoy indices not sorted");
    }

    return report;
}

std::optional<double> alteration_cost(const CostModel& cost_model, const Alteration& alt) {
    double total = 0.0;
    for (std::size_t o = 0; o < alt.image.size(); ++o) {
        auto c = cost_model.pair_cost(static_cast<Index>(o), alt.image[o]);
        if (!c.has_value()) return std::nullopt;
        total += *c;
    }
    return total;
}

Alteration parse_alteration_literal(std::string_view text, const Pomdp& pomdp) {
    Alteration alt = Alteration::identity(pomdp.num_observations());
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find(';', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view pair = text.substr(pos, end - pos);
        pos = end + 1;
        if (pair.empty()) continue;
        std::size_t arrow = pair.find("->");
        if (arrow == std::string_view::npos) {
            throw std::invalid_argument("alteration pair '" + std::string(pair) +
                                        "' is not of the form from->to");
        }
        std::string_view from = pair.substr(0, arrow);
        std::string_view to = pair.substr(arrow + 2);
        Index from_idx = pomdp.observation_index(from);
        Index to_idx = pomdp.observation_index(to);
        if (from_idx < 0) throw std::invalid_argument("unknown observation '" + std::string(from) + "'");
        if (to_idx < 0) throw std::invalid_argument("unknown observation '" + std::string(to) + "'");
        alt.image[from_idx] = to_idx;
    }
    return alt;
}

std::string format_alteration(const Alteration& alt, const Pomdp& pomdp) {
    std::string out;
    for (std::size_t o = 0; o < alt.image.size(); ++o) {
        if (alt.image[o] == static_cast<Index>(o)) continue;
        if (!out.empty()) out += ';';
        out += pomdp.observations[o];
        out += "->";
        out += pomdp.observations[alt.image[o]];
    }
    return out;
}

} // namespace decoyforge
