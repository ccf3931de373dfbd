#include "decoyforge/generators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace decoyforge {

namespace {

std::string cell_id(const Cell& c, int width) {
    auto pad = [width](int v) {
        std::string s = std::to_string(v);
        while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
        return s;
    };
    return "c" + pad(c.x) + "_" + pad(c.y);
}

int digits(int v) {
    int d = 1;
    while (v >= 10) {
        v /= 10;
        ++d;
    }
    return d;
}

bool in_grid(int n, int x, int y) { return x >= 0 && x < n && y >= 0 && y < n; }

} // namespace

GridSpec default_grid_spec(int n) {
    if (n < 5) throw std::invalid_argument("grid side length must be at least 5");
    GridSpec spec;
    spec.n = n;
    // Anchor cell plus footprint offsets of the 5x5 reference layout.
    struct Layout {
        const char* id;
        Cell anchor;
        std::vector<Cell> offsets;
    };
    const std::vector<Layout> layout = {
        {"o0", {0, 0}, {{0, 0}}},
        {"o1", {2, 0}, {{0, 0}, {0, 1}}},
        {"o2", {0, 2}, {{0, 0}, {1, 0}}},
        {"o3", {4, 0}, {{0, 0}, {0, 1}}},
        {"o4", {0, 4}, {{0, 0}, {1, 0}}},
        {"o5", {4, 3}, {{0, 0}}},
        {"o6", {3, 4}, {{0, 0}}},
    };
    const double scale = static_cast<double>(n - 1) / 4.0;
    auto scaled = [&](const Cell& c) {
        return Cell{static_cast<int>(std::llround(c.x * scale)),
                    static_cast<int>(std::llround(c.y * scale))};
    };
    for (const Layout& s : layout) {
        SensorSpec sensor;
        sensor.id = s.id;
        Cell anchor = scaled(s.anchor);
        for (const Cell& off : s.offsets) {
            Cell cell{anchor.x + off.x, anchor.y + off.y};
            if (!in_grid(n, cell.x, cell.y)) {
                cell = Cell{std::clamp(cell.x, 0, n - 1), std::clamp(cell.y, 0, n - 1)};
            }
            sensor.covered.push_back(cell);
        }
        spec.sensors.push_back(std::move(sensor));
    }
    spec.start = {0, 0};
    spec.goal = {n - 1, n - 1};
    spec.hazard = scaled({2, 2});
    return spec;
}

Scenario gen_grid(const GridSpec& spec) {
    const int n = spec.n;
    if (n < 2) throw std::invalid_argument("grid side length must be at least 2");
    if (!in_grid(n, spec.start.x, spec.start.y) || !in_grid(n, spec.goal.x, spec.goal.y) ||
        !in_grid(n, spec.hazard.x, spec.hazard.y)) {
        throw std::invalid_argument("start/goal/hazard must lie inside the grid");
    }
    if (spec.start == spec.hazard) throw std::invalid_argument("start cell must not be the hazard");
    if (spec.start == spec.goal) throw std::invalid_argument("start cell must not be the goal");
    // Probabilities are built as integer thousandths so the row mass is exact
    // by construction before the final float conversion.
    const long long p_milli = std::llround(spec.p_intended * 1000.0);
    if (std::abs(spec.p_intended * 1000.0 - static_cast<double>(p_milli)) > 1e-9 || p_milli < 0 ||
        p_milli > 1000) {
        throw std::invalid_argument("p_intended must be a probability with at most 3 decimals");
    }
    const long long rest = 1000 - p_milli;
    if (rest % 2 != 0) throw std::invalid_argument("1 - p_intended must split evenly in thousandths");

    Scenario scenario;
    Pomdp& m = scenario.pomdp;
    const int width = digits(n - 1);

    std::map<std::pair<int, int>, std::string> obs_by_cell;
    for (const SensorSpec& sensor : spec.sensors) {
        for (const Cell& cell : sensor.covered) {
            if (!in_grid(n, cell.x, cell.y)) {
                throw std::invalid_argument("sensor '" + sensor.id + "' covers a cell outside the grid");
            }
            obs_by_cell.emplace(std::make_pair(cell.x, cell.y), sensor.id);
        }
    }

    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
            m.states.push_back(cell_id({x, y}, width));
        }
    }
    std::sort(m.states.begin(), m.states.end());
    m.actions = {"E", "N", "S", "W"};
    m.observations.push_back("b");
    for (const SensorSpec& sensor : spec.sensors) m.observations.push_back(sensor.id);
    std::sort(m.observations.begin(), m.observations.end());
    if (std::adjacent_find(m.observations.begin(), m.observations.end()) != m.observations.end()) {
        throw std::invalid_argument("duplicate sensor id");
    }

    auto state_of = [&](int x, int y) { return m.state_index(cell_id({x, y}, width)); };
    m.initial_state = state_of(spec.start.x, spec.start.y);

    m.obs_of.assign(m.states.size(), -1);
    const Index blank = m.observation_index("b");
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
            auto it = obs_by_cell.find({x, y});
            m.obs_of[state_of(x, y)] =
                it == obs_by_cell.end() ? blank : m.observation_index(it->second);
        }
    }

    // dx, dy per action index in sorted order E, N, S, W.
    const int dx[4] = {1, 0, 0, -1};
    const int dy[4] = {0, 1, -1, 0};
    m.transition.assign(m.states.size() * 4, SparseDist{});
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
            const Index s = state_of(x, y);
            const bool absorbing = (Cell{x, y} == spec.goal) || (Cell{x, y} == spec.hazard);
            for (int a = 0; a < 4; ++a) {
                std::map<Index, long long> milli;
                if (absorbing) {
                    milli[s] = 1000;
                } else {
                    const int ix = x + dx[a];
                    const int iy = y + dy[a];
                    if (in_grid(n, ix, iy)) {
                        milli[state_of(ix, iy)] += p_milli;
                    } else {
                        milli[s] += p_milli;
                    }
                    // Orthogonal slips: swap the displacement axes.
                    const int ox[2] = {dy[a], -dy[a]};
                    const int oy[2] = {dx[a], -dx[a]};
                    const bool ok0 = in_grid(n, x + ox[0], y + oy[0]);
                    const bool ok1 = in_grid(n, x + ox[1], y + oy[1]);
                    if (ok0 && ok1) {
                        milli[state_of(x + ox[0], y + oy[0])] += rest / 2;
                        milli[state_of(x + ox[1], y + oy[1])] += rest / 2;
                    } else if (ok0) {
                        milli[state_of(x + ox[0], y + oy[0])] += rest;
                    } else if (ok1) {
                        milli[state_of(x + ox[1], y + oy[1])] += rest;
                    } else {
                        milli[s] += rest;
                    }
                }
                SparseDist& row = m.row(s, static_cast<Index>(a));
                for (const auto& [target, thousandths] : milli) {
                    if (thousandths == 0) continue;
                    row.entries.emplace_back(target, static_cast<double>(thousandths) / 1000.0);
                }
            }
        }
    }

    Fsc& c = scenario.fsc;
    c.nodes = {"n0", "n1", "n2"};
    c.initial_node = 0;
    const Index nO = m.num_observations();
    c.action_of.assign(3 * nO, -1);
    c.next_node.assign(3 * nO, -1);
    const Index act_e = m.action_index("E");
    const Index act_n = m.action_index("N");
    auto obs_class_east = [&](Index o) {
        const std::string& id = m.observations[o];
        return id == "o0" || id == "o1" || id == "o4" || id == "o6";
    };
    for (Index node = 0; node < 3; ++node) {
        for (Index o = 0; o < nO; ++o) {
            Index a;
            Index next;
            if (o == blank) {
                // Blank keeps the memory and repeats the remembered class
                // action; n1 remembers east, n2 remembers north.
                a = (node == 2) ? act_n : act_e;
                next = node;
            } else if (obs_class_east(o)) {
                a = act_e;
                next = 1;
            } else {
                a = act_n;
                next = 2;
            }
            c.action_of[static_cast<std::size_t>(node) * nO + o] = a;
            c.next_node[static_cast<std::size_t>(node) * nO + o] = next;
        }
    }

    for (Index from = 0; from < nO; ++from) {
        for (Index to = 0; to < nO; ++to) {
            if (from == to) {
                scenario.cost_model.set_pair_cost(from, to, 0.0);
            } else if (from != blank || spec.blank_obs_alterable) {
                scenario.cost_model.set_pair_cost(from, to, 1.0);
            }
        }
    }
    scenario.cost_model.budget = spec.budget;

    scenario.decoy = {state_of(spec.hazard.x, spec.hazard.y)};
    return scenario;
}

KnapsackScenario gen_knapsack(const KnapsackInstance& inst) {
    const std::size_t n = inst.weights.size();
    if (n == 0 || inst.values.size() != n) {
        throw std::invalid_argument("weights and values must be non-empty and equally sized");
    }
    for (double w : inst.weights) {
        if (!(w > 0.0)) throw std::invalid_argument("weights must be positive");
    }
    for (double v : inst.values) {
        if (!(v > 0.0)) throw std::invalid_argument("values must be positive");
    }
    if (inst.capacity < 0.0 || inst.threshold < 0.0) {
        throw std::invalid_argument("capacity and threshold must be nonnegative");
    }

    KnapsackScenario out;
    Scenario& scenario = out.scenario;
    Pomdp& m = scenario.pomdp;

    std::vector<std::string> item_states, item_obs;
    for (std::size_t i = 1; i <= n; ++i) {
        item_states.push_back("s" + std::to_string(i));
        item_obs.push_back("o" + std::to_string(i));
    }
    m.states = item_states;
    m.states.insert(m.states.end(), {"s0", "s_bot", "s_club", "s_top"});
    std::sort(m.states.begin(), m.states.end());
    m.observations = item_obs;
    m.observations.insert(m.observations.end(), {"o0", "o_bot", "o_club", "o_top"});
    std::sort(m.observations.begin(), m.observations.end());
    m.actions = {"a", "b"};

    m.initial_state = m.state_index("s0");
    m.obs_of.assign(m.states.size(), -1);
    m.obs_of[m.state_index("s0")] = m.observation_index("o0");
    m.obs_of[m.state_index("s_bot")] = m.observation_index("o_bot");
    m.obs_of[m.state_index("s_club")] = m.observation_index("o_club");
    m.obs_of[m.state_index("s_top")] = m.observation_index("o_top");
    for (std::size_t i = 1; i <= n; ++i) {
        m.obs_of[m.state_index("s" + std::to_string(i))] =
            m.observation_index("o" + std::to_string(i));
    }

    const Index act_a = m.action_index("a");
    const Index act_b = m.action_index("b");
    const Index s0 = m.state_index("s0");
    const Index s_bot = m.state_index("s_bot");
    const Index s_club = m.state_index("s_club");
    const Index s_top = m.state_index("s_top");
    m.transition.assign(m.states.size() * 2, SparseDist{});

    double total_value = 0.0;
    for (double v : inst.values) total_value += v;
    const double denom = 2.0 * total_value;

    SparseDist& from_start = m.row(s0, act_a);
    for (std::size_t i = 1; i <= n; ++i) {
        from_start.entries.emplace_back(m.state_index("s" + std::to_string(i)),
                                        inst.values[i - 1] / denom);
    }
    from_start.entries.emplace_back(s_club, 0.5);
    std::sort(from_start.entries.begin(), from_start.entries.end(),
              [](const auto& lhs, const auto& rhs) { return lhs.first < rhs.first; });
    m.row(s0, act_b).entries.emplace_back(s0, 1.0);
    for (std::size_t i = 1; i <= n; ++i) {
        const Index si = m.state_index("s" + std::to_string(i));
        m.row(si, act_a).entries.emplace_back(s_top, 1.0);
        m.row(si, act_b).entries.emplace_back(s_bot, 1.0);
    }
    m.row(s_club, act_b).entries.emplace_back(s_top, 1.0);
    m.row(s_club, act_a).entries.emplace_back(s_bot, 1.0);
    for (Index a : {act_a, act_b}) {
        m.row(s_top, a).entries.emplace_back(s_top, 1.0);
        m.row(s_bot, a).entries.emplace_back(s_bot, 1.0);
    }

    Fsc& c = scenario.fsc;
    c.nodes = {"n0", "n1", "n2"};
    c.initial_node = 0;
    const Index nO = m.num_observations();
    c.action_of.assign(3 * nO, act_b);
    c.next_node.assign(3 * nO, 2);
    const Index o0 = m.observation_index("o0");
    c.action_of[0 * nO + o0] = act_a;
    c.next_node[0 * nO + o0] = 1;
    for (std::size_t i = 1; i <= n; ++i) {
        const Index oi = m.observation_index("o" + std::to_string(i));
        c.action_of[1 * static_cast<std::size_t>(nO) + oi] = act_a;
    }

    scenario.cost_model.normalize_identity(nO);
    const Index o_club = m.observation_index("o_club");
    for (std::size_t i = 1; i <= n; ++i) {
        scenario.cost_model.set_pair_cost(m.observation_index("o" + std::to_string(i)), o_club,
                                          inst.weights[i - 1]);
    }
    scenario.cost_model.budget = inst.capacity;

    scenario.decoy = {s_bot};
    out.threshold_r = inst.threshold / denom;
    return out;
}

} // namespace decoyforge
