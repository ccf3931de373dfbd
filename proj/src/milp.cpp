#include "decoyforge/milp.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "decoyforge/reach.hpp"

namespace decoyforge {

namespace {

std::string sanitize(const std::string& id) {
    std::string out = id;
    for (char& ch : out) {
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_') ch = '_';
    }
    return out;
}

std::string number(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

/// Successor triples of (s, n, o): (s', delta(n,o), o') for every
/// positive-probability s' and every permitted image o' of O(s').
template <typename Visit>
void for_each_triple_successor(const Scenario& scenario, const ExtendedProduct& ext, Index s,
                               Index n, Index o, Visit&& visit) {
    const Pomdp& m = scenario.pomdp;
    const Index nO = ext.num_observations;
    const Index a = ext.gamma[static_cast<std::size_t>(n) * nO + o];
    const Index n_next = ext.delta[static_cast<std::size_t>(n) * nO + o];
    for (const auto& [s_next, p] : m.row(s, a).entries) {
        if (p <= 0.0) continue;
        const Index obs = m.obs_of[s_next];
        for (Index img = 0; img < nO; ++img) {
            if (!scenario.cost_model.pair_cost(obs, img).has_value()) continue;
            visit(s_next, n_next, img, p);
        }
    }
}

/// Triples with a permitted-image path to a decoy triple. Everything else
/// can never carry positive reach probability under any alteration.
std::vector<bool> co_reachable_triples(const Scenario& scenario, const ExtendedProduct& ext) {
    const std::size_t count = ext.triple_count();
    std::vector<std::vector<Index>> preds(count);
    std::vector<bool> reach(count, false);
    std::vector<Index> stack;
    for (Index s = 0; s < ext.num_states; ++s) {
        const bool decoy = scenario.is_decoy(s);
        for (Index n = 0; n < ext.num_nodes; ++n) {
            for (Index o = 0; o < ext.num_observations; ++o) {
                const std::size_t t = ext.pack(s, n, o);
                if (decoy) {
                    reach[t] = true;
                    stack.push_back(static_cast<Index>(t));
                    continue;
                }
                for_each_triple_successor(scenario, ext, s, n, o,
                                          [&](Index s2, Index n2, Index o2, double) {
                                              preds[ext.pack(s2, n2, o2)].push_back(
                                                  static_cast<Index>(t));
                                          });
            }
        }
    }
    while (!stack.empty()) {
        const Index t = stack.back();
        stack.pop_back();
        for (Index p : preds[t]) {
            if (!reach[p]) {
                reach[p] = true;
                stack.push_back(p);
            }
        }
    }
    return reach;
}

/// Triples forward-reachable from (s0, n0, .) through permitted images.
std::vector<bool> forward_reachable_triples(const Scenario& scenario, const ExtendedProduct& ext) {
    const Pomdp& m = scenario.pomdp;
    std::vector<bool> seen(ext.triple_count(), false);
    std::vector<std::size_t> stack;
    const Index o0 = m.obs_of[m.initial_state];
    for (Index o = 0; o < ext.num_observations; ++o) {
        if (!scenario.cost_model.pair_cost(o0, o).has_value()) continue;
        const std::size_t t = ext.pack(m.initial_state, scenario.fsc.initial_node, o);
        seen[t] = true;
        stack.push_back(t);
    }
    while (!stack.empty()) {
        const std::size_t t = stack.back();
        stack.pop_back();
        const Index o = static_cast<Index>(t % ext.num_observations);
        const Index n = static_cast<Index>((t / ext.num_observations) % ext.num_nodes);
        const Index s = static_cast<Index>(t / ext.num_observations / ext.num_nodes);
        if (scenario.is_decoy(s)) continue;
        for_each_triple_successor(scenario, ext, s, n, o, [&](Index s2, Index n2, Index o2, double) {
            const std::size_t t2 = ext.pack(s2, n2, o2);
            if (!seen[t2]) {
                seen[t2] = true;
                stack.push_back(t2);
            }
        });
    }
    return seen;
}

} // namespace

ExtendedProduct build_extended_product(const Scenario& scenario) {
    const Pomdp& m = scenario.pomdp;
    const Fsc& c = scenario.fsc;
    ExtendedProduct ext;
    ext.num_states = m.num_states();
    ext.num_nodes = c.num_nodes();
    ext.num_observations = m.num_observations();
    ext.gamma = c.action_of;
    ext.delta = c.next_node;
    ext.state_succ.resize(m.num_states());
    for (Index s = 0; s < m.num_states(); ++s) {
        std::vector<Index>& succ = ext.state_succ[s];
        for (Index a = 0; a < m.num_actions(); ++a) {
            for (const auto& [target, p] : m.row(s, a).entries) {
                if (p > 0.0) succ.push_back(target);
            }
        }
        std::sort(succ.begin(), succ.end());
        succ.erase(std::unique(succ.begin(), succ.end()), succ.end());
        ext.edge_count += succ.size();
    }
    return ext;
}

double extended_transition(const Scenario& scenario, const ExtendedProduct& ext, Index s, Index n,
                           Index o, Index s_next, Index n_next) {
    const Index nO = ext.num_observations;
    if (ext.delta[static_cast<std::size_t>(n) * nO + o] != n_next) return 0.0;
    const Index a = ext.gamma[static_cast<std::size_t>(n) * nO + o];
    const SparseDist& row = scenario.pomdp.row(s, a);
    auto it = std::lower_bound(row.entries.begin(), row.entries.end(), s_next,
                               [](const auto& entry, Index key) { return entry.first < key; });
    if (it == row.entries.end() || it->first != s_next) return 0.0;
    return it->second;
}

MilpModel build_milp(const Scenario& scenario, const MilpOptions& options) {
    const Pomdp& m = scenario.pomdp;
    const Fsc& c = scenario.fsc;
    const Index nS = m.num_states();
    const Index nN = c.num_nodes();
    const Index nO = m.num_observations();
    const ExtendedProduct ext = build_extended_product(scenario);

    const Index init_obs = m.obs_of[m.initial_state];
    auto init_identity = scenario.cost_model.pair_cost(init_obs, init_obs);
    if (!init_identity.has_value()) {
        throw InfeasibleScenarioError(
            "initial-observation fixing is infeasible: identity pair for observation '" +
            m.observations[init_obs] + "' is forbidden");
    }

    MilpModel model;
    model.options = options;
    model.num_observations = nO;

    std::vector<std::string> obs_name(nO), state_name(nS), node_name(nN);
    for (Index o = 0; o < nO; ++o) obs_name[o] = sanitize(m.observations[o]);
    for (Index s = 0; s < nS; ++s) state_name[s] = sanitize(m.states[s]);
    for (Index n = 0; n < nN; ++n) node_name[n] = sanitize(c.nodes[n]);

    // x block: permitted pairs in (from, to) order.
    model.x_of_pair.assign(static_cast<std::size_t>(nO) * nO, -1);
    for (Index from = 0; from < nO; ++from) {
        for (Index to = 0; to < nO; ++to) {
            if (!scenario.cost_model.pair_cost(from, to).has_value()) continue;
            MilpVar var;
            var.kind = VarKind::X;
            var.name = "x__" + obs_name[from] + "__" + obs_name[to];
            var.i0 = from;
            var.i1 = to;
            model.x_of_pair[static_cast<std::size_t>(from) * nO + to] =
                static_cast<Index>(model.vars.size());
            model.vars.push_back(std::move(var));
        }
    }

    std::vector<bool> kept(ext.triple_count(), true);
    if (options.prune_unreachable_triples) kept = forward_reachable_triples(scenario, ext);
    std::vector<bool> pinned(ext.triple_count(), false);
    if (options.pin_unreachable_zero) {
        const std::vector<bool> reach = co_reachable_triples(scenario, ext);
        for (std::size_t t = 0; t < pinned.size(); ++t) pinned[t] = !reach[t];
    }

    // z block: kept triples in (s, n, o) order; unreachable-zero triples get
    // a zero upper bound.
    model.z_of_triple.assign(ext.triple_count(), -1);
    for (Index s = 0; s < nS; ++s) {
        for (Index n = 0; n < nN; ++n) {
            for (Index o = 0; o < nO; ++o) {
                const std::size_t t = ext.pack(s, n, o);
                if (!kept[t]) continue;
                MilpVar var;
                var.kind = VarKind::Z;
                var.name = "z__" + state_name[s] + "__" + node_name[n] + "__" + obs_name[o];
                var.i0 = s;
                var.i1 = n;
                var.i2 = o;
                if (pinned[t] && !scenario.is_decoy(s)) var.upper = 0.0;
                model.z_of_triple[t] = static_cast<Index>(model.vars.size());
                model.vars.push_back(std::move(var));
            }
        }
    }
    const std::size_t obj_triple = ext.pack(m.initial_state, c.initial_node, init_obs);
    model.objective_var = model.z_of_triple[obj_triple];

    // l block in (s, o, s', n', o') order; only where the current
    // observation pair has an x variable, only for (s, s') pairs passing the
    // sparsity filter, and under pruning only where a kept Bellman row uses
    // the variable and the successor triple is kept.
    auto l_needed = [&](Index s, Index o, Index s2, Index n2, Index o2) {
        if (!options.prune_unreachable_triples) return true;
        if (model.z_of_triple[ext.pack(s2, n2, o2)] < 0) return false;
        for (Index n = 0; n < nN; ++n) {
            if (scenario.is_decoy(s)) break;
            if (model.z_of_triple[ext.pack(s, n, o)] < 0) continue;
            if (ext.delta[static_cast<std::size_t>(n) * nO + o] != n2) continue;
            if (extended_transition(scenario, ext, s, n, o, s2, n2) > 0.0) return true;
        }
        return false;
    };
    std::vector<Index> all_states(nS);
    for (Index s = 0; s < nS; ++s) all_states[s] = s;
    // (s, o) -> first l var index, for row assembly lookup.
    std::vector<std::vector<std::pair<std::uint64_t, Index>>> l_lookup(
        static_cast<std::size_t>(nS) * nO);
    auto l_key = [nN, nO](Index s2, Index n2, Index o2) {
        return (static_cast<std::uint64_t>(s2) * nN + n2) * nO + o2;
    };
    for (Index s = 0; s < nS; ++s) {
        for (Index o = 0; o < nO; ++o) {
            if (model.x_of_pair[static_cast<std::size_t>(m.obs_of[s]) * nO + o] < 0) continue;
            const std::vector<Index>& succ = options.l_sparsity ? ext.state_succ[s] : all_states;
            for (Index s2 : succ) {
                for (Index n2 = 0; n2 < nN; ++n2) {
                    for (Index o2 = 0; o2 < nO; ++o2) {
                        if (!l_needed(s, o, s2, n2, o2)) continue;
                        MilpVar var;
                        var.kind = VarKind::L;
                        var.name = "l__" + state_name[s] + "__" + obs_name[o] + "__" +
                                   state_name[s2] + "__" + node_name[n2] + "__" + obs_name[o2];
                        var.i0 = s;
                        var.i1 = o;
                        var.i2 = s2;
                        var.i3 = n2;
                        var.i4 = o2;
                        l_lookup[static_cast<std::size_t>(s) * nO + o].emplace_back(
                            l_key(s2, n2, o2), static_cast<Index>(model.vars.size()));
                        model.vars.push_back(std::move(var));
                    }
                }
            }
        }
    }
    auto find_l = [&](Index s, Index o, Index s2, Index n2, Index o2) -> Index {
        const auto& bucket = l_lookup[static_cast<std::size_t>(s) * nO + o];
        const std::uint64_t key = l_key(s2, n2, o2);
        auto it = std::lower_bound(bucket.begin(), bucket.end(), key,
                                   [](const auto& entry, std::uint64_t k) { return entry.first < k; });
        if (it == bucket.end() || it->first != key) return -1;
        return it->second;
    };

    // Rows: budget, init_fix, totality, decoy, bellman, mc1, mc2, mc3.
    {
        MilpRow row;
        row.kind = RowKind::Budget;
        row.name = "budget";
        row.sense = RowSense::LessEqual;
        row.rhs = scenario.cost_model.budget;
        for (Index from = 0; from < nO; ++from) {
            for (Index to = 0; to < nO; ++to) {
                const Index var = model.x_of_pair[static_cast<std::size_t>(from) * nO + to];
                if (var < 0) continue;
                const double cost = *scenario.cost_model.pair_cost(from, to);
                if (cost != 0.0) row.terms.emplace_back(var, cost);
            }
        }
        if (!row.terms.empty()) model.rows.push_back(std::move(row));
    }
    {
        MilpRow row;
        row.kind = RowKind::InitFix;
        row.name = "init_fix";
        row.sense = RowSense::Equal;
        row.rhs = 1.0;
        row.terms.emplace_back(model.x_of_pair[static_cast<std::size_t>(init_obs) * nO + init_obs],
                               1.0);
        model.rows.push_back(std::move(row));
    }
    if (options.include_totality) {
        for (Index from = 0; from < nO; ++from) {
            MilpRow row;
            row.kind = RowKind::Totality;
            row.name = "total__" + obs_name[from];
            row.sense = RowSense::Equal;
            row.rhs = 1.0;
            for (Index to = 0; to < nO; ++to) {
                const Index var = model.x_of_pair[static_cast<std::size_t>(from) * nO + to];
                if (var >= 0) row.terms.emplace_back(var, 1.0);
            }
            model.rows.push_back(std::move(row));
        }
    }
    for (Index s = 0; s < nS; ++s) {
        if (!scenario.is_decoy(s)) continue;
        for (Index n = 0; n < nN; ++n) {
            for (Index o = 0; o < nO; ++o) {
                const Index zv = model.z_of_triple[ext.pack(s, n, o)];
                if (zv < 0) continue;
                MilpRow row;
                row.kind = RowKind::Decoy;
                row.name = "decoy__" + state_name[s] + "__" + node_name[n] + "__" + obs_name[o];
                row.sense = RowSense::Equal;
                row.rhs = 0.0;
                row.terms.emplace_back(zv, 1.0);
                const Index xv = model.x_of_pair[static_cast<std::size_t>(m.obs_of[s]) * nO + o];
                if (xv >= 0) row.terms.emplace_back(xv, -1.0);
                model.rows.push_back(std::move(row));
            }
        }
    }
    for (Index s = 0; s < nS; ++s) {
        if (scenario.is_decoy(s)) continue;
        for (Index n = 0; n < nN; ++n) {
            for (Index o = 0; o < nO; ++o) {
                const Index zv = model.z_of_triple[ext.pack(s, n, o)];
                if (zv < 0) continue;
                MilpRow row;
                row.kind = RowKind::Bellman;
                row.name = "bell__" + state_name[s] + "__" + node_name[n] + "__" + obs_name[o];
                row.sense = RowSense::Equal;
                row.rhs = 0.0;
                row.terms.emplace_back(zv, 1.0);
                const Index n2 = ext.delta[static_cast<std::size_t>(n) * nO + o];
                const Index a = ext.gamma[static_cast<std::size_t>(n) * nO + o];
                if (model.x_of_pair[static_cast<std::size_t>(m.obs_of[s]) * nO + o] >= 0) {
                    for (const auto& [s2, p] : m.row(s, a).entries) {
                        if (p <= 0.0) continue;
                        for (Index o2 = 0; o2 < nO; ++o2) {
                            const Index lv = find_l(s, o, s2, n2, o2);
                            if (lv >= 0) row.terms.emplace_back(lv, -p);
                        }
                    }
                }
                model.rows.push_back(std::move(row));
            }
        }
    }
    for (int mc = 1; mc <= 3; ++mc) {
        for (std::size_t v = 0; v < model.vars.size(); ++v) {
            const MilpVar& var = model.vars[v];
            if (var.kind != VarKind::L) continue;
            const Index zv = model.z_of_triple[ext.pack(var.i2, var.i3, var.i4)];
            const Index xv =
                model.x_of_pair[static_cast<std::size_t>(m.obs_of[var.i0]) * nO + var.i1];
            MilpRow row;
            const std::string suffix = var.name.substr(1); // shared l suffix
            if (mc == 1) {
                // l <= z'
                row.kind = RowKind::McCormick1;
                row.name = "mc1_" + suffix;
                row.sense = RowSense::LessEqual;
                row.rhs = 0.0;
                row.terms.emplace_back(static_cast<Index>(v), 1.0);
                row.terms.emplace_back(zv, -1.0);
            } else if (mc == 2) {
                // l <= x
                row.kind = RowKind::McCormick2;
                row.name = "mc2_" + suffix;
                row.sense = RowSense::LessEqual;
                row.rhs = 0.0;
                row.terms.emplace_back(static_cast<Index>(v), 1.0);
                row.terms.emplace_back(xv, -1.0);
            } else {
                // l >= z' - (1 - x)
                row.kind = RowKind::McCormick3;
                row.name = "mc3_" + suffix;
                row.sense = RowSense::GreaterEqual;
                row.rhs = -1.0;
                row.terms.emplace_back(static_cast<Index>(v), 1.0);
                row.terms.emplace_back(zv, -1.0);
                row.terms.emplace_back(xv, -1.0);
            }
            model.rows.push_back(std::move(row));
        }
    }
    return model;
}

MilpStats count_stats(const MilpModel& model) {
    return {model.vars.size(), model.rows.size()};
}

std::string export_lp_string(const MilpModel& model) {
    std::ostringstream out;
    out << "Maximize\n";
    out << " obj: + 1 " << model.vars[model.objective_var].name << "\n";
    out << "Subject To\n";
    for (const MilpRow& row : model.rows) {
        out << " " << row.name << ":";
        for (const auto& [var, coef] : row.terms) {
            if (coef < 0.0) {
                out << " - " << number(-coef);
            } else {
                out << " + " << number(coef);
            }
            out << " " << model.vars[var].name;
        }
        switch (row.sense) {
            case RowSense::LessEqual: out << " <= "; break;
            case RowSense::GreaterEqual: out << " >= "; break;
            case RowSense::Equal: out << " = "; break;
        }
        out << number(row.rhs) << "\n";
    }
    out << "Bounds\n";
    for (const MilpVar& var : model.vars) {
        if (var.kind == VarKind::X) continue; // binaries are bounded by section
        if (var.upper == 0.0) {
            out << " " << var.name << " = 0\n";
        } else {
            out << " " << number(var.lower) << " <= " << var.name << " <= " << number(var.upper)
                << "\n";
        }
    }
    out << "Binary\n";
    for (const MilpVar& var : model.vars) {
        if (var.kind == VarKind::X) out << " " << var.name << "\n";
    }
    out << "End\n";
    return out.str();
}

void export_lp(const MilpModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open LP output file '" + path + "'");
    out << export_lp_string(model);
    if (!out) throw std::runtime_error("failed writing LP file '" + path + "'");
}

FixSolveResult fix_and_solve_full(const Scenario& scenario, const MilpModel& model,
                                  const Alteration& alt) {
    const Index nO = model.num_observations;
    for (Index o = 0; o < nO; ++o) {
        if (model.x_of_pair[static_cast<std::size_t>(o) * nO + alt.image[o]] < 0) {
            throw std::invalid_argument("alteration uses a forbidden pair with no x variable");
        }
    }
    // Compactly index kept triples by their z variable order.
    std::vector<Index> z_vars;
    std::vector<Index> compact_of_var(model.vars.size(), -1);
    for (std::size_t v = 0; v < model.vars.size(); ++v) {
        if (model.vars[v].kind == VarKind::Z) {
            compact_of_var[v] = static_cast<Index>(z_vars.size());
            z_vars.push_back(static_cast<Index>(v));
        }
    }
    std::vector<SparseDist> rows(z_vars.size());
    std::vector<bool> goal(z_vars.size(), false);
    const Index nN = scenario.fsc.num_nodes();
    auto x_chosen = [&](Index from, Index to) { return alt.image[from] == to; };
    for (const MilpRow& row : model.rows) {
        if (row.kind == RowKind::Decoy) {
            // z = x: goal exactly when the alteration picks this image.
            if (row.terms.size() > 1) {
                const MilpVar& xvar = model.vars[row.terms[1].first];
                if (x_chosen(xvar.i0, xvar.i1)) goal[compact_of_var[row.terms[0].first]] = true;
            }
        } else if (row.kind == RowKind::Bellman) {
            // With the row's x at 1 every l term collapses to its z'; the z'
            // of unchosen images are zeroed by their own rows. With x at 0
            // the row pins z to 0, which the empty chain row reproduces.
            const MilpVar& zvar = model.vars[row.terms[0].first];
            if (!x_chosen(scenario.pomdp.obs_of[zvar.i0], zvar.i2)) continue;
            SparseDist& dist = rows[compact_of_var[row.terms[0].first]];
            for (std::size_t i = 1; i < row.terms.size(); ++i) {
                const MilpVar& lvar = model.vars[row.terms[i].first];
                const std::size_t triple =
                    (static_cast<std::size_t>(lvar.i2) * nN + lvar.i3) * nO + lvar.i4;
                const Index z2 = model.z_of_triple[triple];
                if (z2 >= 0) dist.entries.emplace_back(compact_of_var[z2], -row.terms[i].second);
            }
            std::sort(dist.entries.begin(), dist.entries.end(),
                      [](const auto& lhs, const auto& rhs) { return lhs.first < rhs.first; });
        }
    }
    ReachSolution solution = solve_reachability(
        rows, goal, compact_of_var[model.objective_var], ReachOptions{});
    FixSolveResult result;
    result.objective = solution.value;
    result.z = std::move(solution.z);
    return result;
}

double fix_and_solve(const Scenario& scenario, const MilpModel& model, const Alteration& alt) {
    return fix_and_solve_full(scenario, model, alt).objective;
}

ExternalSolution parse_solution_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open solution file '" + path + "'");
    ExternalSolution solution;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream fields(line);
        std::string name;
        double value = 0.0;
        if (!(fields >> name)) continue;
        if (name.empty() || name[0] == '#') continue;
        if (!(fields >> value)) {
            throw std::runtime_error("malformed solution line '" + line + "'");
        }
        solution.values[name] = value;
    }
    return solution;
}

double objective_value(const MilpModel& model, const ExternalSolution& solution) {
    return solution.value_of(model.vars[model.objective_var].name);
}

Alteration alteration_from_solution(const MilpModel& model, const ExternalSolution& solution) {
    const Index nO = model.num_observations;
    Alteration alt;
    alt.image.assign(nO, -1);
    for (const MilpVar& var : model.vars) {
        if (var.kind != VarKind::X) continue;
        if (solution.value_of(var.name) > 0.5) {
            if (alt.image[var.i0] != -1) {
                throw std::runtime_error("solution assigns two images to observation index " +
                                         std::to_string(var.i0));
            }
            alt.image[var.i0] = var.i1;
        }
    }
    for (Index o = 0; o < nO; ++o) {
        if (alt.image[o] == -1) {
            throw std::runtime_error("solution assigns no image to observation index " +
                                     std::to_string(o));
        }
    }
    return alt;
}

} // namespace decoyforge
