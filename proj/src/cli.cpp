#include "decoyforge/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "decoyforge/generators.hpp"
#include "decoyforge/milp.hpp"
#include "decoyforge/model.hpp"
#include "decoyforge/optimizer.hpp"
#include "decoyforge/reach.hpp"
#include "decoyforge/scenario_io.hpp"
#include "decoyforge/simulate.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace decoyforge::cli {

namespace {

using nlohmann::ordered_json;

struct CliError {
    int exit_code;
    std::string message;
};

std::string fixed3(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.3f", v);
    return buffer;
}

std::string num(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.12g", v);
    return buffer;
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
    std::vector<double> values;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            values.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw CliError{1, flag + ": '" + item + "' is not a number"};
        }
    }
    if (values.empty()) throw CliError{1, flag + ": empty list"};
    return values;
}

Scenario load_scenario(const std::string& path) {
    if (path == "-") {
        std::ostringstream buffer;
        buffer << std::cin.rdbuf();
        return parse_scenario(buffer.str());
    }
    return load_scenario_file(path);
}

Scenario load_validated(const std::string& path, std::ostream& out) {
    Scenario scenario = load_scenario(path);
    ValidationReport report = validate_scenario(scenario);
    if (!report.ok()) {
        out << report.to_string();
        throw CliError{1, "scenario '" + path + "' failed validation with " +
                              std::to_string(report.violations.size()) + " violation(s)"};
    }
    return scenario;
}

/// csv:<path> selects CSV output; anything else (or absent) is the table.
std::optional<std::string> csv_path(const std::string& out_spec) {
    if (out_spec.rfind("csv:", 0) == 0) return out_spec.substr(4);
    if (!out_spec.empty() && out_spec != "table") {
        throw CliError{1, "--out expects 'table' or 'csv:<path>', got '" + out_spec + "'"};
    }
    return std::nullopt;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw CliError{1, "cannot open output file '" + path + "'"};
    file << content;
    if (!file) throw CliError{1, "failed writing '" + path + "'"};
}

void echo_config(std::ostream& err, const ordered_json& config) {
    err << "config: " << config.dump() << "\n";
}

struct ExternalRun {
    Alteration alteration;
    double objective = 0.0;
};

ExternalRun run_external_solver(const std::string& command, const MilpModel& model,
                                const std::string& lp_path) {
    const std::string sol_path = lp_path + ".sol";
    const std::string full = command + " " + lp_path + " " + sol_path;
    const int rc = std::system(full.c_str());
    if (rc != 0) {
        throw CliError{2, "external solver command failed with status " + std::to_string(rc) +
                              ": " + full};
    }
    ExternalSolution solution = parse_solution_file(sol_path);
    ExternalRun run;
    run.alteration = alteration_from_solution(model, solution);
    run.objective = objective_value(model, solution);
    return run;
}

struct OptimizeRow {
    double budget = 0.0;
    double value = 0.0;
    double cost = 0.0;
    std::string status;
    std::uint64_t nodes = 0;
    double seconds = 0.0;
    std::string alteration;
};

void emit_optimize_rows(const std::vector<OptimizeRow>& rows, const std::string& out_spec,
                        std::ostream& out) {
    const auto csv = csv_path(out_spec);
    std::ostringstream body;
    body << "budget,value,cost,status,nodes,seconds,alteration\n";
    for (const OptimizeRow& row : rows) {
        body << num(row.budget) << ',' << num(row.value) << ',' << num(row.cost) << ','
             << row.status << ',' << row.nodes << ',' << fixed3(row.seconds) << ','
             << row.alteration << "\n";
    }
    if (csv.has_value()) {
        write_file(*csv, body.str());
        out << "wrote " << rows.size() << " row(s) to " << *csv << "\n";
    } else {
        out << body.str();
    }
}

int cmd_validate(const std::string& scenario_path, std::ostream& out) {
    Scenario scenario = load_scenario(scenario_path);
    ValidationReport report = validate_scenario(scenario);
    if (report.ok()) {
        out << "ok: scenario is valid\n";
        return 0;
    }
    out << report.to_string();
    out << report.violations.size() << " violation(s)\n";
    return 1;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"sensor-alteration synthesis against FSC-controlled POMDP agents"};
    app.require_subcommand(1);

    std::string scenario_path = "-";
    std::string out_spec;
    std::string alt_literal;
    std::string method = "auto";
    double tol = 1e-12;
    long max_iter = 1'000'000;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 0;

    auto add_common = [&](CLI::App* sub, bool with_scenario = true) {
        if (with_scenario) {
            sub->add_option("--scenario", scenario_path, "scenario file ('-' = stdin)");
        }
        sub->add_option("--out", out_spec, "output: 'table' (default) or 'csv:<path>'");
        sub->add_option("--seed", seed, "pin randomness; also zeroes timing columns")
            ->each([&](const std::string&) { seed_given = true; });
        sub->add_option("--threads", threads, "cap worker threads (0 = default)");
    };

    CLI::App* validate_cmd = app.add_subcommand("validate", "check scenario structural invariants");
    add_common(validate_cmd);

    CLI::App* verify_cmd = app.add_subcommand("verify", "probability and cost of one alteration");
    add_common(verify_cmd);
    verify_cmd->add_option("--alt", alt_literal, "alteration literal, e.g. \"o1->o3;o2->o0\"");
    verify_cmd->add_option("--method", method, "auto|direct|iterative");
    verify_cmd->add_option("--tol", tol, "iterative solver tolerance");
    verify_cmd->add_option("--max-iter", max_iter, "iterative solver sweep limit");

    std::string opt_method = "bb";
    double budget_override = 0.0;
    bool budget_given = false;
    std::string sweep_spec;
    std::uint64_t max_nodes = 0;
    double max_seconds = 0.0;
    bool force_brute = false;
    std::string lp_path;
    std::string solver_command;
    CLI::App* optimize_cmd = app.add_subcommand("optimize", "solve for the best alteration");
    add_common(optimize_cmd);
    optimize_cmd->add_option("--method", opt_method, "bb|brute|export");
    optimize_cmd->add_option("--budget", budget_override, "override the scenario budget")
        ->each([&](const std::string&) { budget_given = true; });
    optimize_cmd->add_option("--sweep", sweep_spec, "comma-separated budgets, ascending");
    optimize_cmd->add_option("--max-nodes", max_nodes, "node limit (0 = unlimited)");
    optimize_cmd->add_option("--max-seconds", max_seconds, "time limit (0 = unlimited)");
    optimize_cmd->add_flag("--force-brute", force_brute, "lift the brute-force size guard");
    optimize_cmd->add_option("--lp", lp_path, "LP file path for --method export");
    optimize_cmd->add_option("--solve-external", solver_command,
                         "solver command run as: <cmd> <lp-file> <solution-file>");

    bool no_l_sparsity = false;
    bool prune_triples = false;
    CLI::App* export_lp_cmd = app.add_subcommand("export-lp", "build the MILP and write an LP file");
    add_common(export_lp_cmd);
    export_lp_cmd->add_option("--lp", lp_path, "LP output path")->required();
    export_lp_cmd->add_flag("--no-l-sparsity", no_l_sparsity,
                            "create l variables for all state pairs");
    export_lp_cmd->add_flag("--prune-triples", prune_triples,
                            "drop triples unreachable under any alteration");
    export_lp_cmd->add_option("--solve-external", solver_command,
                              "solver command run as: <cmd> <lp-file> <solution-file>");

    CLI::App* stats_cmd = app.add_subcommand("stats", "MILP size statistics");
    add_common(stats_cmd);

    CLI::App* gen = app.add_subcommand("gen", "scenario generators");
    gen->require_subcommand(1);
    int grid_n = 5;
    double grid_budget = 0.0;
    double grid_p = 0.8;
    bool freeze_blank = false;
    std::string gen_out;
    CLI::App* gen_grid_cmd = gen->add_subcommand("grid", "n x n sensor grid");
    gen_grid_cmd->add_option("--n", grid_n, "grid side length (>= 5)");
    gen_grid_cmd->add_option("--budget", grid_budget, "scenario budget");
    gen_grid_cmd->add_option("--p-intended", grid_p, "intended-move probability");
    gen_grid_cmd->add_flag("--freeze-blank", freeze_blank, "make the blank observation unalterable");
    gen_grid_cmd->add_option("--out", gen_out, "output file (default stdout)");

    std::string weights_spec, values_spec;
    double capacity = 0.0, threshold = 0.0;
    CLI::App* gen_knapsack_cmd = gen->add_subcommand("knapsack", "0/1 knapsack reduction");
    gen_knapsack_cmd->add_option("--weights", weights_spec, "comma-separated weights")->required();
    gen_knapsack_cmd->add_option("--values", values_spec, "comma-separated values")->required();
    gen_knapsack_cmd->add_option("--capacity", capacity, "knapsack capacity (budget)")->required();
    gen_knapsack_cmd->add_option("--threshold", threshold, "value threshold L")->required();
    gen_knapsack_cmd->add_option("--out", gen_out, "output file (default stdout)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << ordered_json{{"message", e.what()}}.dump() << "\n";
        return 1;
    }

    const std::string subcommand = app.get_subcommands().front()->get_name();
    try {
#ifdef _OPENMP
        if (threads > 0) omp_set_num_threads(threads);
#endif
        if (gen->parsed()) {
            if (gen_grid_cmd->parsed()) {
                echo_config(err, ordered_json{{"subcommand", "gen grid"},
                                              {"n", grid_n},
                                              {"budget", grid_budget},
                                              {"p_intended", grid_p},
                                              {"freeze_blank", freeze_blank},
                                              {"out", gen_out.empty() ? "-" : gen_out}});
                GridSpec spec = default_grid_spec(grid_n);
                spec.budget = grid_budget;
                spec.p_intended = grid_p;
                spec.blank_obs_alterable = !freeze_blank;
                Scenario scenario = gen_grid(spec);
                std::ostringstream header;
                header << "generator: grid n=" << grid_n << " budget=" << num(grid_budget)
                       << " p_intended=" << num(grid_p) << " blank_alterable="
                       << (freeze_blank ? "false" : "true");
                if (gen_out.empty()) {
                    out << "// " << header.str() << "\n" << serialize_scenario(scenario);
                } else {
                    write_scenario_file(scenario, gen_out, header.str());
                }
                return 0;
            }
            echo_config(err, ordered_json{{"subcommand", "gen knapsack"},
                                          {"weights", weights_spec},
                                          {"values", values_spec},
                                          {"capacity", capacity},
                                          {"threshold", threshold},
                                          {"out", gen_out.empty() ? "-" : gen_out}});
            KnapsackInstance inst;
            inst.weights = parse_double_list(weights_spec, "--weights");
            inst.values = parse_double_list(values_spec, "--values");
            inst.capacity = capacity;
            inst.threshold = threshold;
            KnapsackScenario result = gen_knapsack(inst);
            std::ostringstream header;
            header << "generator: knapsack n=" << inst.weights.size() << " capacity="
                   << num(capacity) << " threshold=" << num(threshold) << "\n"
                   << "threshold_r: " << num(result.threshold_r);
            if (gen_out.empty()) {
                out << "// generator: knapsack n=" << inst.weights.size()
                    << " capacity=" << num(capacity) << " threshold=" << num(threshold) << "\n"
                    << "// threshold_r: " << num(result.threshold_r) << "\n"
                    << serialize_scenario(result.scenario);
            } else {
                write_scenario_file(result.scenario, gen_out, header.str());
            }
            return 0;
        }

        if (validate_cmd->parsed()) {
            echo_config(err, ordered_json{{"subcommand", "validate"}, {"scenario", scenario_path}});
            return cmd_validate(scenario_path, out);
        }

        if (verify_cmd->parsed()) {
            echo_config(err, ordered_json{{"subcommand", "verify"},
                                          {"scenario", scenario_path},
                                          {"alt", alt_literal},
                                          {"method", method},
                                          {"tol", tol},
                                          {"max_iter", max_iter},
                                          {"seed", seed_given ? ordered_json(seed) : ordered_json()},
                                          {"threads", threads}});
            Scenario scenario = load_validated(scenario_path, out);
            Alteration alt = parse_alteration_literal(alt_literal, scenario.pomdp);
            ReachOptions options;
            if (method == "direct") {
                options.method = SolveMethod::Direct;
            } else if (method == "iterative") {
                options.method = SolveMethod::Iterative;
            } else if (method != "auto") {
                throw CliError{1, "--method expects auto|direct|iterative"};
            }
            options.tol = tol;
            options.max_iter = max_iter;
            Timer timer;
            VerifyResult result = decoyforge::verify(scenario, alt, options);
            const double seconds = seed_given ? 0.0 : timer.elapsed();
            const std::string alt_text = format_alteration(alt, scenario.pomdp);
            const std::string cost_text =
                result.cost.has_value() ? num(*result.cost) : std::string("forbidden");
            const auto csv = csv_path(out_spec);
            std::ostringstream body;
            body << "scenario,alteration,cost,within_budget,probability,residual,method,seconds\n";
            body << scenario_path << ',' << alt_text << ',' << cost_text << ','
                 << (result.within_budget ? "true" : "false") << ',' << num(result.probability)
                 << ',' << num(result.residual) << ',' << to_string(result.method_used) << ','
                 << fixed3(seconds) << "\n";
            if (csv.has_value()) {
                write_file(*csv, body.str());
                out << "wrote 1 row to " << *csv << "\n";
            } else {
                out << "scenario       " << scenario_path << "\n";
                out << "alteration     " << (alt_text.empty() ? "(identity)" : alt_text) << "\n";
                out << "cost           " << cost_text << "\n";
                out << "within_budget  " << (result.within_budget ? "true" : "false") << "\n";
                out << "probability    " << num(result.probability) << "\n";
                out << "residual       " << num(result.residual) << "\n";
                out << "method         " << to_string(result.method_used) << "\n";
                out << "seconds        " << fixed3(seconds) << "\n";
            }
            return 0;
        }

        if (optimize_cmd->parsed()) {
            if (solver_command.empty()) {
                const char* env = std::getenv("DECOYFORGE_SOLVER");
                if (env != nullptr) solver_command = env;
            }
            echo_config(err, ordered_json{{"subcommand", "optimize"},
                                          {"scenario", scenario_path},
                                          {"method", opt_method},
                                          {"budget", budget_given ? ordered_json(budget_override)
                                                                  : ordered_json()},
                                          {"sweep", sweep_spec},
                                          {"max_nodes", max_nodes},
                                          {"max_seconds", max_seconds},
                                          {"force_brute", force_brute},
                                          {"lp", lp_path},
                                          {"solve_external", solver_command},
                                          {"seed", seed_given ? ordered_json(seed) : ordered_json()},
                                          {"threads", threads}});
            Scenario scenario = load_validated(scenario_path, out);
            if (budget_given) scenario.cost_model.budget = budget_override;
            OptLimits limits{max_nodes, max_seconds};
            std::vector<OptimizeRow> rows;

            auto to_row = [&](const OptResult& result, double budget) {
                OptimizeRow row;
                row.budget = budget;
                row.value = result.best_value;
                row.cost = result.best_cost;
                row.status = to_string(result.status);
                row.nodes = result.nodes_explored;
                row.seconds = seed_given ? 0.0 : result.seconds;
                row.alteration = format_alteration(result.best_alteration, scenario.pomdp);
                return row;
            };

            if (opt_method == "export") {
                if (lp_path.empty()) throw CliError{1, "--method export requires --lp <path>"};
                Timer timer;
                MilpModel model = build_milp(scenario);
                export_lp(model, lp_path);
                MilpStats model_stats = count_stats(model);
                out << "exported " << lp_path << " vars=" << model_stats.num_vars
                    << " constraints=" << model_stats.num_constraints << "\n";
                if (!solver_command.empty()) {
                    ExternalRun external = run_external_solver(solver_command, model, lp_path);
                    VerifyResult check = decoyforge::verify(scenario, external.alteration, ReachOptions{});
                    OptimizeRow row;
                    row.budget = scenario.cost_model.budget;
                    row.value = check.probability;
                    row.cost = check.cost.value_or(-1.0);
                    row.status = "external";
                    row.nodes = 0;
                    row.seconds = seed_given ? 0.0 : timer.elapsed();
                    row.alteration = format_alteration(external.alteration, scenario.pomdp);
                    rows.push_back(row);
                    emit_optimize_rows(rows, out_spec, out);
                }
                return 0;
            }

            OptMethod method_choice;
            if (opt_method == "bb") {
                method_choice = OptMethod::BranchAndBound;
            } else if (opt_method == "brute") {
                method_choice = OptMethod::Brute;
            } else {
                throw CliError{1, "--method expects bb|brute|export"};
            }

            if (!sweep_spec.empty()) {
                std::vector<double> budgets = parse_double_list(sweep_spec, "--sweep");
                std::vector<OptResult> results;
                if (method_choice == OptMethod::Brute && force_brute) {
                    for (double b : budgets) {
                        Scenario variant = scenario;
                        variant.cost_model.budget = b;
                        results.push_back(brute_force(variant, BruteOptions{true, true, true}));
                    }
                } else {
                    results = budget_sweep(scenario, budgets, method_choice, limits);
                }
                for (std::size_t i = 0; i < results.size(); ++i) {
                    rows.push_back(to_row(results[i], budgets[i]));
                }
            } else {
                OptResult result = method_choice == OptMethod::Brute
                                       ? brute_force(scenario, BruteOptions{force_brute, true, true})
                                       : branch_and_bound(scenario, limits);
                rows.push_back(to_row(result, scenario.cost_model.budget));
            }
            emit_optimize_rows(rows, out_spec, out);
            return 0;
        }

        if (export_lp_cmd->parsed()) {
            if (solver_command.empty()) {
                const char* env = std::getenv("DECOYFORGE_SOLVER");
                if (env != nullptr) solver_command = env;
            }
            echo_config(err, ordered_json{{"subcommand", "export-lp"},
                                          {"scenario", scenario_path},
                                          {"lp", lp_path},
                                          {"no_l_sparsity", no_l_sparsity},
                                          {"prune_triples", prune_triples},
                                          {"solve_external", solver_command}});
            Scenario scenario = load_validated(scenario_path, out);
            MilpOptions options;
            options.l_sparsity = !no_l_sparsity;
            options.prune_unreachable_triples = prune_triples;
            MilpModel model = build_milp(scenario, options);
            export_lp(model, lp_path);
            MilpStats model_stats = count_stats(model);
            out << "exported " << lp_path << " vars=" << model_stats.num_vars
                << " constraints=" << model_stats.num_constraints << "\n";
            if (!solver_command.empty()) {
                ExternalRun external = run_external_solver(solver_command, model, lp_path);
                VerifyResult check =
                    decoyforge::verify(scenario, external.alteration, ReachOptions{});
                out << "external objective " << num(external.objective) << " verified "
                    << num(check.probability) << " alteration "
                    << format_alteration(external.alteration, scenario.pomdp) << "\n";
            }
            return 0;
        }

        if (stats_cmd->parsed()) {
            echo_config(err, ordered_json{{"subcommand", "stats"}, {"scenario", scenario_path}});
            Scenario scenario = load_validated(scenario_path, out);
            Timer timer;
            MilpModel model = build_milp(scenario);
            MilpStats model_stats = count_stats(model);
            const double seconds = seed_given ? 0.0 : timer.elapsed();
            ExtendedProduct ext = build_extended_product(scenario);
            const auto csv = csv_path(out_spec);
            std::ostringstream body;
            body << "scenario,triples,num_vars,num_constraints,seconds\n";
            body << scenario_path << ',' << ext.triple_count() << ',' << model_stats.num_vars << ','
                 << model_stats.num_constraints << ',' << fixed3(seconds) << "\n";
            if (csv.has_value()) {
                write_file(*csv, body.str());
                out << "wrote 1 row to " << *csv << "\n";
            } else {
                out << body.str();
            }
            return 0;
        }

        throw CliError{1, "unknown subcommand"};
    } catch (const CliError& e) {
        err << "error: "
            << ordered_json{{"subcommand", subcommand}, {"message", e.message}}.dump() << "\n";
        return e.exit_code;
    } catch (const ScenarioParseError& e) {
        err << "error: "
            << ordered_json{{"subcommand", subcommand}, {"message", e.what()}}.dump() << "\n";
        return 1;
    } catch (const InfeasibleScenarioError& e) {
        err << "error: "
            << ordered_json{{"subcommand", subcommand}, {"message", e.what()}}.dump() << "\n";
        return 1;
    } catch (const BruteForceGuardError& e) {
        err << "error: "
            << ordered_json{{"subcommand", subcommand}, {"message", e.what()}}.dump() << "\n";
        return 1;
    } catch (const SolveError& e) {
        err << "error: "
            << ordered_json{{"subcommand", subcommand},
                            {"message", e.what()},
                            {"last_residual", e.last_residual}}
                   .dump()
            << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: "
            << ordered_json{{"subcommand", subcommand}, {"message", e.what()}}.dump() << "\n";
        return 1;
    }
}

} // namespace decoyforge::cli
