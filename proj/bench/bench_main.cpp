// Compares the OpenMP kernels against their serial references: Monte Carlo
// episode simulation, brute-force enumeration, and the relaxed-MDP value
// iteration used for branch-and-bound pruning.

#include <chrono>
#include <cstdio>
#include <string>

#include "decoyforge/generators.hpp"
#include "decoyforge/optimizer.hpp"
#include "decoyforge/simulate.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace decoyforge;

namespace {

template <typename F>
double time_seconds(F&& body) {
    const auto start = std::chrono::steady_clock::now();
    body();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void report(const char* name, double serial, double parallel) {
    std::printf("%-28s %10.3fs %10.3fs %8.2fx\n", name, serial, parallel,
                parallel > 0.0 ? serial / parallel : 0.0);
}

} // namespace

int main(int argc, char** argv) {
    std::uint64_t episodes = 400'000;
    if (argc > 1) episodes = std::stoull(argv[1]);
#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (OpenMP disabled)\n");
#endif
    std::printf("%-28s %11s %11s %9s\n", "kernel", "serial", "parallel", "speedup");

    const Scenario grid5 = gen_grid(default_grid_spec(5));
    const Alteration alt = parse_alteration_literal("o1->o3", grid5.pomdp);
    const std::uint64_t horizon = default_sim_horizon(grid5);

    SimResult sim_serial{}, sim_parallel{};
    const double t_sim_serial =
        time_seconds([&] { sim_serial = simulate_serial(grid5, alt, episodes, horizon, 7); });
    const double t_sim_parallel =
        time_seconds([&] { sim_parallel = simulate(grid5, alt, episodes, horizon, 7); });
    report("simulate (grid5)", t_sim_serial, t_sim_parallel);
    if (sim_serial.successes != sim_parallel.successes) {
        std::printf("MISMATCH: serial and parallel success counts differ\n");
        return 1;
    }

    Scenario budget2 = grid5;
    budget2.cost_model.budget = 2.0;
    BruteOptions no_cache;
    no_cache.use_cache = false;
    OptResult brute_s{}, brute_p{};
    no_cache.parallel = false;
    const double t_brute_serial =
        time_seconds([&] { brute_s = brute_force_serial(budget2, no_cache); });
    no_cache.parallel = true;
    const double t_brute_parallel = time_seconds([&] { brute_p = brute_force(budget2, no_cache); });
    report("brute force (grid5, B=2)", t_brute_serial, t_brute_parallel);
    if (brute_s.best_value != brute_p.best_value ||
        !(brute_s.best_alteration == brute_p.best_alteration)) {
        std::printf("MISMATCH: serial and parallel brute force differ\n");
        return 1;
    }

    // The relaxed-bound value iteration goes parallel only on large
    // products; grid35 has 35*35*3 = 3675 product states.
    GridSpec spec35 = default_grid_spec(35);
    spec35.budget = 4.0;
    const Scenario grid35 = gen_grid(spec35);
    SearchNode root;
    root.decided.assign(grid35.pomdp.num_observations(), -1);
    BoundResult bound_serial{}, bound_parallel{};
#ifdef _OPENMP
    const int max_threads = omp_get_max_threads();
    omp_set_num_threads(1);
#endif
    const double t_vi_serial =
        time_seconds([&] { bound_serial = relaxation_bound(grid35, root); });
#ifdef _OPENMP
    omp_set_num_threads(max_threads);
#endif
    const double t_vi_parallel =
        time_seconds([&] { bound_parallel = relaxation_bound(grid35, root); });
    report("relaxed VI (grid35 root)", t_vi_serial, t_vi_parallel);
    if (bound_serial.bound != bound_parallel.bound) {
        std::printf("MISMATCH: serial and parallel VI bounds differ\n");
        return 1;
    }

    std::printf("estimates: sim %.4f +- %.4f, brute best %.6f\n", sim_parallel.estimate,
                sim_parallel.half_width_95, brute_p.best_value);
    return 0;
}
