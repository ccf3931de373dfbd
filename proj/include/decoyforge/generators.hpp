#pragma once

#include <string>
#include <vector>

#include "decoyforge/model.hpp"

namespace decoyforge {

struct Cell {
    int x = 0;
    int y = 0;
    bool operator==(const Cell&) const = default;
};

struct SensorSpec {
    std::string id;
    std::vector<Cell> covered;
};

/// n x n grid world with range sensors, one blank observation for uncovered
/// cells, absorbing goal and hazard cells, and the three-node E/N controller.
struct GridSpec {
    int n = 5;
    std::vector<SensorSpec> sensors;
    Cell start{0, 0};
    Cell goal{4, 4};
    Cell hazard{2, 2};
    double p_intended = 0.8;
    bool blank_obs_alterable = true;
    double budget = 0.0;
};

/// 0/1 knapsack decision instance: weights, values, capacity and value
/// threshold.
struct KnapsackInstance {
    std::vector<double> weights;
    std::vector<double> values;
    double capacity = 0.0;
    double threshold = 0.0;
};

/// The 5x5 layout scaled to side length n: sensor anchors are mapped
/// proportionally onto the larger grid, coverage footprints unchanged.
GridSpec default_grid_spec(int n);

/// Builds the grid scenario. Cell dynamics: the intended direction receives
/// p_intended; each in-grid orthogonal direction receives half the
/// remainder, or all of it when only one is in-grid; blocked mass stays in
/// place. Goal and hazard are absorbing; decoy = {hazard}; unit alteration
/// costs. Throws std::invalid_argument on malformed specs.
Scenario gen_grid(const GridSpec& spec);

struct KnapsackScenario {
    Scenario scenario;
    double threshold_r = 0.0; // L / (2 * sum of values)
};

/// Builds the knapsack-reduction POMDP/FSC with budget = capacity and the
/// cost model permitting only o_i -> o_club at cost w_i.
KnapsackScenario gen_knapsack(const KnapsackInstance& inst);

} // namespace decoyforge
