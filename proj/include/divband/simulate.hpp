#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "divband/solver.hpp"

namespace divband {

enum class DividendRule { Band, NeverPay };

struct Strategy {
    std::string name;
    std::function<std::pair<double, double>(double)> retention;  // x -> (q1, q2)
    DividendRule rule = DividendRule::Band;
    double xtil = 0.0, xhat = 0.0;    // band edges when rule == Band
};

struct SimConfig {
    std::size_t n_paths = 100000;
    double dt = 1e-3;
    double horizon = 40.0;
    std::uint64_t seed = 1;
    bool antithetic = false;
    unsigned workers = 1;             // estimate is invariant to this
    bool zero_noise = false;          // test hook: drift-only dynamics
};

struct SimEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    double ci99_lo = 0.0, ci99_hi = 0.0;
    double ruin_fraction = 0.0;
    double mean_ruin_time = 0.0;      // over ruined paths; 0 when none ruined
    double truncation_bound = 0.0;    // discounted mass ignored beyond the horizon
    std::size_t n_paths = 0;
};

SimEstimate simulate(const ModelParams& params, const Strategy& strategy,
                     double x0, const SimConfig& cfg);

struct Comparison {
    std::vector<std::string> names;
    std::vector<SimEstimate> estimates;
    // pairwise statistics under common random numbers: diff_mean[i][j] is the
    // mean of (payoff_i - payoff_j) per path, diff_se its standard error
    std::vector<std::vector<double>> diff_mean, diff_se;
    std::vector<std::size_t> ranking; // strategy indices, best mean first
};

Comparison compare_strategies(const ModelParams& params,
                              const std::vector<Strategy>& strategies,
                              double x0, const SimConfig& cfg);

// Strategy factories around a solved model.
Strategy optimal_strategy(const Solution& sol);
Strategy no_reinsurance_strategy(const Solution& sol);
Strategy proportional_strategy(const Solution& sol, double fraction = 0.5);
Strategy band_scaled_strategy(const Solution& sol, double factor);
Strategy never_pay_strategy(const Solution& sol);

} // namespace divband
