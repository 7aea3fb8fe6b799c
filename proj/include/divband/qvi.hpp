#pragma once

#include <functional>
#include <vector>

#include "divband/solver.hpp"

namespace divband {

struct QviOptions {
    double perturb = 1.0;        // scale W by this factor (negative control)
    double tol_factor = 1e-4;    // generator tolerance = tol_factor * delta * W(x0)
    std::size_t x_points = 120;  // checkpoints in (0, xhat)
    std::size_t q_axis = 60;     // log-spaced retention nodes per axis (+ inf)
    double q_lo = 1e-3, q_hi = 1e3;
    std::size_t eta_grid = 400;  // intervention search resolution
};

struct GeneratorRecord {
    double x = 0.0;
    double at_curve = 0.0;       // residual at the solver's retention pair
    double grid_max = 0.0;       // max residual over the retention grid
    double argmax_q1 = 0.0, argmax_q2 = 0.0;
    bool argmax_matches = false; // within one grid cell of the solver's pair
};

struct SmoothnessGaps {
    double wp_rel_gap_x0 = 0.0;
    double wp_rel_gap_xhat = 0.0;
    double wp_rel_gap_xt0 = 0.0; // Case 2 only; 0 otherwise
    double wpp_gap_x0 = 0.0;
    double wp_at_xhat_err = 0.0; // |W'(xhat) - k|
    double slope_beyond_xhat_err = 0.0;
};

struct QviReport {
    double generator_tol = 0.0;
    double worst_grid_max = 0.0;
    double worst_at_curve = 0.0;
    double argmax_match_fraction = 0.0;
    double worst_intervention_gap = 0.0;     // max of MW - W on (0, xhat)
    double intervention_gap_at_xhat = 0.0;   // |MW - W| at xhat
    double worst_gap_beyond_xhat = 0.0;      // |MW - W| for x > xhat
    SmoothnessGaps smooth;
    bool phi_check_ran = false;
    bool phi_check_ok = true;
    std::vector<GeneratorRecord> records;

    bool generator_ok = false;
    bool intervention_ok = false;
    bool smoothness_ok = false;
    bool argmax_ok = false;
    bool pass = false;
};

// MW(x) = sup over eta in (0, x] of W(x - eta) + k eta - K, by dense grid plus
// local refinement. The overload taking the solved value function also seeds
// the analytic candidates eta = x - xtil and eta = x.
double intervention_value(const std::function<double(double)>& W,
                          const Economics& econ, double x,
                          std::size_t eta_grid = 400);
double intervention_value(const ValueFunction& vf, double x,
                          std::size_t eta_grid = 400);

GeneratorRecord generator_residual(const Solution& sol, double x,
                                   const QviOptions& opt = {});

// Case-2 boundary argument: the generator's retention objective at fixed
// marginal slope must peak at (q1(x), 0) throughout the leading region.
bool phi_boundary_check(const Solution& sol, double x);

SmoothnessGaps smoothness_check(const ValueFunction& vf, double perturb = 1.0);

QviReport run_qvi_check(const Solution& sol, const QviOptions& opt = {});

} // namespace divband
