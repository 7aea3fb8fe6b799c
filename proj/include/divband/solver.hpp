#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "divband/auxiliary.hpp"
#include "divband/model.hpp"
#include "divband/numerics.hpp"

namespace divband {

struct SolveOptions {
    double q_max = 50.0;          // last explicit retention node before the tail
    std::size_t q_nodes = 2400;   // nodes on the main coupled segment
    std::size_t solo_nodes = 300; // nodes on the Case-2 leading segment
    std::size_t tail_nodes = 800; // geometric nodes in the u = 1/q tail
    double u_min = 1e-9;          // tail reaches q = 1/u_min before the closed form
    double ode_rtol = 1e-12;
    double ode_atol = 1e-14;
    Tolerances tol{};
};

// One monotone piece of the retention curve: x(q) with exact slopes dx/dq.
// The inverse view of the same table is q1(x).
struct CurveSegment {
    MonotoneTable x_of_q;
    bool coupled = true;          // q2 follows the linking map here; else q2 = 0
};

struct RetentionCurve {
    CaseTag tag = CaseTag::Case1;
    double q_start = 0.0;         // q1(0): the H-root in Case 1, z_k in Case 2
    double xt0 = 0.0;             // Case-2 boundary where the second class activates
    double x0 = 0.0;              // retention blow-up point; q = (inf, inf) beyond
    double asym_coef = 0.0;       // q1(x) ~ asym_coef/(x0 - x) as x -> x0
    std::vector<CurveSegment> segments;

    // Integrating-factor accumulators along the curve, shared by the value
    // function: lam(x) = int_0^x rho, phi(x) = int_0^x exp(-lam). Tabulated
    // once with exact slopes (rho and exp(-lam)); totals carry the analytic
    // sliver between the last node and x0.
    MonotoneTable lam_of_x;
    MonotoneTable phi_of_x;
    double lam_tot = 0.0, phi_tot = 0.0;

    std::shared_ptr<const AuxContext> aux;   // linking map for q2 = ell(q1)
};

enum class BandBranch { Interior, FullPayout };

struct Band {
    double cbar = 0.0;            // k / U(0): smallest scale with a nonempty band
    double cstar = 0.0;           // solved scale of the marginal value
    double xtil = 0.0;            // pay down to this level (0 on FullPayout)
    double xhat = 0.0;            // pay out when surplus reaches this level
    BandBranch branch = BandBranch::Interior;
    double I1_at_cbar = 0.0;      // branch discriminant against K
};

// U and its primitive on [0, inf), normalized to U(x0) = 1.
struct MarginalValue {
    MonotoneTable lam_of_x;
    MonotoneTable phi_of_x;
    double lam_tot = 0.0, phi_tot = 0.0;
    double x0 = 0.0;
    double r_plus = 0.0, r_minus = 0.0, b1 = 0.0, b2 = 0.0;

    double U(double x) const;
    double Phi(double x) const;
    double U0() const;
    double Phi_x0() const;
};

struct ValueFunction {
    CaseTag tag = CaseTag::Case1;
    double xt0 = 0.0, x0 = 0.0;
    Band band;
    Economics econ;
    MarginalValue mv;
    double C1 = 0.0, C2 = 0.0, C3 = 0.0;   // region scales (C1 = C2, C3 = 0 in Case 1)

    double W(double x) const;              // NegativeSurplusError for x < 0
    double Wp(double x) const;
    double Wpp(double x) const;
};

RetentionCurve build_case1_curves(const std::shared_ptr<const AuxContext>& ctx,
                                  const SolveOptions& opt = {});
RetentionCurve build_case2_curves(const std::shared_ptr<const AuxContext>& ctx,
                                  const SolveOptions& opt = {});

MarginalValue make_marginal_value(const RetentionCurve& curve,
                                  const DerivedConstants& consts);
Band determine_band(const MarginalValue& mv, const Economics& econ,
                    const Tolerances& tol = {});

ValueFunction build_value_function(const std::shared_ptr<const AuxContext>& ctx,
                                   const RetentionCurve& curve,
                                   const SolveOptions& opt = {});

// Retention pair at surplus x; (INFQ, INFQ) for x >= x0. Components are in
// the internal ordering (theta1 >= theta2); callers surfacing per-class
// output undo the relabeling via ModelParams::swapped.
std::pair<double, double> eval_q(const RetentionCurve& curve, double x);
double eval_W(const ValueFunction& vf, double x);

struct Solution {
    ModelParams params;                    // normalized form
    bool swapped = false;                  // input classes were exchanged
    DerivedConstants consts;
    std::shared_ptr<const AuxContext> aux;
    RetentionCurve curve;
    ValueFunction vf;
    SolveOptions options;
};

Solution solve(const ModelParams& params, const SolveOptions& opt = {});

} // namespace divband
