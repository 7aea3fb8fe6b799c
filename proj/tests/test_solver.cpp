#include <cmath>

#include <doctest.h>

#include "divband/solver.hpp"
#include "oracle_values.hpp"
#include "test_params.hpp"

using namespace divband;

namespace {

const Solution& base_solution()
{
    static Solution sol = solve(testpar::base());
    return sol;
}

const Solution& shock_solution()
{
    static Solution sol = solve(testpar::shock());
    return sol;
}

} // namespace

TEST_CASE("base model: curve anchors and band against the reference values")
{
    const Solution& sol = base_solution();
    namespace ob = oracle::base;

    CHECK(sol.consts.case_tag == CaseTag::Case1);
    CHECK(sol.curve.q_start == doctest::Approx(ob::q0).epsilon(1e-9));
    CHECK(sol.curve.x0 == doctest::Approx(ob::x0).epsilon(1e-8));
    CHECK(sol.curve.lam_tot == doctest::Approx(ob::lam_tot).epsilon(1e-8));

    const MarginalValue& mv = sol.vf.mv;
    CHECK(mv.U0() == doctest::Approx(ob::U0).epsilon(1e-7));
    CHECK(mv.Phi_x0() == doctest::Approx(ob::Phi_x0).epsilon(1e-8));
    // construction identity: the primitive at the blow-up point equals the
    // uncontrolled drift over the discount rate
    CHECK(mv.Phi_x0() == doctest::Approx(ob::K2 / 0.5).epsilon(1e-8));

    const Band& band = sol.vf.band;
    CHECK(band.branch == BandBranch::Interior);
    CHECK(band.cbar == doctest::Approx(ob::cbar).epsilon(1e-8));
    CHECK(band.cstar == doctest::Approx(ob::cstar).epsilon(1e-8));
    CHECK(band.xtil == doctest::Approx(ob::xtil).epsilon(1e-7));
    CHECK(band.xhat == doctest::Approx(ob::xhat).epsilon(1e-7));
    CHECK(band.xtil < sol.curve.x0);
    CHECK(sol.curve.x0 < band.xhat);
    CHECK(band.cstar > 0.0);
    CHECK(band.cstar < sol.params.econ.k);
}

TEST_CASE("base model: value function and retentions at sample surpluses")
{
    const Solution& sol = base_solution();
    namespace ob = oracle::base;

    // tolerances reflect agreement between two independent discretizations,
    // not the internal consistency of either one (that is tested separately)
    for (std::size_t i = 0; i < ob::n_samples; ++i) {
        double x = ob::x_samples[i];
        CHECK(sol.vf.W(x) == doctest::Approx(ob::W_samples[i]).epsilon(2e-6));
        CHECK(sol.vf.Wp(x) == doctest::Approx(ob::Wp_samples[i]).epsilon(1e-5));
        auto [q1, q2] = eval_q(sol.curve, x);
        if (std::isinf(ob::q1_samples[i])) {
            CHECK(q1 > 1e8);
            CHECK(q2 > 1e8);
        } else {
            CHECK(q1 == doctest::Approx(ob::q1_samples[i]).epsilon(5e-6));
            CHECK(q2 == doctest::Approx(ob::q2_samples[i]).epsilon(5e-6));
        }
    }
    CHECK(sol.vf.W(0.0) == 0.0);
    CHECK(eval_W(sol.vf, 1.0) == sol.vf.W(1.0));
    CHECK_THROWS_AS(sol.vf.W(-0.1), NegativeSurplusError);
    CHECK_THROWS_AS(eval_q(sol.curve, -0.1), NegativeSurplusError);
}

TEST_CASE("base model: curve solves its defining slope relation")
{
    const Solution& sol = base_solution();
    const AuxContext& aux = *sol.aux;
    double x0 = sol.curve.x0;
    double delta = sol.params.econ.delta;

    for (int i = 1; i <= 50; ++i) {
        double x = x0 * (0.05 + 0.85 * i / 50.0);
        double h = 1e-5;
        double q = eval_q(sol.curve, x).first;
        double fd = (eval_q(sol.curve, x + h).first -
                     eval_q(sol.curve, x - h).first) / (2.0 * h);
        double expected = (delta + aux.rho_coupled(q) * aux.H(q)) / aux.H_prime(q);
        CHECK(fd == doctest::Approx(expected).epsilon(1e-5));
    }
}

TEST_CASE("base model: retention map round trips through its tables")
{
    const Solution& sol = base_solution();
    const MonotoneTable& xq = sol.curve.segments.front().x_of_q;
    for (int i = 0; i < 100; ++i) {
        double q = sol.curve.q_start * 1.01 *
                   std::pow(100.0 / (sol.curve.q_start * 1.01),
                            static_cast<double>(i) / 99.0);
        double x = xq(q);
        CHECK(eval_q(sol.curve, x).first == doctest::Approx(q).epsilon(1e-8));
    }
    // beyond the last node the hyperbolic closure takes over and still blows
    // up exactly at x0
    auto near = eval_q(sol.curve, sol.curve.x0 - 1e-12);
    CHECK(near.first > 1e8);
    auto at = eval_q(sol.curve, sol.curve.x0);
    CHECK(std::isinf(at.first));
    CHECK(std::isinf(at.second));
}

TEST_CASE("base model: concavity, smooth fit and tail behaviour")
{
    const Solution& sol = base_solution();
    double x0 = sol.curve.x0;
    double xhat = sol.vf.band.xhat;
    double k = sol.params.econ.k;
    double K = sol.params.econ.K;

    for (int i = 1; i < 50; ++i) {
        double x = x0 * i / 50.0;
        CHECK(sol.vf.Wpp(x) < 0.0);
    }
    CHECK(sol.vf.Wp(xhat) == doctest::Approx(k).epsilon(1e-9));
    // band consistency: one lump from xhat down to xtil is value-neutral
    CHECK(sol.vf.W(xhat) ==
          doctest::Approx(sol.vf.W(sol.vf.band.xtil) +
                          k * (xhat - sol.vf.band.xtil) - K).epsilon(1e-9));
    // beyond xhat the value is exactly linear with slope k
    for (double dx : {0.5, 1.0, 3.0})
        CHECK(sol.vf.W(xhat + dx) ==
              doctest::Approx(sol.vf.W(xhat) + k * dx).epsilon(1e-12));

    // marginal value normalization at the blow-up point
    const MarginalValue& mv = sol.vf.mv;
    CHECK(mv.U(x0) == doctest::Approx(1.0).epsilon(1e-10));
    double fd = (mv.U(x0 + 1e-6) - mv.U(x0 - 1e-6)) / 2e-6;
    CHECK(fd == doctest::Approx(0.0).epsilon(1e-8));

    // enough resolution near the blow-up point; the exponent accumulator
    // saturates double resolution a hair short of x0 (increments below an
    // ulp are dropped), the primitive's table reaches closer
    CHECK(sol.curve.lam_of_x.size() >= 2000);
    CHECK(sol.curve.lam_of_x.x_back() > x0 - 1e-5);
    CHECK(sol.curve.phi_of_x.x_back() > x0 - 1e-6);
}

TEST_CASE("doubling the fixed cost leaves the curve untouched and widens the band")
{
    const Solution& sol = base_solution();
    auto p = testpar::base();
    p.econ.K *= 2.0;
    Solution sol2 = solve(p);

    // K enters only through the band: identical curve bit for bit
    CHECK(sol2.curve.x0 == sol.curve.x0);
    CHECK(sol2.curve.lam_tot == sol.curve.lam_tot);
    CHECK(sol2.curve.q_start == sol.curve.q_start);
    CHECK(sol2.vf.band.xhat > sol.vf.band.xhat);
    CHECK(sol2.vf.band.xtil < sol.vf.band.xtil);
    CHECK(sol2.vf.band.cstar < sol.vf.band.cstar);
}

TEST_CASE("a fixed cost above the branch threshold forces full payout")
{
    const Solution& sol = base_solution();
    auto p = testpar::base();
    p.econ.K = 1.2 * sol.vf.band.I1_at_cbar;
    Solution sol2 = solve(p);

    CHECK(sol2.vf.band.branch == BandBranch::FullPayout);
    CHECK(sol2.vf.band.xtil == 0.0);
    CHECK(sol2.vf.band.xhat > sol2.curve.x0);
    CHECK(sol2.vf.W(0.0) == 0.0);
    CHECK(sol2.vf.Wp(sol2.vf.band.xhat) == doctest::Approx(p.econ.k).epsilon(1e-9));
    // the lump pays the whole surplus
    CHECK(sol2.vf.W(sol2.vf.band.xhat) ==
          doctest::Approx(p.econ.k * sol2.vf.band.xhat - p.econ.K).epsilon(1e-9));
}

TEST_CASE("shared-group model: solo region, anchors and samples")
{
    const Solution& sol = shock_solution();
    namespace os = oracle::shock;

    CHECK(sol.consts.case_tag == CaseTag::Case2);
    CHECK(sol.curve.q_start == doctest::Approx(os::z_k).epsilon(1e-8));
    CHECK(sol.curve.xt0 == doctest::Approx(os::xt0).epsilon(1e-8));
    CHECK(sol.curve.x0 == doctest::Approx(os::x0).epsilon(1e-8));
    CHECK(sol.vf.band.cstar == doctest::Approx(os::cstar).epsilon(1e-8));
    CHECK(sol.vf.band.xtil == doctest::Approx(os::xtil).epsilon(1e-7));
    CHECK(sol.vf.band.xhat == doctest::Approx(os::xhat).epsilon(1e-7));
    CHECK(sol.vf.mv.U0() == doctest::Approx(os::U0).epsilon(1e-7));

    CHECK(sol.vf.C1 == doctest::Approx(os::C1).epsilon(1e-7));
    CHECK(sol.vf.C3 == doctest::Approx(os::C3).epsilon(1e-7));
    // region-constant identity: C3 = (k(z_l)/delta) C1
    CHECK(sol.vf.C3 ==
          doctest::Approx(sol.aux->k_fn(sol.aux->z_l()) /
                          sol.params.econ.delta * sol.vf.C1).epsilon(1e-8));

    // cross-implementation tolerances; the reference values carry their own
    // discretization error, largest just above the segment junction (our
    // solution is unchanged under 4x grid refinement there). A sample frozen
    // at the reference x0 may land an ulp on either side of the computed
    // blow-up point, so "infinite" there means beyond 1e8.
    for (std::size_t i = 0; i < os::n_samples; ++i) {
        double x = os::x_samples[i];
        CHECK(sol.vf.W(x) == doctest::Approx(os::W_samples[i]).epsilon(1e-5));
        CHECK(sol.vf.Wp(x) == doctest::Approx(os::Wp_samples[i]).epsilon(1e-5));
        auto [q1, q2] = eval_q(sol.curve, x);
        if (std::isinf(os::q1_samples[i])) {
            CHECK(q1 > 1e8);
        } else {
            CHECK(q1 == doctest::Approx(os::q1_samples[i]).epsilon(5e-6));
            CHECK(std::abs(q2 - os::q2_samples[i]) < 5e-6);
        }
    }
}

TEST_CASE("shared-group model: the second class activates only past xt0")
{
    const Solution& sol = shock_solution();
    double xt0 = sol.curve.xt0;

    auto below = eval_q(sol.curve, 0.5 * xt0);
    CHECK(below.second == 0.0);
    CHECK(below.first > sol.curve.q_start);
    CHECK(below.first < sol.aux->z_l());

    auto above = eval_q(sol.curve, xt0 * 1.001);
    CHECK(above.second > 0.0);
    CHECK(above.second < 0.01);
    // q1 is continuous through the junction
    CHECK(above.first == doctest::Approx(sol.aux->z_l()).epsilon(5e-3));

    // solo slope relation
    const AuxContext& aux = *sol.aux;
    double delta = sol.params.econ.delta;
    double th1 = sol.params.classes[0].theta;
    for (double f : {0.3, 0.6, 0.9}) {
        double x = f * xt0, h = 1e-7;
        double q = eval_q(sol.curve, x).first;
        double fd = (eval_q(sol.curve, x + h).first -
                     eval_q(sol.curve, x - h).first) / (2.0 * h);
        double expected = (delta + th1 * aux.k_fn(q) / q) / aux.k_prime(q);
        CHECK(fd == doctest::Approx(expected).epsilon(1e-4));
    }
}

TEST_CASE("case dispatch guards")
{
    auto ctx1 = std::make_shared<const AuxContext>(testpar::base());
    auto ctx2 = std::make_shared<const AuxContext>(testpar::shock());
    CHECK_THROWS_AS(build_case2_curves(ctx1), WrongCaseError);
    CHECK_THROWS_AS(build_case1_curves(ctx2), WrongCaseError);
}

TEST_CASE("relabeled input classes produce the same solution")
{
    auto p = testpar::base();
    std::swap(p.classes[0], p.classes[1]);
    for (auto& g : p.groups) std::swap(g.p[0], g.p[1]);
    Solution flipped = solve(p);
    const Solution& sol = base_solution();

    CHECK(flipped.swapped);
    CHECK(flipped.curve.x0 == doctest::Approx(sol.curve.x0).epsilon(1e-12));
    CHECK(flipped.vf.band.xhat == doctest::Approx(sol.vf.band.xhat).epsilon(1e-10));
    CHECK(flipped.vf.W(2.0) == doctest::Approx(sol.vf.W(2.0)).epsilon(1e-12));
    // internal ordering equals the normalized one: components come out equal
    auto qa = eval_q(flipped.curve, 1.0);
    auto qb = eval_q(sol.curve, 1.0);
    CHECK(qa.first == doctest::Approx(qb.first).epsilon(1e-10));
    CHECK(qa.second == doctest::Approx(qb.second).epsilon(1e-10));
}
