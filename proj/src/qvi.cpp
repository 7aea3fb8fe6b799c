#include "divband/qvi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace divband {

namespace {

struct AxisData {
    std::vector<double> q;       // log-spaced nodes with INFQ appended
    std::vector<double> g, G;    // class moment functions on those nodes
    double step_ratio = 1.0;
};

AxisData make_axis(const Claim& claim, const QviOptions& opt)
{
    AxisData a;
    a.q = geometric_grid(opt.q_lo, opt.q_hi, opt.q_axis);
    a.step_ratio = std::pow(opt.q_hi / opt.q_lo,
                            1.0 / static_cast<double>(opt.q_axis - 1));
    a.q.push_back(INFQ);
    a.g.reserve(a.q.size());
    a.G.reserve(a.q.size());
    for (double q : a.q) {
        a.g.push_back(claim.g(q));
        a.G.push_back(claim.g2m(q));
    }
    return a;
}

// argmax within one grid cell of the curve's retention (log metric);
// off-grid curve values (0 or beyond the last finite node) match the
// nearest end node or the sentinel.
bool cell_match(double q_argmax, double q_curve, const AxisData& axis)
{
    const double last_finite = axis.q[axis.q.size() - 2];
    const double slack = 1.6 * std::log(axis.step_ratio);
    if (q_curve == INFQ || q_curve >= last_finite)
        return q_argmax == INFQ || q_argmax >= last_finite / axis.step_ratio;
    if (q_argmax == INFQ) return false;
    if (q_curve <= axis.q.front())
        return q_argmax <= axis.q.front() * (1.0 + 1e-12);
    return std::abs(std::log(q_argmax / q_curve)) <= slack;
}

GeneratorRecord generator_core(const Solution& sol, double x,
                               double Wv, double Wpv, double Wppv,
                               const AxisData& a1, const AxisData& a2,
                               const QviOptions&)
{
    const DerivedConstants& c = sol.consts;
    const double th1 = sol.params.classes[0].theta;
    const double th2 = sol.params.classes[1].theta;
    const double delta = sol.params.econ.delta;
    const double base = -delta * Wv;

    GeneratorRecord rec;
    rec.x = x;
    double best = -std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < a1.q.size(); ++i) {
        const double d1 = c.k0 + c.c1 * th1 * a1.g[i];
        const double v1 = c.c1 * a1.G[i];
        const double cross = 2.0 * c.c3 * a1.g[i];
        for (std::size_t j = 0; j < a2.q.size(); ++j) {
            double dr = d1 + c.c2 * th2 * a2.g[j];
            double var = v1 + c.c2 * a2.G[j] + cross * a2.g[j];
            double r = 0.5 * var * Wppv + dr * Wpv + base;
            if (r > best) {
                best = r;
                bi = i;
                bj = j;
            }
        }
    }
    rec.grid_max = best;
    rec.argmax_q1 = a1.q[bi];
    rec.argmax_q2 = a2.q[bj];

    auto [q1, q2] = eval_q(sol.curve, x);
    double dr = drift(c, sol.params, q1, q2);
    double var = variance(c, sol.params, q1, q2);
    rec.at_curve = 0.5 * var * Wppv + dr * Wpv + base;
    // Position match is meaningless once the transforms saturate (every large
    // retention ties to machine precision), so a value tie also counts: no
    // grid point does materially better than the curve's pair.
    bool tie = rec.grid_max <= rec.at_curve + 1e-9 * (1.0 + std::abs(base));
    rec.argmax_matches = tie || (cell_match(rec.argmax_q1, q1, a1) &&
                                 cell_match(rec.argmax_q2, q2, a2));
    return rec;
}

double intervention_core(const std::function<double(double)>& W,
                         const Economics& econ, double x, std::size_t n,
                         double xtil, bool have_xtil)
{
    if (!(x > 0.0)) throw DomainError("intervention_value: requires x > 0");
    const double k = econ.k, K = econ.K;
    auto value = [&](double eta) { return W(x - eta) + k * eta - K; };

    double best_eta = x, best = value(x);             // full-payout candidate
    for (std::size_t i = 1; i < n; ++i) {
        double eta = x * static_cast<double>(i) / static_cast<double>(n);
        double v = value(eta);
        if (v > best) {
            best = v;
            best_eta = eta;
        }
    }
    // golden-section refinement inside the bracketing grid cells
    double step = x / static_cast<double>(n);
    double lo = std::max(step * 1e-9, best_eta - step);
    double hi = std::min(x, best_eta + step);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c1 = hi - gr * (hi - lo), c2 = lo + gr * (hi - lo);
    double f1 = value(c1), f2 = value(c2);
    for (int it = 0; it < 80 && hi - lo > 1e-13 * (1.0 + x); ++it) {
        if (f1 < f2) {
            lo = c1;
            c1 = c2;
            f1 = f2;
            c2 = lo + gr * (hi - lo);
            f2 = value(c2);
        } else {
            hi = c2;
            c2 = c1;
            f2 = f1;
            c1 = hi - gr * (hi - lo);
            f1 = value(c1);
        }
    }
    best = std::max({best, f1, f2});
    if (have_xtil && x > xtil)
        best = std::max(best, value(x - xtil));       // pay down to the band floor
    return best;
}

} // namespace

double intervention_value(const std::function<double(double)>& W,
                          const Economics& econ, double x, std::size_t eta_grid)
{
    return intervention_core(W, econ, x, eta_grid, 0.0, false);
}

double intervention_value(const ValueFunction& vf, double x, std::size_t eta_grid)
{
    return intervention_core([&vf](double y) { return vf.W(y); },
                             vf.econ, x, eta_grid, vf.band.xtil, true);
}

GeneratorRecord generator_residual(const Solution& sol, double x,
                                   const QviOptions& opt)
{
    AxisData a1 = make_axis(sol.params.classes[0].claim, opt);
    AxisData a2 = make_axis(sol.params.classes[1].claim, opt);
    return generator_core(sol, x, sol.vf.W(x), sol.vf.Wp(x), sol.vf.Wpp(x),
                          a1, a2, opt);
}

bool phi_boundary_check(const Solution& sol, double x)
{
    if (sol.curve.tag != CaseTag::Case2)
        throw WrongCaseError("phi_boundary_check: no leading segment in this case");
    if (!(x > 0.0 && x < sol.curve.xt0))
        throw DomainError("phi_boundary_check: x outside the leading region");

    const DerivedConstants& c = sol.consts;
    const ModelParams& p = sol.params;
    const double th1 = p.classes[0].theta, th2 = p.classes[1].theta;
    const double q1s = eval_q(sol.curve, x).first;

    auto phi = [&](double q1, double q2) {
        return drift(c, p, q1, q2) - (th1 / (2.0 * q1s)) * variance(c, p, q1, q2);
    };
    const double ref = phi(q1s, 0.0);

    // brute-force surface maximum
    std::vector<double> qs = geometric_grid(1e-3, 1e3, 60);
    qs.insert(qs.begin(), 0.0);
    qs.push_back(INFQ);
    double best = -std::numeric_limits<double>::infinity();
    double bq1 = 0.0, bq2 = 0.0;
    for (double q1 : qs)
        for (double q2 : qs) {
            double v = phi(q1, q2);
            if (v > best) {
                best = v;
                bq1 = q1;
                bq2 = q2;
            }
        }
    const Claim& cl1 = p.classes[0].claim;
    const Claim& cl2 = p.classes[1].claim;

    const double scale = 1.0 + std::abs(ref);
    bool grid_ok = best <= ref + 1e-9 * scale;

    // The grid argmax sits on the analytic ridge through (q1s, 0): when the
    // nearest q1 node falls below q1s, the conditional optimum in q2 is the
    // positive locus value, so judge bq2 against that, not against zero.
    const double ratio = qs[2] / qs[1];
    double locus = 0.0;
    if (bq1 < q1s) {
        double v = (c.c1 / c.c3) * (q1s - bq1);
        locus = v < cl2.mean() ? cl2.g_inverse(v) : INFQ;
    }
    bool arg_ok = bq1 > 0.0 && bq1 != INFQ &&
                  std::abs(std::log(bq1 / q1s)) <= 0.5 &&
                  bq2 <= locus * ratio + 1e-6;

    // the objective falls away from the q2 = 0 axis at the analytic point
    bool axis_ok = phi(q1s, 1e-4) <= ref + 1e-12 * scale;

    // stationarity in the first argument at the claimed maximum
    double h = 1e-5 * (1.0 + q1s);
    double fd = (phi(q1s + h, 0.0) - phi(q1s - h, 0.0)) / (2.0 * h);
    bool fd_ok = std::abs(fd) <= 1e-6 * scale;

    // along the dphi/dq1 = 0 curve, the q2-derivative must stay non-positive:
    // c2 th2 q1s - th1 (c2 q2 + c3 g1(q1)) <= 0 with q2 from the inverse map
    double lo = std::max(0.0, q1s - (c.c3 / c.c1) * cl2.mean() * (1.0 - 1e-12));
    bool stat_ok = true;
    for (int i = 0; i <= 50; ++i) {
        double q1 = lo + (q1s - lo) * static_cast<double>(i) / 50.0;
        double v = std::max(0.0, (c.c1 / c.c3) * (q1s - q1));
        if (v >= cl2.mean()) continue;
        double q2 = cl2.g_inverse(v);
        double slope = c.c2 * th2 * q1s - th1 * (c.c2 * q2 + c.c3 * cl1.g(q1));
        if (slope > 1e-9 * (1.0 + std::abs(c.c2 * th2 * q1s))) stat_ok = false;
    }
    return grid_ok && arg_ok && axis_ok && fd_ok && stat_ok;
}

SmoothnessGaps smoothness_check(const ValueFunction& vf, double perturb)
{
    SmoothnessGaps g;
    auto W = [&](double y) { return perturb * vf.W(y); };

    // second-order one-sided stencils: curvature cancels, so the measure is
    // O(h^2 W''') for a smooth function and O(1) across a genuine kink
    auto one_sided_gap = [&](double x) {
        double h = 1e-6 * (1.0 + std::abs(x));
        double right = (-3.0 * W(x) + 4.0 * W(x + h) - W(x + 2.0 * h)) / (2.0 * h);
        double left = (3.0 * W(x) - 4.0 * W(x - h) + W(x - 2.0 * h)) / (2.0 * h);
        return std::abs(right - left) / std::max(1.0, std::abs(0.5 * (right + left)));
    };
    g.wp_rel_gap_x0 = one_sided_gap(vf.x0);
    g.wp_rel_gap_xhat = one_sided_gap(vf.band.xhat);
    if (vf.tag == CaseTag::Case2) g.wp_rel_gap_xt0 = one_sided_gap(vf.xt0);

    // analytic one-sided curvature limits at x0
    double eps = 1e-9 * (1.0 + vf.x0);
    g.wpp_gap_x0 = std::abs(perturb * (vf.Wpp(vf.x0 + eps) - vf.Wpp(vf.x0 - eps)));

    g.wp_at_xhat_err = std::abs(perturb * vf.Wp(vf.band.xhat) - vf.econ.k);
    g.slope_beyond_xhat_err = std::abs(perturb * vf.Wp(vf.band.xhat + 1.0) - vf.econ.k);
    return g;
}

QviReport run_qvi_check(const Solution& sol, const QviOptions& opt)
{
    QviReport rep;
    const ValueFunction& vf = sol.vf;
    const double s = opt.perturb;
    const double delta = sol.params.econ.delta;
    auto W = [&](double y) { return s * vf.W(y); };

    rep.generator_tol = opt.tol_factor * delta * s * vf.W(vf.x0);

    AxisData a1 = make_axis(sol.params.classes[0].claim, opt);
    AxisData a2 = make_axis(sol.params.classes[1].claim, opt);

    const double xhat = vf.band.xhat;
    std::size_t matches = 0;
    double worst_at_curve = 0.0;
    rep.worst_grid_max = -std::numeric_limits<double>::infinity();
    rep.worst_intervention_gap = -std::numeric_limits<double>::infinity();
    rep.records.reserve(opt.x_points);
    for (std::size_t i = 0; i < opt.x_points; ++i) {
        double x = xhat * (static_cast<double>(i) + 0.5) /
                   static_cast<double>(opt.x_points);
        GeneratorRecord rec = generator_core(sol, x, s * vf.W(x), s * vf.Wp(x),
                                             s * vf.Wpp(x), a1, a2, opt);
        rep.worst_grid_max = std::max(rep.worst_grid_max, rec.grid_max);
        worst_at_curve = std::max(
            worst_at_curve,
            std::abs(rec.at_curve) / (1.0 + std::abs(delta * s * vf.W(x))));
        if (rec.argmax_matches) ++matches;
        rep.records.push_back(rec);

        double gap = intervention_core(W, vf.econ, x, opt.eta_grid,
                                       vf.band.xtil, true) - s * vf.W(x);
        rep.worst_intervention_gap = std::max(rep.worst_intervention_gap, gap);
    }
    rep.worst_at_curve = worst_at_curve;
    rep.argmax_match_fraction =
        static_cast<double>(matches) / static_cast<double>(opt.x_points);

    rep.intervention_gap_at_xhat =
        std::abs(intervention_core(W, vf.econ, xhat, opt.eta_grid,
                                   vf.band.xtil, true) - s * vf.W(xhat));
    rep.worst_gap_beyond_xhat = 0.0;
    for (double x : {xhat * 1.05, xhat + 1.0, xhat + 2.0}) {
        double gap = std::abs(intervention_core(W, vf.econ, x, opt.eta_grid,
                                                vf.band.xtil, true) - s * vf.W(x));
        rep.worst_gap_beyond_xhat = std::max(rep.worst_gap_beyond_xhat, gap);
    }

    rep.smooth = smoothness_check(vf, s);

    if (sol.curve.tag == CaseTag::Case2) {
        rep.phi_check_ran = true;
        rep.phi_check_ok = true;
        for (double f : {0.25, 0.5, 0.75})
            if (!phi_boundary_check(sol, f * sol.curve.xt0)) rep.phi_check_ok = false;
    }

    rep.generator_ok = rep.worst_grid_max <= rep.generator_tol &&
                       rep.worst_at_curve <= 1e-5;
    rep.intervention_ok = rep.worst_intervention_gap <= 1e-7 &&
                          rep.intervention_gap_at_xhat <= 1e-7 &&
                          rep.worst_gap_beyond_xhat <= 1e-7;
    rep.smoothness_ok = rep.smooth.wp_rel_gap_x0 <= 1e-6 &&
                        rep.smooth.wp_rel_gap_xhat <= 1e-6 &&
                        rep.smooth.wp_rel_gap_xt0 <= 1e-6 &&
                        rep.smooth.wpp_gap_x0 <= 1e-5 &&
                        rep.smooth.wp_at_xhat_err <= 1e-8 &&
                        rep.smooth.slope_beyond_xhat_err <= 1e-12;
    rep.argmax_ok = rep.argmax_match_fraction >= 0.95;
    rep.pass = rep.generator_ok && rep.intervention_ok && rep.smoothness_ok &&
               rep.argmax_ok && rep.phi_check_ok;
    return rep;
}

} // namespace divband
