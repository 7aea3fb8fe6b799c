#include "divband/solver.hpp"

#include <algorithm>
#include <cmath>

namespace divband {

namespace {

// Collects (x, y, slope) rows, dropping rows that would break the strict
// monotonicity a MonotoneTable requires (the far tail produces increments
// below double resolution in the exponent accumulator).
struct TableBuilder {
    std::vector<double> xs, ys, ms;

    void push(double x, double y, double m)
    {
        if (!xs.empty()) {
            if (!(x > xs.back() + 1e-15 * (1.0 + std::abs(x)))) return;
            if (!(y > ys.back() + 1e-16 * (1.0 + std::abs(y)))) return;
        }
        xs.push_back(x);
        ys.push_back(y);
        ms.push_back(m);
    }

    MonotoneTable take()
    {
        return MonotoneTable(std::move(xs), std::move(ys), std::move(ms));
    }
};

double calc_K1(const AuxContext& ctx)
{
    const ModelParams& p = ctx.params();
    return 0.5 * (ctx.c1() * p.classes[0].claim.second_moment() +
                  ctx.c2() * p.classes[1].claim.second_moment())
         + ctx.c3() * p.classes[0].claim.mean() * p.classes[1].claim.mean();
}

// q-nodes of the far tail, geometric in u = 1/q from q_hi up to 1/u_min.
std::vector<double> tail_nodes_q(double q_hi, double u_min, std::size_t n)
{
    std::vector<double> us = geometric_grid(u_min, 1.0 / q_hi, n);
    std::vector<double> qs;
    qs.reserve(n);
    for (auto it = us.rbegin(); it != us.rend(); ++it) {
        double q = 1.0 / *it;
        if (q > q_hi) qs.push_back(q);
    }
    return qs;
}

struct Accumulators {
    TableBuilder lam, phi;
    double x = 0.0, lamv = 0.0, phiv = 0.0;   // current state
};

// Marches the coupled-region system in q, recording x(q) into `seg` and the
// integrating-factor accumulators into `acc`. Returns the final q reached.
double march_coupled(const AuxContext& ctx, const SolveOptions& opt,
                     const std::vector<double>& nodes,
                     TableBuilder& seg, Accumulators& acc)
{
    const double delta = ctx.params().econ.delta;
    auto rhs = [&](double q, const std::array<double, 3>& y) -> std::array<double, 3> {
        double rho = ctx.rho_coupled(q);
        double xp = ctx.H_prime(q) / (delta + rho * ctx.H(q));
        return {xp, rho * xp, std::exp(-y[1]) * xp};
    };

    auto record = [&](double q, const std::array<double, 3>& y) {
        double rho = ctx.rho_coupled(q);
        double xp = ctx.H_prime(q) / (delta + rho * ctx.H(q));
        seg.push(q, y[0], xp);
        acc.lam.push(y[0], y[1], rho);
        acc.phi.push(y[0], y[2], std::exp(-y[1]));
    };

    std::array<double, 3> y{acc.x, acc.lamv, acc.phiv};
    double q = nodes.front();
    record(q, y);
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        ode_advance<3>(rhs, q, y, nodes[i], opt.ode_rtol, opt.ode_atol);
        record(q, y);
    }
    acc.x = y[0];
    acc.lamv = y[1];
    acc.phiv = y[2];

    // tail sanity: the integrand must have settled onto its 1/q^2 asymptote
    double xp_end = rhs(q, y)[0];
    double th1 = ctx.params().classes[0].theta;
    double scaled = xp_end * q * q * delta / (th1 * calc_K1(ctx));
    if (std::abs(scaled - 1.0) > 1e-3)
        throw TailNotQuadraticError("retention tail integrand is not quadratic-decay");
    return q;
}

void finalize_curve(const AuxContext& ctx, RetentionCurve& curve,
                    Accumulators& acc, double q_end)
{
    const double delta = ctx.params().econ.delta;
    const double th1 = ctx.params().classes[0].theta;
    curve.asym_coef = th1 * calc_K1(ctx) / delta;
    curve.x0 = acc.x + curve.asym_coef / q_end;
    curve.lam_tot = acc.lamv + 0.5 * th1 * curve.asym_coef / (q_end * q_end);
    curve.phi_tot = acc.phiv + std::exp(-curve.lam_tot) * (curve.x0 - acc.x);
    curve.lam_of_x = acc.lam.take();
    curve.phi_of_x = acc.phi.take();
}

} // namespace

RetentionCurve build_case1_curves(const std::shared_ptr<const AuxContext>& ctx,
                                  const SolveOptions& opt)
{
    if (ctx->case_tag() != CaseTag::Case1)
        throw WrongCaseError("build_case1_curves: parameters classify as the split case");
    RetentionCurve curve;
    curve.tag = CaseTag::Case1;
    curve.aux = ctx;
    curve.q_start = ctx->q0();
    curve.xt0 = 0.0;

    std::vector<double> nodes = retention_grid(curve.q_start, opt.q_max, opt.q_nodes);
    std::vector<double> tail = tail_nodes_q(opt.q_max, opt.u_min, opt.tail_nodes);
    nodes.insert(nodes.end(), tail.begin(), tail.end());

    TableBuilder seg;
    Accumulators acc;
    double q_end = march_coupled(*ctx, opt, nodes, seg, acc);
    finalize_curve(*ctx, curve, acc, q_end);
    curve.segments.push_back({seg.take(), true});
    return curve;
}

RetentionCurve build_case2_curves(const std::shared_ptr<const AuxContext>& ctx,
                                  const SolveOptions& opt)
{
    if (ctx->case_tag() != CaseTag::Case2)
        throw WrongCaseError("build_case2_curves: parameters classify as the coupled case");
    RetentionCurve curve;
    curve.tag = CaseTag::Case2;
    curve.aux = ctx;
    curve.q_start = ctx->z_k();

    const double delta = ctx->params().econ.delta;
    const double th1 = ctx->params().classes[0].theta;

    // Leading segment: only the first class is reinsured, q2 = 0.
    auto rhs = [&](double q, const std::array<double, 3>& y) -> std::array<double, 3> {
        double xp = ctx->k_prime(q) / (delta + th1 * ctx->k_fn(q) / q);
        return {xp, (th1 / q) * xp, std::exp(-y[1]) * xp};
    };
    std::vector<double> solo = retention_grid(ctx->z_k(), ctx->z_l(), opt.solo_nodes);

    TableBuilder seg1;
    Accumulators acc;
    std::array<double, 3> y{0.0, 0.0, 0.0};
    double q = solo.front();
    auto record = [&](double qv, const std::array<double, 3>& yv) {
        double xp = ctx->k_prime(qv) / (delta + th1 * ctx->k_fn(qv) / qv);
        seg1.push(qv, yv[0], xp);
        acc.lam.push(yv[0], yv[1], th1 / qv);
        acc.phi.push(yv[0], yv[2], std::exp(-yv[1]));
    };
    record(q, y);
    for (std::size_t i = 1; i < solo.size(); ++i) {
        ode_advance<3>(rhs, q, y, solo[i], opt.ode_rtol, opt.ode_atol);
        record(q, y);
    }
    acc.x = y[0];
    acc.lamv = y[1];
    acc.phiv = y[2];
    curve.xt0 = acc.x;
    curve.segments.push_back({seg1.take(), false});

    // Coupled segment from z_l onward, continuing the same accumulators.
    std::vector<double> nodes = retention_grid(ctx->z_l(), opt.q_max, opt.q_nodes);
    std::vector<double> tail = tail_nodes_q(opt.q_max, opt.u_min, opt.tail_nodes);
    nodes.insert(nodes.end(), tail.begin(), tail.end());

    TableBuilder seg2;
    double q_end = march_coupled(*ctx, opt, nodes, seg2, acc);
    finalize_curve(*ctx, curve, acc, q_end);
    curve.segments.push_back({seg2.take(), true});
    return curve;
}

// ---- marginal value ---------------------------------------------------------

double MarginalValue::U(double x) const
{
    if (x < 0.0) throw DomainError("MarginalValue::U: negative argument");
    if (x <= x0) return std::exp(lam_tot - lam_of_x(x));
    double d = x - x0;
    return b1 * r_plus * std::exp(r_plus * d) + b2 * r_minus * std::exp(r_minus * d);
}

double MarginalValue::Phi(double x) const
{
    if (x < 0.0) throw DomainError("MarginalValue::Phi: negative argument");
    if (x <= x0) return std::exp(lam_tot) * phi_of_x(x);
    double d = x - x0;
    return Phi_x0() + b1 * std::expm1(r_plus * d) + b2 * std::expm1(r_minus * d);
}

double MarginalValue::U0() const { return std::exp(lam_tot); }
double MarginalValue::Phi_x0() const { return std::exp(lam_tot) * phi_tot; }

MarginalValue make_marginal_value(const RetentionCurve& curve,
                                  const DerivedConstants& consts)
{
    MarginalValue mv;
    mv.lam_of_x = curve.lam_of_x;
    mv.phi_of_x = curve.phi_of_x;
    mv.lam_tot = curve.lam_tot;
    mv.phi_tot = curve.phi_tot;
    mv.x0 = curve.x0;
    mv.r_plus = consts.r_plus;
    mv.r_minus = consts.r_minus;
    mv.b1 = consts.b1;
    mv.b2 = consts.b2;
    return mv;
}

// ---- band determination -------------------------------------------------------

Band determine_band(const MarginalValue& mv, const Economics& econ,
                    const Tolerances& tol)
{
    const double k = econ.k, K = econ.K;
    const double U0 = mv.U0();
    if (!std::isfinite(U0) || U0 <= 1.0)
        throw DegenerateBandError("determine_band: U(0) must be finite and exceed 1");

    Band band;
    band.cbar = k / U0;

    auto xhat_of = [&](double c) {
        if (c >= k) return mv.x0;
        double lo = mv.x0, hi = mv.x0 + 1.0;
        while (c * mv.U(hi) < k) {
            lo = hi;
            hi = mv.x0 + 2.0 * (hi - mv.x0);
            if (hi > mv.x0 + 1e9)
                throw DegenerateBandError("determine_band: no payout threshold above x0");
        }
        return find_root([&](double x) { return c * mv.U(x) - k; }, lo, hi, tol.root_abs);
    };
    // lower band edge: where c U(x) = k below x0, via the exponent table
    auto xtil_of = [&](double c) {
        if (c <= band.cbar) return 0.0;
        if (c >= k) return mv.x0;
        double target = mv.lam_tot - std::log(k / c);
        if (target <= mv.lam_of_x.y_front()) return 0.0;
        if (target >= mv.lam_of_x.y_back()) {
            double rho_end = mv.lam_of_x.slopes().back();
            double x = mv.lam_of_x.x_back();
            if (rho_end > 0.0) x += (target - mv.lam_of_x.y_back()) / rho_end;
            return std::min(x, mv.x0);
        }
        return mv.lam_of_x.inverse(target);
    };
    auto I1 = [&](double c) {
        double xh = xhat_of(c), xt = xtil_of(c);
        return k * (xh - xt) - c * (mv.Phi(xh) - mv.Phi(xt));
    };
    auto I2 = [&](double c) {
        double xh = xhat_of(c);
        return k * xh - c * mv.Phi(xh);
    };

    band.I1_at_cbar = I1(band.cbar);
    if (band.I1_at_cbar > K) {
        band.branch = BandBranch::Interior;
        band.cstar = find_root([&](double c) { return I1(c) - K; }, band.cbar, k, 1e-13);
        band.xtil = xtil_of(band.cstar);
    } else {
        band.branch = BandBranch::FullPayout;
        band.xtil = 0.0;
        double c_lo = band.cbar;
        int guard = 0;
        while (I2(c_lo) <= K) {
            c_lo *= 0.5;
            if (++guard > 200)
                throw DegenerateBandError("determine_band: payout equation has no root");
        }
        band.cstar = find_root([&](double c) { return I2(c) - K; }, c_lo, k, 1e-13);
    }
    band.xhat = xhat_of(band.cstar);

    if (!(band.cstar > 0.0 && band.cstar < k) ||
        !(band.xtil < mv.x0 && mv.x0 < band.xhat) || !(band.xtil >= 0.0))
        throw DegenerateBandError("determine_band: solved band violates its geometry");
    return band;
}

// ---- value function ------------------------------------------------------------

double ValueFunction::W(double x) const
{
    if (x < 0.0) throw NegativeSurplusError("W: negative surplus");
    if (x <= band.xhat) return C2 * mv.Phi(x);
    return C2 * mv.Phi(band.xhat) + econ.k * (x - band.xhat);
}

double ValueFunction::Wp(double x) const
{
    if (x < 0.0) throw NegativeSurplusError("W': negative surplus");
    if (x < band.xhat) return C2 * mv.U(x);
    return econ.k;
}

double ValueFunction::Wpp(double x) const
{
    if (x < 0.0) throw NegativeSurplusError("W'': negative surplus");
    if (x >= band.xhat) return 0.0;
    if (x < mv.x0)
        return -C2 * mv.lam_of_x.derivative(x) * mv.U(x);
    double d = x - mv.x0;
    return C2 * (mv.b1 * mv.r_plus * mv.r_plus * std::exp(mv.r_plus * d) +
                 mv.b2 * mv.r_minus * mv.r_minus * std::exp(mv.r_minus * d));
}

ValueFunction build_value_function(const std::shared_ptr<const AuxContext>& ctx,
                                   const RetentionCurve& curve,
                                   const SolveOptions& opt)
{
    DerivedConstants consts = derive_constants(ctx->params());
    ValueFunction vf;
    vf.tag = curve.tag;
    vf.xt0 = curve.xt0;
    vf.x0 = curve.x0;
    vf.econ = ctx->params().econ;
    vf.mv = make_marginal_value(curve, consts);
    vf.band = determine_band(vf.mv, vf.econ, opt.tol);
    vf.C2 = vf.band.cstar;
    if (curve.tag == CaseTag::Case2) {
        vf.C1 = vf.C2 * vf.mv.U(curve.xt0);
        vf.C3 = vf.C2 * vf.mv.Phi(curve.xt0);
    } else {
        vf.C1 = vf.C2;
        vf.C3 = 0.0;
    }
    return vf;
}

// ---- evaluation ------------------------------------------------------------------

std::pair<double, double> eval_q(const RetentionCurve& curve, double x)
{
    if (x < 0.0) throw NegativeSurplusError("eval_q: negative surplus");
    if (x >= curve.x0) return {INFQ, INFQ};

    if (curve.tag == CaseTag::Case2 && x < curve.xt0) {
        const MonotoneTable& t = curve.segments.front().x_of_q;
        return {t.inverse(std::max(x, t.y_front())), 0.0};
    }
    const MonotoneTable& t = curve.segments.back().x_of_q;
    double q1;
    if (x >= t.y_back()) {
        q1 = curve.asym_coef / (curve.x0 - x);       // analytic sliver next to x0
    } else {
        q1 = t.inverse(std::max(x, t.y_front()));
    }
    return {q1, curve.aux->ell(q1)};
}

double eval_W(const ValueFunction& vf, double x) { return vf.W(x); }

// ---- orchestration -----------------------------------------------------------------

Solution solve(const ModelParams& params, const SolveOptions& opt)
{
    Solution s;
    s.params = params.normalized();
    s.swapped = s.params.swapped;
    s.aux = std::make_shared<AuxContext>(s.params, opt.tol);
    s.consts = derive_constants(s.params);
    s.curve = (s.aux->case_tag() == CaseTag::Case1)
                  ? build_case1_curves(s.aux, opt)
                  : build_case2_curves(s.aux, opt);
    s.vf = build_value_function(s.aux, s.curve, opt);
    s.options = opt;
    return s;
}

} // namespace divband
