#include "divband/model.hpp"

#include <cmath>
#include <sstream>

#include "divband/auxiliary.hpp"
#include "divband/numerics.hpp"

namespace divband {

// ---- Claim -------------------------------------------------------------------

Claim Claim::exponential(double beta)
{
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw ConfigError("Claim::exponential: beta must be positive and finite");
    Claim c;
    c.beta_ = beta;
    c.mean_ = 1.0 / beta;
    c.second_ = 2.0 / (beta * beta);
    return c;
}

Claim Claim::from_survival(std::function<double(double)> survival,
                           double mean, double second_moment)
{
    if (!survival) throw ConfigError("Claim::from_survival: empty survival function");
    if (!(mean > 0.0) || !(second_moment > 0.0) ||
        !std::isfinite(mean) || !std::isfinite(second_moment))
        throw ConfigError("Claim::from_survival: moments must be positive and finite");
    Claim c;
    c.survival_ = std::move(survival);
    c.mean_ = mean;
    c.second_ = second_moment;
    return c;
}

double Claim::survival(double q) const
{
    if (q <= 0.0) return 1.0;
    if (q == INFQ) return 0.0;
    if (beta_ > 0.0) return std::exp(-beta_ * q);
    double s = survival_(q);
    if (!std::isfinite(s) || s < 0.0 || s > 1.0)
        throw NonFiniteError("Claim::survival: supplied function left [0,1]");
    return s;
}

double Claim::g(double q) const
{
    if (q <= 0.0) return 0.0;
    if (q == INFQ) return mean_;
    if (beta_ > 0.0) return -std::expm1(-beta_ * q) / beta_;
    return integrate([this](double s) { return survival(s); }, 0.0, q, 1e-12);
}

double Claim::g2m(double q) const
{
    if (q <= 0.0) return 0.0;
    if (q == INFQ) return second_;
    if (beta_ > 0.0) {
        // 2/beta^2 * (1 - (1+s) e^{-s}) with s = beta q, written to avoid
        // cancellation for small s
        double s = beta_ * q;
        double es = std::exp(-s);
        return 2.0 / (beta_ * beta_) * (-std::expm1(-s) - s * es);
    }
    return integrate([this](double s) { return 2.0 * s * survival(s); }, 0.0, q, 1e-12);
}

double Claim::g_inverse(double v) const
{
    if (v < 0.0) throw NegativeArgumentError("Claim::g_inverse: negative argument");
    if (v == 0.0) return 0.0;
    if (v >= mean_) {
        if (v == mean_) return INFQ;
        throw DomainError("Claim::g_inverse: value exceeds the claim mean");
    }
    if (beta_ > 0.0) return -std::log1p(-beta_ * v) / beta_;
    double hi = v;
    while (g(hi) < v) hi *= 2.0;
    return find_root([&](double q) { return g(q) - v; }, 0.0, hi, 1e-12);
}

// ---- ModelParams ---------------------------------------------------------------

void ModelParams::validate() const
{
    auto fail = [](const std::string& what) { throw ConfigError("model: " + what); };

    for (const ClassSpec& cl : classes) {
        if (!(cl.eta > 0.0)) fail("class '" + cl.name + "': eta must be > 0");
        if (!(cl.theta > cl.eta))
            fail("class '" + cl.name + "': theta must exceed eta (non-cheap reinsurance)");
        if (!(cl.claim.mean() > 0.0)) fail("class '" + cl.name + "': claim distribution unset");
    }
    if (groups.empty()) fail("at least one arrival group is required");
    for (const GroupSpec& gr : groups) {
        if (!(gr.lambda > 0.0) || !std::isfinite(gr.lambda))
            fail("group '" + gr.name + "': lambda must be positive and finite");
        for (double p : gr.p)
            if (!(p >= 0.0 && p <= 1.0))
                fail("group '" + gr.name + "': thinning probabilities must lie in [0,1]");
    }
    for (int l = 0; l < 2; ++l) {
        double cl = 0.0;
        for (const GroupSpec& gr : groups) cl += gr.lambda * gr.p[static_cast<std::size_t>(l)];
        if (!(cl > 0.0))
            fail("class '" + classes[static_cast<std::size_t>(l)].name +
                 "' is unreachable: every group has p = 0 for it");
    }
    if (!(econ.delta > 0.0)) fail("delta must be > 0");
    if (!(econ.k > 0.0 && econ.k < 1.0)) fail("k must lie strictly inside (0,1)");
    if (!(econ.K > 0.0)) fail("K must be > 0");
}

ModelParams ModelParams::normalized() const
{
    validate();
    ModelParams out = *this;
    out.swapped = false;
    if (classes[0].theta < classes[1].theta) {
        std::swap(out.classes[0], out.classes[1]);
        for (GroupSpec& gr : out.groups) std::swap(gr.p[0], gr.p[1]);
        out.swapped = true;
    }
    return out;
}

// ---- derived constants -----------------------------------------------------------

DerivedConstants derive_constants(const ModelParams& params)
{
    ModelParams p = params.normalized();
    DerivedConstants d;
    for (const GroupSpec& gr : p.groups) {
        d.c1 += gr.lambda * gr.p[0];
        d.c2 += gr.lambda * gr.p[1];
        d.c3 += gr.lambda * gr.p[0] * gr.p[1];
    }
    d.mu1 = p.classes[0].claim.mean();
    d.mu2 = p.classes[1].claim.mean();
    d.m1 = p.classes[0].claim.second_moment();
    d.m2 = p.classes[1].claim.second_moment();

    const double th1 = p.classes[0].theta, th2 = p.classes[1].theta;
    const double et1 = p.classes[0].eta, et2 = p.classes[1].eta;
    d.k0 = d.c1 * (et1 - th1) * d.mu1 + d.c2 * (et2 - th2) * d.mu2;
    d.K1 = 0.5 * (d.c1 * d.m1 + d.c2 * d.m2) + d.c3 * d.mu1 * d.mu2;
    d.K2 = d.c1 * et1 * d.mu1 + d.c2 * et2 * d.mu2;

    // roots of K1 r^2 + K2 r - delta = 0, with the stable-product form for r-
    const double delta = p.econ.delta;
    double disc = std::sqrt(d.K2 * d.K2 + 4.0 * delta * d.K1);
    d.r_plus = (-d.K2 + disc) / (2.0 * d.K1);
    d.r_minus = -delta / (d.K1 * d.r_plus);
    d.b1 = d.r_minus / (d.r_plus * (d.r_minus - d.r_plus));
    d.b2 = d.r_plus / (d.r_minus * (d.r_plus - d.r_minus));

    AuxContext aux(p);
    d.z_l = aux.z_l();
    d.z_k = aux.z_k();
    d.case_tag = aux.case_tag();
    return d;
}

// ---- diffusion coefficients --------------------------------------------------------

double drift(const DerivedConstants& c, const ModelParams& p, double q1, double q2)
{
    const ClassSpec& a = p.classes[0];
    const ClassSpec& b = p.classes[1];
    return c.c1 * (a.theta * a.claim.g(q1) - (a.theta - a.eta) * a.claim.mean())
         + c.c2 * (b.theta * b.claim.g(q2) - (b.theta - b.eta) * b.claim.mean());
}

double variance(const DerivedConstants& c, const ModelParams& p, double q1, double q2)
{
    const Claim& a = p.classes[0].claim;
    const Claim& b = p.classes[1].claim;
    return c.c1 * a.g2m(q1) + c.c2 * b.g2m(q2) + 2.0 * c.c3 * a.g(q1) * b.g(q2);
}

} // namespace divband
