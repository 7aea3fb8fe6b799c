#include "divband/auxiliary.hpp"

#include <algorithm>
#include <cmath>

namespace divband {

namespace {
constexpr double kSeedTableTop = 256.0;   // l2 seed-table range; affine seed beyond
}

AuxContext::AuxContext(const ModelParams& params, Tolerances tol)
    : params_(params.normalized()), tol_(tol)
{
    c1_ = c2_ = c3_ = 0.0;
    for (const GroupSpec& gr : params_.groups) {
        c1_ += gr.lambda * gr.p[0];
        c2_ += gr.lambda * gr.p[1];
        c3_ += gr.lambda * gr.p[0] * gr.p[1];
    }
    th1_ = params_.classes[0].theta;
    th2_ = params_.classes[1].theta;
    const double mu1 = params_.classes[0].claim.mean();
    const double mu2 = params_.classes[1].claim.mean();
    k0_ = c1_ * (params_.classes[0].eta - th1_) * mu1
        + c2_ * (params_.classes[1].eta - th2_) * mu2;

    z_l_ = compute_z_l();
    z_k_ = compute_z_k();

    // seed table for l2^{-1}: exact values and slopes on a coarse grid
    std::vector<double> qs = retention_grid(0.0, kSeedTableTop, 480);
    std::vector<double> ys(qs.size()), ms(qs.size());
    for (std::size_t i = 0; i < qs.size(); ++i) {
        ys[i] = l2(qs[i]);
        ms[i] = th1_ - (c3_ / c1_) * th2_ * params_.classes[1].claim.survival(qs[i]);
    }
    l2_seed_ = MonotoneTable(std::move(qs), std::move(ys), std::move(ms));
}

double AuxContext::l1(double q) const
{
    return th2_ * q - (c3_ / c2_) * th1_ * params_.classes[0].claim.g(q);
}

double AuxContext::l2(double q) const
{
    return th1_ * q - (c3_ / c1_) * th2_ * params_.classes[1].claim.g(q);
}

double AuxContext::l2_inverse(double v) const
{
    if (v < 0.0) throw NegativeArgumentError("l2_inverse: negative argument");
    if (v == 0.0) return 0.0;
    if (v == INFQ) return INFQ;
    const Claim& cl2 = params_.classes[1].claim;
    const double lo = v / th1_;
    const double hi = (v + (c3_ / c1_) * th2_ * cl2.mean()) / th1_;
    // l2 is convex and increasing, and l2(hi) >= v, so Newton started at the
    // upper bracket converges monotonically; the table only sharpens the seed.
    double q = (v <= l2_seed_.y_back()) ? l2_seed_.inverse(v) : hi;
    q = std::clamp(q, lo, hi);
    for (int it = 0; it < 40; ++it) {
        double f = l2(q) - v;
        double fp = th1_ - (c3_ / c1_) * th2_ * cl2.survival(q);
        double qn = std::clamp(q - f / fp, lo, hi);
        if (std::abs(qn - q) <= 1e-15 * (1.0 + std::abs(qn))) return qn;
        q = qn;
    }
    return q;
}

double AuxContext::ell(double q) const
{
    if (q == INFQ) return INFQ;
    double v = l1(q);
    if (v < 0.0) {
        // only roundoff slack at q = z_l is forgiven
        if (q >= z_l_ - 1e-12 * (1.0 + z_l_)) v = 0.0;
        else throw DomainError("ell: argument below z_l");
    }
    return l2_inverse(v);
}

double AuxContext::ell_prime(double q) const
{
    double e = ell(q);
    double lp1 = th2_ - (c3_ / c2_) * th1_ * params_.classes[0].claim.survival(q);
    double lp2 = th1_ - (c3_ / c1_) * th2_ * params_.classes[1].claim.survival(e);
    return lp1 / lp2;
}

double AuxContext::k_fn(double x) const
{
    const Claim& cl1 = params_.classes[0].claim;
    if (x < 0.0) throw DomainError("k_fn: negative argument");
    if (x == 0.0) return k0_;                       // analytic limit
    if (x == INFQ) return c1_ * th1_ * cl1.mean() + k0_;
    return c1_ * th1_ * (cl1.g(x) - cl1.g2m(x) / (2.0 * x)) + k0_;
}

double AuxContext::k_prime(double x) const
{
    if (!(x > 0.0)) throw DomainError("k_prime: requires x > 0");
    if (x == INFQ) return 0.0;
    return c1_ * th1_ * params_.classes[0].claim.g2m(x) / (2.0 * x * x);
}

double AuxContext::H(double q) const
{
    if (q < z_l_ - 1e-12 * (1.0 + z_l_)) throw DomainError("H: q below z_l");
    q = std::max(q, z_l_);
    if (q == 0.0) return k0_;                       // z_l = 0; continuous limit
    const Claim& cl1 = params_.classes[0].claim;
    const Claim& cl2 = params_.classes[1].claim;
    if (q == INFQ)
        return k0_ + c1_ * th1_ * cl1.mean() + c2_ * th2_ * cl2.mean();
    double e = ell(q);
    double g1 = cl1.g(q), g2 = cl2.g(e);
    double dr = k0_ + c1_ * th1_ * g1 + c2_ * th2_ * g2;
    double B = c1_ * cl1.g2m(q) + c2_ * cl2.g2m(e) + 2.0 * c3_ * g1 * g2;
    double D = c1_ * q + c3_ * g2;
    return dr - 0.5 * c1_ * th1_ * B / D;
}

double AuxContext::H_prime(double q) const
{
    if (q < z_l_ - 1e-12 * (1.0 + z_l_)) throw DomainError("H_prime: q below z_l");
    q = std::max(q, z_l_);
    if (q == 0.0) {
        // z_l = 0 limit: B ~ O(q^2), D ~ c1 q, so H' -> drift'(0) pieces; use a
        // one-sided evaluation just off zero (only reachable in tests)
        q = 1e-9;
    }
    if (q == INFQ) return 0.0;
    const Claim& cl1 = params_.classes[0].claim;
    const Claim& cl2 = params_.classes[1].claim;
    double e = ell(q);
    double g1 = cl1.g(q), g2 = cl2.g(e);
    double B = c1_ * cl1.g2m(q) + c2_ * cl2.g2m(e) + 2.0 * c3_ * g1 * g2;
    double D = c1_ * q + c3_ * g2;
    double ellp = ell_prime(q);
    double Dp = c1_ + c3_ * cl2.survival(e) * ellp;
    return 0.5 * c1_ * th1_ * B * Dp / (D * D);
}

double AuxContext::rho_coupled(double q) const
{
    if (q == INFQ) return 0.0;
    double e = ell(q);
    return c1_ * th1_ / (c1_ * q + c3_ * params_.classes[1].claim.g(e));
}

double AuxContext::compute_z_l() const
{
    double lp1_at_0 = th2_ - (c3_ / c2_) * th1_;
    if (lp1_at_0 >= 0.0) return 0.0;
    // l1 is convex with l1(0) = 0 and negative initial slope; since
    // g1 <= mu1 the root sits in (0, c3 th1 mu1 / (c2 th2)]
    double hi = c3_ * th1_ * params_.classes[0].claim.mean() / (c2_ * th2_);
    while (l1(hi) <= 0.0) hi *= 2.0;
    double lo = std::min(1e-8, hi * 1e-6);
    return find_root([this](double q) { return l1(q); }, lo, hi, tol_.root_abs);
}

double AuxContext::compute_z_k() const
{
    if (k_fn(INFQ) <= 0.0) return INFQ;
    double hi = 1.0;
    while (k_fn(hi) <= 0.0) hi *= 2.0;
    return find_root([this](double x) { return k_fn(x); }, 1e-12, hi, tol_.root_abs);
}

double AuxContext::q0() const
{
    if (case_tag() != CaseTag::Case1)
        throw WrongCaseError("q0: H has no root when z_l > z_k");
    double at_zl = H(z_l_);
    if (at_zl >= 0.0) return z_l_;                  // z_l = z_k boundary case
    double hi = std::max(1.0, 2.0 * z_l_);
    while (H(hi) <= 0.0) hi *= 2.0;
    return find_root([this](double q) { return H(q); }, z_l_, hi, tol_.root_abs);
}

} // namespace divband
