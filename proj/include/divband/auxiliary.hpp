#pragma once

#include "divband/model.hpp"
#include "divband/numerics.hpp"

namespace divband {

// Scalar machinery behind the retention curves: the linking maps l1/l2 and
// their composition, the solo-region drift map k_fn, the coupled-region
// drift-to-diffusion balance H, and the structural roots that classify the
// parameter set. Construction is single-threaded; afterwards the context is
// immutable and safe to evaluate concurrently.
class AuxContext {
public:
    explicit AuxContext(const ModelParams& params, Tolerances tol = {});

    const ModelParams& params() const { return params_; }
    double c1() const { return c1_; }
    double c2() const { return c2_; }
    double c3() const { return c3_; }
    double k0() const { return k0_; }

    // Linking maps between the two retention levels on the coupled branch.
    double l1(double q) const;
    double l2(double q) const;
    double l2_inverse(double v) const;   // throws NegativeArgumentError for v < 0
    double ell(double q) const;          // l2_inverse(l1(q)), defined for q >= z_l
    double ell_prime(double q) const;

    // Solo-region drift map and its derivative.
    double k_fn(double x) const;         // x > 0 (INFQ allowed: the limit)
    double k_prime(double x) const;

    // Coupled-region profit function and its derivative.
    double H(double q) const;            // q >= z_l, else DomainError
    double H_prime(double q) const;      // q >= z_l (finite one-sided value at z_l)

    // Local rate of the integrating factor in each region.
    double rho_coupled(double q) const;  // c1*theta1 / (c1 q + c3 g2(ell(q)))
    double rho_solo(double x) const { return params_.classes[0].theta / x; }

    // Structural roots.
    double z_l() const { return z_l_; }
    double z_k() const { return z_k_; }  // INFQ when k_fn stays negative
    CaseTag case_tag() const { return z_l_ <= z_k_ ? CaseTag::Case1 : CaseTag::Case2; }
    double q0() const;                   // root of H; WrongCaseError in Case 2

private:
    double compute_z_l() const;
    double compute_z_k() const;

    ModelParams params_;
    Tolerances tol_;
    double c1_, c2_, c3_, k0_;
    double th1_, th2_;
    double z_l_ = 0.0, z_k_ = INFQ;
    MonotoneTable l2_seed_;              // coarse l2 table seeding the inverse
};

} // namespace divband
