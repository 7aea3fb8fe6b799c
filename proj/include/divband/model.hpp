#pragma once

#include <array>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "divband/errors.hpp"

namespace divband {

// Retention level meaning "cede nothing": a first-class value throughout.
inline constexpr double INFQ = std::numeric_limits<double>::infinity();

// Claim-size distribution of one business class. Exponential claims get
// closed forms; anything else supplies a survival function plus its first
// two moments and falls back to quadrature where no closed form exists.
class Claim {
public:
    Claim() = default;   // unset; ModelParams::validate rejects it
    static Claim exponential(double beta);
    static Claim from_survival(std::function<double(double)> survival,
                               double mean, double second_moment);

    double survival(double q) const;          // P(X > q)
    double g(double q) const;                 // \int_0^q survival(s) ds
    double g2m(double q) const;               // 2 \int_0^q s survival(s) ds
    double g_inverse(double v) const;         // g^{-1}(v), v in [0, mean)

    double mean() const { return mean_; }
    double second_moment() const { return second_; }
    bool is_exponential() const { return beta_ > 0.0; }
    double rate() const { return beta_; }     // 0 for non-exponential

private:
    double beta_ = 0.0;
    std::function<double(double)> survival_;
    double mean_ = 0.0, second_ = 0.0;
};

struct ClassSpec {
    std::string name;
    Claim claim;
    double eta = 0.0;       // premium loading charged to policyholders
    double theta = 0.0;     // loading charged by the reinsurer
};

struct GroupSpec {
    std::string name;
    double lambda = 0.0;            // arrival intensity of the group
    std::array<double, 2> p{};      // thinning probabilities into each class
};

struct Economics {
    double delta = 0.0;     // discount rate
    double k = 0.0;         // net fraction of a dividend kept after tax
    double K = 0.0;         // fixed transaction cost per dividend
};

struct ModelParams {
    std::array<ClassSpec, 2> classes;
    std::vector<GroupSpec> groups;
    Economics econ;
    bool swapped = false;   // true if normalized() exchanged the two classes

    void validate() const;
    // Relabels classes (and the matching thinning columns) so that
    // classes[0].theta >= classes[1].theta, recording the exchange in
    // `swapped`. All internal mathematics assumes this ordering; outputs
    // are mapped back by the callers that surface per-class quantities.
    ModelParams normalized() const;
};

enum class CaseTag { Case1, Case2 };

struct DerivedConstants {
    double c1 = 0.0, c2 = 0.0, c3 = 0.0;   // class intensities, common part
    double mu1 = 0.0, mu2 = 0.0;           // claim means
    double m1 = 0.0, m2 = 0.0;             // claim second moments
    double k0 = 0.0;                       // drift at full reinsurance
    double K1 = 0.0;                       // half the no-reinsurance variance
    double K2 = 0.0;                       // no-reinsurance drift
    double r_plus = 0.0, r_minus = 0.0;    // roots of K1 r^2 + K2 r = delta
    double b1 = 0.0, b2 = 0.0;             // tail basis coefficients
    double z_l = 0.0;                      // lower edge of the coupled region
    double z_k = INFQ;                     // root of the solo-drift map k(.)
    CaseTag case_tag = CaseTag::Case1;
};

DerivedConstants derive_constants(const ModelParams& params);

// Controlled diffusion coefficients at retention pair (q1, q2);
// INFQ components select the uncontrolled coefficients of that class.
double drift(const DerivedConstants& c, const ModelParams& p, double q1, double q2);
double variance(const DerivedConstants& c, const ModelParams& p, double q1, double q2);

} // namespace divband
