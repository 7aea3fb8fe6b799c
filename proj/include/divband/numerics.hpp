#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "divband/errors.hpp"

namespace divband {

struct Tolerances {
    double root_abs = 1e-10;   // absolute x-tolerance for root finding
    double quad_rel = 1e-9;    // relative tolerance for adaptive quadrature
    double ode_local = 1e-9;   // local error target per ODE step
    double tail_abs = 1e-8;    // absolute tolerance for improper-integral tails
};

// Brent root finder on [lo, hi]. Requires f(lo) and f(hi) finite with opposite
// signs, else throws NoBracketError / NonFiniteError. Converges to |x - x*|
// within tol_abs (plus a machine-precision floor) in at most max_iter steps.
double find_root(const std::function<double(double)>& f,
                 double lo, double hi,
                 double tol_abs = 1e-10,
                 int max_iter = 200);

// Adaptive Gauss-Kronrod (G7,K15) quadrature of f over [a, b].
// Guarantees |result - true| <= tol_rel * (1 + |true|) under the usual
// error-estimate heuristics; throws MaxSubdivisionsError when the interval
// budget is exhausted and NonFiniteError on NaN/Inf evaluations.
double integrate(const std::function<double(double)>& f,
                 double a, double b,
                 double tol_rel = 1e-9,
                 int max_subdiv = 2000);

// Strictly monotone cubic-Hermite table y(x) with an inverse. Slopes may be
// supplied exactly; otherwise Fritsch-Butland slopes are derived, which keeps
// the interpolant monotone whenever the data are.
class MonotoneTable {
public:
    MonotoneTable() = default;
    MonotoneTable(std::vector<double> x, std::vector<double> y);
    MonotoneTable(std::vector<double> x, std::vector<double> y,
                  std::vector<double> dydx);

    double operator()(double x) const;          // y(x); linear beyond the ends
    double derivative(double x) const;          // dy/dx of the interpolant
    double inverse(double y) const;             // x with y(x) = y

    bool empty() const { return xs_.empty(); }
    std::size_t size() const { return xs_.size(); }
    double x_front() const { return xs_.front(); }
    double x_back() const { return xs_.back(); }
    double y_front() const { return ys_.front(); }
    double y_back() const { return ys_.back(); }
    const std::vector<double>& xs() const { return xs_; }
    const std::vector<double>& ys() const { return ys_; }
    const std::vector<double>& slopes() const { return ms_; }

private:
    std::size_t locate(double x) const;
    std::vector<double> xs_, ys_, ms_;
    bool increasing_ = true;
};

// Builds y(x) = y0 + \int_{x0}^{x} g(s) ds on the given nodes and tabulates
// the inverse map. g must keep one sign so the primitive is monotone.
MonotoneTable tabulate_inverse(const std::function<double(double)>& g,
                               const std::vector<double>& nodes,
                               double y0 = 0.0,
                               double tol_rel = 1e-9);

// Grid builders. Retention grids are uniform below q = 1 (policy resolution
// where curvature lives) and geometric above (the curves flatten as q grows).
std::vector<double> uniform_grid(double a, double b, std::size_t n);
std::vector<double> geometric_grid(double a, double b, std::size_t n);
std::vector<double> retention_grid(double q_lo, double q_hi, std::size_t n);

// One adaptive Cash-Karp RK45 step for y' = f(t, y). Advances (t, y, h)
// in place; h on return is the proposal for the next step. Throws
// NonFiniteError if the RHS goes non-finite.
template <std::size_t N>
void ode_step(const std::function<std::array<double, N>(double, const std::array<double, N>&)>& f,
              double& t, std::array<double, N>& y, double& h,
              double t_end, double rtol, double atol)
{
    static constexpr double a2 = 0.2, a3 = 0.3, a4 = 0.6, a5 = 1.0, a6 = 0.875;
    static constexpr double b21 = 0.2;
    static constexpr double b31 = 3.0 / 40.0, b32 = 9.0 / 40.0;
    static constexpr double b41 = 0.3, b42 = -0.9, b43 = 1.2;
    static constexpr double b51 = -11.0 / 54.0, b52 = 2.5, b53 = -70.0 / 27.0, b54 = 35.0 / 27.0;
    static constexpr double b61 = 1631.0 / 55296.0, b62 = 175.0 / 512.0, b63 = 575.0 / 13824.0,
                            b64 = 44275.0 / 110592.0, b65 = 253.0 / 4096.0;
    static constexpr double c1 = 37.0 / 378.0, c3 = 250.0 / 621.0, c4 = 125.0 / 594.0,
                            c6 = 512.0 / 1771.0;
    static constexpr double d1 = c1 - 2825.0 / 27648.0, d3 = c3 - 18575.0 / 48384.0,
                            d4 = c4 - 13525.0 / 55296.0, d5 = -277.0 / 14336.0,
                            d6 = c6 - 0.25;

    auto finite = [](const std::array<double, N>& v) {
        for (double u : v) if (!std::isfinite(u)) return false;
        return true;
    };

    for (int attempt = 0; attempt < 60; ++attempt) {
        if (t + h > t_end) h = t_end - t;
        std::array<double, N> k1 = f(t, y), y2{}, y3{}, y4{}, y5{}, y6{};
        for (std::size_t i = 0; i < N; ++i) y2[i] = y[i] + h * b21 * k1[i];
        std::array<double, N> k2 = f(t + a2 * h, y2);
        for (std::size_t i = 0; i < N; ++i) y3[i] = y[i] + h * (b31 * k1[i] + b32 * k2[i]);
        std::array<double, N> k3 = f(t + a3 * h, y3);
        for (std::size_t i = 0; i < N; ++i) y4[i] = y[i] + h * (b41 * k1[i] + b42 * k2[i] + b43 * k3[i]);
        std::array<double, N> k4 = f(t + a4 * h, y4);
        for (std::size_t i = 0; i < N; ++i)
            y5[i] = y[i] + h * (b51 * k1[i] + b52 * k2[i] + b53 * k3[i] + b54 * k4[i]);
        std::array<double, N> k5 = f(t + a5 * h, y5);
        for (std::size_t i = 0; i < N; ++i)
            y6[i] = y[i] + h * (b61 * k1[i] + b62 * k2[i] + b63 * k3[i] + b64 * k4[i] + b65 * k5[i]);
        std::array<double, N> k6 = f(t + a6 * h, y6);

        std::array<double, N> ynew{};
        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            ynew[i] = y[i] + h * (c1 * k1[i] + c3 * k3[i] + c4 * k4[i] + c6 * k6[i]);
            double ei = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i]);
            double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err = std::max(err, std::abs(ei) / sc);
        }
        if (!finite(ynew) || !std::isfinite(err))
            throw NonFiniteError("ode_step: non-finite state");

        if (err <= 1.0) {
            t += h;
            y = ynew;
            double fac = (err > 0.0) ? 0.9 * std::pow(err, -0.2) : 5.0;
            h *= std::min(5.0, std::max(0.2, fac));
            return;
        }
        h *= std::max(0.1, 0.9 * std::pow(err, -0.25));
        if (!(h > 0.0) || t + h == t)
            throw NonFiniteError("ode_step: step size underflow");
    }
    throw NonFiniteError("ode_step: no acceptable step after 60 attempts");
}

// Integrates y' = f(t, y) from t to exactly t_end with adaptive steps.
template <std::size_t N>
void ode_advance(const std::function<std::array<double, N>(double, const std::array<double, N>&)>& f,
                 double& t, std::array<double, N>& y,
                 double t_end, double rtol = 1e-9, double atol = 1e-12)
{
    if (t_end == t) return;
    if (t_end < t) throw DomainError("ode_advance: t_end must exceed t");
    double h = (t_end - t) / 8.0;
    while (t < t_end) {
        ode_step<N>(f, t, y, h, t_end, rtol, atol);
        if (t_end - t < 1e-15 * std::max(1.0, std::abs(t_end))) {
            t = t_end;
            break;
        }
    }
}

} // namespace divband
