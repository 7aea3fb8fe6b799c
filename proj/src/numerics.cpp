#include "divband/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace divband {

namespace {

void require_finite(double v, const char* where)
{
    if (!std::isfinite(v)) {
        std::ostringstream os;
        os << where << ": non-finite function value";
        throw NonFiniteError(os.str());
    }
}

} // namespace

double find_root(const std::function<double(double)>& f,
                 double lo, double hi, double tol_abs, int max_iter)
{
    if (!(lo < hi)) throw NoBracketError("find_root: empty interval");
    double a = lo, b = hi;
    double fa = f(a), fb = f(b);
    require_finite(fa, "find_root");
    require_finite(fb, "find_root");
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0.0) == (fb > 0.0)) {
        std::ostringstream os;
        os << "find_root: no sign change on [" << lo << ", " << hi
           << "] (f=" << fa << ", " << fb << ")";
        throw NoBracketError(os.str());
    }

    double c = a, fc = fa;   // c is the previous iterate; [a,b] brackets
    double d = b - a, e = d;
    for (int it = 0; it < max_iter; ++it) {
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b)
                   + 0.5 * tol_abs;
        double m = 0.5 * (c - b);
        if (std::abs(m) <= tol || fb == 0.0) return b;

        if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
            double s = fb / fa, p, q;
            if (a == c) {                       // secant
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {                            // inverse quadratic
                double qq = fa / fc, r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q; else p = -p;
            if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += (std::abs(d) > tol) ? d : (m > 0.0 ? tol : -tol);
        fb = f(b);
        require_finite(fb, "find_root");
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    throw NonFiniteError("find_root: iteration cap reached without convergence");
}

namespace {

// (G7, K15) nodes/weights on [-1, 1]; nodes listed for the positive half.
constexpr double kX[8] = {
    0.000000000000000000e+00, 2.077849550078984676e-01, 4.058451513773971669e-01,
    5.860872354676911303e-01, 7.415311855993944399e-01, 8.648644233597690727e-01,
    9.491079123427585245e-01, 9.914553711208126392e-01};
constexpr double kWK[8] = {
    2.094821410847278280e-01, 2.044329400752988924e-01, 1.903505780647854099e-01,
    1.690047266392679028e-01, 1.406532597155259187e-01, 1.047900103222501838e-01,
    6.309209262997855329e-02, 2.293532201052922496e-02};
constexpr double kWG[4] = {
    4.179591836734693878e-01, 3.818300505051189449e-01, 2.797053914892766679e-01,
    1.294849661688696933e-01};

struct PanelResult {
    double kronrod;
    double err;
};

PanelResult gk15(const std::function<double(double)>& f, double a, double b)
{
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double fv[15];
    fv[7] = f(c);
    require_finite(fv[7], "integrate");
    for (int i = 1; i < 8; ++i) {
        double dx = h * kX[i];
        fv[7 - i] = f(c - dx);
        fv[7 + i] = f(c + dx);
        require_finite(fv[7 - i], "integrate");
        require_finite(fv[7 + i], "integrate");
    }
    double resk = kWK[0] * fv[7], resg = kWG[0] * fv[7];
    for (int i = 1; i < 8; ++i)
        resk += kWK[i] * (fv[7 - i] + fv[7 + i]);
    for (int i = 1; i < 4; ++i)
        resg += kWG[i] * (fv[7 - 2 * i] + fv[7 + 2 * i]);
    double kr = resk * h;
    double err = std::abs((resk - resg) * h);
    // the classical QUADPACK sharpening of the raw G-K difference
    double resabs = 0.0;
    for (int i = 0; i < 15; ++i) {
        int j = std::abs(i - 7);
        resabs += kWK[j] * std::abs(fv[i]);
    }
    resabs *= std::abs(h);
    if (resabs > 0.0 && err > 0.0)
        err = resabs * std::min(1.0, std::pow(200.0 * err / resabs, 1.5));
    return {kr, err};
}

} // namespace

double integrate(const std::function<double(double)>& f,
                 double a, double b, double tol_rel, int max_subdiv)
{
    if (a == b) return 0.0;
    double sign = 1.0;
    if (a > b) {
        std::swap(a, b);
        sign = -1.0;
    }

    struct Panel {
        double a, b, val, err;
    };
    std::vector<Panel> panels;
    PanelResult first = gk15(f, a, b);
    panels.push_back({a, b, first.kronrod, first.err});

    for (int iter = 0; iter < max_subdiv; ++iter) {
        double total = 0.0, toterr = 0.0;
        std::size_t worst = 0;
        for (std::size_t i = 0; i < panels.size(); ++i) {
            total += panels[i].val;
            toterr += panels[i].err;
            if (panels[i].err > panels[worst].err) worst = i;
        }
        if (toterr <= tol_rel * (1.0 + std::abs(total)))
            return sign * total;

        Panel p = panels[worst];
        double mid = 0.5 * (p.a + p.b);
        if (mid <= p.a || mid >= p.b)
            return sign * total;            // interval at machine resolution
        PanelResult lres = gk15(f, p.a, mid);
        PanelResult rres = gk15(f, mid, p.b);
        panels[worst] = {p.a, mid, lres.kronrod, lres.err};
        panels.push_back({mid, p.b, rres.kronrod, rres.err});
    }
    throw MaxSubdivisionsError("integrate: subdivision budget exhausted");
}

// ---- MonotoneTable ----------------------------------------------------------

namespace {

std::vector<double> fritsch_butland_slopes(const std::vector<double>& x,
                                           const std::vector<double>& y)
{
    const std::size_t n = x.size();
    std::vector<double> d(n - 1), m(n);
    for (std::size_t i = 0; i + 1 < n; ++i)
        d[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (d[i - 1] * d[i] <= 0.0) {
            m[i] = 0.0;
        } else {
            double w1 = 2.0 * (x[i + 1] - x[i]) + (x[i] - x[i - 1]);
            double w2 = (x[i + 1] - x[i]) + 2.0 * (x[i] - x[i - 1]);
            m[i] = 3.0 * (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    return m;
}

} // namespace

MonotoneTable::MonotoneTable(std::vector<double> x, std::vector<double> y)
    : MonotoneTable(std::move(x), std::move(y), {})
{}

MonotoneTable::MonotoneTable(std::vector<double> x, std::vector<double> y,
                             std::vector<double> dydx)
    : xs_(std::move(x)), ys_(std::move(y)), ms_(std::move(dydx))
{
    if (xs_.size() < 2 || xs_.size() != ys_.size())
        throw DomainError("MonotoneTable: need >= 2 matching nodes");
    if (!ms_.empty() && ms_.size() != xs_.size())
        throw DomainError("MonotoneTable: slope count mismatch");
    for (std::size_t i = 0; i + 1 < xs_.size(); ++i)
        if (!(xs_[i] < xs_[i + 1]))
            throw DomainError("MonotoneTable: abscissae must strictly increase");
    increasing_ = ys_.back() > ys_.front();
    for (std::size_t i = 0; i + 1 < ys_.size(); ++i) {
        double dy = ys_[i + 1] - ys_[i];
        if (increasing_ ? dy <= 0.0 : dy >= 0.0)
            throw DomainError("MonotoneTable: ordinates must be strictly monotone");
    }
    if (ms_.empty()) ms_ = fritsch_butland_slopes(xs_, ys_);
}

std::size_t MonotoneTable::locate(double x) const
{
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    if (it == xs_.begin()) return 0;
    std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
    return std::min(i, xs_.size() - 2);
}

double MonotoneTable::operator()(double x) const
{
    if (x <= xs_.front()) return ys_.front() + (x - xs_.front()) * ms_.front();
    if (x >= xs_.back()) return ys_.back() + (x - xs_.back()) * ms_.back();
    std::size_t i = locate(x);
    double h = xs_[i + 1] - xs_[i];
    double t = (x - xs_[i]) / h;
    double t2 = t * t, t3 = t2 * t;
    double h00 = 2.0 * t3 - 3.0 * t2 + 1.0, h10 = t3 - 2.0 * t2 + t;
    double h01 = -2.0 * t3 + 3.0 * t2, h11 = t3 - t2;
    return h00 * ys_[i] + h10 * h * ms_[i] + h01 * ys_[i + 1] + h11 * h * ms_[i + 1];
}

double MonotoneTable::derivative(double x) const
{
    if (x <= xs_.front()) return ms_.front();
    if (x >= xs_.back()) return ms_.back();
    std::size_t i = locate(x);
    double h = xs_[i + 1] - xs_[i];
    double t = (x - xs_[i]) / h;
    double t2 = t * t;
    double dh00 = (6.0 * t2 - 6.0 * t) / h, dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    double dh01 = (-6.0 * t2 + 6.0 * t) / h, dh11 = 3.0 * t2 - 2.0 * t;
    return dh00 * ys_[i] + dh10 * ms_[i] + dh01 * ys_[i + 1] + dh11 * ms_[i + 1];
}

double MonotoneTable::inverse(double y) const
{
    double ylo = increasing_ ? ys_.front() : ys_.back();
    double yhi = increasing_ ? ys_.back() : ys_.front();
    if (y < ylo || y > yhi)
        throw DomainError("MonotoneTable::inverse: value outside table range");

    // bracket by node, then safeguarded Newton on the Hermite piece
    std::size_t lo = 0, hi = xs_.size() - 1;
    while (hi - lo > 1) {
        std::size_t mid = (lo + hi) / 2;
        bool left = increasing_ ? (y < ys_[mid]) : (y > ys_[mid]);
        if (left) hi = mid; else lo = mid;
    }
    double a = xs_[lo], b = xs_[hi];
    double x = a + (b - a) * (y - ys_[lo]) / (ys_[hi] - ys_[lo]);
    for (int it = 0; it < 60; ++it) {
        double fx = (*this)(x) - y;
        double dfx = derivative(x);
        double step = (dfx != 0.0) ? fx / dfx : 0.0;
        double xn = x - step;
        if (!(xn > a) || !(xn < b)) xn = 0.5 * (a + b);   // bisect fallback
        double fn = (*this)(xn) - y;
        if ((fn > 0.0) == increasing_) b = xn; else a = xn;
        if (std::abs(xn - x) < 1e-15 * (1.0 + std::abs(xn)) || fn == 0.0)
            return xn;
        x = xn;
    }
    return x;
}

MonotoneTable tabulate_inverse(const std::function<double(double)>& g,
                               const std::vector<double>& nodes,
                               double y0, double tol_rel)
{
    if (nodes.size() < 2)
        throw DomainError("tabulate_inverse: need >= 2 nodes");
    std::vector<double> ys(nodes.size()), ms(nodes.size());
    ys[0] = y0;
    ms[0] = g(nodes[0]);
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        ys[i] = ys[i - 1] + integrate(g, nodes[i - 1], nodes[i], tol_rel);
        ms[i] = g(nodes[i]);
    }
    return MonotoneTable(nodes, std::move(ys), std::move(ms));
}

// ---- grids -------------------------------------------------------------------

std::vector<double> uniform_grid(double a, double b, std::size_t n)
{
    if (n < 2 || !(a < b)) throw DomainError("uniform_grid: bad arguments");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    g.back() = b;
    return g;
}

std::vector<double> geometric_grid(double a, double b, std::size_t n)
{
    if (n < 2 || !(0.0 < a && a < b))
        throw DomainError("geometric_grid: need 0 < a < b");
    std::vector<double> g(n);
    double r = std::log(b / a);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = a * std::exp(r * static_cast<double>(i) / static_cast<double>(n - 1));
    g.front() = a;
    g.back() = b;
    return g;
}

std::vector<double> retention_grid(double q_lo, double q_hi, std::size_t n)
{
    if (!(q_lo >= 0.0) || !(q_lo < q_hi) || n < 4)
        throw DomainError("retention_grid: bad arguments");
    const double split = 1.0;
    if (q_hi <= split || q_lo >= split) {
        if (q_lo > 0.0 && q_lo >= split) return geometric_grid(q_lo, q_hi, n);
        return uniform_grid(q_lo, q_hi, n);
    }
    // proportional split with at least a quarter of the nodes on each side
    double frac = (split - q_lo) / (q_hi - q_lo);
    std::size_t n_lo = std::clamp<std::size_t>(
        static_cast<std::size_t>(frac * static_cast<double>(n)), n / 4, 3 * n / 4);
    std::vector<double> g = uniform_grid(q_lo, split, n_lo + 1);
    std::vector<double> up = geometric_grid(split, q_hi, n - n_lo);
    g.insert(g.end(), up.begin() + 1, up.end());
    return g;
}

} // namespace divband
