#include "divband/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <thread>

namespace divband {

namespace {

std::string short_num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Hand-rolled polar normal sampler: std::normal_distribution is not
// bit-specified across standard libraries, and the reproducibility contract
// pins the exact stream.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : eng_(seed) {}

    double next()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

private:
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

void validate_config(const SimConfig& cfg)
{
    if (cfg.n_paths < 1) throw ConfigError("simulate: need at least one path");
    if (!(cfg.dt > 0.0)) throw ConfigError("simulate: dt must be positive");
    if (!(cfg.horizon > 0.0)) throw ConfigError("simulate: horizon must be positive");
}

void validate_strategy(const Strategy& st)
{
    if (!st.retention) throw ConfigError("simulate: strategy has no retention rule");
    if (st.rule == DividendRule::Band) {
        if (st.xtil < 0.0)
            throw NonAdmissibleError("simulate: paying below zero surplus");
        if (!(st.xhat > st.xtil))
            throw NonAdmissibleError("simulate: band requires xhat > xtil");
    }
}

// Diffusion coefficients along a strategy, tabulated on a uniform grid with
// linear interpolation; direct evaluation beyond the grid (rare for band
// strategies, which keep the state below xhat plus one step's overshoot).
class CoeffTable {
public:
    CoeffTable(const ModelParams& params, const DerivedConstants& consts,
               const Strategy& st, double x_top, std::size_t n = 8192)
        : params_(params), consts_(consts), st_(st), x_top_(x_top),
          dx_(x_top / static_cast<double>(n - 1)), drift_(n), vol_(n)
    {
        for (std::size_t i = 0; i < n; ++i) {
            double x = dx_ * static_cast<double>(i);
            auto [q1, q2] = st_.retention(x);
            drift_[i] = drift(consts_, params_, q1, q2);
            vol_[i] = std::sqrt(std::max(0.0, variance(consts_, params_, q1, q2)));
        }
    }

    void at(double x, double& d, double& v) const
    {
        if (x >= x_top_) {
            auto [q1, q2] = st_.retention(x);
            d = drift(consts_, params_, q1, q2);
            v = std::sqrt(std::max(0.0, variance(consts_, params_, q1, q2)));
            return;
        }
        double pos = std::max(x, 0.0) / dx_;
        std::size_t i = std::min(static_cast<std::size_t>(pos), drift_.size() - 2);
        double f = pos - static_cast<double>(i);
        d = drift_[i] + f * (drift_[i + 1] - drift_[i]);
        v = vol_[i] + f * (vol_[i + 1] - vol_[i]);
    }

private:
    const ModelParams& params_;
    const DerivedConstants& consts_;
    const Strategy& st_;
    double x_top_, dx_;
    std::vector<double> drift_, vol_;
};

struct PathResults {
    std::vector<double> payoff;
    std::vector<std::uint8_t> ruined;
    std::vector<double> ruin_time;
};

PathResults run_paths(const ModelParams& params_in, const Strategy& st,
                      double x0, const SimConfig& cfg)
{
    validate_config(cfg);
    validate_strategy(st);
    if (x0 < 0.0) throw NegativeSurplusError("simulate: negative initial surplus");

    ModelParams params = params_in.normalized();
    DerivedConstants consts = derive_constants(params);

    double x_top = x0 + 4.0;
    if (st.rule == DividendRule::Band) x_top = std::max(x_top, st.xhat + 4.0);
    CoeffTable table(params, consts, st, x_top);

    const double delta = params.econ.delta;
    const double k = params.econ.k, K = params.econ.K;
    const double sdt = std::sqrt(cfg.dt);
    const std::size_t n_steps =
        static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt));

    PathResults res;
    res.payoff.assign(cfg.n_paths, 0.0);
    res.ruined.assign(cfg.n_paths, 0);
    res.ruin_time.assign(cfg.n_paths, 0.0);

    auto one_path = [&](std::size_t p) {
        std::uint64_t stream_idx = cfg.antithetic ? p / 2 : p;
        double flip = (cfg.antithetic && (p % 2 == 1)) ? -1.0 : 1.0;
        NormalStream rng(splitmix64(cfg.seed ^ (stream_idx * 0x9E3779B97F4A7C15ULL)));

        double X = x0, pv = 0.0;
        if (st.rule == DividendRule::Band && X >= st.xhat) {
            pv += k * (X - st.xtil) - K;      // immediate lump at t = 0
            X = st.xtil;
        }
        for (std::size_t step = 1; step <= n_steps; ++step) {
            double d, v;
            table.at(X, d, v);
            double z = cfg.zero_noise ? 0.0 : flip * rng.next();
            X += d * cfg.dt + v * sdt * z;
            if (X < 0.0) {
                res.ruined[p] = 1;
                res.ruin_time[p] = static_cast<double>(step) * cfg.dt;
                break;
            }
            if (st.rule == DividendRule::Band && X >= st.xhat) {
                double t = static_cast<double>(step) * cfg.dt;
                pv += std::exp(-delta * t) * (k * (X - st.xtil) - K);
                X = st.xtil;
            }
        }
        res.payoff[p] = pv;
    };

    unsigned workers = std::max(1u, cfg.workers);
    if (workers == 1 || cfg.n_paths < 2 * workers) {
        for (std::size_t p = 0; p < cfg.n_paths; ++p) one_path(p);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        std::size_t chunk = (cfg.n_paths + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            std::size_t lo = static_cast<std::size_t>(w) * chunk;
            std::size_t hi = std::min(cfg.n_paths, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back([lo, hi, &one_path] {
                for (std::size_t p = lo; p < hi; ++p) one_path(p);
            });
        }
        for (std::thread& t : pool) t.join();
    }
    return res;
}

SimEstimate estimate_from(const PathResults& res, const Strategy& st,
                          const ModelParams& params, const SimConfig& cfg)
{
    SimEstimate est;
    est.n_paths = res.payoff.size();
    const double n = static_cast<double>(est.n_paths);

    // sequential aggregation in path order keeps the result independent of
    // the worker count
    double sum = 0.0;
    for (double v : res.payoff) sum += v;
    est.mean = sum / n;
    double ss = 0.0;
    for (double v : res.payoff) ss += (v - est.mean) * (v - est.mean);
    double var = (est.n_paths > 1) ? ss / (n - 1.0) : 0.0;
    est.std_error = std::sqrt(var / n);
    est.ci99_lo = est.mean - 2.5758293035489004 * est.std_error;
    est.ci99_hi = est.mean + 2.5758293035489004 * est.std_error;

    std::size_t ruined = 0;
    double tsum = 0.0;
    for (std::size_t p = 0; p < est.n_paths; ++p)
        if (res.ruined[p]) {
            ++ruined;
            tsum += res.ruin_time[p];
        }
    est.ruin_fraction = static_cast<double>(ruined) / n;
    est.mean_ruin_time = ruined ? tsum / static_cast<double>(ruined) : 0.0;

    const double delta = params.econ.delta;
    double xhat = (st.rule == DividendRule::Band) ? st.xhat : 0.0;
    est.truncation_bound = params.econ.k * xhat * std::exp(-delta * cfg.horizon) /
                           (-std::expm1(-delta * cfg.dt));
    return est;
}

} // namespace

SimEstimate simulate(const ModelParams& params, const Strategy& strategy,
                     double x0, const SimConfig& cfg)
{
    PathResults res = run_paths(params, strategy, x0, cfg);
    return estimate_from(res, strategy, params, cfg);
}

Comparison compare_strategies(const ModelParams& params,
                              const std::vector<Strategy>& strategies,
                              double x0, const SimConfig& cfg)
{
    if (strategies.size() < 2)
        throw ConfigError("compare_strategies: need at least two strategies");

    Comparison cmp;
    std::vector<PathResults> all;
    all.reserve(strategies.size());
    for (const Strategy& st : strategies) {
        all.push_back(run_paths(params, st, x0, cfg));   // same seed: CRN
        cmp.names.push_back(st.name);
        cmp.estimates.push_back(estimate_from(all.back(), st, params, cfg));
    }

    const std::size_t m = strategies.size();
    const double n = static_cast<double>(cfg.n_paths);
    cmp.diff_mean.assign(m, std::vector<double>(m, 0.0));
    cmp.diff_se.assign(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j) continue;
            double sum = 0.0;
            for (std::size_t p = 0; p < cfg.n_paths; ++p)
                sum += all[i].payoff[p] - all[j].payoff[p];
            double mean = sum / n;
            double ss = 0.0;
            for (std::size_t p = 0; p < cfg.n_paths; ++p) {
                double d = all[i].payoff[p] - all[j].payoff[p] - mean;
                ss += d * d;
            }
            cmp.diff_mean[i][j] = mean;
            cmp.diff_se[i][j] =
                (cfg.n_paths > 1) ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
        }

    cmp.ranking.resize(m);
    std::iota(cmp.ranking.begin(), cmp.ranking.end(), std::size_t{0});
    std::stable_sort(cmp.ranking.begin(), cmp.ranking.end(),
                     [&](std::size_t a, std::size_t b) {
                         return cmp.estimates[a].mean > cmp.estimates[b].mean;
                     });
    return cmp;
}

// ---- factories -----------------------------------------------------------------

Strategy optimal_strategy(const Solution& sol)
{
    Strategy st;
    st.name = "optimal";
    RetentionCurve curve = sol.curve;   // owns a copy; shared aux keeps ell valid
    st.retention = [curve](double x) { return eval_q(curve, std::max(x, 0.0)); };
    st.rule = DividendRule::Band;
    st.xtil = sol.vf.band.xtil;
    st.xhat = sol.vf.band.xhat;
    return st;
}

Strategy no_reinsurance_strategy(const Solution& sol)
{
    Strategy st;
    st.name = "no-reinsurance";
    st.retention = [](double) { return std::pair<double, double>{INFQ, INFQ}; };
    st.rule = DividendRule::Band;
    st.xtil = sol.vf.band.xtil;
    st.xhat = sol.vf.band.xhat;
    return st;
}

Strategy proportional_strategy(const Solution& sol, double fraction)
{
    if (!(fraction > 0.0)) throw ConfigError("proportional_strategy: fraction must be > 0");
    Strategy st;
    st.name = "proportional-" + short_num(fraction);
    st.retention = [fraction](double x) {
        double q = fraction * std::max(x, 0.0);
        return std::pair<double, double>{q, q};
    };
    st.rule = DividendRule::Band;
    st.xtil = sol.vf.band.xtil;
    st.xhat = sol.vf.band.xhat;
    return st;
}

Strategy band_scaled_strategy(const Solution& sol, double factor)
{
    if (!(factor > 0.0)) throw ConfigError("band_scaled_strategy: factor must be > 0");
    Strategy st = optimal_strategy(sol);
    st.name = "band-scaled-" + short_num(factor);
    st.xtil = sol.vf.band.xtil * factor;
    st.xhat = sol.vf.band.xhat * factor;
    if (!(st.xhat > st.xtil)) throw ConfigError("band_scaled_strategy: degenerate band");
    return st;
}

Strategy never_pay_strategy(const Solution& sol)
{
    Strategy st = optimal_strategy(sol);
    st.name = "never-pay";
    st.rule = DividendRule::NeverPay;
    return st;
}

} // namespace divband
