#include <cstdlib>
#include <future>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "divband/config.hpp"
#include "divband/output.hpp"
#include "divband/qvi.hpp"
#include "divband/simulate.hpp"
#include "divband/solver.hpp"

namespace {

using divband::format_double;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitVerify = 4;
constexpr int kExitSimReject = 5;

std::string resolve_out_dir(const std::string& cli_out, const std::string& cfg_out)
{
    if (!cli_out.empty()) return cli_out;
    if (const char* env = std::getenv("DIVBAND_OUTPUT_DIR"); env && *env) return env;
    if (!cfg_out.empty()) return cfg_out;
    return ".";
}

std::string join(const std::string& dir, const std::string& name)
{
    if (dir.empty() || dir == ".") return name;
    return dir + "/" + name;
}

json num_or_inf(double v)
{
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : "-inf";
}

const char* case_name(divband::CaseTag tag)
{
    return tag == divband::CaseTag::Case1 ? "case1" : "case2";
}

json constants_json(const divband::Solution& sol)
{
    const auto& c = sol.consts;
    const auto& band = sol.vf.band;
    json j;
    j["case"] = case_name(c.case_tag);
    j["swapped_classes"] = sol.swapped;
    j["c1"] = c.c1;
    j["c2"] = c.c2;
    j["c3"] = c.c3;
    j["mu1"] = c.mu1;
    j["mu2"] = c.mu2;
    j["m1"] = c.m1;
    j["m2"] = c.m2;
    j["k0"] = c.k0;
    j["K1"] = c.K1;
    j["K2"] = c.K2;
    j["r_plus"] = c.r_plus;
    j["r_minus"] = c.r_minus;
    j["b1"] = c.b1;
    j["b2"] = c.b2;
    j["z_l"] = num_or_inf(c.z_l);
    j["z_k"] = num_or_inf(c.z_k);
    j["q_start"] = sol.curve.q_start;
    j["xt0"] = sol.curve.xt0;
    j["x0"] = sol.curve.x0;
    j["C1"] = sol.vf.C1;
    j["C2"] = sol.vf.C2;
    j["C3"] = sol.vf.C3;
    j["band"] = {
        {"cbar", band.cbar},
        {"cstar", band.cstar},
        {"xtil", band.xtil},
        {"xhat", band.xhat},
        {"branch", band.branch == divband::BandBranch::Interior ? "interior"
                                                                : "full-payout"},
        {"I1_at_cbar", band.I1_at_cbar},
    };
    return j;
}

void write_curves_csv(const divband::Solution& sol, const std::string& path)
{
    std::vector<std::vector<std::string>> rows;
    for (const auto& seg : sol.curve.segments) {
        const auto& xs_q = seg.x_of_q.xs();   // retention nodes
        const auto& ys_x = seg.x_of_q.ys();   // surplus at each node
        for (std::size_t i = 0; i < xs_q.size(); ++i) {
            double q1 = xs_q[i];
            double q2 = seg.coupled ? sol.curve.aux->ell(q1) : 0.0;
            if (sol.swapped) std::swap(q1, q2);
            rows.push_back({format_double(ys_x[i]), format_double(q1),
                            format_double(q2), format_double(q1 - q2)});
        }
    }
    divband::write_csv(path, {"x", "q1", "q2", "diff"}, rows);
}

void write_value_csv(const divband::Solution& sol, const std::string& path)
{
    const double hi = 1.25 * sol.vf.band.xhat;
    const std::size_t n = 2000;
    std::vector<std::vector<std::string>> rows;
    rows.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        double x = hi * static_cast<double>(i) / static_cast<double>(n);
        rows.push_back({format_double(x), format_double(sol.vf.W(x)),
                        format_double(sol.vf.Wp(x))});
    }
    divband::write_csv(path, {"x", "W", "Wprime"}, rows);
}

int cmd_solve(const std::string& cfg_path, const std::string& out_flag)
{
    divband::RunConfig rc = divband::load_config(cfg_path);
    std::string dir = resolve_out_dir(out_flag, rc.output_dir);
    divband::Solution sol = divband::solve(rc.params, rc.solve);

    divband::atomic_write(join(dir, "constants.json"),
                          constants_json(sol).dump(2) + "\n");
    write_curves_csv(sol, join(dir, "curves.csv"));
    write_value_csv(sol, join(dir, "value.csv"));

    std::cout << "case " << case_name(sol.consts.case_tag) << ", x0 = "
              << format_double(sol.curve.x0) << ", band (xtil, xhat) = ("
              << format_double(sol.vf.band.xtil) << ", "
              << format_double(sol.vf.band.xhat) << ")\n"
              << "wrote constants.json, curves.csv, value.csv to " << dir << "\n";
    return 0;
}

int cmd_sweep(const std::string& cfg_path, const std::string& param,
              const std::vector<double>& values, const std::string& out_flag)
{
    if (values.empty()) {
        std::cerr << "sweep: empty values list\n";
        return kExitConfig;
    }
    json base_doc = divband::read_json_file(cfg_path);
    {
        // fail fast on a bad path or base config before spawning rows
        json probe = base_doc;
        divband::set_scalar(probe, param, values.front());
        divband::parse_run_config(probe);
    }
    std::string dir = resolve_out_dir(
        out_flag, divband::parse_run_config(base_doc).output_dir);

    struct Row {
        double value;
        std::string z_l, z_k, tag, x0, xhat, xtil, status;
    };
    auto run_one = [&base_doc, &param](double v) -> Row {
        Row row;
        row.value = v;
        try {
            json doc = base_doc;
            divband::set_scalar(doc, param, v);
            divband::RunConfig rc = divband::parse_run_config(doc);
            divband::Solution sol = divband::solve(rc.params, rc.solve);
            row.z_l = format_double(sol.consts.z_l);
            row.z_k = format_double(sol.consts.z_k);
            row.tag = case_name(sol.consts.case_tag);
            row.x0 = format_double(sol.curve.x0);
            row.xhat = format_double(sol.vf.band.xhat);
            row.xtil = format_double(sol.vf.band.xtil);
            row.status = "ok";
        } catch (const std::exception& e) {
            row.z_l = row.z_k = row.tag = row.x0 = row.xhat = row.xtil = "";
            row.status = std::string("error: ") + e.what();
        }
        return row;
    };

    std::vector<std::future<Row>> futures;
    futures.reserve(values.size());
    for (double v : values)
        futures.push_back(std::async(std::launch::async, run_one, v));

    std::vector<std::vector<std::string>> rows;
    bool any_error = false;
    for (auto& f : futures) {
        Row row = f.get();
        any_error = any_error || row.status != "ok";
        rows.push_back({format_double(row.value), row.z_l, row.z_k, row.tag, row.x0,
                        row.xhat, row.xtil, row.status});
    }
    std::string path = join(dir, "sweep.csv");
    divband::write_csv(path, {"parameter", "z_l", "z_k", "case", "x0", "xhat",
                              "xtil", "status"}, rows);

    std::cout << "sweep over " << param << " (" << values.size() << " values) -> "
              << path << "\n";
    for (const auto& row : rows)
        std::cout << "  " << param << " = " << row[0]
                  << (row[7] == "ok" ? ": x0 = " + row[4] : ": " + row[7]) << "\n";
    return any_error ? kExitSolver : 0;
}

void print_report(const divband::QviReport& rep, bool is_case2)
{
    auto flag = [](bool ok) { return ok ? "ok" : "FAIL"; };
    std::cout << "generator: max residual " << format_double(rep.worst_grid_max)
              << " (tol " << format_double(rep.generator_tol) << "), at-curve "
              << format_double(rep.worst_at_curve) << " [" << flag(rep.generator_ok)
              << "]\n"
              << "argmax match: " << format_double(rep.argmax_match_fraction)
              << " of checkpoints [" << flag(rep.argmax_ok) << "]\n"
              << "intervention: max MW - W " << format_double(rep.worst_intervention_gap)
              << " on (0, xhat), |MW - W| at xhat "
              << format_double(rep.intervention_gap_at_xhat) << ", beyond "
              << format_double(rep.worst_gap_beyond_xhat) << " ["
              << flag(rep.intervention_ok) << "]\n"
              << "smoothness: W' gaps x0 " << format_double(rep.smooth.wp_rel_gap_x0)
              << ", xhat " << format_double(rep.smooth.wp_rel_gap_xhat)
              << ", W'' gap x0 " << format_double(rep.smooth.wpp_gap_x0)
              << ", |W'(xhat) - k| " << format_double(rep.smooth.wp_at_xhat_err)
              << " [" << flag(rep.smoothness_ok) << "]\n";
    if (is_case2)
        std::cout << "boundary objective (leading region): "
                  << (rep.phi_check_ran ? flag(rep.phi_check_ok) : "not run") << "\n";
}

json report_json(const divband::QviReport& rep)
{
    json j;
    j["pass"] = rep.pass;
    j["generator_tol"] = rep.generator_tol;
    j["worst_grid_max"] = rep.worst_grid_max;
    j["worst_at_curve"] = rep.worst_at_curve;
    j["argmax_match_fraction"] = rep.argmax_match_fraction;
    j["worst_intervention_gap"] = rep.worst_intervention_gap;
    j["intervention_gap_at_xhat"] = rep.intervention_gap_at_xhat;
    j["worst_gap_beyond_xhat"] = rep.worst_gap_beyond_xhat;
    j["wp_rel_gap_x0"] = rep.smooth.wp_rel_gap_x0;
    j["wp_rel_gap_xhat"] = rep.smooth.wp_rel_gap_xhat;
    j["wp_rel_gap_xt0"] = rep.smooth.wp_rel_gap_xt0;
    j["wpp_gap_x0"] = rep.smooth.wpp_gap_x0;
    j["wp_at_xhat_err"] = rep.smooth.wp_at_xhat_err;
    j["slope_beyond_xhat_err"] = rep.smooth.slope_beyond_xhat_err;
    j["phi_check_ran"] = rep.phi_check_ran;
    j["phi_check_ok"] = rep.phi_check_ok;
    j["generator_ok"] = rep.generator_ok;
    j["intervention_ok"] = rep.intervention_ok;
    j["smoothness_ok"] = rep.smoothness_ok;
    j["argmax_ok"] = rep.argmax_ok;
    return j;
}

int cmd_verify(const std::string& cfg_path, double perturb,
               const std::string& out_flag)
{
    divband::RunConfig rc = divband::load_config(cfg_path);
    std::string dir = resolve_out_dir(out_flag, rc.output_dir);
    divband::Solution sol = divband::solve(rc.params, rc.solve);
    divband::QviOptions opt = rc.qvi;
    opt.perturb = perturb;
    divband::QviReport rep = divband::run_qvi_check(sol, opt);

    bool is_case2 = sol.consts.case_tag == divband::CaseTag::Case2;
    print_report(rep, is_case2);
    divband::atomic_write(join(dir, "report.json"), report_json(rep).dump(2) + "\n");

    if (rep.pass) {
        std::cout << "verify: pass\n";
        return 0;
    }
    double worst = std::max({rep.worst_grid_max - rep.generator_tol,
                             rep.worst_intervention_gap,
                             rep.intervention_gap_at_xhat,
                             rep.smooth.wp_at_xhat_err});
    std::cout << "verify: FAIL (worst violation " << format_double(worst) << ")\n";
    return kExitVerify;
}

int cmd_simulate(const std::string& cfg_path, double x0,
                 const std::string& strategy_name, long long seed_flag,
                 const std::string& out_flag)
{
    divband::RunConfig rc = divband::load_config(cfg_path);
    std::string dir = resolve_out_dir(out_flag, rc.output_dir);
    if (seed_flag >= 0) rc.sim.seed = static_cast<std::uint64_t>(seed_flag);
    divband::Solution sol = divband::solve(rc.params, rc.solve);

    divband::Strategy st;
    if (strategy_name == "optimal")
        st = divband::optimal_strategy(sol);
    else if (strategy_name == "no-reinsurance")
        st = divband::no_reinsurance_strategy(sol);
    else if (strategy_name == "proportional")
        st = divband::proportional_strategy(sol);
    else if (strategy_name == "band-low")
        st = divband::band_scaled_strategy(sol, 0.8);
    else if (strategy_name == "band-high")
        st = divband::band_scaled_strategy(sol, 1.2);
    else if (strategy_name == "never-pay")
        st = divband::never_pay_strategy(sol);
    else {
        std::cerr << "simulate: unknown strategy '" << strategy_name
                  << "' (choose optimal, no-reinsurance, proportional, band-low, "
                     "band-high, never-pay)\n";
        return kExitConfig;
    }

    divband::SimEstimate est = divband::simulate(rc.params, st, x0, rc.sim);
    double w_ref = divband::eval_W(sol.vf, x0);
    double slack = 3.0 * est.std_error + est.truncation_bound;

    json j;
    j["strategy"] = st.name;
    j["x0"] = x0;
    j["mean"] = est.mean;
    j["std_error"] = est.std_error;
    j["ci99_lo"] = est.ci99_lo;
    j["ci99_hi"] = est.ci99_hi;
    j["ruin_fraction"] = est.ruin_fraction;
    j["mean_ruin_time"] = est.mean_ruin_time;
    j["truncation_bound"] = est.truncation_bound;
    j["n_paths"] = est.n_paths;
    j["W_reference"] = w_ref;

    bool reject;
    if (strategy_name == "optimal") {
        reject = std::abs(est.mean - w_ref) > slack;
        j["verdict"] = reject ? "reject" : "consistent";
    } else {
        // a baseline may fall below W but must not significantly beat it
        reject = est.mean - w_ref > slack;
        j["verdict"] = reject ? "dominance-violated" : "dominated";
    }
    std::cout << j.dump(2) << "\n";
    divband::atomic_write(join(dir, "simulate.json"), j.dump(2) + "\n");
    return reject ? kExitSimReject : 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"two-line reinsurance retention and dividend band solver"};
    app.require_subcommand(1);

    std::string cfg_path, out_dir, param, strategy = "optimal";
    std::vector<double> values;
    double perturb = 1.0, x0 = 0.0;
    long long seed_flag = -1;

    CLI::App* solve = app.add_subcommand("solve", "solve and write tables");
    solve->add_option("config", cfg_path, "JSON config path")->required();
    solve->add_option("--out", out_dir, "output directory");

    CLI::App* sweep = app.add_subcommand("sweep", "re-solve over one parameter");
    sweep->add_option("config", cfg_path, "JSON config path")->required();
    sweep->add_option("--param", param, "dotted path of a numeric leaf")->required();
    sweep->add_option("--values", values, "comma-separated values")
        ->required()
        ->delimiter(',');
    sweep->add_option("--out", out_dir, "output directory");

    CLI::App* verify = app.add_subcommand("verify", "run the optimality checker");
    verify->add_option("config", cfg_path, "JSON config path")->required();
    verify->add_option("--perturb", perturb, "scale W for the negative control");
    verify->add_option("--out", out_dir, "output directory");

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo estimate");
    simulate->add_option("config", cfg_path, "JSON config path")->required();
    simulate->add_option("--x0", x0, "initial surplus")->required();
    simulate->add_option("--strategy", strategy, "strategy name");
    simulate->add_option("--seed", seed_flag, "override the config seed");
    simulate->add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*solve) return cmd_solve(cfg_path, out_dir);
        if (*sweep) return cmd_sweep(cfg_path, param, values, out_dir);
        if (*verify) return cmd_verify(cfg_path, perturb, out_dir);
        if (*simulate) return cmd_simulate(cfg_path, x0, strategy, seed_flag, out_dir);
    } catch (const divband::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const divband::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const divband::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitSolver;
    }
    return kExitConfig;
}
