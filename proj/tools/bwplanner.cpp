#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "bwplanner/analytic.hpp"
#include "bwplanner/approximation.hpp"
#include "bwplanner/optimizer.hpp"
#include "bwplanner/scenario.hpp"
#include "bwplanner/simulator.hpp"

namespace {

using json = nlohmann::json;
using namespace bwplanner;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitUnstable = 2;
constexpr int kExitAudit = 3;

struct Options {
    std::string scenario_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> reps;
    std::string out_dir;
    std::string format = "table";
};

Scenario load_scenario(const Options& opt) {
    std::ifstream in(opt.scenario_path);
    if (!in) throw SchemaError("cannot open scenario file: " + opt.scenario_path);
    std::stringstream buf;
    buf << in.rdbuf();
    Scenario sc = parse_scenario_text(buf.str());
    if (opt.seed) sc.config.seed = *opt.seed;
    if (opt.reps) {
        if (*opt.reps < 1) throw SchemaError("--reps must be >= 1");
        sc.simulate.replications = *opt.reps;
    }
    return sc;
}

std::vector<CumulativeModel> analytic_models(const SystemConfig& cfg) {
    std::vector<CumulativeModel> out;
    if (cfg.ell == 1) {
        out.emplace_back(cfg.arrival, cfg.lambda, cfg.mu, cfg.batch);
        return out;
    }
    if (cfg.arrival.family() != Family::exponential)
        throw SchemaError(
            "analytic subcommands with ell >= 2 need exponential arrivals "
            "(thinned cumulative laws stay exponential only in that case)");
    double acc = 0.0;
    for (int k = 0; k < cfg.ell; ++k) {
        acc += cfg.thinning[k];
        double lk = k + 1 == cfg.ell ? cfg.lambda : cfg.lambda * acc;
        out.emplace_back(InterarrivalDistribution::exponential(lk), lk,
                         cfg.mu, cfg.batch);
    }
    return out;
}

void emit(const Options& opt, const json& report, const std::string& table) {
    if (opt.format == "json")
        std::cout << report.dump(2) << "\n";
    else
        std::cout << table;
    if (!opt.out_dir.empty()) {
        std::filesystem::create_directories(opt.out_dir);
        std::ofstream f(std::filesystem::path(opt.out_dir) / "report.json");
        f << report.dump(2) << "\n";
    }
}

int cmd_solve(const Options& opt) {
    Scenario sc = load_scenario(opt);
    const SystemConfig& cfg = sc.config;
    if (cfg.service && cfg.service->family() != Family::exponential)
        throw SchemaError("solve: analytic model requires exponential service");
    std::vector<CumulativeModel> models = analytic_models(cfg);
    json report;
    report["command"] = "solve";
    std::ostringstream table;
    table.precision(10);
    table << "level  varsigma      rho          E[Q]         quota  tail"
          << "          loss_exact    loss_asym\n";
    for (int k = 0; k < cfg.ell; ++k) {
        AnalyticSolution sol = solve_root(models[k]);
        json row;
        row["level"] = k + 1;
        row["arrival"] = models[k].dist.describe();
        row["varsigma"] = sol.varsigma;
        row["rho"] = sol.rho;
        row["residual"] = sol.residual;
        row["expected_content"] = expected_content(sol);
        table << (k + 1) << "      " << sol.varsigma << "  " << sol.rho
              << "  " << expected_content(sol) << "  ";
        long long quota =
            cfg.quotas.empty() ? kInfiniteQuota : cfg.quotas[k];
        if (quota != kInfiniteQuota) {
            int n = static_cast<int>(quota);
            row["quota"] = quota;
            row["tail_overflow_prob"] = tail_overflow_prob(sol, n);
            row["loss_exact"] = loss_exact(models[k], n);
            row["loss_asymptotic"] = loss_asymptotic(models[k], n);
            table << quota << "  " << tail_overflow_prob(sol, n) << "  "
                  << loss_exact(models[k], n) << "  "
                  << loss_asymptotic(models[k], n);
        } else {
            table << "inf";
        }
        table << "\n";
        report["levels"].push_back(row);
    }
    if (sc.heavy_load && cfg.batch >= 2) {
        Moments mom = models.back().dist.moments(cfg.mu);
        json hl;
        hl["delta"] = sc.heavy_load->delta;
        hl["Delta"] = sc.heavy_load->Delta;
        hl["root"] = heavy_load_root(mom, sc.heavy_load->delta, cfg.batch);
        hl["loss"] = loss_heavy_load(mom, sc.heavy_load->delta,
                                     sc.heavy_load->Delta, cfg.batch);
        report["heavy_load"] = hl;
        table << "heavy load: root=" << hl["root"].get<double>()
              << " loss=" << hl["loss"].get<double>() << "\n";
    }
    emit(opt, report, table.str());
    return kExitOk;
}

int cmd_simulate(const Options& opt) {
    Scenario sc = load_scenario(opt);
    EstimateReport est = run_replications(sc.config, sc.simulate.replications);
    json report;
    report["command"] = "simulate";
    report["replications"] = sc.simulate.replications;
    report["seed"] = sc.config.seed;
    report["arrivals_used"] = est.arrivals_used;
    report["J_class"] = est.J_class;
    report["J_class_half_width"] = est.J_class_hw;
    report["J_cum"] = est.J_cum;
    report["J_cum_half_width"] = est.J_cum_hw;
    report["J_cum_departure"] = est.J_cum_departure;
    report["J_cum_departure_half_width"] = est.J_cum_departure_hw;
    report["J"] = est.J;
    report["J_half_width"] = est.J_hw;
    report["J_bar"] = est.J_bar;
    report["J_bar_half_width"] = est.J_bar_hw;
    report["loss_fraction"] = est.loss_fraction;
    report["loss_fraction_total"] = est.loss_fraction_total;
    std::ostringstream table;
    table.precision(8);
    if (est.arrivals_used == 0)
        table << "warning: empty horizon, no arrivals observed\n";
    table << "arrivals used: " << est.arrivals_used << "\n";
    for (std::size_t k = 0; k < est.J_class.size(); ++k)
        table << "class " << (k + 1) << ": J^(k)=" << est.J_class[k]
              << " +-" << est.J_class_hw[k] << "  J_k=" << est.J_cum[k]
              << " +-" << est.J_cum_hw[k]
              << "  J_k(dep)=" << est.J_cum_departure[k]
              << "  loss=" << est.loss_fraction[k] << "\n";
    table << "J=" << est.J << " +-" << est.J_hw << "  J_bar=" << est.J_bar
          << " +-" << est.J_bar_hw
          << "  loss_total=" << est.loss_fraction_total << "\n";
    std::string csv;
    if (sc.simulate.trajectory_csv || opt.format == "csv")
        csv = trajectory_csv(run(sc.config, 0));
    emit(opt, report, opt.format == "csv" ? csv : table.str());
    if (!opt.out_dir.empty() && !csv.empty()) {
        std::ofstream f(std::filesystem::path(opt.out_dir) /
                        "trajectory.csv");
        f << csv;
    }
    return kExitOk;
}

int cmd_optimize(const Options& opt) {
    Scenario sc = load_scenario(opt);
    if (!sc.optimize)
        throw SchemaError("optimize: scenario lacks an optimize block");
    const OptimizationProblem& p = *sc.optimize;
    OptimizationResult res = p.decision == Decision::quota_N1
                                 ? minimize_N1(p)
                                 : minimize_C(p);
    json report;
    report["command"] = "optimize";
    report["decision"] =
        p.decision == Decision::quota_N1 ? "quota_N1" : "depletion_C";
    report["epsilon"] = p.epsilon;
    report["optimum"] = res.optimum;
    report["J_bar_at_optimum"] = res.J_bar_at_optimum;
    report["certificate"] = res.certificate;
    report["lower_bound"] = res.lower;
    report["upper_bound"] = res.upper;
    if (!std::isnan(res.J_bar_below))
        report["J_bar_below_optimum"] = res.J_bar_below;
    for (const ProbePoint& pp : res.trace)
        report["trace"].push_back({{"value", pp.value}, {"J_bar", pp.J}});
    std::ostringstream table;
    table.precision(8);
    table << "optimize " << report["decision"].get<std::string>()
          << ": optimum=" << res.optimum
          << " J_bar=" << res.J_bar_at_optimum << " (eps=" << p.epsilon
          << ", certificate=" << (res.certificate ? "valid" : "INVALID")
          << ")\nbounds: [" << res.lower << ", " << res.upper << "], probes="
          << res.trace.size() << "\n";
    emit(opt, report, table.str());
    return res.certificate ? kExitOk : kExitAudit;
}

int cmd_validate(const Options& opt) {
    Scenario sc = load_scenario(opt);
    const SystemConfig& cfg = sc.config;
    BufferTrajectory tr = run(cfg, 0);
    json report;
    report["command"] = "validate";
    std::ostringstream table;
    table.precision(8);
    bool pathwise_ok = true;

    long long worst_equiv = 0, worst_crossing = 0;
    for (int k = 0; k < cfg.ell; ++k) {
        worst_equiv =
            std::max(worst_equiv, cumulative_equivalence_check(tr, k));
        for (long long m = 1; m <= 20; ++m)
            worst_crossing = std::max(
                worst_crossing, std::llabs(crossing_audit(tr, m, k).violation));
    }
    report["cumulative_equivalence_max_deviation"] = worst_equiv;
    report["crossing_identity_max_violation"] = worst_crossing;
    pathwise_ok = pathwise_ok && worst_equiv == 0 && worst_crossing == 0;
    table << "cumulative equivalence: max deviation " << worst_equiv << "\n";
    table << "crossing identity (m=1..20): max violation " << worst_crossing
          << "\n";
    if (cfg.buffer_mode == BufferMode::infinite) {
        long long worst_refl = 0;
        for (int k = 0; k < cfg.ell; ++k)
            worst_refl = std::max(worst_refl, reflection_check(tr, k));
        report["reflection_max_deviation"] = worst_refl;
        pathwise_ok = pathwise_ok && worst_refl == 0;
        table << "reflection identity: max deviation " << worst_refl << "\n";
    }

    bool unit_lengths_one = cfg.unit_length.empty();
    bool exp_service =
        !cfg.service || cfg.service->family() == Family::exponential;
    if (cfg.buffer_mode == BufferMode::infinite &&
        cfg.arrival.family() == Family::exponential && unit_lengths_one &&
        exp_service && tr.arrivals_total > 0 &&
        cfg.lambda / (cfg.batch * cfg.mu) < 1.0) {
        // TV distance of the empirical pre-arrival cumulative law vs the
        // geometric stationary law
        AnalyticSolution sol = solve_root(
            CumulativeModel(cfg.arrival, cfg.lambda, cfg.mu, cfg.batch));
        std::vector<long long> q(cfg.ell, 0);
        std::vector<std::uint64_t> hist;
        std::uint64_t arrivals = 0;
        std::size_t skip = static_cast<std::size_t>(cfg.warmup_fraction *
                                                    tr.events.size());
        for (std::size_t i = 0; i < tr.events.size(); ++i) {
            const Event& ev = tr.events[i];
            if (ev.kind != EventKind::departure && i >= skip) {
                long long cum = 0;
                for (long long c : q) cum += c;
                if (hist.size() <= static_cast<std::size_t>(cum))
                    hist.resize(cum + 1, 0);
                ++hist[cum];
                ++arrivals;
            }
            if (ev.kind == EventKind::departure) {
                long long left = ev.length;
                for (int i2 = 0; i2 < cfg.ell && left > 0; ++i2) {
                    long long take = std::min(q[i2], left);
                    q[i2] -= take;
                    left -= take;
                }
            } else if (ev.kind == EventKind::arrival) {
                q[ev.cls] += ev.length;
            }
        }
        double tv = 0.0, tail = 1.0;
        for (std::size_t m = 0; m < hist.size(); ++m) {
            double p = stationary_pmf(sol, static_cast<int>(m));
            tail -= p;
            tv += std::abs(static_cast<double>(hist[m]) / arrivals - p);
        }
        tv = 0.5 * (tv + std::max(0.0, tail));
        double threshold = arrivals >= 1000000 ? 0.01 : 0.05;
        report["tv_distance"] = tv;
        report["tv_threshold"] = threshold;
        report["tv_pass"] = tv <= threshold;
        table << "pre-arrival TV distance vs geometric: " << tv
              << " (threshold " << threshold << ")\n";
    }

    report["pathwise_pass"] = pathwise_ok;
    table << "pathwise identities: " << (pathwise_ok ? "pass" : "FAIL")
          << "\n";
    emit(opt, report, table.str());
    return pathwise_ok ? kExitOk : kExitAudit;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bwplanner: buffer sizing toolkit for priority queues with "
                 "autonomous batch service"};
    app.require_subcommand(1);
    Options opt;
    std::uint64_t seed_arg = 0;
    int reps_arg = 0;
    for (const char* name : {"solve", "simulate", "optimize", "validate"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--scenario", opt.scenario_path, "scenario JSON file")
            ->required();
        sub->add_option("--seed", seed_arg, "override the scenario seed");
        sub->add_option("--reps", reps_arg, "override replication count");
        sub->add_option("--out", opt.out_dir, "output directory");
        sub->add_option("--format", opt.format, "table, json or csv")
            ->check(CLI::IsMember({"table", "json", "csv"}));
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }
    const CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--seed") > 0) opt.seed = seed_arg;
    if (sub->count("--reps") > 0) opt.reps = reps_arg;
    try {
        if (sub->get_name() == "solve") return cmd_solve(opt);
        if (sub->get_name() == "simulate") return cmd_simulate(opt);
        if (sub->get_name() == "optimize") return cmd_optimize(opt);
        return cmd_validate(opt);
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const UnstableSystem& e) {
        std::cerr << "error: unstable model: " << e.what() << "\n";
        return kExitUnstable;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitAudit;
    }
}
