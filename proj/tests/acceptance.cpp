// Acceptance gate: one line per criterion, nonzero exit when any fails.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bwplanner/analytic.hpp"
#include "bwplanner/approximation.hpp"
#include "bwplanner/optimizer.hpp"
#include "bwplanner/oracle.hpp"
#include "bwplanner/simulator.hpp"

using namespace bwplanner;

namespace {

int failures = 0;

void report(int idx, const char* name, bool ok, const std::string& detail) {
    std::printf("criterion %d (%s): %s%s%s\n", idx, name,
                ok ? "PASS" : "FAIL", detail.empty() ? "" : " ", detail.c_str());
    if (!ok) ++failures;
}

SystemConfig grid_config(int ell, int batch, std::uint64_t seed) {
    SystemConfig cfg;
    cfg.ell = ell;
    cfg.arrival = InterarrivalDistribution::exponential(1.0);
    cfg.lambda = 1.0;
    cfg.thinning.assign(ell, 1.0 / ell);
    cfg.mu = 2.0 / batch;  // rho = 0.5
    cfg.batch = batch;
    cfg.costs.assign(ell, 1.0);
    cfg.max_events = 1500;
    cfg.seed = seed;
    if (ell >= 2)
        cfg.unit_length.assign(ell, UnitLengthLaw{{1, 2}, {0.6, 0.4}});
    return cfg;
}

void criteria_1_2() {
    long long worst_equiv = 0, worst_refl = 0, worst_cross = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        for (int ell : {1, 2, 3}) {
            for (int batch : {1, 2, 3}) {
                BufferTrajectory tr = run(grid_config(ell, batch, seed));
                for (int k = 0; k < ell; ++k) {
                    worst_equiv = std::max(worst_equiv,
                                           cumulative_equivalence_check(tr, k));
                    worst_refl =
                        std::max(worst_refl, reflection_check(tr, k));
                    for (long long m = 1; m <= 20; ++m)
                        worst_cross = std::max(
                            worst_cross,
                            std::llabs(crossing_audit(tr, m, k).violation));
                }
            }
        }
    }
    report(1, "pathwise cumulative equivalence", worst_equiv == 0,
           "max deviation " + std::to_string(worst_equiv) +
               " over 100 seeds x ell{1,2,3} x C{1,2,3}");
    report(2, "reflection and crossing identities",
           worst_refl == 0 && worst_cross == 0,
           "reflection max " + std::to_string(worst_refl) +
               ", crossing max " + std::to_string(worst_cross));
}

std::vector<InterarrivalDistribution> families(double lambda) {
    return {InterarrivalDistribution::exponential(lambda),
            InterarrivalDistribution::deterministic(1.0 / lambda),
            InterarrivalDistribution::erlang(2, 2.0 * lambda),
            InterarrivalDistribution::hyperexp2(0.4, 2.0 * lambda,
                                                0.75 * lambda)};
}

void criterion_3() {
    double worst_residual = 0.0;
    int points = 0;
    for (int batch : {1, 2, 3}) {
        for (double rho : {0.2, 0.4, 0.6, 0.8, 0.95}) {
            double lambda = rho * batch;
            for (const auto& d : families(lambda)) {
                AnalyticSolution sol =
                    solve_root(CumulativeModel(d, lambda, 1.0, batch));
                worst_residual = std::max(worst_residual, sol.residual);
                ++points;
            }
        }
    }
    double worst_route = 0.0;
    for (int batch : {1, 2, 3, 4, 5}) {
        for (double rho : {0.3, 0.6, 0.9}) {
            double lambda = rho * batch;
            double a = solve_root(CumulativeModel(
                                      InterarrivalDistribution::exponential(
                                          lambda),
                                      lambda, 1.0, batch))
                           .varsigma;
            double b = solve_root_mmc(lambda, 1.0, batch);
            worst_route = std::max(worst_route, std::abs(a - b));
        }
    }
    // independent fixed-point oracle for D/M/1 at mu d = 2
    double z = 0.2;
    for (int i = 0; i < 400; ++i) z = std::exp(-2.0 * (1.0 - z));
    double dm1 = solve_root(CumulativeModel(
                                InterarrivalDistribution::deterministic(2.0),
                                0.5, 1.0, 1))
                     .varsigma;
    bool ok = worst_residual <= 1e-12 && points >= 50 &&
              worst_route <= 1e-10 && std::abs(dm1 - z) <= 1e-5 &&
              std::abs(dm1 - 0.20319) <= 1e-5;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "%d-point grid residual %.2e, route gap %.2e, D/M/1 gap "
                  "%.2e",
                  points, worst_residual, worst_route, std::abs(dm1 - z));
    report(3, "root solver", ok, buf);
}

void criterion_4() {
    double worst_oracle = 0.0, worst_closed = 0.0;
    for (int batch : {1, 2, 3}) {
        double lambda = 0.6 * batch;
        for (const auto& d : families(lambda)) {
            CumulativeModel m(d, lambda, 1.0, batch);
            for (int N : {1, 3, 7, 12, 15}) {
                double a = loss_exact(m, N);
                double b = oracle::embedded_loss(d, 1.0, batch, N);
                worst_oracle = std::max(worst_oracle, std::abs(a - b) / b);
                if (d.family() == Family::exponential) {
                    double c = oracle::ctmc_loss(lambda, 1.0, batch, N);
                    worst_oracle =
                        std::max(worst_oracle, std::abs(a - c) / c);
                }
            }
        }
    }
    for (double rho : {0.5, 0.8}) {
        CumulativeModel m(InterarrivalDistribution::exponential(rho), rho,
                          1.0, 1);
        for (int N = 1; N <= 60; ++N) {
            double closed = (1 - rho) * std::pow(rho, N) /
                            (1 - std::pow(rho, N + 1));
            worst_closed = std::max(
                worst_closed, std::abs(loss_exact(m, N) - closed) / closed);
        }
    }
    bool ok = worst_oracle <= 1e-9 && worst_closed <= 1e-12;
    char buf[120];
    std::snprintf(buf, sizeof buf,
                  "oracle rel gap %.2e, birth-death rel gap %.2e",
                  worst_oracle, worst_closed);
    report(4, "exact loss vs independent chains", ok, buf);
}

void criterion_5() {
    bool ok = true;
    double worst40 = 0.0;
    for (double rho : {0.5, 0.8}) {
        for (int batch : {2, 3}) {
            double lambda = rho * batch;
            for (const auto& d :
                 {InterarrivalDistribution::exponential(lambda),
                  InterarrivalDistribution::erlang(2, 2.0 * lambda)}) {
                CumulativeModel m(d, lambda, 1.0, batch);
                double prev = 1e18;
                for (int N : {10, 20, 40, 80}) {
                    double ratio = loss_asymptotic(m, N) / loss_exact(m, N);
                    double gap = std::abs(ratio - 1.0);
                    if (N == 40) {
                        worst40 = std::max(worst40, gap);
                        if (gap > 0.05) ok = false;
                    }
                    if (gap > prev + 1e-9) ok = false;
                    prev = gap;
                }
            }
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "worst |ratio-1| at N=40: %.2e", worst40);
    report(5, "asymptotic loss converges to exact", ok, buf);
}

void criterion_6() {
    bool ok = true;
    double worst_final = 0.0;
    const double Delta = 1.0;
    for (int batch : {2, 3}) {
        for (bool erlang : {false, true}) {
            auto critical = erlang ? InterarrivalDistribution::erlang(
                                         2, 2.0 * batch)
                                   : InterarrivalDistribution::exponential(
                                         static_cast<double>(batch));
            Moments mom = critical.moments(1.0);
            double prev_gap = 1e18;
            double ratio = 0.0;
            for (double delta : {0.05, 0.02, 0.01}) {
                double lambda = (1.0 - delta) * batch;
                auto d = erlang ? InterarrivalDistribution::erlang(
                                      2, 2.0 * lambda)
                                : InterarrivalDistribution::exponential(lambda);
                CumulativeModel m(d, lambda, 1.0, batch);
                int N = static_cast<int>(std::ceil(Delta / delta));
                ratio = loss_heavy_load(mom, delta, Delta, batch) /
                        loss_exact(m, N);
                double gap = std::abs(ratio - 1.0);
                if (gap >= prev_gap) ok = false;
                prev_gap = gap;
            }
            worst_final = std::max(worst_final, std::abs(ratio - 1.0));
            double prev_scaled = 1e18;
            for (double delta : {0.1, 0.05, 0.025}) {
                double lambda = (1.0 - delta) * batch;
                auto d = erlang ? InterarrivalDistribution::erlang(
                                      2, 2.0 * lambda)
                                : InterarrivalDistribution::exponential(lambda);
                CumulativeModel m(d, lambda, 1.0, batch);
                double err = std::abs(solve_root(m).varsigma -
                                      heavy_load_root(mom, delta, batch));
                if (err / delta >= prev_scaled) ok = false;  // at least linear
                prev_scaled = err / delta;
            }
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "final |ratio-1| worst case %.2e",
                  worst_final);
    report(6, "heavy-load formulas converge", ok, buf);
}

double tv_distance_case(int batch, double rho, std::uint64_t arrivals) {
    SystemConfig cfg;
    cfg.arrival = InterarrivalDistribution::exponential(1.0);
    cfg.lambda = 1.0;
    cfg.mu = cfg.lambda / (batch * rho);
    cfg.batch = batch;
    cfg.max_arrivals = arrivals;
    cfg.seed = 20240601;
    BufferTrajectory tr = run(cfg);
    AnalyticSolution sol = solve_root(
        CumulativeModel(cfg.arrival, cfg.lambda, cfg.mu, cfg.batch));
    std::vector<std::uint64_t> hist;
    std::uint64_t used = 0;
    long long q = 0;
    std::size_t skip =
        static_cast<std::size_t>(cfg.warmup_fraction * tr.events.size());
    for (std::size_t i = 0; i < tr.events.size(); ++i) {
        const Event& ev = tr.events[i];
        if (ev.kind == EventKind::arrival) {
            if (i >= skip) {
                if (hist.size() <= static_cast<std::size_t>(q))
                    hist.resize(q + 1, 0);
                ++hist[q];
                ++used;
            }
            q += ev.length;
        } else if (ev.kind == EventKind::departure) {
            q -= ev.length;
        }
    }
    double tv = 0.0, tail = 1.0;
    for (std::size_t m = 0; m < hist.size(); ++m) {
        double p = stationary_pmf(sol, static_cast<int>(m));
        tail -= p;
        tv += std::abs(static_cast<double>(hist[m]) / used - p);
    }
    return 0.5 * (tv + std::max(0.0, tail));
}

void criterion_7() {
    bool ok = true;
    double worst_tv = 0.0;
    for (int batch : {1, 2}) {
        for (double rho : {0.5, 0.8}) {
            double tv = tv_distance_case(batch, rho, 1000000);
            worst_tv = std::max(worst_tv, tv);
            if (tv > 0.01) ok = false;
        }
    }
    double worst_sigmas = 0.0;
    for (double rho : {0.5, 0.8}) {
        for (int N : {5, 10}) {
            SystemConfig cfg;
            cfg.arrival = InterarrivalDistribution::exponential(1.0);
            cfg.lambda = 1.0;
            cfg.mu = 1.0 / rho;
            cfg.batch = 1;
            cfg.buffer_mode = BufferMode::finite_per_class;
            cfg.quotas = {N};
            cfg.max_arrivals = 500000;
            cfg.seed = 202 + N;
            EstimateReport rep = estimate_J(run(cfg), cfg);
            double p = loss_exact(
                CumulativeModel(cfg.arrival, cfg.lambda, cfg.mu, 1), N);
            double se = std::sqrt(p * (1 - p) /
                                  static_cast<double>(rep.arrivals_used));
            double sigmas = std::abs(rep.loss_fraction_total - p) / se;
            worst_sigmas = std::max(worst_sigmas, sigmas);
            if (sigmas > 3.0) ok = false;
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "worst TV %.4f, worst loss gap %.2f SE",
                  worst_tv, worst_sigmas);
    report(7, "simulation matches the analytic laws", ok, buf);
}

OptimizationProblem random_problem(RngStream& rng, Decision decision) {
    OptimizationProblem p;
    p.ell = 1 + static_cast<int>(rng.uniform01() * 3);
    if (p.ell > 3) p.ell = 3;
    p.thinning.assign(p.ell, 0.0);
    double s = 0.0;
    for (double& t : p.thinning) {
        t = 0.2 + rng.uniform01();
        s += t;
    }
    for (double& t : p.thinning) t /= s;
    p.lambda = 0.5 + 2.0 * rng.uniform01();
    p.arrival = InterarrivalDistribution::exponential(p.lambda);
    int C = 1 + static_cast<int>(rng.uniform01() * 6);
    if (C > 6) C = 6;
    p.mu = p.lambda / (C * (0.35 + 0.5 * rng.uniform01()));
    p.alpha_class.assign(p.ell, 0.0);
    for (double& a : p.alpha_class) a = 0.5 + 2.0 * rng.uniform01();
    p.beta_class.assign(p.ell - 1, 0.0);
    for (double& b : p.beta_class) b = 0.4 + 2.0 * rng.uniform01();
    p.epsilon = std::pow(10.0, -1.0 - 3.0 * rng.uniform01());
    p.decision = decision;
    p.fixed_C = C;
    p.fixed_N1 = 1 + static_cast<long long>(rng.uniform01() * 60);
    return p;
}

void criterion_8() {
    bool ok = true;
    RngStream rng = derive_stream(8675309, StreamId::interarrival, 0);
    int n1_cases = 0, c_cases = 0;
    while (n1_cases < 25) {
        OptimizationProblem p = random_problem(rng, Decision::quota_N1);
        long long want = -1;
        for (long long n = 0; n <= 400; ++n)
            if (evaluate_J_bar(p, n, p.fixed_C) <= p.epsilon) {
                want = n;
                break;
            }
        if (want < 0 || want > 60) continue;
        OptimizationResult res = minimize_N1(p);
        if (res.optimum != want || !res.certificate) ok = false;
        ++n1_cases;
    }
    while (c_cases < 25) {
        OptimizationProblem p = random_problem(rng, Decision::depletion_C);
        int c_lower =
            static_cast<int>(std::floor(p.lambda / p.mu)) + 1;
        long long want = -1;
        for (int c = c_lower; c <= 512; ++c)
            if (evaluate_J_bar(p, p.fixed_N1, c) <= p.epsilon) {
                want = c;
                break;
            }
        if (want < 0) continue;
        OptimizationResult res = minimize_C(p);
        if (res.optimum != want || !res.certificate) ok = false;
        ++c_cases;
    }
    OptimizationProblem closed;
    closed.ell = 1;
    closed.arrival = InterarrivalDistribution::exponential(1.0);
    closed.lambda = 1.0;
    closed.thinning = {1.0};
    closed.mu = 2.0;  // varsigma = 0.5
    closed.alpha_class = {1.0};
    closed.epsilon = 0.01;
    closed.decision = Decision::quota_N1;
    closed.fixed_C = 1;
    OptimizationResult res = minimize_N1(closed);
    if (res.optimum != 6 || !res.certificate) ok = false;
    char buf[96];
    std::snprintf(buf, sizeof buf,
                  "50 randomized scenarios + closed-form N1=%lld",
                  static_cast<long long>(res.optimum));
    report(8, "optimizers equal the exhaustive scan", ok, buf);
}

std::string run_capture(const std::string& args,
                        const std::filesystem::path& out) {
    std::string cmd =
        std::string(BWPLANNER_CLI_PATH) + " " + args + " > " + out.string() +
        " 2>&1";
    if (std::system(cmd.c_str()) == -1) return {};
    std::ifstream f(out);
    std::stringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

void criterion_9() {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "bwplanner_acceptance";
    fs::create_directories(dir);
    fs::path sc = dir / "scenario.json";
    {
        std::ofstream f(sc);
        f << R"({
  "schema_version": 1,
  "model": {
    "arrival": {"family": "exponential", "rate": 1.0},
    "lambda": 1.0,
    "mu": 2.0,
    "quotas": [4],
    "max_arrivals": 50000
  },
  "optimize": {"decision": "quota_N1", "epsilon": 0.01, "fixed_C": 1},
  "seed": 3
})";
    }
    bool ok = true;
    for (const char* sub : {"solve", "simulate", "optimize", "validate"}) {
        std::string args = std::string(sub) + " --scenario " + sc.string() +
                           " --format json --seed 42";
        std::string a = run_capture(args, dir / "a.json");
        std::string b = run_capture(args, dir / "b.json");
        if (a.empty() || a != b) ok = false;
    }
    report(9, "byte-identical reruns", ok, "solve/simulate/optimize/validate");
}

}  // namespace

int main() {
    criteria_1_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    if (failures == 0)
        std::printf("all acceptance criteria passed\n");
    else
        std::printf("%d acceptance criteria FAILED\n", failures);
    return failures == 0 ? 0 : 1;
}
