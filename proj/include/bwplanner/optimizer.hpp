#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>
#include <stdexcept>
#include <vector>

#include "approximation.hpp"

namespace bwplanner {

enum class Decision { quota_N1, depletion_C };

struct OptimizationProblem {
    int ell = 1;
    InterarrivalDistribution arrival =
        InterarrivalDistribution::exponential(1.0);
    double lambda = 1.0;               // superposed arrival rate
    std::vector<double> thinning{1.0};
    double mu = 2.0;
    std::vector<double> alpha_class{1.0};
    std::vector<double> beta_class{};  // beta^(k), k = 2..ell
    double epsilon = 1e-3;
    Decision decision = Decision::quota_N1;
    int fixed_C = 1;          // used when decision == quota_N1
    long long fixed_N1 = 1;   // used when decision == depletion_C
    JBarMode mode = JBarMode::infinite_quota;

    void validate() const {
        if (ell < 1) throw std::invalid_argument("problem: ell < 1");
        if (lambda <= 0.0 || mu <= 0.0)
            throw std::invalid_argument("problem: rates must be positive");
        if (static_cast<int>(thinning.size()) != ell ||
            static_cast<int>(alpha_class.size()) != ell ||
            static_cast<int>(beta_class.size()) != ell - 1)
            throw std::invalid_argument("problem: per-class sizes mismatch");
        double s = 0.0;
        for (double p : thinning) {
            if (p <= 0.0)
                throw std::invalid_argument("problem: thinning must be > 0");
            s += p;
        }
        if (std::abs(s - 1.0) > 1e-12)
            throw std::invalid_argument("problem: thinning must sum to 1");
        double alpha_sum = 0.0;
        for (double a : alpha_class) alpha_sum += a;
        if (!(epsilon > 0.0 && epsilon < alpha_sum))
            throw std::invalid_argument(
                "problem: epsilon must lie in (0, sum alpha)");
        if (ell >= 2 && arrival.family() != Family::exponential)
            throw std::invalid_argument(
                "problem: multi-class analytic mapping needs exponential "
                "arrivals (thinning leaves other families intractable)");
        if (decision == Decision::quota_N1 && fixed_C < 1)
            throw std::invalid_argument("problem: fixed C < 1");
        if (decision == Decision::depletion_C && fixed_N1 < 1)
            throw std::invalid_argument("problem: fixed N_1 < 1");
    }

    // lambda_k = lambda * sum_{i<=k} pi_i
    std::vector<double> cumulative_rates() const {
        std::vector<double> out(ell);
        double acc = 0.0;
        for (int k = 0; k < ell; ++k) {
            acc += thinning[k];
            out[k] = lambda * acc;
        }
        out[ell - 1] = lambda;
        return out;
    }

    CumulativeModel model_for(int level, int batch) const {
        std::vector<double> rates = cumulative_rates();
        if (ell == 1)
            return CumulativeModel(arrival, lambda, mu, batch);
        return CumulativeModel(
            InterarrivalDistribution::exponential(rates[level]),
            rates[level], mu, batch);
    }
};

struct ProbePoint {
    long long value;  // the probed decision variable
    double J;
};

struct OptimizationResult {
    long long optimum = 0;
    double J_bar_at_optimum = 0.0;
    double J_bar_below =
        std::numeric_limits<double>::quiet_NaN();  // at optimum - 1
    bool certificate = false;
    long long lower = 0, upper = 0;
    std::vector<ProbePoint> trace;
};

namespace detail {

// Per-run context: memoized roots keyed on (level, C), since varsigma_k
// depends only on (lambda_k, mu, C).
class ProbeContext {
public:
    explicit ProbeContext(const OptimizationProblem& p) : p_(p) {}

    const std::vector<AnalyticSolution>& solutions(int batch) {
        auto it = sols_.find(batch);
        if (it != sols_.end()) return it->second;
        std::vector<AnalyticSolution> out;
        out.reserve(p_.ell);
        for (int k = 0; k < p_.ell; ++k)
            out.push_back(solve_root(p_.model_for(k, batch)));
        return sols_.emplace(batch, std::move(out)).first->second;
    }

    const CostMapping& costs(int batch) {
        auto it = costs_.find(batch);
        if (it != costs_.end()) return it->second;
        std::vector<double> roots;
        for (const auto& s : solutions(batch)) roots.push_back(s.varsigma);
        return costs_.emplace(batch, map_costs(p_.alpha_class, roots))
            .first->second;
    }

    std::vector<double> lambda_share() const {
        std::vector<double> rates = p_.cumulative_rates();
        std::vector<double> out(p_.ell);
        for (int k = 0; k < p_.ell; ++k) out[k] = rates[k] / p_.lambda;
        return out;
    }

    double evaluate(long long N1, int batch) {
        QuotaMapping qm = map_quotas(p_.beta_class, N1);
        std::vector<CumulativeModel> models;
        const std::vector<CumulativeModel>* mp = nullptr;
        if (p_.mode == JBarMode::finite_quota) {
            for (int k = 0; k < p_.ell; ++k)
                models.push_back(p_.model_for(k, batch));
            mp = &models;
        }
        return J_bar(costs(batch), qm, solutions(batch), lambda_share(),
                     p_.mode, mp);
    }

private:
    const OptimizationProblem& p_;
    std::map<int, std::vector<AnalyticSolution>> sols_;
    std::map<int, CostMapping> costs_;
};

inline void audit_monotone(std::vector<ProbePoint> trace) {
    std::sort(trace.begin(), trace.end(),
              [](const ProbePoint& a, const ProbePoint& b) {
                  return a.value < b.value;
              });
    for (std::size_t i = 1; i < trace.size(); ++i)
        if (trace[i].J > trace[i - 1].J + 1e-15)
            throw std::runtime_error(
                "optimizer: objective not nonincreasing along the probe "
                "sequence; refusing to certify the optimum");
}

// smallest N1 with alpha_k J_k(N1) < threshold, for cumulative level k:
// log seed on the geometric tail, then an exact local scan
inline long long per_level_threshold(ProbeContext& ctx,
                                     const OptimizationProblem& p, int level,
                                     int batch, double threshold) {
    const auto& sols = ctx.solutions(batch);
    const auto& cm = ctx.costs(batch);
    std::vector<double> share = ctx.lambda_share();
    double z = sols[level].varsigma;
    double coef = cm.alpha_cum[level] * share[level];
    auto value = [&](long long N1) {
        QuotaMapping qm = map_quotas(p.beta_class, N1);
        return coef * std::pow(z, qm.N_cum[level] + 1);
    };
    // geometric tail: coef * z^{N+1} < threshold at N > log(th/coef)/log z - 1
    double beta = level == 0
                      ? 1.0
                      : p.beta_class[level - 1] / (1.0 + p.beta_class[level - 1]);
    double nk = std::log(threshold / coef) / std::log(z) - 1.0;
    long long seed = std::max<long long>(
        0, static_cast<long long>(std::ceil(beta * nk)));
    while (value(seed) >= threshold) ++seed;
    while (seed > 0 && value(seed - 1) < threshold) --seed;
    return seed;
}

}  // namespace detail

// J-bar of the mapped cumulative problem at a given (N_1, C); exposed for
// exhaustive scans in tests and for the CLI.
inline double evaluate_J_bar(const OptimizationProblem& problem, long long N1,
                             int batch) {
    problem.validate();
    detail::ProbeContext ctx(problem);
    return ctx.evaluate(N1, batch);
}

// advisory bracket: per level, smallest N1 with alpha_k J_k < epsilon (lower,
// max over k) and with alpha_k J_k < epsilon/ell (upper, max over k)
inline std::pair<long long, long long> bounds_N1(
    const OptimizationProblem& problem) {
    problem.validate();
    detail::ProbeContext ctx(problem);
    long long lo = 0, hi = 0;
    for (int k = 0; k < problem.ell; ++k) {
        lo = std::max(lo, detail::per_level_threshold(ctx, problem, k,
                                                      problem.fixed_C,
                                                      problem.epsilon));
        hi = std::max(hi, detail::per_level_threshold(
                              ctx, problem, k, problem.fixed_C,
                              problem.epsilon / problem.ell));
    }
    return {lo, hi};
}

// smallest integer N_1 with J-bar <= epsilon at the fixed C
inline OptimizationResult minimize_N1(const OptimizationProblem& problem) {
    problem.validate();
    if (problem.decision != Decision::quota_N1)
        throw std::invalid_argument("minimize_N1: wrong decision variable");
    detail::ProbeContext ctx(problem);
    OptimizationResult res;
    auto [lo, hi] = bounds_N1(problem);
    res.lower = lo;
    res.upper = hi;
    auto probe = [&](long long N1) {
        double J = ctx.evaluate(N1, problem.fixed_C);
        res.trace.push_back({N1, J});
        return J;
    };
    while (probe(hi) > problem.epsilon) hi = 2 * hi + 1;  // advisory bound slack
    long long a = std::min(lo, hi), b = hi;  // J(b) <= eps
    while (a < b) {
        long long mid = a + (b - a) / 2;
        if (probe(mid) <= problem.epsilon)
            b = mid;
        else
            a = mid + 1;
    }
    while (b > 0 && probe(b - 1) <= problem.epsilon) --b;  // bound slack
    res.optimum = b;
    res.J_bar_at_optimum = probe(b);
    if (b > 0) res.J_bar_below = probe(b - 1);
    res.certificate = res.J_bar_at_optimum <= problem.epsilon &&
                      (b == 0 || res.J_bar_below > problem.epsilon);
    detail::audit_monotone(res.trace);
    return res;
}

// smallest integer C >= C_lower (stability) with J-bar <= epsilon at the
// fixed quota vector
inline OptimizationResult minimize_C(const OptimizationProblem& problem) {
    problem.validate();
    if (problem.decision != Decision::depletion_C)
        throw std::invalid_argument("minimize_C: wrong decision variable");
    detail::ProbeContext ctx(problem);
    OptimizationResult res;
    int c_lower = static_cast<int>(std::floor(problem.lambda / problem.mu)) + 1;
    while (problem.lambda / (c_lower * problem.mu) >= 1.0) ++c_lower;
    res.lower = c_lower;
    auto probe = [&](int c) {
        double J = ctx.evaluate(problem.fixed_N1, c);
        res.trace.push_back({c, J});
        return J;
    };
    // J-bar does not vanish as C grows: the root tends to B^(mu) > 0, so a
    // tight budget can be unreachable by raising C alone. Detect the plateau
    // instead of doubling forever.
    int hi = c_lower, doublings = 0;
    double prev = probe(hi);
    while (prev > problem.epsilon) {
        if (++doublings > 40)
            throw std::runtime_error("minimize_C: no feasible C found");
        hi *= 2;
        double J = probe(hi);
        if (J > problem.epsilon && prev - J <= 1e-13 * prev)
            throw std::runtime_error(
                "minimize_C: J-bar plateaus above epsilon; the budget is "
                "unreachable for any depletion rate");
        prev = J;
    }
    res.upper = hi;
    int a = c_lower, b = hi;
    while (a < b) {
        int mid = a + (b - a) / 2;
        if (probe(mid) <= problem.epsilon)
            b = mid;
        else
            a = mid + 1;
    }
    res.optimum = b;
    res.J_bar_at_optimum = probe(b);
    if (b > c_lower) res.J_bar_below = probe(b - 1);
    res.certificate = res.J_bar_at_optimum <= problem.epsilon &&
                      (b == c_lower || res.J_bar_below > problem.epsilon);
    detail::audit_monotone(res.trace);
    return res;
}

}  // namespace bwplanner
