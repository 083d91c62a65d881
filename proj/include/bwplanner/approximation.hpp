#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "analytic.hpp"

namespace bwplanner {

// Per-class costs alpha^(k) mapped onto cumulative-level costs alpha_k by the
// convex recursion alpha_{k+1} = alpha_k p_{k+1,1} + alpha^(k+1) p_{k+1,2}.
struct CostMapping {
    std::vector<double> alpha_class;
    std::vector<double> alpha_cum;
    std::vector<double> p1;  // p_{k+1,1}, index k-1 for level k+1
    std::vector<double> p2;
};

// Quota link between the per-class and cumulative problems:
// beta_k = beta^(k)/(1+beta^(k)), N_1 = floor(beta_k N_k).
struct QuotaMapping {
    std::vector<double> beta_class;  // beta^(k), k = 2..ell
    std::vector<double> beta_cum;    // beta_k
    std::vector<long long> N_class;
    std::vector<long long> N_cum;
};

inline CostMapping map_costs(const std::vector<double>& alpha_class,
                             const std::vector<double>& roots) {
    const std::size_t ell = alpha_class.size();
    if (ell == 0 || roots.size() != ell)
        throw std::invalid_argument("map_costs: size mismatch");
    for (std::size_t k = 0; k < ell; ++k) {
        if (alpha_class[k] <= 0.0)
            throw std::invalid_argument("map_costs: costs must be positive");
        if (!(roots[k] > 0.0 && roots[k] < 1.0))
            throw std::invalid_argument("map_costs: roots must be in (0,1)");
        if (k > 0 && roots[k] < roots[k - 1])
            throw std::invalid_argument(
                "map_costs: roots must be nondecreasing");
    }
    CostMapping cm;
    cm.alpha_class = alpha_class;
    cm.alpha_cum.assign(ell, 0.0);
    cm.alpha_cum[0] = alpha_class[0];
    for (std::size_t k = 1; k < ell; ++k) {
        double p1 = roots[k - 1] * (1.0 - roots[k]) /
                    (roots[k] * (1.0 - roots[k - 1]));
        cm.p1.push_back(p1);
        cm.p2.push_back(1.0 - p1);
        cm.alpha_cum[k] =
            cm.alpha_cum[k - 1] * p1 + alpha_class[k] * (1.0 - p1);
    }
    return cm;
}

// beta_class holds beta^(k) for k = 2..ell (size ell-1). Each N_k is the
// largest integer with floor(beta_k N_k) = N_1, seeded at floor((N_1+1)/beta_k)
// and walked down until the identity holds.
inline QuotaMapping map_quotas(const std::vector<double>& beta_class,
                               long long N1) {
    if (N1 < 0) throw std::invalid_argument("map_quotas: N_1 < 0");
    QuotaMapping qm;
    qm.beta_class = beta_class;
    qm.N_class.push_back(N1);
    qm.N_cum.push_back(N1);
    for (double b : beta_class) {
        if (b <= 0.0)
            throw std::invalid_argument("map_quotas: beta^(k) must be > 0");
        double beta = b / (1.0 + b);
        qm.beta_cum.push_back(beta);
        long long nk = static_cast<long long>(
            std::floor((static_cast<double>(N1) + 1.0) / beta));
        while (nk >= N1 &&
               static_cast<long long>(std::floor(beta * nk)) != N1)
            --nk;
        if (nk < N1)
            throw std::invalid_argument(
                "map_quotas: no integer quota satisfies the floor identity");
        qm.N_cum.push_back(nk);
        qm.N_class.push_back(nk - N1);
    }
    return qm;
}

enum class JBarMode { infinite_quota, finite_quota };

// Cumulative objective J-bar = sum alpha_k J_k. Infinite quotas: J_k is the
// arrival-weighted geometric tail (lambda_k/lambda_ell) varsigma_k^{N_k+1}.
// Finite quotas: J_k is bounded by the accumulated exact losses of the
// levels up to k.
inline double J_bar(const CostMapping& costs, const QuotaMapping& quotas,
                    const std::vector<AnalyticSolution>& solutions,
                    const std::vector<double>& lambda_share, JBarMode mode,
                    const std::vector<CumulativeModel>* models = nullptr) {
    const std::size_t ell = costs.alpha_cum.size();
    if (solutions.size() != ell || quotas.N_cum.size() != ell ||
        lambda_share.size() != ell)
        throw std::invalid_argument("J_bar: size mismatch");
    if (mode == JBarMode::finite_quota && (!models || models->size() != ell))
        throw std::invalid_argument("J_bar: finite mode needs models");
    double total = 0.0;
    double loss_acc = 0.0;
    for (std::size_t k = 0; k < ell; ++k) {
        double Jk;
        if (mode == JBarMode::infinite_quota) {
            Jk = lambda_share[k] *
                 tail_overflow_prob(solutions[k],
                                    static_cast<int>(quotas.N_cum[k]));
        } else {
            loss_acc += loss_exact((*models)[k],
                                   static_cast<int>(quotas.N_cum[k]));
            Jk = std::min(1.0, loss_acc);
        }
        total += costs.alpha_cum[k] * Jk;
    }
    return total;
}

}  // namespace bwplanner
