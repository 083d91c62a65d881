#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "distributions.hpp"

namespace bwplanner::oracle {

// Brute-force reference chains for the finite buffer, used only by tests.
// Dense linear algebra, desk scale (N <= 200).

namespace detail {

// Stationary vector by state elimination (Grassmann-Taksar-Heyman). Input is
// the matrix of nonnegative off-diagonal weights (rates for a CTMC,
// transition probabilities for a DTMC); diagonal entries are never read. The
// scheme is subtraction-free, so tail states keep full relative accuracy.
inline std::vector<double> stationary_vector(
    std::vector<std::vector<double>> R) {
    const int n = static_cast<int>(R.size());
    std::vector<double> s(n, 0.0);
    for (int k = n - 1; k >= 1; --k) {
        double sk = 0.0;
        for (int j = 0; j < k; ++j) sk += R[k][j];
        if (sk <= 0.0)
            throw std::runtime_error("stationary_vector: reducible chain");
        s[k] = sk;
        for (int i = 0; i < k; ++i) {
            double f = R[i][k] / sk;
            if (f == 0.0) continue;
            for (int j = 0; j < k; ++j) R[i][j] += f * R[k][j];
        }
    }
    std::vector<double> pi(n, 0.0);
    pi[0] = 1.0;
    double total = 1.0;
    for (int k = 1; k < n; ++k) {
        double acc = 0.0;
        for (int i = 0; i < k; ++i) acc += pi[i] * R[i][k];
        pi[k] = acc / s[k];
        total += pi[k];
    }
    for (double& p : pi) p /= total;
    return pi;
}

inline void check_args(int batch, int quota) {
    if (batch < 1 || quota < 1 || quota > 200)
        throw std::invalid_argument("oracle: need C >= 1, 1 <= N <= 200");
}

}  // namespace detail

// M/M^C/1/N continuous-time chain: arrivals m -> m+1 at rate lambda (blocked
// at N), batch departures m -> max(0, m-C) at rate mu. Loss fraction is the
// stationary mass of state N (Poisson arrivals see time averages).
inline double ctmc_loss(double lambda, double mu, int batch, int quota) {
    detail::check_args(batch, quota);
    if (lambda <= 0.0 || mu <= 0.0)
        throw std::invalid_argument("ctmc_loss: rates must be positive");
    const int n = quota + 1;
    std::vector<std::vector<double>> Q(n, std::vector<double>(n, 0.0));
    for (int m = 0; m < quota; ++m) Q[m][m + 1] += lambda;
    for (int m = 1; m < n; ++m) Q[m][std::max(0, m - batch)] += mu;
    return detail::stationary_vector(Q)[quota];
}

// GI/M^C/1/N pre-arrival chain: from state m the admitted arrival raises the
// content to m+1 (a full buffer loses it, content stays N); j batch
// departures during the interarrival take it to max(0, start - jC), with the
// residual tail mass lumped at 0 once the floor is hit.
inline double embedded_loss(const InterarrivalDistribution& dist, double mu,
                            int batch, int quota) {
    detail::check_args(batch, quota);
    if (mu <= 0.0) throw std::invalid_argument("embedded_loss: mu <= 0");
    const int n = quota + 1;
    std::vector<std::vector<double>> P(n, std::vector<double>(n, 0.0));
    for (int m = 0; m < n; ++m) {
        int start = m < quota ? m + 1 : quota;
        double acc = 0.0;
        for (int j = 0;; ++j) {
            int nxt = std::max(0, start - j * batch);
            if (nxt == 0) {
                P[m][0] += 1.0 - acc;
                break;
            }
            double p = dist.batch_count_pmf(mu, j);
            P[m][nxt] += p;
            acc += p;
        }
    }
    for (int m = 0; m < n; ++m) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) row += P[m][j];
        if (std::abs(row - 1.0) > 1e-12)
            throw std::runtime_error("embedded_loss: row sum drift");
    }
    return detail::stationary_vector(P)[quota];
}

}  // namespace bwplanner::oracle
