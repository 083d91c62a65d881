#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "distributions.hpp"

namespace bwplanner {

struct UnstableSystem : std::runtime_error {
    explicit UnstableSystem(const std::string& what)
        : std::runtime_error(what) {}
};

struct PrecisionError : std::runtime_error {
    explicit PrecisionError(const std::string& what)
        : std::runtime_error(what) {}
};

// GI/M^C/1 cumulative-buffer model: interarrival law B_k of the superposed
// first-k classes, its rate, the exponential service rate and the batch size.
struct CumulativeModel {
    InterarrivalDistribution dist;
    double lambda;
    double mu;
    int batch;  // depletion rate C

    CumulativeModel(InterarrivalDistribution d, double lambda_, double mu_,
                    int batch_)
        : dist(d), lambda(lambda_), mu(mu_), batch(batch_) {
        if (lambda <= 0.0 || mu <= 0.0 || batch < 1)
            throw std::invalid_argument("CumulativeModel: rates must be "
                                        "positive and batch >= 1");
        double m = dist.mean();
        if (std::abs(lambda * m - 1.0) > 1e-9)
            throw std::invalid_argument(
                "CumulativeModel: lambda inconsistent with distribution mean");
    }

    double rho() const { return lambda / (batch * mu); }
};

struct AnalyticSolution {
    double varsigma;  // root of z = B^(mu - mu z^C) in (0,1)
    double rho;
    int iterations;
    double residual;
};

struct SeriesCoefficients {
    std::vector<double> r;         // R(z) = B^(mu - mu z^C), support on C*i
    std::vector<double> f;         // F(z) = R(z)/(R(z) - z)
    std::vector<double> pi_tilde;  // (1 + z + ... + z^{C-1}) F(z)
};

namespace detail {

// Neumaier compensated sum
class CompensatedSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double root_equation(const CumulativeModel& m, double z) {
    return m.dist.lst(m.mu - m.mu * std::pow(z, m.batch)) - z;
}

}  // namespace detail

// Unique root of z = B^(mu - mu z^C) in (0,1). Bracketing bisection with a
// safeguarded Newton polish; residual kept below 1e-12.
inline AnalyticSolution solve_root(const CumulativeModel& model) {
    double rho = model.rho();
    if (rho >= 1.0)
        throw UnstableSystem("solve_root: rho_k = " + std::to_string(rho) +
                             " >= 1");
    // g(0+) > 0; find an upper bracket with g < 0 (g(1) = 0, g'(1) > 0)
    double lo = 0.0;
    double hi = 1.0 - 1e-9;
    while (detail::root_equation(model, hi) >= 0.0 && 1.0 - hi > 1e-15)
        hi = 1.0 - (1.0 - hi) / 16.0;
    int iters = 0;
    for (; iters < 200 && hi - lo > 1e-16; ++iters) {
        double mid = 0.5 * (lo + hi);
        if (detail::root_equation(model, mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    double z = 0.5 * (lo + hi);
    // Newton refinement on g(z) = B^(mu - mu z^C) - z
    for (int i = 0; i < 8; ++i, ++iters) {
        double s = model.mu - model.mu * std::pow(z, model.batch);
        double g = model.dist.lst(s) - z;
        double dg = -model.mu * model.batch * std::pow(z, model.batch - 1) *
                        model.dist.lst_derivative(s) -
                    1.0;
        double step = g / dg;
        double zn = z - step;
        if (zn <= lo || zn >= hi) break;  // keep the bracket
        z = zn;
        if (std::abs(step) < 1e-16) break;
    }
    double residual = std::abs(detail::root_equation(model, z));
    if (residual > 1e-12)
        throw PrecisionError("solve_root: residual " +
                             std::to_string(residual));
    return {z, rho, iters, residual};
}

// Poisson-arrival special case: root of lambda/mu = z + z^2 + ... + z^C.
inline double solve_root_mmc(double lambda, double mu, int batch) {
    if (lambda <= 0.0 || mu <= 0.0 || batch < 1)
        throw std::invalid_argument("solve_root_mmc: bad arguments");
    if (lambda / (batch * mu) >= 1.0)
        throw UnstableSystem("solve_root_mmc: rho >= 1");
    double target = lambda / mu;
    auto h = [&](double z) {
        double sum = 0.0, p = 1.0;
        for (int i = 1; i <= batch; ++i) {
            p *= z;
            sum += p;
        }
        return sum - target;
    };
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
        double mid = 0.5 * (lo + hi);
        if (h(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Pre-arrival stationary law P{Q_k = m} = varsigma^m (1 - varsigma).
inline double stationary_pmf(const AnalyticSolution& sol, int m) {
    if (m < 0) throw std::invalid_argument("stationary_pmf: m < 0");
    return std::pow(sol.varsigma, m) * (1.0 - sol.varsigma);
}

// P{Q_k > N immediately before an arrival} = varsigma^{N+1}.
inline double tail_overflow_prob(const AnalyticSolution& sol, int quota) {
    if (quota < 0) throw std::invalid_argument("tail_overflow_prob: N < 0");
    return std::pow(sol.varsigma, quota + 1);
}

// Mean pre-arrival content varsigma / (1 - varsigma).
inline double expected_content(const AnalyticSolution& sol) {
    return sol.varsigma / (1.0 - sol.varsigma);
}

// Coefficients of R(z) = B^(mu - mu z^C) (support on multiples of C),
// F(z) = R(z)/(R(z)-z) by power-series division with f_0 = 1, and
// pi~_i = sum_{c=0}^{C-1} f_{i-c}.
inline SeriesCoefficients series_coefficients(const CumulativeModel& model,
                                              int n_max) {
    if (model.rho() >= 1.0) throw UnstableSystem("series_coefficients");
    if (n_max < model.batch)
        throw std::invalid_argument("series_coefficients: n_max < C");
    const int C = model.batch;
    SeriesCoefficients sc;
    sc.r.assign(n_max + 1, 0.0);
    for (int i = 0; C * i <= n_max; ++i)
        sc.r[C * i] = model.dist.batch_count_pmf(model.mu, i);
    if (!(sc.r[0] > 0.0))
        throw PrecisionError("series_coefficients: degenerate r_0 = 0");

    // f_n = (r_n + f_{n-1} - sum_{m<n} f_m r_{n-m}) / r_0
    sc.f.assign(n_max + 1, 0.0);
    sc.f[0] = 1.0;
    for (int n = 1; n <= n_max; ++n) {
        detail::CompensatedSum acc;
        acc.add(sc.r[n]);
        acc.add(sc.f[n - 1]);
        for (int j = C; j <= n; j += C) acc.add(-sc.f[n - j] * sc.r[j]);
        sc.f[n] = acc.value() / sc.r[0];
        if (!std::isfinite(sc.f[n]))
            throw PrecisionError("series_coefficients: overflow at n = " +
                                 std::to_string(n) +
                                 "; use the asymptotic form");
    }
    sc.pi_tilde.assign(n_max + 1, 0.0);
    for (int i = 0; i <= n_max; ++i) {
        double s = 0.0;
        for (int c = 0; c < C && i - c >= 0; ++c) s += sc.f[i - c];
        sc.pi_tilde[i] = s;
    }
    return sc;
}

// Exact GI/M^C/1/N loss probability via the Takacs-type recursion: 1/f_N.
inline double loss_exact(const CumulativeModel& model, int quota) {
    if (quota < 1) throw std::invalid_argument("loss_exact: N must be >= 1");
    if (quota > 10000)
        throw std::invalid_argument("loss_exact: N > 1e4 series-length guard");
    if (model.rho() >= 1.0) throw UnstableSystem("loss_exact: rho >= 1");
    int n_max = std::max(quota, model.batch);
    SeriesCoefficients sc = series_coefficients(model, n_max);
    double fN = sc.f[quota];
    if (!std::isfinite(fN) || fN < 1.0)
        throw PrecisionError("loss_exact: series out of range");
    return 1.0 / fN;
}

// Asymptotic loss for large N. Residue of F at varsigma gives
//   f_N ~ varsigma^{-N} / W - rho/(1-rho),  W = 1 - R'(varsigma),
// hence p ~ (1-rho) W varsigma^N / ((1-rho) - rho W varsigma^N).
// Reduces at C=1 to the classical GI/M/1/N form.
inline double loss_asymptotic(const CumulativeModel& model, int quota) {
    if (quota < 1) throw std::invalid_argument("loss_asymptotic: N >= 1");
    AnalyticSolution sol = solve_root(model);
    double z = sol.varsigma;
    double s = model.mu - model.mu * std::pow(z, model.batch);
    double W = 1.0 + model.mu * model.batch * std::pow(z, model.batch - 1) *
                         model.dist.lst_derivative(s);
    double zN = std::pow(z, quota);
    double rho = sol.rho;
    return (1.0 - rho) * W * zN / ((1.0 - rho) - rho * W * zN);
}

namespace detail {
// curvature of the root equation at z = 1 under load 1 - delta:
// varsigma = 1 - 2 delta / (C - 1 + rho2 C^2) + O(delta^2)
inline double heavy_load_kappa(const Moments& mom, int batch) {
    return 2.0 / (batch - 1 + mom.rho2 * batch * batch);
}
}  // namespace detail

// Heavy-load root expansion (rho = 1 - delta, delta small, C >= 2).
inline double heavy_load_root(const Moments& mom, double delta, int batch) {
    if (batch < 2)
        throw std::invalid_argument("heavy_load_root: C = 1 unsupported");
    if (!(delta > 0.0 && delta < 0.2))
        throw std::invalid_argument("heavy_load_root: delta outside (0,0.2)");
    return 1.0 - delta * detail::heavy_load_kappa(mom, batch);
}

// Heavy-load loss in the regime delta*N -> Delta:
//   p = delta e^{-kappa Delta} / (1 - e^{-kappa Delta}).
inline double loss_heavy_load(const Moments& mom, double delta, double Delta,
                              int batch) {
    if (batch < 2)
        throw std::invalid_argument("loss_heavy_load: C = 1 unsupported");
    if (!(delta > 0.0 && delta < 0.2) || !(Delta > 0.0))
        throw std::invalid_argument("loss_heavy_load: bad delta/Delta");
    double e = std::exp(-detail::heavy_load_kappa(mom, batch) * Delta);
    return delta * e / (1.0 - e);
}

}  // namespace bwplanner
