#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "rng.hpp"

namespace bwplanner {

// Normalized interarrival moments rho_j = mu^j * E[T^j].
struct Moments {
    double rho1 = 0.0;
    double rho2 = 0.0;
    double rho3 = 0.0;
};

enum class Family { exponential, deterministic, erlang, hyperexp2 };

// Interarrival-time law with closed-form Laplace-Stieltjes transform,
// derivative, moments and inverse-transform sampler. Immutable value type.
class InterarrivalDistribution {
public:
    static InterarrivalDistribution exponential(double rate) {
        require(rate > 0.0, "exponential rate must be positive");
        InterarrivalDistribution d;
        d.family_ = Family::exponential;
        d.rate1_ = rate;
        return d;
    }

    static InterarrivalDistribution deterministic(double value) {
        require(value > 0.0, "deterministic interarrival must be positive");
        InterarrivalDistribution d;
        d.family_ = Family::deterministic;
        d.d_ = value;
        return d;
    }

    static InterarrivalDistribution erlang(int shape, double rate) {
        require(shape >= 1, "erlang shape must be >= 1");
        require(rate > 0.0, "erlang rate must be positive");
        InterarrivalDistribution d;
        d.family_ = Family::erlang;
        d.shape_ = shape;
        d.rate1_ = rate;
        return d;
    }

    static InterarrivalDistribution hyperexp2(double p, double rate1,
                                              double rate2) {
        require(p > 0.0 && p < 1.0, "hyperexp2 mixing weight must be in (0,1)");
        require(rate1 > 0.0 && rate2 > 0.0, "hyperexp2 rates must be positive");
        InterarrivalDistribution d;
        d.family_ = Family::hyperexp2;
        d.p_ = p;
        d.rate1_ = rate1;
        d.rate2_ = rate2;
        return d;
    }

    Family family() const { return family_; }
    double rate() const { return rate1_; }
    double rate2() const { return rate2_; }
    double mixing_p() const { return p_; }
    double deterministic_value() const { return d_; }
    int shape() const { return shape_; }

    double mean() const {
        switch (family_) {
            case Family::exponential: return 1.0 / rate1_;
            case Family::deterministic: return d_;
            case Family::erlang: return shape_ / rate1_;
            case Family::hyperexp2:
                return p_ / rate1_ + (1.0 - p_) / rate2_;
        }
        return 0.0;
    }

    // B^(s) = E[e^{-sT}], s >= 0
    double lst(double s) const {
        require_domain(s);
        switch (family_) {
            case Family::exponential:
                return rate1_ / (rate1_ + s);
            case Family::deterministic:
                return std::exp(-s * d_);
            case Family::erlang:
                return std::pow(rate1_ / (rate1_ + s), shape_);
            case Family::hyperexp2:
                return p_ * rate1_ / (rate1_ + s) +
                       (1.0 - p_) * rate2_ / (rate2_ + s);
        }
        return 0.0;
    }

    // dB^/ds, always <= 0
    double lst_derivative(double s) const {
        require_domain(s);
        switch (family_) {
            case Family::exponential:
                return -rate1_ / ((rate1_ + s) * (rate1_ + s));
            case Family::deterministic:
                return -d_ * std::exp(-s * d_);
            case Family::erlang:
                return -shape_ * std::pow(rate1_, shape_) /
                       std::pow(rate1_ + s, shape_ + 1);
            case Family::hyperexp2:
                return -p_ * rate1_ / ((rate1_ + s) * (rate1_ + s)) -
                       (1.0 - p_) * rate2_ / ((rate2_ + s) * (rate2_ + s));
        }
        return 0.0;
    }

    Moments moments(double mu) const {
        require(mu > 0.0, "mu must be positive");
        double m1 = mean(), m2 = 0.0, m3 = 0.0;
        switch (family_) {
            case Family::exponential: {
                double l = rate1_;
                m2 = 2.0 / (l * l);
                m3 = 6.0 / (l * l * l);
                break;
            }
            case Family::deterministic:
                m2 = d_ * d_;
                m3 = d_ * d_ * d_;
                break;
            case Family::erlang: {
                double l = rate1_, k = shape_;
                m2 = k * (k + 1) / (l * l);
                m3 = k * (k + 1) * (k + 2) / (l * l * l);
                break;
            }
            case Family::hyperexp2: {
                double l1 = rate1_, l2 = rate2_;
                m2 = 2.0 * p_ / (l1 * l1) + 2.0 * (1.0 - p_) / (l2 * l2);
                m3 = 6.0 * p_ / (l1 * l1 * l1) +
                     6.0 * (1.0 - p_) / (l2 * l2 * l2);
                break;
            }
        }
        return {mu * m1, mu * mu * m2, mu * mu * mu * m3};
    }

    double sample(RngStream& rng) const {
        switch (family_) {
            case Family::exponential:
                return sample_exp(rng, rate1_);
            case Family::deterministic:
                return d_;
            case Family::erlang: {
                double x = 0.0;
                for (int i = 0; i < shape_; ++i) x += sample_exp(rng, rate1_);
                return x;
            }
            case Family::hyperexp2:
                return rng.uniform01() < p_ ? sample_exp(rng, rate1_)
                                            : sample_exp(rng, rate2_);
        }
        return 0.0;
    }

    // P{j service epochs of a Poisson(mu) process fall in one interarrival}
    //   a_j = \int_0^inf e^{-mu x} (mu x)^j / j!  dB(x)
    // mixed-Poisson closed form per family
    double batch_count_pmf(double mu, int j) const {
        require(mu > 0.0 && j >= 0, "invalid batch_count_pmf arguments");
        switch (family_) {
            case Family::exponential:
                return geometric_count(rate1_, mu, j);
            case Family::deterministic: {
                double a = mu * d_;
                if (j == 0) return std::exp(-a);
                return std::exp(j * std::log(a) - a - std::lgamma(j + 1.0));
            }
            case Family::erlang: {
                // negative binomial
                double l = rate1_;
                double k = shape_;
                return std::exp(std::lgamma(j + k) - std::lgamma(k) -
                                std::lgamma(j + 1.0) +
                                k * std::log(l / (l + mu)) +
                                j * std::log(mu / (l + mu)));
            }
            case Family::hyperexp2:
                return p_ * geometric_count(rate1_, mu, j) +
                       (1.0 - p_) * geometric_count(rate2_, mu, j);
        }
        return 0.0;
    }

    std::string describe() const {
        switch (family_) {
            case Family::exponential:
                return "exponential(rate=" + std::to_string(rate1_) + ")";
            case Family::deterministic:
                return "deterministic(d=" + std::to_string(d_) + ")";
            case Family::erlang:
                return "erlang(shape=" + std::to_string(shape_) +
                       ",rate=" + std::to_string(rate1_) + ")";
            case Family::hyperexp2:
                return "hyperexp2(p=" + std::to_string(p_) +
                       ",rate1=" + std::to_string(rate1_) +
                       ",rate2=" + std::to_string(rate2_) + ")";
        }
        return "?";
    }

private:
    InterarrivalDistribution() = default;

    static void require(bool ok, const char* msg) {
        if (!ok) throw std::invalid_argument(msg);
    }
    static void require_domain(double s) {
        if (s < 0.0) throw std::domain_error("LST argument must be >= 0");
    }
    static double sample_exp(RngStream& rng, double rate) {
        return -std::log1p(-rng.uniform01()) / rate;
    }
    static double geometric_count(double lambda, double mu, int j) {
        return (lambda / (lambda + mu)) *
               std::pow(mu / (lambda + mu), j);
    }

    Family family_ = Family::exponential;
    double rate1_ = 1.0;
    double rate2_ = 0.0;
    double p_ = 0.0;
    double d_ = 0.0;
    int shape_ = 1;
};

}  // namespace bwplanner
