#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "distributions.hpp"
#include "rng.hpp"

namespace bwplanner {

enum class BufferMode { infinite, finite_per_class, finite_cumulative };

constexpr long long kInfiniteQuota = -1;

// Discrete law of the unit length theta on positive integers.
struct UnitLengthLaw {
    std::vector<long long> values{1};
    std::vector<double> probs{1.0};

    long long sample(RngStream& rng) const {
        if (values.size() == 1) return values[0];
        double u = rng.uniform01(), acc = 0.0;
        for (std::size_t i = 0; i + 1 < values.size(); ++i) {
            acc += probs[i];
            if (u < acc) return values[i];
        }
        return values.back();
    }
};

struct SystemConfig {
    int ell = 1;
    InterarrivalDistribution arrival = InterarrivalDistribution::exponential(1.0);
    double lambda = 1.0;                  // rate of the superposed process
    std::vector<double> thinning{1.0};    // class probabilities, sum to 1
    std::vector<UnitLengthLaw> unit_length{};  // per class; empty = all const 1
    double mu = 2.0;
    std::optional<InterarrivalDistribution> service;  // default Exp(mu)
    int batch = 1;                        // depletion rate C
    BufferMode buffer_mode = BufferMode::infinite;
    std::vector<long long> quotas{};      // per class or cumulative; -1 = inf
    std::vector<double> costs{1.0};       // alpha per class
    std::uint64_t max_arrivals = 0;       // 0 = unbounded by arrivals
    std::uint64_t max_events = 0;         // 0 = unbounded by events
    std::uint64_t seed = 1;
    double warmup_fraction = 0.1;         // statistical estimators only
    double first_arrival_time = -1.0;     // < 0: sample from the arrival law

    void validate() const {
        if (ell < 1) throw std::invalid_argument("config: ell < 1");
        if (lambda <= 0.0 || mu <= 0.0)
            throw std::invalid_argument("config: rates must be positive");
        if (batch < 1) throw std::invalid_argument("config: C < 1");
        if (static_cast<int>(thinning.size()) != ell)
            throw std::invalid_argument("config: thinning size != ell");
        double s = 0.0;
        for (double p : thinning) {
            if (p < 0.0) throw std::invalid_argument("config: negative thinning");
            s += p;
        }
        if (std::abs(s - 1.0) > 1e-12)
            throw std::invalid_argument("config: thinning must sum to 1");
        if (!unit_length.empty() &&
            static_cast<int>(unit_length.size()) != ell)
            throw std::invalid_argument("config: unit_length size != ell");
        for (const auto& ul : unit_length) {
            if (ul.values.empty() || ul.values.size() != ul.probs.size())
                throw std::invalid_argument("config: malformed unit length law");
            double q = 0.0;
            for (std::size_t i = 0; i < ul.values.size(); ++i) {
                if (ul.values[i] < 1 || ul.probs[i] < 0.0)
                    throw std::invalid_argument("config: unit lengths must be "
                                                "positive integers");
                q += ul.probs[i];
            }
            if (std::abs(q - 1.0) > 1e-12)
                throw std::invalid_argument("config: unit length law must "
                                            "sum to 1");
        }
        if (!quotas.empty() && static_cast<int>(quotas.size()) != ell)
            throw std::invalid_argument("config: quotas size != ell");
        for (long long q : quotas)
            if (q < 1 && q != kInfiniteQuota)
                throw std::invalid_argument("config: quotas must be positive "
                                            "or infinite");
        if (buffer_mode == BufferMode::finite_cumulative) {
            for (std::size_t i = 1; i < quotas.size(); ++i)
                if (quotas[i] != kInfiniteQuota && quotas[i] <= quotas[i - 1])
                    throw std::invalid_argument(
                        "config: cumulative quotas must be increasing");
        }
        if (buffer_mode != BufferMode::infinite && quotas.empty())
            throw std::invalid_argument("config: finite mode needs quotas");
        if (static_cast<int>(costs.size()) != ell)
            throw std::invalid_argument("config: costs size != ell");
        for (double a : costs)
            if (a <= 0.0) throw std::invalid_argument("config: costs > 0");
        if (warmup_fraction < 0.0 || warmup_fraction >= 1.0)
            throw std::invalid_argument("config: warmup_fraction in [0,1)");
        if (std::abs(lambda * arrival.mean() - 1.0) > 1e-9)
            throw std::invalid_argument(
                "config: lambda inconsistent with arrival law mean");
    }

    UnitLengthLaw unit_law(int cls) const {
        return unit_length.empty() ? UnitLengthLaw{} : unit_length[cls];
    }
};

enum class EventKind { arrival, rejected_arrival, departure };

struct Event {
    double time;
    EventKind kind;
    int cls;           // 0-based class for arrivals; -1 for departures
    long long length;  // theta for arrivals, removed total for departures
};

struct BufferTrajectory {
    int ell = 1;
    int batch = 1;
    BufferMode buffer_mode = BufferMode::infinite;
    std::vector<Event> events;
    std::vector<long long> final_contents;  // per class
    double final_time = 0.0;
    std::uint64_t arrivals_total = 0;  // offered, admitted + rejected
    std::vector<std::uint64_t> arrivals_by_class;  // offered
    std::vector<std::uint64_t> rejected_by_class;
    std::vector<long long> lost_length_by_class;
    std::uint64_t departures = 0;
    std::uint64_t tie_warnings = 0;
};

struct EstimateReport {
    std::vector<double> J_class;          // per-class quota exceedance
    std::vector<double> J_cum;            // cumulative-level exceedance
    std::vector<double> J_cum_departure;  // departure-side estimator of J_cum
    std::vector<double> loss_fraction;    // per class, finite modes
    double loss_fraction_total = 0.0;
    double J = 0.0;      // sum alpha^(k) J_class[k]
    double J_bar = 0.0;  // sum alpha_k J_cum[k]
    std::uint64_t arrivals_used = 0;
    // filled by replication merge; zero for a single run
    std::vector<double> J_class_hw, J_cum_hw, J_cum_departure_hw;
    double J_hw = 0.0, J_bar_hw = 0.0, loss_fraction_total_hw = 0.0;
};

namespace detail {

inline int sample_class(const SystemConfig& cfg, RngStream& rng) {
    if (cfg.ell == 1) {
        rng.uniform01();  // keep stream alignment across ell
        return 0;
    }
    double u = rng.uniform01(), acc = 0.0;
    for (int k = 0; k + 1 < cfg.ell; ++k) {
        acc += cfg.thinning[k];
        if (u < acc) return k;
    }
    return cfg.ell - 1;
}

// total length removed from classes <= k by a departure draining d in
// priority order
inline long long drained_below(const std::vector<long long>& contents, int k,
                               long long d) {
    long long qk = 0;
    for (int i = 0; i <= k; ++i) qk += contents[i];
    return std::min(qk, d);
}

}  // namespace detail

// Event loop: one thinned arrival stream merged with one autonomous renewal
// departure stream; deterministic given (config, seed, replication).
inline BufferTrajectory run(const SystemConfig& cfg,
                            std::uint64_t replication = 0) {
    cfg.validate();
    BufferTrajectory tr;
    tr.ell = cfg.ell;
    tr.batch = cfg.batch;
    tr.buffer_mode = cfg.buffer_mode;
    tr.final_contents.assign(cfg.ell, 0);
    tr.arrivals_by_class.assign(cfg.ell, 0);
    tr.rejected_by_class.assign(cfg.ell, 0);
    tr.lost_length_by_class.assign(cfg.ell, 0);
    if (cfg.max_arrivals == 0 && cfg.max_events == 0) return tr;

    RngStream arr_rng = derive_stream(cfg.seed, StreamId::interarrival, replication);
    RngStream cls_rng = derive_stream(cfg.seed, StreamId::class_assignment, replication);
    RngStream len_rng = derive_stream(cfg.seed, StreamId::unit_length, replication);
    RngStream svc_rng = derive_stream(cfg.seed, StreamId::service, replication);
    InterarrivalDistribution service =
        cfg.service ? *cfg.service : InterarrivalDistribution::exponential(cfg.mu);

    std::vector<long long>& q = tr.final_contents;
    double next_arrival = cfg.first_arrival_time >= 0.0
                              ? cfg.first_arrival_time
                              : cfg.arrival.sample(arr_rng);
    double next_departure = service.sample(svc_rng);

    while (true) {
        if (cfg.max_events > 0 && tr.events.size() >= cfg.max_events) break;
        if (cfg.max_arrivals > 0 && tr.arrivals_total >= cfg.max_arrivals)
            break;
        bool departure_first = next_departure <= next_arrival;
        if (next_departure == next_arrival) ++tr.tie_warnings;
        if (departure_first) {
            double t = next_departure;
            long long total = 0;
            for (long long c : q) total += c;
            long long d = std::min<long long>(total, cfg.batch);
            long long left = d;
            for (int k = 0; k < cfg.ell && left > 0; ++k) {
                long long take = std::min(q[k], left);
                q[k] -= take;
                left -= take;
            }
            tr.events.push_back({t, EventKind::departure, -1, d});
            ++tr.departures;
            tr.final_time = t;
            next_departure = t + service.sample(svc_rng);
        } else {
            double t = next_arrival;
            int k = detail::sample_class(cfg, cls_rng);
            long long theta = cfg.unit_law(k).sample(len_rng);
            ++tr.arrivals_total;
            ++tr.arrivals_by_class[k];
            bool reject = false;
            if (cfg.buffer_mode == BufferMode::finite_per_class) {
                long long nk = cfg.quotas[k];
                reject = nk != kInfiniteQuota && q[k] + theta > nk;
            } else if (cfg.buffer_mode == BufferMode::finite_cumulative) {
                long long cum = 0;
                for (int i = 0; i <= k; ++i) cum += q[i];
                for (int j = k; j < cfg.ell && !reject; ++j) {
                    if (j > k) cum += q[j];
                    long long nj = cfg.quotas[j];
                    reject = nj != kInfiniteQuota && cum + theta > nj;
                }
            }
            if (reject) {
                ++tr.rejected_by_class[k];
                tr.lost_length_by_class[k] += theta;
                tr.events.push_back({t, EventKind::rejected_arrival, k, theta});
            } else {
                q[k] += theta;
                tr.events.push_back({t, EventKind::arrival, k, theta});
            }
            tr.final_time = t;
            next_arrival = t + cfg.arrival.sample(arr_rng);
        }
    }
    return tr;
}

// Quota-exceedance and loss estimators. Arrival-side indicators use the
// pre-arrival content strictly above the quota; the departure-side companion
// counts departures from cumulative contents >= N_k + l + 1, l = 1..C, which
// targets the same pre-arrival tail by the crossing balance.
inline EstimateReport estimate_J(const BufferTrajectory& tr,
                                 const SystemConfig& cfg) {
    const int ell = cfg.ell;
    EstimateReport rep;
    rep.J_class.assign(ell, 0.0);
    rep.J_cum.assign(ell, 0.0);
    rep.J_cum_departure.assign(ell, 0.0);
    rep.loss_fraction.assign(ell, 0.0);
    rep.J_class_hw.assign(ell, 0.0);
    rep.J_cum_hw.assign(ell, 0.0);
    rep.J_cum_departure_hw.assign(ell, 0.0);

    std::size_t skip = static_cast<std::size_t>(
        cfg.warmup_fraction * static_cast<double>(tr.events.size()));
    std::vector<long long> q(ell, 0);
    std::vector<std::uint64_t> exceed_class(ell, 0), exceed_cum(ell, 0);
    std::vector<std::uint64_t> dep_count(ell, 0);
    std::vector<std::uint64_t> offered(ell, 0), rejected(ell, 0);
    std::vector<std::uint64_t> class_le(ell, 0);  // arrivals of classes <= k
    std::uint64_t arrivals = 0;

    for (std::size_t idx = 0; idx < tr.events.size(); ++idx) {
        const Event& ev = tr.events[idx];
        bool counted = idx >= skip;
        if (ev.kind == EventKind::departure) {
            if (counted) {
                long long cum = 0;
                for (int k = 0; k < ell; ++k) {
                    cum += q[k];
                    long long nk = cfg.quotas.empty() ? kInfiniteQuota
                                                      : cfg.quotas[k];
                    if (nk == kInfiniteQuota) continue;
                    for (int l = 1; l <= cfg.batch; ++l)
                        if (cum >= nk + l + 1) ++dep_count[k];
                }
            }
            long long left = ev.length;
            for (int k = 0; k < ell && left > 0; ++k) {
                long long take = std::min(q[k], left);
                q[k] -= take;
                left -= take;
            }
        } else {
            int k = ev.cls;
            if (counted) {
                ++arrivals;
                ++offered[k];
                long long cum = 0;
                for (int i = 0; i <= k; ++i) cum += q[i];
                long long nk =
                    cfg.quotas.empty() ? kInfiniteQuota : cfg.quotas[k];
                if (nk != kInfiniteQuota) {
                    if (q[k] > nk) ++exceed_class[k];
                    if (cum > nk) ++exceed_cum[k];
                }
                for (int j = k; j < ell; ++j) ++class_le[j];
                if (ev.kind == EventKind::rejected_arrival) ++rejected[k];
            }
            if (ev.kind == EventKind::arrival) q[ev.cls] += ev.length;
        }
    }

    rep.arrivals_used = arrivals;
    if (arrivals == 0) return rep;
    std::uint64_t rejected_total = 0;
    for (int k = 0; k < ell; ++k) {
        rep.J_class[k] = static_cast<double>(exceed_class[k]) / arrivals;
        rep.J_cum[k] = static_cast<double>(exceed_cum[k]) / arrivals;
        double mix = static_cast<double>(class_le[k]) / arrivals;
        rep.J_cum_departure[k] =
            mix * static_cast<double>(dep_count[k]) / arrivals;
        if (offered[k] > 0)
            rep.loss_fraction[k] =
                static_cast<double>(rejected[k]) / offered[k];
        rejected_total += rejected[k];
        rep.J += cfg.costs[k] * rep.J_class[k];
        rep.J_bar += cfg.costs[k] * rep.J_cum[k];
    }
    rep.loss_fraction_total = static_cast<double>(rejected_total) / arrivals;
    return rep;
}

struct CrossingReport {
    std::uint64_t up_crossings = 0;
    std::uint64_t down_crossings = 0;
    long long violation = 0;  // ups - downs - 1{final >= m}
};

// Pathwise crossing balance on the cumulative contents Q_k: up-crossings of
// level m equal departures from Q_k in [m, m-1+C] plus the end indicator.
inline CrossingReport crossing_audit(const BufferTrajectory& tr, long long m,
                                     int k) {
    if (m < 1) throw std::invalid_argument("crossing_audit: m >= 1");
    if (k < 0 || k >= tr.ell)
        throw std::invalid_argument("crossing_audit: bad level");
    CrossingReport cr;
    std::vector<long long> q(tr.ell, 0);
    long long cum = 0;
    for (const Event& ev : tr.events) {
        if (ev.kind == EventKind::departure) {
            long long removed_k =
                std::min(cum, std::min<long long>(ev.length, tr.batch));
            if (cum >= m && cum - removed_k < m) ++cr.down_crossings;
            long long left = ev.length;
            for (int i = 0; i < tr.ell && left > 0; ++i) {
                long long take = std::min(q[i], left);
                q[i] -= take;
                left -= take;
            }
        } else if (ev.kind == EventKind::arrival) {
            if (ev.cls <= k && cum < m && cum + ev.length >= m)
                ++cr.up_crossings;
            q[ev.cls] += ev.length;
        }
        cum = 0;
        for (int i = 0; i <= k; ++i) cum += q[i];
    }
    cr.violation = static_cast<long long>(cr.up_crossings) -
                   static_cast<long long>(cr.down_crossings) -
                   (cum >= m ? 1 : 0);
    return cr;
}

// Replays the admitted arrival stream of classes <= k through the one-queue
// recursion Q = max(0, Q + theta - d) and compares with the multi-class
// priority path. Exact equality expected (continuity epochs in finite mode).
inline long long cumulative_equivalence_check(const BufferTrajectory& tr,
                                              int k) {
    if (k < 0 || k >= tr.ell)
        throw std::invalid_argument("cumulative_equivalence_check: bad level");
    std::vector<long long> q(tr.ell, 0);
    long long single = 0, worst = 0;
    for (const Event& ev : tr.events) {
        if (ev.kind == EventKind::departure) {
            long long left = ev.length;
            for (int i = 0; i < tr.ell && left > 0; ++i) {
                long long take = std::min(q[i], left);
                q[i] -= take;
                left -= take;
            }
            single = std::max<long long>(0, single - tr.batch);
        } else if (ev.kind == EventKind::arrival) {
            q[ev.cls] += ev.length;
            if (ev.cls <= k) single += ev.length;
        }
        long long cum = 0;
        for (int i = 0; i <= k; ++i) cum += q[i];
        worst = std::max(worst, std::llabs(cum - single));
    }
    return worst;
}

// Skorokhod reflection identity Q_k(t) = S_k(t) - inf_{u<=t} S_k(u) with
// S_k the admitted length of classes <= k minus C per departure epoch.
inline long long reflection_check(const BufferTrajectory& tr, int k) {
    if (tr.buffer_mode != BufferMode::infinite)
        throw std::invalid_argument("reflection_check: infinite mode only");
    if (k < 0 || k >= tr.ell)
        throw std::invalid_argument("reflection_check: bad level");
    std::vector<long long> q(tr.ell, 0);
    long long netflow = 0, low = 0, worst = 0;
    for (const Event& ev : tr.events) {
        if (ev.kind == EventKind::departure) {
            long long left = ev.length;
            for (int i = 0; i < tr.ell && left > 0; ++i) {
                long long take = std::min(q[i], left);
                q[i] -= take;
                left -= take;
            }
            netflow -= tr.batch;
        } else if (ev.kind == EventKind::arrival) {
            q[ev.cls] += ev.length;
            if (ev.cls <= k) netflow += ev.length;
        }
        low = std::min(low, netflow);
        long long cum = 0;
        for (int i = 0; i <= k; ++i) cum += q[i];
        worst = std::max(worst, std::llabs(cum - (netflow - low)));
    }
    return worst;
}

struct StabilityProbe {
    std::vector<double> window_times;
    std::vector<double> drift;  // (A_ell(t) - D(t)) / t at window ends
    double final_drift = 0.0;
};

// Advisory drift estimate of (A_ell(t) - D(t)) / t over growing windows.
inline StabilityProbe stability_probe(const SystemConfig& cfg, int windows,
                                      std::uint64_t replication = 0) {
    if (windows < 1) throw std::invalid_argument("stability_probe: windows");
    BufferTrajectory tr = run(cfg, replication);
    StabilityProbe sp;
    if (tr.events.empty()) return sp;
    long long inflow = 0, outflow = 0;
    std::size_t step = std::max<std::size_t>(1, tr.events.size() / windows);
    for (std::size_t i = 0; i < tr.events.size(); ++i) {
        const Event& ev = tr.events[i];
        if (ev.kind == EventKind::departure)
            outflow += tr.batch;
        else if (ev.kind == EventKind::arrival || ev.kind == EventKind::rejected_arrival)
            inflow += ev.length;
        if ((i + 1) % step == 0 || i + 1 == tr.events.size()) {
            if (ev.time > 0.0) {
                sp.window_times.push_back(ev.time);
                sp.drift.push_back((inflow - outflow) / ev.time);
            }
        }
    }
    if (!sp.drift.empty()) sp.final_drift = sp.drift.back();
    return sp;
}

// CSV export: one row per event with per-class and cumulative contents.
inline std::string trajectory_csv(const BufferTrajectory& tr) {
    std::ostringstream out;
    out.precision(17);
    out << "epoch_time,event_type,class";
    for (int k = 1; k <= tr.ell; ++k) out << ",Q" << k;
    for (int k = 1; k <= tr.ell; ++k) out << ",cumQ" << k;
    out << "\n";
    std::vector<long long> q(tr.ell, 0);
    for (const Event& ev : tr.events) {
        const char* kind = "departure";
        if (ev.kind == EventKind::arrival) kind = "arrival";
        if (ev.kind == EventKind::rejected_arrival) kind = "rejected";
        if (ev.kind == EventKind::departure) {
            long long left = ev.length;
            for (int i = 0; i < tr.ell && left > 0; ++i) {
                long long take = std::min(q[i], left);
                q[i] -= take;
                left -= take;
            }
        } else if (ev.kind == EventKind::arrival) {
            q[ev.cls] += ev.length;
        }
        out << ev.time << ',' << kind << ','
            << (ev.cls >= 0 ? std::to_string(ev.cls + 1) : std::string("-"));
        long long cum = 0;
        for (int k = 0; k < tr.ell; ++k) out << ',' << q[k];
        for (int k = 0; k < tr.ell; ++k) {
            cum += q[k];
            out << ',' << cum;
        }
        out << "\n";
    }
    return out.str();
}

namespace detail {

inline int replication_threads() {
    if (const char* env = std::getenv("BW_PLANNER_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

inline void merge_stat(const std::vector<double>& xs, double& mean,
                       double& hw) {
    double m = 0.0;
    for (double x : xs) m += x;
    m /= xs.size();
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    mean = m;
    hw = xs.size() > 1
             ? 1.96 * std::sqrt(v / (xs.size() - 1.0) / xs.size())
             : 0.0;
}

}  // namespace detail

// Independent replications over disjoint RNG streams, merged in replication
// order (deterministic regardless of thread count).
inline EstimateReport run_replications(const SystemConfig& cfg, int reps) {
    if (reps < 1) throw std::invalid_argument("run_replications: reps >= 1");
    cfg.validate();
    std::vector<EstimateReport> parts(reps);
    int threads = std::min(reps, detail::replication_threads());
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (int r = next.fetch_add(1); r < reps; r = next.fetch_add(1))
            parts[r] = estimate_J(run(cfg, static_cast<std::uint64_t>(r)), cfg);
    };
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    if (reps == 1) return parts[0];
    EstimateReport out;
    const int ell = cfg.ell;
    out.J_class.assign(ell, 0.0);
    out.J_cum.assign(ell, 0.0);
    out.J_cum_departure.assign(ell, 0.0);
    out.loss_fraction.assign(ell, 0.0);
    out.J_class_hw.assign(ell, 0.0);
    out.J_cum_hw.assign(ell, 0.0);
    out.J_cum_departure_hw.assign(ell, 0.0);
    std::vector<double> buf(reps);
    auto collect = [&](auto get, double& mean, double& hw) {
        for (int r = 0; r < reps; ++r) buf[r] = get(parts[r]);
        detail::merge_stat(buf, mean, hw);
    };
    for (int k = 0; k < ell; ++k) {
        collect([&](const EstimateReport& p) { return p.J_class[k]; },
                out.J_class[k], out.J_class_hw[k]);
        collect([&](const EstimateReport& p) { return p.J_cum[k]; },
                out.J_cum[k], out.J_cum_hw[k]);
        collect([&](const EstimateReport& p) { return p.J_cum_departure[k]; },
                out.J_cum_departure[k], out.J_cum_departure_hw[k]);
        double dummy;
        collect([&](const EstimateReport& p) { return p.loss_fraction[k]; },
                out.loss_fraction[k], dummy);
    }
    collect([](const EstimateReport& p) { return p.J; }, out.J, out.J_hw);
    collect([](const EstimateReport& p) { return p.J_bar; }, out.J_bar,
            out.J_bar_hw);
    collect([](const EstimateReport& p) { return p.loss_fraction_total; },
            out.loss_fraction_total, out.loss_fraction_total_hw);
    for (const auto& p : parts) out.arrivals_used += p.arrivals_used;
    return out;
}

}  // namespace bwplanner
