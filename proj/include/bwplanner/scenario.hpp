#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "optimizer.hpp"
#include "simulator.hpp"

namespace bwplanner {

struct SchemaError : std::runtime_error {
    explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

struct HeavyLoadRequest {
    double delta;
    double Delta;
};

struct SimulateOptions {
    int replications = 1;
    bool trajectory_csv = false;
};

// Parsed scenario document: the simulator config plus per-subcommand blocks.
struct Scenario {
    SystemConfig config;
    SimulateOptions simulate;
    std::optional<HeavyLoadRequest> heavy_load;
    std::optional<OptimizationProblem> optimize;
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& obj, const char* where,
                           std::initializer_list<const char*> allowed) {
    if (!obj.is_object())
        throw SchemaError(std::string(where) + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed)
            if (it.key() == key) known = true;
        if (!known)
            throw SchemaError(std::string(where) + ": unknown key '" +
                              it.key() + "'");
    }
}

template <typename T>
T field(const json& obj, const char* where, const char* key) {
    if (!obj.contains(key))
        throw SchemaError(std::string(where) + ": missing key '" + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw SchemaError(std::string(where) + ": bad value for '" + key +
                          "'");
    }
}

template <typename T>
T field_or(const json& obj, const char* where, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    return field<T>(obj, where, key);
}

inline InterarrivalDistribution parse_distribution(const json& obj,
                                                   const char* where) {
    reject_unknown(obj, where,
                   {"family", "rate", "value", "shape", "p", "rate1", "rate2"});
    std::string family = field<std::string>(obj, where, "family");
    try {
        if (family == "exponential")
            return InterarrivalDistribution::exponential(
                field<double>(obj, where, "rate"));
        if (family == "deterministic")
            return InterarrivalDistribution::deterministic(
                field<double>(obj, where, "value"));
        if (family == "erlang")
            return InterarrivalDistribution::erlang(
                field<int>(obj, where, "shape"),
                field<double>(obj, where, "rate"));
        if (family == "hyperexp2")
            return InterarrivalDistribution::hyperexp2(
                field<double>(obj, where, "p"),
                field<double>(obj, where, "rate1"),
                field<double>(obj, where, "rate2"));
    } catch (const std::invalid_argument& e) {
        throw SchemaError(std::string(where) + ": " + e.what());
    }
    throw SchemaError(std::string(where) + ": unknown family '" + family +
                      "'");
}

inline BufferMode parse_mode(const std::string& s, const char* where) {
    if (s == "infinite") return BufferMode::infinite;
    if (s == "finite_per_class") return BufferMode::finite_per_class;
    if (s == "finite_cumulative") return BufferMode::finite_cumulative;
    throw SchemaError(std::string(where) + ": unknown buffer_mode '" + s +
                      "'");
}

}  // namespace detail

inline Scenario parse_scenario(const nlohmann::json& doc) {
    using detail::field;
    using detail::field_or;
    using detail::reject_unknown;

    reject_unknown(doc, "scenario",
                   {"schema_version", "model", "simulate", "solve",
                    "optimize", "seed"});
    int version = field<int>(doc, "scenario", "schema_version");
    if (version != 1)
        throw SchemaError("scenario: unsupported schema_version " +
                          std::to_string(version));

    Scenario sc;
    if (!doc.contains("model") || !doc.at("model").is_object())
        throw SchemaError("scenario: missing model object");
    const auto& model = doc.at("model");
    reject_unknown(model, "model",
                   {"ell", "arrival", "lambda", "thinning", "mu", "service",
                    "batch", "buffer_mode", "quotas", "costs", "unit_length",
                    "max_arrivals", "max_events", "warmup_fraction",
                    "first_arrival_time"});
    SystemConfig& cfg = sc.config;
    cfg.ell = field_or<int>(model, "model", "ell", 1);
    if (!model.contains("arrival"))
        throw SchemaError("model: missing arrival block");
    cfg.arrival = detail::parse_distribution(model.at("arrival"), "arrival");
    cfg.lambda = field<double>(model, "model", "lambda");
    cfg.thinning = field_or<std::vector<double>>(model, "model", "thinning",
                                                 {1.0});
    cfg.mu = field<double>(model, "model", "mu");
    if (model.contains("service"))
        cfg.service = detail::parse_distribution(model.at("service"),
                                                 "service");
    cfg.batch = field_or<int>(model, "model", "batch", 1);
    cfg.buffer_mode = detail::parse_mode(
        field_or<std::string>(model, "model", "buffer_mode", "infinite"),
        "model");
    cfg.quotas = field_or<std::vector<long long>>(model, "model", "quotas", {});
    cfg.costs = field_or<std::vector<double>>(model, "model", "costs",
                                              std::vector<double>(cfg.ell, 1.0));
    if (model.contains("unit_length")) {
        for (const auto& entry : model.at("unit_length")) {
            UnitLengthLaw law;
            law.values.clear();
            law.probs.clear();
            for (const auto& pair : entry) {
                if (!pair.is_array() || pair.size() != 2)
                    throw SchemaError("unit_length: expected [value, prob] "
                                      "pairs");
                law.values.push_back(pair.at(0).get<long long>());
                law.probs.push_back(pair.at(1).get<double>());
            }
            cfg.unit_length.push_back(law);
        }
    }
    cfg.max_arrivals = field_or<std::uint64_t>(model, "model", "max_arrivals", 0);
    cfg.max_events = field_or<std::uint64_t>(model, "model", "max_events", 0);
    cfg.warmup_fraction =
        field_or<double>(model, "model", "warmup_fraction", 0.1);
    cfg.first_arrival_time =
        field_or<double>(model, "model", "first_arrival_time", -1.0);
    cfg.seed = field_or<std::uint64_t>(doc, "scenario", "seed", 1);

    if (doc.contains("simulate")) {
        const auto& sim = doc.at("simulate");
        reject_unknown(sim, "simulate", {"replications", "trajectory_csv"});
        sc.simulate.replications =
            field_or<int>(sim, "simulate", "replications", 1);
        sc.simulate.trajectory_csv =
            field_or<bool>(sim, "simulate", "trajectory_csv", false);
        if (sc.simulate.replications < 1)
            throw SchemaError("simulate: replications must be >= 1");
    }

    if (doc.contains("solve")) {
        const auto& sol = doc.at("solve");
        reject_unknown(sol, "solve", {"heavy_load"});
        if (sol.contains("heavy_load")) {
            const auto& hl = sol.at("heavy_load");
            reject_unknown(hl, "heavy_load", {"delta", "Delta"});
            sc.heavy_load = HeavyLoadRequest{
                field<double>(hl, "heavy_load", "delta"),
                field<double>(hl, "heavy_load", "Delta")};
        }
    }

    if (doc.contains("optimize")) {
        const auto& opt = doc.at("optimize");
        reject_unknown(opt, "optimize",
                       {"decision", "epsilon", "fixed_C", "fixed_N1",
                        "beta_class", "mode"});
        OptimizationProblem p;
        p.ell = cfg.ell;
        p.arrival = cfg.arrival;
        p.lambda = cfg.lambda;
        p.thinning = cfg.thinning;
        p.mu = cfg.mu;
        p.alpha_class = cfg.costs;
        p.beta_class = field_or<std::vector<double>>(
            opt, "optimize", "beta_class", {});
        std::string decision =
            field<std::string>(opt, "optimize", "decision");
        if (decision == "quota_N1")
            p.decision = Decision::quota_N1;
        else if (decision == "depletion_C")
            p.decision = Decision::depletion_C;
        else
            throw SchemaError("optimize: unknown decision '" + decision + "'");
        p.epsilon = field<double>(opt, "optimize", "epsilon");
        p.fixed_C = field_or<int>(opt, "optimize", "fixed_C", cfg.batch);
        p.fixed_N1 = field_or<long long>(opt, "optimize", "fixed_N1",
                                         cfg.quotas.empty() ? 1
                                                            : cfg.quotas[0]);
        std::string mode =
            field_or<std::string>(opt, "optimize", "mode", "infinite");
        if (mode == "infinite")
            p.mode = JBarMode::infinite_quota;
        else if (mode == "finite")
            p.mode = JBarMode::finite_quota;
        else
            throw SchemaError("optimize: unknown mode '" + mode + "'");
        sc.optimize = p;
    }

    try {
        sc.config.validate();
        if (sc.optimize) sc.optimize->validate();
    } catch (const std::invalid_argument& e) {
        throw SchemaError(e.what());
    }
    return sc;
}

inline Scenario parse_scenario_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("scenario: invalid JSON: ") + e.what());
    }
    return parse_scenario(doc);
}

}  // namespace bwplanner
