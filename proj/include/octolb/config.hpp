#pragma once

#include "octolb/hopper.hpp"
#include "octolb/simcluster.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace octolb {

/// One batch experiment: a scenario, the balancers to compare, the rank
/// sweep, and the cost model.
struct ExperimentConfig {
    enum class Kind { Static, Hopper, Sweep };

    Kind kind = Kind::Static;

    // static scenario
    StaticScenarioConfig static_scenario;
    std::array<std::int32_t, 3> root_dims{4, 4, 1};
    std::uint32_t initial_level = 1;
    std::uint64_t weight_scale = 1;

    // hopper scenario
    HopperConfig hopper;
    std::array<std::int32_t, 3> hopper_root_dims{4, 4, 4};

    // complexity sweep
    std::uint32_t leaves_per_rank = 8;
    std::uint64_t leaf_weight = 1000;
    bool sweep_checkerboard = false; ///< alternate heavy/light ranks

    std::vector<Balancer> balancers;
    std::vector<std::uint32_t> p_sweep;
    CostModel cost_model;
    std::optional<RefinementThresholds> thresholds; ///< absent: derived per run
    std::uint32_t window = 100;
    std::uint32_t rebalance_interval = 100;
    std::uint32_t total_steps = 2000;
    std::uint64_t seed = 1;
    std::uint32_t max_level = 10;
    std::string out = "results.csv";
    std::string plot_out;
    std::string snapshot_dir;
};

namespace detail {

using Json = nlohmann::json;

inline std::size_t line_of_offset(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n')
            ++line;
    return line;
}

inline void reject_unknown(const Json& obj, const std::string& path,
                           std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a)
                ok = true;
        if (!ok)
            throw ValidationError("unknown key \"" + (path.empty() ? key : path + "." + key) +
                                  "\"");
    }
}

template <typename T>
T get_or(const Json& obj, const char* key, T fallback) {
    if (!obj.contains(key))
        return fallback;
    return obj.at(key).get<T>();
}

inline Vec3 get_vec3(const Json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3)
        throw ValidationError(path + ": expected an array of three numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline Aabb get_aabb(const Json& j, const std::string& path) {
    reject_unknown(j, path, {"min", "max"});
    if (!j.contains("min") || !j.contains("max"))
        throw ValidationError(path + ": needs \"min\" and \"max\"");
    Aabb box{get_vec3(j.at("min"), path + ".min"), get_vec3(j.at("max"), path + ".max")};
    if (!box.valid())
        throw ValidationError(path + ": min must be strictly below max on every axis");
    return box;
}

inline std::array<std::int32_t, 3> get_dims(const Json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3)
        throw ValidationError(path + ": expected an array of three integers");
    std::array<std::int32_t, 3> d{j[0].get<std::int32_t>(), j[1].get<std::int32_t>(),
                                  j[2].get<std::int32_t>()};
    if (d[0] < 1 || d[1] < 1 || d[2] < 1)
        throw ValidationError(path + ": entries must be >= 1");
    return d;
}

inline GravityEdge parse_edge(const std::string& name, const std::string& path) {
    if (name == "x_low_y_low")
        return GravityEdge::XLowYLow;
    if (name == "x_high_y_low")
        return GravityEdge::XHighYLow;
    if (name == "x_low_y_high")
        return GravityEdge::XLowYHigh;
    if (name == "x_high_y_high")
        return GravityEdge::XHighYHigh;
    throw ValidationError(path + ": unknown gravity edge \"" + name + "\"");
}

} // namespace detail

/// Parses, defaults and invariant-checks a JSON experiment config.
/// Unknown keys are rejected; errors carry the field path.
inline ExperimentConfig validate_config(const std::string& text) {
    using detail::Json;
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ValidationError("config parse error at line " +
                              std::to_string(detail::line_of_offset(text, e.byte)) + ": " +
                              e.what());
    }

    ExperimentConfig cfg;
    detail::reject_unknown(j, "",
                           {"scenario", "balancers", "diffusive_iterations", "p_sweep",
                            "cost_model", "thresholds", "window", "rebalance_interval",
                            "total_steps", "seed", "max_level", "out", "plot_out",
                            "snapshot_dir"});

    if (!j.contains("scenario"))
        throw ValidationError("scenario: required");
    const Json& sc = j.at("scenario");
    const std::string type = sc.value("type", "");
    if (type == "static") {
        cfg.kind = ExperimentConfig::Kind::Static;
        detail::reject_unknown(sc, "scenario",
                               {"type", "domain", "root_dims", "initial_level", "fill_fraction",
                                "particle_radius", "gravity_edge", "weight_scale"});
        if (sc.contains("domain"))
            cfg.static_scenario.domain = detail::get_aabb(sc.at("domain"), "scenario.domain");
        else
            cfg.static_scenario.domain = {{0, 0, 0}, {4, 4, 1}};
        if (sc.contains("root_dims"))
            cfg.root_dims = detail::get_dims(sc.at("root_dims"), "scenario.root_dims");
        cfg.initial_level = detail::get_or<std::uint32_t>(sc, "initial_level", 1);
        cfg.static_scenario.fill_fraction = detail::get_or<double>(sc, "fill_fraction", 0.125);
        cfg.static_scenario.particle_radius =
            detail::get_or<double>(sc, "particle_radius", 0.02);
        cfg.static_scenario.gravity_edge = detail::parse_edge(
            detail::get_or<std::string>(sc, "gravity_edge", "x_low_y_low"),
            "scenario.gravity_edge");
        cfg.weight_scale = detail::get_or<std::uint64_t>(sc, "weight_scale", 1);
        if (cfg.static_scenario.fill_fraction <= 0.0 || cfg.static_scenario.fill_fraction > 1.0)
            throw ValidationError("scenario.fill_fraction: must lie in (0, 1]");
        if (cfg.static_scenario.particle_radius <= 0.0)
            throw ValidationError("scenario.particle_radius: must be positive");
        if (cfg.weight_scale < 1)
            throw ValidationError("scenario.weight_scale: must be >= 1");
    } else if (type == "hopper") {
        cfg.kind = ExperimentConfig::Kind::Hopper;
        detail::reject_unknown(sc, "scenario",
                               {"type", "tank", "cone_half_angle_deg", "orifice_radius",
                                "lattice_spacing", "particle_radius", "velocity_seed", "dt",
                                "gravity", "drain_time", "root_dims"});
        if (sc.contains("tank"))
            cfg.hopper.tank = detail::get_aabb(sc.at("tank"), "scenario.tank");
        cfg.hopper.cone_half_angle_deg =
            detail::get_or<double>(sc, "cone_half_angle_deg", 45.0);
        cfg.hopper.orifice_radius = detail::get_or<double>(sc, "orifice_radius", 6.0);
        cfg.hopper.lattice_spacing = detail::get_or<double>(sc, "lattice_spacing", 1.0);
        cfg.hopper.particle_radius = detail::get_or<double>(sc, "particle_radius", 0.5);
        cfg.hopper.velocity_seed = detail::get_or<std::uint64_t>(sc, "velocity_seed", 1);
        cfg.hopper.dt = detail::get_or<double>(sc, "dt", 0.01);
        if (sc.contains("gravity"))
            cfg.hopper.gravity = detail::get_vec3(sc.at("gravity"), "scenario.gravity");
        cfg.hopper.drain_time = detail::get_or<double>(sc, "drain_time", 8.0);
        if (sc.contains("root_dims"))
            cfg.hopper_root_dims = detail::get_dims(sc.at("root_dims"), "scenario.root_dims");
        try {
            cfg.hopper.validate();
        } catch (const ValidationError& e) {
            throw ValidationError(std::string("scenario.") + e.what());
        }
    } else if (type == "sweep") {
        cfg.kind = ExperimentConfig::Kind::Sweep;
        detail::reject_unknown(sc, "scenario",
                               {"type", "leaves_per_rank", "leaf_weight", "pattern"});
        cfg.leaves_per_rank = detail::get_or<std::uint32_t>(sc, "leaves_per_rank", 8);
        cfg.leaf_weight = detail::get_or<std::uint64_t>(sc, "leaf_weight", 1000);
        const std::string pattern = detail::get_or<std::string>(sc, "pattern", "uniform");
        if (pattern == "checkerboard")
            cfg.sweep_checkerboard = true;
        else if (pattern != "uniform")
            throw ValidationError("scenario.pattern: expected \"uniform\" or \"checkerboard\"");
        if (cfg.leaves_per_rank < 1)
            throw ValidationError("scenario.leaves_per_rank: must be >= 1");
    } else {
        throw ValidationError("scenario.type: expected \"static\", \"hopper\" or \"sweep\"");
    }

    const std::uint32_t iterations = detail::get_or<std::uint32_t>(j, "diffusive_iterations", 10);
    if (iterations < 1)
        throw ValidationError("diffusive_iterations: must be >= 1");
    std::vector<std::string> names =
        detail::get_or<std::vector<std::string>>(j, "balancers", {"sfc_hilbert"});
    for (const std::string& n : names) {
        try {
            cfg.balancers.push_back(Balancer::parse(n, iterations));
        } catch (const ValidationError&) {
            throw ValidationError("balancers: unknown balancer \"" + n + "\"");
        }
    }
    if (cfg.balancers.empty())
        throw ValidationError("balancers: must not be empty");

    cfg.p_sweep = detail::get_or<std::vector<std::uint32_t>>(j, "p_sweep", {});
    if (cfg.kind == ExperimentConfig::Kind::Sweep && cfg.p_sweep.empty())
        cfg.p_sweep = {8, 64, 512, 4096};
    if (cfg.p_sweep.empty())
        throw ValidationError("p_sweep: must not be empty");
    for (const std::uint32_t p : cfg.p_sweep)
        if (p < 1)
            throw ValidationError("p_sweep: ranks must be >= 1");

    if (j.contains("cost_model")) {
        const Json& cm = j.at("cost_model");
        detail::reject_unknown(cm, "cost_model",
                               {"c_comp", "c_comm", "c_latency", "bytes_per_block_record",
                                "bytes_per_weight_record", "bytes_per_payload_unit",
                                "balancer_op_seconds"});
        cfg.cost_model.c_comp = detail::get_or<double>(cm, "c_comp", cfg.cost_model.c_comp);
        cfg.cost_model.c_comm = detail::get_or<double>(cm, "c_comm", cfg.cost_model.c_comm);
        cfg.cost_model.c_latency =
            detail::get_or<double>(cm, "c_latency", cfg.cost_model.c_latency);
        cfg.cost_model.bytes_per_block_record = detail::get_or<double>(
            cm, "bytes_per_block_record", cfg.cost_model.bytes_per_block_record);
        cfg.cost_model.bytes_per_weight_record = detail::get_or<double>(
            cm, "bytes_per_weight_record", cfg.cost_model.bytes_per_weight_record);
        cfg.cost_model.bytes_per_payload_unit = detail::get_or<double>(
            cm, "bytes_per_payload_unit", cfg.cost_model.bytes_per_payload_unit);
        cfg.cost_model.balancer_op_seconds = detail::get_or<double>(
            cm, "balancer_op_seconds", cfg.cost_model.balancer_op_seconds);
        try {
            cfg.cost_model.validate();
        } catch (const ValidationError&) {
            throw ValidationError("cost_model: rates must be non-negative, latency and record "
                                  "sizes positive");
        }
    }

    if (j.contains("thresholds")) {
        const Json& th = j.at("thresholds");
        detail::reject_unknown(th, "thresholds", {"refine_above", "coarsen_below"});
        RefinementThresholds t;
        t.refine_above = detail::get_or<std::uint64_t>(th, "refine_above", 0);
        t.coarsen_below = detail::get_or<std::uint64_t>(th, "coarsen_below", 0);
        t.validate(); // names both fields on hysteresis violations
        cfg.thresholds = t;
    }

    cfg.window = detail::get_or<std::uint32_t>(j, "window", 100);
    cfg.rebalance_interval = detail::get_or<std::uint32_t>(j, "rebalance_interval", 100);
    cfg.total_steps = detail::get_or<std::uint32_t>(j, "total_steps", 2000);
    cfg.seed = detail::get_or<std::uint64_t>(j, "seed", 1);
    cfg.max_level = detail::get_or<std::uint32_t>(j, "max_level", 10);
    cfg.out = detail::get_or<std::string>(j, "out", "results.csv");
    cfg.plot_out = detail::get_or<std::string>(j, "plot_out", "");
    cfg.snapshot_dir = detail::get_or<std::string>(j, "snapshot_dir", "");

    if (cfg.window < 1)
        throw ValidationError("window: must be >= 1");
    if (cfg.rebalance_interval < 1)
        throw ValidationError("rebalance_interval: must be >= 1");
    if (cfg.max_level > kLevelCap)
        throw ValidationError("max_level: exceeds the level cap");
    if (cfg.initial_level > cfg.max_level)
        throw ValidationError("scenario.initial_level: exceeds max_level");
    if (cfg.kind == ExperimentConfig::Kind::Hopper && cfg.total_steps < cfg.rebalance_interval)
        throw ValidationError("total_steps: must cover at least one rebalance_interval");
    if (j.contains("seed"))
        cfg.hopper.velocity_seed = cfg.seed;
    return cfg;
}

} // namespace octolb
