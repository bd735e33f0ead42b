#pragma once

#include "octolb/config.hpp"
#include "octolb/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace octolb {

namespace detail {

/// 1:1 mapping in canonical leaf order.
inline RankAssignment one_to_one(const Forest& f) {
    RankAssignment a;
    a.p = static_cast<std::uint32_t>(f.size());
    std::uint32_t r = 0;
    for (const BlockId& id : f.leaves())
        a.owner[id] = r++;
    return a;
}

inline std::uint64_t cluster_messages(const Cluster& c) {
    std::uint64_t t = 0;
    for (const RankCounters& rc : c.counters())
        t += rc.messages;
    return t;
}

inline void snapshot_forest(const std::string& dir, const std::string& name, const Forest& f) {
    if (dir.empty())
        return;
    std::filesystem::create_directories(dir);
    std::ofstream os(std::filesystem::path(dir) / (name + ".forest"), std::ios::binary);
    if (!os)
        throw IoError("snapshot: cannot write into \"" + dir + "\"");
    f.write_leaves(os);
}

inline std::string padded_step(std::uint32_t step) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06u", step);
    return buf;
}

} // namespace detail

/// Baseline window, one pipeline run, measurement window; one row per
/// (p, balancer). Weak scaling grows the domain (and the brick grid) along z.
inline std::vector<ExperimentRecord> run_static_experiment(const ExperimentConfig& cfg) {
    if (cfg.kind != ExperimentConfig::Kind::Static)
        throw ValidationError("scenario.type: static experiment needs a static scenario");
    std::vector<ExperimentRecord> rows;
    const std::uint64_t base_leaves = std::uint64_t(cfg.root_dims[0]) * cfg.root_dims[1] *
                                      cfg.root_dims[2] * (std::uint64_t{1} << (3 * cfg.initial_level));
    for (const std::uint32_t p : cfg.p_sweep) {
        if (p % base_leaves != 0)
            throw ValidationError("p_sweep: p = " + std::to_string(p) +
                                  " is not a multiple of the base leaf count " +
                                  std::to_string(base_leaves) + " (1:1 start required)");
        const auto zf = std::uint32_t(p / base_leaves);
        std::array<std::int32_t, 3> dims = cfg.root_dims;
        dims[2] = std::int32_t(dims[2] * zf);
        StaticScenarioConfig sc = cfg.static_scenario;
        sc.domain.max.z = sc.domain.min.z + sc.domain.extent().z * double(zf);

        const Forest forest(dims, sc.domain, cfg.initial_level, cfg.max_level);
        if (forest.size() != p)
            throw ValidationError("p_sweep: p must equal the initial leaf count");
        const ParticleSet particles = generate_hcp_fill(sc);

        for (const Balancer& balancer : cfg.balancers) {
            WeightMap w = assign_weights(forest, WeightSource::ParticleCount, particles);
            w.scale(cfg.weight_scale);
            Cluster cluster(forest, detail::one_to_one(forest), w, p, cfg.cost_model);
            cluster.set_payload(particles_per_leaf(particles, forest));

            std::vector<double> before(cfg.window);
            for (double& t : before)
                t = cluster.simulate_timestep();
            const RefinementThresholds thresholds =
                cfg.thresholds ? *cfg.thresholds
                               : RefinementThresholds::defaults_for(w.total_comp(), p);
            const PipelineReport rep =
                run_pipeline(cluster, balancer, thresholds, &particles,
                             WeightSource::ParticleCount, cfg.weight_scale);
            std::vector<double> after(cfg.window);
            for (double& t : after)
                t = cluster.simulate_timestep();

            Metrics m;
            m.l_max = rep.l_max_after;
            m.l_avg = rep.l_avg;
            m.t_step_before = mean(before);
            m.t_step_after = mean(after);
            m.eta = performance_gain(m.t_step_before, m.t_step_after);
            m.t_lbp = rep.t_lbp;

            ExperimentRecord row;
            row.scenario = "static";
            row.balancer = balancer.name();
            row.p = p;
            row.leaves = cluster.forest().size();
            row.l_max_before = rep.l_max_before;
            row.l_max_after = m.l_max;
            row.l_avg = m.l_avg;
            row.eta = m.eta;
            row.t_lbp = m.t_lbp;
            row.blocks_moved = rep.blocks_moved;
            row.msgs = detail::cluster_messages(cluster);
            row.mem_bytes_max_rank = rep.mem_bytes_max_rank;
            row.balancer_work_max_rank = rep.balancer_work_max_rank;
            rows.push_back(row);

            detail::snapshot_forest(cfg.snapshot_dir,
                                    "static_" + balancer.name() + "_p" + std::to_string(p),
                                    cluster.forest());
        }
    }
    return rows;
}

/// Time-series run: the mover advances, the pipeline fires every
/// rebalance_interval steps, one row per interval. The unbalanced control
/// never mutates forest or assignment.
inline std::vector<ExperimentRecord> run_hopper_experiment(const ExperimentConfig& cfg) {
    if (cfg.kind != ExperimentConfig::Kind::Hopper)
        throw ValidationError("scenario.type: hopper experiment needs a hopper scenario");
    std::vector<ExperimentRecord> rows;
    const Aabb domain = cfg.hopper.domain();
    for (const std::uint32_t p : cfg.p_sweep) {
        const std::uint64_t bricks = std::uint64_t(cfg.hopper_root_dims[0]) *
                                     cfg.hopper_root_dims[1] * cfg.hopper_root_dims[2];
        if (bricks != p)
            throw ValidationError("p_sweep: hopper needs root_dims to multiply to p for the "
                                  "1:1 start (got " +
                                  std::to_string(bricks) + " bricks for p = " +
                                  std::to_string(p) + ")");

        std::vector<Balancer> runs = cfg.balancers;
        for (std::size_t run = 0; run <= runs.size(); ++run) {
            const bool control = run == runs.size();
            const std::string name = control ? "unbalanced" : runs[run].name();

            HopperState state(cfg.hopper);
            const Forest forest(cfg.hopper_root_dims, domain, 0, cfg.max_level);
            WeightMap w =
                assign_weights(forest, WeightSource::ContactCount, state.particles());
            Cluster cluster(forest, detail::one_to_one(forest), w, p, cfg.cost_model);
            cluster.set_payload(particles_per_leaf(state.particles(), forest));

            const std::uint32_t intervals = cfg.total_steps / cfg.rebalance_interval;
            for (std::uint32_t iv = 0; iv < intervals; ++iv) {
                std::vector<double> window;
                std::vector<double> lmax_series;
                for (std::uint32_t s = 0; s < cfg.rebalance_interval; ++s) {
                    state.step(cfg.hopper.dt);
                    cluster.set_weights(assign_weights(
                        cluster.forest(), WeightSource::ContactCount, state.particles()));
                    window.push_back(cluster.simulate_timestep());
                    lmax_series.push_back(double(
                        max_load(cluster.assignment(), cluster.weights()).l_max));
                }
                const std::uint32_t step_now = (iv + 1) * cfg.rebalance_interval;

                ExperimentRecord row;
                row.scenario = "hopper@" + detail::padded_step(step_now);
                row.balancer = name;
                row.p = p;
                row.l_max_before = std::uint64_t(std::llround(mean(lmax_series)));
                if (control) {
                    row.leaves = cluster.forest().size();
                    row.l_max_after = row.l_max_before;
                    row.l_avg = double(cluster.weights().total_comp()) / double(p);
                    row.eta = 1.0;
                    row.t_lbp = 0.0;
                } else {
                    const RefinementThresholds thresholds =
                        cfg.thresholds
                            ? *cfg.thresholds
                            : RefinementThresholds::defaults_for(
                                  cluster.weights().total_comp(), p);
                    const PipelineReport rep =
                        run_pipeline(cluster, runs[run], thresholds, &state.particles(),
                                     WeightSource::ContactCount);
                    row.leaves = cluster.forest().size();
                    row.l_max_after = rep.l_max_after;
                    row.l_avg = rep.l_avg;
                    row.eta = performance_gain(mean(window), cluster.simulate_timestep());
                    row.t_lbp = rep.t_lbp;
                    row.blocks_moved = rep.blocks_moved;
                    row.mem_bytes_max_rank = rep.mem_bytes_max_rank;
                    row.balancer_work_max_rank = rep.balancer_work_max_rank;
                }
                row.msgs = detail::cluster_messages(cluster);
                rows.push_back(row);
            }
            detail::snapshot_forest(cfg.snapshot_dir, "hopper_" + name + "_p" + std::to_string(p),
                                    cluster.forest());
        }
    }
    return rows;
}

/// Weak-scaling complexity sweep on uniform synthetic forests: fixed leaves
/// per rank, growing p; feeds the memory- and work-versus-p claims.
inline std::vector<ExperimentRecord> run_sweep_experiment(const ExperimentConfig& cfg) {
    if (cfg.kind != ExperimentConfig::Kind::Sweep)
        throw ValidationError("scenario.type: sweep experiment needs a sweep scenario");
    std::vector<ExperimentRecord> rows;
    for (const std::uint32_t p : cfg.p_sweep) {
        const std::uint64_t leaves = std::uint64_t(p) * cfg.leaves_per_rank;
        std::uint32_t level = 0;
        while ((std::uint64_t{1} << (3 * level)) < leaves)
            ++level;
        if ((std::uint64_t{1} << (3 * level)) != leaves)
            throw ValidationError("p_sweep: p * leaves_per_rank must be a power of 8 "
                                  "(uniform cube sweep), got " +
                                  std::to_string(leaves));
        if (level > cfg.max_level)
            throw ValidationError("p_sweep: sweep forest would exceed max_level");

        const Forest forest({1, 1, 1}, {{0, 0, 0}, {1, 1, 1}}, level,
                            std::max(cfg.max_level, level));
        // ranks own octet-aligned chunks of the canonical order; the
        // checkerboard pattern alternates heavy and light rank cells so the
        // diffusive balancer has gradients to work against at every p
        std::uint32_t chunk_shift = 0;
        while ((std::uint64_t{1} << (3 * (chunk_shift + 1))) <= cfg.leaves_per_rank)
            ++chunk_shift;
        if ((std::uint64_t{1} << (3 * chunk_shift)) != cfg.leaves_per_rank)
            chunk_shift = 0;
        WeightMap w;
        RankAssignment a;
        a.p = p;
        std::uint32_t i = 0;
        for (const BlockId& id : forest.leaves()) {
            a.owner[id] = i++ / cfg.leaves_per_rank;
            std::uint64_t weight = cfg.leaf_weight;
            if (cfg.sweep_checkerboard) {
                // 8:1 contrast: the diffusive flow across one edge carries
                // exactly one heavy block per iteration
                const std::uint32_t cx = id.x >> chunk_shift;
                const std::uint32_t cy = id.y >> chunk_shift;
                const std::uint32_t cz = id.z >> chunk_shift;
                weight = ((cx ^ cy ^ cz) & 1u) ? cfg.leaf_weight : 8 * cfg.leaf_weight;
            }
            w.comp[id] = weight;
        }

        for (const Balancer& balancer : cfg.balancers) {
            Cluster cluster(forest, a, w, p, cfg.cost_model);
            // the sweep isolates balancer complexity at fixed leaves per
            // rank: the refinement stage must not restructure anything
            const RefinementThresholds thresholds =
                cfg.thresholds ? *cfg.thresholds
                               : RefinementThresholds{w.total_comp() + 1, 0};
            const PipelineReport rep = run_pipeline(cluster, balancer, thresholds);

            ExperimentRecord row;
            row.scenario = "sweep";
            row.balancer = balancer.name();
            row.p = p;
            row.leaves = cluster.forest().size();
            row.l_max_before = rep.l_max_before;
            row.l_max_after = rep.l_max_after;
            row.l_avg = rep.l_avg;
            row.eta = 1.0;
            row.t_lbp = rep.t_lbp;
            row.blocks_moved = rep.blocks_moved;
            row.msgs = detail::cluster_messages(cluster);
            row.mem_bytes_max_rank = rep.mem_bytes_max_rank;
            row.balancer_work_max_rank = rep.balancer_work_max_rank;
            rows.push_back(row);
        }
    }
    return rows;
}

inline std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.kind) {
    case ExperimentConfig::Kind::Static:
        return run_static_experiment(cfg);
    case ExperimentConfig::Kind::Hopper:
        return run_hopper_experiment(cfg);
    case ExperimentConfig::Kind::Sweep:
        return run_sweep_experiment(cfg);
    }
    throw ValidationError("scenario.type: unknown experiment kind");
}

} // namespace octolb
