#pragma once

#include "octolb/simcluster.hpp"

#include <cmath>
#include <optional>

namespace octolb {

struct PipelineReport {
    std::uint64_t l_max_before = 0;
    std::uint64_t l_max_after = 0;
    double l_avg = 0.0;
    std::uint32_t refined = 0;
    std::uint32_t coarsened = 0;
    std::uint32_t ripple_refined = 0;
    std::uint64_t blocks_moved = 0;
    double bytes_moved = 0.0;
    std::uint64_t msgs = 0; ///< messages recorded during this run
    std::uint64_t mem_bytes_max_rank = 0;
    std::uint64_t balancer_work_max_rank = 0;
    double t_weights = 0.0;
    double t_refine = 0.0;
    double t_balance = 0.0;
    double t_migrate = 0.0;
    double t_lbp = 0.0;
};

namespace detail {

/// Arithmetic weight split for pipelines without an attached scenario:
/// children get an eighth each, the remainder spread over the first ones.
inline void split_weight(WeightMap& w, const BlockId& parent) {
    const std::uint64_t total = w.comp_at(parent);
    w.comp.erase(parent);
    for (std::uint32_t o = 0; o < 8; ++o)
        w.comp[parent.child(o)] = total / 8 + (o < total % 8 ? 1 : 0);
}

inline void rebuild_comm(WeightMap& w, const Forest& f) {
    w.comm.clear();
    for (const BlockId& a : f.leaves())
        for (const NeighborInfo& nb : f.neighbors(a))
            if (nb.interface_area > 0.0 && a < nb.id)
                w.comm[{a, nb.id}] = nb.interface_area;
}

inline std::map<BlockId, std::vector<BlockId>> leaf_adjacency(const Forest& f) {
    std::map<BlockId, std::vector<BlockId>> adj;
    for (const BlockId& a : f.leaves()) {
        auto& v = adj[a];
        for (const NeighborInfo& nb : f.neighbors(a))
            v.push_back(nb.id);
    }
    return adj;
}

} // namespace detail

/// Weight assignment, threshold refine/coarsen with 2:1 enforcement, the
/// chosen balancer, and migration. Weights are recounted from the scenario
/// after restructuring when one is attached; otherwise split arithmetically.
inline PipelineReport run_pipeline(Cluster& cluster, const Balancer& kind,
                                   const RefinementThresholds& thresholds,
                                   const ParticleSet* particles = nullptr,
                                   WeightSource source = WeightSource::ParticleCount,
                                   std::uint64_t weight_scale = 1) {
    thresholds.validate();
    PipelineReport rep;
    const std::uint32_t p = cluster.p();
    const CostModel& m = cluster.cost();
    auto msgs_snapshot = [&cluster] {
        std::uint64_t t = 0;
        for (const RankCounters& c : cluster.counters())
            t += c.messages;
        return t;
    };
    const std::uint64_t msgs_before = msgs_snapshot();

    // stage 1: weights
    WeightMap w = particles ? assign_weights(cluster.forest(), source, *particles)
                            : cluster.weights();
    if (particles && weight_scale != 1)
        w.scale(weight_scale);
    cluster.set_weights(w);
    rep.l_max_before = max_load(cluster.assignment(), w).l_max;
    const double sync = m.c_latency * std::ceil(std::log2(double(std::max(2u, p))));
    rep.t_weights = sync;

    // stage 2: refine / coarsen, 2:1, weight redistribution
    const auto [refine, coarsen] = decide_refinement(cluster.forest(), w, thresholds);
    Forest forest = cluster.forest();
    RankAssignment assignment = cluster.assignment();
    for (const BlockId& id : refine) {
        const std::uint32_t owner = assignment.owner.at(id);
        forest.refine(id);
        assignment.owner.erase(id);
        for (std::uint32_t o = 0; o < 8; ++o)
            assignment.owner[id.child(o)] = owner;
        if (!particles)
            detail::split_weight(w, id);
    }
    for (const BlockId& parent : coarsen) {
        const std::uint32_t owner = assignment.owner.at(parent.child(0));
        forest.coarsen(parent);
        std::uint64_t sum = 0;
        for (std::uint32_t o = 0; o < 8; ++o) {
            assignment.owner.erase(parent.child(o));
            if (!particles) {
                sum += w.comp_at(parent.child(o));
                w.comp.erase(parent.child(o));
            }
        }
        assignment.owner[parent] = owner;
        if (!particles)
            w.comp[parent] = sum;
    }
    const std::vector<BlockId> ripple = forest.enforce_two_to_one();
    for (const BlockId& id : ripple) {
        const std::uint32_t owner = assignment.owner.at(id);
        assignment.owner.erase(id);
        for (std::uint32_t o = 0; o < 8; ++o)
            assignment.owner[id.child(o)] = owner;
        if (!particles)
            detail::split_weight(w, id);
    }
    if (particles) {
        w = assign_weights(forest, source, *particles); // exact recount
        if (weight_scale != 1)
            w.scale(weight_scale);
    } else {
        detail::rebuild_comm(w, forest);
    }
    cluster.replace(std::move(forest), assignment, w);
    if (particles)
        cluster.set_payload(particles_per_leaf(*particles, cluster.forest()));
    rep.refined = static_cast<std::uint32_t>(refine.size());
    rep.coarsened = static_cast<std::uint32_t>(coarsen.size());
    rep.ripple_refined = static_cast<std::uint32_t>(ripple.size());
    const double structural = double(refine.size() + coarsen.size() + ripple.size()) * 8.0;
    rep.t_refine = sync + structural * m.bytes_per_block_record / m.bandwidth();

    // stage 3: the balancer
    BalanceStats stats;
    RankAssignment target;
    switch (kind.kind) {
    case BalancerKind::SfcMorton:
    case BalancerKind::SfcHilbert: {
        const CurveKind curve =
            kind.kind == BalancerKind::SfcMorton ? CurveKind::Morton : CurveKind::Hilbert;
        target = balance_sfc(order_leaves(cluster.forest(), curve), cluster.weights(), p, &stats);
        break;
    }
    case BalancerKind::Diffusive: {
        const auto adj = detail::leaf_adjacency(cluster.forest());
        target = balance_diffusive(cluster.assignment(), cluster.weights(),
                                   cluster.rank_graph(), kind.iterations, &adj, &stats);
        break;
    }
    case BalancerKind::GreedyGlobal:
        target = balance_greedy_global(cluster.weights(), p, &stats);
        break;
    }
    cluster.record_balancer_traffic(kind, stats);
    const auto mem = cluster.account_balancer_memory(kind);
    const auto work = cluster.account_balancer_runtime(kind, stats);
    for (std::uint32_t r = 0; r < p; ++r) {
        rep.mem_bytes_max_rank = std::max(rep.mem_bytes_max_rank, mem[r]);
        rep.balancer_work_max_rank = std::max(rep.balancer_work_max_rank, work[r]);
    }
    if (kind.kind == BalancerKind::Diffusive) {
        rep.t_balance = double(kind.iterations) * 2.0 * m.c_latency +
                        double(rep.balancer_work_max_rank) * m.balancer_op_seconds;
    } else {
        const double allgather_bytes =
            double(cluster.forest().size()) * m.bytes_per_weight_record;
        rep.t_balance = sync + allgather_bytes / m.bandwidth() +
                        double(rep.balancer_work_max_rank) * m.balancer_op_seconds;
    }

    // stage 4: migration
    const MigrationReport mig = cluster.migrate(target);
    rep.blocks_moved = mig.blocks_moved;
    rep.bytes_moved = mig.bytes_moved;
    rep.t_migrate = mig.time;

    const LoadStats after = max_load(cluster.assignment(), cluster.weights());
    rep.l_max_after = after.l_max;
    rep.l_avg = after.l_avg;
    rep.msgs = msgs_snapshot() - msgs_before;
    rep.t_lbp = rep.t_weights + rep.t_refine + rep.t_balance + rep.t_migrate;
    return rep;
}

} // namespace octolb
