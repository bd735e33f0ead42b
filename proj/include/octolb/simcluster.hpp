#pragma once

#include "octolb/balance.hpp"
#include "octolb/metrics.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

namespace octolb {

/// Time and byte constants of the simulated machine. Defaults keep the
/// static scenarios compute-dominated. The migration bandwidth is derived:
/// one block record per latency window.
struct CostModel {
    double c_comp = 1e-5;    ///< seconds per work unit
    double c_comm = 1e-7;    ///< seconds per interface-area unit
    double c_latency = 1e-6; ///< seconds per message
    double bytes_per_block_record = 64.0;
    double bytes_per_weight_record = 16.0;
    double bytes_per_payload_unit = 48.0; ///< per particle/contact migrated
    double balancer_op_seconds = 1e-8;    ///< seconds per balancer work unit

    double bandwidth() const { return bytes_per_block_record / c_latency; }

    void validate() const {
        if (c_comp < 0 || c_comm < 0 || c_latency <= 0 || bytes_per_block_record <= 0 ||
            bytes_per_weight_record <= 0 || bytes_per_payload_unit < 0 ||
            balancer_op_seconds < 0)
            throw ValidationError("cost_model: rates must be non-negative, latency and record "
                                  "sizes positive");
    }
};

struct RankCounters {
    std::uint64_t messages = 0;
    double volume_bytes = 0.0;
    double peak_mem_bytes = 0.0;
    std::uint64_t balancer_work = 0;
};

struct MigrationReport {
    std::uint64_t blocks_moved = 0;
    double bytes_moved = 0.0;
    double time = 0.0;
    std::uint64_t sender_receiver_pairs = 0;
};

/// Deterministic stand-in for a message-passing cluster: p logical ranks
/// owning the forest's leaves, a cost model instead of a clock, and
/// counters for messages, bytes, memory and balancer work.
class Cluster {
public:
    Cluster(Forest forest, RankAssignment assignment, WeightMap weights, std::uint32_t p,
            CostModel cost = {})
        : forest_(std::move(forest)), assignment_(std::move(assignment)),
          weights_(std::move(weights)), p_(p), cost_(cost) {
        cost_.validate();
        if (assignment_.p != p_)
            throw ConsistencyError("init_cluster: assignment.p != p");
        validate_coverage(assignment_);
        if (weights_.comp.size() != forest_.size())
            throw ConsistencyError("init_cluster: weights do not cover the forest");
        counters_.assign(p_, RankCounters{});
        rank_graph_ = RankGraph::from_assignment(forest_, assignment_);
    }

    std::uint32_t p() const { return p_; }
    const Forest& forest() const { return forest_; }
    const RankAssignment& assignment() const { return assignment_; }
    const WeightMap& weights() const { return weights_; }
    const CostModel& cost() const { return cost_; }
    const RankGraph& rank_graph() const { return rank_graph_; }
    const std::vector<RankCounters>& counters() const { return counters_; }
    std::uint64_t allgather_records() const { return allgather_records_; }
    const std::set<std::pair<std::uint32_t, std::uint32_t>>& balancer_pairs() const {
        return balancer_pairs_;
    }

    /// Per-leaf payload sizes migrated along with a block (particle counts).
    void set_payload(std::map<BlockId, std::uint64_t> units) { payload_ = std::move(units); }

    /// Swap in a restructured forest with matching assignment and weights.
    void replace(Forest forest, RankAssignment assignment, WeightMap weights) {
        if (assignment.p != p_)
            throw ConsistencyError("replace: assignment.p != p");
        forest_ = std::move(forest);
        validate_coverage(assignment);
        assignment_ = std::move(assignment);
        if (weights.comp.size() != forest_.size())
            throw ConsistencyError("replace: weights do not cover the forest");
        weights_ = std::move(weights);
        topology_dirty_ = true;
    }

    void set_weights(WeightMap w) {
        if (w.comp.size() != forest_.size())
            throw ConsistencyError("set_weights: weights do not cover the forest");
        weights_ = std::move(w);
    }

    /// t_r = c_comp*l_r + c_comm*(boundary area of r) + c_latency*(neighbor
    /// ranks of r); the step time is the slowest rank. One message per
    /// neighbor-rank pair per step.
    double simulate_timestep(const CostModel& m) {
        refresh_topology();
        const LoadStats loads = max_load(assignment_, weights_);
        double worst = 0.0;
        for (std::uint32_t r = 0; r < p_; ++r) {
            const double t = m.c_comp * double(loads.per_rank[r]) +
                             m.c_comm * boundary_area_[r] +
                             m.c_latency * double(neighbor_ranks_[r].size());
            worst = std::max(worst, t);
            counters_[r].messages += neighbor_ranks_[r].size();
        }
        return worst;
    }

    double simulate_timestep() { return simulate_timestep(cost_); }

    /// Moves ownership to the new assignment, charging per-block records
    /// plus any attached payload over the derived bandwidth.
    MigrationReport migrate(const RankAssignment& next) {
        if (next.p != p_)
            throw ConsistencyError("migrate: assignment.p != p");
        validate_coverage(next);
        MigrationReport rep;
        std::set<std::pair<std::uint32_t, std::uint32_t>> pairs;
        for (const auto& [id, to] : next.owner) {
            const std::uint32_t from = assignment_.owner.at(id);
            if (from == to)
                continue;
            ++rep.blocks_moved;
            double bytes = cost_.bytes_per_block_record;
            if (!payload_.empty()) {
                const auto it = payload_.find(id);
                if (it != payload_.end())
                    bytes += double(it->second) * cost_.bytes_per_payload_unit;
            }
            rep.bytes_moved += bytes;
            pairs.insert({from, to});
            counters_[from].messages += 1;
            counters_[to].messages += 1;
            counters_[from].volume_bytes += bytes;
            counters_[to].volume_bytes += bytes;
        }
        rep.sender_receiver_pairs = pairs.size();
        rep.time = cost_.c_latency * double(pairs.size()) + rep.bytes_moved / cost_.bandwidth();
        assignment_ = next;
        topology_dirty_ = true;
        return rep;
    }

    /// Bytes each rank would hold while running the chosen balancer. SFC and
    /// greedy need the allgathered global weight view; diffusive holds its
    /// own leaf records plus one load summary per neighbor rank.
    std::vector<std::uint64_t> account_balancer_memory(const Balancer& kind) {
        std::vector<std::uint64_t> bytes(p_, 0);
        const double rec = cost_.bytes_per_weight_record;
        if (kind.kind == BalancerKind::Diffusive) {
            std::vector<std::uint64_t> own(p_, 0);
            for (const auto& [id, r] : assignment_.owner)
                ++own[r];
            for (std::uint32_t r = 0; r < p_; ++r) {
                const std::uint64_t held = own[r] + rank_graph_.adj[r].size();
                bytes[r] = std::uint64_t(double(held) * rec);
            }
        } else {
            const std::uint64_t global = std::uint64_t(double(forest_.size()) * rec);
            for (std::uint32_t r = 0; r < p_; ++r)
                bytes[r] = global;
        }
        for (std::uint32_t r = 0; r < p_; ++r)
            counters_[r].peak_mem_bytes = std::max(counters_[r].peak_mem_bytes, double(bytes[r]));
        return bytes;
    }

    /// Work units per rank for one balancer run: SFC and greedy replay the
    /// global pass on every rank; diffusive work is local.
    std::vector<std::uint64_t> account_balancer_runtime(const Balancer& kind,
                                                        const BalanceStats& stats) {
        std::vector<std::uint64_t> work(p_, 0);
        if (kind.kind == BalancerKind::Diffusive) {
            for (std::uint32_t r = 0; r < p_ && r < stats.per_rank_ops.size(); ++r)
                work[r] = stats.per_rank_ops[r];
        } else {
            for (std::uint32_t r = 0; r < p_; ++r)
                work[r] = stats.global_ops;
        }
        for (std::uint32_t r = 0; r < p_; ++r)
            counters_[r].balancer_work += work[r];
        return work;
    }

    /// The allgather behind SFC/greedy balancing: every rank receives every
    /// other rank's records. Diffusive traffic is recorded pairwise instead.
    void record_balancer_traffic(const Balancer& kind, const BalanceStats& stats) {
        if (kind.kind == BalancerKind::Diffusive) {
            for (const auto& pr : stats.message_pairs) {
                balancer_pairs_.insert(pr);
                counters_[pr.first].messages += 1;
                counters_[pr.second].messages += 1;
                counters_[pr.first].volume_bytes += cost_.bytes_per_weight_record;
                counters_[pr.second].volume_bytes += cost_.bytes_per_weight_record;
            }
        } else {
            allgather_records_ += std::uint64_t(p_) * (p_ - 1);
            const double bytes = double(forest_.size()) * cost_.bytes_per_weight_record;
            for (std::uint32_t r = 0; r < p_; ++r) {
                counters_[r].messages += p_ - 1;
                counters_[r].volume_bytes += bytes;
            }
        }
    }

private:
    void validate_coverage(const RankAssignment& a) const {
        if (a.owner.size() != forest_.size())
            throw ConsistencyError("assignment does not cover the forest leaves");
        for (const auto& [id, r] : a.owner) {
            if (!forest_.is_leaf(id))
                throw ConsistencyError("assignment names a non-leaf block " + id.str());
            if (r >= p_)
                throw ConsistencyError("assignment rank out of range for " + id.str());
        }
    }

    void refresh_topology() {
        if (!topology_dirty_ && !boundary_area_.empty())
            return;
        boundary_area_.assign(p_, 0.0);
        neighbor_ranks_.assign(p_, {});
        for (const BlockId& id : forest_.leaves()) {
            const std::uint32_t r = assignment_.owner.at(id);
            for (const NeighborInfo& nb : forest_.neighbors(id)) {
                const std::uint32_t s = assignment_.owner.at(nb.id);
                if (s == r)
                    continue;
                boundary_area_[r] += nb.interface_area;
                neighbor_ranks_[r].insert(s);
            }
        }
        topology_dirty_ = false;
    }

    Forest forest_;
    RankAssignment assignment_;
    WeightMap weights_;
    std::uint32_t p_;
    CostModel cost_;
    RankGraph rank_graph_;
    std::vector<RankCounters> counters_;
    std::map<BlockId, std::uint64_t> payload_;
    std::uint64_t allgather_records_ = 0;
    std::set<std::pair<std::uint32_t, std::uint32_t>> balancer_pairs_;

    bool topology_dirty_ = true;
    std::vector<double> boundary_area_;
    std::vector<std::set<std::uint32_t>> neighbor_ranks_;
};

inline Cluster init_cluster(Forest forest, RankAssignment assignment, WeightMap weights,
                            std::uint32_t p, CostModel cost = {}) {
    return Cluster(std::move(forest), std::move(assignment), std::move(weights), p, cost);
}

} // namespace octolb
